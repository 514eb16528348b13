//! Numerical integration of the Reeb flow and of the ambient flows that
//! realize the tube construction.
//!
//! The σ-direction flow integrates dq/ds = J·ξ̃(q) from an embedded point;
//! holomorphy of the joint (t, σ) parametrization is measured by comparing
//! ∂Γ/∂σ against J·∂Γ/∂t, with the flow-map partials taken by central
//! differences on re-integrated trajectories.

use thiserror::Error;

use crate::contact::{ContactError, ManifoldSpec};
use crate::linalg::norm;
use crate::scalar::EvalError;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("trajectory left the chart box at time {exit_time}")]
    LeftChartBox { exit_time: f64 },
    #[error("integrator exceeded {0} steps")]
    MaxStepsExceeded(usize),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Integration method and error control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4Fixed { step: f64 },
    /// Runge-Kutta-Fehlberg 4(5) with adaptive steps.
    Rkf45 { rel_tol: f64, abs_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rkf45 {
                rel_tol: 1e-10,
                abs_tol: 1e-12,
            },
            max_steps: 100_000,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed { step },
            max_steps: 100_000,
        }
    }

    pub fn rkf45(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig {
            method: Method::Rkf45 { rel_tol, abs_tol },
            max_steps: 100_000,
        }
    }
}

/// Accepted integration states, including the endpoints.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Trajectory {
    pub fn end(&self) -> &[f64] {
        self.points
            .last()
            .expect("trajectory has at least the start")
    }
}

type Rhs<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>, FlowError> + 'a;

// Fehlberg 4(5) tableau.
const RKF_C: [f64; 6] = [0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5];
const RKF_A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [
        -8.0 / 27.0,
        2.0,
        -3544.0 / 2565.0,
        1859.0 / 4104.0,
        -11.0 / 40.0,
    ],
];
const RKF_B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];
const RKF_B4: [f64; 6] = [
    25.0 / 216.0,
    0.0,
    1408.0 / 2565.0,
    2197.0 / 4104.0,
    -0.2,
    0.0,
];

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn rk4_step(f: &Rhs, y: &[f64], h: f64) -> Result<Vec<f64>, FlowError> {
    let k1 = f(y)?;
    let mut y2 = y.to_vec();
    axpy(&mut y2, 0.5 * h, &k1);
    let k2 = f(&y2)?;
    let mut y3 = y.to_vec();
    axpy(&mut y3, 0.5 * h, &k2);
    let k3 = f(&y3)?;
    let mut y4 = y.to_vec();
    axpy(&mut y4, h, &k3);
    let k4 = f(&y4)?;
    let mut out = y.to_vec();
    axpy(&mut out, h / 6.0, &k1);
    axpy(&mut out, h / 3.0, &k2);
    axpy(&mut out, h / 3.0, &k3);
    axpy(&mut out, h / 6.0, &k4);
    Ok(out)
}

fn rkf45_step(f: &Rhs, y: &[f64], h: f64) -> Result<(Vec<f64>, f64), FlowError> {
    let dim = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(6);
    for stage in 0..6 {
        let mut arg = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            axpy(&mut arg, h * RKF_A[stage][j], kj);
        }
        let _ = RKF_C; // stage abscissae unused for autonomous systems
        k.push(f(&arg)?);
    }
    let mut y5 = y.to_vec();
    let mut y4 = y.to_vec();
    for (j, kj) in k.iter().enumerate() {
        axpy(&mut y5, h * RKF_B5[j], kj);
        axpy(&mut y4, h * RKF_B4[j], kj);
    }
    let mut err = 0.0_f64;
    for i in 0..dim {
        err = err.max((y5[i] - y4[i]).abs());
    }
    Ok((y5, err))
}

/// Integrate `rhs` from `y0` over signed time `t_final`, optionally guarding
/// against leaving `box_`.
pub fn integrate(
    rhs: &Rhs,
    y0: &[f64],
    t_final: f64,
    cfg: &IntegratorConfig,
    box_: Option<&[[f64; 2]]>,
) -> Result<Trajectory, FlowError> {
    let mut traj = Trajectory {
        times: vec![0.0],
        points: vec![y0.to_vec()],
        steps_accepted: 0,
        steps_rejected: 0,
    };
    if t_final == 0.0 {
        return Ok(traj);
    }
    let dir = t_final.signum();
    let total = t_final.abs();
    let inside = |p: &[f64]| -> bool {
        box_.is_none_or(|b| {
            p.iter()
                .zip(b)
                .all(|(x, [lo, hi])| *x >= lo - 1e-9 && *x <= hi + 1e-9)
        })
    };
    if !inside(y0) {
        return Err(FlowError::LeftChartBox { exit_time: 0.0 });
    }
    let mut t = 0.0_f64;
    let mut y = y0.to_vec();
    match cfg.method {
        Method::Rk4Fixed { step } => {
            let h0 = step.abs().max(1e-12);
            while t < total - 1e-15 {
                if traj.steps_accepted >= cfg.max_steps {
                    return Err(FlowError::MaxStepsExceeded(cfg.max_steps));
                }
                let h = h0.min(total - t);
                y = rk4_step(rhs, &y, dir * h)?;
                t += h;
                if !inside(&y) {
                    return Err(FlowError::LeftChartBox { exit_time: dir * t });
                }
                traj.times.push(dir * t);
                traj.points.push(y.clone());
                traj.steps_accepted += 1;
            }
        }
        Method::Rkf45 { rel_tol, abs_tol } => {
            let mut h = (total / 16.0).clamp(1e-8, 0.1);
            while t < total - 1e-15 {
                if traj.steps_accepted + traj.steps_rejected >= cfg.max_steps {
                    return Err(FlowError::MaxStepsExceeded(cfg.max_steps));
                }
                h = h.min(total - t);
                let (candidate, err) = rkf45_step(rhs, &y, dir * h)?;
                let scale = abs_tol + rel_tol * norm(&y).max(norm(&candidate));
                if err <= scale || h <= 1e-13 {
                    t += h;
                    y = candidate;
                    if !inside(&y) {
                        return Err(FlowError::LeftChartBox { exit_time: dir * t });
                    }
                    traj.times.push(dir * t);
                    traj.points.push(y.clone());
                    traj.steps_accepted += 1;
                } else {
                    traj.steps_rejected += 1;
                }
                let ratio = if err > 0.0 { scale / err } else { 4.0 };
                h = (0.9 * h * ratio.powf(0.2))
                    .clamp(0.2 * h, 5.0 * h)
                    .max(1e-13);
            }
        }
    }
    Ok(traj)
}

/// Integrate a chart vector field, guarded by the chart box.
pub fn integrate_vector_field(
    spec: &ManifoldSpec,
    field: &crate::exterior::VectorField,
    p0: &[f64],
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, FlowError> {
    let rhs = |x: &[f64]| Ok(field.at::<f64>(x)?);
    integrate(&rhs, p0, t_final, cfg, Some(spec.chart_box()))
}

/// Reeb flow g_t(p) in chart coordinates.
pub fn reeb_flow(
    spec: &ManifoldSpec,
    p: &[f64],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, FlowError> {
    let rhs = |x: &[f64]| Ok(spec.reeb_field(x)?);
    Ok(integrate(&rhs, p, t, cfg, Some(spec.chart_box()))?
        .end()
        .to_vec())
}

/// Ambient flow of ξ̃ itself (real time direction).
pub fn extension_flow(
    spec: &ManifoldSpec,
    q0: &[f64],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, FlowError> {
    let rhs = |q: &[f64]| Ok(spec.reeb_extension_at(q)?);
    Ok(integrate(&rhs, q0, t, cfg, None)?.end().to_vec())
}

/// Ambient flow of J·ξ̃: the imaginary-time direction that builds the tube.
pub fn sigma_flow(
    spec: &ManifoldSpec,
    q0: &[f64],
    sigma: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, FlowError> {
    let j = spec.ambient_j();
    let rhs = |q: &[f64]| {
        let xi = spec.reeb_extension_at(q)?;
        let mut out = vec![0.0; q.len()];
        for (i, o) in out.iter_mut().enumerate() {
            for (k, x) in xi.iter().enumerate() {
                *o += j[(i, k)] * x;
            }
        }
        Ok(out)
    };
    Ok(integrate(&rhs, q0, sigma, cfg, None)?.end().to_vec())
}

/// Ambient image Γ(t, σ) of the joint flow from p: embed, flow by the Reeb
/// field for time t, then by J·ξ̃ for σ.
pub fn joint_flow_point(
    spec: &ManifoldSpec,
    p: &[f64],
    t: f64,
    sigma: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, FlowError> {
    let moved = reeb_flow(spec, p, t, cfg)?;
    let q = spec.embed(&moved)?;
    sigma_flow(spec, &q, sigma, cfg)
}

/// Finite-difference step for flow-map partials.
pub const FLOW_FD_STEP: f64 = 1e-5;

/// ‖∂Γ/∂σ − J·∂Γ/∂t‖ at (t, σ), partials by central differences with
/// re-integrated trajectories.
pub fn holomorphy_residual(
    spec: &ManifoldSpec,
    p: &[f64],
    t: f64,
    sigma: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, FlowError> {
    let h = FLOW_FD_STEP;
    let gp = joint_flow_point(spec, p, t + h, sigma, cfg)?;
    let gm = joint_flow_point(spec, p, t - h, sigma, cfg)?;
    let sp = joint_flow_point(spec, p, t, sigma + h, cfg)?;
    let sm = joint_flow_point(spec, p, t, sigma - h, cfg)?;
    let j = spec.ambient_j();
    let dim = gp.len();
    let mut residual = vec![0.0; dim];
    for i in 0..dim {
        let dsigma = (sp[i] - sm[i]) / (2.0 * h);
        let mut jdt = 0.0;
        for k in 0..dim {
            jdt += j[(i, k)] * (gp[k] - gm[k]) / (2.0 * h);
        }
        residual[i] = dsigma - jdt;
    }
    Ok(norm(&residual))
}

/// One leaf of the canonical foliation: the (t, σ) rectangle through `base`.
#[derive(Debug, Clone)]
pub struct FoliationChart {
    pub base: Vec<f64>,
    pub t_range: [f64; 2],
    pub sigma_range: [f64; 2],
}

impl FoliationChart {
    pub fn new(base: Vec<f64>, t_range: [f64; 2], sigma_range: [f64; 2]) -> Self {
        FoliationChart {
            base,
            t_range,
            sigma_range,
        }
    }

    pub fn contains(&self, t: f64, sigma: f64) -> bool {
        t >= self.t_range[0]
            && t <= self.t_range[1]
            && sigma >= self.sigma_range[0]
            && sigma <= self.sigma_range[1]
    }

    /// Chart point and fiber value (g_t(base), σ).
    pub fn symp_point(
        &self,
        spec: &ManifoldSpec,
        t: f64,
        sigma: f64,
        cfg: &IntegratorConfig,
    ) -> Result<(Vec<f64>, f64), FlowError> {
        Ok((reeb_flow(spec, &self.base, t, cfg)?, sigma))
    }

    /// Ambient image of the same parameter point.
    pub fn ambient_point(
        &self,
        spec: &ManifoldSpec,
        t: f64,
        sigma: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Vec<f64>, FlowError> {
        joint_flow_point(spec, &self.base, t, sigma, cfg)
    }
}

/// Max holomorphy residual over a uniform (t, σ) grid from several base
/// points drawn from the half-size chart box (so trajectories stay inside).
pub fn holomorphy_grid_residual(
    spec: &ManifoldSpec,
    base_points: usize,
    t_max: f64,
    sigma_max: f64,
    nt: usize,
    nsigma: usize,
    cfg: &IntegratorConfig,
) -> Result<(f64, Vec<f64>), FlowError> {
    let sampler =
        crate::sample::BoxSampler::new(crate::sample::shrink_box(spec.chart_box(), 0.5), 0);
    let mut worst = 0.0_f64;
    let mut worst_at = vec![];
    for b in 0..base_points {
        let p = if b == 0 {
            spec.chart_box()
                .iter()
                .map(|[lo, hi]| 0.5 * (lo + hi))
                .collect()
        } else {
            sampler.point(b - 1)
        };
        for it in 0..nt {
            let t = -t_max + 2.0 * t_max * (it as f64 + 0.5) / nt as f64;
            for is in 0..nsigma {
                let s = -sigma_max + 2.0 * sigma_max * (is as f64 + 0.5) / nsigma as f64;
                let r = holomorphy_residual(spec, &p, t, s, cfg)?;
                if r > worst {
                    worst = r;
                    worst_at = p.iter().copied().chain([t, s]).collect();
                }
            }
        }
    }
    Ok((worst, worst_at))
}
