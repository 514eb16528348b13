//! Pointwise certification residuals over tube models.

use super::*;
use crate::exterior::constant_field;

/// ‖ω‖ below this counts as degenerate for the Monge-Ampère normalization.
pub const MA_DEGENERATE_NORM: f64 = 1e-12;

/// One named check outcome; `pass` ⇔ `max_residual < tolerance`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckReport {
    pub fn from_residual(
        name: &str,
        samples: usize,
        max_residual: f64,
        tolerance: f64,
        worst_point: Option<Vec<f64>>,
    ) -> Self {
        CheckReport {
            name: name.into(),
            samples,
            max_residual,
            tolerance,
            pass: max_residual < tolerance,
            worst_point,
            error: None,
        }
    }

    pub fn from_error(name: &str, samples: usize, tolerance: f64, error: String) -> Self {
        CheckReport {
            name: name.into(),
            samples,
            max_residual: f64::INFINITY,
            tolerance,
            pass: false,
            worst_point: None,
            error: Some(error),
        }
    }
}

/// Run a pointwise residual over sample points, tracking the worst offender.
/// Non-finite residuals fail the check; they never hide behind a max.
pub fn run_pointwise_check(
    name: &str,
    tolerance: f64,
    points: &[Vec<f64>],
    residual: impl Fn(&[f64]) -> Result<f64, TubeError>,
) -> CheckReport {
    let mut worst = 0.0_f64;
    let mut worst_at = None;
    for p in points {
        match residual(p) {
            Ok(r) if !r.is_finite() => {
                return CheckReport::from_error(
                    name,
                    points.len(),
                    tolerance,
                    format!("non-finite residual at {p:?}"),
                )
            }
            Ok(r) => {
                if r > worst {
                    worst = r;
                    worst_at = Some(p.clone());
                }
            }
            Err(e) => return CheckReport::from_error(name, points.len(), tolerance, e.to_string()),
        }
    }
    CheckReport::from_residual(name, points.len(), worst, tolerance, worst_at)
}

/// ‖J(α)² + I‖ (max entry).
pub fn j_squared_residual(tube: &TubeModel, alpha: &[f64]) -> Result<f64, TubeError> {
    let j = tube.j_matrix(alpha)?;
    let dim = tube.dim();
    let r = &j * &j + DMatrix::<f64>::identity(dim, dim);
    Ok(r.amax())
}

/// ‖J(α)·ξ(α) − X(α)‖: the complex structure must rotate the lifted Reeb
/// field onto the fiber translation.
pub fn reeb_rotation_residual(tube: &TubeModel, alpha: &[f64]) -> Result<f64, TubeError> {
    let j = tube.j_matrix(alpha)?;
    let xi = tube.xi_theta(alpha)?;
    let x = tube.x_theta();
    let jxi = &j * DMatrix::from_column_slice(xi.len(), 1, &xi);
    let diff: Vec<f64> = (0..x.len()).map(|i| jxi[(i, 0)] - x[i]).collect();
    Ok(norm(&diff))
}

/// σ-component of J·ξ at a zero-section point: transversality of J ξ₀ to M.
pub fn transversality_component(tube: &TubeModel, p: &[f64]) -> Result<f64, TubeError> {
    let mut alpha = p.to_vec();
    alpha.push(0.0);
    let j = tube.j_matrix(&alpha)?;
    let xi = tube.xi_theta(&alpha)?;
    let jxi = &j * DMatrix::from_column_slice(xi.len(), 1, &xi);
    Ok(jxi[(tube.dim() - 1, 0)])
}

/// ‖ι_ξ dd^cE‖ at α: the Lie derivative of d^cE along ξ must vanish.
pub fn lie_derivative_residual(tube: &Arc<TubeModel>, alpha: &[f64]) -> Result<f64, TubeError> {
    if !tube.contains(alpha) {
        return Err(TubeError::OutsideDomain(alpha.to_vec()));
    }
    let omega = ddc(tube.energy_field(), tube, alpha)?;
    let xi = tube.xi_theta(alpha)?;
    let contracted = interior_product(&xi, &omega);
    Ok(contracted.norm())
}

/// Normalized Monge-Ampère residual of a potential at α.
#[derive(Debug, Clone, Copy)]
pub struct MaResidual {
    pub residual: f64,
    /// ‖dd^c f‖ was below [`MA_DEGENERATE_NORM`]; residual reported as 0.
    pub degenerate: bool,
}

/// |top coefficient of (dd^c f)^{n+1}| / (‖dd^c f‖^{n+1} + ε).
pub fn ma_residual_of(
    f: Arc<dyn ScalarField>,
    tube: &Arc<TubeModel>,
    alpha: &[f64],
) -> Result<MaResidual, TubeError> {
    if !tube.contains(alpha) {
        return Err(TubeError::OutsideDomain(alpha.to_vec()));
    }
    let omega = ddc(f, tube, alpha)?;
    let n = tube.base().cr_dim();
    let scale = omega.norm();
    if scale < MA_DEGENERATE_NORM {
        return Ok(MaResidual {
            residual: 0.0,
            degenerate: true,
        });
    }
    let top = wedge_power(&omega, n + 1);
    let residual = top.coeffs()[0].abs() / (scale.powi(n as i32 + 1) + 1e-30);
    Ok(MaResidual {
        residual,
        degenerate: false,
    })
}

/// Monge-Ampère residual of the energy.
pub fn ma_residual(tube: &Arc<TubeModel>, alpha: &[f64]) -> Result<MaResidual, TubeError> {
    ma_residual_of(tube.energy_field(), tube, alpha)
}

/// Top coefficient of dE ∧ d^cE ∧ (dd^cE)^n at α.
pub fn nondegeneracy_value(tube: &Arc<TubeModel>, alpha: &[f64]) -> Result<f64, TubeError> {
    if !tube.contains(alpha) {
        return Err(TubeError::OutsideDomain(alpha.to_vec()));
    }
    let e = tube.energy_field();
    let de = {
        let (_, grad) = crate::scalar::field_gradient(e.as_ref(), alpha)?;
        AltForm::covector(grad)
    };
    let dce = dc(e.as_ref(), tube, alpha)?;
    let omega = ddc(e, tube, alpha)?;
    let n = tube.base().cr_dim();
    let mut acc = wedge(&de, &dce);
    if n > 0 {
        acc = wedge(&acc, &wedge_power(&omega, n));
    }
    Ok(acc.coeffs()[0])
}

/// Closed-form lower bound for |dE ∧ d^cE ∧ (dd^cE)^n| on the builtin
/// examples: constant 2ⁿ·n! for the Heisenberg model; for the sphere chart
/// the density is 2ⁿ·n!·(2/(1+|v|²))^{2n+1}, minimized at the box corners.
pub fn nondegeneracy_floor(spec: &ManifoldSpec) -> Option<f64> {
    let n = spec.cr_dim();
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let base = 2f64.powi(n as i32) * factorial;
    match spec.name() {
        "heisenberg" | "heisenberg-corrupt" => Some(base),
        "sphere" => {
            let qmax: f64 = spec
                .chart_box()
                .iter()
                .map(|[lo, hi]| lo.abs().max(hi.abs()).powi(2))
                .sum();
            Some(base * (2.0 / (1.0 + qmax)).powi(2 * n as i32 + 1))
        }
        _ => None,
    }
}

/// max over (Levi basis ∪ {ξ₀}) of |d^cE(v) + θ(v)| at the zero section.
pub fn boundary_trace_residual(tube: &Arc<TubeModel>, p: &[f64]) -> Result<f64, TubeError> {
    let base = tube.base();
    if !base.contains(p) {
        return Err(TubeError::OutsideDomain(p.to_vec()));
    }
    let mut alpha = p.to_vec();
    alpha.push(0.0);
    let dce = dc(tube.energy_field().as_ref(), tube, &alpha)?;
    let theta = base.theta_at(p)?;
    let mut vectors = base.levi_distribution(p)?;
    vectors.push(base.reeb_field(p)?);
    let mut worst = 0.0_f64;
    for v in vectors {
        let mut lifted = v.clone();
        lifted.push(0.0);
        let dce_v: f64 = dce.coeffs().iter().zip(&lifted).map(|(c, x)| c * x).sum();
        let theta_v: f64 = theta.iter().zip(&v).map(|(c, x)| c * x).sum();
        worst = worst.max((dce_v + theta_v).abs());
    }
    Ok(worst)
}

/// Restriction of J to the Levi distribution at the zero section must be the
/// ambient CR structure and must preserve the distribution.
pub fn check_cr_restriction(tube: &TubeModel, p: &[f64]) -> Result<f64, TubeError> {
    let base = tube.base();
    let m = base.dim();
    let mut alpha = p.to_vec();
    alpha.push(0.0);
    let j_tube = tube.j_matrix(&alpha)?;
    let dj = base.embedding_jacobian::<f64>(p)?.to_f64();
    let theta = base.theta_at(p)?;
    let mut worst = 0.0_f64;
    for v in base.levi_distribution(p)? {
        let mut lifted = v.clone();
        lifted.push(0.0);
        let jv = &j_tube * DMatrix::from_column_slice(m + 1, 1, &lifted);
        // the image must stay inside TM (no fiber component) and inside ker θ
        worst = worst.max(jv[(m, 0)].abs());
        let chart: Vec<f64> = (0..m).map(|i| jv[(i, 0)]).collect();
        let theta_comp: f64 = theta.iter().zip(&chart).map(|(c, x)| c * x).sum();
        worst = worst.max(theta_comp.abs());
        // the given CR structure: w with Dj·w = J_amb·Dj·v
        let rhs = base.ambient_j() * &dj * DMatrix::from_column_slice(m, 1, &v);
        let svd = dj.clone().svd(true, true);
        let w = svd
            .solve(&rhs, 1e-13)
            .map_err(|e| TubeError::UnknownExample(e.to_string()))?;
        let tangency = (&dj * &w - &rhs).amax();
        worst = worst.max(tangency);
        let mismatch: f64 = (0..m)
            .map(|i| (chart[i] - w[(i, 0)]).abs())
            .fold(0.0, f64::max);
        worst = worst.max(mismatch);
    }
    Ok(worst)
}

fn nijenhuis_core(
    cols: &[VectorField],
    jmat: &DMatrix<f64>,
    alpha: &[f64],
) -> Result<f64, TubeError> {
    let dim = alpha.len();
    let basis: Vec<VectorField> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            constant_field(e)
        })
        .collect();
    let mut worst = 0.0_f64;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let b1 = lie_bracket(&cols[i], &cols[j], alpha)?;
            let b2 = lie_bracket(&cols[i], &basis[j], alpha)?;
            let b3 = lie_bracket(&basis[i], &cols[j], alpha)?;
            let mut n_vec = vec![0.0; dim];
            for (k, nk) in n_vec.iter_mut().enumerate() {
                let mut jb = 0.0;
                for l in 0..dim {
                    jb += jmat[(k, l)] * (b2[l] + b3[l]);
                }
                // [e_i, e_j] = 0 for coordinate fields
                *nk = b1[k] - jb;
            }
            worst = worst.max(norm(&n_vec));
        }
    }
    Ok(worst)
}

/// Max over coordinate pairs of ‖N(e_i, e_j)‖ with
/// N(X,Y) = [JX, JY] − J[JX, Y] − J[X, JY] − [X, Y].
pub fn nijenhuis_residual(tube: &Arc<TubeModel>, alpha: &[f64]) -> Result<f64, TubeError> {
    let dim = tube.dim();
    let cols: Vec<VectorField> = (0..dim).map(|c| j_column_field(tube.clone(), c)).collect();
    let jmat = tube.j_matrix(alpha)?;
    nijenhuis_core(&cols, &jmat, alpha)
}

/// Non-integrable control: conjugate J by a σ-dependent rotation in the
/// coordinate plane (1, 2). J² = −I survives; integrability does not.
pub fn nijenhuis_residual_patched(
    tube: &Arc<TubeModel>,
    alpha: &[f64],
    angle_rate: f64,
) -> Result<f64, TubeError> {
    let dim = tube.dim();
    let cols: Vec<VectorField> = (0..dim)
        .map(|c| {
            let comps: Vec<Arc<dyn ScalarField>> = (0..dim)
                .map(|r| {
                    Arc::new(PatchedJEntry {
                        tube: tube.clone(),
                        row: r,
                        col: c,
                        angle_rate,
                    }) as Arc<dyn ScalarField>
                })
                .collect();
            VectorField::new(dim, comps)
        })
        .collect();
    let jmat = patched_j_matrix(tube, alpha, angle_rate)?;
    nijenhuis_core(&cols, &jmat, alpha)
}

fn patched_j_matrix(
    tube: &TubeModel,
    alpha: &[f64],
    angle_rate: f64,
) -> Result<DMatrix<f64>, TubeError> {
    let j = tube.j_matrix_at::<f64>(alpha)?;
    Ok(apply_patch(&j, alpha, angle_rate).to_f64())
}

fn apply_patch<S: Scalar>(j: &GMat<S>, alpha: &[S], angle_rate: f64) -> GMat<S> {
    let dim = j.rows;
    let angle = alpha[dim - 1].clone() * S::from_f64(angle_rate);
    let (c, s) = (angle.cos(), angle.sin());
    let mut rot: GMat<S> = GMat::identity(dim);
    let mut rot_inv: GMat<S> = GMat::identity(dim);
    let (a, b) = (1, 2);
    *rot.at_mut(a, a) = c.clone();
    *rot.at_mut(a, b) = -s.clone();
    *rot.at_mut(b, a) = s.clone();
    *rot.at_mut(b, b) = c.clone();
    *rot_inv.at_mut(a, a) = c.clone();
    *rot_inv.at_mut(a, b) = s.clone();
    *rot_inv.at_mut(b, a) = -s;
    *rot_inv.at_mut(b, b) = c;
    rot.matmul(j).matmul(&rot_inv)
}

struct PatchedJEntry {
    tube: Arc<TubeModel>,
    row: usize,
    col: usize,
    angle_rate: f64,
}

impl PatchedJEntry {
    fn eval_at<S>(&self, x: &[S]) -> EvalResult<S>
    where
        S: FieldScalar,
        Dual<S>: FieldScalar,
    {
        let j = self.tube.j_matrix_at(x).map_err(tube_to_eval)?;
        let patched = apply_patch(&j, x, self.angle_rate);
        Ok(patched.at(self.row, self.col).clone())
    }
}

impl ScalarField for PatchedJEntry {
    fn eval0(&self, x: &[f64]) -> EvalResult<f64> {
        self.eval_at(x)
    }
    fn eval1(&self, x: &[D1]) -> EvalResult<D1> {
        self.eval_at(x)
    }
    fn eval2(&self, x: &[D2]) -> EvalResult<D2> {
        self.eval_at(x)
    }
    fn eval3(&self, _x: &[D3]) -> EvalResult<D3> {
        Err(EvalError::DepthExceeded)
    }
}

/// Deviation of two tube models over their common domain.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TubeComparison {
    pub samples: usize,
    pub gamma_deviation: f64,
    pub j_deviation: f64,
    pub worst_gamma_at: Option<Vec<f64>>,
    pub worst_j_at: Option<Vec<f64>>,
}

impl TubeComparison {
    pub fn max_deviation(&self) -> f64 {
        self.gamma_deviation.max(self.j_deviation)
    }
}

/// Compare γ maps and J fields of two tubes over Halton samples of the
/// intersection of their domains.
pub fn compare_tubes(
    t1: &TubeModel,
    t2: &TubeModel,
    samples: usize,
    seed_offset: u64,
) -> Result<TubeComparison, TubeError> {
    let d1 = t1.domain();
    let d2 = t2.domain();
    if d1.len() != d2.len() {
        return Err(TubeError::DisjointDomains);
    }
    let common: Vec<[f64; 2]> = d1
        .iter()
        .zip(&d2)
        .map(|(a, b)| [a[0].max(b[0]), a[1].min(b[1])])
        .collect();
    if common.iter().any(|[lo, hi]| lo >= hi) {
        return Err(TubeError::DisjointDomains);
    }
    let sampler = BoxSampler::new(common, seed_offset);
    let mut out = TubeComparison {
        samples,
        gamma_deviation: 0.0,
        j_deviation: 0.0,
        worst_gamma_at: None,
        worst_j_at: None,
    };
    for i in 0..samples {
        let alpha = sampler.point(i);
        let g1 = t1.gamma(&alpha)?;
        let g2 = t2.gamma(&alpha)?;
        let gdev = g1
            .iter()
            .zip(&g2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gdev > out.gamma_deviation {
            out.gamma_deviation = gdev;
            out.worst_gamma_at = Some(alpha.clone());
        }
        let j1 = t1.j_matrix(&alpha)?;
        let j2 = t2.j_matrix(&alpha)?;
        let jdev = (&j1 - &j2).amax();
        if jdev > out.j_deviation {
            out.j_deviation = jdev;
            out.worst_j_at = Some(alpha);
        }
    }
    Ok(out)
}
