//! Acceptance suite: every exit criterion at its stated tolerance, one
//! pass/fail line per criterion (visible with `--nocapture`).
//!
//! Run with: cargo test -p symptube-cli --test acceptance -- --nocapture

// `!(r < tol)` is used instead of `r >= tol` so NaN residuals fail checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::sync::Arc;
use std::time::Instant;

use symptube::contact::{registry, ContactError, ManifoldSpec};
use symptube::dsl;
use symptube::exterior::{derivative_field, exterior_derivative};
use symptube::flows::{holomorphy_grid_residual, reeb_flow, IntegratorConfig};
use symptube::linalg::max_abs_diff;
use symptube::sample::BoxSampler;
use symptube::scalar::{evaluate_with_derivatives, DerivOrder, D2};
use symptube::sympl::{SympPoint, Symplectization};
use symptube::tube::{
    boundary_trace_residual, build_tube_by_flow, build_tube_closed_form, compare_tubes,
    lie_derivative_residual, ma_residual, ma_residual_of, nijenhuis_residual,
    nijenhuis_residual_patched, nondegeneracy_floor, nondegeneracy_value, reeb_rotation_residual,
    SweepGrid, TubeError, TubeModel,
};
use symptube_cli::config::RunConfig;
use symptube_cli::suite::run_verify;

fn criterion(n: u32, what: &str, outcome: Result<(), String>) {
    match &outcome {
        Ok(()) => println!("criterion {n:>2} ({what}): PASS"),
        Err(e) => println!("criterion {n:>2} ({what}): FAIL — {e}"),
    }
    if let Err(e) = outcome {
        panic!("criterion {n} ({what}) failed: {e}");
    }
}

fn heis() -> Arc<TubeModel> {
    Arc::new(build_tube_closed_form("heisenberg", 1, 0.5).unwrap())
}

fn sphere() -> Arc<TubeModel> {
    Arc::new(build_tube_closed_form("sphere", 1, 0.3).unwrap())
}

fn check_all(
    points: impl IntoIterator<Item = Vec<f64>>,
    tol: f64,
    what: &str,
    f: impl Fn(&[f64]) -> Result<f64, TubeError>,
) -> Result<(), String> {
    for p in points {
        let r = f(&p).map_err(|e| format!("{what}: {e}"))?;
        if !(r < tol) {
            return Err(format!(
                "{what}: residual {r:.3e} at {p:?} (tolerance {tol:.1e})"
            ));
        }
    }
    Ok(())
}

#[test]
fn criterion_01_monge_ampere() {
    let outcome = (|| -> Result<(), String> {
        for (tube, tol) in [(heis(), 1e-8), (sphere(), 1e-7)] {
            let start = Instant::now();
            check_all(tube.sample_points(1000, 0), tol, tube.base().name(), |a| {
                Ok(ma_residual(&tube, a)?.residual)
            })?;
            let secs = start.elapsed().as_secs_f64();
            println!(
                "    monge_ampere[{}]: 1000 samples in {secs:.2} s",
                tube.base().name()
            );
            if secs >= 10.0 {
                return Err(format!(
                    "{}: runtime {secs:.1} s exceeds 10 s",
                    tube.base().name()
                ));
            }
        }
        Ok(())
    })();
    criterion(1, "homogeneous Monge-Ampère equation", outcome);
}

#[test]
fn criterion_02_boundary_conditions() {
    let outcome = (|| -> Result<(), String> {
        for (tube, tol) in [(heis(), 1e-8), (sphere(), 1e-7)] {
            let spec = tube.base();
            let sympl = Symplectization::new(tube.base_arc());
            let points = BoxSampler::new(spec.chart_box().to_vec(), 0).take(200);
            for p in &points {
                // the energy vanishes identically on the zero section
                let e = sympl.energy(&SympPoint::new(p.clone(), 0.0));
                if e != 0.0 {
                    return Err(format!("E = {e} on the zero section"));
                }
            }
            check_all(points, tol, spec.name(), |p| {
                boundary_trace_residual(&tube, p)
            })?;
        }
        Ok(())
    })();
    criterion(2, "boundary trace d^cE = -θ and E|M = 0", outcome);
}

#[test]
fn criterion_03_nondegeneracy() {
    let outcome = (|| -> Result<(), String> {
        for tube in [heis(), sphere()] {
            let floor = nondegeneracy_floor(tube.base())
                .ok_or_else(|| "no closed-form floor".to_string())?;
            for alpha in tube.sample_points(1000, 0) {
                let v = nondegeneracy_value(&tube, &alpha)
                    .map_err(|e| e.to_string())?
                    .abs();
                if v < floor - 1e-6 {
                    return Err(format!(
                        "{}: |value| {v:.6} below floor {floor:.6} − 1e-6 at {alpha:?}",
                        tube.base().name()
                    ));
                }
            }
        }
        Ok(())
    })();
    criterion(3, "uniform nondegeneracy of dE∧d^cE∧(dd^cE)^n", outcome);
}

#[test]
fn criterion_04_j_maps_reeb_lift_to_fiber_shift() {
    let outcome = (|| -> Result<(), String> {
        for tube in [heis(), sphere()] {
            check_all(tube.sample_points(500, 0), 1e-8, tube.base().name(), |a| {
                reeb_rotation_residual(&tube, a)
            })?;
        }
        Ok(())
    })();
    criterion(4, "J ξ = X", outcome);
}

#[test]
fn criterion_05_structure_identities() {
    let outcome = (|| -> Result<(), String> {
        for spec in [registry::heisenberg(1), registry::sphere(1)] {
            let name = spec.name().to_string();
            let sympl = Symplectization::new(Arc::new(spec));
            let mut box_ = sympl.spec().chart_box().to_vec();
            box_.push([-0.3, 0.3]);
            for c in BoxSampler::new(box_, 0).take(100) {
                let (p, s) = c.split_at(c.len() - 1);
                let alpha = SympPoint::new(p.to_vec(), s[0]);
                let [r1, r2, r3] = sympl
                    .structure_identity_residuals(&alpha)
                    .map_err(|e| e.to_string())?;
                if !(r1 < 1e-9 && r3 < 1e-9) {
                    return Err(format!("{name}: residuals ({r1:.2e}, {r3:.2e})"));
                }
                if r2 != 0.0 {
                    return Err(format!("{name}: X(E) − 1 = {r2:e}, expected exactly 0"));
                }
            }
        }
        Ok(())
    })();
    criterion(5, "ξ(E) = 0, X(E) = 1, [ξ, X] = 0", outcome);
}

#[test]
fn criterion_06_lie_derivative_implies_monge_ampere() {
    let outcome = (|| -> Result<(), String> {
        for tube in [heis(), sphere()] {
            for alpha in tube.sample_points(500, 0) {
                let lie = lie_derivative_residual(&tube, &alpha).map_err(|e| e.to_string())?;
                if !(lie < 1e-7) {
                    return Err(format!(
                        "{}: ι_ξ dd^cE = {lie:.3e} at {alpha:?}",
                        tube.base().name()
                    ));
                }
                // pointwise implication: vanishing contraction forces the
                // top power to vanish
                let ma = ma_residual(&tube, &alpha).map_err(|e| e.to_string())?;
                if !ma.degenerate && !(ma.residual < 1e-7) {
                    return Err(format!(
                        "{}: implication broken (lie {lie:.2e}, ma {:.2e})",
                        tube.base().name(),
                        ma.residual
                    ));
                }
            }
        }
        Ok(())
    })();
    criterion(6, "ι_ξ dd^cE = 0 and the implied degeneracy", outcome);
}

#[test]
fn criterion_07_construction_and_uniqueness() {
    let outcome = (|| -> Result<(), String> {
        let start = Instant::now();
        let cfg = IntegratorConfig::default();
        let grid = SweepGrid::default();
        // tube agreement on "20×20×10" worth of samples
        for (tube, tol) in [(heis(), 1e-8), (sphere(), 1e-7)] {
            let flow = build_tube_by_flow(tube.base_arc(), tube.sigma_max(), grid, &cfg)
                .map_err(|e| e.to_string())?;
            let cmp = compare_tubes(&tube, &flow, 4000, 0).map_err(|e| e.to_string())?;
            println!(
                "    agreement[{}]: γ dev {:.3e}, J dev {:.3e}",
                tube.base().name(),
                cmp.gamma_deviation,
                cmp.j_deviation
            );
            if !(cmp.gamma_deviation < tol && cmp.j_deviation < tol) {
                return Err(format!(
                    "{}: deviations γ {:.3e} / J {:.3e} exceed {tol:.1e}",
                    tube.base().name(),
                    cmp.gamma_deviation,
                    cmp.j_deviation
                ));
            }
        }
        // holomorphy of the leaf parametrizations over |t| ≤ 0.5, |σ| ≤ 0.3
        for spec in [registry::heisenberg(1), registry::sphere(1)] {
            let (worst, at) = holomorphy_grid_residual(&spec, 6, 0.5, 0.3, 20, 10, &cfg)
                .map_err(|e| e.to_string())?;
            if !(worst < 1e-7) {
                return Err(format!("{}: holomorphy {worst:.3e} at {at:?}", spec.name()));
            }
        }
        let secs = start.elapsed().as_secs_f64();
        println!("    construction & uniqueness sweep in {secs:.2} s");
        if secs >= 60.0 {
            return Err(format!("runtime {secs:.1} s exceeds 60 s"));
        }
        Ok(())
    })();
    criterion(
        7,
        "flow-built tube equals closed form; leaves holomorphic",
        outcome,
    );
}

#[test]
fn criterion_08_integrability() {
    let outcome = (|| -> Result<(), String> {
        for tube in [heis(), sphere()] {
            check_all(tube.sample_points(300, 0), 1e-6, tube.base().name(), |a| {
                nijenhuis_residual(&tube, a)
            })?;
        }
        // the non-integrable control must fail
        let tube = heis();
        let mut worst = 0.0_f64;
        for alpha in tube.sample_points(50, 0) {
            worst = worst
                .max(nijenhuis_residual_patched(&tube, &alpha, 1.0).map_err(|e| e.to_string())?);
        }
        if !(worst > 1e-2) {
            return Err(format!("patched control residual {worst:.3e} ≤ 1e-2"));
        }
        Ok(())
    })();
    criterion(
        8,
        "Nijenhuis tensor vanishes; patched control fails",
        outcome,
    );
}

#[test]
fn criterion_09_negative_controls() {
    let outcome = (|| -> Result<(), String> {
        // corrupted ambient extension trips the holomorphy gate
        let corrupt = Arc::new(registry::heisenberg_corrupt(1));
        match build_tube_by_flow(
            corrupt,
            0.5,
            SweepGrid::default(),
            &IntegratorConfig::default(),
        ) {
            Err(TubeError::HolomorphyFailure { .. }) => {}
            Err(e) => return Err(format!("wrong error: {e}")),
            Ok(_) => return Err("corrupted extension passed the holomorphy gate".into()),
        }
        // a perturbed potential breaks the Monge-Ampère equation somewhere
        let tube = heis();
        let mut names = tube.base().coords().to_vec();
        names.push("sigma".into());
        let wrong: Arc<dyn symptube::scalar::ScalarField> =
            Arc::new(dsl::parse("sigma + sigma^2*x1", &names).unwrap());
        let mut worst = 0.0_f64;
        for alpha in tube.sample_points(200, 0) {
            let r = ma_residual_of(wrong.clone(), &tube, &alpha).map_err(|e| e.to_string())?;
            if !r.degenerate {
                worst = worst.max(r.residual);
            }
        }
        if !(worst > 1e-3) {
            return Err(format!("perturbed potential residual {worst:.3e} ≤ 1e-3"));
        }
        // θ = dt is not contact: both solvers must refuse
        let flat = flat_dt_spec();
        let p = vec![0.1, -0.2, 0.3];
        match flat.reeb_field(&p) {
            Err(ContactError::SingularContact { .. }) => {}
            other => return Err(format!("expected SingularContact, got {other:?}")),
        }
        match flat.contact_volume(&p) {
            Err(ContactError::DegenerateContact { .. }) => {}
            other => return Err(format!("expected DegenerateContact, got {other:?}")),
        }
        Ok(())
    })();
    criterion(9, "negative controls misbehave as required", outcome);
}

fn flat_dt_spec() -> ManifoldSpec {
    let src = symptube::contact::SpecSource {
        dim_n: 1,
        coords: dsl::coords(&["x", "y", "t"]),
        theta: vec!["0".into(), "0".into(), "1".into()],
        chart_box: vec![[-1.0, 1.0]; 3],
        embedding: vec!["x".into(), "y".into(), "t".into(), "0".into()],
        ambient_j: symptube::contact::AmbientJ::standard(),
        reeb_extension: vec!["0".into(), "0".into(), "1".into(), "0".into()],
        reeb: None,
    };
    ManifoldSpec::from_source("flat-dt", &src).unwrap()
}

#[test]
fn criterion_10_infrastructure() {
    let outcome = (|| -> Result<(), String> {
        // dual-number derivatives vs central differences on every builtin
        // expression
        for spec in [
            registry::heisenberg(1),
            registry::heisenberg(2),
            registry::sphere(1),
            registry::sphere(2),
        ] {
            let chart_box = spec.chart_box().to_vec();
            let ambient_box = vec![[-1.0, 1.0]; spec.ambient_dim()];
            let src = spec.to_source();
            let mut exprs: Vec<(symptube::dsl::ScalarExpr, Vec<[f64; 2]>)> = Vec::new();
            for e in spec.theta_exprs().iter().chain(spec.embedding_exprs()) {
                exprs.push((e.clone(), chart_box.clone()));
            }
            let ambient_coords: Vec<String> =
                (1..=spec.ambient_dim()).map(|i| format!("u{i}")).collect();
            for text in &src.reeb_extension {
                exprs.push((
                    dsl::parse(text, &ambient_coords).unwrap(),
                    ambient_box.clone(),
                ));
            }
            for (expr, box_) in exprs {
                let dim = expr.coords().len();
                for p in BoxSampler::new(box_[..dim].to_vec(), 31).take(20) {
                    let d = evaluate_with_derivatives(
                        |v: &[D2]| expr.eval(v),
                        &p,
                        DerivOrder::Gradient,
                    )
                    .map_err(|e| e.to_string())?;
                    let grad = d.gradient.unwrap();
                    for i in 0..dim {
                        let h = 1e-5;
                        let mut hi = p.clone();
                        let mut lo = p.clone();
                        hi[i] += h;
                        lo[i] -= h;
                        let fd = (expr.eval::<f64>(&hi).unwrap() - expr.eval::<f64>(&lo).unwrap())
                            / (2.0 * h);
                        let rel = (grad[i] - fd).abs() / (1.0 + grad[i].abs());
                        if !(rel < 1e-6) {
                            return Err(format!(
                                "{}: ∂{i} ad {} vs fd {fd}",
                                expr.source(),
                                grad[i]
                            ));
                        }
                    }
                }
            }
        }
        // d∘d = 0 on the builtin contact forms
        for spec in [registry::heisenberg(1), registry::sphere(1)] {
            let dtheta = derivative_field(spec.theta_field());
            for p in BoxSampler::new(spec.chart_box().to_vec(), 37).take(200) {
                let dd = exterior_derivative(&dtheta, &p).map_err(|e| e.to_string())?;
                if !(dd.max_abs_coeff() < 1e-10) {
                    return Err(format!("{}: d∘d = {:.3e}", spec.name(), dd.max_abs_coeff()));
                }
            }
        }
        // fourth-order convergence of the fixed-step integrator
        let spec = registry::sphere(1);
        let p = vec![0.05, -0.1, 0.02];
        let reference = reeb_flow(&spec, &p, 1.0, &IntegratorConfig::rkf45(1e-13, 1e-14)).unwrap();
        let coarse = reeb_flow(&spec, &p, 1.0, &IntegratorConfig::rk4(0.05)).unwrap();
        let fine = reeb_flow(&spec, &p, 1.0, &IntegratorConfig::rk4(0.025)).unwrap();
        let factor = max_abs_diff(&coarse, &reference) / max_abs_diff(&fine, &reference);
        if !(factor >= 14.0) {
            return Err(format!("step-halving factor {factor:.2} < 14"));
        }
        // byte-deterministic reports for a fixed seed
        let mut cfg = RunConfig::example("heisenberg", 1);
        cfg.samples = 50;
        cfg.seed = 5;
        let a = run_verify(&cfg).map_err(|e| e.to_string())?;
        let b = run_verify(&cfg).map_err(|e| e.to_string())?;
        if a.canonical_bytes() != b.canonical_bytes() {
            return Err("reports differ for identical config and seed".into());
        }
        Ok(())
    })();
    criterion(
        10,
        "derivative engine, d∘d, integrator order, determinism",
        outcome,
    );
}
