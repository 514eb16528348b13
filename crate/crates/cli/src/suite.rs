//! The verification suite: thirteen named checks over one manifold.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail};

use symptube::contact::{registry, ManifoldSpec};
use symptube::sample::BoxSampler;
use symptube::sympl::{SympPoint, Symplectization};
use symptube::tube::{
    boundary_trace_residual, build_tube_by_flow, check_cr_restriction, closed_form_tube_for,
    compare_tubes, j_squared_residual, lie_derivative_residual, ma_residual, nijenhuis_residual,
    nondegeneracy_value, reeb_rotation_residual, run_pointwise_check, CheckReport, SweepGrid,
    TubeError, TubeModel,
};

use crate::config::{tolerance_profile, RunConfig, Target, CHECK_NAMES};
use crate::report::{CheckEntry, ConfigEcho, Report};
use crate::specfile;

/// Resolve the configured target into a compiled specification.
pub fn resolve_spec(cfg: &RunConfig) -> anyhow::Result<(Arc<ManifoldSpec>, bool)> {
    match &cfg.target {
        Target::Example { name, n } => {
            if !(1..=3).contains(n) {
                bail!("--n must be in 1..=3, got {n}");
            }
            let spec = registry::build(name, *n)
                .ok_or_else(|| anyhow!("unknown example `{name}`; see `list-examples`"))?;
            Ok((Arc::new(spec), true))
        }
        Target::SpecFile { path } => {
            let spec = specfile::load_spec(path)?;
            Ok((Arc::new(spec), false))
        }
    }
}

fn timed(f: impl FnOnce() -> CheckReport) -> CheckEntry {
    let start = Instant::now();
    let check = f();
    CheckEntry {
        check,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn tube_points(tube: &TubeModel, count: usize, seed: u64) -> Vec<Vec<f64>> {
    tube.sample_points(count, seed)
}

fn chart_points(spec: &ManifoldSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    BoxSampler::new(spec.chart_box().to_vec(), seed).take(count)
}

/// Run the full suite and assemble the report. Configuration and spec-load
/// problems are errors; failing checks are recorded in the report.
pub fn run_verify(cfg: &RunConfig) -> anyhow::Result<Report> {
    let (spec, is_registry) = resolve_spec(cfg)?;
    let sigma_max = cfg.sigma_max.unwrap_or_else(|| spec.default_sigma_max());
    if sigma_max <= 0.0 {
        bail!("--sigma-max must be positive");
    }
    if cfg.samples == 0 {
        bail!("--samples must be at least 1");
    }
    let mut tolerances = tolerance_profile(&spec, is_registry);
    for (name, tol) in &cfg.tolerance_overrides {
        if !CHECK_NAMES.contains(&name.as_str()) {
            bail!("unknown check `{name}` in tolerance override");
        }
        if *tol <= 0.0 {
            bail!("tolerance for `{name}` must be positive");
        }
        tolerances.insert(name.clone(), *tol);
    }
    let tol = |name: &str| tolerances[name];
    let icfg = cfg.integrator_config();
    let seed = cfg.seed;
    let samples = cfg.samples;
    let mut checks: Vec<CheckEntry> = Vec::with_capacity(CHECK_NAMES.len());

    // 1. specification consistency
    checks.push(timed(|| {
        let report = spec.validate(samples.min(200), seed);
        let mut out = CheckReport::from_residual(
            "spec_validation",
            samples.min(200),
            report.max_residual(),
            tol("spec_validation"),
            None,
        );
        if let Some(item) = report.first_failure() {
            out.pass = false;
            out.error = Some(match &item.error {
                Some(e) => format!("{}: {e}", item.name),
                None => format!(
                    "{}: max residual {:.3e} exceeds {:.1e}",
                    item.name, item.max_residual, item.tolerance
                ),
            });
        }
        out
    }));

    // 2. Reeb defining conditions
    checks.push(timed(|| {
        let points = chart_points(&spec, samples.min(500), seed);
        run_pointwise_check("reeb_conditions", tol("reeb_conditions"), &points, |p| {
            let xi = spec.reeb_field(p)?;
            Ok(spec.reeb_residual(p, &xi)?)
        })
    }));

    // 3. structure identities on the symplectization
    checks.push(timed(|| {
        let sympl = Symplectization::new(spec.clone());
        let mut box_ = spec.chart_box().to_vec();
        box_.push([-sigma_max, sigma_max]);
        let points = BoxSampler::new(box_, seed).take(samples.min(500));
        run_pointwise_check(
            "structure_identities",
            tol("structure_identities"),
            &points,
            |alpha| {
                let (p, s) = alpha.split_at(alpha.len() - 1);
                let r = sympl.structure_identity_residuals(&SympPoint::new(p.to_vec(), s[0]))?;
                Ok(r.into_iter().fold(0.0, f64::max))
            },
        )
    }));

    // 4. holomorphy of the joint flow, via the gated flow construction
    let sweep = SweepGrid {
        base_points: 6,
        nt: 20,
        nsigma: 10,
        t_max: 0.5,
    };
    let flow_tube: Result<Arc<TubeModel>, TubeError> =
        build_tube_by_flow(spec.clone(), sigma_max, sweep, &icfg).map(Arc::new);
    checks.push(timed(|| match &flow_tube {
        Ok(tube) => {
            let s = tube.holomorphy_sweep().expect("flow tubes carry the sweep");
            CheckReport::from_residual(
                "holomorphy",
                sweep.base_points * sweep.nt * sweep.nsigma,
                s.max_residual,
                tol("holomorphy"),
                Some(s.worst_at.clone()),
            )
        }
        Err(e) => CheckReport::from_error(
            "holomorphy",
            sweep.base_points * sweep.nt * sweep.nsigma,
            tol("holomorphy"),
            e.to_string(),
        ),
    }));

    // the tube the pointwise checks run on: closed form for registry
    // examples, otherwise the flow construction itself
    let oracle_tube: Result<Arc<TubeModel>, anyhow::Error> = if is_registry {
        closed_form_tube_for(spec.clone(), sigma_max)
            .map(Arc::new)
            .map_err(Into::into)
    } else {
        flow_tube
            .as_ref()
            .map(Arc::clone)
            .map_err(|e| anyhow!("tube construction failed: {e}"))
    };

    // 5. agreement of the two constructions; with no closed form available,
    // the flow tube is compared against a tighter integration of itself
    checks.push(timed(|| {
        let count = samples.min(1000);
        match (&oracle_tube, &flow_tube) {
            (Ok(oracle), Ok(flow)) if !oracle.is_flow_built() => {
                compare_report(oracle, flow, count, seed, &tolerances)
            }
            (Ok(oracle), Ok(_)) => {
                let tighter = symptube::flows::IntegratorConfig::rkf45(
                    cfg.rel_tol * 1e-2,
                    cfg.rel_tol * 1e-4,
                );
                match build_tube_by_flow(spec.clone(), sigma_max, sweep, &tighter) {
                    Ok(refined) => compare_report(oracle, &refined, count, seed, &tolerances),
                    Err(e) => CheckReport::from_error(
                        "tube_agreement",
                        count,
                        tol("tube_agreement"),
                        e.to_string(),
                    ),
                }
            }
            (Err(e), _) => CheckReport::from_error(
                "tube_agreement",
                count,
                tol("tube_agreement"),
                e.to_string(),
            ),
            (_, Err(e)) => CheckReport::from_error(
                "tube_agreement",
                count,
                tol("tube_agreement"),
                e.to_string(),
            ),
        }
    }));

    // 6..13: pointwise tube checks
    match &oracle_tube {
        Ok(tube) => {
            let tube = tube.clone();
            checks.push(timed(|| {
                let points = tube_points(&tube, samples, seed);
                run_pointwise_check("j_squared", tol("j_squared"), &points, |a| {
                    j_squared_residual(&tube, a)
                })
            }));
            checks.push(timed(|| {
                let points = tube_points(&tube, samples, seed);
                run_pointwise_check("reeb_rotation", tol("reeb_rotation"), &points, |a| {
                    reeb_rotation_residual(&tube, a)
                })
            }));
            checks.push(timed(|| {
                let points = chart_points(&spec, samples.min(200), seed);
                run_pointwise_check("cr_restriction", tol("cr_restriction"), &points, |p| {
                    check_cr_restriction(&tube, p)
                })
            }));
            checks.push(timed(|| {
                let points = chart_points(&spec, samples.min(200), seed);
                run_pointwise_check("boundary_trace", tol("boundary_trace"), &points, |p| {
                    boundary_trace_residual(&tube, p)
                })
            }));
            checks.push(timed(|| {
                let points = tube_points(&tube, samples.min(500), seed);
                run_pointwise_check("lie_derivative", tol("lie_derivative"), &points, |a| {
                    lie_derivative_residual(&tube, a)
                })
            }));
            checks.push(timed(|| {
                let points = tube_points(&tube, samples, seed);
                run_pointwise_check("monge_ampere", tol("monge_ampere"), &points, |a| {
                    Ok(ma_residual(&tube, a)?.residual)
                })
            }));
            checks.push(timed(|| {
                let points = tube_points(&tube, samples, seed);
                run_pointwise_check("nondegeneracy", tol("nondegeneracy"), &points, |a| {
                    // reciprocal residual: pass ⇔ |value| > floor uniformly
                    let v = nondegeneracy_value(&tube, a)?;
                    Ok(1.0 / v.abs().max(1e-300))
                })
            }));
            checks.push(timed(|| {
                let points = tube_points(&tube, samples.min(300), seed);
                run_pointwise_check("nijenhuis", tol("nijenhuis"), &points, |a| {
                    nijenhuis_residual(&tube, a)
                })
            }));
        }
        Err(e) => {
            for name in &CHECK_NAMES[5..] {
                let msg = e.to_string();
                checks.push(timed(|| {
                    CheckReport::from_error(name, 0, tol(name), msg.clone())
                }));
            }
        }
    }

    let echo = ConfigEcho::new(cfg, sigma_max, tolerances);
    Ok(Report::new(echo, checks))
}

fn compare_report(
    a: &TubeModel,
    b: &TubeModel,
    count: usize,
    seed: u64,
    tolerances: &std::collections::BTreeMap<String, f64>,
) -> CheckReport {
    match compare_tubes(a, b, count, seed) {
        Ok(cmp) => {
            let worst = if cmp.gamma_deviation >= cmp.j_deviation {
                cmp.worst_gamma_at.clone()
            } else {
                cmp.worst_j_at.clone()
            };
            CheckReport::from_residual(
                "tube_agreement",
                count,
                cmp.max_deviation(),
                tolerances["tube_agreement"],
                worst,
            )
        }
        Err(e) => CheckReport::from_error(
            "tube_agreement",
            count,
            tolerances["tube_agreement"],
            e.to_string(),
        ),
    }
}

/// Registry listing for the `list-examples` subcommand.
pub fn list_examples() -> String {
    let mut out = String::new();
    for (name, description) in registry::entries() {
        let spec = registry::build(name, 1).expect("registry entries build");
        out.push_str(&format!(
            "{name:<20} n=1..3  dim {} (n=1)  {description}\n",
            spec.dim()
        ));
    }
    out
}
