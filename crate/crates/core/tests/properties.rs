//! Property tests for the algebraic layers: exterior-algebra identities
//! against brute-force oracles, and dual-number derivatives against finite
//! differences over every builtin expression.

use proptest::prelude::*;

use symptube::contact::registry;
use symptube::dsl::ScalarExpr;
use symptube::exterior::{
    derivative_field, eval_form, exterior_derivative, multi_indices, pullback, wedge, AltForm,
};
use symptube::linalg::GMat;
use symptube::sample::BoxSampler;
use symptube::scalar::{evaluate_with_derivatives, DerivOrder, D2};

fn coeff_scale(a: &AltForm<f64>) -> f64 {
    a.coeffs().iter().map(|c| c.abs()).sum::<f64>().max(1e-3)
}

proptest! {
    #[test]
    fn wedge_is_graded_anticommutative(
        dim in 2usize..=6,
        k in 0usize..=3,
        l in 0usize..=3,
        raw in proptest::collection::vec(-1.0..1.0f64, 60),
    ) {
        prop_assume!(k + l <= dim && k <= dim && l <= dim);
        let mut it = raw.into_iter();
        let mut take = |n: usize| -> Vec<f64> { (0..n).map(|_| it.next().unwrap()).collect() };
        let a = AltForm::from_coeffs(dim, k, take(multi_indices(dim, k).len()));
        let b = AltForm::from_coeffs(dim, l, take(multi_indices(dim, l).len()));
        let ab = wedge(&a, &b);
        let ba = wedge(&b, &a);
        let sign = if (k * l) % 2 == 0 { 1.0 } else { -1.0 };
        let tol = 4.0 * f64::EPSILON * coeff_scale(&a) * coeff_scale(&b);
        for (x, y) in ab.coeffs().iter().zip(ba.coeffs()) {
            prop_assert!((x - sign * y).abs() <= tol, "{x} vs {y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn wedge_evaluation_matches_shuffle_sum(
        dim in 2usize..=5,
        k in 1usize..=2,
        l in 1usize..=2,
        raw in proptest::collection::vec(-1.0..1.0f64, 200),
    ) {
        prop_assume!(k + l <= dim);
        let mut it = raw.into_iter();
        let mut take = |n: usize| -> Vec<f64> { (0..n).map(|_| it.next().unwrap()).collect() };
        let a = AltForm::from_coeffs(dim, k, take(multi_indices(dim, k).len()));
        let b = AltForm::from_coeffs(dim, l, take(multi_indices(dim, l).len()));
        let vectors: Vec<Vec<f64>> = (0..k + l).map(|_| take(dim)).collect();

        let direct = eval_form(&wedge(&a, &b), &vectors);

        // brute force over all (k,l)-shuffles
        let mut oracle = 0.0;
        for positions in multi_indices(k + l, k) {
            let inv: usize = positions.iter().enumerate().map(|(i, &p)| p - i).sum();
            let sign = if inv.is_multiple_of(2) { 1.0 } else { -1.0 };
            let rest: Vec<usize> =
                (0..k + l).filter(|i| !positions.contains(i)).collect();
            let va: Vec<Vec<f64>> = positions.iter().map(|&i| vectors[i].clone()).collect();
            let vb: Vec<Vec<f64>> = rest.iter().map(|&i| vectors[i].clone()).collect();
            oracle += sign * eval_form(&a, &va) * eval_form(&b, &vb);
        }
        let scale = direct.abs().max(oracle.abs()).max(1.0);
        prop_assert!((direct - oracle).abs() / scale < 1e-10, "{direct} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn pullback_is_functorial(
        dim_src in 2usize..=4,
        dim_mid in 2usize..=4,
        dim_tgt in 2usize..=4,
        k in 1usize..=2,
        raw in proptest::collection::vec(-1.0..1.0f64, 60),
    ) {
        prop_assume!(k <= dim_src && k <= dim_mid && k <= dim_tgt);
        let mut it = raw.into_iter();
        let mut take = |n: usize| -> Vec<f64> { (0..n).map(|_| it.next().unwrap()).collect() };
        let a = AltForm::from_coeffs(dim_tgt, k, take(multi_indices(dim_tgt, k).len()));
        let make = |rows: usize, cols: usize, data: Vec<f64>| {
            let mut m = GMat::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    *m.at_mut(r, c) = data[r * cols + c];
                }
            }
            m
        };
        let l = make(dim_tgt, dim_mid, take(dim_tgt * dim_mid));
        let kmat = make(dim_mid, dim_src, take(dim_mid * dim_src));
        let two_step = pullback(&pullback(&a, &l), &kmat);
        let composed = pullback(&a, &l.matmul(&kmat));
        let tol = 1e-12 * coeff_scale(&a) * 100.0;
        for (x, y) in two_step.coeffs().iter().zip(composed.coeffs()) {
            prop_assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }
}

/// Every expression the builtin registry is made of, with a sampling box for
/// its coordinate space.
fn registry_expressions() -> Vec<(ScalarExpr, Vec<[f64; 2]>)> {
    let mut out = Vec::new();
    for spec in [
        registry::heisenberg(1),
        registry::heisenberg(2),
        registry::sphere(1),
        registry::sphere(2),
        registry::heisenberg_corrupt(1),
    ] {
        let chart_box = spec.chart_box().to_vec();
        for e in spec.theta_exprs().iter().chain(spec.embedding_exprs()) {
            out.push((e.clone(), chart_box.clone()));
        }
        if let Some(reeb) = spec.reeb_exprs() {
            for e in reeb {
                out.push((e.clone(), chart_box.clone()));
            }
        }
        let ambient_box = vec![[-1.0, 1.0]; spec.ambient_dim()];
        for e in spec.reeb_extension_field().components().iter() {
            let _ = e; // components are erased; use the source expressions instead
        }
        for src in spec.to_source().reeb_extension {
            let coords: Vec<String> = (1..=spec.ambient_dim()).map(|i| format!("u{i}")).collect();
            out.push((
                symptube::dsl::parse(&src, &coords).unwrap(),
                ambient_box.clone(),
            ));
        }
    }
    out
}

#[test]
fn registry_gradients_match_finite_differences() {
    for (expr, box_) in registry_expressions() {
        let dim = expr.coords().len();
        if dim == 0 {
            continue;
        }
        let sampler = BoxSampler::new(box_[..dim].to_vec(), 17);
        for p in sampler.take(100) {
            let d = evaluate_with_derivatives(|v: &[D2]| expr.eval(v), &p, DerivOrder::Hessian)
                .unwrap();
            let grad = d.gradient.unwrap();
            let hess = d.hessian.unwrap();
            let h = 1e-5;
            for i in 0..dim {
                let mut hi = p.clone();
                let mut lo = p.clone();
                hi[i] += h;
                lo[i] -= h;
                let fd =
                    (expr.eval::<f64>(&hi).unwrap() - expr.eval::<f64>(&lo).unwrap()) / (2.0 * h);
                let rel = (grad[i] - fd).abs() / (1.0 + grad[i].abs());
                assert!(
                    rel < 1e-6,
                    "{}: grad[{i}] ad {} fd {}",
                    expr.source(),
                    grad[i],
                    fd
                );
            }
            let h = 1e-4;
            for i in 0..dim {
                for j in 0..dim {
                    let mut pp = p.clone();
                    let mut pm = p.clone();
                    let mut mp = p.clone();
                    let mut mm = p.clone();
                    pp[i] += h;
                    pp[j] += h;
                    pm[i] += h;
                    pm[j] -= h;
                    mp[i] -= h;
                    mp[j] += h;
                    mm[i] -= h;
                    mm[j] -= h;
                    let fd = (expr.eval::<f64>(&pp).unwrap()
                        - expr.eval::<f64>(&pm).unwrap()
                        - expr.eval::<f64>(&mp).unwrap()
                        + expr.eval::<f64>(&mm).unwrap())
                        / (4.0 * h * h);
                    let rel = (hess[(i, j)] - fd).abs() / (1.0 + hess[(i, j)].abs());
                    assert!(
                        rel < 1e-6,
                        "{}: hess[{i}{j}] ad {} fd {}",
                        expr.source(),
                        hess[(i, j)],
                        fd
                    );
                }
            }
        }
    }
}

#[test]
fn registry_expressions_pretty_print_round_trip() {
    for (expr, _) in registry_expressions() {
        let names: Vec<String> = expr.coords().to_vec();
        let reparsed = symptube::dsl::parse(&expr.pretty(), &names).unwrap();
        let sampler = BoxSampler::new(vec![[-0.9, 0.9]; names.len().max(1)], 23);
        for p in sampler.take(5) {
            let a: f64 = expr.eval(&p[..names.len()]).unwrap();
            let b: f64 = reparsed.eval(&p[..names.len()]).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "{}", expr.source());
        }
    }
}

#[test]
fn double_exterior_derivative_vanishes_on_registry_forms() {
    for spec in [
        registry::heisenberg(1),
        registry::heisenberg(2),
        registry::sphere(1),
    ] {
        let dtheta = derivative_field(spec.theta_field());
        let sampler = BoxSampler::new(spec.chart_box().to_vec(), 29);
        for p in sampler.take(200) {
            let dd = exterior_derivative(&dtheta, &p).unwrap();
            assert!(
                dd.max_abs_coeff() < 1e-10,
                "{}: d∘d residual {}",
                spec.name(),
                dd.max_abs_coeff()
            );
        }
    }
}
