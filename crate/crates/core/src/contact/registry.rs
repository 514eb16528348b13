//! Builtin example manifolds.
//!
//! Two closed-form families, plus a deliberately corrupted variant used as a
//! negative control for the holomorphy checks:
//!
//! - `heisenberg(n)`: ℝ^{2n+1} with θ = dt + Σ(x_j dy_j − y_j dx_j), embedded
//!   as the boundary of a Siegel-type domain, z_j = x_j + i y_j and
//!   w = t + (i/2)|z|². The i/2 makes the holomorphic tangent space of the
//!   image exactly ker θ, which is what the boundary identities need.
//! - `sphere(n)`: S^{2n+1} ⊂ ℂ^{n+1} in the stereographic chart centered at
//!   z = (1, 0, …, 0), with θ the restriction of Σ(x_j dy_j − y_j dx_j) and
//!   ξ̃(z) = iz.

use super::{AmbientJ, ManifoldSpec, SpecSource};

/// Names and default chart dimensions, in stable listing order.
pub fn entries() -> Vec<(&'static str, &'static str)> {
    vec![
        ("heisenberg", "Heisenberg group boundary model"),
        (
            "sphere",
            "unit sphere in complex space, stereographic chart",
        ),
        (
            "heisenberg-corrupt",
            "negative control: non-holomorphic Reeb extension",
        ),
    ]
}

/// Build a registry entry by name.
pub fn build(name: &str, n: usize) -> Option<ManifoldSpec> {
    match name {
        "heisenberg" => Some(heisenberg(n)),
        "sphere" => Some(sphere(n)),
        "heisenberg-corrupt" => Some(heisenberg_corrupt(n)),
        _ => None,
    }
}

fn sum_of_squares(names: &[String]) -> String {
    names
        .iter()
        .map(|c| format!("{c}^2"))
        .collect::<Vec<_>>()
        .join(" + ")
}

pub fn heisenberg(n: usize) -> ManifoldSpec {
    assert!((1..=3).contains(&n));
    let mut coords: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    coords.extend((1..=n).map(|j| format!("y{j}")));
    coords.push("t".into());

    let mut theta: Vec<String> = (1..=n).map(|j| format!("-y{j}")).collect();
    theta.extend((1..=n).map(|j| format!("x{j}")));
    theta.push("1".into());

    // interleaved ambient pairs (x_j, y_j), then (Re w, Im w)
    let mut embedding = Vec::new();
    for j in 1..=n {
        embedding.push(format!("x{j}"));
        embedding.push(format!("y{j}"));
    }
    embedding.push("t".into());
    let zsq = sum_of_squares(&coords[..2 * n]);
    embedding.push(format!("({zsq})/2"));

    let two_n = 2 * (n + 1);
    let mut reeb_extension = vec!["0".to_string(); two_n];
    reeb_extension[two_n - 2] = "1".into();

    let mut reeb = vec!["0".to_string(); 2 * n];
    reeb.push("1".into());

    let src = SpecSource {
        dim_n: n,
        coords,
        theta,
        chart_box: vec![[-1.0, 1.0]; 2 * n + 1],
        embedding,
        ambient_j: AmbientJ::standard(),
        reeb_extension,
        reeb: Some(reeb),
    };
    let mut spec = ManifoldSpec::from_source("heisenberg", &src).expect("builtin data parses");
    spec.set_default_sigma_max(0.5);
    spec
}

pub fn sphere(n: usize) -> ManifoldSpec {
    assert!((1..=3).contains(&n));
    let m = 2 * n + 1;
    let coords: Vec<String> = (1..=m).map(|k| format!("v{k}")).collect();
    let q = sum_of_squares(&coords);
    let s = format!("(1 + {q})");

    // θ = pullback of Σ(x dy − y dx) through the stereographic chart
    let mut theta = Vec::with_capacity(m);
    theta.push(format!("(2*(1 - ({q})) + 4*v1*v1)/{s}^2"));
    for j in 1..=n {
        theta.push(format!("(4*(v1*v{} - v{}))/{s}^2", 2 * j, 2 * j + 1));
        theta.push(format!("(4*(v1*v{} + v{}))/{s}^2", 2 * j + 1, 2 * j));
    }

    // chart from the antipode of z = (1, 0, …, 0):
    // x_1 = (1 − |v|²)/s, y_1 = 2v₁/s, x_{j+1} = 2v_{2j}/s, y_{j+1} = 2v_{2j+1}/s
    let mut embedding = Vec::with_capacity(2 * (n + 1));
    embedding.push(format!("(1 - ({q}))/{s}"));
    embedding.push(format!("2*v1/{s}"));
    for j in 1..=n {
        embedding.push(format!("2*v{}/{s}", 2 * j));
        embedding.push(format!("2*v{}/{s}", 2 * j + 1));
    }

    // ξ̃(z) = iz: per pair (x_j, y_j) ↦ (−y_j, x_j)
    let mut reeb_extension = Vec::with_capacity(2 * (n + 1));
    for j in 0..=n {
        reeb_extension.push(format!("-u{}", 2 * j + 2));
        reeb_extension.push(format!("u{}", 2 * j + 1));
    }

    let src = SpecSource {
        dim_n: n,
        coords,
        theta,
        chart_box: vec![[-1.1, 1.1]; m],
        embedding,
        ambient_j: AmbientJ::standard(),
        reeb_extension,
        reeb: None,
    };
    let mut spec = ManifoldSpec::from_source("sphere", &src).expect("builtin data parses");
    spec.set_default_sigma_max(0.3);
    spec
}

/// Heisenberg with ξ̃ scaled by (1 + Im w − |z|²/2): the factor is exactly 1
/// on the embedded image, so validation passes, but the extension is no
/// longer holomorphic and the flow-built tube must fail its holomorphy gate.
pub fn heisenberg_corrupt(n: usize) -> ManifoldSpec {
    let base = heisenberg(n);
    let mut src = base.to_source();
    let two_n = 2 * (n + 1);
    let zsq: String = (1..=2 * n)
        .map(|i| format!("u{i}^2"))
        .collect::<Vec<_>>()
        .join(" + ");
    src.reeb_extension[two_n - 2] = format!("1 + u{two_n} - ({zsq})/2");
    let mut spec =
        ManifoldSpec::from_source("heisenberg-corrupt", &src).expect("builtin data parses");
    spec.set_default_sigma_max(0.5);
    spec
}
