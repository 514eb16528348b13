//! Pseudo-Hermitian manifold specifications and contact-geometry solvers.
//!
//! A specification carries a chart of a (2n+1)-manifold, a contact form θ in
//! chart coordinates, a CR embedding into ℝ^{2n+2} with a constant ambient
//! complex structure, and the ambient extension of the Reeb field used by the
//! flow construction. All component functions live in the expression DSL, so
//! specifications serialize losslessly.

use nalgebra::DMatrix;
use thiserror::Error;

use std::sync::Arc;

use crate::dsl::{self, ScalarExpr};
use crate::exterior::{
    exterior_derivative_at, wedge, wedge_power, AltForm, FormField, VectorField,
};
use crate::linalg::{norm, solve_square, GMat};
use crate::sample::BoxSampler;
use crate::scalar::{seed, Dual, EvalError, FieldScalar, Scalar, ScalarField};

pub mod registry;

/// Numerical rank cutoff for the stacked Reeb system.
pub const SINGULAR_RATIO: f64 = 1e-10;
/// Contact volumes below this are treated as degenerate.
pub const DEGENERATE_VOLUME: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("contact condition fails at {point:?}: singular value ratio {sv_ratio:.3e}")]
    SingularContact { point: Vec<f64>, sv_ratio: f64 },
    #[error("degenerate contact volume {value:.3e} at {point:?}")]
    DegenerateContact { point: Vec<f64>, value: f64 },
    #[error("theta vanishes at {point:?}")]
    ZeroForm { point: Vec<f64> },
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Serializable source of a manifold specification: the JSON file layout.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpecSource {
    pub dim_n: usize,
    pub coords: Vec<String>,
    pub theta: Vec<String>,
    pub chart_box: Vec<[f64; 2]>,
    pub embedding: Vec<String>,
    pub ambient_j: AmbientJ,
    pub reeb_extension: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reeb: Option<Vec<String>>,
}

/// Ambient complex structure: the standard ℂ^{n+1} block structure on
/// interleaved (x_j, y_j) pairs, or an explicit matrix with J² = −I.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum AmbientJ {
    Standard(String),
    Explicit(Vec<Vec<f64>>),
}

impl AmbientJ {
    pub fn standard() -> Self {
        AmbientJ::Standard("standard".into())
    }
}

/// The standard complex structure on ℝ^{2N} with interleaved pairs:
/// J e_{2k} = e_{2k+1}, J e_{2k+1} = −e_{2k} (0-based).
pub fn standard_ambient_j(two_n: usize) -> DMatrix<f64> {
    assert!(two_n.is_multiple_of(2));
    let mut j = DMatrix::zeros(two_n, two_n);
    for k in 0..two_n / 2 {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// A compiled pseudo-Hermitian manifold chart.
#[derive(Debug, Clone)]
pub struct ManifoldSpec {
    name: String,
    n: usize,
    coords: Vec<String>,
    ambient_coords: Vec<String>,
    theta: Vec<ScalarExpr>,
    chart_box: Vec<[f64; 2]>,
    embedding: Vec<ScalarExpr>,
    ambient_j: DMatrix<f64>,
    ambient_j_standard: bool,
    reeb_extension: Vec<ScalarExpr>,
    reeb: Option<Vec<ScalarExpr>>,
    default_sigma_max: f64,
}

impl PartialEq for ManifoldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.coords == other.coords
            && self.theta == other.theta
            && self.chart_box == other.chart_box
            && self.embedding == other.embedding
            && self.ambient_j == other.ambient_j
            && self.reeb_extension == other.reeb_extension
            && self.reeb == other.reeb
    }
}

impl ManifoldSpec {
    /// Compile a specification from its serializable source.
    pub fn from_source(name: &str, src: &SpecSource) -> Result<Self, ContactError> {
        let n = src.dim_n;
        if n == 0 || n > 3 {
            return Err(ContactError::Spec(format!(
                "dim_n must be in 1..=3 (chart dimension at most 7), got {n}"
            )));
        }
        let m = 2 * n + 1;
        let two_n = 2 * (n + 1);
        if src.coords.len() != m {
            return Err(ContactError::Spec(format!(
                "expected {m} coords for dim_n = {n}, got {}",
                src.coords.len()
            )));
        }
        if src.theta.len() != m {
            return Err(ContactError::Spec(format!(
                "theta needs {m} components, got {}",
                src.theta.len()
            )));
        }
        if src.chart_box.len() != m {
            return Err(ContactError::Spec(format!(
                "chart_box needs {m} intervals, got {}",
                src.chart_box.len()
            )));
        }
        for (i, [lo, hi]) in src.chart_box.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(ContactError::Spec(format!(
                    "chart_box[{i}] = [{lo}, {hi}] is empty"
                )));
            }
        }
        if src.embedding.len() != two_n {
            return Err(ContactError::Spec(format!(
                "embedding needs {two_n} components (ambient dimension 2(n+1)), got {}",
                src.embedding.len()
            )));
        }
        if src.reeb_extension.len() != two_n {
            return Err(ContactError::Spec(format!(
                "reeb_extension needs {two_n} components, got {}",
                src.reeb_extension.len()
            )));
        }
        let ambient_coords: Vec<String> = (1..=two_n).map(|i| format!("u{i}")).collect();
        let parse_all =
            |texts: &[String], cs: &[String]| -> Result<Vec<ScalarExpr>, ContactError> {
                texts
                    .iter()
                    .map(|t| dsl::parse(t, cs).map_err(|e| ContactError::Spec(e.to_string())))
                    .collect()
            };
        let theta = parse_all(&src.theta, &src.coords)?;
        let embedding = parse_all(&src.embedding, &src.coords)?;
        let reeb_extension = parse_all(&src.reeb_extension, &ambient_coords)?;
        let reeb = match &src.reeb {
            Some(r) => {
                if r.len() != m {
                    return Err(ContactError::Spec(format!(
                        "reeb needs {m} components, got {}",
                        r.len()
                    )));
                }
                Some(parse_all(r, &src.coords)?)
            }
            None => None,
        };
        let (ambient_j, ambient_j_standard) = match &src.ambient_j {
            AmbientJ::Standard(tag) => {
                if tag != "standard" {
                    return Err(ContactError::Spec(format!(
                        "ambient_j must be \"standard\" or a matrix, got \"{tag}\""
                    )));
                }
                (standard_ambient_j(two_n), true)
            }
            AmbientJ::Explicit(rows) => {
                if rows.len() != two_n || rows.iter().any(|r| r.len() != two_n) {
                    return Err(ContactError::Spec(format!(
                        "ambient_j must be {two_n}x{two_n}"
                    )));
                }
                let j = DMatrix::from_fn(two_n, two_n, |i, k| rows[i][k]);
                (j, false)
            }
        };
        Ok(ManifoldSpec {
            name: name.to_string(),
            n,
            coords: src.coords.clone(),
            ambient_coords,
            theta,
            chart_box: src.chart_box.clone(),
            embedding,
            ambient_j,
            ambient_j_standard,
            reeb_extension,
            reeb,
            default_sigma_max: 0.3,
        })
    }

    /// Serializable source reproducing this specification.
    pub fn to_source(&self) -> SpecSource {
        SpecSource {
            dim_n: self.n,
            coords: self.coords.clone(),
            theta: self.theta.iter().map(|e| e.source().to_string()).collect(),
            chart_box: self.chart_box.clone(),
            embedding: self
                .embedding
                .iter()
                .map(|e| e.source().to_string())
                .collect(),
            ambient_j: if self.ambient_j_standard {
                AmbientJ::standard()
            } else {
                AmbientJ::Explicit(
                    (0..self.ambient_j.nrows())
                        .map(|i| self.ambient_j.row(i).iter().copied().collect())
                        .collect(),
                )
            },
            reeb_extension: self
                .reeb_extension
                .iter()
                .map(|e| e.source().to_string())
                .collect(),
            reeb: self
                .reeb
                .as_ref()
                .map(|r| r.iter().map(|e| e.source().to_string()).collect()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// CR dimension n; the chart has dimension 2n+1.
    pub fn cr_dim(&self) -> usize {
        self.n
    }

    /// Chart dimension m = 2n + 1.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    /// Ambient dimension 2(n+1).
    pub fn ambient_dim(&self) -> usize {
        2 * (self.n + 1)
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn ambient_coords(&self) -> &[String] {
        &self.ambient_coords
    }

    pub fn chart_box(&self) -> &[[f64; 2]] {
        &self.chart_box
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(&self.chart_box)
                .all(|(x, [lo, hi])| *x >= lo - 1e-12 && *x <= hi + 1e-12)
    }

    pub fn ambient_j(&self) -> &DMatrix<f64> {
        &self.ambient_j
    }

    pub fn default_sigma_max(&self) -> f64 {
        self.default_sigma_max
    }

    pub fn set_default_sigma_max(&mut self, s: f64) {
        self.default_sigma_max = s;
    }

    pub fn set_name(&mut self, name: &str) {
        self.name = name.to_string();
    }

    pub fn theta_exprs(&self) -> &[ScalarExpr] {
        &self.theta
    }

    pub fn embedding_exprs(&self) -> &[ScalarExpr] {
        &self.embedding
    }

    pub fn reeb_exprs(&self) -> Option<&[ScalarExpr]> {
        self.reeb.as_deref()
    }

    /// θ as a degree-1 form field over the chart.
    pub fn theta_field(&self) -> FormField {
        FormField::new(
            self.dim(),
            1,
            self.theta
                .iter()
                .map(|e| Arc::new(e.clone()) as Arc<dyn ScalarField>)
                .collect(),
        )
    }

    /// ξ̃, the ambient extension of the Reeb field, as a vector field over
    /// ambient coordinates.
    pub fn reeb_extension_field(&self) -> VectorField {
        VectorField::new(
            self.ambient_dim(),
            self.reeb_extension
                .iter()
                .map(|e| Arc::new(e.clone()) as Arc<dyn ScalarField>)
                .collect(),
        )
    }

    /// θ components at a point of the tower.
    pub fn theta_at<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, ContactError> {
        Ok(self
            .theta
            .iter()
            .map(|e| e.eval(p))
            .collect::<Result<_, _>>()?)
    }

    /// dθ at a point, one derivative level below `S`.
    pub fn dtheta_at<S>(&self, p: &[S]) -> Result<AltForm<S>, ContactError>
    where
        S: FieldScalar,
        Dual<S>: FieldScalar,
    {
        Ok(exterior_derivative_at(&self.theta_field(), p)?)
    }

    /// Embedding j(p) into ambient coordinates.
    pub fn embed<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, ContactError> {
        Ok(self
            .embedding
            .iter()
            .map(|e| e.eval(p))
            .collect::<Result<_, _>>()?)
    }

    /// Jacobian Dj(p), ambient_dim × dim, entries one level below `S`.
    pub fn embedding_jacobian<S: Scalar>(&self, p: &[S]) -> Result<GMat<S>, ContactError> {
        let seeded = seed(p);
        let m = self.dim();
        let mut out = GMat::zeros(self.ambient_dim(), m);
        for (r, comp) in self.embedding.iter().enumerate() {
            let d: Dual<S> = comp.eval(&seeded)?;
            for c in 0..m {
                *out.at_mut(r, c) = d.grad_at(c);
            }
        }
        Ok(out)
    }

    /// ξ̃ evaluated at an ambient point.
    pub fn reeb_extension_at<S: Scalar>(&self, q: &[S]) -> Result<Vec<S>, ContactError> {
        Ok(self
            .reeb_extension
            .iter()
            .map(|e| e.eval(q))
            .collect::<Result<_, _>>()?)
    }

    /// The stacked Reeb system [θ_p ; (dθ)_p] as an (m+1)×m matrix over f64,
    /// with rows (θ(·), dθ(e_1, ·), …, dθ(e_m, ·)).
    fn stacked_reeb_system(&self, p: &[f64]) -> Result<DMatrix<f64>, ContactError> {
        let m = self.dim();
        let theta = self.theta_at(p)?;
        let dtheta = self.dtheta_at(p)?;
        let mut b = DMatrix::zeros(m + 1, m);
        for j in 0..m {
            b[(0, j)] = theta[j];
        }
        let a = dtheta.as_matrix();
        for i in 0..m {
            for j in 0..m {
                b[(i + 1, j)] = a[(i, j)];
            }
        }
        Ok(b)
    }

    /// Indices (into the stacked system) of the rows used for the square
    /// solve: the θ row plus m−1 independent dθ rows chosen by pivoted
    /// elimination.
    pub(crate) fn default_reeb_rows(&self, p: &[f64]) -> Result<Vec<usize>, ContactError> {
        let b = self.stacked_reeb_system(p)?;
        let m = self.dim();
        let dtheta_rows: Vec<usize> = (1..=m).collect();
        let picked = independent_rows(&b, &dtheta_rows, m - 1);
        let mut rows = vec![0];
        rows.extend(picked);
        Ok(rows)
    }

    /// The Reeb field ξ₀ at p: the unique solution of θ(ξ) = 1, dθ(ξ, ·) = 0.
    pub fn reeb_field(&self, p: &[f64]) -> Result<Vec<f64>, ContactError> {
        let b = self.stacked_reeb_system(p)?;
        let sv = b.clone().svd(false, false).singular_values;
        let (mut smin, mut smax) = (f64::INFINITY, 0.0_f64);
        for s in sv.iter() {
            smin = smin.min(*s);
            smax = smax.max(*s);
        }
        if smax == 0.0 || smin / smax < SINGULAR_RATIO {
            return Err(ContactError::SingularContact {
                point: p.to_vec(),
                sv_ratio: if smax == 0.0 { 0.0 } else { smin / smax },
            });
        }
        let rows = self.default_reeb_rows(p)?;
        let xi = self.reeb_with_rows::<f64>(p, &rows)?;
        // verify the rows left out of the square solve
        let mut worst = 0.0_f64;
        for i in 0..=self.dim() {
            let mut acc = 0.0;
            for j in 0..self.dim() {
                acc += b[(i, j)] * xi[j];
            }
            let target = if i == 0 { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
        if worst > 1e-8 {
            return Err(ContactError::SingularContact {
                point: p.to_vec(),
                sv_ratio: worst,
            });
        }
        Ok(xi)
    }

    /// Solve the square Reeb system over any tower member, with a fixed row
    /// selection (first row must be the θ row).
    pub(crate) fn reeb_with_rows<S>(&self, p: &[S], rows: &[usize]) -> Result<Vec<S>, ContactError>
    where
        S: FieldScalar,
        Dual<S>: FieldScalar,
    {
        let m = self.dim();
        assert_eq!(rows.len(), m);
        let theta = self.theta_at(p)?;
        let dtheta = self.dtheta_at(p)?;
        let mut mat: GMat<S> = GMat::zeros(m, m);
        let mut rhs = vec![S::from_f64(0.0); m];
        for (r, &row) in rows.iter().enumerate() {
            if row == 0 {
                for j in 0..m {
                    *mat.at_mut(r, j) = theta[j].clone();
                }
                rhs[r] = S::from_f64(1.0);
            } else {
                let i = row - 1;
                // dθ(e_i, e_j) with the sign conventions of AltForm
                for j in 0..m {
                    let c = if i < j {
                        dtheta.coeff(&[i, j]).clone()
                    } else if j < i {
                        -dtheta.coeff(&[j, i]).clone()
                    } else {
                        S::from_f64(0.0)
                    };
                    *mat.at_mut(r, j) = c;
                }
            }
        }
        Ok(solve_square(&mat, &rhs)?)
    }

    /// Generic Reeb evaluation reusing the f64-level row selection, so the
    /// solve is differentiable through the tower.
    pub fn reeb_at<S>(&self, p: &[S]) -> Result<Vec<S>, ContactError>
    where
        S: FieldScalar,
        Dual<S>: FieldScalar,
    {
        let base: Vec<f64> = p.iter().map(|x| x.value()).collect();
        let rows = self.default_reeb_rows(&base)?;
        self.reeb_with_rows(p, &rows)
    }

    /// Residual of the two Reeb conditions for a candidate field value.
    pub fn reeb_residual(&self, p: &[f64], xi: &[f64]) -> Result<f64, ContactError> {
        let b = self.stacked_reeb_system(p)?;
        let mut worst = 0.0_f64;
        for i in 0..b.nrows() {
            let mut acc = 0.0;
            for j in 0..b.ncols() {
                acc += b[(i, j)] * xi[j];
            }
            let target = if i == 0 { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
        Ok(worst)
    }

    /// The single top coefficient of θ ∧ (dθ)^n at p.
    pub fn contact_volume(&self, p: &[f64]) -> Result<f64, ContactError> {
        let theta = AltForm::covector(self.theta_at(p)?);
        let dtheta = self.dtheta_at(p)?;
        let top = if self.n == 0 {
            theta
        } else {
            wedge(&theta, &wedge_power(&dtheta, self.n))
        };
        let v = top.coeffs()[0];
        if v.abs() < DEGENERATE_VOLUME {
            return Err(ContactError::DegenerateContact {
                point: p.to_vec(),
                value: v,
            });
        }
        Ok(v)
    }

    /// Orthonormal basis of ker θ_p (m−1 vectors), via a Householder
    /// reflector sending θ̂ to ±e₁.
    pub fn levi_distribution(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, ContactError> {
        let theta = self.theta_at(p)?;
        let m = self.dim();
        let len = norm(&theta);
        if len < 1e-14 {
            return Err(ContactError::ZeroForm { point: p.to_vec() });
        }
        let mut v: Vec<f64> = theta.iter().map(|t| t / len).collect();
        let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += s;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        // columns 2..m of H = I − 2vvᵀ/(vᵀv) are orthonormal and ⊥ θ
        let mut basis = Vec::with_capacity(m - 1);
        for col in 1..m {
            let mut e: Vec<f64> = (0..m)
                .map(|r| {
                    let id = if r == col { 1.0 } else { 0.0 };
                    id - 2.0 * v[r] * v[col] / vv
                })
                .collect();
            // tidy tiny roundoff against θ
            let dot: f64 = e.iter().zip(&theta).map(|(a, b)| a * b).sum();
            if dot.abs() > 0.0 {
                for (x, t) in e.iter_mut().zip(&theta) {
                    *x -= dot * t / (len * len);
                }
            }
            basis.push(e);
        }
        Ok(basis)
    }

    /// Run the consistency checks on sampled chart points.
    pub fn validate(&self, samples: usize, seed_offset: u64) -> ValidationReport {
        let mut items = Vec::new();
        let two_n = self.ambient_dim();

        // ambient_J² = −I
        let j2 = self.ambient_j() * self.ambient_j() + DMatrix::<f64>::identity(two_n, two_n);
        items.push(ValidationItem::new(
            "ambient_j_squared",
            1,
            j2.amax(),
            1e-12,
            None,
        ));

        let sampler = BoxSampler::new(self.chart_box.to_vec(), seed_offset);
        let mut vol_min = f64::INFINITY;
        let mut reeb_worst = 0.0_f64;
        let mut reeb_cond_worst = 0.0_f64;
        let mut cross_worst = 0.0_f64;
        let mut failure: Option<String> = None;
        let mut worst_point = None;
        for i in 0..samples {
            let p = sampler.point(i);
            match self.contact_volume(&p) {
                Ok(v) => vol_min = vol_min.min(v.abs()),
                Err(e) => {
                    vol_min = 0.0;
                    failure.get_or_insert(e.to_string());
                    continue;
                }
            }
            let xi = match self.reeb_field(&p) {
                Ok(xi) => xi,
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                    continue;
                }
            };
            match self.reeb_residual(&p, &xi) {
                Ok(r) => reeb_cond_worst = reeb_cond_worst.max(r),
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                    continue;
                }
            }
            // pushforward vs ambient extension
            let consistency = (|| -> Result<f64, ContactError> {
                let dj = self.embedding_jacobian(&p)?;
                let push = dj.matvec(&xi);
                let q = self.embed(&p)?;
                let ext = self.reeb_extension_at(&q)?;
                Ok(push
                    .iter()
                    .zip(&ext)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max))
            })();
            match consistency {
                Ok(r) => {
                    if r > reeb_worst {
                        reeb_worst = r;
                        worst_point = Some(p.clone());
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                }
            }
            if let Some(rexprs) = &self.reeb {
                let stated: Result<Vec<f64>, _> = rexprs.iter().map(|e| e.eval(&p)).collect();
                match stated {
                    Ok(stated) => {
                        let d = stated
                            .iter()
                            .zip(&xi)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        cross_worst = cross_worst.max(d);
                    }
                    Err(e) => {
                        failure.get_or_insert(e.to_string());
                    }
                }
            }
        }
        items.push(ValidationItem {
            name: "contact_volume".into(),
            samples,
            // reciprocal residual: pass ⇔ min |volume| > DEGENERATE_VOLUME
            max_residual: if vol_min == 0.0 {
                f64::INFINITY
            } else {
                1.0 / vol_min
            },
            tolerance: 1.0 / DEGENERATE_VOLUME,
            pass: vol_min > DEGENERATE_VOLUME && failure.is_none(),
            worst_point: None,
            error: failure.clone(),
        });
        items.push(ValidationItem::new(
            "reeb_conditions",
            samples,
            reeb_cond_worst,
            1e-10,
            None,
        ));
        items.push(ValidationItem::new(
            "reeb_extension_consistency",
            samples,
            reeb_worst,
            1e-9,
            worst_point,
        ));
        if self.reeb.is_some() {
            items.push(ValidationItem::new(
                "reeb_cross_check",
                samples,
                cross_worst,
                1e-9,
                None,
            ));
        }
        ValidationReport { items }
    }
}

/// Pick `count` independent rows (by pivoted elimination) among `candidates`
/// of the matrix `b`.
fn independent_rows(b: &DMatrix<f64>, candidates: &[usize], count: usize) -> Vec<usize> {
    let cols = b.ncols();
    let mut work: Vec<(usize, Vec<f64>)> = candidates
        .iter()
        .map(|&r| (r, (0..cols).map(|j| b[(r, j)]).collect()))
        .collect();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        // row with the largest remaining entry
        let best = work
            .iter()
            .enumerate()
            .map(|(i, (_, row))| (i, row.iter().fold(0.0_f64, |m, x| m.max(x.abs()))))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((bi, mag)) = best else { break };
        if mag < 1e-13 {
            break;
        }
        let (orig, pivot_row) = work.remove(bi);
        picked.push(orig);
        // eliminate the pivot row's leading direction from the rest
        let lead = pivot_row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, _)| j)
            .unwrap();
        let pv = pivot_row[lead];
        for (_, row) in &mut work {
            let f = row[lead] / pv;
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
    }
    picked.sort_unstable();
    picked
}

/// One named residual from specification validation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationItem {
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

impl ValidationItem {
    fn new(
        name: &str,
        samples: usize,
        max_residual: f64,
        tolerance: f64,
        worst_point: Option<Vec<f64>>,
    ) -> Self {
        ValidationItem {
            name: name.into(),
            samples,
            max_residual,
            tolerance,
            pass: max_residual < tolerance,
            worst_point,
            error: None,
        }
    }
}

/// Aggregated validation outcome; failures are carried, not thrown.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub items: Vec<ValidationItem>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.items
            .iter()
            .filter(|i| i.name != "contact_volume")
            .map(|i| i.max_residual)
            .fold(0.0, f64::max)
    }

    pub fn first_failure(&self) -> Option<&ValidationItem> {
        self.items.iter().find(|i| !i.pass)
    }
}
