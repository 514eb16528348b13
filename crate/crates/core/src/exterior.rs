//! Pointwise exterior algebra and field-level operators.
//!
//! Alternating tensors are stored densely, one coefficient per strictly
//! increasing multi-index in lexicographic order. Sign conventions, fixed once
//! and pinned by the shuffle-sum oracle in the tests: the exterior derivative
//! expands as (dω)_{jI} = Σ (−1)^{pos} ∂_j ω_I, and the interior product
//! contracts in the first argument slot.

use std::sync::Arc;

use crate::linalg::GMat;
use crate::scalar::{
    field_gradient, Dual, EvalError, EvalResult, FieldScalar, Scalar, ScalarField,
};

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Strictly increasing multi-indices of length `k` drawn from `0..dim`,
/// lexicographic order.
pub fn multi_indices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(dim, k));
    let mut idx: Vec<usize> = (0..k).collect();
    if k > dim {
        return out;
    }
    loop {
        out.push(idx.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + dim - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Rank of an increasing multi-index in the lexicographic enumeration.
fn index_rank(dim: usize, idx: &[usize]) -> usize {
    let k = idx.len();
    let mut rank = 0;
    let mut prev = 0;
    for (pos, &v) in idx.iter().enumerate() {
        for skipped in prev..v {
            rank += binomial(dim - skipped - 1, k - pos - 1);
        }
        prev = v + 1;
    }
    rank
}

/// Merge two disjoint increasing index sets, returning the permutation sign
/// and the merged set; `None` when they share an index.
fn merge_indices(a: &[usize], b: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut merged = Vec::with_capacity(a.len() + b.len());
    let mut sign = 1.0;
    let mut i = 0;
    let mut j = 0;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            merged.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            // moving b[j] past the remaining entries of a
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            merged.push(b[j]);
            j += 1;
        } else {
            return None;
        }
    }
    Some((sign, merged))
}

/// Alternating k-tensor at a point, generic over the numeric tower.
#[derive(Debug, Clone, PartialEq)]
pub struct AltForm<S = f64> {
    dim: usize,
    degree: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> AltForm<S> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(degree <= dim, "degree {degree} exceeds dimension {dim}");
        AltForm {
            dim,
            degree,
            coeffs: vec![S::from_f64(0.0); binomial(dim, degree)],
        }
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<S>) -> Self {
        assert_eq!(coeffs.len(), binomial(dim, degree));
        AltForm {
            dim,
            degree,
            coeffs,
        }
    }

    /// 1-form with the given covector components.
    pub fn covector(components: Vec<S>) -> Self {
        let dim = components.len();
        AltForm {
            dim,
            degree: 1,
            coeffs: components,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeff(&self, idx: &[usize]) -> &S {
        &self.coeffs[index_rank(self.dim, idx)]
    }

    pub fn coeff_mut(&mut self, idx: &[usize]) -> &mut S {
        &mut self.coeffs[index_rank(self.dim, idx)]
    }

    pub fn scale(&self, c: S) -> Self {
        AltForm {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        assert_eq!(self.degree, other.degree);
        AltForm {
            dim: self.dim,
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn map_value(&self) -> AltForm<f64> {
        AltForm {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.value()).collect(),
        }
    }
}

impl AltForm<f64> {
    /// l2 norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Degree-2 form as the antisymmetric matrix A with A[i][j] = ω(e_i, e_j).
    pub fn as_matrix(&self) -> nalgebra::DMatrix<f64> {
        assert_eq!(self.degree, 2);
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (rank, idx) in multi_indices(self.dim, 2).iter().enumerate() {
            m[(idx[0], idx[1])] = self.coeffs[rank];
            m[(idx[1], idx[0])] = -self.coeffs[rank];
        }
        m
    }
}

/// Wedge product; bilinear, associative, graded-anticommutative.
pub fn wedge<S: Scalar>(a: &AltForm<S>, b: &AltForm<S>) -> AltForm<S> {
    assert_eq!(a.dim, b.dim, "dimension mismatch");
    assert!(
        a.degree + b.degree <= a.dim,
        "wedge degree exceeds dimension"
    );
    let mut out: AltForm<S> = AltForm::zero(a.dim, a.degree + b.degree);
    let a_idx = multi_indices(a.dim, a.degree);
    let b_idx = multi_indices(b.dim, b.degree);
    for (ra, ia) in a_idx.iter().enumerate() {
        for (rb, ib) in b_idx.iter().enumerate() {
            if let Some((sign, merged)) = merge_indices(ia, ib) {
                let rank = index_rank(a.dim, &merged);
                out.coeffs[rank] = out.coeffs[rank].clone()
                    + a.coeffs[ra].clone() * b.coeffs[rb].clone() * S::from_f64(sign);
            }
        }
    }
    out
}

/// k-th wedge power.
pub fn wedge_power<S: Scalar>(a: &AltForm<S>, k: usize) -> AltForm<S> {
    assert!(k >= 1);
    let mut acc = a.clone();
    for _ in 1..k {
        acc = wedge(&acc, a);
    }
    acc
}

/// Evaluate the form on `k` vectors: the determinant expansion over the
/// coefficient multi-indices.
pub fn eval_form<S: Scalar>(a: &AltForm<S>, vectors: &[Vec<S>]) -> S {
    assert_eq!(vectors.len(), a.degree, "arity mismatch");
    for v in vectors {
        assert_eq!(v.len(), a.dim, "vector length mismatch");
    }
    if a.degree == 0 {
        return a.coeffs[0].clone();
    }
    let mut total = S::from_f64(0.0);
    for (rank, idx) in multi_indices(a.dim, a.degree).iter().enumerate() {
        // det of the k×k minor with rows = idx components, cols = vectors
        let k = a.degree;
        let mut minor = GMat::<S>::zeros(k, k);
        for (r, &i) in idx.iter().enumerate() {
            for (c, v) in vectors.iter().enumerate() {
                *minor.at_mut(r, c) = v[i].clone();
            }
        }
        total = total + a.coeffs[rank].clone() * det(&minor);
    }
    total
}

fn det<S: Scalar>(m: &GMat<S>) -> S {
    // Laplace expansion; k ≤ 5 in practice.
    let n = m.rows;
    match n {
        0 => S::from_f64(1.0),
        1 => m.at(0, 0).clone(),
        2 => m.at(0, 0).clone() * m.at(1, 1).clone() - m.at(0, 1).clone() * m.at(1, 0).clone(),
        _ => {
            let mut acc = S::from_f64(0.0);
            for j in 0..n {
                let mut sub = GMat::zeros(n - 1, n - 1);
                for i in 1..n {
                    let mut cc = 0;
                    for c in 0..n {
                        if c == j {
                            continue;
                        }
                        *sub.at_mut(i - 1, cc) = m.at(i, c).clone();
                        cc += 1;
                    }
                }
                let term = m.at(0, j).clone() * det(&sub);
                acc = if j % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Contraction in the first slot: (ι_v a)(w₂, …) = a(v, w₂, …).
pub fn interior_product<S: Scalar>(v: &[S], a: &AltForm<S>) -> AltForm<S> {
    assert!(a.degree >= 1, "interior product needs degree >= 1");
    assert_eq!(v.len(), a.dim);
    let mut out: AltForm<S> = AltForm::zero(a.dim, a.degree - 1);
    for (rank, idx) in multi_indices(a.dim, a.degree).iter().enumerate() {
        for (pos, &i) in idx.iter().enumerate() {
            let rest: Vec<usize> = idx.iter().copied().filter(|&j| j != i).collect();
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            let target = index_rank(a.dim, &rest);
            out.coeffs[target] = out.coeffs[target].clone()
                + v[i].clone() * a.coeffs[rank].clone() * S::from_f64(sign);
        }
    }
    out
}

/// Pullback along the linear map `l` (source → target of the form):
/// (L*a)(v…) = a(Lv…).
pub fn pullback<S: Scalar>(a: &AltForm<S>, l: &GMat<S>) -> AltForm<S> {
    assert_eq!(l.rows, a.dim, "linear map must land in the form's space");
    let src = l.cols;
    assert!(a.degree <= src, "degree exceeds source dimension");
    let mut out = AltForm::zero(src, a.degree);
    if a.degree == 0 {
        out.coeffs[0] = a.coeffs[0].clone();
        return out;
    }
    let src_idx = multi_indices(src, a.degree);
    let tgt_idx = multi_indices(a.dim, a.degree);
    for (ri, si) in src_idx.iter().enumerate() {
        let mut acc = S::from_f64(0.0);
        for (rj, tj) in tgt_idx.iter().enumerate() {
            let k = a.degree;
            let mut minor = GMat::<S>::zeros(k, k);
            for (r, &trow) in tj.iter().enumerate() {
                for (c, &scol) in si.iter().enumerate() {
                    *minor.at_mut(r, c) = l.at(trow, scol).clone();
                }
            }
            acc = acc + a.coeffs[rj].clone() * det(&minor);
        }
        out.coeffs[ri] = acc;
    }
    out
}

/// A differential form with coefficient functions over chart coordinates.
///
/// Components are erased scalar fields so the machinery accepts parsed
/// expressions and composed closures (e.g. forms whose coefficients contain a
/// pulled-back complex structure) on equal footing.
#[derive(Clone)]
pub struct FormField {
    dim: usize,
    degree: usize,
    comps: Vec<Arc<dyn ScalarField>>,
}

impl FormField {
    pub fn new(dim: usize, degree: usize, comps: Vec<Arc<dyn ScalarField>>) -> Self {
        assert_eq!(comps.len(), binomial(dim, degree));
        FormField { dim, degree, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[Arc<dyn ScalarField>] {
        &self.comps
    }

    /// Evaluate the pointwise tensor at `x`.
    pub fn at<S: FieldScalar>(&self, x: &[S]) -> EvalResult<AltForm<S>> {
        let coeffs = self
            .comps
            .iter()
            .map(|c| S::eval_field(c.as_ref(), x))
            .collect::<EvalResult<Vec<_>>>()?;
        Ok(AltForm::from_coeffs(self.dim, self.degree, coeffs))
    }
}

/// A vector field with erased component functions.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    comps: Vec<Arc<dyn ScalarField>>,
}

impl VectorField {
    pub fn new(dim: usize, comps: Vec<Arc<dyn ScalarField>>) -> Self {
        assert_eq!(comps.len(), dim);
        VectorField { dim, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Arc<dyn ScalarField>] {
        &self.comps
    }

    pub fn at<S: FieldScalar>(&self, x: &[S]) -> EvalResult<Vec<S>> {
        self.comps
            .iter()
            .map(|c| S::eval_field(c.as_ref(), x))
            .collect()
    }
}

/// Exterior derivative of `ω` at `x`, one degree up:
/// (dω)_{jI} += (−1)^{#(I < j)} ∂_j ω_I.
pub fn exterior_derivative_at<S>(omega: &FormField, x: &[S]) -> EvalResult<AltForm<S>>
where
    S: FieldScalar,
    Dual<S>: FieldScalar,
{
    let dim = omega.dim;
    let mut out: AltForm<S> = AltForm::zero(dim, omega.degree + 1);
    for (rank, idx) in multi_indices(dim, omega.degree).iter().enumerate() {
        let (_, grad) = field_gradient(omega.comps[rank].as_ref(), x)?;
        for (j, dj) in grad.into_iter().enumerate() {
            if idx.contains(&j) {
                continue;
            }
            let below = idx.iter().filter(|&&i| i < j).count();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            let mut merged = idx.clone();
            merged.push(j);
            merged.sort_unstable();
            let target = index_rank(dim, &merged);
            out.coeffs[target] = out.coeffs[target].clone() + dj * S::from_f64(sign);
        }
    }
    Ok(out)
}

/// f64 entry point for the exterior derivative.
pub fn exterior_derivative(omega: &FormField, x: &[f64]) -> EvalResult<AltForm<f64>> {
    exterior_derivative_at(omega, x)
}

/// The exterior derivative of `inner` as a form field.
///
/// Evaluating its components costs one derivative level, so it supports one
/// fewer nesting depth than its inner field.
pub fn derivative_field(inner: FormField) -> FormField {
    let dim = inner.dim;
    let degree = inner.degree + 1;
    let comps: Vec<Arc<dyn ScalarField>> = multi_indices(dim, degree)
        .into_iter()
        .map(|idx| {
            Arc::new(DerivedComponent {
                inner: inner.clone(),
                rank: index_rank(dim, &idx),
            }) as Arc<dyn ScalarField>
        })
        .collect();
    FormField::new(dim, degree, comps)
}

struct DerivedComponent {
    inner: FormField,
    rank: usize,
}

impl DerivedComponent {
    fn eval_at<S>(&self, x: &[S]) -> EvalResult<S>
    where
        S: FieldScalar,
        Dual<S>: FieldScalar,
    {
        Ok(exterior_derivative_at(&self.inner, x)?.coeffs[self.rank].clone())
    }
}

impl ScalarField for DerivedComponent {
    fn eval0(&self, x: &[f64]) -> EvalResult<f64> {
        self.eval_at(x)
    }
    fn eval1(&self, x: &[crate::scalar::D1]) -> EvalResult<crate::scalar::D1> {
        self.eval_at(x)
    }
    fn eval2(&self, x: &[crate::scalar::D2]) -> EvalResult<crate::scalar::D2> {
        self.eval_at(x)
    }
    fn eval3(&self, _x: &[crate::scalar::D3]) -> EvalResult<crate::scalar::D3> {
        Err(EvalError::DepthExceeded)
    }
}

/// Lie bracket [X,Y]^k = Σ_j (X^j ∂_j Y^k − Y^j ∂_j X^k) at `x`.
pub fn lie_bracket_at<S>(
    x_field: &VectorField,
    y_field: &VectorField,
    x: &[S],
) -> EvalResult<Vec<S>>
where
    S: FieldScalar,
    Dual<S>: FieldScalar,
{
    assert_eq!(x_field.dim, y_field.dim);
    let dim = x_field.dim;
    let mut xv = Vec::with_capacity(dim);
    let mut dx = Vec::with_capacity(dim);
    for c in &x_field.comps {
        let (v, g) = field_gradient(c.as_ref(), x)?;
        xv.push(v);
        dx.push(g);
    }
    let mut yv = Vec::with_capacity(dim);
    let mut dy = Vec::with_capacity(dim);
    for c in &y_field.comps {
        let (v, g) = field_gradient(c.as_ref(), x)?;
        yv.push(v);
        dy.push(g);
    }
    Ok((0..dim)
        .map(|k| {
            let mut acc = S::from_f64(0.0);
            for j in 0..dim {
                acc = acc + xv[j].clone() * dy[k][j].clone() - yv[j].clone() * dx[k][j].clone();
            }
            acc
        })
        .collect())
}

/// f64 entry point for the Lie bracket.
pub fn lie_bracket(
    x_field: &VectorField,
    y_field: &VectorField,
    x: &[f64],
) -> EvalResult<Vec<f64>> {
    lie_bracket_at(x_field, y_field, x)
}

/// Constant vector field (e.g. a coordinate direction).
pub fn constant_field(components: Vec<f64>) -> VectorField {
    let dim = components.len();
    let comps = components
        .into_iter()
        .map(|c| Arc::new(ConstField(c)) as Arc<dyn ScalarField>)
        .collect();
    VectorField::new(dim, comps)
}

/// The identically-zero scalar field.
pub fn zero_field() -> impl ScalarField {
    ConstField(0.0)
}

pub(crate) struct ConstField(pub f64);

impl ScalarField for ConstField {
    fn eval0(&self, _: &[f64]) -> EvalResult<f64> {
        Ok(self.0)
    }
    fn eval1(&self, _: &[crate::scalar::D1]) -> EvalResult<crate::scalar::D1> {
        Ok(Scalar::from_f64(self.0))
    }
    fn eval2(&self, _: &[crate::scalar::D2]) -> EvalResult<crate::scalar::D2> {
        Ok(Scalar::from_f64(self.0))
    }
    fn eval3(&self, _: &[crate::scalar::D3]) -> EvalResult<crate::scalar::D3> {
        Ok(Scalar::from_f64(self.0))
    }
}
