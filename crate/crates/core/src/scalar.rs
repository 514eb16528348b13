//! Forward-mode dual numbers, nested to second order.
//!
//! Every derivative in this crate flows through [`Dual`]: a value plus a dense
//! vector of tangents, where the scalar type of the tangents is itself generic.
//! Nesting `Dual<Dual<f64>>` gives exact second derivatives; one more level
//! (`D3`) is enough to differentiate quantities that are themselves built from
//! first derivatives twice (e.g. d of a form whose coefficients contain a
//! Jacobian inverse).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::DMatrix;
use thiserror::Error;

/// First-order dual over plain reals.
pub type D1 = Dual<f64>;
/// Second-order (dual-over-dual): values, gradients and Hessians.
pub type D2 = Dual<D1>;
/// Third-order, used when differentiating fields that already contain
/// one derivative of a Jacobian.
pub type D3 = Dual<D2>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error: {func} of {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("non-finite value produced by {context}")]
    NonFinite { context: &'static str },
    #[error("unbound coordinate index {index} (environment has {len})")]
    UnboundCoordinate { index: usize, len: usize },
    #[error("derivative depth exceeded for a composed field")]
    DepthExceeded,
}

pub type EvalResult<T> = Result<T, EvalError>;

/// Arithmetic shared by every member of the numeric tower.
///
/// `value` projects down to the underlying real; constants are lifted with
/// `from_f64`. All operations are total: domain violations poison the result
/// with NaN/Inf, which `all_finite` exposes so evaluators can turn it into an
/// explicit error instead of letting NaN leak into a report.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_f64(c: f64) -> Self;
    fn value(&self) -> f64;
    fn all_finite(&self) -> bool;

    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn tanh(&self) -> Self;

    /// Integer power by repeated multiplication; negative exponents divide.
    fn powi(&self, k: i32) -> Self {
        let mut acc = Self::from_f64(1.0);
        for _ in 0..k.unsigned_abs() {
            acc = acc * self.clone();
        }
        if k < 0 {
            Self::from_f64(1.0) / acc
        } else {
            acc
        }
    }
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }
    fn powi(&self, k: i32) -> Self {
        f64::powi(*self, k)
    }
}

/// A value together with its tangents in each seeded direction.
///
/// The tangent vector may be shorter than the seeding dimension; missing
/// entries are zero. Constants are represented with an empty tangent vector,
/// so they need no knowledge of how many directions are in play.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual<S> {
    pub val: S,
    pub grad: Vec<S>,
}

impl<S: Scalar> Dual<S> {
    pub fn constant(val: S) -> Self {
        Dual {
            val,
            grad: Vec::new(),
        }
    }

    /// Variable seeded in direction `dir` out of `dim`.
    pub fn variable(val: S, dir: usize, dim: usize) -> Self {
        let mut grad = vec![S::from_f64(0.0); dim];
        grad[dir] = S::from_f64(1.0);
        Dual { val, grad }
    }

    /// Tangent in direction `i`, zero when the vector is short.
    pub fn grad_at(&self, i: usize) -> S {
        self.grad
            .get(i)
            .cloned()
            .unwrap_or_else(|| S::from_f64(0.0))
    }

    fn zip_grad(a: &[S], b: &[S], f: impl Fn(S, S) -> S) -> Vec<S> {
        let n = a.len().max(b.len());
        let zero = S::from_f64(0.0);
        (0..n)
            .map(|i| {
                f(
                    a.get(i).cloned().unwrap_or_else(|| zero.clone()),
                    b.get(i).cloned().unwrap_or_else(|| zero.clone()),
                )
            })
            .collect()
    }

    /// Chain rule for a primitive with value `v` and derivative factor `d`.
    fn lift(&self, v: S, d: S) -> Self {
        Dual {
            val: v,
            grad: self.grad.iter().map(|g| g.clone() * d.clone()).collect(),
        }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual {
            val: self.val + rhs.val,
            grad: Self::zip_grad(&self.grad, &rhs.grad, |a, b| a + b),
        }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual {
            val: self.val - rhs.val,
            grad: Self::zip_grad(&self.grad, &rhs.grad, |a, b| a - b),
        }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    // (fg)' = f'g + fg'
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> Self {
        let grad = {
            let n = self.grad.len().max(rhs.grad.len());
            let zero = S::from_f64(0.0);
            (0..n)
                .map(|i| {
                    let fa = self.grad.get(i).cloned().unwrap_or_else(|| zero.clone());
                    let fb = rhs.grad.get(i).cloned().unwrap_or_else(|| zero.clone());
                    fa * rhs.val.clone() + self.val.clone() * fb
                })
                .collect()
        };
        Dual {
            val: self.val * rhs.val,
            grad,
        }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    // (f/g)' = (f'g − fg')/g²
    fn div(self, rhs: Self) -> Self {
        let g2 = rhs.val.clone() * rhs.val.clone();
        let grad = {
            let n = self.grad.len().max(rhs.grad.len());
            let zero = S::from_f64(0.0);
            (0..n)
                .map(|i| {
                    let fa = self.grad.get(i).cloned().unwrap_or_else(|| zero.clone());
                    let fb = rhs.grad.get(i).cloned().unwrap_or_else(|| zero.clone());
                    (fa * rhs.val.clone() - self.val.clone() * fb) / g2.clone()
                })
                .collect()
        };
        Dual {
            val: self.val / rhs.val,
            grad,
        }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            val: -self.val,
            grad: self.grad.into_iter().map(|g| -g).collect(),
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn from_f64(c: f64) -> Self {
        Dual::constant(S::from_f64(c))
    }
    fn value(&self) -> f64 {
        self.val.value()
    }
    fn all_finite(&self) -> bool {
        self.val.all_finite() && self.grad.iter().all(|g| g.all_finite())
    }
    fn sin(&self) -> Self {
        self.lift(self.val.sin(), self.val.cos())
    }
    fn cos(&self) -> Self {
        self.lift(self.val.cos(), -self.val.sin())
    }
    fn exp(&self) -> Self {
        let e = self.val.exp();
        self.lift(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.lift(self.val.ln(), S::from_f64(1.0) / self.val.clone())
    }
    fn sqrt(&self) -> Self {
        let r = self.val.sqrt();
        let d = S::from_f64(0.5) / r.clone();
        self.lift(r, d)
    }
    fn tanh(&self) -> Self {
        let t = self.val.tanh();
        let d = S::from_f64(1.0) - t.clone() * t.clone();
        self.lift(t, d)
    }
    fn powi(&self, k: i32) -> Self {
        // k f^{k−1} f'
        let d = S::from_f64(k as f64) * self.val.powi(k - 1);
        self.lift(self.val.powi(k), d)
    }
}

/// Seed a real point so that coordinate `i` carries tangent direction `i`.
pub fn seed<S: Scalar>(x: &[S]) -> Vec<Dual<S>> {
    let m = x.len();
    x.iter()
        .enumerate()
        .map(|(i, v)| Dual::variable(v.clone(), i, m))
        .collect()
}

/// A scalar field evaluable at each level of the numeric tower.
///
/// Monomorphic methods keep the trait object-safe; generic callers pick the
/// right one through [`FieldScalar::eval_field`]. Composed fields that shift
/// the derivative level by one implement `eval3` as `DepthExceeded`, which
/// statically bounds how deeply anything in the crate can nest.
pub trait ScalarField: Send + Sync {
    fn eval0(&self, x: &[f64]) -> EvalResult<f64>;
    fn eval1(&self, x: &[D1]) -> EvalResult<D1>;
    fn eval2(&self, x: &[D2]) -> EvalResult<D2>;
    fn eval3(&self, x: &[D3]) -> EvalResult<D3>;
}

/// Tower members at which erased scalar fields can be evaluated.
pub trait FieldScalar: Scalar {
    fn eval_field(f: &dyn ScalarField, x: &[Self]) -> EvalResult<Self>;
}

impl FieldScalar for f64 {
    fn eval_field(f: &dyn ScalarField, x: &[Self]) -> EvalResult<Self> {
        f.eval0(x)
    }
}
impl FieldScalar for D1 {
    fn eval_field(f: &dyn ScalarField, x: &[Self]) -> EvalResult<Self> {
        f.eval1(x)
    }
}
impl FieldScalar for D2 {
    fn eval_field(f: &dyn ScalarField, x: &[Self]) -> EvalResult<Self> {
        f.eval2(x)
    }
}
impl FieldScalar for D3 {
    fn eval_field(f: &dyn ScalarField, x: &[Self]) -> EvalResult<Self> {
        f.eval3(x)
    }
}

/// Value and first partials of an erased field at `x`, one derivative level up.
pub fn field_gradient<S>(f: &dyn ScalarField, x: &[S]) -> EvalResult<(S, Vec<S>)>
where
    S: FieldScalar,
    Dual<S>: FieldScalar,
{
    let seeded = seed(x);
    let out = Dual::<S>::eval_field(f, &seeded)?;
    let grad = (0..x.len()).map(|i| out.grad_at(i)).collect();
    Ok((out.val, grad))
}

/// How much of the derivative bundle a caller wants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    Value,
    Gradient,
    Hessian,
}

/// Exact value/gradient/Hessian bundle of a composed scalar function.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Evaluate `f` at `x` with exact derivatives up to `order`.
///
/// Seeding is dense: all coordinates carry their direction at once, nested one
/// level deep, so the Hessian falls out of a single evaluation. Non-finite
/// intermediates surface as an error rather than NaN entries.
pub fn evaluate_with_derivatives<F>(f: F, x: &[f64], order: DerivOrder) -> EvalResult<Derivatives>
where
    F: FnOnce(&[D2]) -> EvalResult<D2>,
{
    let m = x.len();
    let args: Vec<D2> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Dual {
            val: Dual::variable(v, i, m),
            grad: {
                let mut g = vec![D1::from_f64(0.0); m];
                g[i] = D1::from_f64(1.0);
                g
            },
        })
        .collect();
    let out = f(&args)?;
    if !out.all_finite() {
        return Err(EvalError::NonFinite {
            context: "derivative evaluation",
        });
    }
    let value = out.val.val;
    let gradient = (order != DerivOrder::Value).then(|| {
        (0..m)
            .map(|i| out.val.grad_at(i).value())
            .collect::<Vec<_>>()
    });
    let hessian = (order == DerivOrder::Hessian)
        .then(|| DMatrix::from_fn(m, m, |i, j| out.grad_at(i).grad_at(j).value()));
    Ok(Derivatives {
        value,
        gradient,
        hessian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut hi = x.to_vec();
                let mut lo = x.to_vec();
                hi[i] += h;
                lo[i] -= h;
                (f(&hi) - f(&lo)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn square_has_polynomial_derivatives() {
        let d = evaluate_with_derivatives(
            |x| Ok(x[0].clone() * x[0].clone()),
            &[3.0],
            DerivOrder::Hessian,
        )
        .unwrap();
        assert_eq!(d.value, 9.0);
        assert_eq!(d.gradient.unwrap(), vec![6.0]);
        assert_eq!(d.hessian.unwrap()[(0, 0)], 2.0);
    }

    #[test]
    fn identity_is_linear() {
        for &x in &[0.0, -2.5, 17.0] {
            let d =
                evaluate_with_derivatives(|v| Ok(v[0].clone()), &[x], DerivOrder::Hessian).unwrap();
            assert_eq!(d.value, x);
            assert_eq!(d.gradient.unwrap(), vec![1.0]);
            assert_eq!(d.hessian.unwrap()[(0, 0)], 0.0);
        }
    }

    #[test]
    fn sin_times_y_matches_finite_differences() {
        let f2 = |v: &[D2]| Ok(v[0].sin() * v[1].clone());
        let d = evaluate_with_derivatives(f2, &[0.0, 2.0], DerivOrder::Hessian).unwrap();
        assert_eq!(d.value, 0.0);
        let grad = d.gradient.unwrap();
        let fd = fd_gradient(|v| v[0].sin() * v[1], &[0.0, 2.0], 1e-5);
        for (g, f) in grad.iter().zip(&fd) {
            assert!((g - f).abs() / (1.0 + g.abs()) < 1e-6, "ad {g} vs fd {f}");
        }
        assert_eq!(grad[0], 2.0);
        assert_eq!(grad[1], 0.0);
    }

    #[test]
    fn hessian_is_symmetric() {
        let f = |v: &[D2]| Ok(v[0].clone() * v[1].sin() + (v[1].clone() * v[0].exp()).tanh());
        let d = evaluate_with_derivatives(f, &[0.7, -0.3], DerivOrder::Hessian).unwrap();
        let h = d.hessian.unwrap();
        let asym = (h[(0, 1)] - h[(1, 0)]).abs();
        assert!(asym <= 1e-15 * (1.0 + h[(0, 1)].abs()), "asymmetry {asym}");
    }

    #[test]
    fn product_rule_is_exact_to_ulps() {
        // Evaluate f, g, and f·g separately and compare against the Leibniz
        // combination of the parts.
        let x = [1.3, -0.4];
        let f = |v: &[D2]| Ok(v[0].sin() + v[1].clone() * v[1].clone());
        let g = |v: &[D2]| Ok(v[1].exp() * v[0].clone());
        let df = evaluate_with_derivatives(f, &x, DerivOrder::Gradient).unwrap();
        let dg = evaluate_with_derivatives(g, &x, DerivOrder::Gradient).unwrap();
        let dfg = evaluate_with_derivatives(
            |v| {
                let a = v[0].sin() + v[1].clone() * v[1].clone();
                let b = v[1].exp() * v[0].clone();
                Ok(a * b)
            },
            &x,
            DerivOrder::Gradient,
        )
        .unwrap();
        let gf = df.gradient.unwrap();
        let gg = dg.gradient.unwrap();
        let gfg = dfg.gradient.unwrap();
        for i in 0..2 {
            let leibniz = gf[i] * dg.value + df.value * gg[i];
            let diff = (gfg[i] - leibniz).abs();
            assert!(
                diff <= 4.0 * f64::EPSILON * leibniz.abs().max(1.0),
                "{diff}"
            );
        }
    }

    #[test]
    fn log_of_negative_is_poisoned_and_caught() {
        let err = evaluate_with_derivatives(|v| Ok(v[0].ln()), &[-1.0], DerivOrder::Gradient);
        assert!(matches!(err, Err(EvalError::NonFinite { .. })));
    }

    #[test]
    fn nested_seeding_carries_second_derivatives() {
        // Seed both levels at x = 0.5; ∂(x³) = 3x² then arrives as a dual
        // carrying its own derivative 6x.
        let arg = D2 {
            val: D1::variable(0.5, 0, 1),
            grad: vec![D1::from_f64(1.0)],
        };
        let cube = arg.clone() * arg.clone() * arg;
        let dcube = cube.grad_at(0);
        assert!((dcube.val - 0.75).abs() < 1e-15);
        assert!((dcube.grad_at(0) - 3.0).abs() < 1e-15);
    }
}
