//! The symplectization M×ℝ in its fiber trivialization.
//!
//! A point is a chart point together with the fiber value σ, identified with
//! the covector σ·θ_p. The energy is the fiber coordinate; the two structure
//! fields are the fiber translation X (generator of α ↦ α + tθ) and the
//! lifted Reeb field ξ, and the identities ξ(E) = 0, X(E) = 1, [ξ, X] = 0
//! are checked numerically in these coordinates.

use std::sync::Arc;

use crate::contact::{ContactError, ManifoldSpec};
use crate::exterior::{
    constant_field, exterior_derivative_at, lie_bracket, AltForm, FormField, VectorField,
};
use crate::flows::{reeb_flow, FlowError, IntegratorConfig};
use crate::linalg::norm;
use crate::scalar::{
    evaluate_with_derivatives, DerivOrder, Dual, EvalError, EvalResult, FieldScalar, Scalar,
    ScalarField, D1, D2, D3,
};

/// A point (p, σ) of the trivialized symplectization.
#[derive(Debug, Clone, PartialEq)]
pub struct SympPoint {
    pub p: Vec<f64>,
    pub sigma: f64,
}

impl SympPoint {
    pub fn new(p: Vec<f64>, sigma: f64) -> Self {
        SympPoint { p, sigma }
    }

    /// Flattened (p, σ) coordinates with σ last.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.p.clone();
        c.push(self.sigma);
        c
    }
}

/// The same point in induced cotangent coordinates (x, p-vector).
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentCoords {
    pub x: Vec<f64>,
    pub pvec: Vec<f64>,
}

/// Structure fields and identity checks over a fixed specification.
#[derive(Clone)]
pub struct Symplectization {
    spec: Arc<ManifoldSpec>,
}

impl Symplectization {
    pub fn new(spec: Arc<ManifoldSpec>) -> Self {
        Symplectization { spec }
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    /// Total dimension m + 1.
    pub fn dim(&self) -> usize {
        self.spec.dim() + 1
    }

    /// E(p, σ) = σ: zero exactly on the zero section.
    pub fn energy(&self, alpha: &SympPoint) -> f64 {
        alpha.sigma
    }

    /// The fiber-translation generator ∂/∂σ in (p, σ) coordinates.
    pub fn x_theta(&self, _alpha: &SympPoint) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        *v.last_mut().unwrap() = 1.0;
        v
    }

    /// The lifted Reeb field (ξ₀(p), 0).
    pub fn xi_theta(&self, alpha: &SympPoint) -> Result<Vec<f64>, ContactError> {
        let mut v = self.spec.reeb_field(&alpha.p)?;
        v.push(0.0);
        Ok(v)
    }

    /// The flow of X: α ↦ α + t·θ_p, a pure fiber translation.
    pub fn fiber_translation(&self, alpha: &SympPoint, t: f64) -> SympPoint {
        SympPoint::new(alpha.p.clone(), alpha.sigma + t)
    }

    /// Cotangent coordinates of σ·θ_p.
    pub fn to_cotangent(&self, alpha: &SympPoint) -> Result<CotangentCoords, ContactError> {
        let theta = self.spec.theta_at(&alpha.p)?;
        Ok(CotangentCoords {
            x: alpha.p.clone(),
            pvec: theta.iter().map(|t| alpha.sigma * t).collect(),
        })
    }

    /// Recover E from cotangent coordinates as (p·v)/θ(v) for any v with
    /// θ(v) ≠ 0; here v = θ itself.
    pub fn energy_from_cotangent(&self, cot: &CotangentCoords) -> Result<f64, ContactError> {
        let theta = self.spec.theta_at(&cot.x)?;
        let denom: f64 = theta.iter().map(|t| t * t).sum();
        if denom == 0.0 {
            return Err(ContactError::ZeroForm {
                point: cot.x.clone(),
            });
        }
        let num: f64 = cot.pvec.iter().zip(&theta).map(|(p, t)| p * t).sum();
        Ok(num / denom)
    }

    /// Pushforward of ∂/∂σ to cotangent coordinates: (0, θ(x)).
    pub fn x_theta_cotangent(&self, alpha: &SympPoint) -> Result<Vec<f64>, ContactError> {
        let theta = self.spec.theta_at(&alpha.p)?;
        let mut v = vec![0.0; self.spec.dim()];
        v.extend(theta);
        Ok(v)
    }

    /// ξ as a vector field over (p, σ) coordinates, differentiable through
    /// the tower (the Reeb solve is re-run at the requested level).
    pub fn xi_theta_field(&self) -> VectorField {
        let m = self.spec.dim();
        let mut comps: Vec<Arc<dyn ScalarField>> = (0..m)
            .map(|comp| {
                Arc::new(ReebComponent {
                    spec: self.spec.clone(),
                    comp,
                }) as Arc<dyn ScalarField>
            })
            .collect();
        comps.push(Arc::new(crate::exterior::zero_field()));
        VectorField::new(m + 1, comps)
    }

    /// X as a (constant) vector field over (p, σ) coordinates.
    pub fn x_theta_field(&self) -> VectorField {
        let mut comps = vec![0.0; self.spec.dim()];
        comps.push(1.0);
        constant_field(comps)
    }

    /// Residuals of ξ(E) = 0, X(E) = 1, [ξ, X] = 0 at α.
    pub fn structure_identity_residuals(
        &self,
        alpha: &SympPoint,
    ) -> Result<[f64; 3], ContactError> {
        let coords = alpha.coords();
        let dim = self.dim();
        // dE by differentiation of the fiber projection (exact)
        let de = evaluate_with_derivatives(
            |v: &[D2]| Ok(v[dim - 1].clone()),
            &coords,
            DerivOrder::Gradient,
        )?
        .gradient
        .unwrap();
        let xi = self.xi_theta(alpha)?;
        let x = self.x_theta(alpha);
        let r1 = xi.iter().zip(&de).map(|(a, b)| a * b).sum::<f64>().abs();
        let r2 = (x.iter().zip(&de).map(|(a, b)| a * b).sum::<f64>() - 1.0).abs();
        let bracket = lie_bracket(&self.xi_theta_field(), &self.x_theta_field(), &coords)?;
        Ok([r1, r2, norm(&bracket)])
    }

    /// The leaf parametrization value (g_t(p), σ).
    pub fn foliation_point(
        &self,
        p: &[f64],
        t: f64,
        sigma: f64,
        cfg: &IntegratorConfig,
    ) -> Result<SympPoint, FlowError> {
        Ok(SympPoint::new(reeb_flow(&self.spec, p, t, cfg)?, sigma))
    }

    /// ω = d(E·π*θ) = dσ∧θ + σ·dθ at α, over (p, σ) with σ last.
    pub fn canonical_two_form(&self, alpha: &SympPoint) -> Result<AltForm<f64>, ContactError> {
        let field = self.canonical_two_form_field();
        Ok(field.at(&alpha.coords())?)
    }

    /// ω as a form field, closed by construction and differentiable once.
    pub fn canonical_two_form_field(&self) -> FormField {
        let m = self.spec.dim();
        let dim = m + 1;
        let mut comps: Vec<Arc<dyn ScalarField>> = Vec::new();
        for idx in crate::exterior::multi_indices(dim, 2) {
            let comp: Arc<dyn ScalarField> = if idx[1] == m {
                // dx_i ∧ dσ carries −θ_i (from dσ∧θ)
                Arc::new(NegThetaComponent {
                    spec: self.spec.clone(),
                    comp: idx[0],
                })
            } else {
                // chart-chart pairs carry σ·(dθ)_{ij}
                Arc::new(SigmaDThetaComponent {
                    spec: self.spec.clone(),
                    i: idx[0],
                    j: idx[1],
                })
            };
            comps.push(comp);
        }
        FormField::new(dim, 2, comps)
    }
}

struct ReebComponent {
    spec: Arc<ManifoldSpec>,
    comp: usize,
}

impl ReebComponent {
    fn eval_at<S>(&self, x: &[S]) -> EvalResult<S>
    where
        S: FieldScalar,
        Dual<S>: FieldScalar,
    {
        let m = self.spec.dim();
        let xi = self.spec.reeb_at(&x[..m]).map_err(|e| match e {
            ContactError::Eval(inner) => inner,
            _ => EvalError::NonFinite {
                context: "reeb solve",
            },
        })?;
        Ok(xi[self.comp].clone())
    }
}

impl ScalarField for ReebComponent {
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

struct NegThetaComponent {
    spec: Arc<ManifoldSpec>,
    comp: usize,
}

impl NegThetaComponent {
    fn eval_at<S: Scalar>(&self, x: &[S]) -> EvalResult<S> {
        let m = self.spec.dim();
        let theta = self.spec.theta_at(&x[..m]).map_err(|e| match e {
            ContactError::Eval(inner) => inner,
            _ => EvalError::NonFinite {
                context: "theta evaluation",
            },
        })?;
        Ok(-theta[self.comp].clone())
    }
}

impl ScalarField for NegThetaComponent {
    fn eval0(&self, x: &[f64]) -> EvalResult<f64> {
        self.eval_at(x)
    }
    fn eval1(&self, x: &[D1]) -> EvalResult<D1> {
        self.eval_at(x)
    }
    fn eval2(&self, x: &[D2]) -> EvalResult<D2> {
        self.eval_at(x)
    }
    fn eval3(&self, x: &[D3]) -> EvalResult<D3> {
        self.eval_at(x)
    }
}

struct SigmaDThetaComponent {
    spec: Arc<ManifoldSpec>,
    i: usize,
    j: usize,
}

impl SigmaDThetaComponent {
    fn eval_at<S>(&self, x: &[S]) -> EvalResult<S>
    where
        S: FieldScalar,
        Dual<S>: FieldScalar,
    {
        let m = self.spec.dim();
        let dtheta = exterior_derivative_at(&self.spec.theta_field(), &x[..m])?;
        let sigma = x[m].clone();
        Ok(sigma * dtheta.coeff(&[self.i, self.j]).clone())
    }
}

impl ScalarField for SigmaDThetaComponent {
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
