//! Parametric Hamiltonian families `H(lambda)`.

mod file;
mod oscillator;
mod su2;

pub use file::{ModelSpec, Term};
pub use oscillator::OscillatorModel;
pub use su2::{spin_matrices, Su2Model};

use crate::error::{Error, Result};
use crate::operator::{
    spectral_decompose_trusted, CMatrix, HermitianOperator, PhaseConvention, SpectralDecomposition,
};

/// A point `(lambda_1, ..., lambda_N)` in parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint(Vec<f64>);

impl ParameterPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("a parameter point needs at least one coordinate".into()));
        }
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint(format!("coordinate {i} is not finite")));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy with `coords[mu] += h`.
    pub fn shifted(&self, mu: usize, h: f64) -> Self {
        let mut c = self.0.clone();
        c[mu] += h;
        Self(c)
    }

    /// `self + s * direction`.
    pub fn displaced(&self, direction: &[f64], s: f64) -> Self {
        Self(self.0.iter().zip(direction).map(|(x, d)| x + s * d).collect())
    }

    /// Affine interpolation `(1 - t) a + t b`.
    pub fn lerp(a: &Self, b: &Self, t: f64) -> Self {
        Self(a.0.iter().zip(&b.0).map(|(x, y)| x + t * (y - x)).collect())
    }

    /// `other - self` as a displacement vector.
    pub fn delta_to(&self, other: &Self) -> Vec<f64> {
        other.0.iter().zip(&self.0).map(|(b, a)| b - a).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

impl std::ops::Index<usize> for ParameterPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<[f64; 3]> for ParameterPoint {
    fn from(c: [f64; 3]) -> Self {
        Self(c.to_vec())
    }
}

/// A smooth family of Hermitian matrices of fixed dimension.
pub trait ParametricHamiltonian: Send + Sync {
    fn dim(&self) -> usize;

    fn n_params(&self) -> usize;

    fn param_names(&self) -> Vec<String>;

    /// `H(lambda)`; implementations may assume the domain was checked.
    fn eval_unchecked(&self, p: &ParameterPoint) -> HermitianOperator;

    fn check_domain(&self, _p: &ParameterPoint) -> Result<()> {
        Ok(())
    }

    /// `dH/d lambda_mu` in closed form, when the model knows it.
    fn analytic_grad(&self, _p: &ParameterPoint) -> Option<Vec<HermitianOperator>> {
        None
    }

    /// How many of the lowest levels are trusted given the eigenpairs at `p`.
    /// Finite-dimensional families trust every level.
    fn trusted_levels(&self, _p: &ParameterPoint, _eigenvalues: &[f64], _frame: &CMatrix) -> usize {
        self.dim()
    }

    /// Period of each coordinate, if it is an angle.
    fn periods(&self) -> Vec<Option<f64>> {
        vec![None; self.n_params()]
    }
}

fn check_arity(model: &dyn ParametricHamiltonian, p: &ParameterPoint) -> Result<()> {
    if p.len() != model.n_params() {
        return Err(Error::DimensionMismatch { expected: model.n_params(), got: p.len() });
    }
    Ok(())
}

/// `H(lambda)` with arity and domain validation.
pub fn eval_h(model: &dyn ParametricHamiltonian, p: &ParameterPoint) -> Result<HermitianOperator> {
    check_arity(model, p)?;
    model.check_domain(p)?;
    Ok(model.eval_unchecked(p))
}

/// How the parameter derivatives of `H` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradScheme {
    /// Analytic when available, otherwise central differences.
    #[default]
    Auto,
    Analytic,
    CentralDifference,
}

/// Default finite-difference step for coordinate value `x`.
pub fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// `(H(lambda + h e_mu) - H(lambda - h e_mu)) / 2h`. If the stencil leaves the
/// domain the step is shrunk tenfold once before giving up.
pub fn central_difference(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    mu: usize,
    h: f64,
) -> Result<HermitianOperator> {
    let attempt = |h: f64| -> Result<HermitianOperator> {
        let plus = eval_h(model, &p.shifted(mu, h))?;
        let minus = eval_h(model, &p.shifted(mu, -h))?;
        Ok(plus.sub(&minus).scale(0.5 / h))
    };
    match attempt(h) {
        Err(Error::DomainViolation(_)) => attempt(h / 10.0),
        other => other,
    }
}

/// The `N` derivatives `dH/d lambda_mu` at `p`.
pub fn grad_h(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    scheme: GradScheme,
) -> Result<Vec<HermitianOperator>> {
    check_arity(model, p)?;
    model.check_domain(p)?;
    let analytic = match scheme {
        GradScheme::CentralDifference => None,
        GradScheme::Auto => model.analytic_grad(p),
        GradScheme::Analytic => Some(model.analytic_grad(p).ok_or_else(|| {
            Error::InvalidConfig("model provides no analytic gradient".into())
        })?),
    };
    match analytic {
        Some(g) => Ok(g),
        None => (0..model.n_params())
            .map(|mu| central_difference(model, p, mu, fd_step(p[mu])))
            .collect(),
    }
}

/// Spectral decomposition of `H(lambda)` with degeneracy checks restricted to
/// the model's trusted levels. A NaN `gap_tol` selects the default.
pub fn spectral_at(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    gap_tol: f64,
) -> Result<SpectralDecomposition> {
    spectral_at_with(model, p, gap_tol, PhaseConvention::default())
}

pub fn spectral_at_with(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    gap_tol: f64,
    convention: PhaseConvention,
) -> Result<SpectralDecomposition> {
    let h = eval_h(model, p)?;
    spectral_decompose_trusted(&h, gap_tol, convention, |values, frame| {
        model.trusted_levels(p, values, frame)
    })
}

/// Spectrum plus derivatives at one point: the input to every pointwise formula.
#[derive(Debug, Clone)]
pub struct LocalData {
    pub point: ParameterPoint,
    pub spectrum: SpectralDecomposition,
    pub grad: Vec<HermitianOperator>,
}

impl LocalData {
    pub fn at(model: &dyn ParametricHamiltonian, p: &ParameterPoint) -> Result<Self> {
        Ok(Self {
            point: p.clone(),
            spectrum: spectral_at(model, p, f64::NAN)?,
            grad: grad_h(model, p, GradScheme::Auto)?,
        })
    }
}
