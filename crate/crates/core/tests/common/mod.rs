use adiabatic_core::model::{ParameterPoint, ParametricHamiltonian};
use adiabatic_core::operator::{expm_i, hermitize, CMatrix, HermitianOperator, UnitaryOperator};
use num_complex::Complex64;
use rand::Rng;

pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> HermitianOperator {
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    hermitize(&(&m + m.adjoint()).scale(0.5 * scale)).unwrap().operator
}

/// `U(lambda) = exp(i [G_0 + sum_mu sin(lambda_mu) G_mu])`.
pub struct SmoothGauge {
    g0: HermitianOperator,
    g: Vec<HermitianOperator>,
}

impl SmoothGauge {
    pub fn random(rng: &mut impl Rng, n: usize, n_params: usize) -> Self {
        Self {
            g0: random_hermitian(rng, n, 1.0),
            g: (0..n_params).map(|_| random_hermitian(rng, n, 0.5)).collect(),
        }
    }

    pub fn at(&self, p: &ParameterPoint) -> UnitaryOperator {
        let gen = self.g.iter().enumerate().fold(self.g0.clone(), |acc, (mu, g)| acc.add(&g.scale(p[mu].sin())));
        expm_i(&gen).unwrap()
    }

    pub fn derivative(&self, p: &ParameterPoint) -> Vec<CMatrix> {
        let h = 1e-5;
        (0..p.len())
            .map(|mu| (self.at(&p.shifted(mu, h)).matrix() - self.at(&p.shifted(mu, -h)).matrix()).scale(0.5 / h))
            .collect()
    }
}

pub struct Gauged<'a> {
    pub inner: &'a dyn ParametricHamiltonian,
    pub gauge: &'a SmoothGauge,
}

impl ParametricHamiltonian for Gauged<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    fn param_names(&self) -> Vec<String> {
        self.inner.param_names()
    }

    fn eval_unchecked(&self, p: &ParameterPoint) -> HermitianOperator {
        self.inner.eval_unchecked(p).conjugate_by(&self.gauge.at(p))
    }
}
