use super::{eval_h, ParameterPoint, ParametricHamiltonian};
use crate::error::{Error, Result};
use crate::operator::{c, eigen_raw, CMatrix, HermitianOperator};

/// Residual below which a truncated eigenpair counts as an eigenpair of the
/// untruncated oscillator (relative to `1 + |E_n|`).
pub const TRUST_RESIDUAL_TOL: f64 = 1e-9;

/// Generalized oscillator `H = (X q^2 + Y (pq + qp) + Z p^2) / 2` in a
/// truncated Fock basis, parameters `(X, Y, Z)`.
///
/// The quadratic operators are stored as exact compressions onto the first
/// `nmax` Fock states (not as products of truncated `q` and `p`, which would
/// corrupt the top of the spectrum and push spurious levels into the middle).
/// Only a leading block of levels is trusted; the block is certified per point
/// from the residual the truncated eigenvectors leave outside the basis.
#[derive(Debug, Clone)]
pub struct OscillatorModel {
    nmax: usize,
    buffer: usize,
    q: CMatrix,
    p: CMatrix,
    q2: HermitianOperator,
    p2: HermitianOperator,
    qp_sym: HermitianOperator,
}

impl OscillatorModel {
    pub const DEFAULT_NMAX: usize = 60;
    pub const DEFAULT_BUFFER: usize = 20;

    pub fn new(nmax: usize, buffer: usize) -> Result<Self> {
        if nmax < buffer + 2 {
            return Err(Error::InvalidConfig(format!(
                "Fock truncation {nmax} leaves no trusted levels with buffer {buffer}"
            )));
        }
        let n = nmax;
        let sqrt = |x: usize| (x as f64).sqrt();
        let mut a = CMatrix::zeros(n, n);
        let mut a2 = CMatrix::zeros(n, n);
        for k in 1..n {
            a[(k - 1, k)] = c(sqrt(k), 0.0);
        }
        for k in 2..n {
            a2[(k - 2, k)] = c(sqrt(k * (k - 1)), 0.0);
        }
        let ad = a.adjoint();
        let ad2 = a2.adjoint();
        let number = CMatrix::from_fn(n, n, |i, j| c(if i == j { i as f64 } else { 0.0 }, 0.0));
        let id = CMatrix::identity(n, n);
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let q = (&a + &ad).scale(r2);
        let p = (&ad - &a) * c(0.0, r2);
        let q2 = (&a2 + &ad2 + number.scale(2.0) + &id).scale(0.5);
        let p2 = (number.scale(2.0) + &id - &a2 - &ad2).scale(0.5);
        let qp_sym = (&ad2 - &a2) * c(0.0, 1.0);
        let model = Self {
            nmax,
            buffer,
            q,
            p,
            q2: HermitianOperator::hermitian_part(&q2),
            p2: HermitianOperator::hermitian_part(&p2),
            qp_sym: HermitianOperator::hermitian_part(&qp_sym),
        };
        let drift = model.eigenvalue_drift(&ParameterPoint::from([1.0, 0.0, 1.0]))?;
        if drift > 1e-8 {
            return Err(Error::InvalidConfig(format!("truncated oscillator fails startup drift check: {drift:.3e}")));
        }
        Ok(model)
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn buffer(&self) -> usize {
        self.buffer
    }

    /// Upper bound on trusted levels, `nmax - buffer`.
    pub fn max_trust(&self) -> usize {
        self.nmax - self.buffer
    }

    /// Truncated position matrix.
    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    /// Truncated momentum matrix.
    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    /// Compressions of `q^2`, `p^2` and `qp + pq`.
    pub fn quadratics(&self) -> [&HermitianOperator; 3] {
        [&self.q2, &self.p2, &self.qp_sym]
    }

    /// `omega = sqrt(ZX - Y^2)`.
    pub fn omega(p: &ParameterPoint) -> f64 {
        (p[0] * p[2] - p[1] * p[1]).sqrt()
    }

    /// Norm of `(H - E_n)|n>` for the infinite oscillator, per truncated level.
    pub fn leak_residuals(&self, p: &ParameterPoint, frame: &CMatrix) -> Vec<f64> {
        let n = self.nmax;
        let coeff = c(p[0] - p[2], 2.0 * p[1]).norm() / 4.0;
        let w1 = ((n - 1) as f64 * n as f64).sqrt();
        let w2 = (n as f64 * (n + 1) as f64).sqrt();
        (0..frame.ncols())
            .map(|k| {
                let v1 = frame[(n - 2, k)].norm();
                let v2 = frame[(n - 1, k)].norm();
                coeff * ((w1 * v1).powi(2) + (w2 * v2).powi(2)).sqrt()
            })
            .collect()
    }

    /// Largest `|E_n - omega (n + 1/2)|` over the trusted levels at `p`.
    pub fn eigenvalue_drift(&self, p: &ParameterPoint) -> Result<f64> {
        let h = eval_h(self, p)?;
        let (values, frame) = eigen_raw(h.matrix());
        let trusted = self.trusted_levels(p, &values, &frame);
        let w = Self::omega(p);
        Ok(values[..trusted]
            .iter()
            .enumerate()
            .fold(0.0_f64, |acc, (n, e)| acc.max((e - w * (n as f64 + 0.5)).abs())))
    }
}

impl ParametricHamiltonian for OscillatorModel {
    fn dim(&self) -> usize {
        self.nmax
    }

    fn n_params(&self) -> usize {
        3
    }

    fn param_names(&self) -> Vec<String> {
        vec!["X".into(), "Y".into(), "Z".into()]
    }

    fn eval_unchecked(&self, p: &ParameterPoint) -> HermitianOperator {
        let m = self.q2.matrix().scale(0.5 * p[0])
            + self.qp_sym.matrix().scale(0.5 * p[1])
            + self.p2.matrix().scale(0.5 * p[2]);
        HermitianOperator::hermitian_part(&m)
    }

    fn check_domain(&self, p: &ParameterPoint) -> Result<()> {
        let det = p[0] * p[2] - p[1] * p[1];
        if p[0] > 0.0 && det > 0.0 {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!(
                "bound states need X > 0 and ZX - Y^2 > 0 (got X = {}, ZX - Y^2 = {det})",
                p[0]
            )))
        }
    }

    fn analytic_grad(&self, _p: &ParameterPoint) -> Option<Vec<HermitianOperator>> {
        Some(vec![self.q2.scale(0.5), self.qp_sym.scale(0.5), self.p2.scale(0.5)])
    }

    fn trusted_levels(&self, p: &ParameterPoint, eigenvalues: &[f64], frame: &CMatrix) -> usize {
        let residuals = self.leak_residuals(p, frame);
        let certified = residuals
            .iter()
            .zip(eigenvalues)
            .take_while(|(r, e)| **r <= TRUST_RESIDUAL_TOL * (1.0 + e.abs()))
            .count();
        certified.min(self.max_trust())
    }
}
