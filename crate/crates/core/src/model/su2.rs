use std::f64::consts::TAU;

use super::{ParameterPoint, ParametricHamiltonian};
use crate::error::{Error, Result};
use crate::operator::{c, CMatrix, HermitianOperator};

/// Angular-momentum matrices `(J_x, J_y, J_z)` for spin `two_l / 2`, in the
/// basis `|l, m>` ordered by descending `m`.
pub fn spin_matrices(two_l: u32) -> [HermitianOperator; 3] {
    let l = two_l as f64 / 2.0;
    let n = two_l as usize + 1;
    let m_of = |k: usize| l - k as f64;
    let mut raise = CMatrix::zeros(n, n);
    for k in 1..n {
        let m = m_of(k);
        raise[(k - 1, k)] = c((l * (l + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower).scale(0.5);
    let jy = (&raise - &lower) * c(0.0, -0.5);
    let jz = CMatrix::from_fn(n, n, |i, j| if i == j { c(m_of(i), 0.0) } else { c(0.0, 0.0) });
    [
        HermitianOperator::hermitian_part(&jx),
        HermitianOperator::hermitian_part(&jy),
        HermitianOperator::hermitian_part(&jz),
    ]
}

/// Spin in a magnetic field, `H = B mu (J . n)`, with spherical parameters
/// `(B, theta, phi)`.
#[derive(Debug, Clone)]
pub struct Su2Model {
    two_l: u32,
    coupling: f64,
    j: [HermitianOperator; 3],
}

impl Su2Model {
    /// Spin `l = two_l / 2` with coupling `mu`.
    pub fn new(two_l: u32, coupling: f64) -> Result<Self> {
        if two_l == 0 {
            return Err(Error::InvalidConfig("spin l must be at least 1/2".into()));
        }
        if !coupling.is_finite() || coupling == 0.0 {
            return Err(Error::InvalidConfig("coupling mu must be finite and non-zero".into()));
        }
        Ok(Self { two_l, coupling, j: spin_matrices(two_l) })
    }

    /// Spin-`l` model from a half-integer value such as `0.5` or `1.5`.
    pub fn from_spin(l: f64, coupling: f64) -> Result<Self> {
        let two_l = (2.0 * l).round();
        if (2.0 * l - two_l).abs() > 1e-12 || two_l < 1.0 {
            return Err(Error::InvalidConfig(format!("l = {l} is not a positive half-integer")));
        }
        Self::new(two_l as u32, coupling)
    }

    pub fn l(&self) -> f64 {
        self.two_l as f64 / 2.0
    }

    pub fn two_l(&self) -> u32 {
        self.two_l
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn j(&self) -> &[HermitianOperator; 3] {
        &self.j
    }

    /// Magnetic quantum number of level `n` (ascending energy) when `B mu > 0`.
    pub fn m_of_level(&self, n: usize) -> f64 {
        n as f64 - self.l()
    }

    fn dot(&self, v: [f64; 3]) -> HermitianOperator {
        let m = self.j[0].matrix().scale(v[0])
            + self.j[1].matrix().scale(v[1])
            + self.j[2].matrix().scale(v[2]);
        HermitianOperator::hermitian_part(&m)
    }

    /// `(J_n, J_theta, J_phi)`: projections of `J` on the spherical unit vectors.
    pub fn spherical_triple(&self, theta: f64, phi: f64) -> [HermitianOperator; 3] {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [
            self.dot([st * cp, st * sp, ct]),
            self.dot([ct * cp, ct * sp, -st]),
            self.dot([-sp, cp, 0.0]),
        ]
    }
}

impl ParametricHamiltonian for Su2Model {
    fn dim(&self) -> usize {
        self.two_l as usize + 1
    }

    fn n_params(&self) -> usize {
        3
    }

    fn param_names(&self) -> Vec<String> {
        vec!["B".into(), "theta".into(), "phi".into()]
    }

    fn eval_unchecked(&self, p: &ParameterPoint) -> HermitianOperator {
        let [jn, _, _] = self.spherical_triple(p[1], p[2]);
        jn.scale(p[0] * self.coupling)
    }

    fn analytic_grad(&self, p: &ParameterPoint) -> Option<Vec<HermitianOperator>> {
        let (b, theta, phi) = (p[0], p[1], p[2]);
        let [jn, jt, jp] = self.spherical_triple(theta, phi);
        Some(vec![
            jn.scale(self.coupling),
            jt.scale(b * self.coupling),
            jp.scale(b * self.coupling * theta.sin()),
        ])
    }

    fn periods(&self) -> Vec<Option<f64>> {
        vec![None, None, Some(TAU)]
    }
}
