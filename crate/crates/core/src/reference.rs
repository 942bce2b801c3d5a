use std::f64::consts::{PI, TAU};

use crate::connection::ConnectionOneForm;
use crate::curvature::CurvatureTwoForm;
use crate::error::{Error, Result};
use crate::model::{ParameterPoint, ParametricHamiltonian, Su2Model, OscillatorModel};
use crate::operator::{CMatrix, HermitianOperator};

/// Closed forms for the spin model `H = B mu (J . n)`.
#[derive(Debug, Clone)]
pub struct Su2Reference {
    model: Su2Model,
}

impl Su2Reference {
    pub fn new(two_l: u32) -> Result<Self> {
        Ok(Self { model: Su2Model::new(two_l, 1.0)? })
    }

    pub fn from_spin(l: f64) -> Result<Self> {
        Ok(Self { model: Su2Model::from_spin(l, 1.0)? })
    }

    pub fn l(&self) -> f64 {
        self.model.l()
    }

    fn check_chart(theta: f64) -> Result<()> {
        if theta > 0.0 && theta < PI {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!("theta = {theta} is a pole of the spherical chart")))
        }
    }

    /// `(A_B, A_theta, A_phi) = (0, -J_phi, sin(theta) J_theta)`.
    pub fn connection(&self, p: &ParameterPoint) -> Result<ConnectionOneForm> {
        let theta = p[1];
        Self::check_chart(theta)?;
        let [jn, jt, jp] = self.model.spherical_triple(theta, p[2]);
        Ok(ConnectionOneForm {
            components: vec![HermitianOperator::zeros(jn.dim()), jp.scale(-1.0), jt.scale(theta.sin())],
            base_point: Some(p.clone()),
        })
    }

    /// `F_{theta phi} = -sin(theta) J_n`; every component involving `B` vanishes.
    pub fn curvature(&self, p: &ParameterPoint) -> Result<CurvatureTwoForm> {
        let theta = p[1];
        Self::check_chart(theta)?;
        let [jn, _, _] = self.model.spherical_triple(theta, p[2]);
        let zero = HermitianOperator::zeros(jn.dim());
        Ok(CurvatureTwoForm {
            n_params: 3,
            components: vec![((0, 1), zero.clone()), ((0, 2), zero), ((1, 2), jn.scale(-theta.sin()))],
            base_point: p.clone(),
        })
    }

    /// `W^(m)_{theta phi} = -m sin(theta)`.
    pub fn berry_curvature(m: f64, theta: f64) -> f64 {
        -m * theta.sin()
    }

    /// Magnetic quantum numbers in ascending-energy order for `B mu > 0`.
    pub fn m_values(&self) -> Vec<f64> {
        (0..self.model.dim()).map(|n| self.model.m_of_level(n)).collect()
    }

    /// Holonomy phases `-m Omega` of the geodesic triangle enclosing solid
    /// angle `omega`, wrapped to `(-pi, pi]`, in the order of [`Self::m_values`].
    pub fn triangle_phases(&self, omega: f64) -> Result<Vec<f64>> {
        if !(omega > 0.0 && omega < TAU) {
            return Err(Error::InvalidConfig(format!("triangle solid angle {omega} outside (0, 2 pi)")));
        }
        Ok(self.m_values().into_iter().map(|m| wrap(-m * omega)).collect())
    }
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

pub fn su2_analytic_connection(l: f64, p: &ParameterPoint) -> Result<ConnectionOneForm> {
    Su2Reference::from_spin(l)?.connection(p)
}

pub fn su2_triangle_phases(l: f64, omega: f64) -> Result<Vec<f64>> {
    Su2Reference::from_spin(l)?.triangle_phases(omega)
}

/// Closed forms for `H = (X q^2 + Y (pq + qp) + Z p^2) / 2`, written through
/// the normal-mode pair
///
/// `Q = (r q - p / r) s / sqrt 2`, `P = (r q + p / r) / (s sqrt 2)`,
///
/// with `r = (X/Z)^(1/4)` and `s = ((sqrt(XZ) - Y) / (sqrt(XZ) + Y))^(1/4)`, so
/// that `H = omega (Q^2 + P^2) / 2`. Quadratics in `Q, P` are assembled from the
/// model's exact compressions of `q^2`, `p^2` and `qp + pq`.
#[derive(Debug, Clone, Copy)]
pub struct OscillatorReference<'a> {
    model: &'a OscillatorModel,
}

/// Certified coefficient `c` in `A_Y = c sqrt(XZ) / omega^2 (QP + PQ)`.
pub const A_Y_COEFFICIENT: f64 = -0.25;
/// Coefficient printed in the closed-form display of `A_Y`.
pub const A_Y_DISPLAYED_COEFFICIENT: f64 = 0.125;
/// Certified coefficient `c` in `<n|F|n> = c (n + 1/2) / omega^3 {X, Z, Y}`.
pub const CURVATURE_COEFFICIENT: f64 = -0.25;
/// Coefficient printed in the closed-form display of the curvature.
pub const CURVATURE_DISPLAYED_COEFFICIENT: f64 = 0.125;

/// `(QP + PQ)`, `Q^2 - P^2` and `Q^2 + P^2` at one point.
#[derive(Debug, Clone)]
pub struct NormalModeQuadratics {
    pub qp_sym: HermitianOperator,
    pub q2_minus_p2: HermitianOperator,
    pub q2_plus_p2: HermitianOperator,
    pub omega: f64,
}

impl<'a> OscillatorReference<'a> {
    pub fn new(model: &'a OscillatorModel) -> Self {
        Self { model }
    }

    /// Normal-mode quadratics at `p`.
    pub fn quadratics(&self, p: &ParameterPoint) -> Result<NormalModeQuadratics> {
        self.model.check_domain(p)?;
        let (x, y, z) = (p[0], p[1], p[2]);
        let root = (x * z).sqrt();
        let r = (x / z).sqrt().sqrt();
        let s = ((root - y) / (root + y)).sqrt().sqrt();
        let k = std::f64::consts::FRAC_1_SQRT_2;
        // Q = a_q q + a_p p, P = b_q q + b_p p
        let (a_q, a_p) = (k * r * s, -k * s / r);
        let (b_q, b_p) = (k * r / s, k / (r * s));
        let [q2, p2, qp] = self.model.quadratics();
        let combo = |cq: f64, cp: f64, cx: f64| -> HermitianOperator {
            q2.scale(cq).add(&p2.scale(cp)).add(&qp.scale(cx))
        };
        let qq = combo(a_q * a_q, a_p * a_p, a_q * a_p);
        let pp = combo(b_q * b_q, b_p * b_p, b_q * b_p);
        Ok(NormalModeQuadratics {
            qp_sym: combo(2.0 * a_q * b_q, 2.0 * a_p * b_p, a_q * b_p + a_p * b_q),
            q2_minus_p2: qq.sub(&pp),
            q2_plus_p2: qq.add(&pp),
            omega: OscillatorModel::omega(p),
        })
    }

    /// `A_X = -sqrt(Z/X) / (8 w^2) [w (Q^2 - P^2) - Y (QP + PQ)]`,
    /// `A_Y = -sqrt(XZ) / (4 w^2) (QP + PQ)`,
    /// `A_Z = sqrt(X/Z) / (8 w^2) [w (Q^2 - P^2) + Y (QP + PQ)]`.
    pub fn connection(&self, p: &ParameterPoint) -> Result<ConnectionOneForm> {
        let nq = self.quadratics(p)?;
        let (x, y, z, w) = (p[0], p[1], p[2], nq.omega);
        let w2 = w * w;
        let rot = nq.q2_minus_p2.scale(w);
        let a_x = rot.sub(&nq.qp_sym.scale(y)).scale(-(z / x).sqrt() / (8.0 * w2));
        let a_y = nq.qp_sym.scale(A_Y_COEFFICIENT * (x * z).sqrt() / w2);
        let a_z = rot.add(&nq.qp_sym.scale(y)).scale((x / z).sqrt() / (8.0 * w2));
        Ok(ConnectionOneForm { components: vec![a_x, a_y, a_z], base_point: Some(p.clone()) })
    }

    /// `F = c H / w^4 [X dY^dZ + Z dX^dY + Y dZ^dX]` with `c` = [`CURVATURE_COEFFICIENT`].
    pub fn curvature(&self, p: &ParameterPoint) -> Result<CurvatureTwoForm> {
        let nq = self.quadratics(p)?;
        let w = nq.omega;
        let h = nq.q2_plus_p2.scale(0.5 * w);
        let f = |coef: f64| h.scale(CURVATURE_COEFFICIENT * coef / w.powi(4));
        Ok(CurvatureTwoForm {
            n_params: 3,
            components: vec![((0, 1), f(p[2])), ((0, 2), f(-p[1])), ((1, 2), f(p[0]))],
            base_point: p.clone(),
        })
    }

    /// `<n|F_{mu nu}|n>` from the certified closed form.
    pub fn berry_curvature(p: &ParameterPoint, n: usize, mu: usize, nu: usize) -> f64 {
        let w = OscillatorModel::omega(p);
        let weight = match (mu, nu) {
            (1, 2) => p[0],
            (2, 1) => -p[0],
            (0, 1) => p[2],
            (1, 0) => -p[2],
            (2, 0) => p[1],
            (0, 2) => -p[1],
            _ => 0.0,
        };
        CURVATURE_COEFFICIENT * (n as f64 + 0.5) * weight / w.powi(3)
    }

    /// `sp(2, R)` generators `(K_0, K_1, K_2)` = `((Q^2 + P^2)/4, (Q^2 - P^2)/4, -(QP + PQ)/4)`.
    pub fn sp2_generators(&self, p: &ParameterPoint) -> Result<[HermitianOperator; 3]> {
        let nq = self.quadratics(p)?;
        Ok([nq.q2_plus_p2.scale(0.25), nq.q2_minus_p2.scale(0.25), nq.qp_sym.scale(-0.25)])
    }
}

pub fn oscillator_analytic_connection(model: &OscillatorModel, p: &ParameterPoint) -> Result<ConnectionOneForm> {
    OscillatorReference::new(model).connection(p)
}

pub fn oscillator_analytic_curvature(model: &OscillatorModel, p: &ParameterPoint) -> Result<CurvatureTwoForm> {
    OscillatorReference::new(model).curvature(p)
}

/// Largest entry-wise difference of `a` and `b` on the leading `k` levels of `frame`.
pub fn block_distance(frame: &CMatrix, a: &CMatrix, b: &CMatrix, k: usize) -> f64 {
    let d = frame.adjoint() * (a - b) * frame;
    d.view((0, 0), (k, k)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::connection_at;
    use crate::curvature::{berry_curvature_at, yang_mills_curvature};
    use crate::model::{eval_h, spectral_at};
    use crate::operator::{c, commutator, pauli};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn osc() -> OscillatorModel {
        OscillatorModel::new(OscillatorModel::DEFAULT_NMAX, OscillatorModel::DEFAULT_BUFFER).unwrap()
    }

    #[test]
    fn su2_spin_half_components_at_phi_zero() {
        let r = Su2Reference::new(1).unwrap();
        let theta: f64 = 0.8;
        let a = r.connection(&ParameterPoint::from([1.0, theta, 0.0])).unwrap();
        let [sx, sy, sz] = pauli();
        assert!(a.components[0].norm() == 0.0);
        assert!((a.components[1].matrix() + sy.scale(0.5).matrix()).norm() < 1e-15);
        let sigma_theta = sx.scale(theta.cos()).sub(&sz.scale(theta.sin()));
        assert!((a.components[2].matrix() - sigma_theta.scale(0.5 * theta.sin()).matrix()).norm() < 1e-15);
    }

    #[test]
    fn su2_matches_spectral_connection() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for two_l in 1..=3 {
            let model = Su2Model::new(two_l, 1.0).unwrap();
            let r = Su2Reference::new(two_l).unwrap();
            for _ in 0..50 {
                let p = ParameterPoint::from([rng.gen_range(0.2..3.0), rng.gen_range(0.05..3.09), rng.gen_range(-PI..PI)]);
                let num = connection_at(&model, &p).unwrap();
                let exact = r.connection(&p).unwrap();
                for (a, b) in num.components.iter().zip(&exact.components) {
                    assert!((a.matrix() - b.matrix()).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn su2_pole_is_rejected() {
        let r = Su2Reference::new(1).unwrap();
        assert!(r.connection(&ParameterPoint::from([1.0, 0.0, 0.0])).is_err());
        assert!(r.curvature(&ParameterPoint::from([1.0, PI, 0.0])).is_err());
    }

    #[test]
    fn su2_triangle_phase_table() {
        let p = su2_triangle_phases(0.5, PI / 2.0).unwrap();
        assert!((p[0] - PI / 4.0).abs() < 1e-15 && (p[1] + PI / 4.0).abs() < 1e-15);
        let p = su2_triangle_phases(1.0, PI / 2.0).unwrap();
        for (a, b) in p.iter().zip([PI / 2.0, 0.0, -PI / 2.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(su2_triangle_phases(1.5, 1e-300).unwrap().iter().all(|x| x.abs() < 1e-290));
        assert!(su2_triangle_phases(0.5, 0.0).is_err());
    }

    #[test]
    fn su2_curvature_matches_numerics() {
        for two_l in 1..=3 {
            let model = Su2Model::new(two_l, 1.0).unwrap();
            let r = Su2Reference::new(two_l).unwrap();
            let p = ParameterPoint::from([1.2, 1.0, 0.4]);
            let f = yang_mills_curvature(&model, &p, None).unwrap();
            let exact = r.curvature(&p).unwrap();
            for (mu, nu) in [(0, 1), (0, 2), (1, 2)] {
                let d = f.get(mu, nu).unwrap().sub(&exact.get(mu, nu).unwrap());
                assert!(d.norm() < 1e-6, "{mu}{nu}: {}", d.norm());
            }
            let w = berry_curvature_at(&model, &p).unwrap();
            for (n, m) in r.m_values().into_iter().enumerate() {
                assert!((w.get(n, 1, 2) - Su2Reference::berry_curvature(m, 1.0)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn su2_spherical_algebra() {
        for two_l in 1..=3 {
            let m = Su2Model::new(two_l, 1.0).unwrap();
            let [jn, jt, jp] = m.spherical_triple(2.1, 0.3);
            let i = c(0.0, 1.0);
            assert!((commutator(jn.matrix(), jt.matrix()) - jp.matrix() * i).norm() < 1e-12);
            assert!((commutator(jt.matrix(), jp.matrix()) - jn.matrix() * i).norm() < 1e-12);
            assert!((commutator(jp.matrix(), jn.matrix()) - jt.matrix() * i).norm() < 1e-12);
        }
    }

    #[test]
    fn normal_modes_diagonalize_hamiltonian() {
        let m = osc();
        let r = OscillatorReference::new(&m);
        for p in [[1.0, 0.0, 1.0], [2.0, 0.5, 1.5], [0.7, -0.3, 2.2]] {
            let p = ParameterPoint::from(p);
            let nq = r.quadratics(&p).unwrap();
            let h = eval_h(&m, &p).unwrap();
            assert!((h.matrix() - nq.q2_plus_p2.scale(0.5 * nq.omega).matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn oscillator_a_y_at_symmetric_point() {
        let m = osc();
        let p = ParameterPoint::from([1.0, 0.0, 1.0]);
        let a = oscillator_analytic_connection(&m, &p).unwrap();
        let [q2, p2, _] = m.quadratics();
        assert!((a.components[1].matrix() + q2.sub(p2).scale(0.25).matrix()).norm() < 1e-12);
        assert!((a.components[0].matrix() + a.components[2].matrix()).norm() < 1e-12);
    }

    #[test]
    fn oscillator_matches_spectral_connection_on_trusted_levels() {
        let m = osc();
        for p in [[1.0, 0.0, 1.0], [2.0, 0.5, 1.5], [1.3, -0.4, 0.9]] {
            let p = ParameterPoint::from(p);
            let spec = spectral_at(&m, &p, f64::NAN).unwrap();
            let k = spec.checked_levels;
            assert!(k >= 10);
            let num = connection_at(&m, &p).unwrap();
            let exact = oscillator_analytic_connection(&m, &p).unwrap();
            for (a, b) in num.components.iter().zip(&exact.components) {
                let d = block_distance(spec.frame.matrix(), a.matrix(), b.matrix(), k);
                assert!(d < 1e-6, "{d:e}");
            }
        }
    }

    #[test]
    fn oscillator_matches_yang_mills_curvature() {
        let m = osc();
        let p = ParameterPoint::from([2.0, 0.5, 1.5]);
        let spec = spectral_at(&m, &p, f64::NAN).unwrap();
        let f = yang_mills_curvature(&m, &p, None).unwrap();
        let exact = oscillator_analytic_curvature(&m, &p).unwrap();
        let k = spec.checked_levels - 2;
        for (mu, nu) in [(0, 1), (0, 2), (1, 2)] {
            let d = block_distance(
                spec.frame.matrix(),
                f.get(mu, nu).unwrap().matrix(),
                exact.get(mu, nu).unwrap().matrix(),
                k,
            );
            assert!(d < 1e-4, "{mu}{nu}: {d:e}");
        }
        let diag = exact.diagonal(&spec, 1, 2);
        for (n, v) in diag.iter().enumerate().take(k) {
            assert!((v - OscillatorReference::berry_curvature(&p, n, 1, 2)).abs() < 1e-10);
        }
        let at_sym = ParameterPoint::from([1.0, 0.0, 1.0]);
        assert!((OscillatorReference::berry_curvature(&at_sym, 0, 1, 2) + 0.125).abs() < 1e-15);
        assert_eq!(OscillatorReference::berry_curvature(&at_sym, 3, 2, 0), 0.0);
    }

    #[test]
    fn sp2_closure_on_trusted_levels() {
        let m = osc();
        let p = ParameterPoint::from([2.0, 0.5, 1.5]);
        let spec = spectral_at(&m, &p, f64::NAN).unwrap();
        let [k0, k1, k2] = OscillatorReference::new(&m).sp2_generators(&p).unwrap();
        let i = c(0.0, 1.0);
        let k = spec.checked_levels - 4;
        let frame = spec.frame.matrix();
        let check = |a: &HermitianOperator, b: &HermitianOperator, rhs: CMatrix| {
            block_distance(frame, &commutator(a.matrix(), b.matrix()), &rhs, k)
        };
        assert!(check(&k1, &k2, k0.matrix() * -i) < 1e-8);
        assert!(check(&k0, &k1, k2.matrix() * i) < 1e-8);
        assert!(check(&k2, &k0, k1.matrix() * i) < 1e-8);
    }

    #[test]
    fn oscillator_domain_is_enforced() {
        let m = osc();
        assert!(oscillator_analytic_connection(&m, &ParameterPoint::from([1.0, 2.0, 1.0])).is_err());
    }
}
