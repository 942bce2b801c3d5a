use nalgebra::DVector;

use crate::connection::connection_spectral;
use crate::error::{Error, Result};
use crate::model::{eval_h, grad_h, spectral_at, GradScheme, ParameterPoint, ParametricHamiltonian};
use crate::operator::{c, CMatrix, C64};

/// Allowed norm drift of the integrated state, per unit time.
pub const NORM_DRIFT_TOL: f64 = 1e-8;

/// Time profile `s(t/tau)` of a straight-line schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Linear,
    /// `3 u^2 - 2 u^3`: zero velocity at both ends.
    SmoothStep,
}

impl Profile {
    fn value(self, u: f64) -> f64 {
        match self {
            Profile::Linear => u,
            Profile::SmoothStep => u * u * (3.0 - 2.0 * u),
        }
    }

    fn slope(self, u: f64) -> f64 {
        match self {
            Profile::Linear => 1.0,
            Profile::SmoothStep => 6.0 * u * (1.0 - u),
        }
    }
}

/// `lambda(t) = start + s(t / tau) (end - start)` for `t` in `[0, tau]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub start: ParameterPoint,
    pub end: ParameterPoint,
    pub tau: f64,
    pub profile: Profile,
}

impl Schedule {
    pub fn new(start: ParameterPoint, end: ParameterPoint, tau: f64, profile: Profile) -> Result<Self> {
        if start.len() != end.len() {
            return Err(Error::DimensionMismatch { expected: start.len(), got: end.len() });
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidConfig(format!("schedule duration must be positive, got {tau}")));
        }
        Ok(Self { start, end, tau, profile })
    }

    pub fn point(&self, t: f64) -> ParameterPoint {
        ParameterPoint::lerp(&self.start, &self.end, self.profile.value(t / self.tau))
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let rate = self.profile.slope(t / self.tau) / self.tau;
        self.start.delta_to(&self.end).into_iter().map(|d| d * rate).collect()
    }
}

/// Fidelity record of a driven run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `|<n0(lambda(t))|psi(t)>|^2` at each recorded time.
    pub fidelity: Vec<f64>,
    /// `arg <n0(lambda(t))|psi(t)>` at each recorded time.
    pub phase: Vec<f64>,
    /// `| |psi(t)| - 1 |` at each recorded time.
    pub norm_error: Vec<f64>,
    pub min_fidelity: f64,
    /// `arg <n0(lambda(tau))|psi(tau)>`.
    pub final_phase: f64,
    /// `| |psi(tau)| - 1 |`.
    pub norm_drift: f64,
    pub dt: f64,
}

fn generator(
    model: &dyn ParametricHamiltonian,
    schedule: &Schedule,
    t: f64,
    counterdiabatic: bool,
) -> Result<CMatrix> {
    let p = schedule.point(t);
    let h = eval_h(model, &p)?;
    if !counterdiabatic {
        return Ok(h.into_matrix());
    }
    let spec = spectral_at(model, &p, f64::NAN)?;
    let conn = connection_spectral(&spec, &grad_h(model, &p, GradScheme::Auto)?)?;
    Ok(h.into_matrix() - conn.contract(&schedule.velocity(t)).into_matrix())
}

/// `i dpsi/dt = [H(lambda) - lambda_dot . A(lambda)] psi` from `|n0(lambda(0))>`,
/// fixed-step RK4.
pub fn counterdiabatic_evolve(
    model: &dyn ParametricHamiltonian,
    schedule: &Schedule,
    n0: usize,
    dt: f64,
) -> Result<Trajectory> {
    evolve(model, schedule, n0, dt, true)
}

/// Same integrator with the connection term switched on or off.
pub fn evolve(
    model: &dyn ParametricHamiltonian,
    schedule: &Schedule,
    n0: usize,
    dt: f64,
    counterdiabatic: bool,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let steps = (schedule.tau / dt).ceil().max(1.0) as usize;
    let dt = schedule.tau / steps as f64;
    let level = |t: f64| -> Result<DVector<C64>> {
        let s = spectral_at(model, &schedule.point(t), f64::NAN)?;
        if n0 >= s.checked_levels {
            return Err(Error::InvalidConfig(format!("level {n0} is outside the {} certified levels", s.checked_levels)));
        }
        Ok(s.frame.column(n0))
    };
    let minus_i = c(0.0, -1.0);
    let mut psi = level(0.0)?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut fidelity = Vec::with_capacity(steps + 1);
    let mut phase = Vec::with_capacity(steps + 1);
    let mut norm_error = Vec::with_capacity(steps + 1);
    times.push(0.0);
    fidelity.push(1.0);
    phase.push(0.0);
    norm_error.push(0.0);
    let mut g0 = generator(model, schedule, 0.0, counterdiabatic)?;
    let mut overlap = c(1.0, 0.0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let gm = generator(model, schedule, t + 0.5 * dt, counterdiabatic)?;
        let g1 = generator(model, schedule, t + dt, counterdiabatic)?;
        let k1 = (&g0 * &psi) * minus_i;
        let k2 = (&gm * (&psi + &k1 * c(0.5 * dt, 0.0))) * minus_i;
        let k3 = (&gm * (&psi + &k2 * c(0.5 * dt, 0.0))) * minus_i;
        let k4 = (&g1 * (&psi + &k3 * c(dt, 0.0))) * minus_i;
        psi += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
        g0 = g1;
        let t1 = t + dt;
        overlap = level(t1)?.dotc(&psi);
        times.push(t1);
        fidelity.push(overlap.norm_sqr());
        phase.push(overlap.arg());
        norm_error.push((psi.norm() - 1.0).abs());
    }
    let norm_drift = (psi.norm() - 1.0).abs();
    if norm_drift / schedule.tau > NORM_DRIFT_TOL {
        return Err(Error::StepTooLarge { drift: norm_drift / schedule.tau, dt: 0.5 * dt });
    }
    let min_fidelity = fidelity.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Trajectory { times, fidelity, phase, norm_error, min_fidelity, final_phase: overlap.arg(), norm_drift, dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Su2Model;
    use std::f64::consts::FRAC_PI_2;

    fn sweep(tau: f64) -> Schedule {
        Schedule::new(
            ParameterPoint::from([1.0, 0.0, 0.0]),
            ParameterPoint::from([1.0, FRAC_PI_2, 0.0]),
            tau,
            Profile::Linear,
        )
        .unwrap()
    }

    #[test]
    fn counterdiabatic_sweep_is_transitionless() {
        let m = Su2Model::new(1, 1.0).unwrap();
        let tr = counterdiabatic_evolve(&m, &sweep(1.0), 0, 1e-4).unwrap();
        assert!(tr.min_fidelity >= 1.0 - 1e-6, "{}", tr.min_fidelity);
    }

    #[test]
    fn fast_bare_sweep_is_diabatic() {
        let m = Su2Model::new(1, 1.0).unwrap();
        let tr = evolve(&m, &sweep(0.1), 0, 1e-4, false).unwrap();
        assert!(tr.min_fidelity < 0.99, "{}", tr.min_fidelity);
        let cd = evolve(&m, &sweep(0.1), 0, 1e-4, true).unwrap();
        assert!(cd.min_fidelity >= 1.0 - 1e-6);
    }

    #[test]
    fn frozen_schedule_keeps_eigenstate() {
        let m = Su2Model::new(2, 1.0).unwrap();
        let p = ParameterPoint::from([1.0, 0.7, 0.3]);
        let s = Schedule::new(p.clone(), p, 2.0, Profile::SmoothStep).unwrap();
        let tr = counterdiabatic_evolve(&m, &s, 1, 1e-3).unwrap();
        assert!(tr.fidelity.iter().all(|f| (f - 1.0).abs() < 1e-12));
    }

    #[test]
    fn coarse_step_is_rejected() {
        let m = Su2Model::new(1, 40.0).unwrap();
        let err = counterdiabatic_evolve(&m, &sweep(1.0), 0, 0.05).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn smooth_profile_velocity_matches_difference() {
        let s = Schedule::new(
            ParameterPoint::from([0.0, 1.0, 2.0]),
            ParameterPoint::from([1.0, 0.0, 2.5]),
            3.0,
            Profile::SmoothStep,
        )
        .unwrap();
        let (t, h) = (1.1, 1e-6);
        let fd: Vec<f64> = s.point(t - h).delta_to(&s.point(t + h)).iter().map(|d| d / (2.0 * h)).collect();
        for (a, b) in fd.iter().zip(s.velocity(t)) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
