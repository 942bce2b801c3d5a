//! The adiabatic connection `A` and shift operator `D` at a point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{grad_h, spectral_at, GradScheme, LocalData, ParameterPoint, ParametricHamiltonian};
use crate::operator::{
    c, commutator, default_gap_tol, hermitize, CMatrix, HermitianOperator, SpectralDecomposition,
    UnitaryOperator, C64,
};

/// Pairs of levels closer than this are left out of the energy denominators.
/// Within the certified block this never triggers (the spectrum was checked);
/// outside it, it silences near-degenerate truncation artifacts.
pub(crate) fn pair_gap_tol(spec: &SpectralDecomposition) -> f64 {
    default_gap_tol(spec.spectral_radius())
}

/// `V^dag G V`.
pub(crate) fn to_eigenbasis(spec: &SpectralDecomposition, g: &CMatrix) -> CMatrix {
    let v = spec.frame.matrix();
    v.adjoint() * g * v
}

/// `V G V^dag`.
pub(crate) fn from_eigenbasis(spec: &SpectralDecomposition, g: &CMatrix) -> CMatrix {
    let v = spec.frame.matrix();
    v * g * v.adjoint()
}

/// Eigenbasis entries `i M_mn / (E_m - E_n)` of the connection generated by `M = V^dag dH V`.
pub(crate) fn connection_entries(spec: &SpectralDecomposition, m: &CMatrix) -> CMatrix {
    let e = &spec.eigenvalues;
    let tol = pair_gap_tol(spec);
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let gap = e[i] - e[j];
        if i == j || gap.abs() < tol {
            c(0.0, 0.0)
        } else {
            c(0.0, 1.0) * m[(i, j)] / gap
        }
    })
}

/// Connection one-form `A = A_mu d lambda_mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionOneForm {
    pub components: Vec<HermitianOperator>,
    pub base_point: Option<ParameterPoint>,
}

impl ConnectionOneForm {
    pub fn n_params(&self) -> usize {
        self.components.len()
    }

    /// `max_n |<n|A_mu|n>| / |A_mu|_F` over all components, in `spec`'s frame.
    pub fn max_relative_diagonal(&self, spec: &SpectralDecomposition) -> f64 {
        self.components
            .iter()
            .filter(|a| a.norm() > 0.0)
            .map(|a| {
                let d = to_eigenbasis(spec, a.matrix());
                (0..d.nrows()).fold(0.0_f64, |acc, n| acc.max(d[(n, n)].norm())) / a.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Components with their diagonal in `spec`'s frame removed, back in the original basis.
    pub fn off_diagonal(&self, spec: &SpectralDecomposition) -> Vec<CMatrix> {
        self.components
            .iter()
            .map(|a| {
                let mut d = to_eigenbasis(spec, a.matrix());
                d.fill_diagonal(c(0.0, 0.0));
                from_eigenbasis(spec, &d)
            })
            .collect()
    }

    /// `sum_mu A_mu v_mu`.
    pub fn contract(&self, v: &[f64]) -> HermitianOperator {
        let dim = self.components[0].dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (a, &x) in self.components.iter().zip(v) {
            m += a.matrix().scale(x);
        }
        HermitianOperator::hermitian_part(&m)
    }
}

/// Shift operator `D_mu = sum_n <n|dH_mu|n> |n><n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    pub components: Vec<HermitianOperator>,
    pub base_point: Option<ParameterPoint>,
}

impl ShiftOperator {
    /// `<n|D_mu|n>` for every level.
    pub fn level_shifts(&self, spec: &SpectralDecomposition) -> Vec<Vec<f64>> {
        self.components
            .iter()
            .map(|d| {
                let m = to_eigenbasis(spec, d.matrix());
                (0..m.nrows()).map(|n| m[(n, n)].re).collect()
            })
            .collect()
    }

    /// `max_mu |[D_mu, H]|_F`.
    pub fn commutator_residual(&self, h: &HermitianOperator) -> f64 {
        self.components
            .iter()
            .map(|d| commutator(d.matrix(), h.matrix()).norm())
            .fold(0.0, f64::max)
    }
}

fn check_grad(spec: &SpectralDecomposition, grad: &[HermitianOperator]) -> Result<()> {
    if grad.is_empty() {
        return Err(Error::InvalidConfig("gradient list is empty".into()));
    }
    match grad.iter().find(|g| g.dim() != spec.dim()) {
        Some(g) => Err(Error::DimensionMismatch { expected: spec.dim(), got: g.dim() }),
        None => Ok(()),
    }
}

/// `A_mu = i sum_{m != n} |m><m|dH_mu|n><n| / (E_m - E_n)`.
pub fn connection_spectral(
    spec: &SpectralDecomposition,
    grad: &[HermitianOperator],
) -> Result<ConnectionOneForm> {
    check_grad(spec, grad)?;
    let components = grad
        .iter()
        .map(|g| {
            let a = connection_entries(spec, &to_eigenbasis(spec, g.matrix()));
            HermitianOperator::hermitian_part(&from_eigenbasis(spec, &a))
        })
        .collect();
    Ok(ConnectionOneForm { components, base_point: None })
}

pub fn shift_operator(spec: &SpectralDecomposition, grad: &[HermitianOperator]) -> Result<ShiftOperator> {
    check_grad(spec, grad)?;
    let components = grad
        .iter()
        .map(|g| {
            let m = to_eigenbasis(spec, g.matrix());
            let d = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if i == j { c(m[(i, i)].re, 0.0) } else { c(0.0, 0.0) });
            HermitianOperator::hermitian_part(&from_eigenbasis(spec, &d))
        })
        .collect();
    Ok(ShiftOperator { components, base_point: None })
}

/// Spectral connection of `model` at `p`, tagged with the point.
pub fn connection_at(model: &dyn ParametricHamiltonian, p: &ParameterPoint) -> Result<ConnectionOneForm> {
    let local = LocalData::at(model, p)?;
    let mut a = connection_spectral(&local.spectrum, &local.grad)?;
    a.base_point = Some(p.clone());
    Ok(a)
}

/// Shift operator of `model` at `p`, tagged with the point.
pub fn shift_at(model: &dyn ParametricHamiltonian, p: &ParameterPoint) -> Result<ShiftOperator> {
    let local = LocalData::at(model, p)?;
    let mut d = shift_operator(&local.spectrum, &local.grad)?;
    d.base_point = Some(p.clone());
    Ok(d)
}

/// `|i[H, A_mu] + dH_mu - D_mu|_F / |dH_mu|_F` for each `mu`, restricted to the
/// certified block of levels.
pub fn defining_commutator_residual(
    spec: &SpectralDecomposition,
    grad: &[HermitianOperator],
    a: &ConnectionOneForm,
    d: &ShiftOperator,
) -> Vec<f64> {
    let h = spec.reassemble();
    let k = spec.checked_levels;
    grad.iter()
        .zip(&a.components)
        .zip(&d.components)
        .map(|((g, a), d)| {
            let r = commutator(&h, a.matrix()) * c(0.0, 1.0) + g.matrix() - d.matrix();
            let r = to_eigenbasis(spec, &r);
            let g = to_eigenbasis(spec, g.matrix());
            let num = r.view((0, 0), (k, k)).norm();
            let den = g.view((0, 0), (k, k)).norm();
            if den == 0.0 {
                num
            } else {
                num / den
            }
        })
        .collect()
}

/// Horizon and sampling of the `[-T, T]` trapezoid average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverageConfig {
    pub horizon: f64,
    pub samples: usize,
}

impl TimeAverageConfig {
    pub fn new(horizon: f64, samples: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidConfig(format!("horizon T must be positive, got {horizon}")));
        }
        if samples < 2 {
            return Err(Error::InvalidConfig("time average needs at least 2 samples".into()));
        }
        Ok(Self { horizon, samples })
    }

    /// Sampling for horizon `T` with spacing `pi / (8 R)`.
    pub fn with_horizon(horizon: f64, spec: &SpectralDecomposition) -> Result<Self> {
        let spacing = std::f64::consts::PI / (8.0 * spec.spectral_radius().max(1e-300));
        let samples = (2.0 * horizon / spacing).ceil() as usize + 1;
        Self::new(horizon, samples.max(2))
    }

    /// `T = 50 / min_gap`, spacing `pi / (8 R)`.
    pub fn default_for(spec: &SpectralDecomposition) -> Result<Self> {
        if spec.min_gap <= 0.0 {
            return Err(Error::InvalidConfig("default horizon needs a positive spectral gap".into()));
        }
        Self::with_horizon(50.0 / spec.min_gap, spec)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.horizon / (self.samples - 1) as f64
    }

    fn check_nyquist(&self, spec: &SpectralDecomposition) -> Result<()> {
        let limit = std::f64::consts::PI / (4.0 * spec.spectral_radius());
        if self.spacing() >= limit {
            return Err(Error::InvalidConfig(format!(
                "sample spacing {:.3e} must be below pi/(4R) = {limit:.3e}; raise samples",
                self.spacing()
            )));
        }
        Ok(())
    }

    fn time(&self, k: usize) -> f64 {
        -self.horizon + k as f64 * self.spacing()
    }

    fn weight(&self, k: usize) -> f64 {
        let w = self.spacing() / (2.0 * self.horizon);
        if k == 0 || k + 1 == self.samples {
            0.5 * w
        } else {
            w
        }
    }
}

const CHUNK: usize = 256;

/// Trapezoid averages `P_mn = <exp(i t (E_n - E_m))>` over the sample grid.
/// Samples are summed in fixed chunks so the result does not depend on the
/// number of worker threads.
fn phase_averages(e: &[f64], cfg: &TimeAverageConfig) -> CMatrix {
    let n = e.len();
    let chunks: Vec<CMatrix> = (0..cfg.samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ch| {
            let mut acc = CMatrix::zeros(n, n);
            for k in ch * CHUNK..((ch + 1) * CHUNK).min(cfg.samples) {
                let (t, w) = (cfg.time(k), cfg.weight(k));
                for i in 0..n {
                    for j in 0..n {
                        acc[(i, j)] += C64::from_polar(w, t * (e[j] - e[i]));
                    }
                }
            }
            acc
        })
        .collect();
    chunks.into_iter().fold(CMatrix::zeros(n, n), |acc, x| acc + x)
}

/// Finite-horizon estimate of `A` and the `C / T` bound on its error.
#[derive(Debug, Clone)]
pub struct TimeAverageEstimate {
    pub connection: ConnectionOneForm,
    /// Per component, `sqrt(sum |M_mn|^2 / (E_m - E_n)^4) / T`.
    pub error_bound: Vec<f64>,
    pub config: TimeAverageConfig,
}

/// Trapezoid average of the Maurer-Cartan form `i e^{-itH} d e^{itH}` over `[-T, T]`.
pub fn connection_time_average(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    cfg: Option<TimeAverageConfig>,
) -> Result<TimeAverageEstimate> {
    let spec = spectral_at(model, p, f64::NAN)?;
    let grad = grad_h(model, p, GradScheme::Auto)?;
    time_average_from(&spec, &grad, cfg, Some(p.clone()))
}

pub fn time_average_from(
    spec: &SpectralDecomposition,
    grad: &[HermitianOperator],
    cfg: Option<TimeAverageConfig>,
    base_point: Option<ParameterPoint>,
) -> Result<TimeAverageEstimate> {
    check_grad(spec, grad)?;
    let cfg = match cfg {
        Some(c) => c,
        None => TimeAverageConfig::default_for(spec)?,
    };
    cfg.check_nyquist(spec)?;
    let e = &spec.eigenvalues;
    let phases = phase_averages(e, &cfg);
    let t_mean: f64 = (0..cfg.samples).map(|k| cfg.weight(k) * cfg.time(k)).sum();
    let tol = pair_gap_tol(spec);
    let mut components = Vec::with_capacity(grad.len());
    let mut error_bound = Vec::with_capacity(grad.len());
    for g in grad {
        let m = to_eigenbasis(spec, g.matrix());
        let mut bound = 0.0;
        let avg = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            if i == j {
                return m[(i, i)] * (-t_mean);
            }
            let gap = e[i] - e[j];
            if gap.abs() < tol {
                return c(0.0, 0.0);
            }
            bound += m[(i, j)].norm_sqr() / gap.powi(4);
            c(0.0, 1.0) * m[(i, j)] * (c(1.0, 0.0) - phases[(i, j)]) / gap
        });
        components.push(hermitize(&from_eigenbasis(spec, &avg))?.operator);
        error_bound.push(f64::sqrt(bound) / cfg.horizon);
    }
    Ok(TimeAverageEstimate { connection: ConnectionOneForm { components, base_point }, error_bound, config: cfg })
}

/// Eigenbasis entries of `omega_mu(t)` for `M = V^dag dH_mu V`.
fn maurer_cartan_entries(e: &[f64], m: &CMatrix, t: f64, tol: f64) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            return m[(i, i)] * (-t);
        }
        let gap = e[i] - e[j];
        if gap.abs() < tol {
            return c(0.0, 0.0);
        }
        c(0.0, 1.0) * m[(i, j)] * (c(1.0, 0.0) - C64::from_polar(1.0, -t * gap)) / gap
    })
}

/// `omega_mu(lambda, t) = i e^{-itH} d_mu e^{itH}`, evaluated exactly through the
/// spectral divided differences of `e^{itH}`.
pub fn maurer_cartan_sample(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    t: f64,
) -> Result<Vec<HermitianOperator>> {
    let local = LocalData::at(model, p)?;
    maurer_cartan_from(&local.spectrum, &local.grad, t)
}

pub fn maurer_cartan_from(
    spec: &SpectralDecomposition,
    grad: &[HermitianOperator],
    t: f64,
) -> Result<Vec<HermitianOperator>> {
    check_grad(spec, grad)?;
    if !t.is_finite() {
        return Err(Error::NonFinite("Maurer-Cartan time"));
    }
    let tol = pair_gap_tol(spec);
    grad.iter()
        .map(|g| {
            let w = maurer_cartan_entries(&spec.eigenvalues, &to_eigenbasis(spec, g.matrix()), t, tol);
            Ok(hermitize(&from_eigenbasis(spec, &w))?.operator)
        })
        .collect()
}

/// Time mean of `[dw_mu(t), dw_nu(t)]` over the sample grid, where
/// `dw = w - mean(w)` and `w` is the Maurer-Cartan form built from `dH - D`.
/// Tends to `-i F_{mu nu}` as `T` grows.
pub fn commutator_time_average(
    spec: &SpectralDecomposition,
    grad: &[HermitianOperator],
    mu: usize,
    nu: usize,
    cfg: &TimeAverageConfig,
) -> Result<CMatrix> {
    check_grad(spec, grad)?;
    if mu >= grad.len() || nu >= grad.len() {
        return Err(Error::DimensionMismatch { expected: grad.len(), got: mu.max(nu) + 1 });
    }
    cfg.check_nyquist(spec)?;
    let e = &spec.eigenvalues;
    let p = phase_averages(e, cfg);
    let a = connection_entries(spec, &to_eigenbasis(spec, grad[mu].matrix()));
    let b = connection_entries(spec, &to_eigenbasis(spec, grad[nu].matrix()));
    let n = e.len();
    // dw_mn(t) = A_mn (P_mn - e^{it(E_n - E_m)}), so products average entrywise
    let mean_product = |x: &CMatrix, y: &CMatrix| {
        CMatrix::from_fn(n, n, |i, k| {
            (0..n).map(|j| x[(i, j)] * y[(j, k)] * (p[(i, k)] - p[(i, j)] * p[(j, k)])).sum()
        })
    };
    let mean = mean_product(&a, &b) - mean_product(&b, &a);
    Ok(from_eigenbasis(spec, &mean))
}

/// `A' = U A U^dag + i U dU^dag`, with `du[mu] = d_mu U` at the base point.
pub fn gauge_transform(a: &ConnectionOneForm, u: &UnitaryOperator, du: &[CMatrix]) -> Result<ConnectionOneForm> {
    if du.len() != a.n_params() {
        return Err(Error::DimensionMismatch { expected: a.n_params(), got: du.len() });
    }
    let u = UnitaryOperator::new(u.matrix().clone())?;
    let um = u.matrix();
    let components = a
        .components
        .iter()
        .zip(du)
        .map(|(am, dum)| {
            if dum.shape() != um.shape() {
                return Err(Error::DimensionMismatch { expected: um.nrows(), got: dum.nrows() });
            }
            let m = um * am.matrix() * um.adjoint() + um * dum.adjoint() * c(0.0, 1.0);
            Ok(hermitize(&m)?.operator)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConnectionOneForm { components, base_point: a.base_point.clone() })
}

/// `max_n |E_n(p + delta v) - E_n(p) - delta v . D_n(p)|` over levels certified at both points.
pub fn first_order_prediction_error(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    direction: &[f64],
    delta: f64,
) -> Result<f64> {
    if direction.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: direction.len() });
    }
    let local = LocalData::at(model, p)?;
    let shifts = shift_operator(&local.spectrum, &local.grad)?.level_shifts(&local.spectrum);
    let moved = spectral_at(model, &p.displaced(direction, delta), f64::NAN)?;
    let levels = local.spectrum.checked_levels.min(moved.checked_levels);
    Ok((0..levels)
        .map(|n| {
            let slope: f64 = direction.iter().zip(&shifts).map(|(v, s)| v * s[n]).sum();
            (moved.eigenvalues[n] - local.spectrum.eigenvalues[n] - delta * slope).abs()
        })
        .fold(0.0, f64::max))
}

/// One point of a time-average convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePoint {
    pub horizon: f64,
    /// Largest `sum_mu |A_hat_mu(T') - A_mu|_F` over `T'` in `[T, 1.5 T]`.
    pub error: f64,
}

/// Upper envelope of the time-average error for each horizon, sampled at
/// `per_window` horizons in `[T, 1.5 T]` (the raw error oscillates in `T`).
pub fn convergence_envelope(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    horizons: &[f64],
    per_window: usize,
) -> Result<Vec<EnvelopePoint>> {
    let local = LocalData::at(model, p)?;
    let exact = connection_spectral(&local.spectrum, &local.grad)?;
    let per_window = per_window.max(1);
    horizons
        .iter()
        .map(|&t| {
            let mut worst: f64 = 0.0;
            for k in 0..per_window {
                let tk = t * (1.0 + 0.5 * k as f64 / per_window as f64);
                let cfg = TimeAverageConfig::with_horizon(tk, &local.spectrum)?;
                let est = time_average_from(&local.spectrum, &local.grad, Some(cfg), None)?;
                let err: f64 = est
                    .connection
                    .components
                    .iter()
                    .zip(&exact.components)
                    .map(|(a, b)| (a.matrix() - b.matrix()).norm())
                    .sum();
                worst = worst.max(err);
            }
            Ok(EnvelopePoint { horizon: t, error: worst })
        })
        .collect()
}

/// Least-squares slope of `log error` against `log T`.
pub fn loglog_slope(points: &[EnvelopePoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.horizon.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.error.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
