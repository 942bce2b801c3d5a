//! Parallel transport along paths, loop holonomy and counterdiabatic driving.

mod drive;
mod paths;

pub use drive::{counterdiabatic_evolve, evolve, Profile, Schedule, Trajectory};
pub use paths::{out_and_back, planar_circle, su2_latitude_circle, su2_triangle, PathSpec, CLOSURE_TOL};

use rayon::prelude::*;

use crate::connection::connection_spectral;
use crate::error::{Error, Result};
use crate::model::{eval_h, grad_h, spectral_at, GradScheme, ParameterPoint, ParametricHamiltonian};
use crate::operator::{expm_i, CMatrix, HermitianOperator, SpectralDecomposition, UnitaryOperator, C64};

/// Holonomies with an off-diagonal residual above this are flagged unreliable.
pub const UNRELIABLE_OFFDIAG: f64 = 1e-3;

/// Consecutive eigenvectors overlapping less than this abort the Wilson loop.
pub const MIN_OVERLAP: f64 = 0.1;

/// `sum_mu A_mu(midpoint) (b - a)_mu` for the straight segment `a -> b`.
pub fn step_generator(
    model: &dyn ParametricHamiltonian,
    a: &ParameterPoint,
    b: &ParameterPoint,
) -> Result<HermitianOperator> {
    let mid = ParameterPoint::lerp(a, b, 0.5);
    let spec = spectral_at(model, &mid, f64::NAN)?;
    let grad = grad_h(model, &mid, GradScheme::Auto)?;
    let conn = connection_spectral(&spec, &grad)?;
    let g = conn.contract(&a.delta_to(b));
    if g.matrix().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("connection along path"));
    }
    Ok(g)
}

/// Ordered product `exp(i A_K dl_K) ... exp(i A_1 dl_1)` over consecutive samples.
/// Step factors are evaluated in parallel and multiplied in path order.
pub fn ordered_product(model: &dyn ParametricHamiltonian, samples: &[ParameterPoint]) -> Result<UnitaryOperator> {
    let dim = model.dim();
    let steps = samples
        .par_windows(2)
        .map(|w| expm_i(&step_generator(model, &w[0], &w[1])?))
        .collect::<Result<Vec<_>>>()?;
    Ok(steps.iter().fold(UnitaryOperator::identity(dim), |u, s| s.then_after(&u)))
}

/// Transport operator along an open path.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub operator: UnitaryOperator,
    /// `U V_0`: the start eigenframe carried to the end point.
    pub transported_frame: UnitaryOperator,
    /// `|H(end) - U H(start) U^dag|_F / |H(start)|_F`.
    pub conjugation_residual: f64,
    pub start: SpectralDecomposition,
}

impl TransportResult {
    /// `max_n |H(end) v_n - E_n(end) v_n|` over the transported columns, levels
    /// limited to `levels`.
    pub fn eigenvector_residual(&self, model: &dyn ParametricHamiltonian, end: &ParameterPoint, levels: usize) -> Result<f64> {
        let h = eval_h(model, end)?;
        let spec = spectral_at(model, end, f64::NAN)?;
        Ok((0..levels.min(spec.checked_levels))
            .map(|n| {
                let v = self.transported_frame.column(n);
                (h.matrix() * &v - v.scale(spec.eigenvalues[n])).norm()
            })
            .fold(0.0, f64::max))
    }
}

pub fn transport_operator(model: &dyn ParametricHamiltonian, path: &PathSpec) -> Result<TransportResult> {
    let samples = path.samples();
    let first = &samples[0];
    let last = samples.last().unwrap();
    let start = spectral_at(model, first, f64::NAN)?;
    spectral_at(model, last, f64::NAN)?;
    let operator = ordered_product(model, &samples)?;
    let h0 = eval_h(model, first)?;
    let h1 = eval_h(model, last)?;
    let u = operator.matrix();
    let conjugated = u * h0.matrix() * u.adjoint();
    let scale = h0.norm();
    let conjugation_residual = (h1.matrix() - conjugated).norm() / if scale > 0.0 { scale } else { 1.0 };
    let transported_frame = operator.then_after(&start.frame);
    Ok(TransportResult { operator, transported_frame, conjugation_residual, start })
}

/// Loop holonomy expressed in the base-point eigenbasis.
#[derive(Debug, Clone)]
pub struct HolonomyResult {
    /// `V_0^dag U V_0`.
    pub operator: UnitaryOperator,
    /// `arg` of the diagonal, ascending-energy order, for the certified levels.
    pub phases: Vec<f64>,
    /// Largest off-diagonal modulus within the certified block.
    pub offdiag_residual: f64,
    pub unreliable: bool,
}

/// Principal argument in `(-pi, pi]`.
pub fn principal_arg(z: C64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

pub fn holonomy(model: &dyn ParametricHamiltonian, lp: &PathSpec) -> Result<HolonomyResult> {
    lp.check_closed(&model.periods())?;
    let t = transport_operator(model, lp)?;
    let v = t.start.frame.matrix();
    let m: CMatrix = v.adjoint() * t.operator.matrix() * v;
    let k = t.start.checked_levels;
    let phases = (0..k).map(|n| principal_arg(m[(n, n)])).collect();
    let mut offdiag_residual = 0.0_f64;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                offdiag_residual = offdiag_residual.max(m[(i, j)].norm());
            }
        }
    }
    Ok(HolonomyResult {
        operator: UnitaryOperator::trusted(m),
        phases,
        offdiag_residual,
        unreliable: offdiag_residual > UNRELIABLE_OFFDIAG,
    })
}

/// Discrete Berry phases `-arg prod_k <n_k|n_{k+1}>` from eigenvector overlaps
/// around the loop, for the levels certified at every sample.
pub fn wilson_loop_phases(model: &dyn ParametricHamiltonian, lp: &PathSpec) -> Result<Vec<f64>> {
    lp.check_closed(&model.periods())?;
    let mut samples = lp.samples();
    samples.pop();
    let frames = samples
        .par_iter()
        .map(|p| {
            let s = spectral_at(model, p, f64::NAN)?;
            let k = s.checked_levels;
            Ok(s.frame.matrix().columns(0, k).into_owned())
        })
        .collect::<Result<Vec<CMatrix>>>()?;
    let levels = frames.iter().map(|f| f.ncols()).min().unwrap_or(0);
    let mut products = vec![C64::new(1.0, 0.0); levels];
    for (step, k) in (0..frames.len()).enumerate() {
        let (a, b) = (&frames[k], &frames[(k + 1) % frames.len()]);
        for (n, prod) in products.iter_mut().enumerate() {
            let overlap = a.column(n).dotc(&b.column(n));
            if overlap.norm() < MIN_OVERLAP {
                return Err(Error::OverlapTooSmall { step, level: n, overlap: overlap.norm() });
            }
            *prod *= overlap / overlap.norm();
        }
    }
    Ok(products.into_iter().map(|z| principal_arg(z.conj())).collect())
}
