//! Yang-Mills and Berry curvature, small-loop holonomy and surface integrals.

mod surface;

pub use surface::SurfacePatch;

use rayon::prelude::*;

use crate::connection::{connection_spectral, to_eigenbasis};
use crate::error::{Error, Result};
use crate::model::{fd_step, grad_h, spectral_at, GradScheme, LocalData, ParameterPoint, ParametricHamiltonian};
use crate::operator::{c, commutator, expm_i, CMatrix, HermitianOperator, SpectralDecomposition};
use crate::transport::{ordered_product, PathSpec};

/// Components `F_{mu nu}`, `mu < nu`, of the Yang-Mills curvature.
#[derive(Debug, Clone)]
pub struct CurvatureTwoForm {
    pub n_params: usize,
    pub components: Vec<((usize, usize), HermitianOperator)>,
    pub base_point: ParameterPoint,
}

impl CurvatureTwoForm {
    /// `F_{mu nu}` with the sign flipped for `mu > nu`.
    pub fn get(&self, mu: usize, nu: usize) -> Option<HermitianOperator> {
        if mu == nu {
            let dim = self.components.first()?.1.dim();
            return Some(HermitianOperator::zeros(dim));
        }
        let (key, sign) = if mu < nu { ((mu, nu), 1.0) } else { ((nu, mu), -1.0) };
        self.components.iter().find(|(k, _)| *k == key).map(|(_, f)| f.scale(sign))
    }

    /// `<n|F_{mu nu}|n>` for the certified levels of `spec`.
    pub fn diagonal(&self, spec: &SpectralDecomposition, mu: usize, nu: usize) -> Vec<f64> {
        let f = self.get(mu, nu).expect("curvature index in range");
        let d = to_eigenbasis(spec, f.matrix());
        (0..spec.checked_levels).map(|n| d[(n, n)].re).collect()
    }
}

fn connection_components(model: &dyn ParametricHamiltonian, p: &ParameterPoint) -> Result<Vec<HermitianOperator>> {
    let local = LocalData::at(model, p)?;
    Ok(connection_spectral(&local.spectrum, &local.grad)?.components)
}

/// `F_{mu nu} = d_mu A_nu - d_nu A_mu - i [A_mu, A_nu]`, derivatives by central
/// differences of the spectral connection with step `h` (`None`: scaled default).
pub fn yang_mills_curvature(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    h: Option<f64>,
) -> Result<CurvatureTwoForm> {
    let n = model.n_params();
    let a = connection_components(model, p)?;
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    // derivative[mu][nu] = d_mu A_nu
    let derivative = (0..n)
        .into_par_iter()
        .map(|mu| {
            let step = h.unwrap_or_else(|| fd_step(p[mu]));
            let plus = connection_components(model, &p.shifted(mu, step))?;
            let minus = connection_components(model, &p.shifted(mu, -step))?;
            Ok(plus.iter().zip(&minus).map(|(x, y)| (x.matrix() - y.matrix()).scale(0.5 / step)).collect())
        })
        .collect::<Result<Vec<Vec<CMatrix>>>>()?;
    let mut components = Vec::with_capacity(n * (n - 1) / 2);
    for mu in 0..n {
        for nu in mu + 1..n {
            let f = &derivative[mu][nu] - &derivative[nu][mu]
                - commutator(a[mu].matrix(), a[nu].matrix()) * c(0.0, 1.0);
            components.push(((mu, nu), HermitianOperator::hermitian_part(&f)));
        }
    }
    Ok(CurvatureTwoForm { n_params: n, components, base_point: p.clone() })
}

/// Real Berry curvature `W^(n)_{mu nu}` per level.
#[derive(Debug, Clone)]
pub struct BerryCurvatureTable {
    pub n_params: usize,
    /// `values[n]` lists `((mu, nu), W)` for `mu < nu`.
    pub values: Vec<Vec<((usize, usize), f64)>>,
}

impl BerryCurvatureTable {
    pub fn get(&self, level: usize, mu: usize, nu: usize) -> f64 {
        if mu == nu {
            return 0.0;
        }
        let (key, sign) = if mu < nu { ((mu, nu), 1.0) } else { ((nu, mu), -1.0) };
        self.values[level].iter().find(|(k, _)| *k == key).map_or(0.0, |(_, w)| sign * w)
    }

    pub fn levels(&self) -> usize {
        self.values.len()
    }

    /// `sum_{mu < nu} W_{mu nu} (a_mu b_nu - a_nu b_mu)` for one level.
    pub fn contract(&self, level: usize, a: &[f64], b: &[f64]) -> f64 {
        self.values[level].iter().map(|((mu, nu), w)| w * (a[*mu] * b[*nu] - a[*nu] * b[*mu])).sum()
    }
}

/// `W^(n)_{mu nu} = i sum_{k != n} [<n|dH_mu|k><k|dH_nu|n> - (mu <-> nu)] / (E_n - E_k)^2`,
/// which equals `<n|F_{mu nu}|n>`. Reported for the certified levels.
pub fn berry_curvature_levels(spec: &SpectralDecomposition, grad: &[HermitianOperator]) -> Result<BerryCurvatureTable> {
    let np = grad.len();
    if let Some(g) = grad.iter().find(|g| g.dim() != spec.dim()) {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: g.dim() });
    }
    let m: Vec<CMatrix> = grad.iter().map(|g| to_eigenbasis(spec, g.matrix())).collect();
    let e = &spec.eigenvalues;
    let tol = crate::connection::pair_gap_tol(spec);
    let values = (0..spec.checked_levels)
        .map(|n| {
            let mut row = Vec::with_capacity(np * (np.saturating_sub(1)) / 2);
            for mu in 0..np {
                for nu in mu + 1..np {
                    let mut bracket = c(0.0, 0.0);
                    for k in (0..e.len()).filter(|&k| k != n) {
                        let gap = e[n] - e[k];
                        if gap.abs() < tol {
                            continue;
                        }
                        bracket += (m[mu][(n, k)] * m[nu][(k, n)] - m[nu][(n, k)] * m[mu][(k, n)]) / (gap * gap);
                    }
                    row.push(((mu, nu), (c(0.0, 1.0) * bracket).re));
                }
            }
            row
        })
        .collect();
    Ok(BerryCurvatureTable { n_params: np, values })
}

/// Berry curvature of `model` at `p`.
pub fn berry_curvature_at(model: &dyn ParametricHamiltonian, p: &ParameterPoint) -> Result<BerryCurvatureTable> {
    let spec = spectral_at(model, p, f64::NAN)?;
    berry_curvature_levels(&spec, &grad_h(model, p, GradScheme::Auto)?)
}

/// Components whose norm is below this fraction of the largest one are
/// finite-difference noise around zero and are measured against the largest.
pub const NEGLIGIBLE_COMPONENT: f64 = 1e-3;

/// `max |<m|F|n>| / |F|` over components and `m != n`, within the certified block.
pub fn diagonality_residual(f: &CurvatureTwoForm, spec: &SpectralDecomposition) -> f64 {
    let k = spec.checked_levels;
    let blocks: Vec<CMatrix> = f
        .components
        .iter()
        .map(|(_, comp)| to_eigenbasis(spec, comp.matrix()).view((0, 0), (k, k)).into_owned())
        .collect();
    let largest = blocks.iter().map(|b| b.norm()).fold(0.0, f64::max);
    if largest == 0.0 {
        return 0.0;
    }
    blocks
        .iter()
        .map(|block| {
            let mut worst = 0.0_f64;
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        worst = worst.max(block[(i, j)].norm());
                    }
                }
            }
            worst / block.norm().max(NEGLIGIBLE_COMPONENT * largest)
        })
        .fold(0.0, f64::max)
}

/// Outcome of comparing an `eps`-square holonomy with `exp(i eps^2 F)`.
#[derive(Debug, Clone, Copy)]
pub struct SmallLoopReport {
    pub eps: f64,
    pub difference: f64,
    pub difference_half: f64,
    /// `difference / difference_half`; ideally 8.
    pub ratio: f64,
}

const SMALL_LOOP_REFINEMENT: usize = 16;

fn square_loop(p: &ParameterPoint, mu: usize, nu: usize, eps: f64) -> Result<PathSpec> {
    let corner = p.shifted(mu, -0.5 * eps).shifted(nu, -0.5 * eps);
    let a = corner.shifted(mu, eps);
    let b = a.shifted(nu, eps);
    let d = corner.shifted(nu, eps);
    PathSpec::closed(vec![corner.clone(), a, b, d, corner], SMALL_LOOP_REFINEMENT)
}

fn small_loop_difference(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    mu: usize,
    nu: usize,
    eps: f64,
    f: &HermitianOperator,
    spec: &SpectralDecomposition,
) -> Result<f64> {
    let lp = square_loop(p, mu, nu, eps)?;
    let hol = ordered_product(model, &lp.samples())?;
    let expected = expm_i(&f.scale(eps * eps))?;
    let diff = to_eigenbasis(spec, &(hol.matrix() - expected.matrix()));
    let k = spec.checked_levels;
    Ok(diff.view((0, 0), (k, k)).norm())
}

/// Holonomy of the counter-clockwise `eps`-square about `p` in the `(mu, nu)`
/// plane against `exp(i eps^2 F_{mu nu}(p))`, at `eps` and `eps / 2`.
pub fn small_loop_check(
    model: &dyn ParametricHamiltonian,
    p: &ParameterPoint,
    mu: usize,
    nu: usize,
    eps: f64,
) -> Result<SmallLoopReport> {
    if mu == nu || mu >= model.n_params() || nu >= model.n_params() {
        return Err(Error::InvalidConfig("small loop needs two distinct parameter directions".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidConfig(format!("loop size must be positive, got {eps}")));
    }
    let f = yang_mills_curvature(model, p, None)?.get(mu, nu).expect("indices checked");
    let spec = spectral_at(model, p, f64::NAN)?;
    let difference = small_loop_difference(model, p, mu, nu, eps, &f, &spec)?;
    let difference_half = small_loop_difference(model, p, mu, nu, 0.5 * eps, &f, &spec)?;
    let ratio = if difference_half > 0.0 { difference / difference_half } else { f64::INFINITY };
    Ok(SmallLoopReport { eps, difference, difference_half, ratio })
}

/// Midpoint-rule Berry phases over a patch.
#[derive(Debug, Clone)]
pub struct SurfaceIntegral {
    /// `int_S W^(n)` per certified level (not wrapped).
    pub phases: Vec<f64>,
    /// Same integral on the half-resolution grid.
    pub coarse_phases: Vec<f64>,
    /// `max_n |fine - coarse| / 3`, the Richardson estimate of the fine-grid error.
    pub error_estimate: f64,
}

/// Pulled-back `W^(n)` at every cell centre, row-major in `(i, j)`, scaled by the cell area.
fn cell_contributions(model: &dyn ParametricHamiltonian, s: &SurfacePatch) -> Result<Vec<Vec<f64>>> {
    let (nu, nv) = s.grid();
    let (du, dv) = (1.0 / nu as f64, 1.0 / nv as f64);
    (0..nu * nv)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nv, idx % nv);
            let (u, v) = ((i as f64 + 0.5) * du, (j as f64 + 0.5) * dv);
            let table = berry_curvature_at(model, &s.at(u, v))?;
            let (ju, jv) = s.jacobian(u, v);
            Ok((0..table.levels()).map(|n| table.contract(n, &ju, &jv) * du * dv).collect())
        })
        .collect()
}

fn integrate(model: &dyn ParametricHamiltonian, s: &SurfacePatch) -> Result<Vec<f64>> {
    let cells = cell_contributions(model, s)?;
    let levels = cells.iter().map(Vec::len).min().unwrap_or(0);
    let (_, nv) = s.grid();
    // fixed summation order: each grid row first, then rows in order
    let rows: Vec<Vec<f64>> = cells
        .chunks(nv)
        .map(|row| (0..levels).map(|n| row.iter().map(|c| c[n]).sum()).collect())
        .collect();
    Ok((0..levels).map(|n| rows.iter().map(|r| r[n]).sum()).collect())
}

/// `phi_n = int_S W^(n)` for every certified level. Fails with `GridTooCoarse`
/// when the half-grid comparison suggests an error above `tol`.
pub fn berry_phase_surface_all(model: &dyn ParametricHamiltonian, s: &SurfacePatch, tol: f64) -> Result<SurfaceIntegral> {
    let phases = integrate(model, s)?;
    let (nu, nv) = s.grid();
    let coarse = s.with_grid(nu.div_ceil(2), nv.div_ceil(2))?;
    let coarse_phases = integrate(model, &coarse)?;
    let error_estimate = phases
        .iter()
        .zip(&coarse_phases)
        .map(|(f, c)| (f - c).abs() / 3.0)
        .fold(0.0, f64::max);
    if error_estimate > tol {
        return Err(Error::GridTooCoarse { disagreement: error_estimate, tol });
    }
    Ok(SurfaceIntegral { phases, coarse_phases, error_estimate })
}

/// `phi_n = int_S W^(n)` for one level.
pub fn berry_phase_surface(model: &dyn ParametricHamiltonian, s: &SurfacePatch, level: usize, tol: f64) -> Result<f64> {
    let all = berry_phase_surface_all(model, s, tol)?;
    all.phases.get(level).copied().ok_or_else(|| {
        Error::InvalidConfig(format!("level {level} is outside the {} certified levels", all.phases.len()))
    })
}

/// `W^(n)` sampled at the cell centres of a patch, for maps and plots.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub i: usize,
    pub j: usize,
    pub point: ParameterPoint,
    pub table: BerryCurvatureTable,
}

pub fn curvature_map(model: &dyn ParametricHamiltonian, s: &SurfacePatch) -> Result<Vec<CurvatureSample>> {
    let (nu, nv) = s.grid();
    (0..nu * nv)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nv, idx % nv);
            let point = s.at((i as f64 + 0.5) / nu as f64, (j as f64 + 0.5) / nv as f64);
            let table = berry_curvature_at(model, &point)?;
            Ok(CurvatureSample { i, j, point, table })
        })
        .collect()
}
