//! Non-Abelian Stokes: lasso decomposition of a surface, the fishbone
//! surface-ordered product, and the Maurer-Cartan flatness control.

use rayon::prelude::*;

use crate::connection::maurer_cartan_from;
use crate::curvature::SurfacePatch;
use crate::error::{Error, Result};
use crate::model::{LocalData, ParameterPoint, ParametricHamiltonian};
use crate::operator::{expm_i, CMatrix, HermitianOperator, UnitaryOperator};
use crate::transport::{ordered_product, PathSpec};

/// Discretization of the lasso construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NastConfig {
    /// Straight midpoint steps per grid edge for cells and tails.
    pub edge_substeps: usize,
    /// Steps per grid edge for the reference boundary holonomy.
    pub reference_refinement: usize,
}

impl Default for NastConfig {
    fn default() -> Self {
        Self { edge_substeps: 2, reference_refinement: 64 }
    }
}

/// `U^-1 C U`: cell holonomy `C` conjugated by its tail transport `U`.
#[derive(Debug, Clone)]
pub struct Lasso {
    pub cell: (usize, usize),
    /// Grid-line tail `S(0,0) -> S(i,0) -> S(i,j)`.
    pub tail_path: PathSpec,
    pub tail: UnitaryOperator,
    /// Counter-clockwise holonomy around the cell from its lower-left node.
    pub cell_holonomy: UnitaryOperator,
    pub value: UnitaryOperator,
}

/// Order in which lassos are composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// Strip `i` collects cells `(i, 0..n_v)`, applied `j = 0` first; strips
    /// are applied from `i = n_u - 1` down to `0`, so tails telescope into
    /// the boundary loop.
    Fishbone,
}

#[derive(Debug, Clone)]
pub struct SurfaceOrderedProduct {
    pub operator: UnitaryOperator,
    pub ordering: Ordering,
    pub cell_count: usize,
}

fn inverse(u: &UnitaryOperator) -> UnitaryOperator {
    u.adjoint()
}

fn edge(model: &dyn ParametricHamiltonian, a: &ParameterPoint, b: &ParameterPoint, substeps: usize) -> Result<UnitaryOperator> {
    if a == b {
        return Ok(UnitaryOperator::identity(model.dim()));
    }
    ordered_product(model, &PathSpec::open(vec![a.clone(), b.clone()], substeps)?.samples())
}

/// Transport operators along every grid edge of a patch.
struct EdgeCache {
    /// `along_u[i][j]`: node `(i, j) -> (i + 1, j)`.
    along_u: Vec<Vec<UnitaryOperator>>,
    /// `along_v[i][j]`: node `(i, j) -> (i, j + 1)`.
    along_v: Vec<Vec<UnitaryOperator>>,
}

impl EdgeCache {
    fn build(model: &dyn ParametricHamiltonian, s: &SurfacePatch, substeps: usize) -> Result<Self> {
        let (nu, nv) = s.grid();
        let along_u = (0..nu)
            .into_par_iter()
            .map(|i| (0..=nv).map(|j| edge(model, &s.node(i, j), &s.node(i + 1, j), substeps)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let along_v = (0..=nu)
            .into_par_iter()
            .map(|i| (0..nv).map(|j| edge(model, &s.node(i, j), &s.node(i, j + 1), substeps)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        Ok(Self { along_u, along_v })
    }

    fn cell(&self, i: usize, j: usize) -> UnitaryOperator {
        // bottom, right, top backwards, left backwards
        let bottom = &self.along_u[i][j];
        let right = &self.along_v[i + 1][j];
        let top = inverse(&self.along_u[i][j + 1]);
        let left = inverse(&self.along_v[i][j]);
        left.then_after(&top.then_after(&right.then_after(bottom)))
    }

    /// Tails for every node `(i, j)` with `i < n_u`, `j < n_v`.
    fn tails(&self, dim: usize) -> Vec<Vec<UnitaryOperator>> {
        let nu = self.along_u.len();
        let nv = self.along_v[0].len();
        let mut out = Vec::with_capacity(nu);
        let mut foot = UnitaryOperator::identity(dim);
        for i in 0..nu {
            let mut column = Vec::with_capacity(nv);
            let mut t = foot.clone();
            for j in 0..nv {
                column.push(t.clone());
                t = self.along_v[i][j].then_after(&t);
            }
            out.push(column);
            foot = self.along_u[i][0].then_after(&foot);
        }
        out
    }
}

fn tail_path(s: &SurfacePatch, i: usize, j: usize, substeps: usize) -> Result<PathSpec> {
    let mut v: Vec<ParameterPoint> = (0..=i).map(|k| s.node(k, 0)).collect();
    v.extend((1..=j).map(|k| s.node(i, k)));
    v.dedup();
    PathSpec::open(v, substeps)
}

/// The lasso of cell `(i, j)`, built from scratch along its own tail.
pub fn lasso_holonomy(
    model: &dyn ParametricHamiltonian,
    s: &SurfacePatch,
    cell: (usize, usize),
    cfg: &NastConfig,
) -> Result<Lasso> {
    let (i, j) = cell;
    let (nu, nv) = s.grid();
    if i >= nu || j >= nv {
        return Err(Error::InvalidConfig(format!("cell ({i}, {j}) outside the {nu}x{nv} grid")));
    }
    let path = tail_path(s, i, j, cfg.edge_substeps)?;
    let tail = ordered_product(model, &path.samples())?;
    let e = |a: &ParameterPoint, b: &ParameterPoint| edge(model, a, b, cfg.edge_substeps);
    let (p00, p10, p11, p01) = (s.node(i, j), s.node(i + 1, j), s.node(i + 1, j + 1), s.node(i, j + 1));
    let cell_holonomy = e(&p01, &p00)?.then_after(&e(&p11, &p01)?.then_after(&e(&p10, &p11)?.then_after(&e(&p00, &p10)?)));
    let value = inverse(&tail).then_after(&cell_holonomy.then_after(&tail));
    Ok(Lasso { cell, tail_path: path, tail, cell_holonomy, value })
}

/// All lasso values, indexed `[i][j]`.
pub fn lassos(model: &dyn ParametricHamiltonian, s: &SurfacePatch, cfg: &NastConfig) -> Result<Vec<Vec<UnitaryOperator>>> {
    let cache = EdgeCache::build(model, s, cfg.edge_substeps)?;
    let tails = cache.tails(model.dim());
    let (nu, nv) = s.grid();
    Ok((0..nu)
        .map(|i| {
            (0..nv)
                .map(|j| {
                    let t = &tails[i][j];
                    inverse(t).then_after(&cache.cell(i, j).then_after(t))
                })
                .collect()
        })
        .collect())
}

/// Compose lasso values in fishbone order.
pub fn compose_fishbone(values: &[Vec<UnitaryOperator>]) -> UnitaryOperator {
    let dim = values[0][0].dim();
    let mut total = UnitaryOperator::identity(dim);
    for strip in values.iter().rev() {
        let mut s = UnitaryOperator::identity(dim);
        for l in strip {
            s = l.then_after(&s);
        }
        total = s.then_after(&total);
    }
    total
}

pub fn surface_ordered_product(
    model: &dyn ParametricHamiltonian,
    s: &SurfacePatch,
    cfg: &NastConfig,
) -> Result<SurfaceOrderedProduct> {
    let values = lassos(model, s, cfg)?;
    let (nu, nv) = s.grid();
    Ok(SurfaceOrderedProduct { operator: compose_fishbone(&values), ordering: Ordering::Fishbone, cell_count: nu * nv })
}

/// `P exp(i oint A)` around the boundary of `s`, from `S(0, 0)`, in the original basis.
pub fn boundary_holonomy(model: &dyn ParametricHamiltonian, s: &SurfacePatch, refinement: usize) -> Result<UnitaryOperator> {
    let lp = s.boundary(refinement)?;
    lp.check_closed(&model.periods())?;
    ordered_product(model, &lp.samples())
}

/// Outcome of a NAST comparison.
#[derive(Debug, Clone, Copy)]
pub struct NastReport {
    /// `|surface product - boundary holonomy|_F`.
    pub residual: f64,
    pub cell_count: usize,
}

/// Distance between the fishbone surface product and the finely resolved
/// holonomy around `dS`, restricted to the levels certified at the base point.
pub fn nast_residual(model: &dyn ParametricHamiltonian, s: &SurfacePatch, cfg: &NastConfig) -> Result<NastReport> {
    let surface = surface_ordered_product(model, s, cfg)?;
    let boundary = boundary_holonomy(model, s, cfg.reference_refinement)?;
    let base = LocalData::at(model, &s.base_point())?;
    let v = base.spectrum.frame.matrix();
    let k = base.spectrum.checked_levels;
    let diff: CMatrix = v.adjoint() * (surface.operator.matrix() - boundary.matrix()) * v;
    Ok(NastReport { residual: diff.view((0, 0), (k, k)).norm(), cell_count: surface.cell_count })
}

/// `|P exp(i oint omega(., t)) - I|_F`: transport by the Maurer-Cartan form at
/// fixed `t`, which is pure gauge and so returns the identity.
pub fn maurer_cartan_flatness(model: &dyn ParametricHamiltonian, lp: &PathSpec, t: f64) -> Result<f64> {
    lp.check_closed(&model.periods())?;
    let samples = lp.samples();
    let steps = samples
        .par_windows(2)
        .map(|w| {
            let mid = ParameterPoint::lerp(&w[0], &w[1], 0.5);
            let local = LocalData::at(model, &mid)?;
            let omega = maurer_cartan_from(&local.spectrum, &local.grad, t)?;
            let delta = w[0].delta_to(&w[1]);
            let mut g = CMatrix::zeros(model.dim(), model.dim());
            for (o, d) in omega.iter().zip(&delta) {
                g += o.matrix().scale(*d);
            }
            expm_i(&HermitianOperator::new(g)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let dim = model.dim();
    let u = steps.iter().fold(UnitaryOperator::identity(dim), |u, s| s.then_after(&u));
    Ok((u.matrix() - CMatrix::identity(dim, dim)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::to_eigenbasis;
    use crate::curvature::berry_curvature_at;
    use crate::model::{spectral_at, ModelSpec, Su2Model};
    use crate::transport::{holonomy, su2_triangle};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn single_cell_equals_its_loop() {
        let m = Su2Model::new(1, 1.0).unwrap();
        let s = SurfacePatch::spherical_sector(1.0, 1.0, 0.8, 1, 1).unwrap();
        let cfg = NastConfig { edge_substeps: 4, ..Default::default() };
        let sop = surface_ordered_product(&m, &s, &cfg).unwrap();
        let l = lasso_holonomy(&m, &s, (0, 0), &cfg).unwrap();
        assert!((sop.operator.matrix() - l.cell_holonomy.matrix()).norm() < 1e-13);
        assert_eq!(l.tail, UnitaryOperator::identity(2));
    }

    #[test]
    fn cached_lassos_match_direct_construction() {
        let m = ModelSpec::pseudo_random(3, 2, 4, 9).unwrap();
        let s = SurfacePatch::rectangle(ParameterPoint::new(vec![0.1, 0.2]).unwrap(), 0, 1, 0.3, 0.2, 4, 3).unwrap();
        let cfg = NastConfig::default();
        let all = lassos(&m, &s, &cfg).unwrap();
        let direct = lasso_holonomy(&m, &s, (2, 1), &cfg).unwrap();
        assert!((all[2][1].matrix() - direct.value.matrix()).norm() < 1e-12);
    }

    #[test]
    fn constant_model() {
        let m = ModelSpec::parse("dim = 2\nparams = a b\nterm 0 0\n1 0\n0 -1\n").unwrap();
        let s = SurfacePatch::rectangle(ParameterPoint::new(vec![0.0, 0.0]).unwrap(), 0, 1, 1.0, 1.0, 5, 5).unwrap();
        let r = nast_residual(&m, &s, &NastConfig::default()).unwrap();
        assert!(r.residual < 1e-12);
        let l = lasso_holonomy(&m, &s, (3, 2), &NastConfig::default()).unwrap();
        assert_eq!(l.value, UnitaryOperator::identity(2));
    }

    #[test]
    fn fishbone_telescopes_to_coarse_boundary() {
        let m = ModelSpec::pseudo_random(3, 2, 4, 31).unwrap();
        let s = SurfacePatch::rectangle(ParameterPoint::new(vec![-0.2, 0.1]).unwrap(), 0, 1, 0.4, 0.3, 6, 5).unwrap();
        let sop = surface_ordered_product(&m, &s, &NastConfig::default()).unwrap();
        let coarse = boundary_holonomy(&m, &s, NastConfig::default().edge_substeps).unwrap();
        assert!((sop.operator.matrix() - coarse.matrix()).norm() < 1e-12);
        let r = nast_residual(&m, &s, &NastConfig::default()).unwrap();
        assert!(r.residual < 1e-3, "{r:?}");
    }

    #[test]
    fn cap_product_is_berry_diagonal() {
        let m = Su2Model::new(1, 1.0).unwrap();
        let s = SurfacePatch::spherical_cap(1.0, FRAC_PI_2, 50, 50).unwrap();
        let sop = surface_ordered_product(&m, &s, &NastConfig::default()).unwrap();
        let spec = spectral_at(&m, &s.base_point(), f64::NAN).unwrap();
        let d = to_eigenbasis(&spec, sop.operator.matrix());
        let expected = [PI / 4.0, -PI / 4.0];
        for n in 0..2 {
            assert!((d[(n, n)] - num_complex::Complex64::from_polar(1.0, expected[n])).norm() < 1e-3);
        }
    }

    #[test]
    fn cap_residual_converges() {
        let m = Su2Model::new(1, 1.0).unwrap();
        let cfg = NastConfig::default();
        let coarse = nast_residual(&m, &SurfacePatch::spherical_cap(1.0, FRAC_PI_2, 25, 25).unwrap(), &cfg).unwrap();
        let fine = nast_residual(&m, &SurfacePatch::spherical_cap(1.0, FRAC_PI_2, 50, 50).unwrap(), &cfg).unwrap();
        assert!(fine.residual <= 1e-3, "{fine:?}");
        assert!(coarse.residual / fine.residual >= 3.0, "{coarse:?} {fine:?}");
    }

    #[test]
    fn spin_one_small_cap() {
        let m = Su2Model::new(2, 1.0).unwrap();
        let r = nast_residual(&m, &SurfacePatch::spherical_cap(1.0, 0.5, 50, 50).unwrap(), &NastConfig::default()).unwrap();
        assert!(r.residual <= 1e-3, "{r:?}");
    }

    #[test]
    fn lasso_phase_matches_cell_curvature() {
        let m = Su2Model::new(1, 1.0).unwrap();
        let n = 40;
        let s = SurfacePatch::spherical_sector(1.0, 1.2, 1.0, n, n).unwrap();
        let l = lasso_holonomy(&m, &s, (20, 10), &NastConfig { edge_substeps: 4, ..Default::default() }).unwrap();
        let spec = spectral_at(&m, &s.base_point(), f64::NAN).unwrap();
        let d = to_eigenbasis(&spec, l.value.matrix());
        let centre = s.at(20.5 / n as f64, 10.5 / n as f64);
        let w = berry_curvature_at(&m, &centre).unwrap();
        let area = (1.2 / n as f64) * (1.0 / n as f64);
        for k in 0..2 {
            let phase = d[(k, k)].arg();
            assert!((phase - area * w.get(k, 1, 2)).abs() < 1e-5, "level {k}");
        }
        assert!(d[(0, 1)].norm() < 1e-5);
    }

    #[test]
    fn adjacent_lassos_commute_to_tolerance() {
        let m = Su2Model::new(2, 1.0).unwrap();
        let s = SurfacePatch::spherical_cap(1.0, 1.0, 12, 12).unwrap();
        let mut values = lassos(&m, &s, &NastConfig::default()).unwrap();
        let reference = compose_fishbone(&values);
        values[5].swap(3, 4);
        let swapped = compose_fishbone(&values);
        assert!((reference.matrix() - swapped.matrix()).norm() < 1e-6);
    }

    #[test]
    fn maurer_cartan_is_flat_but_averaged_connection_is_not() {
        let m = Su2Model::new(1, 1.0).unwrap();
        let lp = su2_triangle(1.0, FRAC_PI_2, 4000).unwrap();
        assert_eq!(maurer_cartan_flatness(&m, &lp, 0.0).unwrap(), 0.0);
        let r = maurer_cartan_flatness(&m, &lp, 1.7).unwrap();
        assert!(r <= 1e-4, "{r}");
        let r_coarse = maurer_cartan_flatness(&m, &su2_triangle(1.0, FRAC_PI_2, 2000).unwrap(), 1.7).unwrap();
        assert!(r_coarse / r >= 3.0);
        let h = holonomy(&m, &lp).unwrap();
        assert!((h.phases[0] - PI / 4.0).abs() < 1e-6 && (h.phases[1] + PI / 4.0).abs() < 1e-6);
    }
}
