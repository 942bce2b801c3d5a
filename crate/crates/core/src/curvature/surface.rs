use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::ParameterPoint;
use crate::transport::PathSpec;

type PatchMap = dyn Fn(f64, f64) -> ParameterPoint + Send + Sync;

/// Parametrized surface `(u, v) in [0, 1]^2 -> lambda`, sampled on an
/// `n_u x n_v` grid. The boundary runs counter-clockwise in `(u, v)` from
/// `S(0, 0)`.
#[derive(Clone)]
pub struct SurfacePatch {
    map: Arc<PatchMap>,
    n_u: usize,
    n_v: usize,
    label: String,
}

impl fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfacePatch")
            .field("label", &self.label)
            .field("n_u", &self.n_u)
            .field("n_v", &self.n_v)
            .finish()
    }
}

impl SurfacePatch {
    pub fn new<F>(map: F, n_u: usize, n_v: usize, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64, f64) -> ParameterPoint + Send + Sync + 'static,
    {
        if n_u == 0 || n_v == 0 {
            return Err(Error::InvalidConfig("surface grid needs at least one cell per direction".into()));
        }
        Ok(Self { map: Arc::new(map), n_u, n_v, label: label.into() })
    }

    /// Spherical cap about the north pole enclosing solid angle `omega`:
    /// `theta = theta_c u`, `phi = 2 pi v`.
    pub fn spherical_cap(b: f64, omega: f64, n_u: usize, n_v: usize) -> Result<Self> {
        if !(omega > 0.0 && omega < 2.0 * TAU) {
            return Err(Error::InvalidConfig(format!("cap solid angle {omega} outside (0, 4 pi)")));
        }
        let theta_c = (1.0 - omega / TAU).acos();
        Self::new(move |u, v| ParameterPoint::from([b, theta_c * u, TAU * v]), n_u, n_v, format!("cap(omega={omega})"))
    }

    /// `theta in [0, theta_max]`, `phi in [0, omega]` on the field sphere; for
    /// `theta_max = pi/2` its boundary is the geodesic triangle.
    pub fn spherical_sector(b: f64, theta_max: f64, omega: f64, n_u: usize, n_v: usize) -> Result<Self> {
        Self::new(
            move |u, v| ParameterPoint::from([b, theta_max * u, omega * v]),
            n_u,
            n_v,
            format!("sector(theta={theta_max}, omega={omega})"),
        )
    }

    /// Flat rectangle `origin + u a e_mu + v b e_nu`.
    pub fn rectangle(origin: ParameterPoint, mu: usize, nu: usize, a: f64, b: f64, n_u: usize, n_v: usize) -> Result<Self> {
        if mu == nu || mu >= origin.len() || nu >= origin.len() {
            return Err(Error::InvalidConfig("rectangle needs two distinct coordinates".into()));
        }
        Self::new(
            move |u, v| origin.shifted(mu, u * a).shifted(nu, v * b),
            n_u,
            n_v,
            format!("rectangle({mu},{nu})"),
        )
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.n_u, self.n_v)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Same map on another grid.
    pub fn with_grid(&self, n_u: usize, n_v: usize) -> Result<Self> {
        if n_u == 0 || n_v == 0 {
            return Err(Error::InvalidConfig("surface grid needs at least one cell per direction".into()));
        }
        Ok(Self { map: Arc::clone(&self.map), n_u, n_v, label: self.label.clone() })
    }

    pub fn at(&self, u: f64, v: f64) -> ParameterPoint {
        (self.map)(u, v)
    }

    /// Grid node `(i, j)` at `(i / n_u, j / n_v)`.
    pub fn node(&self, i: usize, j: usize) -> ParameterPoint {
        self.at(i as f64 / self.n_u as f64, j as f64 / self.n_v as f64)
    }

    pub fn base_point(&self) -> ParameterPoint {
        self.at(0.0, 0.0)
    }

    /// `(d lambda / du, d lambda / dv)` by central differences.
    pub fn jacobian(&self, u: f64, v: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 1e-6;
        let du = self.at(u - h, v).delta_to(&self.at(u + h, v)).into_iter().map(|d| d / (2.0 * h)).collect();
        let dv = self.at(u, v - h).delta_to(&self.at(u, v + h)).into_iter().map(|d| d / (2.0 * h)).collect();
        (du, dv)
    }

    /// Boundary loop through the images of the boundary grid nodes, each grid
    /// edge split into `refinement` straight steps.
    pub fn boundary(&self, refinement: usize) -> Result<PathSpec> {
        let (nu, nv) = (self.n_u, self.n_v);
        let mut nodes = Vec::with_capacity(2 * (nu + nv) + 1);
        nodes.extend((0..nu).map(|i| self.node(i, 0)));
        nodes.extend((0..nv).map(|j| self.node(nu, j)));
        nodes.extend((0..nu).map(|i| self.node(nu - i, nv)));
        nodes.extend((0..nv).map(|j| self.node(0, nv - j)));
        nodes.push(self.node(0, 0));
        nodes.dedup();
        PathSpec::closed(nodes, refinement)
    }
}
