use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::model::ParameterPoint;

/// Closure tolerance on loop endpoints.
pub const CLOSURE_TOL: f64 = 1e-12;

/// A polyline through parameter space, subdivided `refinement` times per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    vertices: Vec<ParameterPoint>,
    closed: bool,
    refinement: usize,
}

impl PathSpec {
    /// Open path through `vertices`.
    pub fn open(vertices: Vec<ParameterPoint>, refinement: usize) -> Result<Self> {
        Self::build(vertices, false, refinement)
    }

    /// Closed loop; the last vertex must repeat the first (possibly shifted by
    /// whole periods of angular coordinates, see [`PathSpec::closure_mismatch`]).
    pub fn closed(vertices: Vec<ParameterPoint>, refinement: usize) -> Result<Self> {
        Self::build(vertices, true, refinement)
    }

    fn build(vertices: Vec<ParameterPoint>, closed: bool, refinement: usize) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::InvalidPath("path has no vertices".into()));
        };
        if refinement == 0 {
            return Err(Error::InvalidPath("refinement must be at least 1".into()));
        }
        if vertices.iter().any(|v| v.len() != first.len()) {
            return Err(Error::InvalidPath("vertices have different arity".into()));
        }
        if let Some(k) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!("vertices {k} and {} coincide", k + 1)));
        }
        if closed && vertices.len() < 3 {
            return Err(Error::InvalidPath("a loop needs at least three vertices".into()));
        }
        Ok(Self { vertices, closed, refinement })
    }

    pub fn vertices(&self) -> &[ParameterPoint] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    pub fn with_refinement(&self, refinement: usize) -> Result<Self> {
        Self::build(self.vertices.clone(), self.closed, refinement)
    }

    pub fn n_steps(&self) -> usize {
        (self.vertices.len() - 1) * self.refinement
    }

    /// The same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices, closed: self.closed, refinement: self.refinement }
    }

    /// All sample points `lambda_0 ... lambda_K` after subdivision.
    pub fn samples(&self) -> Vec<ParameterPoint> {
        let mut out = Vec::with_capacity(self.n_steps() + 1);
        out.push(self.vertices[0].clone());
        for w in self.vertices.windows(2) {
            for k in 1..=self.refinement {
                out.push(ParameterPoint::lerp(&w[0], &w[1], k as f64 / self.refinement as f64));
            }
        }
        out
    }

    /// Largest coordinate mismatch between the end and start points, after
    /// removing whole periods of the angular coordinates.
    pub fn closure_mismatch(&self, periods: &[Option<f64>]) -> f64 {
        let (a, b) = (&self.vertices[0], self.vertices.last().unwrap());
        a.coords()
            .iter()
            .zip(b.coords())
            .enumerate()
            .map(|(i, (x, y))| {
                let d = y - x;
                match periods.get(i).copied().flatten() {
                    Some(p) => (d - p * (d / p).round()).abs(),
                    None => d.abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn check_closed(&self, periods: &[Option<f64>]) -> Result<()> {
        if !self.closed {
            return Err(Error::InvalidPath("holonomy needs a closed loop".into()));
        }
        let mismatch = self.closure_mismatch(periods);
        if mismatch > CLOSURE_TOL {
            return Err(Error::LoopNotClosed(mismatch));
        }
        Ok(())
    }
}

/// Geodesic triangle on the field sphere: north pole, down to the equator at
/// `phi = 0`, along the equator to `phi = omega`, back up to the pole. Encloses
/// solid angle `omega`.
pub fn su2_triangle(b: f64, omega: f64, refinement: usize) -> Result<PathSpec> {
    let p = |t: f64, f: f64| ParameterPoint::from([b, t, f]);
    PathSpec::closed(
        vec![p(0.0, 0.0), p(FRAC_PI_2, 0.0), p(FRAC_PI_2, omega), p(0.0, omega), p(0.0, 0.0)],
        refinement,
    )
}

/// Circle of latitude `theta0`, traversed with increasing `phi`; `n` chords.
pub fn su2_latitude_circle(b: f64, theta0: f64, n: usize, refinement: usize) -> Result<PathSpec> {
    let vertices = (0..=n).map(|k| ParameterPoint::from([b, theta0, TAU * k as f64 / n as f64])).collect();
    PathSpec::closed(vertices, refinement)
}

/// Circle of radius `r` about `center` in the `(mu, nu)` coordinate plane,
/// counter-clockwise, as a polygon with `n` chords.
pub fn planar_circle(
    center: &ParameterPoint,
    mu: usize,
    nu: usize,
    r: f64,
    n: usize,
    refinement: usize,
) -> Result<PathSpec> {
    if mu == nu || mu >= center.len() || nu >= center.len() {
        return Err(Error::InvalidPath("circle plane needs two distinct coordinates".into()));
    }
    if n < 3 {
        return Err(Error::InvalidPath("a circle needs at least three chords".into()));
    }
    let mut vertices: Vec<ParameterPoint> = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            center.shifted(mu, r * a.cos()).shifted(nu, r * a.sin())
        })
        .collect();
    vertices.push(vertices[0].clone());
    PathSpec::closed(vertices, refinement)
}

/// Out along `direction` by `length` and straight back.
pub fn out_and_back(start: &ParameterPoint, direction: &[f64], length: f64, refinement: usize) -> Result<PathSpec> {
    let far = start.displaced(direction, length);
    let mid = start.displaced(direction, 0.5 * length);
    PathSpec::closed(vec![start.clone(), mid.clone(), far, mid, start.clone()], refinement)
}
