//! Dense complex operators with certified structure.
//!
//! Everything downstream works with [`HermitianOperator`] (Hamiltonians, their
//! parameter derivatives, connection and curvature components) and
//! [`UnitaryOperator`] (transport operators, eigenframes). Both are thin
//! newtypes over a `nalgebra` dense complex matrix; constructors validate the
//! structure once so later code can rely on it.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative Hermiticity tolerance, `|M - M^dag|_F <= tol * |M|_F`.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Unitarity tolerance, `|U^dag U - I|_F <= tol * dim`.
pub const UNITARITY_TOL: f64 = 1e-10;

const PHASE_TIE_TOL: f64 = 1e-9;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

fn relative_asymmetry(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

fn check_finite(m: &CMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Dense Hermitian matrix. The stored entries are exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    /// Validates `m` against [`HERMITICITY_TOL`] and stores its Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m, "Hermitian operator")?;
        let asym = relative_asymmetry(&m);
        if asym > HERMITICITY_TOL {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self::hermitian_part(&m))
    }

    /// `(m + m^dag) / 2` without any tolerance check.
    pub(crate) fn hermitian_part(m: &CMatrix) -> Self {
        Self((m + m.adjoint()).scale(0.5))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(CMatrix::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { c(0.0, 0.0) }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    /// Unitary conjugation `U H U^dag`.
    pub fn conjugate_by(&self, u: &UnitaryOperator) -> Self {
        Self::hermitian_part(&(u.matrix() * &self.0 * u.matrix().adjoint()))
    }

    /// Matrix elements in the basis given by the columns of `frame`.
    pub fn in_basis(&self, frame: &UnitaryOperator) -> CMatrix {
        frame.matrix().adjoint() * &self.0 * frame.matrix()
    }

    /// `max |E_n|`.
    pub fn spectral_radius(&self) -> f64 {
        eigen_raw(&self.0).0.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()))
    }
}

/// Result of [`hermitize`]: the symmetrized operator plus how far the input
/// was from Hermitian.
#[derive(Debug, Clone)]
pub struct Hermitized {
    pub operator: HermitianOperator,
    pub relative_asymmetry: f64,
}

impl Hermitized {
    /// True when the input exceeded [`HERMITICITY_TOL`].
    pub fn warning(&self) -> bool {
        self.relative_asymmetry > HERMITICITY_TOL
    }
}

/// Returns `(M + M^dag) / 2`, flagging inputs that were not Hermitian to begin with.
pub fn hermitize(m: &CMatrix) -> Result<Hermitized> {
    check_square(m)?;
    check_finite(m, "hermitize input")?;
    Ok(Hermitized {
        operator: HermitianOperator::hermitian_part(m),
        relative_asymmetry: relative_asymmetry(m),
    })
}

/// Dense unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator(CMatrix);

impl UnitaryOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m, "unitary operator")?;
        let u = Self(m);
        let dev = u.unitarity_deviation();
        if dev > UNITARITY_TOL * u.dim() as f64 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(u)
    }

    /// Wraps a matrix known to be unitary up to rounding (products of unitaries).
    pub(crate) fn trusted(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `self * other`: apply `other` first.
    pub fn then_after(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    /// `|U^dag U - I|_F`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        (self.0.adjoint() * &self.0 - CMatrix::identity(n, n)).norm()
    }

    pub fn column(&self, j: usize) -> nalgebra::DVector<C64> {
        self.0.column(j).into_owned()
    }
}

/// Rule fixing the free unit phase of each eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// Largest-magnitude component real positive; ties go to the lowest index.
    #[default]
    LargestComponent,
    /// First component with non-negligible magnitude real positive.
    FirstComponent,
}

fn pivot_index(col: &[C64], convention: PhaseConvention) -> Option<usize> {
    let max = col.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return None;
    }
    let threshold = match convention {
        PhaseConvention::LargestComponent => max * (1.0 - PHASE_TIE_TOL),
        PhaseConvention::FirstComponent => max * 1e-6,
    };
    col.iter().position(|z| z.norm() >= threshold)
}

pub(crate) fn fix_phase_in_place(m: &mut CMatrix, convention: PhaseConvention) -> Result<()> {
    for j in 0..m.ncols() {
        let col: Vec<C64> = m.column(j).iter().copied().collect();
        let k = pivot_index(&col, convention).ok_or(Error::ZeroColumn(j))?;
        let pivot = col[k];
        let phase = pivot.conj() / pivot.norm();
        let mut column = m.column_mut(j);
        for z in column.iter_mut() {
            *z *= phase;
        }
        column[k] = c(pivot.norm(), 0.0);
    }
    Ok(())
}

/// Multiplies each column by the unit phase selected by `convention`.
pub fn fix_phase(frame: &UnitaryOperator, convention: PhaseConvention) -> Result<UnitaryOperator> {
    let mut m = frame.matrix().clone();
    fix_phase_in_place(&mut m, convention)?;
    Ok(UnitaryOperator(m))
}

/// Eigenvalues ascending and matching eigenvector columns, no further checks.
pub(crate) fn eigen_raw(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.nrows();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Eigen-decomposition of a Hermitian operator with a non-degeneracy certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub frame: UnitaryOperator,
    /// Smallest adjacent gap among the checked levels.
    pub min_gap: f64,
    /// Number of leading levels whose gaps were certified.
    pub checked_levels: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()))
    }

    /// `V diag(E) V^dag`.
    pub fn reassemble(&self) -> CMatrix {
        let v = self.frame.matrix();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| c(e, 0.0)),
        ));
        v * d * v.adjoint()
    }
}

/// Default scale-aware degeneracy threshold `1e-8 (1 + spectral radius)`.
pub fn default_gap_tol(spectral_radius: f64) -> f64 {
    1e-8 * (1.0 + spectral_radius)
}

/// Ascending spectrum and phase-fixed eigenframe; errors when any adjacent gap
/// falls below `gap_tol`.
pub fn spectral_decompose(h: &HermitianOperator, gap_tol: f64) -> Result<SpectralDecomposition> {
    spectral_decompose_with(h, gap_tol, PhaseConvention::default(), h.dim())
}

/// Like [`spectral_decompose`] with the default gap tolerance.
pub fn spectral_decompose_auto(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    spectral_decompose_with(h, f64::NAN, PhaseConvention::default(), h.dim())
}

/// Full-control variant: only the first `checked_levels` levels are tested
/// for degeneracy. A NaN `gap_tol` selects [`default_gap_tol`].
pub fn spectral_decompose_with(
    h: &HermitianOperator,
    gap_tol: f64,
    convention: PhaseConvention,
    checked_levels: usize,
) -> Result<SpectralDecomposition> {
    spectral_decompose_trusted(h, gap_tol, convention, |_, _| checked_levels)
}

/// Variant where the number of certified levels is decided from the raw
/// eigenpairs (truncated models only trust a leading block).
pub fn spectral_decompose_trusted<F>(
    h: &HermitianOperator,
    gap_tol: f64,
    convention: PhaseConvention,
    trusted: F,
) -> Result<SpectralDecomposition>
where
    F: FnOnce(&[f64], &CMatrix) -> usize,
{
    check_finite(h.matrix(), "spectral_decompose input")?;
    let (eigenvalues, mut vectors) = eigen_raw(h.matrix());
    let radius = eigenvalues.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()));
    let tol = if gap_tol.is_nan() { default_gap_tol(radius) } else { gap_tol };
    let checked = trusted(&eigenvalues, &vectors).min(eigenvalues.len());
    let mut min_gap = f64::INFINITY;
    for n in 0..checked.saturating_sub(1) {
        let gap = eigenvalues[n + 1] - eigenvalues[n];
        if gap < tol {
            return Err(Error::DegenerateSpectrum { lower: n, upper: n + 1, gap });
        }
        min_gap = min_gap.min(gap);
    }
    if checked < 2 {
        min_gap = 0.0;
    }
    fix_phase_in_place(&mut vectors, convention)?;
    Ok(SpectralDecomposition {
        eigenvalues,
        frame: UnitaryOperator(vectors),
        min_gap,
        checked_levels: checked,
    })
}

/// `exp(i s H)` assembled from the spectral decomposition.
pub fn expm_hermitian(h: &HermitianOperator, s: f64) -> Result<UnitaryOperator> {
    check_finite(h.matrix(), "expm input")?;
    if !s.is_finite() {
        return Err(Error::NonFinite("expm parameter"));
    }
    if s == 0.0 {
        return Ok(UnitaryOperator::identity(h.dim()));
    }
    let (values, v) = eigen_raw(h.matrix());
    let n = h.dim();
    let mut vd = v.clone();
    for j in 0..n {
        let phase = C64::from_polar(1.0, s * values[j]);
        for i in 0..n {
            vd[(i, j)] *= phase;
        }
    }
    Ok(UnitaryOperator(vd * v.adjoint()))
}

/// `exp(i G)` for a Hermitian generator.
pub fn expm_i(g: &HermitianOperator) -> Result<UnitaryOperator> {
    expm_hermitian(g, 1.0)
}

/// Pauli matrices `(sigma_x, sigma_y, sigma_z)`.
pub fn pauli() -> [HermitianOperator; 3] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        HermitianOperator(CMatrix::from_row_slice(2, 2, &[z, one, one, z])),
        HermitianOperator(CMatrix::from_row_slice(2, 2, &[z, -i, i, z])),
        HermitianOperator(CMatrix::from_row_slice(2, 2, &[one, z, z, -one])),
    ]
}
