//! Dense complex linear algebra for small dimensions.
//!
//! Matrices are stored row-major. Composite spaces always use the
//! system ⊗ ancilla ordering: the system index is the slow (outer) index,
//! so basis element `|i⟩⊗|k⟩` sits at position `i * d_anc + k`.

use std::f64::consts::PI;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for unitarity and normalization checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * z).collect() }
    }

    /// Matrix product; panics on incompatible shapes (use [`ComplexMatrix::try_matmul`] to check).
    pub fn matmul(&self, other: &Self) -> Self {
        self.try_matmul(other).expect("incompatible matrix shapes")
    }

    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest entry-wise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-entry deviation of `M†M` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.cols))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// A square matrix verified unitary at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(m: ComplexMatrix, tolerance: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "unitary must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let deviation = m.unitarity_defect();
        if deviation > tolerance {
            return Err(Error::NotUnitary { deviation, tolerance });
        }
        Ok(Self(m))
    }

    pub fn identity(d: usize) -> Self {
        Self(ComplexMatrix::identity(d))
    }

    /// Diagonal unitary with the given eigenangles.
    pub fn from_phases(angles: &[f64]) -> Self {
        let diag: Vec<C64> = angles.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        Self(ComplexMatrix::from_diagonal(&diag))
    }

    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        debug_assert!(m.is_square());
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0.matmul(&other.0))
    }

    /// `V U V†`.
    pub fn conjugate_by(&self, v: &Self) -> Self {
        Self(v.0.matmul(&self.0).matmul(&v.0.adjoint()))
    }

    pub fn scale_phase(&self, phi: f64) -> Self {
        Self(self.0.scale(C64::from_polar(1.0, phi)))
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector { amps: self.0.apply(v.amplitudes()) }
    }

    /// `⟨v|U|v⟩`.
    pub fn expectation(&self, v: &StateVector) -> C64 {
        inner(v.amplitudes(), &self.0.apply(v.amplitudes()))
    }
}

/// A unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidArgument("state vector must be non-empty".into()));
        }
        let deviation = (norm(&amps) - 1.0).abs();
        if !(deviation <= DEFAULT_TOLERANCE) {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amps })
    }

    /// Normalizes `amps`; fails on a zero vector.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
        }
        for a in &mut amps {
            *a /= n;
        }
        Ok(Self { amps })
    }

    pub(crate) fn from_normalized_unchecked(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(d: usize, index: usize) -> Result<Self> {
        if index >= d {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for d={d}")));
        }
        let mut amps = vec![ZERO; d];
        amps[index] = ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amps, &self.amps)
    }

    /// `|self⟩ ⊗ |other⟩` in system ⊗ ancilla order.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amps = self.amps.iter().flat_map(|&a| other.amps.iter().map(move |&b| a * b)).collect();
        StateVector { amps }
    }
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    // rem_euclid can round up to exactly 2π
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Eigenangles of a unitary, each in `(-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenangleSet {
    angles: Vec<f64>,
}

impl EigenangleSet {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = angles.iter().find(|&&t| !(t > -PI && t <= PI)) {
            return Err(Error::InvalidArgument(format!("eigenangle {bad} not in (-pi, pi]")));
        }
        Ok(Self { angles })
    }

    /// Normalizes each angle into `(-π, π]` first.
    pub fn from_raw(angles: impl IntoIterator<Item = f64>) -> Self {
        Self { angles: angles.into_iter().map(normalize_angle).collect() }
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.angles
    }

    /// Ascending copy; the sort is stable so equal angles keep their order.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.angles.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// `Σ_k e^{iθ_k}`, the trace of any unitary with this spectrum.
    pub fn trace(&self) -> C64 {
        self.angles.iter().map(|&t| C64::from_polar(1.0, t)).sum()
    }

    pub fn min(&self) -> f64 {
        self.angles.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.angles.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ_k (θ_k - θ̄)²` with angles taken as stored (no unwrapping).
    pub fn spread(&self) -> f64 {
        angle_spread(&self.angles)
    }
}

/// Sum of squared deviations from the mean.
pub fn angle_spread(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let mean = angles.iter().sum::<f64>() / angles.len() as f64;
    angles.iter().map(|t| (t - mean).powi(2)).sum()
}

/// Spectrum and eigenbasis of a unitary: `U = V diag(e^{iθ}) V†`.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub angles: EigenangleSet,
    pub basis: UnitaryMatrix,
}

/// Eigenvalues closer than this are treated as one cluster and separated
/// by the next commuting Hermitian part.
const CLUSTER_TOLERANCE: f64 = 1e-6;

/// Diagonalizes a unitary through its commuting Hermitian parts
/// A = (U + U†)/2 and B = (U - U†)/2i.
///
/// Eigenvectors of A are eigenvectors of U except inside clusters of equal
/// cos θ, which are split by B and then by the imaginary part of U rotated
/// to the cluster's mean phase. Complex Schur iteration
/// is avoided because it can stall on highly degenerate spectra such as a
/// rank-one perturbation of the identity.
pub fn eigen_decompose(u: &UnitaryMatrix) -> Result<Eigendecomposition> {
    let d = u.dim();
    let m = u.matrix().to_nalgebra();
    let a = (&m + m.adjoint()).scale(0.5);
    let b = (&m - m.adjoint()) * C64::new(0.0, -0.5);
    let (ea, va) = hermitian_eigen(&a)?;
    let mut columns = Vec::with_capacity(d);
    for (lo, hi) in clusters(&ea) {
        let q = va.columns(lo, hi - lo).into_owned();
        if hi - lo == 1 {
            columns.push(q);
            continue;
        }
        let (eb, vb) = hermitian_eigen(&(q.adjoint() * &b * &q))?;
        let q = q * vb;
        for (lo2, hi2) in clusters(&eb) {
            let q2 = q.columns(lo2, hi2 - lo2).into_owned();
            if hi2 - lo2 == 1 {
                columns.push(q2);
            } else {
                // angles here sit near one phase φ where sin(θ - φ) is linear in θ
                let phase = (q2.adjoint() * &m * &q2).trace().arg();
                let rot = &m * C64::from_polar(1.0, -phase);
                let h = (&rot - rot.adjoint()) * C64::new(0.0, -0.5);
                let (_, v2) = hermitian_eigen(&(q2.adjoint() * h * &q2))?;
                columns.push(q2 * v2);
            }
        }
    }
    let basis = DMatrix::from_columns(
        &columns.iter().flat_map(|c| c.column_iter().map(|v| v.into_owned())).collect::<Vec<_>>(),
    );
    let angles = EigenangleSet::from_raw(basis.column_iter().map(|v| (v.adjoint() * &m * v)[(0, 0)].arg()));
    Ok(Eigendecomposition { angles, basis: UnitaryMatrix::new_unchecked(ComplexMatrix::from_nalgebra(&basis)) })
}

/// Eigenvalues in ascending order with matching eigenvector columns.
fn hermitian_eigen(h: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = h.nrows();
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 1000 * n.max(1)).ok_or(Error::EigenSolver(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    Ok((values, vectors))
}

/// Index ranges of runs of sorted values with consecutive gaps below the tolerance.
fn clusters(sorted: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut lo = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > CLUSTER_TOLERANCE {
            out.push((lo, i));
            lo = i;
        }
    }
    out
}

/// Eigenangles of a unitary, multiplicities preserved.
pub fn eigenangles(u: &UnitaryMatrix) -> Result<EigenangleSet> {
    if u.dim() == 0 {
        return Err(Error::InvalidArgument("empty unitary".into()));
    }
    Ok(eigen_decompose(u)?.angles)
}

/// `V diag(e^{iθ}) V†`.
pub fn unitary_from_spectrum(angles: &EigenangleSet, basis: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    let d = basis.dim();
    if angles.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "{} eigenangles for a basis of dimension {d}",
            angles.dim()
        )));
    }
    let v = basis.matrix();
    let phases: Vec<C64> = angles.as_slice().iter().map(|&t| C64::from_polar(1.0, t)).collect();
    // (V diag) V† computed row by row
    let out = ComplexMatrix::from_fn(d, d, |i, j| {
        (0..d).map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj()).sum()
    });
    Ok(UnitaryMatrix::new_unchecked(out))
}

/// Length of the shortest arc of the unit circle containing every angle:
/// `2π` minus the largest gap between circularly consecutive angles.
pub fn shortest_covering_arc(angles: &EigenangleSet) -> Result<f64> {
    if angles.dim() == 0 {
        return Err(Error::InvalidArgument("empty angle set".into()));
    }
    let sorted = angles.sorted();
    let n = sorted.len();
    let wrap_gap = sorted[0] + 2.0 * PI - sorted[n - 1];
    let largest_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(wrap_gap, f64::max);
    Ok((2.0 * PI - largest_gap).max(0.0))
}

/// Kronecker product `A ⊗ B`, with `A`'s indices outermost.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `tr_S(M)` for `M` on system(d) ⊗ ancilla(d_anc).
pub fn partial_trace_system(m: &ComplexMatrix, d: usize, d_anc: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, d, d_anc)?;
    Ok(ComplexMatrix::from_fn(d_anc, d_anc, |k, l| {
        (0..d).map(|i| m[(i * d_anc + k, i * d_anc + l)]).sum()
    }))
}

/// `tr_A(M)` for `M` on system(d) ⊗ ancilla(d_anc).
pub fn partial_trace_ancilla(m: &ComplexMatrix, d: usize, d_anc: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, d, d_anc)?;
    Ok(ComplexMatrix::from_fn(d, d, |i, j| {
        (0..d_anc).map(|k| m[(i * d_anc + k, j * d_anc + k)]).sum()
    }))
}

fn check_bipartite(m: &ComplexMatrix, d: usize, d_anc: usize) -> Result<()> {
    let n = d * d_anc;
    if d == 0 || d_anc == 0 || m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not an operator on a {d}x{d_anc} bipartite space",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn identity_has_zero_eigenangles() {
        let e = eigenangles(&UnitaryMatrix::identity(3)).unwrap();
        assert!(e.as_slice().iter().all(|t| t.abs() < 1e-12));
    }

    #[test]
    fn diagonal_eigenangles() {
        let u = UnitaryMatrix::from_phases(&[0.0, PI / 3.0]);
        let e = eigenangles(&u).unwrap().sorted();
        assert!((e[0]).abs() < 1e-12);
        assert!((e[1] - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigenangle_at_minus_pi_is_reported_as_pi() {
        let u = UnitaryMatrix::from_phases(&[PI, 0.0]);
        let e = eigenangles(&u).unwrap().sorted();
        assert!((e[1] - PI).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn rejects_non_unitary_and_non_square() {
        let m = ComplexMatrix::from_diagonal(&[ONE, C64::new(2.0, 0.0)]);
        assert!(matches!(UnitaryMatrix::new(m), Err(Error::NotUnitary { .. })));
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(UnitaryMatrix::new(m), Err(Error::DimensionMismatch(_))));
        assert!(ComplexMatrix::new(2, 2, vec![ONE; 3]).is_err());
        assert!(matches!(
            ComplexMatrix::new(1, 1, vec![C64::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite(0))
        ));
    }

    #[test]
    fn spectrum_construction() {
        let zeros = EigenangleSet::new(vec![0.0; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = crate::ensembles::haar_unitary(3, &mut rng);
        let u = unitary_from_spectrum(&zeros, &basis).unwrap();
        assert!(u.matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);

        let quarter = EigenangleSet::new(vec![0.0, PI / 2.0]).unwrap();
        let u = unitary_from_spectrum(&quarter, &UnitaryMatrix::identity(2)).unwrap();
        let expect = ComplexMatrix::from_diagonal(&[ONE, C64::new(0.0, 1.0)]);
        assert!(u.matrix().max_abs_diff(&expect) < 1e-15);

        assert!(matches!(
            unitary_from_spectrum(&quarter, &UnitaryMatrix::identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    // multiplicities, ±θ pairs sharing cos θ, and nearly equal angles
    #[test]
    fn degenerate_spectra_are_resolved() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cases: [Vec<f64>; 4] = [
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.4],
            vec![0.3, -0.3, 0.3, -0.3, 1.0],
            vec![1e-9, 2e-9, -1e-9, 0.0, 2.5, -2.5],
            vec![PI, PI, 0.0, 0.0, PI / 2.0, -PI / 2.0],
        ];
        for angles in cases {
            let d = angles.len();
            let basis = crate::ensembles::haar_unitary(d, &mut rng);
            let set = EigenangleSet::new(angles.clone()).unwrap();
            let u = unitary_from_spectrum(&set, &basis).unwrap();
            let dec = eigen_decompose(&u).unwrap();
            let mut want = angles;
            want.sort_by(f64::total_cmp);
            for (g, w) in dec.angles.sorted().iter().zip(&want) {
                assert!(normalize_angle(g - w).abs() < 1e-10, "{g} vs {w}");
            }
            let back = unitary_from_spectrum(&dec.angles, &dec.basis).unwrap();
            assert!(back.matrix().max_abs_diff(u.matrix()) < 1e-12);
            assert!(dec.basis.matrix().unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn covering_arc_examples() {
        let arc = |v: Vec<f64>| shortest_covering_arc(&EigenangleSet::new(v).unwrap()).unwrap();
        assert_eq!(arc(vec![0.0, 0.0, 0.0]), 0.0);
        assert!((arc(vec![-0.35, 0.35]) - 0.7).abs() < 1e-15);
        let deg = PI / 180.0;
        assert!((arc(vec![0.0, 90.0 * deg, normalize_angle(200.0 * deg)]) - 200.0 * deg).abs() < 1e-12);
        assert!(shortest_covering_arc(&EigenangleSet::new(vec![]).unwrap()).is_err());
    }

    #[test]
    fn covering_arc_matches_brute_force() {
        // every covering interval starts at some angle; take the shortest
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..7);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            let brute = v
                .iter()
                .map(|&start| {
                    v.iter().map(|&t| (t - start).rem_euclid(2.0 * PI)).fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min);
            let got = shortest_covering_arc(&EigenangleSet::new(v).unwrap()).unwrap();
            assert!((got - brute).abs() < 1e-12, "{got} vs {brute}");
        }
    }

    #[test]
    fn normalize_angle_range() {
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!(EigenangleSet::new(vec![-PI]).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let (d, da) = (3, 2);
        let pt = partial_trace_system(&ComplexMatrix::identity(d * da), d, da).unwrap();
        assert!(pt.max_abs_diff(&ComplexMatrix::identity(da).scale(C64::new(3.0, 0.0))) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(d, &mut rng);
        let b = random_matrix(da, &mut rng);
        let ab = tensor(&a, &b);
        let pt = partial_trace_system(&ab, d, da).unwrap();
        assert!(pt.max_abs_diff(&b.scale(a.trace())) < 1e-12);
        let pa = partial_trace_ancilla(&ab, d, da).unwrap();
        assert!(pa.max_abs_diff(&a.scale(b.trace())) < 1e-12);

        assert!(partial_trace_system(&ComplexMatrix::identity(5), 2, 2).is_err());
    }

    #[test]
    fn partial_trace_matches_index_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let e: Vec<C64> = (0..4).map(|_| C64::new(rng.random(), rng.random())).collect();
        let m = ComplexMatrix::outer(&e, &e);
        let pt = partial_trace_system(&m, 2, 2).unwrap();
        // explicit 4-index sum: (tr_S M)_{kl} = Σ_i e_{ik} conj(e_{il})
        for k in 0..2 {
            for l in 0..2 {
                let mut acc = ZERO;
                for i in 0..2 {
                    for j in 0..2 {
                        if i == j {
                            acc += e[i * 2 + k] * e[j * 2 + l].conj();
                        }
                    }
                }
                assert!((pt[(k, l)] - acc).norm() < 1e-14);
            }
        }
        assert!((pt.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn tensor_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (a, b, c, d) = (
            random_matrix(2, &mut rng),
            random_matrix(2, &mut rng),
            random_matrix(2, &mut rng),
            random_matrix(2, &mut rng),
        );
        let lhs = &tensor(&a, &b) * &tensor(&c, &d);
        let rhs = tensor(&(&a * &c), &(&b * &d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        assert!((tensor(&a, &b).trace() - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn state_vector_validation() {
        assert!(StateVector::new(vec![ONE, ONE]).is_err());
        assert!(StateVector::normalized(vec![ZERO, ZERO]).is_err());
        let v = StateVector::normalized(vec![ONE, ONE]).unwrap();
        assert!((v.inner(&v).re - 1.0).abs() < 1e-15);
        assert!(StateVector::basis(2, 2).is_err());
    }
}
