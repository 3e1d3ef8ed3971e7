//! Dense complex matrices and the spectral kernels everything else is built on:
//! Kronecker products, Hermitian eigendecomposition, eigenphases of unitaries,
//! the principal logarithm of a unitary and the Hermitian-generated exponential.
//!
//! The eigensolvers are backed by `nalgebra` (Householder tridiagonalisation with
//! implicit QR for Hermitian input, complex Schur for unitaries). For a normal
//! matrix the Schur factor is diagonal up to rounding, so its Schur vectors are an
//! orthonormal eigenbasis.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::LinalgError;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Hermiticity gate applied by every routine that requires Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unitarity gate applied by every routine that requires unitary input.
pub const UNITARY_TOL: f64 = 1e-8;
/// Reconstruction residual above which a decomposition is reported as defective.
pub const DEFECT_TOL: f64 = 1e-6;

/// Dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn new(data: DMatrix<C64>) -> Result<Self, LinalgError> {
        if data.nrows() != data.ncols() {
            return Err(LinalgError::NotSquare {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        if data.nrows() == 0 {
            return Err(LinalgError::Empty);
        }
        Ok(Self { data })
    }

    /// Wraps a matrix already known to be square and non-empty.
    pub(crate) fn from_square(data: DMatrix<C64>) -> Self {
        debug_assert!(data.is_square() && data.nrows() > 0);
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_square(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_square(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_square(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::from_square(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Row-major construction from real entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        if entries.len() != dim * dim {
            return Err(LinalgError::ShapeMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(entries[i * dim + j], 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_square(self.data.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_square(self.data.map(|z| z * s))
    }

    /// Largest entry modulus, ‖M‖_max.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// ‖M − M†‖_max.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..=j {
                let d = (self.data[(i, j)] - self.data[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// ‖M M† − I‖_max.
    pub fn unitary_defect(&self) -> f64 {
        let prod = &self.data * self.data.adjoint();
        let mut worst = 0.0_f64;
        for (idx, z) in prod.iter().enumerate() {
            let (i, j) = (idx % self.dim(), idx / self.dim());
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((z - target).norm());
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_defect() <= tol
    }

    /// Largest entrywise distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Replaces the matrix by its Hermitian part (M + M†)/2.
    pub fn hermitian_part(&self) -> Self {
        Self::from_square((&self.data + self.data.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn mul_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.data * v
    }

    pub fn column(&self, j: usize) -> DVector<C64> {
        self.data.column(j).into_owned()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        if self.dim() <= 8 {
            write!(f, " {}", self.data)?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.data[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.data[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix::from_square(&self.data * &rhs.data)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix::from_square(&self.data + &rhs.data)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix::from_square(&self.data - &rhs.data)
    }
}

/// Normalised complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Checks ‖v‖ = 1 to `tol`.
    pub fn new(amps: DVector<C64>, tol: f64) -> Result<Self, LinalgError> {
        if amps.is_empty() {
            return Err(LinalgError::Empty);
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > tol {
            return Err(LinalgError::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Divides by the Euclidean norm. Fails on the zero vector.
    pub fn normalized(amps: DVector<C64>) -> Result<Self, LinalgError> {
        let norm = amps.norm();
        if amps.is_empty() {
            return Err(LinalgError::Empty);
        }
        if norm == 0.0 || !norm.is_finite() {
            return Err(LinalgError::NotNormalized { norm });
        }
        Ok(Self {
            amps: amps.unscale(norm),
        })
    }

    /// Computational basis state |index⟩.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = DVector::zeros(dim);
        amps[index] = ONE;
        Self { amps }
    }

    pub(crate) fn from_unit(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }
}

/// Eigenvalues ascending with the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> StateVector {
        StateVector::from_unit(self.vectors.column(k))
    }

    /// V diag(f(λ)) V†.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = self.vectors.as_dmatrix();
        let mut scaled = v.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            scaled.column_mut(j).scale_mut_complex(w);
        }
        ComplexMatrix::from_square(scaled * v.adjoint())
    }

    /// Evolution operator V diag(e^{sign·i·λ·time/ħ}) V† from a Hermitian decomposition.
    pub fn exponentiate(&self, time: f64, hbar: f64, sign: Sign) -> ComplexMatrix {
        let s = sign.as_f64();
        self.reconstruct_with(|lam| C64::from_polar(1.0, s * lam * time / hbar))
    }

    /// ‖V†V − I‖_max.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = self.vectors.as_dmatrix();
        let g = v.adjoint() * v;
        let n = g.nrows();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, w: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, w: C64) {
        for z in self.iter_mut() {
            *z *= w;
        }
    }
}

/// Sign of the exponent in e^{±iHt/ħ}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Kronecker product; entry (i·db + k, j·db + l) = a(i,j)·b(k,l).
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    let mut out = DMatrix::zeros(da * db, da * db);
    for j in 0..da {
        for i in 0..da {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for l in 0..db {
                for k in 0..db {
                    out[(i * db + k, j * db + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    ComplexMatrix::from_square(out)
}

fn sorted_decomposition(values: Vec<f64>, vectors: DMatrix<C64>) -> EigenDecomposition {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, order[c])]
    });
    EigenDecomposition {
        values: sorted_values,
        vectors: ComplexMatrix::from_square(sorted_vectors),
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    let asym = h.hermitian_defect();
    if asym > HERMITIAN_TOL {
        return Err(LinalgError::NotHermitian { asymmetry: asym });
    }
    // Solve on the exact Hermitian part so rounding-level asymmetry cannot leak in.
    let herm = h.hermitian_part().into_dmatrix();
    let eig = herm.symmetric_eigen();
    Ok(sorted_decomposition(
        eig.eigenvalues.iter().copied().collect(),
        eig.eigenvectors,
    ))
}

/// Maps an angle into the half-open principal interval (−π, π].
pub fn principal_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Eigenphases θ ∈ (−π, π] of a unitary, ascending, with orthonormal eigenvectors.
pub fn eigphases_unitary(u: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    let defect = u.unitary_defect();
    if defect > UNITARY_TOL {
        return Err(LinalgError::NotUnitary { defect });
    }
    let n = u.dim();
    let dec = match nalgebra::linalg::Schur::try_new(u.as_dmatrix().clone(), 1e-15, 100 * n.max(10)) {
        Some(schur) => {
            let (q, t) = schur.unpack();
            let phases: Vec<f64> = (0..n).map(|i| principal_angle(t[(i, i)].arg())).collect();
            sorted_decomposition(phases, q)
        }
        // QR sweeps can stall on permutation-like unitaries (Clifford circuits).
        None => eigphases_via_hermitian_parts(u),
    };

    // U V = V diag(e^{iθ}) must hold; the Schur factor of a normal matrix is diagonal.
    let uv = u.as_dmatrix() * dec.vectors.as_dmatrix();
    let mut residual = 0.0_f64;
    for (j, &th) in dec.values.iter().enumerate() {
        let w = C64::from_polar(1.0, th);
        for i in 0..n {
            residual = residual.max((uv[(i, j)] - dec.vectors[(i, j)] * w).norm());
        }
    }
    if residual > DEFECT_TOL {
        return Err(LinalgError::Defective { residual });
    }
    Ok(dec)
}

/// Rotation used to split U into commuting Hermitian parts; any value without
/// a simple relation to π avoids systematic cos(θ − α) coincidences.
const SPLIT_ANGLE: f64 = 0.577_215_664_901_532_9;
/// Eigenvalues of the cosine part closer than this are resolved together.
const CLUSTER_GAP: f64 = 1e-8;

/// With w = e^{−iα}: C = (wU + w̄U†)/2 and S = (wU − w̄U†)/2i commute and share
/// U's eigenvectors, with eigenvalues cos(θ − α) and sin(θ − α). C is
/// diagonalised first; S then separates vectors inside each cluster of C.
fn eigphases_via_hermitian_parts(u: &ComplexMatrix) -> EigenDecomposition {
    let n = u.dim();
    let w = C64::from_polar(1.0, -SPLIT_ANGLE);
    let um = u.as_dmatrix();
    let ua = um.adjoint();
    let c = ComplexMatrix::from_square((um * w + &ua * w.conj()) * C64::new(0.5, 0.0)).hermitian_part();
    let s = ComplexMatrix::from_square((um * w - &ua * w.conj()) * C64::new(0.0, -0.5)).hermitian_part();
    let ce = c.as_dmatrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ce.eigenvalues[i].total_cmp(&ce.eigenvalues[j]));
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && ce.eigenvalues[order[end]] - ce.eigenvalues[order[end - 1]] < CLUSTER_GAP {
            end += 1;
        }
        let block = DMatrix::from_fn(n, end - start, |r, k| ce.eigenvectors[(r, order[start + k])]);
        if end - start == 1 {
            vectors.set_column(start, &block.column(0));
        } else {
            let sg = block.adjoint() * s.as_dmatrix() * &block;
            let sg = (&sg + sg.adjoint()) * C64::new(0.5, 0.0);
            let rotated = &block * sg.symmetric_eigen().eigenvectors;
            for k in 0..end - start {
                vectors.set_column(start + k, &rotated.column(k));
            }
        }
        start = end;
    }
    let uv = um * &vectors;
    let phases = (0..n)
        .map(|k| principal_angle(vectors.column(k).dotc(&uv.column(k)).arg()))
        .collect();
    sorted_decomposition(phases, vectors)
}

/// Effective Hamiltonian H_eff = (ħ/T)·V diag(θ) V† of a unitary, θ principal eigenphases.
///
/// With this convention `exp_hermitian_to_unitary(H_eff, T, ħ, Sign::Plus)` returns `u`.
pub fn log_unitary(u: &ComplexMatrix, time: f64, hbar: f64) -> Result<ComplexMatrix, LinalgError> {
    check_time_scale(time, hbar)?;
    let dec = eigphases_unitary(u)?;
    Ok(effective_hamiltonian(&dec, time, hbar))
}

/// H_eff from an already computed eigenphase decomposition.
pub fn effective_hamiltonian(phases: &EigenDecomposition, time: f64, hbar: f64) -> ComplexMatrix {
    let scale = hbar / time;
    phases
        .reconstruct_with(|th| C64::new(scale * th, 0.0))
        .hermitian_part()
}

/// V diag(e^{sign·i·E·time/ħ}) V† for Hermitian h.
pub fn exp_hermitian_to_unitary(
    h: &ComplexMatrix,
    time: f64,
    hbar: f64,
    sign: Sign,
) -> Result<ComplexMatrix, LinalgError> {
    if !(hbar > 0.0) || !time.is_finite() {
        return Err(LinalgError::InvalidTimeScale { time, hbar });
    }
    let dec = eig_hermitian(h)?;
    Ok(dec.exponentiate(time, hbar, sign))
}

fn check_time_scale(time: f64, hbar: f64) -> Result<(), LinalgError> {
    if !(time > 0.0) || !(hbar > 0.0) || !time.is_finite() || !hbar.is_finite() {
        return Err(LinalgError::InvalidTimeScale { time, hbar });
    }
    Ok(())
}

/// Pauli matrices, handy for builders and tests.
pub mod pauli {
    use super::{ComplexMatrix, C64};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 1)] = C64::new(0.0, -1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        m
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }
}
