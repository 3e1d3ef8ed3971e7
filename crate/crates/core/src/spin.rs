//! Benchmark systems: the longitudinal-transverse field Ising chain (with its
//! reflection-parity sector) and the quantised standard map on the torus.
//!
//! Site 0 is the leftmost tensor factor, i.e. the most significant bit of the
//! computational basis index. Z|0⟩ = +|0⟩.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::error::LinalgError;
use crate::matrix::{
    eig_hermitian, eigphases_unitary, ComplexMatrix, StateVector, C64, HERMITIAN_TOL, UNITARY_TOL,
};

/// Largest chain the builders accept unless told otherwise (2^14 = 16384 states).
pub const DEFAULT_MAX_SITES: usize = 14;
/// ‖[M, R]‖_max allowed before a projection is refused.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("{n} sites exceed the memory budget of {max} sites")]
    TooLarge { n: usize, max: usize },
    #[error("chain needs at least 2 sites, got {0}")]
    TooFewSites(usize),
    #[error("operator dimension {found} does not match 2^{n} = {expected}")]
    DimensionMismatch { n: usize, expected: usize, found: usize },
    #[error("operator does not commute with the reflection: max |[M,R]| = {commutator:.3e}")]
    SymmetryViolation { commutator: f64 },
    #[error("standard map needs a Hilbert dimension of at least 2, got {0}")]
    MapTooSmall(usize),
    #[error("Bloch phases must lie in [0, 1), got ({bloch_x}, {bloch_p})")]
    BlochPhase { bloch_x: f64, bloch_p: f64 },
    #[error("spectral window [{lo}, {hi}) selects no eigenstates of a {dim}-dimensional operator")]
    EmptySelection { lo: f64, hi: f64, dim: usize },
    #[error("operator is neither Hermitian nor unitary")]
    NotHermitianOrUnitary,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Parameters of H = Σ_k (hx X_k + hz Z_k) − J Σ_{k<n−1} Z_k Z_{k+1} (open chain).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingParams {
    pub n: usize,
    pub hx: f64,
    pub hz: f64,
    pub j_coupling: f64,
}

impl IsingParams {
    /// hx = J = 1.
    pub fn new(n: usize, hz: f64) -> Self {
        Self {
            n,
            hx: 1.0,
            hz,
            j_coupling: 1.0,
        }
    }
}

#[inline]
fn bit(state: usize, site: usize, n: usize) -> usize {
    (state >> (n - 1 - site)) & 1
}

#[inline]
fn z_sign(state: usize, site: usize, n: usize) -> f64 {
    if bit(state, site, n) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_sites(n: usize, max_sites: usize) -> Result<(), SpinError> {
    if n < 2 {
        return Err(SpinError::TooFewSites(n));
    }
    if n > max_sites {
        return Err(SpinError::TooLarge { n, max: max_sites });
    }
    Ok(())
}

pub fn build_ising(p: &IsingParams) -> Result<ComplexMatrix, SpinError> {
    build_ising_with_budget(p, DEFAULT_MAX_SITES)
}

pub fn build_ising_with_budget(p: &IsingParams, max_sites: usize) -> Result<ComplexMatrix, SpinError> {
    let n = p.n;
    check_sites(n, max_sites)?;
    let dim = 1usize << n;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..dim {
        let mut diag = 0.0;
        for k in 0..n {
            diag += p.hz * z_sign(s, k, n);
        }
        for k in 0..n - 1 {
            diag -= p.j_coupling * z_sign(s, k, n) * z_sign(s, k + 1, n);
        }
        h[(s, s)] = C64::new(diag, 0.0);
        if p.hx != 0.0 {
            for k in 0..n {
                let flipped = s ^ (1 << (n - 1 - k));
                h[(flipped, s)] += C64::new(p.hx, 0.0);
            }
        }
    }
    Ok(ComplexMatrix::new(h)?)
}

/// Bit-string reversal of an n-bit index (the chain reflection R).
pub fn reverse_bits(s: usize, n: usize) -> usize {
    let mut r = 0;
    for k in 0..n {
        r |= bit(s, k, n) << k;
    }
    r
}

/// One column of the parity isometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParityColumn {
    /// A palindromic basis state |s⟩.
    Palindrome(usize),
    /// (|s⟩ + |reverse(s)⟩)/√2 with s < reverse(s).
    Pair(usize, usize),
}

/// Isometry onto the +1 eigenspace of the chain reflection.
///
/// Columns are ordered by their smallest basis index.
#[derive(Clone, Debug)]
pub struct ParityBasis {
    n: usize,
    columns: Vec<ParityColumn>,
}

impl ParityBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn full_dim(&self) -> usize {
        1 << self.n
    }

    /// d₊ = (2ⁿ + 2^⌈n/2⌉)/2.
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ParityColumn] {
        &self.columns
    }

    /// Dense 2ⁿ × d₊ isometry.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut b = DMatrix::zeros(self.full_dim(), self.dim());
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        for (c, col) in self.columns.iter().enumerate() {
            match *col {
                ParityColumn::Palindrome(s) => b[(s, c)] = C64::new(1.0, 0.0),
                ParityColumn::Pair(s, r) => {
                    b[(s, c)] = h;
                    b[(r, c)] = h;
                }
            }
        }
        b
    }

    /// Embeds a sector state into the full space.
    pub fn lift(&self, psi: &StateVector) -> StateVector {
        assert_eq!(psi.dim(), self.dim(), "sector dimension mismatch");
        let mut out = nalgebra::DVector::zeros(self.full_dim());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (c, col) in self.columns.iter().enumerate() {
            let a = psi.amplitudes()[c];
            match *col {
                ParityColumn::Palindrome(s) => out[s] = a,
                ParityColumn::Pair(s, r) => {
                    out[s] = a * h;
                    out[r] = a * h;
                }
            }
        }
        StateVector::from_unit(out)
    }
}

pub fn parity_basis(n: usize) -> Result<ParityBasis, SpinError> {
    // The basis is sparse (one or two entries per column), so it tolerates
    // larger chains than the dense builders.
    check_sites(n, 30)?;
    let mut columns = Vec::with_capacity(((1usize << n) + (1usize << n.div_ceil(2))) / 2);
    for s in 0..1usize << n {
        let r = reverse_bits(s, n);
        if r == s {
            columns.push(ParityColumn::Palindrome(s));
        } else if s < r {
            columns.push(ParityColumn::Pair(s, r));
        }
    }
    Ok(ParityBasis { n, columns })
}

/// ‖M R − R M‖_max with R the reflection permutation.
pub fn reflection_commutator(m: &ComplexMatrix, n: usize) -> f64 {
    let dim = m.dim();
    let rev: Vec<usize> = (0..dim).map(|s| reverse_bits(s, n)).collect();
    let mut worst = 0.0_f64;
    for j in 0..dim {
        for i in 0..dim {
            // (MR)_{ij} = M[i, R(j)], (RM)_{ij} = M[R(i), j]
            let d = (m[(i, rev[j])] - m[(rev[i], j)]).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// B† M B on the positive-parity sector. M must commute with the reflection.
pub fn project_operator(m: &ComplexMatrix, basis: &ParityBasis) -> Result<ComplexMatrix, SpinError> {
    if m.dim() != basis.full_dim() {
        return Err(SpinError::DimensionMismatch {
            n: basis.n,
            expected: basis.full_dim(),
            found: m.dim(),
        });
    }
    let commutator = reflection_commutator(m, basis.n);
    if commutator > SYMMETRY_TOL {
        return Err(SpinError::SymmetryViolation { commutator });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let support = |col: &ParityColumn| -> Vec<(usize, f64)> {
        match *col {
            ParityColumn::Palindrome(s) => vec![(s, 1.0)],
            ParityColumn::Pair(s, r) => vec![(s, h), (r, h)],
        }
    };
    let supports: Vec<Vec<(usize, f64)>> = basis.columns.iter().map(support).collect();
    let d = basis.dim();
    let out = ComplexMatrix::from_fn(d, |a, b| {
        let mut acc = C64::new(0.0, 0.0);
        for &(s, cs) in &supports[a] {
            for &(t, ct) in &supports[b] {
                acc += m[(s, t)] * (cs * ct);
            }
        }
        acc
    });
    Ok(out)
}

/// How the kick strength `k_chaos` enters the map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KickConvention {
    /// `k_chaos` is the classical stochasticity parameter K of the map
    /// P' = P + K sin X, X' = X + P' on the (2π)² torus. The kick phase is
    /// K/(4π²ħ)·cos(2πx) with ħ = 1/(2πN).
    #[default]
    Stochasticity,
    /// Kick phase (k/ħ)·cos(2πx) with ħ = 1/(2πN), i.e. K = 4π²k.
    UnitTorus,
}

impl KickConvention {
    pub fn name(self) -> &'static str {
        match self {
            KickConvention::Stochasticity => "stochasticity",
            KickConvention::UnitTorus => "unit-torus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StandardMapParams {
    pub n_hilbert: usize,
    pub k_chaos: f64,
    pub bloch_x: f64,
    pub bloch_p: f64,
    pub convention: KickConvention,
}

impl StandardMapParams {
    /// Default Bloch phases (0, 0.25): the shifted momentum grid removes the
    /// x → −x parity while the map stays time-reversal invariant.
    pub fn new(n_hilbert: usize, k_chaos: f64) -> Self {
        Self {
            n_hilbert,
            k_chaos,
            bloch_x: 0.0,
            bloch_p: 0.25,
            convention: KickConvention::default(),
        }
    }

    /// Effective Planck constant ħ = 1/(2πN).
    pub fn hbar(&self) -> f64 {
        1.0 / (2.0 * PI * self.n_hilbert as f64)
    }

    /// Prefactor of cos(2πx) in the kick phase.
    pub fn kick_phase(&self) -> f64 {
        match self.convention {
            KickConvention::UnitTorus => self.k_chaos / self.hbar(),
            KickConvention::Stochasticity => self.k_chaos / (4.0 * PI * PI * self.hbar()),
        }
    }

    /// Integer momentum shifts m̃ ∈ [−N/2, N/2).
    pub fn momentum_shift(&self, m: usize) -> i64 {
        m as i64 - (self.n_hilbert / 2) as i64
    }
}

/// Floquet operator U = F·diag(e^{−ip²/2ħ})·F†·diag(e^{−i·kick·cos 2πx}) in the position basis,
/// where F_{jm} = ⟨x_j|p_m⟩ = e^{2πi(j+β_x)(m̃+β_p)/N}/√N.
pub fn build_standard_map(p: &StandardMapParams) -> Result<ComplexMatrix, SpinError> {
    let n = p.n_hilbert;
    if n < 2 {
        return Err(SpinError::MapTooSmall(n));
    }
    if !(0.0..1.0).contains(&p.bloch_x) || !(0.0..1.0).contains(&p.bloch_p) {
        return Err(SpinError::BlochPhase {
            bloch_x: p.bloch_x,
            bloch_p: p.bloch_p,
        });
    }
    let nf = n as f64;
    let hbar = p.hbar();
    let norm = 1.0 / nf.sqrt();
    let f = DMatrix::<C64>::from_fn(n, n, |j, m| {
        let phase = 2.0 * PI * (j as f64 + p.bloch_x) * (p.momentum_shift(m) as f64 + p.bloch_p) / nf;
        C64::from_polar(norm, phase)
    });
    let kinetic: Vec<C64> = (0..n)
        .map(|m| {
            let pm = (p.momentum_shift(m) as f64 + p.bloch_p) / nf;
            C64::from_polar(1.0, -pm * pm / (2.0 * hbar))
        })
        .collect();
    let kick = p.kick_phase();
    let potential: Vec<C64> = (0..n)
        .map(|j| {
            let x = (j as f64 + p.bloch_x) / nf;
            C64::from_polar(1.0, -kick * (2.0 * PI * x).cos())
        })
        .collect();

    // F·K
    let mut fk = f.clone();
    for (m, w) in kinetic.iter().enumerate() {
        for z in fk.column_mut(m).iter_mut() {
            *z *= w;
        }
    }
    let mut u = fk * f.adjoint();
    for (j, w) in potential.iter().enumerate() {
        for z in u.column_mut(j).iter_mut() {
            *z *= w;
        }
    }
    Ok(ComplexMatrix::new(u)?)
}

/// Which operator an eigenstate bank is drawn from.
#[derive(Clone, Copy, Debug)]
pub enum SpectralOperator<'a> {
    Hermitian(&'a ComplexMatrix),
    Unitary(&'a ComplexMatrix),
}

impl<'a> SpectralOperator<'a> {
    /// Classifies by checking Hermiticity first, then unitarity.
    pub fn detect(m: &'a ComplexMatrix) -> Result<Self, SpinError> {
        if m.is_hermitian(HERMITIAN_TOL) {
            Ok(Self::Hermitian(m))
        } else if m.is_unitary(UNITARY_TOL) {
            Ok(Self::Unitary(m))
        } else {
            Err(SpinError::NotHermitianOrUnitary)
        }
    }
}

/// Spectral window as fractions of the sorted eigenvalue index range, `[lo, hi)`,
/// optionally thinned by a uniform index stride down to `max_states`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSelection {
    pub lo: f64,
    pub hi: f64,
    pub max_states: Option<usize>,
}

impl Default for EigenSelection {
    /// Central 20% of the spectrum.
    fn default() -> Self {
        Self {
            lo: 0.4,
            hi: 0.6,
            max_states: None,
        }
    }
}

impl EigenSelection {
    pub fn central(fraction: f64, max_states: Option<usize>) -> Self {
        Self {
            lo: 0.5 - fraction / 2.0,
            hi: 0.5 + fraction / 2.0,
            max_states,
        }
    }

    /// Indices into an ascending spectrum of length `dim`.
    pub fn indices(&self, dim: usize) -> Vec<usize> {
        let start = ((self.lo * dim as f64).floor().max(0.0) as usize).min(dim);
        let end = ((self.hi * dim as f64).ceil().max(0.0) as usize).min(dim);
        let window: Vec<usize> = (start..end.max(start)).collect();
        match self.max_states {
            Some(max) if max > 0 && window.len() > max => {
                let stride = window.len() / max;
                window.into_iter().step_by(stride).take(max).collect()
            }
            Some(0) => Vec::new(),
            _ => window,
        }
    }
}

/// Eigenvectors of a Hermitian or unitary operator inside a spectral window.
pub fn eigenstate_bank(
    op: SpectralOperator<'_>,
    which: &EigenSelection,
) -> Result<Vec<StateVector>, SpinError> {
    let dec = match op {
        SpectralOperator::Hermitian(h) => eig_hermitian(h)?,
        SpectralOperator::Unitary(u) => eigphases_unitary(u)?,
    };
    let idx = which.indices(dec.dim());
    if idx.is_empty() {
        return Err(SpinError::EmptySelection {
            lo: which.lo,
            hi: which.hi,
            dim: dec.dim(),
        });
    }
    Ok(idx.into_iter().map(|k| dec.vector(k)).collect())
}
