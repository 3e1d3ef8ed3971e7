//! State Krylov dynamics.
//!
//! [`lanczos_state`] tridiagonalises H on the Krylov space of an initial state,
//! producing onsite coefficients `a` and hoppings `b`. The chain
//! i ψ̇_k = a_k ψ_k + b_{k} ψ_{k−1} + b_{k+1} ψ_{k+1}, ψ_k(0) = δ_{k0}
//! is then solved exactly by diagonalising the tridiagonal matrix, and the
//! K-complexity C_K(t) = Σ_k k |ψ_k(t)|² is the mean chain position.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::matrix::{ComplexMatrix, StateVector, C64, HERMITIAN_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("Hamiltonian is not Hermitian: max |H - H^dagger| = {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },
    #[error("initial state is not normalised: norm = {norm}")]
    NotNormalized { norm: f64 },
    #[error("state dimension {state} does not match operator dimension {operator}")]
    DimensionMismatch { state: usize, operator: usize },
    #[error("requested Krylov dimension {max_dim} exceeds the space dimension {dim}")]
    MaxDimTooLarge { max_dim: usize, dim: usize },
    #[error("empty Lanczos sequence")]
    EmptySequence,
    #[error("malformed Lanczos sequence: {0}")]
    Malformed(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("LS fraction {0} is outside (0, 1]")]
    FractionOutOfRange(f64),
    #[error("LS fraction keeps {kept} coefficients, need at least {needed}")]
    TooFewCoefficients { kept: usize, needed: usize },
    #[error("plateau mean is {0}, scrambling time is undefined")]
    NoPlateau(f64),
    #[error("C_K never reaches {target:.4} within the grid (max attained {attained:.4})")]
    NotReached { target: f64, attained: f64 },
}

/// Lanczos termination threshold for b, relative to ‖H‖_max.
pub const DEFAULT_EPS_B: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosOptions {
    /// Stop once b_k < eps_b · ‖H‖_max.
    pub eps_b: f64,
    /// Upper bound on the Krylov dimension; `None` means the space dimension.
    pub max_dim: Option<usize>,
    pub store_basis: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            eps_b: DEFAULT_EPS_B,
            max_dim: None,
            store_basis: false,
        }
    }
}

/// Onsite coefficients a (length D), hoppings b (length D − 1, all positive)
/// and, optionally, the orthonormal Krylov vectors.
#[derive(Clone, Debug)]
pub struct LanczosSequence {
    a: Vec<f64>,
    b: Vec<f64>,
    basis: Option<Vec<StateVector>>,
}

impl LanczosSequence {
    pub fn from_coefficients(a: Vec<f64>, b: Vec<f64>) -> Result<Self, KrylovError> {
        if a.is_empty() {
            return Err(KrylovError::EmptySequence);
        }
        if b.len() + 1 != a.len() {
            return Err(KrylovError::Malformed(format!(
                "{} onsite and {} hopping coefficients",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(KrylovError::Malformed("non-finite coefficient".into()));
        }
        if let Some(bad) = b.iter().find(|&&x| x <= 0.0) {
            return Err(KrylovError::Malformed(format!("non-positive hopping {bad}")));
        }
        Ok(Self { a, b, basis: None })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Krylov dimension D.
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn basis(&self) -> Option<&[StateVector]> {
        self.basis.as_deref()
    }

    /// Mean hopping, or 0 for a one-site chain.
    pub fn mean_b(&self) -> f64 {
        if self.b.is_empty() {
            0.0
        } else {
            self.b.iter().sum::<f64>() / self.b.len() as f64
        }
    }

    /// Leading ⌈fraction·D⌉ sites of the chain (hard wall at the new end).
    pub fn truncated(&self, fraction: f64) -> Result<Self, KrylovError> {
        let m = truncated_len(self.dim(), fraction)?;
        Ok(Self {
            a: self.a[..m].to_vec(),
            b: self.b[..m - 1].to_vec(),
            basis: None,
        })
    }

    /// Dense tridiagonal matrix of the chain.
    pub fn tridiagonal(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut t = DMatrix::zeros(d, d);
        for (k, &a) in self.a.iter().enumerate() {
            t[(k, k)] = a;
        }
        for (k, &b) in self.b.iter().enumerate() {
            t[(k, k + 1)] = b;
            t[(k + 1, k)] = b;
        }
        t
    }
}

/// ⌈fraction·D⌉, at least 1.
pub fn truncated_len(dim: usize, fraction: f64) -> Result<usize, KrylovError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(KrylovError::FractionOutOfRange(fraction));
    }
    // Guard against 0.5 * 528 landing a hair above an integer.
    let raw = fraction * dim as f64;
    let m = (raw - 1e-9 * raw.max(1.0)).ceil().max(1.0) as usize;
    Ok(m.min(dim))
}

/// Lanczos tridiagonalisation with full re-orthogonalisation against every
/// stored Krylov vector (two classical Gram-Schmidt passes per step).
pub fn lanczos_state(
    h: &ComplexMatrix,
    psi0: &StateVector,
    opts: &LanczosOptions,
) -> Result<LanczosSequence, KrylovError> {
    let asymmetry = h.hermitian_defect();
    if asymmetry > HERMITIAN_TOL {
        return Err(KrylovError::NotHermitian { asymmetry });
    }
    let n = h.dim();
    if psi0.dim() != n {
        return Err(KrylovError::DimensionMismatch {
            state: psi0.dim(),
            operator: n,
        });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(KrylovError::NotNormalized { norm });
    }
    let max_dim = opts.max_dim.unwrap_or(n);
    if max_dim > n {
        return Err(KrylovError::MaxDimTooLarge { max_dim, dim: n });
    }
    if max_dim == 0 {
        return Err(KrylovError::EmptySequence);
    }

    let scale = h.max_abs();
    let threshold = if scale > 0.0 { opts.eps_b * scale } else { opts.eps_b };
    let hm = h.as_dmatrix();

    let mut basis = DMatrix::<C64>::zeros(n, max_dim);
    basis.set_column(0, psi0.amplitudes());
    let mut a = Vec::with_capacity(max_dim);
    let mut b: Vec<f64> = Vec::with_capacity(max_dim.saturating_sub(1));

    for k in 0..max_dim {
        let vk = basis.column(k);
        let mut w: DVector<C64> = hm * vk;
        let ak = vk.dotc(&w).re;
        a.push(ak);
        if k + 1 == max_dim {
            break;
        }
        w.axpy(C64::new(-ak, 0.0), &vk, C64::new(1.0, 0.0));
        if k > 0 {
            w.axpy(C64::new(-b[k - 1], 0.0), &basis.column(k - 1), C64::new(1.0, 0.0));
        }
        let stored = basis.columns(0, k + 1);
        for _ in 0..2 {
            let overlaps = stored.ad_mul(&w);
            w.gemv(C64::new(-1.0, 0.0), &stored, &overlaps, C64::new(1.0, 0.0));
        }
        let bk = w.norm();
        if bk < threshold {
            break;
        }
        b.push(bk);
        basis.set_column(k + 1, &w.unscale(bk));
    }

    let dim = a.len();
    let stored_basis = opts.store_basis.then(|| {
        (0..dim)
            .map(|k| StateVector::from_unit(basis.column(k).into_owned()))
            .collect()
    });
    Ok(LanczosSequence {
        a,
        b,
        basis: stored_basis,
    })
}

/// Spectral data of the chain Hamiltonian, reused across many evaluation times.
#[derive(Clone, Debug)]
pub struct ChainPropagator {
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl ChainPropagator {
    pub fn new(seq: &LanczosSequence) -> Result<Self, KrylovError> {
        if seq.dim() == 0 {
            return Err(KrylovError::EmptySequence);
        }
        let eig = SymmetricEigen::new(seq.tridiagonal());
        Ok(Self {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// ψ(t) = Q e^{−iΛt} Qᵀ e₀; exactly e₀ at t = 0.
    pub fn amplitudes(&self, t: f64) -> DVector<C64> {
        let d = self.dim();
        if t == 0.0 {
            let mut e0 = DVector::zeros(d);
            e0[0] = C64::new(1.0, 0.0);
            return e0;
        }
        let mut re = DVector::<f64>::zeros(d);
        let mut im = DVector::<f64>::zeros(d);
        for j in 0..d {
            let w = self.vectors[(0, j)];
            let (s, c) = (self.energies[j] * t).sin_cos();
            re[j] = w * c;
            im[j] = -w * s;
        }
        let pr = &self.vectors * re;
        let pi = &self.vectors * im;
        DVector::from_fn(d, |k, _| C64::new(pr[k], pi[k]))
    }

    /// Σ_k k |ψ_k(t)|², clamped to [0, D − 1].
    pub fn complexity(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let psi = self.amplitudes(t);
        let c: f64 = psi.iter().enumerate().map(|(k, z)| k as f64 * z.norm_sqr()).sum();
        c.clamp(0.0, (self.dim() - 1) as f64)
    }
}

fn check_times(times: &[f64]) -> Result<(), KrylovError> {
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(KrylovError::InvalidGrid(format!("non-finite time {t}")));
    }
    Ok(())
}

/// Chain amplitudes ψ_k(t); row i holds the state at `times[i]`.
pub fn evolve_krylov(seq: &LanczosSequence, times: &[f64]) -> Result<DMatrix<C64>, KrylovError> {
    check_times(times)?;
    let prop = ChainPropagator::new(seq)?;
    let mut out = DMatrix::zeros(times.len(), seq.dim());
    for (i, &t) in times.iter().enumerate() {
        let psi = prop.amplitudes(t);
        out.row_mut(i).copy_from(&psi.transpose());
    }
    Ok(out)
}

/// C_K(t) on a uniform grid together with its plateau estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexitySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Mean of C_K over the final half of the grid.
    pub plateau_mean: f64,
    pub plateau_window: (f64, f64),
}

impl ComplexitySeries {
    /// Wraps sampled values; the plateau is the mean over indices ≥ len/2.
    pub fn from_samples(times: Vec<f64>, values: Vec<f64>) -> Result<Self, KrylovError> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(KrylovError::InvalidGrid(format!(
                "{} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KrylovError::InvalidGrid("times must increase strictly".into()));
        }
        let start = times.len() / 2;
        let tail = &values[start..];
        let plateau_mean = tail.iter().sum::<f64>() / tail.len() as f64;
        Ok(Self {
            plateau_window: (times[start], times[times.len() - 1]),
            times,
            values,
            plateau_mean,
        })
    }

    /// Variance of C_K over the plateau window.
    pub fn plateau_variance(&self) -> f64 {
        let tail = &self.values[self.times.len() / 2..];
        let m = self.plateau_mean;
        tail.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / tail.len() as f64
    }
}

/// t_max = 5·D/⟨b⟩ (1 for a single-site chain).
pub fn default_t_max(seq: &LanczosSequence) -> f64 {
    let mb = seq.mean_b();
    if mb > 0.0 {
        5.0 * seq.dim() as f64 / mb
    } else {
        1.0
    }
}

/// Uniform grid of `n_times` points on [0, t_max].
pub fn uniform_grid(t_max: f64, n_times: usize) -> Result<Vec<f64>, KrylovError> {
    if n_times < 2 {
        return Err(KrylovError::InvalidGrid(format!("need at least 2 times, got {n_times}")));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(KrylovError::InvalidGrid(format!("t_max must be positive, got {t_max}")));
    }
    let step = t_max / (n_times - 1) as f64;
    Ok((0..n_times).map(|i| i as f64 * step).collect())
}

pub fn k_complexity_series(
    seq: &LanczosSequence,
    t_max: f64,
    n_times: usize,
) -> Result<ComplexitySeries, KrylovError> {
    let times = uniform_grid(t_max, n_times)?;
    let prop = ChainPropagator::new(seq)?;
    let values = times.iter().map(|&t| prop.complexity(t)).collect();
    ComplexitySeries::from_samples(times, values)
}

/// Same as [`k_complexity_series`] on the chain cut to its first ⌈fraction·D⌉ sites.
pub fn k_complexity_truncated(
    seq: &LanczosSequence,
    ls_fraction: f64,
    t_max: f64,
    n_times: usize,
) -> Result<ComplexitySeries, KrylovError> {
    k_complexity_series(&seq.truncated(ls_fraction)?, t_max, n_times)
}

/// First time C_K reaches half its plateau, linearly interpolated between grid points.
pub fn scrambling_time(series: &ComplexitySeries) -> Result<f64, KrylovError> {
    if !(series.plateau_mean > 0.0) {
        return Err(KrylovError::NoPlateau(series.plateau_mean));
    }
    let target = series.plateau_mean / 2.0;
    let hit = series.values.iter().position(|&c| c >= target);
    match hit {
        Some(0) => Ok(series.times[0]),
        Some(i) => {
            let (t0, t1) = (series.times[i - 1], series.times[i]);
            let (c0, c1) = (series.values[i - 1], series.values[i]);
            Ok(t0 + (target - c0) * (t1 - t0) / (c1 - c0))
        }
        None => Err(KrylovError::NotReached {
            target,
            attained: series.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }),
    }
}

fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Sample variances (denominator N − 1) of the first m = ⌈fraction·D⌉ entries
/// of a and of b. `var_b` is NaN when fewer than two hoppings are kept.
pub fn lanczos_variances(seq: &LanczosSequence, ls_fraction: f64) -> Result<(f64, f64), KrylovError> {
    let m = truncated_len(seq.dim(), ls_fraction)?;
    if m < 2 {
        return Err(KrylovError::TooFewCoefficients { kept: m, needed: 2 });
    }
    let a = &seq.a[..m];
    let b = &seq.b[..m.min(seq.b.len())];
    Ok((sample_variance(a), sample_variance(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{eig_hermitian, pauli};
    use crate::random::{complex_gaussian, gaussian_hermitian, seeded_rng};
    use std::f64::consts::PI;

    fn random_state(dim: usize, seed: u64) -> StateVector {
        let mut rng = seeded_rng(seed);
        let v = DVector::from_fn(dim, |_, _| complex_gaussian(&mut rng));
        StateVector::normalized(v).unwrap()
    }

    #[test]
    fn eigenstate_gives_one_dimensional_chain() {
        let h = ComplexMatrix::from_real_diagonal(&[1.0, 2.5, 3.0]);
        let seq = lanczos_state(&h, &StateVector::basis(3, 1), &LanczosOptions::default()).unwrap();
        assert_eq!(seq.a(), &[2.5]);
        assert!(seq.b().is_empty());
    }

    #[test]
    fn pauli_x_two_step_recurrence() {
        let seq = lanczos_state(&pauli::x(), &StateVector::basis(2, 0), &LanczosOptions::default()).unwrap();
        assert_eq!(seq.dim(), 2);
        assert!(seq.a().iter().all(|a| a.abs() < 1e-15));
        assert!((seq.b()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lanczos_input_errors() {
        let opts = LanczosOptions::default();
        let mut nh = ComplexMatrix::zeros(2);
        nh[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            lanczos_state(&nh, &StateVector::basis(2, 0), &opts),
            Err(KrylovError::NotHermitian { .. })
        ));
        let unnorm = StateVector::new(DVector::from_element(2, C64::new(0.7, 0.0)), 0.1).unwrap();
        assert!(matches!(
            lanczos_state(&pauli::x(), &unnorm, &opts),
            Err(KrylovError::NotNormalized { .. })
        ));
        let big = LanczosOptions { max_dim: Some(3), ..opts };
        assert!(matches!(
            lanczos_state(&pauli::x(), &StateVector::basis(2, 0), &big),
            Err(KrylovError::MaxDimTooLarge { .. })
        ));
    }

    #[test]
    fn random_hermitian_is_tridiagonalised() {
        let h = gaussian_hermitian(64, &mut seeded_rng(2));
        let psi = random_state(64, 3);
        let opts = LanczosOptions { store_basis: true, ..Default::default() };
        let seq = lanczos_state(&h, &psi, &opts).unwrap();
        assert_eq!(seq.dim(), 64);
        let basis = seq.basis().unwrap();
        let v = DMatrix::from_fn(64, 64, |i, k| basis[k].amplitudes()[i]);
        let t = v.adjoint() * h.as_dmatrix() * &v;
        let tri = seq.tridiagonal();
        let worst = t
            .iter()
            .zip(tri.iter())
            .fold(0.0_f64, |m, (z, x)| m.max((z - C64::new(*x, 0.0)).norm()));
        assert!(worst <= 1e-8, "tridiagonal residual {worst}");
        let g = v.adjoint() * &v;
        for i in 0..64 {
            for j in 0..64 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - C64::new(target, 0.0)).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn lanczos_is_deterministic() {
        let h = gaussian_hermitian(20, &mut seeded_rng(8));
        let psi = random_state(20, 9);
        let a = lanczos_state(&h, &psi, &LanczosOptions::default()).unwrap();
        let b = lanczos_state(&h, &psi, &LanczosOptions::default()).unwrap();
        assert_eq!(a.a(), b.a());
        assert_eq!(a.b(), b.b());
    }

    #[test]
    fn energy_shift_moves_only_onsite_terms() {
        let h = gaussian_hermitian(30, &mut seeded_rng(12));
        let shifted = &h + &ComplexMatrix::identity(30).scale(2.5);
        let psi = random_state(30, 13);
        let s0 = lanczos_state(&h, &psi, &LanczosOptions::default()).unwrap();
        let s1 = lanczos_state(&shifted, &psi, &LanczosOptions::default()).unwrap();
        assert_eq!(s0.dim(), s1.dim());
        for (x, y) in s0.a().iter().zip(s1.a()) {
            assert!((y - x - 2.5).abs() <= 1e-9);
        }
        for (x, y) in s0.b().iter().zip(s1.b()) {
            assert!((x - y).abs() <= 1e-9);
        }
        let c0 = k_complexity_series(&s0, 10.0, 50).unwrap();
        let c1 = k_complexity_series(&s1, 10.0, 50).unwrap();
        for (x, y) in c0.values.iter().zip(&c1.values) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn one_site_chain_only_rotates_phase() {
        let seq = LanczosSequence::from_coefficients(vec![0.7], vec![]).unwrap();
        let times = [0.0, 0.3, 2.0, 11.0];
        let amps = evolve_krylov(&seq, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let expected = C64::from_polar(1.0, -0.7 * t);
            assert!((amps[(i, 0)] - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn two_site_chain_closed_form() {
        let seq = LanczosSequence::from_coefficients(vec![0.0, 0.0], vec![1.0]).unwrap();
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.17).collect();
        let amps = evolve_krylov(&seq, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert!((amps[(i, 0)].norm_sqr() - t.cos().powi(2)).abs() < 1e-12);
            assert!((amps[(i, 1)].norm_sqr() - t.sin().powi(2)).abs() < 1e-12);
        }
        let series = k_complexity_series(&seq, 200.0, 20001).unwrap();
        for (t, c) in series.times.iter().zip(&series.values) {
            assert!((c - t.sin().powi(2)).abs() < 1e-12);
        }
        assert!((series.plateau_mean - 0.5).abs() < 1e-2);
    }

    #[test]
    fn evolve_rejects_bad_input() {
        let seq = LanczosSequence::from_coefficients(vec![0.0], vec![]).unwrap();
        assert!(matches!(evolve_krylov(&seq, &[f64::NAN]), Err(KrylovError::InvalidGrid(_))));
        assert_eq!(
            LanczosSequence::from_coefficients(vec![], vec![]).unwrap_err(),
            KrylovError::EmptySequence
        );
        assert!(LanczosSequence::from_coefficients(vec![0.0, 0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn evolution_matches_direct_propagation() {
        let h = gaussian_hermitian(48, &mut seeded_rng(31));
        let psi = random_state(48, 32);
        let opts = LanczosOptions { store_basis: true, ..Default::default() };
        let seq = lanczos_state(&h, &psi, &opts).unwrap();
        let eig = eig_hermitian(&h).unwrap();
        let times: Vec<f64> = (0..20).map(|i| 0.37 * i as f64).collect();
        let amps = evolve_krylov(&seq, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let u = eig.exponentiate(t, 1.0, crate::matrix::Sign::Minus);
            let psi_t = u.mul_vec(psi.amplitudes());
            let mut total = 0.0;
            for (k, v) in seq.basis().unwrap().iter().enumerate() {
                let direct = v.amplitudes().dotc(&psi_t).norm();
                assert!((direct - amps[(i, k)].norm()).abs() <= 1e-8);
                total += amps[(i, k)].norm_sqr();
            }
            assert!((total - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn stationary_state_has_zero_complexity() {
        let seq = LanczosSequence::from_coefficients(vec![1.3], vec![]).unwrap();
        let s = k_complexity_series(&seq, 10.0, 11).unwrap();
        assert!(s.values.iter().all(|&c| c == 0.0));
        assert!(matches!(scrambling_time(&s), Err(KrylovError::NoPlateau(_))));
    }

    #[test]
    fn scrambling_time_of_sine_squared() {
        let seq = LanczosSequence::from_coefficients(vec![0.0, 0.0], vec![1.0]).unwrap();
        // Exactly 0.5 plateau: sample a whole number of periods in the last half.
        let times: Vec<f64> = (0..=4000).map(|i| i as f64 * 2.0 * PI / 1000.0).collect();
        let values: Vec<f64> = times.iter().map(|t| t.sin().powi(2)).collect();
        let series = ComplexitySeries::from_samples(times, values).unwrap();
        assert!((series.plateau_mean - 0.5).abs() < 1e-3);
        let ts = scrambling_time(&series).unwrap();
        // sin²t = plateau/2 ≈ 1/4  ->  t = π/6
        let exact = (series.plateau_mean / 2.0).sqrt().asin();
        assert!((ts - exact).abs() < 1e-5, "{ts} vs {exact}");
        assert!((ts - PI / 6.0).abs() < 1e-3);
        let _ = seq;
    }

    #[test]
    fn scrambling_time_of_linear_ramp() {
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|&t| t.min(10.0)).collect();
        let series = ComplexitySeries::from_samples(times, values).unwrap();
        assert_eq!(series.plateau_mean, 10.0);
        assert!((scrambling_time(&series).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn scrambling_not_reached() {
        // A series whose early part never reaches half of an imposed plateau.
        let mut s = ComplexitySeries::from_samples(vec![0.0, 1.0, 2.0], vec![0.0, 0.1, 0.2]).unwrap();
        s.plateau_mean = 1.0;
        match scrambling_time(&s) {
            Err(KrylovError::NotReached { attained, .. }) => assert_eq!(attained, 0.2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variance_examples() {
        let c = LanczosSequence::from_coefficients(vec![2.0; 5], vec![1.0; 4]).unwrap();
        assert_eq!(lanczos_variances(&c, 1.0).unwrap(), (0.0, 0.0));
        let two = LanczosSequence::from_coefficients(vec![0.0, 2.0], vec![1.0]).unwrap();
        let (va, vb) = lanczos_variances(&two, 1.0).unwrap();
        assert_eq!(va, 2.0);
        assert!(vb.is_nan());
        assert!(matches!(
            lanczos_variances(&two, 0.5),
            Err(KrylovError::TooFewCoefficients { kept: 1, .. })
        ));
        assert!(matches!(lanczos_variances(&two, 0.0), Err(KrylovError::FractionOutOfRange(_))));
    }

    #[test]
    fn variance_uses_leading_fraction() {
        let a: Vec<f64> = (0..8).map(f64::from).collect();
        let seq = LanczosSequence::from_coefficients(a, vec![1.0; 7]).unwrap();
        // first ⌈0.5·8⌉ = 4 entries: 0,1,2,3 -> variance 5/3
        let (va, _) = lanczos_variances(&seq, 0.5).unwrap();
        assert!((va - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(truncated_len(528, 0.125).unwrap(), 66);
        assert_eq!(truncated_len(528, 0.5).unwrap(), 264);
        assert_eq!(truncated_len(10, 0.125).unwrap(), 2);
    }

    #[test]
    fn truncation_edge_cases() {
        let seq = LanczosSequence::from_coefficients(vec![0.3, -0.2, 0.1], vec![0.8, 1.1]).unwrap();
        let full = k_complexity_series(&seq, 20.0, 64).unwrap();
        let same = k_complexity_truncated(&seq, 1.0, 20.0, 64).unwrap();
        assert_eq!(full, same);

        let two = LanczosSequence::from_coefficients(vec![0.0, 0.0], vec![1.0]).unwrap();
        let frozen = k_complexity_truncated(&two, 0.5, 10.0, 20).unwrap();
        assert!(frozen.values.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn complexity_bounds_and_norm() {
        let h = gaussian_hermitian(40, &mut seeded_rng(41));
        let seq = lanczos_state(&h, &random_state(40, 42), &LanczosOptions::default()).unwrap();
        let series = k_complexity_series(&seq, default_t_max(&seq), 300).unwrap();
        assert_eq!(series.values[0], 0.0);
        let max = (seq.dim() - 1) as f64;
        assert!(series.values.iter().all(|&c| (0.0..=max).contains(&c)));
        let amps = evolve_krylov(&seq, &series.times).unwrap();
        for row in amps.row_iter() {
            let n: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() <= 1e-9);
        }
    }
}
