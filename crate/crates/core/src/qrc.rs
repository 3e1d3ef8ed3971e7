//! Quantum reservoir computing on a ground-state regression task.
//!
//! Inputs are Ising ground states |ψ₀(λ)⟩ over a sweep of the longitudinal
//! field λ = hz, targets are the first excited energies E₁(λ). A reservoir
//! circuit U maps each input to U|ψ₀⟩, single-qubit Pauli expectations form the
//! features, and a ridge readout is fitted on the outer parameter bands and
//! tested on the central one.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuits::{apply_circuit, circuit_unitary, fmt17, pauli_features, sample_circuit_with, CircuitError, CircuitSpec, Family, SampleOptions};
use crate::error::LinalgError;
use crate::krylov::{default_t_max, k_complexity_series, lanczos_state, lanczos_variances, KrylovError, LanczosOptions};
use crate::matrix::{effective_hamiltonian, eig_hermitian, eigphases_unitary, StateVector, C64};
use crate::random::{derive_seed, label, stream_rng};
use crate::spectral::{r_statistic, SpectralError};
use crate::spin::{build_ising, IsingParams, SpinError};

pub const DEFAULT_TEST_FRACTION: f64 = 0.3;
pub const DEFAULT_GAMMA_GRID: [f64; 5] = [1e-8, 1e-6, 1e-4, 1e-2, 1.0];
pub const VALIDATION_CHUNKS: usize = 5;
/// Gap E₁ − E₀ below which a ground state counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;
const RANK_RTOL: f64 = 1e-12;
const STATE_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QrcError {
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("parameter grid must be finite and strictly increasing")]
    UnsortedGrid,
    #[error("test fraction {0} must lie in (0, 1)")]
    TestFraction(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("gamma must be finite and non-negative, got {0}")]
    InvalidGamma(f64),
    #[error("empty gamma grid")]
    EmptyGammaGrid,
    #[error("features are rank deficient at gamma = 0; use gamma > 0")]
    RankDeficient,
    #[error("no gamma in the grid gave a finite validation error")]
    NoValidGamma,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Row indices for training and testing; `test` is a contiguous block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    /// Central contiguous band of round(fraction·len) samples as the test set.
    pub fn central(len: usize, fraction: f64) -> Result<Self, QrcError> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(QrcError::TestFraction(fraction));
        }
        let m = ((fraction * len as f64).round() as usize).clamp(1, len.saturating_sub(2).max(1));
        let start = (len - m) / 2;
        let test: Vec<usize> = (start..start + m).collect();
        let train = (0..len).filter(|i| !(start..start + m).contains(i)).collect();
        Ok(Self { train, test })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QrcDataset {
    pub n: usize,
    pub inputs: Vec<StateVector>,
    pub ground_energies: Vec<f64>,
    pub targets: Vec<f64>,
    pub params: Vec<f64>,
    pub split: DatasetSplit,
}

impl QrcDataset {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Samples whose gap E₁ − E₀ is below [`DEGENERACY_GAP`].
    pub fn degenerate(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.targets[i] - self.ground_energies[i] < DEGENERACY_GAP)
            .collect()
    }

    pub fn target_range(&self) -> f64 {
        let (lo, hi) = self
            .targets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| (l.min(y), h.max(y)));
        hi - lo
    }

    /// Comma-separated table: lambda, E0, E1, then re/im of every amplitude.
    /// `#` lines carry n and the test band.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# qubit 0 = most significant bit; amplitude columns re_k,im_k for basis index k\n");
        let _ = writeln!(out, "# n {}", self.n);
        let _ = writeln!(
            out,
            "# test {} {}",
            self.split.test.first().copied().unwrap_or(0),
            self.split.test.len()
        );
        out.push_str("lambda,E0,E1");
        for k in 0..1usize << self.n {
            let _ = write!(out, ",re_{k},im_{k}");
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&fmt17(self.params[i]));
            let _ = write!(out, ",{},{}", fmt17(self.ground_energies[i]), fmt17(self.targets[i]));
            for z in self.inputs[i].amplitudes().iter() {
                let _ = write!(out, ",{},{}", fmt17(z.re), fmt17(z.im));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, QrcError> {
        let perr = |line: usize, msg: String| QrcError::Parse { line, msg };
        let mut n = None;
        let mut band = None;
        let mut header_seen = false;
        let mut ds = QrcDataset {
            n: 0,
            inputs: Vec::new(),
            ground_energies: Vec::new(),
            targets: Vec::new(),
            params: Vec::new(),
            split: DatasetSplit { train: vec![], test: vec![] },
        };
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let f: Vec<&str> = meta.split_whitespace().collect();
                let num = |s: &str| s.parse::<usize>().map_err(|_| perr(ln, format!("bad integer '{s}'")));
                match f.as_slice() {
                    ["n", v] => {
                        let v = num(v)?;
                        if v == 0 || v > 20 {
                            return Err(perr(ln, format!("unsupported qubit count {v}")));
                        }
                        n = Some(v);
                    }
                    ["test", s, l] => band = Some((num(s)?, num(l)?)),
                    _ => {}
                }
                continue;
            }
            let n = n.ok_or_else(|| perr(ln, "'# n' line must precede the table".into()))?;
            let cols = 3 + (2usize << n);
            let fields: Vec<&str> = line.split(',').collect();
            if !header_seen {
                if fields.len() != cols || fields[0] != "lambda" {
                    return Err(perr(ln, format!("expected header with {cols} columns")));
                }
                header_seen = true;
                continue;
            }
            if fields.len() != cols {
                return Err(perr(ln, format!("expected {cols} fields, got {}", fields.len())));
            }
            let vals = fields
                .iter()
                .map(|s| match s.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(perr(ln, format!("bad number '{s}'"))),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let amps = DVector::from_fn(1usize << n, |k, _| C64::new(vals[3 + 2 * k], vals[4 + 2 * k]));
            let psi = StateVector::new(amps, 1e-10).map_err(|e| perr(ln, e.to_string()))?;
            if vals[2] < vals[1] {
                return Err(perr(ln, "E1 below E0".into()));
            }
            ds.params.push(vals[0]);
            ds.ground_energies.push(vals[1]);
            ds.targets.push(vals[2]);
            ds.inputs.push(psi);
        }
        let n = n.ok_or_else(|| perr(0, "missing '# n' line".into()))?;
        let (start, len) = band.ok_or_else(|| perr(0, "missing '# test' line".into()))?;
        let total = ds.params.len();
        if len == 0 || start.checked_add(len).is_none_or(|end| end > total) || len >= total {
            return Err(perr(0, format!("test band {start}+{len} does not fit {total} samples")));
        }
        if ds.params.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QrcError::UnsortedGrid);
        }
        ds.n = n;
        ds.split = DatasetSplit {
            test: (start..start + len).collect(),
            train: (0..total).filter(|i| !(start..start + len).contains(i)).collect(),
        };
        Ok(ds)
    }
}

/// Evenly spaced grid of `count` points on [lo, hi].
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Exact diagonalisation of the full-space chain at every hz in `hz_grid`
/// (other couplings from `base`). Ground-state phases are fixed so that the
/// largest amplitude is real and positive.
pub fn build_dataset(base: &IsingParams, hz_grid: &[f64], test_fraction: f64) -> Result<QrcDataset, QrcError> {
    if hz_grid.len() < 10 {
        return Err(QrcError::TooFewSamples {
            needed: 10,
            found: hz_grid.len(),
        });
    }
    if hz_grid.iter().any(|x| !x.is_finite()) || hz_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(QrcError::UnsortedGrid);
    }
    let split = DatasetSplit::central(hz_grid.len(), test_fraction)?;
    let mut ds = QrcDataset {
        n: base.n,
        inputs: Vec::with_capacity(hz_grid.len()),
        ground_energies: Vec::with_capacity(hz_grid.len()),
        targets: Vec::with_capacity(hz_grid.len()),
        params: hz_grid.to_vec(),
        split,
    };
    for &hz in hz_grid {
        let h = build_ising(&IsingParams { hz, ..*base })?;
        let eig = eig_hermitian(&h)?;
        let psi = eig.vector(0);
        let amps = psi.amplitudes();
        let lead = amps.iter().fold(C64::new(0.0, 0.0), |m, z| if z.norm() > m.norm() { *z } else { m });
        let phase = lead.conj() / lead.norm();
        ds.inputs.push(StateVector::normalized(amps.map(|z| z * phase))?);
        ds.ground_energies.push(eig.values[0]);
        ds.targets.push(eig.values[1]);
    }
    Ok(ds)
}

/// Linear readout y ≈ w·x + bias, fitted with an unpenalised bias.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

impl RidgeModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict(&self, features: &DMatrix<f64>) -> Result<Vec<f64>, QrcError> {
        if features.ncols() != self.weights.len() {
            return Err(QrcError::ShapeMismatch(format!(
                "{} features for a model with {}",
                features.ncols(),
                self.weights.len()
            )));
        }
        Ok(features
            .row_iter()
            .map(|r| self.bias + r.iter().zip(&self.weights).map(|(v, w)| v * w).sum::<f64>())
            .collect())
    }
}

/// Solves (AᵀA + γ·diag(1,…,1,0)) [w; b] = Aᵀy with A = [X | 1] by Cholesky.
pub fn ridge_fit(features: &DMatrix<f64>, targets: &[f64], gamma: f64) -> Result<RidgeModel, QrcError> {
    let (rows, p) = features.shape();
    if rows != targets.len() {
        return Err(QrcError::ShapeMismatch(format!("{rows} feature rows for {} targets", targets.len())));
    }
    if rows == 0 {
        return Err(QrcError::TooFewSamples { needed: 1, found: 0 });
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(QrcError::InvalidGamma(gamma));
    }
    let a = DMatrix::from_fn(rows, p + 1, |i, j| if j < p { features[(i, j)] } else { 1.0 });
    if gamma == 0.0 {
        let sv = a.clone().singular_values();
        let max = sv.max();
        if rows < p + 1 || sv.min() <= RANK_RTOL * max {
            return Err(QrcError::RankDeficient);
        }
    }
    let mut m = a.tr_mul(&a);
    for i in 0..p {
        m[(i, i)] += gamma;
    }
    let rhs = a.tr_mul(&DVector::from_column_slice(targets));
    let chol = m.cholesky().ok_or(QrcError::RankDeficient)?;
    let sol = chol.solve(&rhs);
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(QrcError::RankDeficient);
    }
    Ok(RidgeModel {
        weights: sol.rows(0, p).iter().copied().collect(),
        bias: sol[p],
        gamma,
    })
}

/// Mean squared residual.
pub fn evaluate(model: &RidgeModel, features: &DMatrix<f64>, targets: &[f64]) -> Result<f64, QrcError> {
    if features.nrows() != targets.len() || targets.is_empty() {
        return Err(QrcError::ShapeMismatch(format!(
            "{} feature rows for {} targets",
            features.nrows(),
            targets.len()
        )));
    }
    let pred = model.predict(features)?;
    let sse: f64 = pred.iter().zip(targets).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(sse / targets.len() as f64)
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Picks gamma by leave-one-chunk-out validation over contiguous chunks of
/// the rows. Returns the winner (first minimum) and the mean validation MSE
/// per grid entry (infinite where the fit failed).
pub fn select_gamma(
    features: &DMatrix<f64>,
    targets: &[f64],
    grid: &[f64],
    chunks: usize,
) -> Result<(f64, Vec<f64>), QrcError> {
    if grid.is_empty() {
        return Err(QrcError::EmptyGammaGrid);
    }
    let rows = targets.len();
    if features.nrows() != rows {
        return Err(QrcError::ShapeMismatch(format!("{} feature rows for {rows} targets", features.nrows())));
    }
    if chunks < 2 || rows < chunks {
        return Err(QrcError::TooFewSamples { needed: chunks.max(2), found: rows });
    }
    let bounds: Vec<usize> = (0..=chunks).map(|c| c * rows / chunks).collect();
    let mut scores = Vec::with_capacity(grid.len());
    for &gamma in grid {
        let mut total = 0.0;
        for c in 0..chunks {
            let held: Vec<usize> = (bounds[c]..bounds[c + 1]).collect();
            let kept: Vec<usize> = (0..rows).filter(|i| !held.contains(i)).collect();
            let y_kept: Vec<f64> = kept.iter().map(|&i| targets[i]).collect();
            let y_held: Vec<f64> = held.iter().map(|&i| targets[i]).collect();
            match ridge_fit(&select_rows(features, &kept), &y_kept, gamma) {
                Ok(m) => total += evaluate(&m, &select_rows(features, &held), &y_held)?,
                Err(QrcError::RankDeficient) => {
                    total = f64::INFINITY;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        scores.push(total / chunks as f64);
    }
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.is_finite() && best.is_none_or(|b| *s < scores[b]) {
            best = Some(i);
        }
    }
    let best = best.ok_or(QrcError::NoValidGamma)?;
    Ok((grid[best], scores))
}

/// Pauli features of U|ψ⟩ for every dataset input, one row per sample.
pub fn reservoir_features(ds: &QrcDataset, circuit: &CircuitSpec) -> Result<DMatrix<f64>, QrcError> {
    if circuit.n() != ds.n {
        return Err(QrcError::ShapeMismatch(format!(
            "{}-qubit circuit for a {}-qubit dataset",
            circuit.n(),
            ds.n
        )));
    }
    let mut x = DMatrix::zeros(ds.len(), 2 * ds.n);
    for (i, psi) in ds.inputs.iter().enumerate() {
        let f = pauli_features(&apply_circuit(circuit, psi)?, ds.n)?;
        for (j, v) in f.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitScore {
    pub seed: u64,
    pub gamma: f64,
    pub test_mse: f64,
    /// Test MSE divided by the squared target range of the dataset.
    pub normalized_mse: f64,
}

/// Gamma selection on the training rows, refit, and test MSE for one reservoir.
pub fn score_circuit(ds: &QrcDataset, circuit: &CircuitSpec, gamma_grid: &[f64]) -> Result<CircuitScore, QrcError> {
    let x = reservoir_features(ds, circuit)?;
    let pick = |idx: &[usize]| -> (DMatrix<f64>, Vec<f64>) {
        (select_rows(&x, idx), idx.iter().map(|&i| ds.targets[i]).collect())
    };
    let (x_train, y_train) = pick(&ds.split.train);
    let (x_test, y_test) = pick(&ds.split.test);
    let (gamma, _) = select_gamma(&x_train, &y_train, gamma_grid, VALIDATION_CHUNKS)?;
    let model = ridge_fit(&x_train, &y_train, gamma)?;
    let test_mse = evaluate(&model, &x_test, &y_test)?;
    let range = ds.target_range();
    Ok(CircuitScore {
        seed: circuit.seed(),
        gamma,
        test_mse,
        normalized_mse: if range > 0.0 { test_mse / (range * range) } else { test_mse },
    })
}

/// Mean, median and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                median: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, median, std }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyBenchmark {
    pub family: Family,
    pub scores: Vec<CircuitScore>,
    pub mse: Summary,
    pub normalized_mse: Summary,
}

/// Seed of circuit `index` in a family ensemble.
pub fn circuit_seed(master: u64, family: Family, index: usize) -> u64 {
    derive_seed(master, label(family.name()), index as u64)
}

/// Scores `n_circuits` reservoirs of one family. Circuits are independent and
/// run on the current rayon pool; results keep circuit order.
pub fn run_family_benchmark(
    ds: &QrcDataset,
    family: Family,
    n_circuits: usize,
    depth: usize,
    gamma_grid: &[f64],
    seed: u64,
    opts: &SampleOptions,
) -> Result<FamilyBenchmark, QrcError> {
    let scores = (0..n_circuits)
        .into_par_iter()
        .map(|i| {
            let c = sample_circuit_with(family, ds.n, depth, circuit_seed(seed, family, i), opts)?;
            score_circuit(ds, &c, gamma_grid)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mse: Vec<f64> = scores.iter().map(|s| s.test_mse).collect();
    let nmse: Vec<f64> = scores.iter().map(|s| s.normalized_mse).collect();
    Ok(FamilyBenchmark {
        family,
        mse: Summary::of(&mse),
        normalized_mse: Summary::of(&nmse),
        scores,
    })
}

/// Krylov and spectral statistics of one reservoir, taken on H_eff at T = ħ = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirStats {
    pub seed: u64,
    pub dim: usize,
    pub initial_state: usize,
    pub krylov_dim: usize,
    pub var_a: f64,
    pub var_b: f64,
    /// Plateau mean of C_K.
    pub c_bar: f64,
    /// r̄ of the H_eff spectrum; NaN when it has fewer than three distinct levels.
    pub r_bar: f64,
}

/// Compiles `circuit`, takes H_eff, and runs Lanczos from a computational-basis
/// state chosen by the circuit seed.
pub fn reservoir_stats(circuit: &CircuitSpec, n_times: usize) -> Result<ReservoirStats, QrcError> {
    let u = circuit_unitary(circuit)?;
    let dec = eigphases_unitary(&u)?;
    let h = effective_hamiltonian(&dec, 1.0, 1.0);
    let dim = h.dim();
    let start = stream_rng(circuit.seed(), STATE_STREAM).random_range(0..dim);
    let seq = lanczos_state(&h, &StateVector::basis(dim, start), &LanczosOptions::default())?;
    let (var_a, var_b) = if seq.dim() >= 2 {
        lanczos_variances(&seq, 1.0)?
    } else {
        (0.0, f64::NAN)
    };
    let c_bar = if seq.dim() >= 2 {
        k_complexity_series(&seq, default_t_max(&seq), n_times)?.plateau_mean
    } else {
        0.0
    };
    let r_bar = match r_statistic(&dec.values) {
        Ok(r) => r,
        Err(SpectralError::TooFewLevels { .. }) => f64::NAN,
        Err(e) => return Err(e.into()),
    };
    Ok(ReservoirStats {
        seed: circuit.seed(),
        dim,
        initial_state: start,
        krylov_dim: seq.dim(),
        var_a,
        var_b,
        c_bar,
        r_bar,
    })
}
