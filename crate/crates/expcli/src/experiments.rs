//! The six experiments. Each returns in-memory tables; writing them is left to
//! [`crate::output`]. Parallel work goes through the current rayon pool and
//! every collection keeps task order, so output does not depend on the
//! number of threads.

use rayon::prelude::*;
use thiserror::Error;

use kryres::circuits::{sample_circuit_with, CircuitError, Family, SampleOptions};
use kryres::krylov::{k_complexity_series, lanczos_state, lanczos_variances, scrambling_time, KrylovError, LanczosOptions, LanczosSequence};
use kryres::matrix::{effective_hamiltonian, eig_hermitian, eigphases_unitary, ComplexMatrix, EigenDecomposition, Sign, StateVector};
use kryres::qrc::{build_dataset, circuit_seed, linspace, reservoir_stats, run_family_benchmark, QrcError, ReservoirStats};
use kryres::random::label;
use kryres::spectral::{heisenberg_time, r_statistic, r_statistic_phases, SpectralError};
use kryres::spin::{build_ising, build_standard_map, eigenstate_bank, parity_basis, project_operator, EigenSelection, IsingParams, ParityBasis, SpectralOperator, SpinError, StandardMapParams};
use kryres::LinalgError;

use crate::config::{ConfigError, ExperimentConfig, ExperimentId, TimeScale};
use crate::stats::{finite_mean, mean, median, permutation_count, power_law_fit, sample_variance};
use crate::table::{Cell, Table};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical_from!(SpinError, KrylovError, LinalgError, QrcError, CircuitError, SpectralError);

/// Named tables plus free-form notes for the metadata file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub experiment: ExperimentId,
    pub tables: Vec<(String, Table)>,
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentId::E1 => run_e1_scrambling_scaling(cfg),
        ExperimentId::E2 => run_e2_rbar_heff(cfg),
        ExperimentId::E3 => run_e3_krylov_ising(cfg),
        ExperimentId::E4 => run_e4_standard_map(cfg),
        ExperimentId::E5 => run_e5_reservoir_krylov(cfg),
        ExperimentId::E6 => run_e6_qrc_benchmark(cfg),
    }
}

fn row(cells: impl IntoIterator<Item = Cell>) -> Vec<Cell> {
    cells.into_iter().collect()
}

/// Krylov summary of one initial state for one LS fraction.
#[derive(Clone, Copy, Debug)]
struct ChainStats {
    var_a: f64,
    var_b: f64,
    c_bar: f64,
    dim: usize,
}

fn t_max(seq: &LanczosSequence, factor: f64) -> f64 {
    let mb = seq.mean_b();
    if mb > 0.0 {
        factor * seq.dim() as f64 / mb
    } else {
        1.0
    }
}

/// Statistics of the chain cut to its first ⌈fraction·D⌉ sites, plus the
/// scrambling time of that chain (None if C_K never reaches half its plateau).
fn chain_stats(seq: &LanczosSequence, fraction: f64, cfg: &ExperimentConfig) -> Result<(ChainStats, Option<f64>), RunError> {
    let cut = seq.truncated(fraction)?;
    let (var_a, var_b) = if cut.dim() >= 2 {
        lanczos_variances(seq, fraction)?
    } else {
        (f64::NAN, f64::NAN)
    };
    if cut.dim() < 2 {
        return Ok((ChainStats { var_a, var_b, c_bar: 0.0, dim: cut.dim() }, None));
    }
    let series = k_complexity_series(&cut, t_max(&cut, cfg.t_max_factor), cfg.n_times)?;
    let ts = match scrambling_time(&series) {
        Ok(t) => Some(t),
        Err(KrylovError::NotReached { .. } | KrylovError::NoPlateau(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok((
        ChainStats {
            var_a,
            var_b,
            c_bar: series.plateau_mean,
            dim: cut.dim(),
        },
        ts,
    ))
}

/// Bank averages for one LS fraction.
#[derive(Clone, Copy, Debug)]
struct BankAggregate {
    fraction: f64,
    var_a: f64,
    var_b: f64,
    c_bar: f64,
    var_c_bar: f64,
    krylov_dim: f64,
}

struct BankResult {
    per_fraction: Vec<BankAggregate>,
    /// Full-chain statistics per bank state.
    full: Vec<ChainStats>,
    /// Scrambling times of the full chains; None where not reached.
    ts: Vec<Option<f64>>,
}

fn bank_krylov(h: &ComplexMatrix, bank: &[StateVector], fractions: &[f64], cfg: &ExperimentConfig) -> Result<BankResult, RunError> {
    let per_state: Vec<(Vec<ChainStats>, ChainStats, Option<f64>)> = bank
        .par_iter()
        .map(|psi| -> Result<_, RunError> {
            let seq = lanczos_state(h, psi, &LanczosOptions::default())?;
            let (full, ts) = chain_stats(&seq, 1.0, cfg)?;
            let stats = fractions
                .iter()
                .map(|&f| if f >= 1.0 { Ok(full) } else { chain_stats(&seq, f, cfg).map(|(s, _)| s) })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((stats, full, ts))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let per_fraction = fractions
        .iter()
        .enumerate()
        .map(|(i, &fraction)| {
            let col = |f: fn(&ChainStats) -> f64| per_state.iter().map(|(s, _, _)| f(&s[i])).collect::<Vec<f64>>();
            let c = col(|s| s.c_bar);
            BankAggregate {
                fraction,
                var_a: finite_mean(&col(|s| s.var_a)),
                var_b: finite_mean(&col(|s| s.var_b)),
                c_bar: mean(&c),
                var_c_bar: sample_variance(&c),
                krylov_dim: mean(&col(|s| s.dim as f64)),
            }
        })
        .collect();
    Ok(BankResult {
        per_fraction,
        full: per_state.iter().map(|p| p.1).collect(),
        ts: per_state.into_iter().map(|p| p.2).collect(),
    })
}

fn ising(cfg: &ExperimentConfig, n: usize, hz: f64) -> IsingParams {
    IsingParams {
        n,
        hx: cfg.hx,
        hz,
        j_coupling: cfg.j,
    }
}

fn sector_hamiltonian(cfg: &ExperimentConfig, basis: &ParityBasis, hz: f64) -> Result<ComplexMatrix, RunError> {
    Ok(project_operator(&build_ising(&ising(cfg, basis.n(), hz))?, basis)?)
}

/// Eigenstates of the integrable reference Hamiltonian (hz = bank_hz) in the
/// central window of its spectrum.
fn ising_bank(cfg: &ExperimentConfig, basis: &ParityBasis) -> Result<Vec<StateVector>, RunError> {
    let h = sector_hamiltonian(cfg, basis, cfg.bank_hz)?;
    let sel = EigenSelection::central(cfg.bank_window, Some(cfg.bank_size));
    Ok(eigenstate_bank(SpectralOperator::Hermitian(&h), &sel)?)
}

fn finite(ts: &[Option<f64>]) -> Vec<f64> {
    ts.iter().flatten().copied().collect()
}

/// Scrambling-time scaling with chain length.
pub fn run_e1_scrambling_scaling(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let hash = cfg.short_hash();
    let mut n_grid = cfg.n_grid.clone();
    if cfg.full_scale && !n_grid.contains(&12) {
        n_grid.push(12);
    }
    let mut states = Table::new(["n", "state", "krylov_dim", "plateau", "t_s", "config_hash"]);
    let mut points = Vec::new();
    let mut notes = Vec::new();
    for &n in &n_grid {
        let basis = parity_basis(n)?;
        let bank = ising_bank(cfg, &basis)?;
        let h = sector_hamiltonian(cfg, &basis, cfg.hz)?;
        let res = bank_krylov(&h, &bank, &[1.0], cfg)?;
        for (i, (st, ts)) in res.full.iter().zip(&res.ts).enumerate() {
            states.push(row([
                n.into(),
                i.into(),
                st.dim.into(),
                st.c_bar.into(),
                ts.unwrap_or(f64::NAN).into(),
                hash.as_str().into(),
            ]));
        }
        let reached = finite(&res.ts);
        let excluded = res.ts.len() - reached.len();
        if excluded > 0 {
            notes.push(format!("n = {n}: {excluded} states never reached half plateau and were excluded"));
        }
        points.push((n, basis.dim(), bank.len(), excluded, median(&reached), res.per_fraction[0].c_bar));
    }
    let xs: Vec<f64> = points.iter().filter(|p| p.4.is_finite()).map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().filter(|p| p.4.is_finite()).map(|p| p.4).collect();
    let fit = power_law_fit(&xs, &ys);
    let (exp, se, lo, hi) = fit.map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN), |f| (f.exponent, f.stderr, f.ci.0, f.ci.1));
    let mut table = Table::new([
        "n",
        "dim",
        "states",
        "excluded",
        "median_ts",
        "mean_plateau",
        "exponent",
        "exponent_stderr",
        "ci_low",
        "ci_high",
        "config_hash",
    ]);
    for (n, dim, states_n, excluded, ts, plateau) in points {
        table.push(row([
            n.into(),
            dim.into(),
            states_n.into(),
            excluded.into(),
            ts.into(),
            plateau.into(),
            exp.into(),
            se.into(),
            lo.into(),
            hi.into(),
            hash.as_str().into(),
        ]));
    }
    Ok(RunOutput {
        experiment: ExperimentId::E1,
        tables: vec![("e1_scrambling".into(), table), ("e1_states".into(), states)],
        notes,
    })
}

/// Spectrum, Heisenberg time and bank Krylov data of one Ising point.
struct IsingPoint {
    eig: EigenDecomposition,
    r_bar: f64,
    t_h: f64,
    t_s: f64,
    ts_excluded: usize,
    h_stats: Vec<BankAggregate>,
}

fn ising_point(
    cfg: &ExperimentConfig,
    basis: &ParityBasis,
    bank: &[StateVector],
    hz: f64,
    fractions: &[f64],
) -> Result<(ComplexMatrix, IsingPoint), RunError> {
    let h = sector_hamiltonian(cfg, basis, hz)?;
    let eig = eig_hermitian(&h)?;
    let r_bar = r_statistic(&eig.values)?;
    let t_h = heisenberg_time(&eig.values, 1.0)?;
    let res = bank_krylov(&h, bank, fractions, cfg)?;
    let reached = finite(&res.ts);
    let point = IsingPoint {
        r_bar,
        t_h,
        t_s: median(&reached),
        ts_excluded: res.ts.len() - reached.len(),
        h_stats: res.per_fraction,
        eig,
    };
    Ok((h, point))
}

fn evolution_time(scale: TimeScale, p: &IsingPoint) -> Result<Option<f64>, RunError> {
    match scale {
        TimeScale::Hamiltonian => Ok(None),
        TimeScale::Heisenberg => Ok(Some(p.t_h)),
        TimeScale::Scrambling(d) if p.t_s.is_finite() => Ok(Some(p.t_s / f64::from(d))),
        TimeScale::Scrambling(_) => Err(RunError::Numerical("no bank state reached half plateau; t_S undefined".into())),
    }
}

/// Eigenphases of U = exp(+iHT) (ħ = 1) and whether any phase left (−π, π].
fn evolved_phases(p: &IsingPoint, t: f64) -> Result<(EigenDecomposition, bool), RunError> {
    let u = p.eig.exponentiate(t, 1.0, Sign::Plus);
    let dec = eigphases_unitary(&u)?;
    let reach = p.eig.values.iter().fold(0.0_f64, |m, e| m.max(e.abs())) * t;
    Ok((dec, reach > std::f64::consts::PI))
}

/// r̄ of H versus r̄ of H_eff built at several evolution times.
pub fn run_e2_rbar_heff(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let hash = cfg.short_hash();
    let basis = parity_basis(cfg.n)?;
    let bank = ising_bank(cfg, &basis)?;
    let mut cols = vec!["hz".to_string(), "r_bar_H".into(), "t_s".into(), "t_h".into(), "ts_excluded".into()];
    for s in &cfg.time_scales {
        cols.push(format!("r_bar_{s}"));
        cols.push(format!("wrapped_{s}"));
    }
    cols.push("config_hash".into());
    let mut table = Table::new(cols);
    let mut notes = Vec::new();
    for &hz in &cfg.hz_grid {
        let (_, p) = ising_point(cfg, &basis, &bank, hz, &[1.0])?;
        let mut cells = row([hz.into(), p.r_bar.into(), p.t_s.into(), p.t_h.into(), p.ts_excluded.into()]);
        for &s in &cfg.time_scales {
            match evolution_time(s, &p)? {
                None => {
                    cells.push(p.r_bar.into());
                    cells.push(0usize.into());
                }
                Some(t) => {
                    let (dec, wrapped) = evolved_phases(&p, t)?;
                    let levels: Vec<f64> = dec.values.iter().map(|th| th / t).collect();
                    if wrapped {
                        notes.push(format!("hz = {hz}, T = {s}: eigenphases wrap around ±π"));
                    }
                    cells.push(r_statistic(&levels)?.into());
                    cells.push(usize::from(wrapped).into());
                }
            }
        }
        cells.push(hash.as_str().into());
        table.push(cells);
    }
    Ok(RunOutput {
        experiment: ExperimentId::E2,
        tables: vec![("e2_rbar".into(), table)],
        notes,
    })
}

/// Lanczos statistics and K-complexity over the hz sweep, per time scale and
/// LS fraction.
pub fn run_e3_krylov_ising(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let hash = cfg.short_hash();
    let basis = parity_basis(cfg.n)?;
    let bank = ising_bank(cfg, &basis)?;
    let mut table = Table::new([
        "hz",
        "time_scale",
        "ls_fraction",
        "var_a",
        "var_b",
        "c_bar",
        "var_c_bar",
        "krylov_dim",
        "wrapped",
        "config_hash",
    ]);
    let mut notes = Vec::new();
    let needs_h = cfg.time_scales.contains(&TimeScale::Hamiltonian);
    for &hz in &cfg.hz_grid {
        let fractions: &[f64] = if needs_h { &cfg.ls_fractions } else { &[1.0] };
        let (_, p) = ising_point(cfg, &basis, &bank, hz, fractions)?;
        for &s in &cfg.time_scales {
            let (aggs, wrapped) = match evolution_time(s, &p)? {
                None => (p.h_stats.clone(), false),
                Some(t) => {
                    let (dec, wrapped) = evolved_phases(&p, t)?;
                    if wrapped {
                        notes.push(format!("hz = {hz}, T = {s}: eigenphases wrap around ±π"));
                    }
                    let heff = effective_hamiltonian(&dec, t, 1.0);
                    (bank_krylov(&heff, &bank, &cfg.ls_fractions, cfg)?.per_fraction, wrapped)
                }
            };
            for a in aggs {
                table.push(row([
                    hz.into(),
                    s.to_string().into(),
                    a.fraction.into(),
                    a.var_a.into(),
                    a.var_b.into(),
                    a.c_bar.into(),
                    a.var_c_bar.into(),
                    a.krylov_dim.into(),
                    usize::from(wrapped).into(),
                    hash.as_str().into(),
                ]));
            }
        }
    }
    Ok(RunOutput {
        experiment: ExperimentId::E3,
        tables: vec![("e3_krylov".into(), table)],
        notes,
    })
}

fn map_params(cfg: &ExperimentConfig, size: usize, k: f64) -> StandardMapParams {
    StandardMapParams {
        bloch_x: cfg.bloch_x,
        bloch_p: cfg.bloch_p,
        convention: cfg.kick_convention,
        ..StandardMapParams::new(size, k)
    }
}

/// Quantised standard map: eigenphase r̄ and Krylov statistics of H_eff
/// (T = 1, ħ = 1) over the kick strength.
pub fn run_e4_standard_map(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let hash = cfg.short_hash();
    let mut table = Table::new([
        "k",
        "N",
        "r_bar",
        "var_a",
        "var_b",
        "c_bar",
        "var_c_bar",
        "krylov_dim",
        "config_hash",
    ]);
    for &size in &cfg.map_sizes {
        let u0 = build_standard_map(&map_params(cfg, size, cfg.bank_k))?;
        let sel = EigenSelection::central(cfg.bank_window, Some(cfg.bank_size));
        let bank = eigenstate_bank(SpectralOperator::Unitary(&u0), &sel)?;
        for &k in &cfg.k_grid {
            let u = build_standard_map(&map_params(cfg, size, k))?;
            let dec = eigphases_unitary(&u)?;
            let r_bar = r_statistic_phases(&dec.values)?;
            let heff = effective_hamiltonian(&dec, 1.0, 1.0);
            let a = bank_krylov(&heff, &bank, &[1.0], cfg)?.per_fraction[0];
            table.push(row([
                k.into(),
                size.into(),
                r_bar.into(),
                a.var_a.into(),
                a.var_b.into(),
                a.c_bar.into(),
                a.var_c_bar.into(),
                a.krylov_dim.into(),
                hash.as_str().into(),
            ]));
        }
    }
    Ok(RunOutput {
        experiment: ExperimentId::E4,
        tables: vec![("e4_standard_map".into(), table)],
        notes: Vec::new(),
    })
}

fn sample_options(cfg: &ExperimentConfig) -> SampleOptions {
    SampleOptions {
        nearest_neighbour_mg: cfg.mg_nearest_neighbour,
    }
}

fn family_stats(cfg: &ExperimentConfig, family: Family, n: usize, count: usize) -> Vec<Result<ReservoirStats, RunError>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let c = sample_circuit_with(family, n, cfg.depth, circuit_seed(cfg.seed, family, i), &sample_options(cfg))?;
            Ok(reservoir_stats(&c, cfg.n_times)?)
        })
        .collect()
}

/// Family means of the reservoir Krylov statistics, C̄ normalised by 2ⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyKrylov {
    pub var_a: f64,
    pub var_b: f64,
    pub c_bar_over_dim: f64,
    pub var_c_bar_over_dim: f64,
    pub r_bar: f64,
    pub krylov_dim: f64,
}

fn summarize_family(stats: &[ReservoirStats], dim: usize) -> FamilyKrylov {
    let col = |f: fn(&ReservoirStats) -> f64| stats.iter().map(f).collect::<Vec<f64>>();
    let c = col(|s| s.c_bar);
    FamilyKrylov {
        var_a: finite_mean(&col(|s| s.var_a)),
        var_b: finite_mean(&col(|s| s.var_b)),
        c_bar_over_dim: mean(&c) / dim as f64,
        var_c_bar_over_dim: sample_variance(&c) / dim as f64,
        r_bar: finite_mean(&col(|s| s.r_bar)),
        krylov_dim: mean(&col(|s| s.krylov_dim as f64)),
    }
}

const CIRCUIT_COLUMNS: [&str; 10] = [
    "family",
    "n",
    "index",
    "seed",
    "initial_state",
    "krylov_dim",
    "var_a",
    "var_b",
    "c_bar",
    "r_bar",
];

fn circuit_row(family: Family, n: usize, i: usize, s: &ReservoirStats) -> Vec<Cell> {
    row([
        family.name().into(),
        n.into(),
        i.into(),
        s.seed.into(),
        s.initial_state.into(),
        s.krylov_dim.into(),
        s.var_a.into(),
        s.var_b.into(),
        s.c_bar.into(),
        s.r_bar.into(),
    ])
}

/// Krylov statistics of random reservoir circuits, per family and width.
pub fn run_e5_reservoir_krylov(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let hash = cfg.short_hash();
    let mut families = Table::new([
        "family",
        "n",
        "circuits",
        "failures",
        "var_a",
        "var_b",
        "c_bar_over_dim",
        "var_c_bar_over_dim",
        "r_bar",
        "krylov_dim",
        "config_hash",
    ]);
    let mut circuits = Table::new(CIRCUIT_COLUMNS.iter().copied().chain(["config_hash"]));
    let mut notes = Vec::new();
    for &n in &cfg.n_grid {
        let count = cfg.ensemble_size(n);
        for &family in &cfg.families {
            let mut ok = Vec::new();
            for (i, r) in family_stats(cfg, family, n, count).into_iter().enumerate() {
                match r {
                    Ok(s) => {
                        let mut cells = circuit_row(family, n, i, &s);
                        cells.push(hash.as_str().into());
                        circuits.push(cells);
                        ok.push(s);
                    }
                    Err(e) => notes.push(format!("{family} n = {n} circuit {i}: {e}")),
                }
            }
            let agg = summarize_family(&ok, 1 << n);
            families.push(row([
                family.name().into(),
                n.into(),
                ok.len().into(),
                (count - ok.len()).into(),
                agg.var_a.into(),
                agg.var_b.into(),
                agg.c_bar_over_dim.into(),
                agg.var_c_bar_over_dim.into(),
                agg.r_bar.into(),
                agg.krylov_dim.into(),
                hash.as_str().into(),
            ]));
        }
    }
    Ok(RunOutput {
        experiment: ExperimentId::E5,
        tables: vec![("e5_families".into(), families), ("e5_circuits".into(), circuits)],
        notes,
    })
}

/// One family's aggregate as used in the correlation report.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyRow {
    pub family: String,
    pub config_hash: String,
    pub mse: f64,
    pub c_bar: f64,
    pub var_c_bar: f64,
    pub r_bar: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correlation {
    pub quantity: &'static str,
    pub rho: f64,
    /// Shuffles whose |ρ| fell strictly below the observed |ρ|.
    pub null_below: usize,
    pub permutations: usize,
}

/// Spearman correlations of family mean MSE against C̄, Var(C̄) and r̄, each
/// with a label-permutation null. Rows from different configurations are refused.
pub fn family_correlations(rows: &[FamilyRow], permutations: usize, seed: u64) -> Result<Vec<Correlation>, RunError> {
    if let Some(first) = rows.first() {
        if let Some(other) = rows.iter().find(|r| r.config_hash != first.config_hash) {
            return Err(RunError::Config(ConfigError::Value {
                key: "config_hash".into(),
                msg: format!("rows from {} and {} cannot be correlated", first.config_hash, other.config_hash),
            }));
        }
    }
    let mse: Vec<f64> = rows.iter().map(|r| r.mse).collect();
    type Getter = fn(&FamilyRow) -> f64;
    let quantities: [(&'static str, Getter); 3] = [
        ("c_bar", |r| r.c_bar),
        ("var_c_bar", |r| r.var_c_bar),
        ("r_bar", |r| r.r_bar),
    ];
    Ok(quantities
        .iter()
        .map(|(name, f)| {
            let y: Vec<f64> = rows.iter().map(f).collect();
            let (rho, null_below) = permutation_count(&mse, &y, permutations, seed, label(name));
            Correlation {
                quantity: name,
                rho,
                null_below,
                permutations,
            }
        })
        .collect())
}

/// Reservoir benchmark on the Ising ground-state task, with the Krylov
/// statistics of the very same circuits and the family-level correlations.
pub fn run_e6_qrc_benchmark(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let hash = cfg.short_hash();
    let n = cfg.n;
    let grid = linspace(cfg.dataset_hz_min, cfg.dataset_hz_max, cfg.dataset_samples);
    let ds = build_dataset(&ising(cfg, n, 0.0), &grid, cfg.test_fraction)?;
    let mut notes = Vec::new();
    let degenerate = ds.degenerate();
    if !degenerate.is_empty() {
        notes.push(format!("degenerate ground states at samples {degenerate:?}"));
    }
    let count = cfg.ensemble_size(n);
    let mut fam_table = Table::new([
        "family",
        "n",
        "circuits",
        "mse_mean",
        "mse_median",
        "mse_std",
        "nmse_mean",
        "c_bar_over_dim",
        "var_c_bar_over_dim",
        "r_bar",
        "config_hash",
    ]);
    let mut circ_table = Table::new(
        CIRCUIT_COLUMNS
            .iter()
            .copied()
            .chain(["gamma", "test_mse", "normalized_mse", "config_hash"]),
    );
    let mut rows = Vec::new();
    for &family in &cfg.families {
        let bench = run_family_benchmark(&ds, family, count, cfg.depth, &cfg.gamma_grid, cfg.seed, &sample_options(cfg))?;
        let stats = family_stats(cfg, family, n, count).into_iter().collect::<Result<Vec<_>, _>>()?;
        for (i, (s, score)) in stats.iter().zip(&bench.scores).enumerate() {
            let mut cells = circuit_row(family, n, i, s);
            cells.extend([score.gamma.into(), score.test_mse.into(), score.normalized_mse.into(), hash.as_str().into()]);
            circ_table.push(cells);
        }
        let agg = summarize_family(&stats, 1 << n);
        fam_table.push(row([
            family.name().into(),
            n.into(),
            count.into(),
            bench.mse.mean.into(),
            bench.mse.median.into(),
            bench.mse.std.into(),
            bench.normalized_mse.mean.into(),
            agg.c_bar_over_dim.into(),
            agg.var_c_bar_over_dim.into(),
            agg.r_bar.into(),
            hash.as_str().into(),
        ]));
        rows.push(FamilyRow {
            family: family.name().into(),
            config_hash: hash.clone(),
            mse: bench.mse.mean,
            c_bar: agg.c_bar_over_dim,
            var_c_bar: agg.var_c_bar_over_dim,
            r_bar: agg.r_bar,
        });
    }
    let mut corr_table = Table::new(["quantity", "rho", "null_below", "permutations", "config_hash"]);
    for c in family_correlations(&rows, cfg.permutations, cfg.seed)? {
        corr_table.push(row([
            c.quantity.into(),
            c.rho.into(),
            c.null_below.into(),
            c.permutations.into(),
            hash.as_str().into(),
        ]));
    }
    notes.push(format!("dataset: {} samples, test band {:?}", ds.len(), ds.split.test));
    Ok(RunOutput {
        experiment: ExperimentId::E6,
        tables: vec![
            ("e6_families".into(), fam_table),
            ("e6_correlations".into(), corr_table),
            ("e6_circuits".into(), circ_table),
        ],
        notes,
    })
}

/// Dataset used by E6, for export next to the results.
pub fn e6_dataset_text(cfg: &ExperimentConfig) -> Result<String, RunError> {
    let grid = linspace(cfg.dataset_hz_min, cfg.dataset_hz_max, cfg.dataset_samples);
    Ok(build_dataset(&ising(cfg, cfg.n, 0.0), &grid, cfg.test_fraction)?.to_text())
}
