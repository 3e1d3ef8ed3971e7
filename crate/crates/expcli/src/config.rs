//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, lists are comma-separated.
//! Unknown or repeated keys are rejected. Every experiment starts from its own
//! defaults (see [`ExperimentConfig::defaults`]) and the file overrides them.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use kryres::circuits::Family;
use kryres::spin::KickConvention;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' given twice")]
    Duplicate { line: usize, key: String },
    #[error("key '{key}': {msg}")]
    Value { key: String, msg: String },
    #[error("config is for {found} but {requested} was requested")]
    ExperimentMismatch { requested: ExperimentId, found: ExperimentId },
    #[error("cannot read config: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [Self::E1, Self::E2, Self::E3, Self::E4, Self::E5, Self::E6];

    pub fn name(self) -> &'static str {
        match self {
            Self::E1 => "E1",
            Self::E2 => "E2",
            Self::E3 => "E3",
            Self::E4 => "E4",
            Self::E5 => "E5",
            Self::E6 => "E6",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown experiment '{s}' (expected E1..E6)"))
    }
}

/// Evolution time used to build H_eff, or the Hamiltonian itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeScale {
    Hamiltonian,
    /// t_S / divisor.
    Scrambling(u32),
    Heisenberg,
}

impl fmt::Display for TimeScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hamiltonian => f.write_str("H"),
            Self::Scrambling(1) => f.write_str("tS"),
            Self::Scrambling(d) => write!(f, "tS/{d}"),
            Self::Heisenberg => f.write_str("tH"),
        }
    }
}

impl FromStr for TimeScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" => Ok(Self::Hamiltonian),
            "tS" => Ok(Self::Scrambling(1)),
            "tH" => Ok(Self::Heisenberg),
            _ => match s.strip_prefix("tS/").map(str::parse::<u32>) {
                Some(Ok(d)) if d > 0 => Ok(Self::Scrambling(d)),
                _ => Err(format!("unknown time scale '{s}' (H, tS, tS/<m>, tH)")),
            },
        }
    }
}

/// Fully resolved settings; keys irrelevant to an experiment are ignored by it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
    pub full_scale: bool,

    pub n: usize,
    pub n_grid: Vec<usize>,
    pub hx: f64,
    pub j: f64,
    pub hz: f64,
    pub hz_grid: Vec<f64>,
    pub bank_hz: f64,
    pub bank_window: f64,
    pub bank_size: usize,
    pub time_scales: Vec<TimeScale>,
    pub ls_fractions: Vec<f64>,
    pub n_times: usize,
    pub t_max_factor: f64,

    pub map_sizes: Vec<usize>,
    pub k_grid: Vec<f64>,
    pub bank_k: f64,
    pub bloch_x: f64,
    pub bloch_p: f64,
    pub kick_convention: KickConvention,

    pub families: Vec<Family>,
    /// Ensemble size; `None` picks the per-width desk default.
    pub circuits: Option<usize>,
    pub depth: usize,
    pub mg_nearest_neighbour: bool,

    pub gamma_grid: Vec<f64>,
    pub dataset_hz_min: f64,
    pub dataset_hz_max: f64,
    pub dataset_samples: usize,
    pub test_fraction: f64,
    pub permutations: usize,
}

const KEYS: &[&str] = &[
    "experiment",
    "seed",
    "threads",
    "out",
    "full_scale",
    "n",
    "n_grid",
    "hx",
    "j",
    "hz",
    "hz_grid",
    "bank_hz",
    "bank_window",
    "bank_size",
    "time_scales",
    "ls_fractions",
    "n_times",
    "t_max_factor",
    "map_sizes",
    "k_grid",
    "bank_k",
    "bloch_x",
    "bloch_p",
    "kick_convention",
    "families",
    "circuits",
    "depth",
    "mg_nearest_neighbour",
    "gamma_grid",
    "dataset_hz_min",
    "dataset_hz_max",
    "dataset_samples",
    "test_fraction",
    "permutations",
];

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentId) -> Self {
        use ExperimentId::*;
        let hz_grid = match experiment {
            E3 => vec![0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
            _ => vec![0.05, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
        };
        Self {
            experiment,
            seed: 1,
            threads: 1,
            out: PathBuf::from("out"),
            full_scale: false,
            n: if matches!(experiment, E5 | E6) { 6 } else { 10 },
            n_grid: match experiment {
                E5 => vec![6],
                _ => vec![6, 8, 10],
            },
            hx: 1.0,
            j: 1.0,
            hz: 1.0,
            hz_grid,
            bank_hz: 6.0,
            bank_window: 0.2,
            bank_size: 10,
            time_scales: match experiment {
                E3 => vec![
                    TimeScale::Hamiltonian,
                    TimeScale::Scrambling(25),
                    TimeScale::Scrambling(1),
                    TimeScale::Heisenberg,
                ],
                _ => vec![TimeScale::Scrambling(25), TimeScale::Scrambling(1), TimeScale::Heisenberg],
            },
            ls_fractions: vec![1.0, 0.5, 0.25, 0.125],
            n_times: 2000,
            t_max_factor: 5.0,
            map_sizes: vec![200, 400],
            k_grid: vec![0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
            bank_k: 0.01,
            bloch_x: 0.0,
            bloch_p: 0.25,
            kick_convention: KickConvention::Stochasticity,
            families: Family::RESERVOIRS.to_vec(),
            circuits: None,
            depth: kryres::circuits::DEFAULT_DEPTH,
            mg_nearest_neighbour: false,
            gamma_grid: kryres::qrc::DEFAULT_GAMMA_GRID.to_vec(),
            dataset_hz_min: 0.0,
            dataset_hz_max: 2.0,
            dataset_samples: 50,
            test_fraction: kryres::qrc::DEFAULT_TEST_FRACTION,
            permutations: 100,
        }
    }

    /// Parses `text` on top of the defaults for `experiment`.
    pub fn parse(experiment: ExperimentId, text: &str) -> Result<Self, ConfigError> {
        let pairs = parse_pairs(text)?;
        if let Some((_, v)) = pairs.get("experiment") {
            let found: ExperimentId = v.parse().map_err(|msg| value_err("experiment", msg))?;
            if found != experiment {
                return Err(ConfigError::ExperimentMismatch {
                    requested: experiment,
                    found,
                });
            }
        }
        let mut cfg = Self::defaults(experiment);
        for (key, (_, v)) in &pairs {
            cfg.set(key, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => {}
            "seed" => self.seed = scalar(key, v)?,
            "threads" => self.threads = scalar(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "full_scale" => self.full_scale = boolean(key, v)?,
            "n" => self.n = scalar(key, v)?,
            "n_grid" => self.n_grid = list(key, v)?,
            "hx" => self.hx = scalar(key, v)?,
            "j" => self.j = scalar(key, v)?,
            "hz" => self.hz = scalar(key, v)?,
            "hz_grid" => self.hz_grid = list(key, v)?,
            "bank_hz" => self.bank_hz = scalar(key, v)?,
            "bank_window" => self.bank_window = scalar(key, v)?,
            "bank_size" => self.bank_size = scalar(key, v)?,
            "time_scales" => self.time_scales = list(key, v)?,
            "ls_fractions" => self.ls_fractions = list(key, v)?,
            "n_times" => self.n_times = scalar(key, v)?,
            "t_max_factor" => self.t_max_factor = scalar(key, v)?,
            "map_sizes" => self.map_sizes = list(key, v)?,
            "k_grid" => self.k_grid = list(key, v)?,
            "bank_k" => self.bank_k = scalar(key, v)?,
            "bloch_x" => self.bloch_x = scalar(key, v)?,
            "bloch_p" => self.bloch_p = scalar(key, v)?,
            "kick_convention" => {
                self.kick_convention = match v {
                    "stochasticity" => KickConvention::Stochasticity,
                    "unit-torus" | "unit_torus" => KickConvention::UnitTorus,
                    _ => return Err(value_err(key, "expected 'stochasticity' or 'unit-torus'")),
                }
            }
            "families" => self.families = list(key, v)?,
            "circuits" => self.circuits = Some(scalar(key, v)?),
            "depth" => self.depth = scalar(key, v)?,
            "mg_nearest_neighbour" => self.mg_nearest_neighbour = boolean(key, v)?,
            "gamma_grid" => self.gamma_grid = list(key, v)?,
            "dataset_hz_min" => self.dataset_hz_min = scalar(key, v)?,
            "dataset_hz_max" => self.dataset_hz_max = scalar(key, v)?,
            "dataset_samples" => self.dataset_samples = scalar(key, v)?,
            "test_fraction" => self.test_fraction = scalar(key, v)?,
            "permutations" => self.permutations = scalar(key, v)?,
            _ => unreachable!("keys are checked while parsing"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(value_err(key, msg)) };
        check(self.threads >= 1, "threads", "must be at least 1")?;
        check((2..=14).contains(&self.n), "n", "must lie in 2..=14")?;
        check(!self.n_grid.is_empty(), "n_grid", "must not be empty")?;
        check(self.n_grid.iter().all(|n| (2..=14).contains(n)), "n_grid", "entries must lie in 2..=14")?;
        check(!self.hz_grid.is_empty(), "hz_grid", "must not be empty")?;
        check(self.bank_window > 0.0 && self.bank_window <= 1.0, "bank_window", "must lie in (0, 1]")?;
        check(self.bank_size >= 1, "bank_size", "must be at least 1")?;
        check(!self.time_scales.is_empty(), "time_scales", "must not be empty")?;
        check(!self.ls_fractions.is_empty(), "ls_fractions", "must not be empty")?;
        check(
            self.ls_fractions.iter().all(|f| *f > 0.0 && *f <= 1.0),
            "ls_fractions",
            "entries must lie in (0, 1]",
        )?;
        check(self.n_times >= 4, "n_times", "must be at least 4")?;
        check(self.t_max_factor > 0.0, "t_max_factor", "must be positive")?;
        check(!self.map_sizes.is_empty(), "map_sizes", "must not be empty")?;
        check(self.map_sizes.iter().all(|&m| m >= 3), "map_sizes", "entries must be at least 3")?;
        check(!self.k_grid.is_empty(), "k_grid", "must not be empty")?;
        check(!self.families.is_empty(), "families", "must not be empty")?;
        check(self.circuits.is_none_or(|c| c >= 1), "circuits", "must be at least 1")?;
        check(self.depth >= 1, "depth", "must be at least 1")?;
        check(!self.gamma_grid.is_empty(), "gamma_grid", "must not be empty")?;
        check(self.gamma_grid.iter().all(|g| *g >= 0.0), "gamma_grid", "entries must be non-negative")?;
        check(self.dataset_hz_max > self.dataset_hz_min, "dataset_hz_max", "must exceed dataset_hz_min")?;
        check(self.dataset_samples >= 10, "dataset_samples", "must be at least 10")?;
        check(
            self.test_fraction > 0.0 && self.test_fraction < 1.0,
            "test_fraction",
            "must lie in (0, 1)",
        )?;
        check(self.permutations >= 1, "permutations", "must be at least 1")?;
        Ok(())
    }

    /// Circuits per family at width `n`: the configured size, 100 at full
    /// scale, otherwise 100 / 25 / 10 for n ≤ 6 / n ≤ 8 / larger.
    pub fn ensemble_size(&self, n: usize) -> usize {
        match (self.circuits, self.full_scale) {
            (Some(c), _) => c,
            (None, true) => 100,
            (None, false) if n <= 6 => 100,
            (None, false) if n <= 8 => 25,
            _ => 10,
        }
    }

    /// Every setting that can change results, one `key = value` per line.
    /// Thread count and output directory are left out.
    pub fn canonical(&self) -> String {
        fn join<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", self.experiment.to_string());
        kv("seed", self.seed.to_string());
        kv("full_scale", self.full_scale.to_string());
        kv("n", self.n.to_string());
        kv("n_grid", join(&self.n_grid));
        kv("hx", format!("{:?}", self.hx));
        kv("j", format!("{:?}", self.j));
        kv("hz", format!("{:?}", self.hz));
        kv("hz_grid", join(&self.hz_grid.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>()));
        kv("bank_hz", format!("{:?}", self.bank_hz));
        kv("bank_window", format!("{:?}", self.bank_window));
        kv("bank_size", self.bank_size.to_string());
        kv("time_scales", join(&self.time_scales));
        kv("ls_fractions", join(&self.ls_fractions.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>()));
        kv("n_times", self.n_times.to_string());
        kv("t_max_factor", format!("{:?}", self.t_max_factor));
        kv("map_sizes", join(&self.map_sizes));
        kv("k_grid", join(&self.k_grid.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>()));
        kv("bank_k", format!("{:?}", self.bank_k));
        kv("bloch_x", format!("{:?}", self.bloch_x));
        kv("bloch_p", format!("{:?}", self.bloch_p));
        kv("kick_convention", self.kick_convention.name().to_string());
        kv("families", join(&self.families));
        kv("circuits", self.circuits.map_or("default".into(), |c| c.to_string()));
        kv("depth", self.depth.to_string());
        kv("mg_nearest_neighbour", self.mg_nearest_neighbour.to_string());
        kv("gamma_grid", join(&self.gamma_grid.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>()));
        kv("dataset_hz_min", format!("{:?}", self.dataset_hz_min));
        kv("dataset_hz_max", format!("{:?}", self.dataset_hz_max));
        kv("dataset_samples", self.dataset_samples.to_string());
        kv("test_fraction", format!("{:?}", self.test_fraction));
        kv("permutations", self.permutations.to_string());
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// First 16 hex digits of the hash, as written into CSV rows.
    pub fn short_hash(&self) -> String {
        self.hash()[..16].to_string()
    }
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| value_err(key, format!("cannot parse '{v}'")))
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(value_err(key, format!("expected true/false, got '{v}'"))),
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(value_err(key, "empty list"));
    }
    items.into_iter().map(|s| scalar(key, s)).collect()
}

/// Splits the file into `key -> (line, value)`, checking key names.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            msg: format!("expected 'key = value', got '{content}'"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey { line, key: k.to_string() });
        }
        if v.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("missing value for '{k}'"),
            });
        }
        if out.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(ConfigError::Duplicate { line, key: k.to_string() });
        }
    }
    Ok(out)
}
