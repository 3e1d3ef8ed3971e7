//! Writing a run to disk: one CSV per table plus `<exp>_metadata.txt`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::ExperimentConfig;
use crate::experiments::{RunError, RunOutput};

/// Metadata block. Everything except the final `timestamp_unix` line is a
/// function of the configuration and the results.
pub fn metadata(cfg: &ExperimentConfig, out: &RunOutput, threads: usize) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: &str| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    };
    kv("experiment", out.experiment.name());
    kv("config_hash", &cfg.hash());
    kv("config_hash_short", &cfg.short_hash());
    kv("version", env!("CARGO_PKG_VERSION"));
    kv("threads", &threads.to_string());
    kv("qubit_order", "qubit 0 is the most significant bit of the basis index");
    kv("ising", "H = sum_i (hx X_i + hz Z_i) - J sum_i Z_i Z_{i+1}, open chain, even reflection sector");
    kv("effective_hamiltonian", "H_eff = (hbar/T) V diag(theta) V^dagger, theta in (-pi, pi], hbar = 1");
    kv("evolution_sign", "U = exp(+i T H / hbar)");
    kv("standard_map_kick", cfg.kick_convention.name());
    kv("standard_map_bloch", &format!("bx = {:?}, bp = {:?}", cfg.bloch_x, cfg.bloch_p));
    kv("circuit_connectivity", if cfg.mg_nearest_neighbour { "matchgates nearest neighbour, other gates all-to-all" } else { "all-to-all" });
    kv("reservoir_period", "T = 1");
    kv("tables", &out.tables.iter().map(|(n, _)| format!("{n}.csv")).collect::<Vec<_>>().join(","));
    for note in &out.notes {
        kv("note", note);
    }
    s.push_str("[config]\n");
    s.push_str(&cfg.canonical());
    s.push_str("[end]\n");
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    s.push_str(&format!("timestamp_unix = {now}\n"));
    s
}

fn io(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// Writes all tables and the metadata file; returns the written paths.
pub fn write_run(cfg: &ExperimentConfig, out: &RunOutput, dir: &Path, threads: usize) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    for (name, table) in &out.tables {
        let p = dir.join(format!("{name}.csv"));
        std::fs::write(&p, table.to_csv()).map_err(|e| io(&p, e))?;
        written.push(p);
    }
    let p = dir.join(format!("{}_metadata.txt", out.experiment.name().to_lowercase()));
    std::fs::write(&p, metadata(cfg, out, threads)).map_err(|e| io(&p, e))?;
    written.push(p);
    Ok(written)
}
