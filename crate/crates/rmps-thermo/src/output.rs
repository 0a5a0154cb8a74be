//! Artifact emission: the run directory, CSV tables, and JSON sidecars.
//!
//! Every data file embeds the config hash, master seed, and artifact version.
//! Wall-clock information lives only in `meta.json` so that `data.csv` and
//! `summary.json` are byte-identical across reruns of the same (config,
//! seed).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliResult;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The output directory for a run: `<out>/<experiment>-<confighash>/`.
pub fn run_dir(out_root: &Path, config: &ExperimentConfig) -> PathBuf {
    out_root.join(format!(
        "{}-{:016x}",
        config.experiment.as_str(),
        config.hash()
    ))
}

/// A CSV table under construction.
pub struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, config: &ExperimentConfig) -> String {
        let mut s = String::new();
        s.push_str(&format!("# config_hash={:016x}\n", config.hash()));
        s.push_str(&format!("# master_seed={}\n", config.master_seed));
        s.push_str(&format!("# artifact_version={ARTIFACT_VERSION}\n"));
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest-roundtrip float formatting (same as Rust's Debug for f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Serialize)]
struct SummaryEnvelope<'a, T: Serialize> {
    config_hash: String,
    master_seed: u64,
    artifact_version: &'static str,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    payload: &'a T,
}

/// Write `data.csv`, `summary.json` (deterministic) and `meta.json`
/// (timestamps, wall time, worker count).
pub fn write_run<T: Serialize>(
    dir: &Path,
    config: &ExperimentConfig,
    table: &CsvTable,
    summary: &T,
    wall_seconds: f64,
    workers: usize,
) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("data.csv"), table.render(config))?;
    let envelope = SummaryEnvelope {
        config_hash: format!("{:016x}", config.hash()),
        master_seed: config.master_seed,
        artifact_version: ARTIFACT_VERSION,
        config,
        payload: summary,
    };
    let mut summary_json = serde_json::to_string_pretty(&envelope).map_err(crate::numerical_err)?;
    summary_json.push('\n');
    fs::write(dir.join("summary.json"), summary_json)?;

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "config_hash": format!("{:016x}", config.hash()),
        "master_seed": config.master_seed,
        "artifact_version": ARTIFACT_VERSION,
        "wall_seconds": wall_seconds,
        "workers": workers,
        "unix_timestamp": timestamp,
    });
    let mut meta_json = serde_json::to_string_pretty(&meta).map_err(crate::numerical_err)?;
    meta_json.push('\n');
    fs::write(dir.join("meta.json"), meta_json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering_embeds_provenance() {
        let cfg = ExperimentConfig::parse(
            r#"{"experiment":"trace","model":"ising","num_sites":4,"lambda":1.0,
                "chi":2,"num_samples":3,"master_seed":9}"#,
        )
        .unwrap();
        let mut t = CsvTable::new(vec!["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(0.5)]);
        let text = t.render(&cfg);
        assert!(text.contains("# master_seed=9"));
        assert!(text.contains("# artifact_version="));
        assert!(text.ends_with("1,0.5\n"));
    }

    #[test]
    fn float_formatting_roundtrips() {
        for v in [0.1, 1e-12, 32256.0, -0.15, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
