//! Result tables and their on-disk form.
//!
//! The CSV body is a pure function of the experiment outcome, so repeated
//! runs with the same seed produce byte-identical files; anything
//! time-dependent (wall clock, elapsed time) lives in a sidecar `.meta`
//! file next to the CSV.

use std::io::Write;
use std::path::{Path, PathBuf};

use cachelab::analysis::McCurve;

/// Exact header of every results CSV.
pub const CSV_HEADER: &str = "t,mean_regret,regret_ci_low,regret_ci_high,mean_hit_rate,mean_bank_size";

/// One checkpoint row of an experiment.
#[derive(Clone, Copy, Debug)]
pub struct Row {
    pub t: u64,
    pub mean_regret: f64,
    pub regret_ci_low: f64,
    pub regret_ci_high: f64,
    pub mean_hit_rate: f64,
    pub mean_bank_size: f64,
}

/// Aggregated experiment output: checkpoint rows plus the metadata that
/// reproduces the run (config echo, build id, seed, wall time).
#[derive(Clone, Debug)]
pub struct ResultsTable {
    rows: Vec<Row>,
    metadata: Vec<(String, String)>,
}

impl ResultsTable {
    /// Builds a table from an aggregated curve; `metadata` is emitted in the
    /// given order after the build-id line.
    pub fn from_curve(curve: &McCurve, metadata: Vec<(String, String)>) -> Self {
        assert!(
            curve.checkpoints.windows(2).all(|w| w[0] < w[1]),
            "checkpoints must be strictly increasing"
        );
        let rows = (0..curve.checkpoints.len())
            .map(|i| Row {
                t: curve.checkpoints[i],
                mean_regret: curve.mean_regret[i],
                regret_ci_low: curve.regret_ci_low[i],
                regret_ci_high: curve.regret_ci_high[i],
                mean_hit_rate: curve.mean_hit_rate[i],
                mean_bank_size: curve.mean_counters[i],
            })
            .collect();
        Self { rows, metadata }
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// The CSV body: header plus one line per checkpoint, UTF-8, LF line
    /// endings, six significant digits.
    pub fn csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.t,
                sig6(row.mean_regret),
                sig6(row.regret_ci_low),
                sig6(row.regret_ci_high),
                sig6(row.mean_hit_rate),
                sig6(row.mean_bank_size),
            ));
        }
        out
    }

    /// The sidecar metadata block, `key=value` per line.
    pub fn meta(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str(key);
            out.push('=');
            out.push_str(value);
            out.push('\n');
        }
        out
    }

    /// Writes `<path>` (CSV) and `<path>.meta`.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut csv = std::fs::File::create(path)?;
        csv.write_all(self.csv().as_bytes())?;
        let mut meta = std::fs::File::create(meta_path(path))?;
        meta.write_all(self.meta().as_bytes())?;
        Ok(())
    }
}

/// The sidecar path for a CSV output path.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

/// Six significant digits in scientific notation; exact zero stays "0".
fn sig6(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.5e}")
    }
}
