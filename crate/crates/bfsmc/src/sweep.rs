//! Parameter sweeps over one scenario key.
//!
//! Every cell is an independent scenario, so cells run in parallel on a
//! rayon pool; results come back in input order whatever the schedule.

use std::path::{Path, PathBuf};

use bfsmc_core::analysis::{analyze, AnalysisReport};
use bfsmc_core::run;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::ScenarioDoc;
use crate::trace::write_csv_file;

/// Environment variable capping the number of sweep threads.
pub const THREADS_VAR: &str = "BFSMC_THREADS";

#[derive(Debug)]
pub struct SweepCell {
    pub value: toml::Value,
    pub csv: PathBuf,
    pub outcome: std::result::Result<AnalysisReport, String>,
}

/// Reads [`THREADS_VAR`]; `None` when unset, meaning one thread per core.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!("{THREADS_VAR} must be a positive integer, got {s:?}"))),
        },
    }
}

fn cell_path(out_dir: &Path, name: &str, key: &str, index: usize) -> PathBuf {
    out_dir.join(format!("{name}_{}_{index:03}.csv", key.replace('.', "-")))
}

/// Runs `doc` once per value of `key` and writes one CSV per cell to
/// `out_dir`. A cell that fails to build or write is reported in its
/// outcome; only a malformed key fails the whole sweep.
pub fn sweep(
    doc: &ScenarioDoc,
    key: &str,
    values: &[toml::Value],
    out_dir: &Path,
    decimation: Option<usize>,
    threads: Option<usize>,
) -> Result<Vec<SweepCell>> {
    let mut probe = doc.clone();
    if let Some(v) = values.first() {
        probe.set(key, v.clone())?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;

    let one = |index: usize, value: &toml::Value| -> SweepCell {
        let csv = cell_path(out_dir, doc.name(), key, index);
        let outcome = (|| {
            let mut d = doc.clone();
            d.set(key, value.clone())?;
            let loaded = d.build()?;
            let traj = run(&loaded.scenario);
            write_csv_file(&traj, &csv, decimation.unwrap_or(loaded.decimation))?;
            Ok::<_, Error>(analyze(&traj))
        })()
        .map_err(|e| e.to_string());
        SweepCell { value: value.clone(), csv, outcome }
    };
    Ok(pool.install(|| values.par_iter().enumerate().map(|(i, v)| one(i, v)).collect()))
}

/// One line per cell: value, crossing time, containment, final `V`, the
/// worst late/early gain ratio and the CSV path.
pub fn summary_table(key: &str, cells: &[SweepCell]) -> String {
    let mut out = format!(
        "{:<4} {:<14} {:<12} {:<10} {:<12} {:<11} {}\n",
        "cell", key, "t_bar", "contained", "v_final", "gain_ratio", "csv"
    );
    for (i, c) in cells.iter().enumerate() {
        let value = c.value.to_string();
        match &c.outcome {
            Ok(rep) => {
                let ratio = rep.gains.iter().map(|g| g.ratio()).fold(f64::NAN, f64::max);
                let t_bar = rep.t_bar.map_or_else(|| "none".into(), |t| format!("{t:.6}"));
                out += &format!(
                    "{i:<4} {value:<14} {t_bar:<12} {:<10} {:<12.4e} {ratio:<11.4} {}\n",
                    rep.contained(),
                    rep.v_final,
                    c.csv.display()
                );
            }
            Err(e) => out += &format!("{i:<4} {value:<14} error: {e}\n"),
        }
    }
    out
}
