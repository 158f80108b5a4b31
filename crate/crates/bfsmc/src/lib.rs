//! Scenario files, CSV traces, parameter sweeps and the `bfsmc` command-line
//! tool around [`bfsmc_core`].

pub mod error;
pub mod scenario;
pub mod sweep;
pub mod trace;

pub use error::{Error, Result};
pub use scenario::{parse_value, Loaded, ScenarioDoc, BUNDLED};
pub use sweep::{summary_table, sweep, threads_from_env, SweepCell};
pub use trace::{read_csv, read_csv_file, write_csv, write_csv_file};
