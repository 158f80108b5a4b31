use std::path::PathBuf;
use std::process::ExitCode;

use bfsmc::{parse_value, read_csv_file, summary_table, sweep, threads_from_env, write_csv_file, Error, ScenarioDoc};
use bfsmc_core::analysis::{analyze, AnalysisReport};
use bfsmc_core::{run, tune_gains, ControllerKind, FeedbackPair, HomogeneityParams};
use clap::{Args, Parser, Subcommand};

/// Exit status when `--strict` checks fail on an otherwise successful run.
const STRICT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "bfsmc", version, about = "Adaptive barrier-function sliding-mode simulations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario, write its CSV trace and print the analysis.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        scenario: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Check a feedback pair: homogeneity, Euler relation, gradient, decrease.
    ValidatePair(PairArgs),
    /// Run a scenario once per value of one key, one CSV per cell.
    Sweep {
        scenario: String,
        /// Key to vary, as section.key (for example controller.slope).
        #[arg(long)]
        key: String,
        /// Comma-separated values, each read as a TOML literal.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Re-analyze a CSV trace written by `run` or `sweep`.
    Report {
        csv: PathBuf,
        /// Exit nonzero unless the trace passes containment.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args)]
struct RunOpts {
    /// Exit nonzero unless containment holds (or, for controllers without a
    /// bound, the run reached the horizon).
    #[arg(long)]
    strict: bool,
    /// CSV path for `run`, output directory for `sweep`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep every n-th row.
    #[arg(long)]
    decimate: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step.
    #[arg(long = "h")]
    h: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    r: usize,
    #[arg(long)]
    p: f64,
    /// A number or a fraction such as -1/6.
    #[arg(long, allow_negative_numbers = true)]
    kappa: String,
    /// Tune the gains instead of giving them.
    #[arg(long, conflicts_with = "gains", required_unless_present = "gains")]
    tune: bool,
    #[arg(long, value_delimiter = ',')]
    gains: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit nonzero unless every check passes.
    #[arg(long)]
    strict: bool,
}

impl RunOpts {
    fn apply(&self, doc: &mut ScenarioDoc) -> Result<(), Error> {
        if let Some(seed) = self.seed {
            let seed = i64::try_from(seed).map_err(|_| Error::Usage(format!("seed {seed} is too large")))?;
            doc.set("sim.seed", toml::Value::Integer(seed))?;
        }
        if let Some(h) = self.h {
            doc.set("sim.h", toml::Value::Float(h))?;
        }
        if let Some(t) = self.horizon {
            doc.set("sim.horizon", toml::Value::Float(t))?;
        }
        Ok(())
    }
}

fn strict_ok(rep: &AnalysisReport) -> bool {
    match rep.controller {
        ControllerKind::Case1 | ControllerKind::Host => rep.contained(),
        _ => rep.escapes == 0 && rep.blowups == 0,
    }
}

fn run_cmd(scenario: &str, opts: &RunOpts) -> Result<bool, Error> {
    let mut doc = ScenarioDoc::open(scenario)?;
    opts.apply(&mut doc)?;
    let loaded = doc.build()?;
    for note in &loaded.notes {
        eprintln!("note: {note}");
    }
    let traj = run(&loaded.scenario);
    let path = opts
        .out
        .clone()
        .or(loaded.csv.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", loaded.name)));
    write_csv_file(&traj, &path, opts.decimate.unwrap_or(loaded.decimation))?;
    eprintln!("wrote {}", path.display());
    let rep = analyze(&traj);
    print!("{}", rep.to_text());
    Ok(!opts.strict || strict_ok(&rep))
}

fn validate_cmd(a: &PairArgs) -> Result<bool, Error> {
    let domain = |source| Error::Domain { origin: "validate-pair".into(), section: "pair", source };
    let kappa = match a.kappa.split_once('/') {
        Some((n, d)) => n.trim().parse::<f64>().ok().zip(d.trim().parse::<f64>().ok()).map(|(n, d)| n / d),
        None => a.kappa.trim().parse().ok(),
    }
    .ok_or_else(|| Error::Usage(format!("kappa {:?} is not a number", a.kappa)))?;
    let params = HomogeneityParams::new(a.r, a.p, kappa).map_err(domain)?;
    let gains = match &a.gains {
        Some(g) => g.clone(),
        None => tune_gains(&params, &vec![1.0; a.r], bfsmc::scenario::TUNE_GROWTH).map_err(domain)?,
    };
    let pair = FeedbackPair::hong(params, &gains).and_then(|p| p.with_scale(a.scale)).map_err(domain)?;
    let rep = pair.validate(a.samples, a.seed);
    print!("{}", rep.to_text());
    Ok(!a.strict || rep.passed())
}

fn sweep_cmd(scenario: &str, key: &str, values: &[String], opts: &RunOpts) -> Result<bool, Error> {
    let mut doc = ScenarioDoc::open(scenario)?;
    opts.apply(&mut doc)?;
    let values: Vec<toml::Value> = values.iter().map(|v| parse_value(v.trim())).collect();
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from(format!("sweep_{}", doc.name())));
    let cells = sweep(&doc, key, &values, &out, opts.decimate, threads_from_env()?)?;
    print!("{}", summary_table(key, &cells));
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    if failed > 0 {
        return Err(Error::Usage(format!("{failed} of {} sweep cells failed", cells.len())));
    }
    Ok(!opts.strict || cells.iter().all(|c| c.outcome.as_ref().is_ok_and(strict_ok)))
}

fn report_cmd(csv: &std::path::Path, strict: bool) -> Result<bool, Error> {
    let rep = analyze(&read_csv_file(csv)?);
    print!("{}", rep.to_text());
    Ok(!strict || strict_ok(&rep))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Run { scenario, opts } => run_cmd(scenario, opts),
        Cmd::ValidatePair(a) => validate_cmd(a),
        Cmd::Sweep { scenario, key, values, opts } => sweep_cmd(scenario, key, values, opts),
        Cmd::Report { csv, strict } => report_cmd(csv, *strict),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("strict check failed");
            ExitCode::from(STRICT_FAILURE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
