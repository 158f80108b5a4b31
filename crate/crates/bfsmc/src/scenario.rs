//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[pair]`, `[controller]`,
//! `[disturbance]`, `[sim]` and an optional `[output]`:
//!
//! ```toml
//! [pair]
//! r = 3
//! p = 1
//! kappa = "-1/6"          # a number or a fraction
//! gains = [0.25, 1, 2]    # or "tune"
//! scale = 3               # optional level scale, V -> scale V
//!
//! [controller]
//! kind = "case1"          # case1 | host | super_twisting | pure_chain | open_loop
//! mu0 = 5.0
//! lambda = 0.2            # mu(t) = mu0 exp(-lambda t); 0 or absent for constant mu
//! l0 = 1.0                # l(t) = (l0 + slope t) exp(exp_rate t)
//! slope = 0.0
//! exp_rate = 1.8
//!
//! [disturbance]
//! id = "affine_phi_sin_gamma"   # catalog id, remaining keys are its parameters
//! # table = "samples.csv"       # or columns t,gamma,phi[,phi_tilde]
//!
//! [sim]
//! z0 = [1, 1, -1]
//! h = 1e-4
//! horizon = 30
//! seed = 0
//!
//! [output]
//! csv = "case1.csv"
//! decimation = 1
//! ```
//!
//! Unknown keys are errors everywhere, including keys that exist but do not
//! apply to the chosen controller kind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bfsmc_core::case1::validate_schedules;
use bfsmc_core::plant::DisturbanceClass;
use bfsmc_core::{
    builtin_disturbance, tune_gains, Controller, ControllerKind, Disturbance, FeedbackPair, GrowthGain,
    HomogeneityParams, MuSchedule, Scenario,
};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Scenarios shipped with the binary, addressable by name.
pub const BUNDLED: [(&str, &str); 3] = [
    ("case1_example", include_str!("../scenarios/case1_example.toml")),
    ("case2_example", include_str!("../scenarios/case2_example.toml")),
    ("case1_constant_mu", include_str!("../scenarios/case1_constant_mu.toml")),
];

/// Samples used to estimate `c_r`, `d_r`, `c_u` when a scenario is built.
pub const ESTIMATE_SAMPLES: usize = 2000;

/// Growth factor of the gain tuner behind `gains = "tune"`.
pub const TUNE_GROWTH: f64 = 2.0;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    pair: PairSection,
    controller: ControllerSection,
    disturbance: DisturbanceSection,
    sim: SimSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairSection {
    r: usize,
    p: f64,
    kappa: Real,
    gains: GainsSpec,
    #[serde(default = "one")]
    scale: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Real {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GainsSpec {
    List(Vec<f64>),
    Directive(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerSection {
    kind: String,
    mu0: Option<f64>,
    lambda: Option<f64>,
    epsilon: Option<f64>,
    l0: Option<f64>,
    slope: Option<f64>,
    exp_rate: Option<f64>,
    k_p: Option<f64>,
    k_i: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct DisturbanceSection {
    id: Option<String>,
    table: Option<String>,
    #[serde(flatten)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    z0: Vec<f64>,
    #[serde(default = "default_h")]
    h: f64,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    csv: Option<String>,
    decimation: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn default_h() -> f64 {
    1e-4
}

fn default_horizon() -> f64 {
    30.0
}

/// A parsed scenario document that can still be edited key by key before it
/// is turned into a [`Scenario`].
#[derive(Debug, Clone)]
pub struct ScenarioDoc {
    name: String,
    origin: String,
    base_dir: Option<PathBuf>,
    table: toml::Table,
}

/// A validated scenario together with its output settings.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: String,
    pub scenario: Scenario,
    pub csv: Option<PathBuf>,
    pub decimation: usize,
    /// Non-fatal findings, such as schedules outside the admissible range.
    pub notes: Vec<String>,
}

impl ScenarioDoc {
    /// Parses a document. Schema errors are reported here, with line and
    /// column, rather than at [`build`](Self::build).
    pub fn parse(name: &str, text: &str, base_dir: Option<PathBuf>) -> Result<Self> {
        let origin = match &base_dir {
            Some(dir) => dir.join(format!("{name}.toml")).display().to_string(),
            None => format!("<{name}>"),
        };
        toml::from_str::<ScenarioFile>(text).map_err(|e| Error::Parse { origin: origin.clone(), message: e.to_string() })?;
        let table = toml::from_str::<toml::Table>(text).map_err(|e| Error::Parse { origin: origin.clone(), message: e.to_string() })?;
        Ok(Self { name: name.into(), origin, base_dir, table })
    }

    pub fn bundled(name: &str) -> Option<Self> {
        let name = name.strip_suffix(".toml").unwrap_or(name);
        let (_, text) = BUNDLED.iter().find(|(n, _)| *n == name)?;
        Some(Self::parse(name, text, None).expect("bundled scenarios parse"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
        let mut doc = Self::parse(&name, &text, path.parent().map(Path::to_path_buf))?;
        doc.origin = path.display().to_string();
        Ok(doc)
    }

    /// A file path if one exists, otherwise a bundled scenario name.
    pub fn open(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.exists() {
            return Self::read(path);
        }
        Self::bundled(spec).ok_or_else(|| {
            Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or bundled scenario"))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn get(&self, key: &str) -> Option<&toml::Value> {
        let (section, field) = key.split_once('.')?;
        self.table.get(section)?.as_table()?.get(field)
    }

    /// Sets `section.key`. The result is only validated by [`build`](Self::build).
    pub fn set(&mut self, key: &str, value: toml::Value) -> Result<()> {
        let (section, field) = key
            .split_once('.')
            .filter(|(s, f)| !s.is_empty() && !f.is_empty() && !f.contains('.'))
            .ok_or_else(|| Error::Usage(format!("override key must look like section.key, got {key:?}")))?;
        let entry = self.table.entry(section).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let tbl = entry
            .as_table_mut()
            .ok_or_else(|| Error::Usage(format!("{section} is not a section")))?;
        tbl.insert(field.into(), value);
        Ok(())
    }

    pub fn remove(&mut self, key: &str) -> Option<toml::Value> {
        let (section, field) = key.split_once('.')?;
        self.table.get_mut(section)?.as_table_mut()?.remove(field)
    }

    pub fn build(&self) -> Result<Loaded> {
        let file = ScenarioFile::deserialize(toml::Value::Table(self.table.clone()))
            .map_err(|e| Error::Parse { origin: self.origin.clone(), message: e.to_string() })?;
        let domain = |section: &'static str| {
            let origin = self.origin.clone();
            move |source: bfsmc_core::Error| Error::Domain { origin, section, source }
        };
        let config = |section: &'static str, msg: String| Error::Domain {
            origin: self.origin.clone(),
            section,
            source: bfsmc_core::Error::Config(msg),
        };

        let PairSection { r, p, kappa, gains, scale } = file.pair;
        let kappa = match kappa {
            Real::Number(k) => k,
            Real::Text(s) => parse_fraction(&s).ok_or_else(|| config("pair", format!("kappa {s:?} is not a number")))?,
        };
        let params = HomogeneityParams::new(r, p, kappa).map_err(domain("pair"))?;
        let gains = match gains {
            GainsSpec::List(g) => g,
            GainsSpec::Directive(d) if d == "tune" => {
                tune_gains(&params, &vec![1.0; r], TUNE_GROWTH).map_err(domain("pair"))?
            }
            GainsSpec::Directive(d) => return Err(config("pair", format!("gains must be a list or \"tune\", got {d:?}"))),
        };
        let mut pair = FeedbackPair::hong(params.clone(), &gains)
            .and_then(|pair| pair.with_scale(scale))
            .map_err(domain("pair"))?;
        let est = pair.estimate(ESTIMATE_SAMPLES, file.sim.seed).map_err(domain("pair"))?;

        let controller = build_controller(&file.controller).map_err(domain("controller"))?;
        let disturbance = self.build_disturbance(&file.disturbance)?;

        let mut notes = Vec::new();
        match (&controller, &disturbance.class) {
            (Controller::Host { .. }, DisturbanceClass::Case1 { .. }) => {
                notes.push("host controller on a disturbance declared Case 1 (time-varying gamma)".into())
            }
            (Controller::Case1 { schedule, growth }, _) => {
                let rep = validate_schedules(schedule, growth, &disturbance.envelope, est.c_r, &params, file.sim.horizon)
                    .map_err(domain("controller"))?;
                if !rep.decay_ok {
                    let limit = rep.lambda_limit.map_or_else(String::new, |l| format!(" (lambda limit {l:.4})"));
                    notes.push(format!("mu decays faster than c_r = {:.4} allows{limit}", est.c_r));
                }
                if !rep.growth_ok {
                    notes.push(format!(
                        "l mu^b / phi_tilde^(1+b) is not increasing over the last quarter: {:.4e} -> {:.4e}",
                        rep.growth_ratio.0, rep.growth_ratio.1
                    ));
                }
            }
            _ => {}
        }

        let scenario = Scenario::new(pair, controller, disturbance, file.sim.z0, file.sim.h, file.sim.horizon, file.sim.seed)
            .map_err(domain("sim"))?;
        let decimation = file.output.decimation.unwrap_or(1);
        if decimation == 0 {
            return Err(config("output", "decimation must be at least 1".into()));
        }
        Ok(Loaded {
            name: self.name.clone(),
            scenario,
            csv: file.output.csv.map(|c| self.resolve(&c)),
            decimation,
            notes,
        })
    }

    fn resolve(&self, rel: &str) -> PathBuf {
        match &self.base_dir {
            Some(dir) if Path::new(rel).is_relative() => dir.join(rel),
            _ => PathBuf::from(rel),
        }
    }

    fn build_disturbance(&self, sec: &DisturbanceSection) -> Result<Disturbance> {
        let domain = |source| Error::Domain { origin: self.origin.clone(), section: "disturbance", source };
        match (&sec.id, &sec.table) {
            (Some(id), None) => {
                let params: Vec<(&str, f64)> = sec.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                builtin_disturbance(id, &params).map_err(domain)
            }
            (None, Some(table)) => {
                if let Some(k) = sec.params.keys().next() {
                    return Err(domain(bfsmc_core::Error::Config(format!("unknown key {k} next to table"))));
                }
                read_table(&self.resolve(table)).and_then(|(samples, phi_tilde)| {
                    Disturbance::tabulated(&samples, phi_tilde).map_err(domain)
                })
            }
            _ => Err(domain(bfsmc_core::Error::Config("exactly one of id and table is required".into()))),
        }
    }
}

fn build_controller(c: &ControllerSection) -> bfsmc_core::Result<Controller> {
    let kind = ControllerKind::from_name(&c.kind).ok_or_else(|| {
        let names: Vec<&str> = ControllerKind::ALL.iter().map(|k| k.name()).collect();
        bfsmc_core::Error::Config(format!("unknown controller kind {:?}, expected one of {names:?}", c.kind))
    })?;
    let given = [
        ("mu0", c.mu0),
        ("lambda", c.lambda),
        ("epsilon", c.epsilon),
        ("l0", c.l0),
        ("slope", c.slope),
        ("exp_rate", c.exp_rate),
        ("k_p", c.k_p),
        ("k_i", c.k_i),
    ];
    let allowed: &[&str] = match kind {
        ControllerKind::Case1 => &["mu0", "lambda", "l0", "slope", "exp_rate"],
        ControllerKind::Host => &["epsilon", "l0", "slope", "exp_rate"],
        ControllerKind::SuperTwisting => &["k_p", "k_i"],
        ControllerKind::PureChain | ControllerKind::OpenLoop => &[],
    };
    if let Some((key, _)) = given.iter().find(|(k, v)| v.is_some() && !allowed.contains(k)) {
        return Err(bfsmc_core::Error::Config(format!("key {key} does not apply to controller kind {}", kind.name())));
    }
    let required = |key: &str, v: Option<f64>| {
        v.ok_or_else(|| bfsmc_core::Error::Config(format!("controller kind {} needs {key}", kind.name())))
    };
    let growth = || GrowthGain::new(c.l0.unwrap_or(1.0), c.slope.unwrap_or(1.0), c.exp_rate.unwrap_or(0.0));
    let ctl = match kind {
        ControllerKind::Case1 => {
            let mu0 = required("mu0", c.mu0)?;
            let schedule = match c.lambda {
                Some(lambda) if lambda != 0.0 => MuSchedule::exponential(mu0, lambda)?,
                _ => MuSchedule::constant(mu0)?,
            };
            Controller::Case1 { schedule, growth: growth()? }
        }
        ControllerKind::Host => Controller::Host { epsilon: required("epsilon", c.epsilon)?, growth: growth()? },
        ControllerKind::SuperTwisting => {
            Controller::SuperTwisting { k_p: required("k_p", c.k_p)?, k_i: required("k_i", c.k_i)? }
        }
        ControllerKind::PureChain => Controller::PureChain,
        ControllerKind::OpenLoop => Controller::OpenLoop,
    };
    ctl.check()?;
    Ok(ctl)
}

type TableRows = (Vec<(f64, f64, f64)>, Option<Vec<(f64, f64)>>);

/// Reads `t,gamma,phi[,phi_tilde]` samples.
fn read_table(path: &Path) -> Result<TableRows> {
    let origin = path.display().to_string();
    let bad = |line: usize, message: String| Error::Trace { origin: origin.clone(), line, message };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => bad(0, format!("{other:?}")),
        })?;
    let header: Vec<String> = rdr.headers().map_err(|e| bad(1, e.to_string()))?.iter().map(str::to_owned).collect();
    let with_envelope = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t", "gamma", "phi"] => false,
        ["t", "gamma", "phi", "phi_tilde"] => true,
        other => return Err(bad(1, format!("expected columns t,gamma,phi[,phi_tilde], got {other:?}"))),
    };
    let mut samples = Vec::new();
    let mut envelope = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad(line, format!("not a number: {f:?}"))))
            .collect::<Result<_>>()?;
        samples.push((vals[0], vals[1], vals[2]));
        if with_envelope {
            envelope.push((vals[0], vals[3]));
        }
    }
    Ok((samples, with_envelope.then_some(envelope)))
}

/// `"-1/6"`, `"0.5"`.
fn parse_fraction(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((n, d)) => Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?),
        None => s.trim().parse().ok(),
    }
}

/// Reads a command-line value as a TOML literal, falling back to a bare string.
pub fn parse_value(s: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.into()))
}
