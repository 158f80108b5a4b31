//! CSV traces.
//!
//! One header row, then one row per kept grid point:
//!
//! ```text
//! t,z_1,...,z_r,V,bound,phase,L,u,phi,gamma          (single gain)
//! t,z_1,...,z_r,V,bound,phase,L1,L2,xi,u,phi,gamma   (integral controllers)
//! ```
//!
//! Reals are written with 17 significant digits so that a trace read back
//! reproduces the recorded values bit for bit. The rows are followed by a
//! comment block: one `# event <name> key=value ...` line per event and
//! `# meta key=value` lines carrying what [`analyze`](bfsmc_core::analysis::analyze)
//! needs besides the rows.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use bfsmc_core::case1::Phase;
use bfsmc_core::plant::Envelope;
use bfsmc_core::sim::{Event, Gains, Record, TrajectoryMeta};
use bfsmc_core::{ControllerKind, Trajectory};

use crate::error::{Error, Result};

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn reals(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(real).collect::<Vec<_>>().join(",")
}

/// Column names for a trajectory of order `r`.
pub fn header(r: usize, integral: bool) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=r).map(|i| format!("z_{i}")));
    cols.extend(["V", "bound", "phase"].map(String::from));
    if integral {
        cols.extend(["L1", "L2", "xi"].map(String::from));
    } else {
        cols.push("L".into());
    }
    cols.extend(["u", "phi", "gamma"].map(String::from));
    cols
}

fn phase_name(p: Option<Phase>) -> &'static str {
    p.map_or("none", |p| p.as_str())
}

fn event_line(e: &Event) -> String {
    let fields: Vec<(&str, f64)> = match *e {
        Event::Crossing { t, v, bound, gain_before, gain_after } => {
            vec![("t", t), ("v", v), ("bound", bound), ("gain_before", gain_before), ("gain_after", gain_after)]
        }
        Event::Escape { t, v, bound } | Event::BarrierBlowup { t, v, bound } => vec![("t", t), ("v", v), ("bound", bound)],
        Event::Blowup { t } => vec![("t", t)],
    };
    let kv: Vec<String> = fields.into_iter().map(|(k, v)| format!("{k}={}", real(v))).collect();
    format!("# event {} {}", e.name(), kv.join(" "))
}

fn envelope_text(env: &Envelope) -> String {
    match env {
        Envelope::Affine { offset, slope } => format!("affine:{},{}", real(*offset), real(*slope)),
        Envelope::Table(knots) => {
            let k: Vec<String> = knots.iter().map(|&(t, v)| format!("{}:{}", real(t), real(v))).collect();
            format!("table:{}", k.join(";"))
        }
    }
}

fn meta_lines(m: &TrajectoryMeta) -> Vec<String> {
    [
        ("controller", m.controller.name().to_string()),
        ("r", m.r.to_string()),
        ("p", real(m.p)),
        ("kappa", real(m.kappa)),
        ("gains", reals(m.gains.iter().copied())),
        ("h", real(m.h)),
        ("horizon", real(m.horizon)),
        ("seed", m.seed.to_string()),
        ("disturbance", m.disturbance.clone()),
        ("gain_exponent", real(m.gain_exponent)),
        ("barrier_exponent", real(m.barrier_exponent)),
        ("envelope", envelope_text(&m.envelope)),
    ]
    .into_iter()
    .map(|(k, v)| format!("# meta {k}={v}"))
    .collect()
}

/// Writes every `decimation`-th row (row 0 always kept) and the comment block.
pub fn write_csv<W: Write>(traj: &Trajectory, out: W, decimation: usize) -> Result<()> {
    if traj.records.is_empty() {
        return Err(Error::Usage("cannot write an empty trajectory".into()));
    }
    if decimation == 0 {
        return Err(Error::Usage("decimation must be at least 1".into()));
    }
    let io = |e: std::io::Error| Error::io("<csv>", e);
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => io(e),
        other => Error::Usage(format!("csv: {other:?}")),
    };
    let integral = matches!(traj.records[0].gains, Gains::Pair { .. });
    let mut out = BufWriter::new(out);
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
        w.write_record(header(traj.meta.r, integral)).map_err(csv_err)?;
        let mut row: Vec<String> = Vec::new();
        for rec in traj.records.iter().step_by(decimation) {
            row.clear();
            row.push(real(rec.t));
            row.extend(rec.z.iter().map(|&z| real(z)));
            row.push(real(rec.v));
            row.push(real(rec.bound));
            row.push(phase_name(rec.phase).into());
            match rec.gains {
                Gains::Single(l) => row.push(real(l)),
                Gains::Pair { l1, l2, xi } => row.extend([l1, l2, xi].map(real)),
            }
            row.extend([rec.u, rec.phi, rec.gamma].map(real));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
    }
    for e in &traj.events {
        writeln!(out, "{}", event_line(e)).map_err(io)?;
    }
    for l in meta_lines(&traj.meta) {
        writeln!(out, "{l}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_csv_file(traj: &Trajectory, path: &Path, decimation: usize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(traj, f, decimation).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

struct Parser<'a> {
    origin: &'a str,
    line: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Trace { origin: self.origin.into(), line: self.line, message: message.into() }
    }

    fn real(&self, s: &str) -> Result<f64> {
        s.trim().parse().map_err(|_| self.err(format!("not a number: {s:?}")))
    }

    fn event(&self, body: &str) -> Result<Event> {
        let mut parts = body.split_whitespace();
        let name = parts.next().ok_or_else(|| self.err("empty event line"))?;
        let mut fields = Vec::new();
        for kv in parts {
            let (k, v) = kv.split_once('=').ok_or_else(|| self.err(format!("expected key=value, got {kv:?}")))?;
            fields.push((k, self.real(v)?));
        }
        let get = |key: &str| {
            fields.iter().find(|(k, _)| *k == key).map(|&(_, v)| v).ok_or_else(|| self.err(format!("event {name} lacks {key}")))
        };
        Ok(match name {
            "crossing" => Event::Crossing {
                t: get("t")?,
                v: get("v")?,
                bound: get("bound")?,
                gain_before: get("gain_before")?,
                gain_after: get("gain_after")?,
            },
            "escape" => Event::Escape { t: get("t")?, v: get("v")?, bound: get("bound")? },
            "barrier_blowup" => Event::BarrierBlowup { t: get("t")?, v: get("v")?, bound: get("bound")? },
            "blowup" => Event::Blowup { t: get("t")? },
            other => return Err(self.err(format!("unknown event {other:?}"))),
        })
    }

    fn envelope(&self, s: &str) -> Result<Envelope> {
        if let Some(rest) = s.strip_prefix("affine:") {
            let (o, sl) = rest.split_once(',').ok_or_else(|| self.err("affine envelope needs offset,slope"))?;
            return Ok(Envelope::Affine { offset: self.real(o)?, slope: self.real(sl)? });
        }
        if let Some(rest) = s.strip_prefix("table:") {
            let knots = rest
                .split(';')
                .map(|kv| {
                    let (t, v) = kv.split_once(':').ok_or_else(|| self.err("table envelope needs t:v knots"))?;
                    Ok((self.real(t)?, self.real(v)?))
                })
                .collect::<Result<_>>()?;
            return Ok(Envelope::Table(knots));
        }
        Err(self.err(format!("unknown envelope {s:?}")))
    }
}

#[derive(Default)]
struct MetaFields {
    controller: Option<ControllerKind>,
    r: Option<usize>,
    p: Option<f64>,
    kappa: Option<f64>,
    gains: Option<Vec<f64>>,
    h: Option<f64>,
    horizon: Option<f64>,
    seed: Option<u64>,
    disturbance: Option<String>,
    gain_exponent: Option<f64>,
    barrier_exponent: Option<f64>,
    envelope: Option<Envelope>,
}

/// Reads a trace written by [`write_csv`].
pub fn read_csv<R: Read>(input: R, origin: &str) -> Result<Trajectory> {
    let mut p = Parser { origin, line: 0 };
    let mut lines = BufReader::new(input).lines();
    let io = |e| Error::io(origin, e);

    p.line = 1;
    let head = lines.next().transpose().map_err(io)?.ok_or_else(|| p.err("empty file"))?;
    let cols: Vec<&str> = head.split(',').collect();
    let r = cols.iter().filter(|c| c.starts_with("z_")).count();
    let integral = cols.contains(&"L1");
    if r == 0 || cols != header(r, integral).iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(p.err(format!("unexpected header {head:?}")));
    }

    let mut records = Vec::new();
    let mut events = Vec::new();
    let mut m = MetaFields::default();
    for line in lines {
        p.line += 1;
        let line = line.map_err(io)?;
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(body) = comment.strip_prefix("event ") {
                events.push(p.event(body)?);
            } else if let Some(body) = comment.strip_prefix("meta ") {
                let (k, v) = body.split_once('=').ok_or_else(|| p.err("expected key=value"))?;
                match k {
                    "controller" => {
                        m.controller = Some(ControllerKind::from_name(v).ok_or_else(|| p.err(format!("unknown controller {v:?}")))?)
                    }
                    "r" => m.r = Some(v.parse().map_err(|_| p.err("bad r"))?),
                    "p" => m.p = Some(p.real(v)?),
                    "kappa" => m.kappa = Some(p.real(v)?),
                    "gains" => m.gains = Some(v.split(',').map(|g| p.real(g)).collect::<Result<_>>()?),
                    "h" => m.h = Some(p.real(v)?),
                    "horizon" => m.horizon = Some(p.real(v)?),
                    "seed" => m.seed = Some(v.parse().map_err(|_| p.err("bad seed"))?),
                    "disturbance" => m.disturbance = Some(v.to_string()),
                    "gain_exponent" => m.gain_exponent = Some(p.real(v)?),
                    "barrier_exponent" => m.barrier_exponent = Some(p.real(v)?),
                    "envelope" => m.envelope = Some(p.envelope(v)?),
                    other => return Err(p.err(format!("unknown meta key {other:?}"))),
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if !events.is_empty() || m.controller.is_some() {
            return Err(p.err("data row after the comment block"));
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(p.err(format!("expected {} fields, got {}", cols.len(), f.len())));
        }
        let x = |i: usize| p.real(f[i]);
        let phase = match f[r + 3] {
            "none" => None,
            "searching" => Some(Phase::Searching),
            "barrier" => Some(Phase::Barrier),
            other => return Err(p.err(format!("unknown phase {other:?}"))),
        };
        let (gains, next) = if integral {
            (Gains::Pair { l1: x(r + 4)?, l2: x(r + 5)?, xi: x(r + 6)? }, r + 7)
        } else {
            (Gains::Single(x(r + 4)?), r + 5)
        };
        records.push(Record {
            t: x(0)?,
            z: (1..=r).map(x).collect::<Result<_>>()?,
            v: x(r + 1)?,
            bound: x(r + 2)?,
            phase,
            gains,
            u: x(next)?,
            phi: x(next + 1)?,
            gamma: x(next + 2)?,
        });
    }

    let missing = |k: &str| p.err(format!("meta block lacks {k}"));
    let meta = TrajectoryMeta {
        controller: m.controller.ok_or_else(|| missing("controller"))?,
        r: m.r.ok_or_else(|| missing("r"))?,
        p: m.p.ok_or_else(|| missing("p"))?,
        kappa: m.kappa.ok_or_else(|| missing("kappa"))?,
        gains: m.gains.ok_or_else(|| missing("gains"))?,
        h: m.h.ok_or_else(|| missing("h"))?,
        horizon: m.horizon.ok_or_else(|| missing("horizon"))?,
        seed: m.seed.ok_or_else(|| missing("seed"))?,
        disturbance: m.disturbance.ok_or_else(|| missing("disturbance"))?,
        gain_exponent: m.gain_exponent.ok_or_else(|| missing("gain_exponent"))?,
        barrier_exponent: m.barrier_exponent.ok_or_else(|| missing("barrier_exponent"))?,
        envelope: m.envelope.ok_or_else(|| missing("envelope"))?,
    };
    if meta.r != r {
        return Err(p.err(format!("meta r = {} but the header has {r} state columns", meta.r)));
    }
    Ok(Trajectory { meta, records, events })
}

pub fn read_csv_file(path: &Path) -> Result<Trajectory> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(f, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(kind: ControllerKind, r: usize) -> TrajectoryMeta {
        TrajectoryMeta {
            controller: kind,
            r,
            p: 1.0,
            kappa: -0.5,
            gains: vec![1.0; r],
            h: 0.5,
            horizon: 1.0,
            seed: 7,
            disturbance: "zero".into(),
            gain_exponent: 0.25,
            barrier_exponent: 0.375,
            envelope: Envelope::Table(vec![(0.0, 1.0), (2.0, 1.5)]),
        }
    }

    fn one_step() -> Trajectory {
        let rec = |t: f64, v: f64| Record {
            t,
            z: vec![v.sqrt()],
            v,
            bound: 1.0,
            phase: Some(if t > 0.0 { Phase::Barrier } else { Phase::Searching }),
            gains: Gains::Single(1.0 + t),
            u: -0.1 * t,
            phi: 0.0,
            gamma: 1.0,
        };
        Trajectory {
            meta: meta(ControllerKind::Case1, 1),
            records: vec![rec(0.0, 0.8), rec(0.5, 0.3)],
            events: vec![Event::Crossing { t: 0.25, v: 0.5, bound: 1.0, gain_before: 1.25, gain_after: 1.25 }],
        }
    }

    fn to_string(traj: &Trajectory, dec: usize) -> String {
        let mut buf = Vec::new();
        write_csv(traj, &mut buf, dec).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn one_step_case1_layout() {
        let text = to_string(&one_step(), 1);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,z_1,V,bound,phase,L,u,phi,gamma");
        assert_eq!(lines[1].split(',').count(), 9);
        assert!(lines[2].starts_with("5.0000000000000000e-1,"));
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 3);
        assert_eq!(lines.iter().filter(|l| l.starts_with("# event crossing ")).count(), 1);
    }

    #[test]
    fn integral_columns() {
        assert_eq!(header(2, true).join(","), "t,z_1,z_2,V,bound,phase,L1,L2,xi,u,phi,gamma");
    }

    #[test]
    fn round_trip() {
        let traj = one_step();
        let back = read_csv(to_string(&traj, 1).as_bytes(), "mem").unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn non_finite_values_survive() {
        let mut traj = one_step();
        traj.records[0].bound = f64::NAN;
        traj.records[1].u = f64::NEG_INFINITY;
        traj.records[1].phase = None;
        let back = read_csv(to_string(&traj, 1).as_bytes(), "mem").unwrap();
        assert!(back.records[0].bound.is_nan());
        assert_eq!(back.records[1].u, f64::NEG_INFINITY);
        assert_eq!(back.records[1].phase, None);
    }

    #[test]
    fn rejects_bad_input() {
        let text = to_string(&one_step(), 1);
        let err = read_csv(text.replace("phase", "stage").as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, Error::Trace { line: 1, .. }), "{err}");
        let err = read_csv(text.replace("barrier", "sliding").as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, Error::Trace { line: 3, .. }), "{err}");
        let cut: String = text.lines().filter(|l| !l.starts_with("# meta seed")).map(|l| format!("{l}\n")).collect();
        assert!(read_csv(cut.as_bytes(), "mem").unwrap_err().to_string().contains("lacks seed"));
    }

    #[test]
    fn empty_or_zero_decimation() {
        let mut t = one_step();
        assert!(write_csv(&t, Vec::new(), 0).is_err());
        t.records.clear();
        assert!(write_csv(&t, Vec::new(), 1).is_err());
    }
}
