//! Post-run diagnostics computed from the recorded grid only, so that a
//! trajectory read back from a file gives the same report.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::case1::alpha_tilde_from;
use crate::sim::{ControllerKind, Event, Gains, Trajectory};

/// Growth of one gain after the crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTrend {
    pub name: &'static str,
    /// Largest value over the whole run.
    pub sup: f64,
    /// Max over the first quarter of `[t_bar, t_end]`.
    pub early_max: f64,
    /// Max over the last quarter of `[t_bar, t_end]`.
    pub late_max: f64,
}

impl GainTrend {
    pub fn ratio(&self) -> f64 {
        self.late_max / self.early_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub controller: ControllerKind,
    pub rows: usize,
    pub t_end: f64,
    pub t_bar: Option<f64>,
    pub v_final: f64,
    /// Max and min of `V - bound` over the grid from `t_bar` on.
    pub bound_gap: Option<(f64, f64)>,
    pub escapes: usize,
    /// Barrier blow-ups and non-finite states.
    pub blowups: usize,
    pub gains: Vec<GainTrend>,
    /// Largest `C` with `V <= (1 - C alpha_tilde) mu` on the final third
    /// of the run (Case 1 only).
    pub c1_hat: Option<f64>,
    /// `max |u(t + h) - u(t)|` over the grid.
    pub max_control_jump: f64,
}

impl AnalysisReport {
    /// `V < bound` on every grid point after the crossing, and nothing
    /// ended the run early.
    pub fn contained(&self) -> bool {
        matches!(self.bound_gap, Some((max, _)) if max < 0.0) && self.escapes == 0 && self.blowups == 0
    }

    pub fn gain(&self, name: &str) -> Option<&GainTrend> {
        self.gains.iter().find(|g| g.name == name)
    }

    pub fn key_values(&self) -> Vec<(String, String)> {
        let opt = |x: Option<f64>| x.map_or_else(|| String::from("none"), |v| format!("{v}"));
        let mut kv = alloc::vec![
            ("controller".into(), self.controller.name().into()),
            ("rows".into(), format!("{}", self.rows)),
            ("t_end".into(), format!("{}", self.t_end)),
            ("t_bar".into(), opt(self.t_bar)),
            ("v_final".into(), format!("{}", self.v_final)),
            ("bound_gap_max".into(), opt(self.bound_gap.map(|g| g.0))),
            ("bound_gap_min".into(), opt(self.bound_gap.map(|g| g.1))),
            ("contained".into(), format!("{}", self.contained())),
            ("escapes".into(), format!("{}", self.escapes)),
            ("blowups".into(), format!("{}", self.blowups)),
        ];
        for g in &self.gains {
            kv.push((format!("{}_sup", g.name), format!("{}", g.sup)));
            kv.push((format!("{}_early_max", g.name), format!("{}", g.early_max)));
            kv.push((format!("{}_late_max", g.name), format!("{}", g.late_max)));
        }
        kv.push(("c1_hat".into(), opt(self.c1_hat)));
        kv.push(("max_control_jump".into(), format!("{}", self.max_control_jump)));
        kv
    }

    pub fn to_text(&self) -> String {
        self.key_values().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn analyze(traj: &Trajectory) -> AnalysisReport {
    let recs = &traj.records;
    let t_end = recs.last().map_or(0.0, |r| r.t);
    let t_bar = traj.t_bar();
    let from = t_bar.unwrap_or(0.0);
    let after = || recs.iter().filter(move |r| r.t >= from);

    let bound_gap = t_bar.and_then(|_| {
        after().map(|r| r.v - r.bound).fold(None, |acc: Option<(f64, f64)>, g| match acc {
            None => Some((g, g)),
            Some((hi, lo)) => Some((hi.max(g), lo.min(g))),
        })
    });

    let names: &[&'static str] = match recs.first().map(|r| r.gains) {
        Some(Gains::Pair { .. }) => &["L1", "L2"],
        _ => &["L"],
    };
    let pick = |g: Gains, i: usize| match g {
        Gains::Single(l) => l,
        Gains::Pair { l1, l2, .. } => [l1, l2][i],
    };
    let span = t_end - from;
    let (early_end, late_start) = (from + 0.25 * span, from + 0.75 * span);
    let gains = names
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let max_over = |lo: f64, hi: f64| {
                recs.iter()
                    .filter(|r| r.t >= lo && r.t <= hi)
                    .map(|r| pick(r.gains, i))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            GainTrend {
                name,
                sup: recs.iter().map(|r| pick(r.gains, i)).fold(f64::NEG_INFINITY, f64::max),
                early_max: max_over(from, early_end),
                late_max: max_over(late_start, t_end),
            }
        })
        .collect();

    let c1_hat = match (traj.meta.controller, t_bar) {
        (ControllerKind::Case1, Some(tb)) => {
            let start = tb.max(2.0 * t_end / 3.0);
            let b = traj.meta.barrier_exponent;
            let fit = recs
                .iter()
                .filter(|r| r.t >= start)
                .map(|r| (1.0 - r.v / r.bound) / alpha_tilde_from(r.bound, traj.meta.envelope.eval(r.t), b))
                .fold(f64::INFINITY, f64::min);
            fit.is_finite().then_some(fit)
        }
        _ => None,
    };

    let max_control_jump = recs.windows(2).map(|w| (w[1].u - w[0].u).abs()).fold(0.0, f64::max);

    AnalysisReport {
        controller: traj.meta.controller,
        rows: recs.len(),
        t_end,
        t_bar,
        v_final: recs.last().map_or(f64::NAN, |r| r.v),
        bound_gap,
        escapes: traj.events.iter().filter(|e| matches!(e, Event::Escape { .. })).count(),
        blowups: traj
            .events
            .iter()
            .filter(|e| matches!(e, Event::Blowup { .. } | Event::BarrierBlowup { .. }))
            .count(),
        gains,
        c1_hat,
        max_control_jump,
    }
}
