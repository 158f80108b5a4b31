//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use bfsmc::{parse_value, write_csv, ScenarioDoc};
use bfsmc_core::analysis::{analyze, AnalysisReport};
use bfsmc_core::case1::Phase;
use bfsmc_core::sim::{Event, Gains};
use bfsmc_core::{
    builtin_disturbance, run, tune_gains, Controller, FeedbackPair, HomogeneityParams, Scenario, Trajectory,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bundled(name: &str) -> ScenarioDoc {
    ScenarioDoc::bundled(name).expect("bundled scenario")
}

fn simulate(doc: &ScenarioDoc) -> Result<(Scenario, Trajectory), String> {
    let sc = doc.build().map_err(|e| e.to_string())?.scenario;
    let traj = run(&sc);
    Ok((sc, traj))
}

fn tuned(r: usize, p: f64, kappa: f64) -> Result<FeedbackPair, String> {
    let hp = HomogeneityParams::new(r, p, kappa).map_err(|e| e.to_string())?;
    let gains = tune_gains(&hp, &vec![1.0; r], 2.0).map_err(|e| e.to_string())?;
    FeedbackPair::hong(hp, &gains).map_err(|e| e.to_string())
}

/// Homogeneity, Euler relation, gradient, decrease and sign checks on tuned
/// pairs of order 1 to 3.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_rho = f64::INFINITY;
    for (r, kappa) in [(1, -0.5), (2, -1.0 / 6.0), (3, -1.0 / 6.0)] {
        let pair = tuned(r, 1.0, kappa)?;
        let rep = pair.validate(1000, 17);
        for name in ["v_homogeneity", "u_homogeneity", "euler_relation", "gradient_fd", "sign_condition", "rho_positive"] {
            let c = rep.check(name).ok_or_else(|| format!("r={r}: no check {name}"))?;
            ensure(c.passed && c.samples >= 990, || format!("r={r}: {name} worst {:e} tol {:e} n={}", c.worst, c.tolerance, c.samples))?;
        }
        ensure(rep.check("v_homogeneity").unwrap().tolerance <= 1e-6, || "homogeneity tolerance too loose".into())?;
        ensure(rep.check("gradient_fd").unwrap().tolerance <= 1e-4, || "gradient tolerance too loose".into())?;
        worst_rho = worst_rho.min(rep.rho_min);
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("r = 1, 2, 3 all checks pass, min rho {worst_rho:.4}, {:.2} s", took.as_secs_f64()))
}

/// r = 1, kappa = -1/2: z' = -sqrt(2|z|) sgn z reaches 0 at sqrt(2).
fn criterion_2() -> Outcome {
    let pair = FeedbackPair::hong(HomogeneityParams::new(1, 1.0, -0.5).unwrap(), &[1.0]).unwrap();
    let d = builtin_disturbance("zero", &[]).unwrap();
    let sc = Scenario::new(pair, Controller::PureChain, d, vec![1.0], 1e-4, 2.0, 0).map_err(|e| e.to_string())?;
    let traj = run(&sc);
    let hit = traj.records.iter().find(|r| r.z[0].abs() <= 1e-6).map(|r| r.t).ok_or("never reached 1e-6")?;
    let err = (hit - std::f64::consts::SQRT_2).abs();
    ensure(err <= 2e-3, || format!("|z| <= 1e-6 first at {hit}, off by {err:.2e}"))?;
    Ok(format!("|z| <= 1e-6 first at t = {hit:.4}, |t - sqrt 2| = {err:.1e}"))
}

/// V(T*) <= 1e-9 with T* = V0^{-kappa/2} / ((-kappa/2) c_r).
fn criterion_3() -> Outcome {
    let kappa = -1.0 / 6.0;
    let pair = tuned(3, 1.0, kappa)?;
    let c_r = pair.estimate_rho_bounds(4000, 3).map_err(|e| e.to_string())?.c_r;
    let z0 = vec![1.0, 1.0, -1.0];
    let v0 = pair.value(&z0);
    let q = -0.5 * kappa;
    let t_star = v0.powf(q) / (q * c_r);
    let d = builtin_disturbance("zero", &[]).unwrap();
    let h = 1e-4;
    let sc = Scenario::new(pair, Controller::PureChain, d, z0, h, t_star + 10.0 * h, 0).map_err(|e| e.to_string())?;
    let traj = run(&sc);
    let rec = traj.records.iter().find(|r| r.t >= t_star).ok_or("horizon too short")?;
    ensure(rec.v <= 1e-9, || format!("V({:.4}) = {:e} with T* = {t_star:.4}", rec.t, rec.v))?;
    Ok(format!("V0 = {v0:.4}, c_r = {c_r:.4}, T* = {t_star:.4}, V(T*) = {:.1e}", rec.v))
}

/// Bundled Case-1 example: crossing, containment, continuity, gain law.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (sc, traj) = simulate(&bundled("case1_example"))?;
    let took = start.elapsed();
    let rep = analyze(&traj);
    let Some(&Event::Crossing { t: t_bar, gain_before, gain_after, .. }) = traj.crossing() else {
        return Err("no crossing".into());
    };
    let Controller::Case1 { growth, .. } = &sc.controller else { unreachable!() };
    ensure(rep.contained() && rep.t_end >= sc.horizon - sc.h, || format!("not contained: {:?} events {:?}", rep.bound_gap, traj.events))?;
    let jump_cap = 1e3 * sc.h;
    ensure(rep.max_control_jump <= jump_cap, || format!("control jump {} > {jump_cap}", rep.max_control_jump))?;
    let b = sc.pair.params().barrier_exponent();
    ensure((b - 11.0 / 32.0).abs() < 1e-15, || format!("barrier exponent {b}"))?;
    let c_bar = growth.eval(t_bar) / 2f64.powf(b);
    let mut worst: f64 = 0.0;
    for rec in &traj.records {
        let Gains::Single(l) = rec.gains else { return Err("gain column".into()) };
        let expected = if rec.t < t_bar {
            ensure(rec.phase == Some(Phase::Searching), || format!("phase at {}", rec.t))?;
            growth.eval(rec.t)
        } else {
            ensure(rec.phase == Some(Phase::Barrier), || format!("phase at {}", rec.t))?;
            c_bar * (rec.bound / (rec.bound - rec.v)).powf(b)
        };
        worst = worst.max((l - expected).abs() / expected);
    }
    ensure(worst <= 1e-9, || format!("gain law off by {worst:e}"))?;
    let cont = (gain_after - gain_before).abs() / gain_before;
    ensure(cont <= 1e-6, || format!("gain jump at t_bar {cont:e}"))?;
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!(
        "t_bar = {t_bar:.4}, max(V - mu) = {:.2e}, max jump {:.2e}, gain law {worst:.0e}, {:.1} s",
        rep.bound_gap.unwrap().0,
        rep.max_control_jump,
        took.as_secs_f64()
    ))
}

fn host_check(traj: &Trajectory, rep: &AnalysisReport) -> Outcome {
    let t_bar = rep.t_bar.ok_or("no crossing")?;
    ensure(rep.contained() && rep.escapes == 0, || format!("not contained: {:?}", rep.bound_gap))?;
    let xi_zero = traj.records.iter().filter(|r| r.t < t_bar).all(|r| matches!(r.gains, Gains::Pair { xi, .. } if xi == 0.0));
    ensure(xi_zero, || "xi nonzero before t_bar".into())?;
    let mut ratios = Vec::new();
    for name in ["L1", "L2"] {
        let g = rep.gain(name).ok_or_else(|| format!("no {name}"))?;
        ensure(g.late_max <= 1.1 * g.early_max, || format!("{name}: late {} > 1.1 x early {}", g.late_max, g.early_max))?;
        ratios.push(g.ratio());
    }
    Ok(format!("t_bar = {t_bar:.4}, L1 late/early {:.4}, L2 late/early {:.4}", ratios[0], ratios[1]))
}

fn case1_on_case2(doc: &ScenarioDoc) -> Result<ScenarioDoc, String> {
    let mut d = doc.clone();
    let eps = d.remove("controller.epsilon").ok_or("no epsilon")?;
    d.set("controller.kind", parse_value("\"case1\"")).map_err(|e| e.to_string())?;
    d.set("controller.mu0", eps).map_err(|e| e.to_string())?;
    Ok(d)
}

fn criteria_5_6() -> (Outcome, Outcome) {
    let doc = bundled("case2_example");
    let host = simulate(&doc).map(|(_, traj)| {
        let rep = analyze(&traj);
        (host_check(&traj, &rep), rep)
    });
    let (c5, host_ok) = match host {
        Ok((res, _)) => {
            let ok = res.is_ok();
            (res, ok)
        }
        Err(e) => (Err(e), false),
    };
    let c6 = (|| {
        let (_, traj) = simulate(&case1_on_case2(&doc)?)?;
        let rep = analyze(&traj);
        ensure(rep.escapes == 0 && rep.blowups == 0 && rep.t_bar.is_some(), || format!("case1 run: {:?}", traj.events))?;
        let g = rep.gain("L").ok_or("no L")?;
        ensure(g.ratio() >= 2.0, || format!("case1 gain late/early {:.4} < 2", g.ratio()))?;
        ensure(host_ok, || "host gains fail criterion 5".into())?;
        Ok(format!("case1 gain late/early {:.4} (late max {:.2}, early max {:.2}), host bounded", g.ratio(), g.late_max, g.early_max))
    })();
    (c5, c6)
}

/// Identical CSV bytes on repeated runs; V(T) stable under h -> h/2.
fn criterion_7() -> Outcome {
    let doc = bundled("case1_example");
    let csv = |traj: &Trajectory| {
        let mut buf = Vec::new();
        write_csv(traj, &mut buf, 1).map(|_| buf).map_err(|e| e.to_string())
    };
    let (sc, a) = simulate(&doc)?;
    let (_, b) = simulate(&doc)?;
    ensure(csv(&a)? == csv(&b)?, || "CSV bytes differ between identical runs".into())?;
    let mut half = doc.clone();
    half.set("sim.h", toml::Value::Float(sc.h / 2.0)).map_err(|e| e.to_string())?;
    let (_, c) = simulate(&half)?;
    let (va, vc) = (a.records.last().unwrap().v, c.records.last().unwrap().v);
    let rel = (va - vc).abs() / va;
    ensure(rel < 0.01, || format!("V(T) {va:e} at h, {vc:e} at h/2"))?;
    Ok(format!("byte-identical CSV, V(T) = {va:.6e} at h, {vc:.6e} at h/2 (rel {rel:.1e})"))
}

/// Constant mu, phi_tilde = 1: V <= (1 - C1 alpha_tilde) mu on the last third.
fn criterion_8() -> Outcome {
    let (sc, traj) = simulate(&bundled("case1_constant_mu"))?;
    let rep = analyze(&traj);
    let c1 = rep.c1_hat.ok_or("no fit")?;
    ensure(c1 > 0.0 && rep.contained(), || format!("C1 = {c1}, contained {}", rep.contained()))?;
    let b = sc.pair.params().barrier_exponent();
    let t_end = rep.t_end;
    for r in traj.records.iter().filter(|r| r.t >= 2.0 * t_end / 3.0) {
        let phi_tilde = sc.disturbance.envelope_at(r.t);
        ensure((phi_tilde - 1.0).abs() < 1e-15, || format!("phi_tilde = {phi_tilde}"))?;
        let alpha = r.bound / phi_tilde.powf(1.0 + 1.0 / b);
        ensure(r.v <= (1.0 - c1 * alpha) * r.bound * (1.0 + 1e-12), || format!("bound fails at t = {}", r.t))?;
    }
    Ok(format!("C1 = {c1:.6}, V(T) = {:.3e}", rep.v_final))
}

fn main() {
    let mut results: Vec<(u32, Outcome)> = vec![(1, criterion_1()), (2, criterion_2()), (3, criterion_3()), (4, criterion_4())];
    let (c5, c6) = criteria_5_6();
    results.extend([(5, c5), (6, c6), (7, criterion_7()), (8, criterion_8())]);
    let mut failed = 0;
    for (n, res) in &results {
        match res {
            Ok(msg) => println!("criterion {n}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL  {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
