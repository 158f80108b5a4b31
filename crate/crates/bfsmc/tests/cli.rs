use std::path::Path;
use std::process::{Command, Output};

fn bfsmc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfsmc")).args(args).current_dir(cwd).output().expect("spawn bfsmc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(csv: &Path) -> usize {
    std::fs::read_to_string(csv).unwrap().lines().filter(|l| !l.starts_with('#')).count() - 1
}

#[test]
fn run_case1_example_strict() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfsmc(&["run", "case1_example", "--strict"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("contained = true\n"));
    assert!(stderr(&o).contains("note: mu decays faster"), "{}", stderr(&o));
    assert_eq!(data_rows(&dir.path().join("case1_example.csv")), 300_001);
}

#[test]
fn report_reproduces_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let run = bfsmc(&["run", "case1_example", "--horizon", "4", "--out", "a.csv"], dir.path());
    assert!(run.status.success(), "{}", stderr(&run));
    let rep = bfsmc(&["report", "a.csv", "--strict"], dir.path());
    assert!(rep.status.success(), "{}", stderr(&rep));
    assert_eq!(stdout(&run), stdout(&rep));
    assert!(stdout(&rep).contains("t_bar = 2.72"));
}

#[test]
fn strict_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // no crossing within one second, so nothing to be contained in
    let o = bfsmc(&["run", "case1_example", "--horizon", "1", "--strict", "--out", "short.csv"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = bfsmc(&["report", "short.csv", "--strict"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = bfsmc(&["report", "short.csv"], dir.path());
    assert!(o.status.success());
}

#[test]
fn overrides_reach_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfsmc(
        &["run", "case1_example", "--h", "1e-3", "--horizon", "2", "--seed", "11", "--decimate", "10", "--out", "o/x.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("o/x.csv");
    assert_eq!(data_rows(&csv), 201);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# meta seed=11\n"));
    assert!(text.contains("# meta h=1.0000000000000000e-3\n"));
}

#[test]
fn validate_pair_with_tuning() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfsmc(&["validate-pair", "--r", "3", "--p", "1", "--kappa", "-0.1667", "--tune", "--strict"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for check in ["v_homogeneity", "u_homogeneity", "euler_relation", "gradient_fd", "sign_condition", "rho_positive"] {
        assert!(out.contains(&format!("[PASS] {check}")), "{out}");
    }
    assert!(out.ends_with("overall: PASS\n"));
}

#[test]
fn validate_pair_rejects_bad_weights() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfsmc(&["validate-pair", "--r", "3", "--p", "1", "--kappa", "-0.6", "--gains", "1,1,1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("infeasible weights"), "{}", stderr(&o));
    let o = bfsmc(&["validate-pair", "--r", "1", "--p", "1", "--kappa", "-1/2"], dir.path());
    assert_eq!(o.status.code(), Some(2), "either --tune or --gains is required");
}

#[test]
fn missing_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfsmc(&["run", "does_not_exist.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("does_not_exist.toml: no such file"), "{}", stderr(&o));
}

#[test]
fn malformed_scenario_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = bfsmc::BUNDLED[0].1;
    std::fs::write(dir.path().join("typo.toml"), text.replace("exp_rate = 1.8", "exp_rte = 1.8")).unwrap();
    let o = bfsmc(&["run", "typo.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("typo.toml") && err.contains("line 16") && err.contains("exp_rte"), "{err}");

    std::fs::write(dir.path().join("kappa.toml"), text.replace("kappa = \"-1/6\"", "kappa = 0.2")).unwrap();
    let err = stderr(&bfsmc(&["run", "kappa.toml"], dir.path()));
    assert!(err.contains("[pair]") && err.contains("kappa"), "{err}");
}

#[test]
fn sweep_writes_one_csv_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bfsmc"))
        .args(["sweep", "case1_example", "--key", "controller.exp_rate", "--values", "1.8,2.0", "--horizon", "3", "--decimate", "100", "--out", "sw"])
        .current_dir(dir.path())
        .env("BFSMC_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3, "{table}");
    assert!(lines[0].starts_with("cell controller.exp_rate"));
    assert!(lines[1].contains(" 1.8 ") && lines[2].contains(" 2.0 "), "{table}");
    for i in 0..2 {
        let csv = dir.path().join(format!("sw/case1_example_controller-exp_rate_{i:03}.csv"));
        assert_eq!(data_rows(&csv), 301);
    }
}

#[test]
fn sweep_reports_bad_cells_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfsmc(&["sweep", "case1_example", "--key", "sim.h", "--values", "-1", "--out", "sw"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("error:"), "{}", stdout(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_bfsmc"))
        .args(["sweep", "case1_example", "--key", "sim.horizon", "--values", "1"])
        .current_dir(dir.path())
        .env("BFSMC_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("BFSMC_THREADS"));
}
