use std::path::Path;
use std::process::{Command, Output};

fn edrp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edrp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null)
}

fn generate(dir: &Path) {
    ok(&edrp(
        &[
            "generate",
            "--seed",
            "7",
            "--deliveries",
            "4",
            "--cps",
            "2",
            "--evs",
            "2",
            "--out",
            "inst.json",
        ],
        dir,
    ));
}

#[test]
fn solve_then_check_plan() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    for method in ["csa", "edf", "ndf", "oracle"] {
        let plan = format!("{method}.json");
        let summary = ok(&edrp(
            &[
                "solve",
                "--instance",
                "inst.json",
                "--method",
                method,
                "--plan-out",
                &plan,
            ],
            dir.path(),
        ));
        assert_eq!(summary["feasible"], true, "{method}");
        let report = ok(&edrp(
            &["check", "--instance", "inst.json", "--solution", &plan],
            dir.path(),
        ));
        assert_eq!(report["feasible"], true, "{method}");
        let sim = ok(&edrp(
            &["simulate", "--instance", "inst.json", "--plan", &plan],
            dir.path(),
        ));
        assert_eq!(sim["served"], summary["served"]);
    }
}

#[test]
fn oracle_solution_checks() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let res = ok(&edrp(
        &["oracle", "--instance", "inst.json", "--solution-out", "sol.txt"],
        dir.path(),
    ));
    assert_eq!(res["feasible"], true);
    let report = ok(&edrp(
        &[
            "check",
            "--instance",
            "inst.json",
            "--solution",
            "sol.txt",
            "--lmax",
            "4",
        ],
        dir.path(),
    ));
    assert!((report["objective_value"].as_f64().unwrap() - res["objective"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn zero_assignment_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    ok(&edrp(
        &["oracle", "--instance", "inst.json", "--solution-out", "sol.txt"],
        dir.path(),
    ));
    let zeros: String = std::fs::read_to_string(dir.path().join("sol.txt"))
        .unwrap()
        .lines()
        .filter_map(|l| l.split_whitespace().next().filter(|n| !n.starts_with('#')))
        .map(|n| format!("{n} 0\n"))
        .collect();
    std::fs::write(dir.path().join("zero.txt"), zeros).unwrap();
    let out = edrp(
        &[
            "check",
            "--instance",
            "inst.json",
            "--solution",
            "zero.txt",
            "--lmax",
            "4",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["feasible"], false);
}

#[test]
fn export_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    ok(&edrp(
        &["export-milp", "--instance", "inst.json", "--lmax", "2", "--out", "m.lp"],
        dir.path(),
    ));
    ok(&edrp(
        &[
            "export-milp",
            "--instance",
            "inst.json",
            "--lmax",
            "2",
            "--out",
            "m.mps",
        ],
        dir.path(),
    ));
    let lp = std::fs::read_to_string(dir.path().join("m.lp")).unwrap();
    let mps = std::fs::read_to_string(dir.path().join("m.mps")).unwrap();
    assert!(lp.contains("Maximize") && lp.trim_end().ends_with("End"));
    assert!(mps.starts_with("NAME") && mps.trim_end().ends_with("ENDATA"));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    ok(&edrp(
        &[
            "bench",
            "--sweep",
            "deliveries",
            "--values",
            "4..6:1",
            "--cps",
            "2",
            "--ratio",
            "3",
            "--methods",
            "csa,edf,ndf,oracle",
            "--seeds",
            "2",
            "--out",
            "out",
        ],
        dir.path(),
    ));
    let metrics = std::fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3 * 2 * 4);
    for f in [
        "summary.csv",
        "plot_served.csv",
        "plot_avg_cost.csv",
        "plot_elapsed_ms.csv",
    ] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn bench_refuses_oracle_beyond_limits() {
    let dir = tempfile::tempdir().unwrap();
    let out = edrp(
        &[
            "bench",
            "--preset",
            "small",
            "--methods",
            "csa,oracle",
            "--seeds",
            "1",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle refused"));
    assert!(!dir.path().join("out/metrics.csv").exists());
}
