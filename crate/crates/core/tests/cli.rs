use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_netkf");

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(BIN).args(args).arg("--out").arg(out).output().unwrap()
}

fn column(path: &Path, name: &str) -> Vec<Option<f64>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let v = &r[idx];
            (!v.is_empty()).then(|| v.parse().unwrap())
        })
        .collect()
}

fn report_value(path: &Path, name: &str) -> Option<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| r.unwrap())
        .find(|r| &r[0] == name)
        .and_then(|r| (!r[1].is_empty()).then(|| r[1].parse().unwrap()))
}

#[test]
fn compare_on_block_diagonal_config_has_negligible_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["compare", "--config", &config("five_agent_blockdiag.toml")], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gap = dir.path().join("gap_trajectory.csv");
    for i in 1..=5 {
        for v in column(&gap, &format!("x_tilde_{i}")) {
            assert!(v.unwrap().abs() <= 1e-9);
        }
    }
    assert_eq!(report_value(&dir.path().join("bound_report.csv"), "kappa"), Some(0.0));
}

#[test]
fn bounds_report_has_contracting_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bounds", "--config", &config("five_agent.toml"), "--runs", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.path().join("bound_report.csv");
    let upsilon = report_value(&report, "upsilon").unwrap();
    assert!(upsilon > 0.0 && upsilon < 1.0);
    assert!(report_value(&report, "rho_h_bar").unwrap() < 1.0);
    assert_eq!(report_value(&report, "phi_eps"), None);
    // covariance-only trajectory: estimate columns empty
    assert!(column(&dir.path().join("gap_trajectory.csv"), "x_tilde_norm").iter().all(Option::is_none));
}

#[test]
fn every_command_writes_a_manifest() {
    for cmd in ["run-central", "run-distributed", "compare", "bounds", "fig2", "fig3", "property-suite"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&[cmd, "--config", &config("five_agent.toml"), "--horizon", "12", "--runs", "1"], dir.path());
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["command"], cmd);
        for f in manifest["files"].as_array().unwrap() {
            assert!(dir.path().join(f["name"].as_str().unwrap()).exists());
        }
    }
}

#[test]
fn failures_emit_json_and_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");

    fs::write(&bad, "[simulation\nhorizon = 3").unwrap();
    let out = run(&["compare", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], "ParseError");

    let text = fs::read_to_string(config("five_agent.toml")).unwrap().replacen("l = [[0.3]]", "l = [[0.3, 0.1]]", 1);
    fs::write(&bad, text).unwrap();
    let out = run(&["compare", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], "ValidationError");
    assert!(rec["message"].as_str().unwrap().contains("L_(1,2)"));

    let out = run(&["compare", "--config", &config("five_agent.toml"), "--eps", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(6));

    let out = run(&["nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_exit_codes() {
    let out = Command::new(BIN).arg("--help").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Exit codes:"));
    assert!(text.contains("SingularInnovation"));
}

#[test]
fn csv_outputs_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fig2", "--config", &config("five_agent.toml"), "--horizon", "20", "--runs", "8"], dir.path());
    assert!(out.status.success());
    for name in ["trajectory.csv", "gap_trajectory.csv", "bound_report.csv", "monte_carlo.csv"] {
        let mut rdr = csv::Reader::from_path(dir.path().join(name)).unwrap();
        let width = rdr.headers().unwrap().len();
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec.unwrap();
            assert_eq!(rec.len(), width, "{name}");
            let skip = usize::from(name == "bound_report.csv");
            for field in rec.iter().skip(skip).filter(|f| !f.is_empty()) {
                assert!(field.parse::<f64>().is_ok(), "{name}: {field}");
            }
            rows += 1;
        }
        assert!(rows > 0, "{name}");
    }
}
