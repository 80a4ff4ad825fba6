use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::Command;

use ktc_core::equilibrium::stripe_width;
use ktc_io::output::{read_kinetic, read_moments};
use ktc_io::{execute, parse_config_in};

fn ktc() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ktc"));
    c.env_remove("KTC_OUTPUT_DIR");
    c
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, body).unwrap();
    p
}

const SHOCK: &str = "\
# Burgers shock
n_x = 100
n_v = 40
h = 0.05
t_final = 0.5
initial = riemann:1,-1,0
snapshot_times = 0, 0.25, 0.5
fields = moments, kinetic, diagnostics
";

#[test]
fn run_writes_all_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHOCK);
    let out = ktc().arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");

    let moments = fs::read_to_string(dir.join("moments.csv")).unwrap();
    assert!(moments.lines().nth(1).unwrap().starts_with("# config_sha256 = "));
    let rows = read_moments(moments.as_bytes()).unwrap();
    assert_eq!(rows.len(), 3 * 100);
    let ts: Vec<f64> = rows.iter().step_by(100).map(|r| r.t).collect();
    assert_eq!(ts, vec![0.0, 0.25, 0.5]);

    let states = read_kinetic(BufReader::new(fs::File::open(dir.join("kinetic.csv")).unwrap())).unwrap();
    assert_eq!(states.len(), 3);
    for (s, r) in states.iter().zip(rows.iter().step_by(100)) {
        assert_eq!(s.t, r.t);
    }

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("diagnostics.json")).unwrap()).unwrap();
    for key in ["per_step", "budgets", "flux_error", "m_measure", "mass_drift", "entropy_series"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["per_step"].as_array().unwrap().len(), 10);
    assert_eq!(json["flux_error"].as_array().unwrap().len(), 3);
    for key in ["est1", "est2", "est3"] {
        assert!(json["budgets"][key].is_f64());
    }
    assert!(json["mass_drift"].is_f64());
    assert!(json["per_step"][0]["w1_drop"].is_f64());
}

#[test]
fn every_scheme_emits_numeric_diagnostics() {
    for extra in ["scheme = classic", "scheme = thresholded\nepsilon = 0.1", "scheme = bgk\nepsilon = 0.1\ndt = 0.0125"] {
        let tmp = tempfile::tempdir().unwrap();
        let body = format!("n_x = 50\nn_v = 40\nh = 0.05\nt_final = 0.25\ninitial = riemann:0.8,-0.3,0\n{extra}\n");
        let cfg = parse_config_in(&body, tmp.path()).unwrap();
        let summary = execute(&cfg, tmp.path()).unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join("diagnostics.json")).unwrap()).unwrap();
        assert_eq!(json["scheme"], cfg.scheme.scheme.name());
        assert_eq!(json["per_step"].as_array().unwrap().len(), summary.ledger.reports.len());
        for step in json["per_step"].as_array().unwrap() {
            for key in ["t", "collapsed_measure", "entropy_drop", "w1_drop", "equilibrium_entropy", "max_deviation"] {
                assert!(step[key].is_f64(), "{extra}: {key} = {}", step[key]);
            }
        }
        for e in json["entropy_series"].as_array().unwrap() {
            assert!(e["collapsed"].as_f64().unwrap() <= e["transported"].as_f64().unwrap() + 1e-12);
        }
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SHOCK}scheme = thresholded\nepsilon = 0.05\n"));
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let st = ktc().arg("run").arg(&cfg).env("KTC_OUTPUT_DIR", &dir).status().unwrap();
        assert!(st.success());
        outputs.push(
            ["moments.csv", "kinetic.csv", "diagnostics.json"]
                .map(|f| fs::read(dir.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn pure_transport_has_zero_budgets_and_conserves_mass() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "\
x_min = 0
x_max = 1
n_x = 64
n_v = 40
boundary = periodic
scheme = thresholded
epsilon = inf
h = 0.0137
t_final = 1.37
initial = riemann:0.6,-0.2,0.5
";
    let cfg = parse_config_in(body, tmp.path()).unwrap();
    let summary = execute(&cfg, tmp.path()).unwrap();
    assert_eq!(summary.ledger.reports.len(), 100);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("diagnostics.json")).unwrap()).unwrap();
    for key in ["est1", "est2", "est3"] {
        assert_eq!(json["budgets"][key].as_f64(), Some(0.0), "{key}");
    }
    assert!(json["mass_drift"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn periodic_runs_conserve_mass_in_every_scheme() {
    for extra in ["scheme = classic", "scheme = thresholded\nepsilon = 0.2", "scheme = bgk\nepsilon = 0.2\ndt = 0.005"] {
        let tmp = tempfile::tempdir().unwrap();
        let body = format!(
            "x_min = 0\nx_max = 1\nn_x = 80\nn_v = 60\nboundary = periodic\nh = 0.01\nt_final = 1\ninitial = riemann:0.9,-0.4,0.3\n{extra}\n"
        );
        let cfg = parse_config_in(&body, tmp.path()).unwrap();
        let summary = execute(&cfg, tmp.path()).unwrap();
        assert!(summary.ledger.mass_drift <= 1e-10, "{extra}: {}", summary.ledger.mass_drift);
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();

    let bad = write_config(tmp.path(), "n_x = 10\nh = 0.1\nt_final = 1\ninitial = riemann:1,0,0\nepsilon = -1\n");
    let out = ktc().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));

    assert_eq!(ktc().arg("check").arg(tmp.path().join("missing.cfg")).status().unwrap().code(), Some(1));

    // A snapshot with f < 0 at v > 0 violates sign compatibility at start-up.
    let snap = tmp.path().join("bad.csv");
    fs::write(
        &snap,
        "# grid = -1 1 2 -1 1 2 outflow\nt,x,v,f\n0,-0.5,0.5,-0.25\n",
    )
    .unwrap();
    let cfg = write_config(
        tmp.path(),
        "x_min = -1\nx_max = 1\nn_x = 2\nn_v = 2\nh = 0.1\nt_final = 0.2\ninitial = file:bad.csv\n",
    );
    let out = ktc().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn check_validates_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHOCK);
    let out = ktc().arg("check").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn riemann_exact_matches_the_initial_moments() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHOCK);
    let dir = tmp.path().join("exact");
    let out = ktc().arg("riemann-exact").arg(&cfg).env("KTC_OUTPUT_DIR", &dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("riemann_exact.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && *l != "t,x,u")
        .map(|l| l.split(',').map(|p| p.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 300);
    // The stationary shock keeps its initial profile.
    for r in &rows {
        let expect = if r[1] < 0.0 { 1.0 } else { -1.0 };
        assert_eq!(r[2], expect, "{r:?}");
    }
    assert!(!dir.join("moments.csv").exists());
}

#[test]
fn flux_table_and_snapshot_restart() {
    let tmp = tempfile::tempdir().unwrap();
    let table: String = (0..=40)
        .map(|k| {
            let v = -1.0 + k as f64 / 20.0;
            format!("{v},{}\n", v * v / 2.0)
        })
        .collect();
    fs::write(tmp.path().join("burgers.csv"), format!("v,A\n{table}")).unwrap();
    let base = "n_x = 60\nn_v = 40\nh = 0.05\nt_final = 0.25\nfields = kinetic\nsparse = false\n";
    let cfg = parse_config_in(&format!("{base}flux = table:burgers.csv\ninitial = riemann:-0.5,0.7,0\n"), tmp.path()).unwrap();
    let first = execute(&cfg, tmp.path()).unwrap();
    let last = first.snapshots.last().unwrap().clone();

    let cfg2 = parse_config_in(&format!("{base}initial = file:kinetic.csv\n"), tmp.path()).unwrap();
    let second = execute(&cfg2, &tmp.path().join("restart")).unwrap();
    let mut reloaded = second.snapshots[0].clone();
    reloaded.t = last.t;
    assert_eq!(reloaded, last);
}

#[test]
fn stripe_snapshot_matches_the_analytic_support() {
    let tmp = tempfile::tempdir().unwrap();
    let (h, eps) = (0.1, 0.2);
    let delta = stripe_width(eps);
    let body = format!(
        "x_min = -0.1\nx_max = 0.1\nn_x = 80\nn_v = 40\nh = {h}\nt_final = 0\nscheme = thresholded\nepsilon = {eps}\n\
         initial = stripe:{h},auto\nfields = kinetic\n"
    );
    let cfg = parse_config_in(&body, tmp.path()).unwrap();
    let summary = execute(&cfg, tmp.path()).unwrap();
    assert_eq!(summary.snapshots.len(), 1);
    let states = read_kinetic(BufReader::new(fs::File::open(tmp.path().join("kinetic.csv")).unwrap())).unwrap();
    let s = &states[0];
    let g = *s.grid();
    let c = 1.0 - delta;
    let mut nonzero = 0;
    for i in 0..g.n_x() {
        let (xl, xr) = (g.x_edge(i), g.x_edge(i + 1));
        for j in 0..g.n_v() {
            let (a, b) = (g.v_edge(j), g.v_edge(j + 1));
            // Positive-area overlap of the cell with the stripe support.
            let expected = if a >= 0.0 {
                ((b.min(1.0) - c).max(0.0) * h) > xl
            } else {
                ((a.max(-1.0) + c).min(0.0) * h) < xr
            };
            let f = s.get(i, j);
            assert_eq!(f != 0.0, expected, "cell ({i}, {j}) f = {f}");
            if expected {
                nonzero += 1;
                assert_eq!(f.signum(), if a >= 0.0 { 1.0 } else { -1.0 });
            }
        }
    }
    assert!(nonzero > 0);
}
