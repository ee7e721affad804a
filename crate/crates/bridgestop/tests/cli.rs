//! End-to-end runs of the binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bridgestop::io::{Report, Table};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bridgestop"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Report {
    Report::parse(&fs::read_to_string(out.join("report.txt")).unwrap())
}

fn num(r: &Report, key: &str) -> f64 {
    r.get(key).unwrap_or_else(|| panic!("missing {key}")).parse().unwrap()
}

#[test]
fn classical_report_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve-classical"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert!((num(&r, "B") - 0.839924).abs() <= 1e-6);
    for f in ["solution.csv", "boundary.csv", "manifest.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.starts_with("command = solve-classical\n"));
    let t = Table::read(&dir.path().join("solution.csv")).unwrap();
    let (x, v) = (t.column("x").unwrap(), t.column("value").unwrap());
    for (x, v) in x.iter().zip(&v) {
        assert!(*v >= x - 1e-12);
    }
}

#[test]
fn gamma_threshold() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["solve-gamma", "--beta", "0.5"], dir.path()).status.success());
    assert_eq!(report(dir.path()).get("b"), Some("0.5"));
}

#[test]
fn beta_solve_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["solve-beta", "--beta", "1"], dir.path()).status.success());
    let r = report(dir.path());
    assert!((num(&r, "A") - 0.347582).abs() < 1e-5);
    assert!(num(&r, "residual_kink") <= 1e-6);
    assert!(num(&r, "value_0_0") <= num(&r, "classical_value_0_0"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_prior = run(&["simulate", "--prior", "lognormal"], dir.path());
    assert_eq!(bad_prior.status.code(), Some(1));
    let no_solver = run(&["solve-gamma", "--n", "2"], dir.path());
    assert_eq!(no_solver.status.code(), Some(1));
    let empty_bin = run(
        &["validate", "--prior", "gamma", "--paths", "200", "--bin", "40,41"],
        dir.path(),
    );
    assert_eq!(empty_bin.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty_bin.stderr).contains("insufficient data"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# gamma run\nbeta = 2\nseed = 5\n").unwrap();
    let out = dir.path().join("o");
    let cfg_arg = cfg.to_str().unwrap();
    assert!(run(&["solve-gamma", "--config", cfg_arg], &out).status.success());
    assert_eq!(num(&report(&out), "b"), 0.25);
    assert!(run(&["solve-gamma", "--config", cfg_arg, "--beta", "0.125"], &out).status.success());
    assert_eq!(num(&report(&out), "b"), 1.0);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("beta = 0.125\n") && manifest.contains("seed = 5\n"));
    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(run(&["solve-gamma", "--config", cfg_arg], &out).status.code(), Some(1));
}

#[test]
fn simulation_artifacts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--prior", "beta", "--paths", "3000", "--dt", "0.001", "--seed", "7", "--probe", "0.8,1.25",
        "--dump", "3",
    ];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&args, &a).status.success());
    assert!(run(&args, &b).status.success());
    for f in ["solution.csv", "paths.csv", "report.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // manifests differ only in the echoed output directory
    let settings = |dir: &Path| -> Vec<String> {
        let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
        text.lines().filter(|l| !l.starts_with("out = ")).map(str::to_string).collect()
    };
    assert_eq!(settings(&a), settings(&b));
    let t = Table::read(&a.join("solution.csv")).unwrap();
    assert_eq!(t.column("factor").unwrap(), vec![1.0, 0.8, 1.25]);
}

#[test]
fn simulate_with_tabulated_and_fixed_pinning() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("prior.csv");
    fs::write(&table, "r,density\n0.5,1\n1.0,2\n1.5,1\n").unwrap();
    let spec = format!("table:{}", table.display());
    let out = dir.path().join("t");
    let o = run(&["simulate", "--prior", &spec, "--paths", "2000", "--dt", "0.001"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(num(&report(&out), "estimate") > 0.0);
    let out = dir.path().join("f");
    assert!(run(&["simulate", "--prior", "fixed", "--paths", "2000", "--dt", "0.001"], &out)
        .status
        .success());
    assert!(report(&out).get("reference_value").is_some());
}

#[test]
fn urn_policy_export() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["urn", "--n", "1"], dir.path()).status.success());
    assert_eq!(num(&report(dir.path()), "value_0_0"), 0.5);
    let text = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(text.starts_with("k,s,action,value\n0,0,continue,0.5\n"));
    assert!(text.contains("1,1,stop,1\n"));
    let out = dir.path().join("mix");
    assert!(run(&["urn", "--n-prior", "2:0.5,4:0.5"], &out).status.success());
    assert!(num(&report(&out), "value_0_0") > 0.0);
}

/// Columns named `<prefix>_beta_*` in order.
fn beta_columns(t: &Table, prefix: &str) -> Vec<Vec<f64>> {
    t.header
        .iter()
        .filter(|h| h.starts_with(&format!("{prefix}_beta_")))
        .map(|h| t.column(h).unwrap())
        .collect()
}

#[test]
fn figure_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figures", "--case", "beta"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = Table::read(&dir.path().join("solution.csv")).unwrap();
    assert_eq!(t.header.first().map(String::as_str), Some("x"));
    assert_eq!(t.header.last().map(String::as_str), Some("V_classical"));
    let x = t.column("x").unwrap();
    assert!(x.windows(2).all(|w| w[0] < w[1]));
    let curves = beta_columns(&t, "V");
    assert_eq!(curves.len(), 4);
    let classical = t.column("V_classical").unwrap();
    for i in 0..x.len() {
        // the table is written to 12 digits
        let tol = 1e-11;
        for c in &curves {
            assert!(c[i] >= x[i].max(0.0) - tol, "V >= payoff at x={}", x[i]);
            assert!(c[i] <= classical[i] + tol);
        }
        for pair in curves.windows(2) {
            assert!(pair[1][i] <= pair[0][i] + tol, "higher beta lies lower at x={}", x[i]);
        }
    }
    let a = Table::read(&dir.path().join("beta_a.csv")).unwrap().column("A").unwrap();
    assert!(a.windows(2).all(|w| w[1] < w[0]));

    let out = dir.path().join("g");
    assert!(run(&["figures", "--case", "gamma"], &out).status.success());
    let t = Table::read(&out.join("gamma_values.csv")).unwrap();
    let curves = beta_columns(&t, "V");
    for i in 0..t.rows.len() {
        for pair in curves.windows(2) {
            assert!(pair[1][i] <= pair[0][i]);
        }
    }
    let b = Table::read(&out.join("gamma_boundary.csv")).unwrap();
    for row in &b.rows {
        assert!((row[1] - 0.5 / (2.0 * row[0]).sqrt()).abs() < 1e-11);
    }

    let out = dir.path().join("f");
    assert!(run(&["figures", "--case", "filter"], &out).status.success());
    let t = Table::read(&out.join("filter_values.csv")).unwrap();
    let x = t.column("x").unwrap();
    for f in beta_columns(&t, "f") {
        assert!(f.iter().all(|&v| v > 0.0));
    }
    for g in beta_columns(&t, "minus_x_f") {
        for i in 0..x.len() {
            assert!(g[i] * x[i] < 0.0, "drift points toward zero");
        }
    }
}
