use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn topt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topt")).args(args).output().unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn header(path: &Path) -> csv::StringRecord {
    csv::Reader::from_path(path).unwrap().headers().unwrap().clone()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let i = header(path).iter().position(|h| h == name).unwrap();
    rows(path).iter().map(|r| r[i].to_string()).collect()
}

#[test]
fn pendulum_run_writes_a_result_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = topt(&["run", "--preset", "pendulum", "--M", "1000", "--out", out.to_str().unwrap(), "--samples", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let results = out.join("results.csv");
    let cols: Vec<String> = header(&results).iter().map(String::from).collect();
    assert_eq!(
        cols,
        ["preset", "M", "n", "N", "T_k", "T_ref", "abs_error", "newton_steps", "damped_steps", "cg_steps_total", "status", "wall_time"]
    );
    let t: f64 = column(&results, "T_k")[0].parse().unwrap();
    assert!((t - 5.729975).abs() < 1e-5);
    let err: f64 = column(&results, "abs_error")[0].parse().unwrap();
    assert!((err - (11.0 * std::f64::consts::PI / 6.0 - t)).abs() < 1e-12);
    assert_eq!(column(&results, "status")[0], "converged");
    assert_eq!(rows(&out.join("value_function.csv")).len(), 6);
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    let steps = trace["runs"][0]["steps"].as_array().unwrap();
    assert_eq!(steps.len() - 1, column(&results, "newton_steps")[0].parse::<usize>().unwrap());
    assert!(!trace["runs"][0]["final_inner_log"].as_array().unwrap().is_empty());
}

#[test]
fn config_errors_exit_3_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = topt(&["run", "--preset", "heat", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let diag: serde_json::Value = serde_json::from_slice(o.stderr.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(diag["kind"], "config");
    assert!(!out.exists());

    let o = topt(&["run", "--preset", "heat-distributed", "--n", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, "preset = \"pendulum\"\n[pendulum]\nM_list = []\n").unwrap();
    let o = topt(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    fs::write(&cfg, "[pendulum]\nnot_a_key = 1\n").unwrap();
    let o = topt(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn exhausted_newton_budget_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[pendulum]\nM = 200\nmax_steps = 1\n").unwrap();
    let out = dir.path().join("o");
    let o = topt(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(column(&out.join("results.csv"), "status")[0], "no-convergence");
}

#[test]
fn temporal_sweep_reports_first_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = topt(&["sweep", "--preset", "pendulum", "--M", "100,1000,10000", "--jobs", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let errors: Vec<f64> = column(&out.join("results.csv"), "abs_error").iter().map(|e| e.parse().unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
    let orders = out.join("orders.csv");
    assert_eq!(column(&orders, "axis"), ["temporal", "temporal"]);
    for o in column(&orders, "order") {
        let o: f64 = o.parse().unwrap();
        assert!((o - 1.0).abs() <= 0.15, "{o}");
    }
}

#[test]
fn spatial_sweep_uses_the_finest_run_as_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = topt(&["sweep", "--preset", "heat-distributed", "--M", "10", "--n", "4,8,16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let results = out.join("results.csv");
    let t: Vec<String> = column(&results, "T_k");
    assert!(column(&results, "T_ref").iter().all(|r| r == &t[2]));
    assert_eq!(column(&results, "N"), ["25", "81", "289"]);
    let orders = out.join("orders.csv");
    assert_eq!(column(&orders, "axis"), ["spatial"]);
    let trace = fs::read_to_string(out.join("trace.json")).unwrap();
    assert!(trace.contains("finest run of the sweep (M=10, n=16)"));
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let o = topt(&["sweep", "--preset", "heat-neumann", "--M", "10,20", "--n", "4", "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        out
    };
    let (a, b) = (run("a", "1"), run("b", "2"));
    let strip = |p: &Path| -> Vec<Vec<String>> {
        let wall = header(p).iter().position(|h| h == "wall_time").unwrap();
        rows(p).iter().map(|r| r.iter().enumerate().filter(|(i, _)| *i != wall).map(|(_, v)| v.to_string()).collect()).collect()
    };
    assert_eq!(strip(&a.join("results.csv")), strip(&b.join("results.csv")));
    assert_eq!(fs::read(a.join("trace.json")).unwrap(), fs::read(b.join("trace.json")).unwrap());
    assert_eq!(fs::read(a.join("orders.csv")).unwrap(), fs::read(b.join("orders.csv")).unwrap());
}

#[test]
fn printed_defaults_are_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = topt(&["defaults"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for section in ["[pendulum]", "[heat-distributed]", "[heat-neumann]"] {
        assert!(text.contains(section));
    }
    let cfg = dir.path().join("d.toml");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("o");
    let o = topt(&["run", "--config", cfg.to_str().unwrap(), "--M", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(topt(&["defaults", "--preset", "nope"]).status.code(), Some(3));
}
