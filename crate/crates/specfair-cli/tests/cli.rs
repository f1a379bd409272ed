//! End-to-end checks of the `specfair` binary: exit codes, file outputs,
//! config echo, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specfair"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("specfair-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn analyze_edge_list_file() {
    let dir = temp_dir("analyze");
    let edges = dir.join("edges.txt");
    fs::write(&edges, "# toy graph: K4\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    let out_dir = dir.join("out");
    let out = run(&[
        "analyze",
        "--graph",
        &format!("file:{}", edges.display()),
        "--a",
        "1",
        "--h0",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let report_path = out_dir.join("analyze_file-edges.json");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["graph"]["n"], 4);
    assert_eq!(report["graph"]["m"], 6);
    // Complete graphs are perfectly fair under any SLA.
    assert_eq!(report["fairness"]["I"].as_f64().unwrap(), 0.0);
    assert!(out_dir.join("manifest.json").exists());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn analyze_is_deterministic() {
    let dir = temp_dir("determinism");
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out_dir in [&a, &b] {
        let out = run(&[
            "analyze",
            "--graph",
            "ba:n=60,m=2",
            "--seed",
            "5",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    let name = "analyze_ba-n60-m2-s5.json";
    assert_eq!(
        fs::read(a.join(name)).unwrap(),
        fs::read(b.join(name)).unwrap(),
        "same config must produce bit-identical reports"
    );
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn phase_diagram_writes_contracted_header() {
    let dir = temp_dir("phase");
    let out = run(&[
        "phase-diagram",
        "--a",
        "0.1",
        "--a",
        "10",
        "--lambda2",
        "0.01",
        "--lambda2",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = fs::read_to_string(dir.join("phase.csv")).unwrap();
    assert!(text.starts_with("# config_hash: "));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "a,lambda2,c_lambda2,gamma,regime");
    assert_eq!(lines.count(), 4);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn envelope_emits_constants_and_summary() {
    let dir = temp_dir("envelope");
    let out = run(&[
        "envelope",
        "--graph",
        "er:n=60,p=0.1",
        "--graph",
        "ws:n=60,k=4,rw=0.2",
        "--graph",
        "path:n=60",
        "--graph",
        "ba:n=60,m=2",
        "--seeds",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fit breach rate: 0.00%"), "stdout: {stdout}");
    let constants: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("constants.json")).unwrap()).unwrap();
    assert!(constants["C"].as_f64().unwrap() > 0.0);
    assert!(constants["c"].as_f64().unwrap() > 0.0);
    let envelope = fs::read_to_string(dir.join("envelope.csv")).unwrap();
    let header = envelope.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "graph_id,model,n,lambda2,r_star,a,h0,H,gamma,x,I,ln_I,bound_I,breach"
    );
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn intervene_zero_steps_records_initial_state_only() {
    let dir = temp_dir("intervene0");
    let out = run(&[
        "intervene",
        "--graph",
        "ba:n=40,m=2",
        "--steps",
        "0",
        "--strategy",
        "fiedler",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = fs::read_to_string(dir.join("trajectory_fiedler.csv")).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("step,"))
        .collect();
    assert_eq!(rows.len(), 1, "only the step-0 row: {rows:?}");
    assert!(rows[0].starts_with("0,fiedler,,,"), "row: {}", rows[0]);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn certify_writes_rows_for_each_graph() {
    let dir = temp_dir("certify");
    let out = run(&[
        "certify",
        "--graph",
        "er:n=50,p=0.12",
        "--graph",
        "ba:n=50,m=2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = fs::read_to_string(dir.join("certify.csv")).unwrap();
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("graph_id,"))
        .count();
    assert_eq!(rows, 2);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn reverse_with_explicit_constants() {
    let dir = temp_dir("reverse");
    let constants = dir.join("constants.json");
    fs::write(
        &constants,
        r#"{"C": 0.2, "c": 5.0, "C_deg": 0.5, "fit_provenance": "test"}"#,
    )
    .unwrap();
    let out = run(&[
        "reverse",
        "--graph",
        "ws:n=80,k=4,rw=0.1",
        "--target",
        "0.03",
        "--target",
        "0.02",
        "--steps",
        "5",
        "--constants",
        constants.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = fs::read_to_string(dir.join("reverse_h0.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "target_I,gamma,h0_theoretical,h0_formula,h0_empirical,ordering_ok"
    );
    assert!(dir.join("reverse_lambda2.json").exists());
    assert!(dir.join("reverse_lambda2_trajectory.csv").exists());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_graph_spec_fails_with_nonzero_exit() {
    let out = run(&["analyze", "--graph", "er:n=10"]);
    assert!(!out.status.success());
    let out = run(&["analyze", "--graph", "mystery:n=10"]);
    assert!(!out.status.success());
}

#[test]
fn disconnected_component_is_reduced_to_lcc() {
    let dir = temp_dir("lcc");
    let edges = dir.join("two_parts.txt");
    // A triangle plus an isolated edge: analysis runs on the triangle.
    fs::write(&edges, "0 1\n1 2\n2 0\n3 4\n").unwrap();
    let out = run(&[
        "analyze",
        "--graph",
        &format!("file:{}", edges.display()),
        "--a",
        "1",
        "--h0",
        "2",
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_success(&out);
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.join("out").join("analyze_file-two_parts.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["graph"]["n"], 3);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = temp_dir("envvar");
    let out = bin()
        .args(["phase-diagram", "--a", "1", "--lambda2", "0.5"])
        .env("SPECFAIR_OUT", &dir)
        .output()
        .unwrap();
    assert_success(&out);
    assert!(dir.join("phase.csv").exists());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn caida_spec_parses_via_cli() {
    let dir = temp_dir("caida");
    let rel = dir.join("as-rel.txt");
    fs::write(&rel, "# serial-1\n1|2|-1\n2|3|0\n3|1|0\n4|1|-1\n").unwrap();
    let out = run(&[
        "analyze",
        "--graph",
        &format!("caida:{}", rel.display()),
        "--a",
        "1",
        "--h0",
        "2",
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_success(&out);
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.join("out").join("analyze_file-as-rel.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["graph"]["n"], 4);
    assert_eq!(report["graph"]["m"], 4);
    fs::remove_dir_all(&dir).unwrap();
}

fn read_csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|s| s.to_string())
        .collect()
}

#[test]
fn intervene_trajectories_cover_all_strategies() {
    let dir = temp_dir("intervene-all");
    let out = run(&[
        "intervene",
        "--graph",
        "ba:n=50,m=2",
        "--steps",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    for strategy in ["fiedler", "random", "min_degree", "betweenness"] {
        let rows = read_csv_rows(&dir.join(format!("trajectory_{strategy}.csv")));
        assert_eq!(rows.len(), 4, "{strategy}: step 0 plus 3 steps");
    }
    fs::remove_dir_all(&dir).unwrap();
}
