use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sdncheck::report::RunReport;
use sdncheck::Verdict;
use tempfile::TempDir;

fn sdncheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdncheck"))
        .args(args)
        .output()
        .unwrap()
}

fn gen(dir: &Path, clients: u16, servers: u16) -> PathBuf {
    let path = dir.join(format!("topo-{clients}-{servers}.json"));
    let out = sdncheck(&[
        "gen-topo",
        "--clients",
        &clients.to_string(),
        "--servers",
        &servers.to_string(),
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    path
}

fn check(topo: &Path, controller: &str, extra: &[&str]) -> (i32, Option<RunReport>, String) {
    let report = topo.with_extension("report.json");
    let _ = std::fs::remove_file(&report);
    let mut args = vec![
        "check",
        "--topology",
        topo.to_str().unwrap(),
        "--controller",
        controller,
        "--output",
        report.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = sdncheck(&args);
    let parsed = std::fs::read_to_string(&report)
        .ok()
        .map(|t| RunReport::from_json(&t).unwrap());
    let text = format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    (out.status.code().unwrap(), parsed, text)
}

#[test]
fn gen_topo_four_by_two_shape() {
    let out = sdncheck(&["gen-topo", "--clients", "4", "--servers", "2"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["links"].as_array().unwrap().len(), 6);
    assert_eq!(doc["hosts"].as_array().unwrap().len(), 6);
    assert_eq!(doc["workload"]["sends"].as_array().unwrap().len(), 4);
}

#[test]
fn gen_topo_rejects_bad_bounds() {
    let out = sdncheck(&["gen-topo", "--clients", "0", "--servers", "1"]);
    assert_eq!(out.status.code(), Some(14));
}

#[test]
fn rr_naive_is_violated_with_listing() {
    let dir = TempDir::new().unwrap();
    let topo = gen(dir.path(), 4, 2);
    let (code, report, text) = check(&topo, "rr-naive", &["--por", "off"]);
    assert_eq!(code, 1);
    let report = report.unwrap();
    assert_eq!(report.verdict, Verdict::Violated);
    let cx = report.counterexample.as_ref().unwrap();
    assert!(!cx.trace.is_empty());
    assert!(text.contains("counterexample"));
    assert_eq!(
        text.lines().filter(|l| l.contains("-> [")).count(),
        cx.trace.len()
    );
}

#[test]
fn small_rebalance_holds() {
    let dir = TempDir::new().unwrap();
    let topo = gen(dir.path(), 2, 2);
    let (code, report, _) = check(
        &topo,
        "lc-rebalance",
        &["--por", "on", "--assume-invariant"],
    );
    assert_eq!(code, 0);
    let report = report.unwrap();
    assert_eq!(report.verdict, Verdict::Holds);
    assert!(report.por);
}

#[test]
fn state_bound_exits_two() {
    let dir = TempDir::new().unwrap();
    let topo = gen(dir.path(), 4, 2);
    let (code, report, _) = check(&topo, "lc-rebalance", &["--max-states", "100"]);
    assert_eq!(code, 2);
    assert_eq!(report.unwrap().verdict, Verdict::BoundExceeded);
}

#[test]
fn stdout_report_round_trips() {
    let dir = TempDir::new().unwrap();
    let topo = gen(dir.path(), 3, 2);
    let out = sdncheck(&[
        "check",
        "--topology",
        topo.to_str().unwrap(),
        "--controller",
        "rr-naive",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunReport::from_json(&text).unwrap().to_json(), text);
}

#[test]
fn missing_topology_writes_no_report() {
    let dir = TempDir::new().unwrap();
    let (code, report, text) = check(&dir.path().join("missing.json"), "rr-naive", &[]);
    assert_eq!(code, 10);
    assert!(report.is_none());
    assert!(text.contains("missing.json"));
}

#[test]
fn configuration_errors_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let topo = gen(dir.path(), 2, 1);

    let (code, report, text) = check(&topo, "round-robin", &[]);
    assert_eq!(code, 12);
    assert!(report.is_none());
    assert!(text.contains("round-robin"));

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"switches": [], "hosts": [], "links": [], "cluster_addr": 0, "extra": 1"#,
    )
    .unwrap();
    assert_eq!(check(&bad, "rr-naive", &[]).0, 11);

    let (code, _, text) = check(&topo, "rr-naive", &["--property", "no-such-property"]);
    assert_eq!(code, 13);
    assert!(text.contains("no-such-property"));

    let prop = dir.path().join("prop.json");
    std::fs::write(
        &prop,
        r#"{"invariant": {"op": "packet", "quantifier": "forall", "location": {"rcvq": {"host": 9}},
            "pred": {"op": "true"}}, "obligations": []}"#,
    )
    .unwrap();
    let (code, _, text) = check(&topo, "rr-naive", &["--property", prop.to_str().unwrap()]);
    assert_eq!(code, 13);
    assert!(text.contains("invariant"), "{text}");

    assert_eq!(check(&topo, "rr-naive", &["--por", "maybe"]).0, 14);
}

#[test]
fn property_file_is_checked() {
    let dir = TempDir::new().unwrap();
    let topo = gen(dir.path(), 2, 1);
    let prop = dir.path().join("false.json");
    std::fs::write(
        &prop,
        r#"{"invariant": {"op": "false"}, "obligations": []}"#,
    )
    .unwrap();
    let (code, report, _) = check(&topo, "lc-naive", &["--property", prop.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(report.unwrap().counterexample.unwrap().trace.is_empty());
}

#[test]
fn scaling_writes_a_table() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("scaling");
    let out = sdncheck(&[
        "scaling",
        "--clients",
        "2",
        "--servers",
        "1..2",
        "--timeout",
        "30",
        "--assume-invariant",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("scaling.json")).unwrap())
            .unwrap();
    let cells = doc["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for pair in cells.chunks(2) {
        assert_eq!(pair[0]["por"], false);
        assert_eq!(pair[1]["por"], true);
        assert_eq!(pair[0]["verdict"], "holds");
        assert!(pair[1]["states_explored"].as_u64() <= pair[0]["states_explored"].as_u64());
    }
}

#[test]
fn scaling_rejects_empty_ranges() {
    let dir = TempDir::new().unwrap();
    let out = sdncheck(&[
        "scaling",
        "--clients",
        "3..2",
        "--servers",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(14));
}
