use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const NET1: &str = "n=2\n00 -> 11\n01 -> 11\n10 -> 10\n11 -> 01\n";
const NET1_EXPR: &str = "# same network, by formulas\ny1 = !x1 | (x1 & !x2)\ny2 = !x1 | (x1 & x2)\n";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bin(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_asyncbasin")).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn in_process(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = asyncbasin_cli::run(std::iter::once("asyncbasin").chain(args.iter().copied()), &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn files() -> (TempDir, String, String) {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("net1.net");
    let expr = dir.path().join("net1.expr");
    std::fs::write(&table, NET1).unwrap();
    std::fs::write(&expr, NET1_EXPR).unwrap();
    (dir, table.display().to_string(), expr.display().to_string())
}

fn records(stdout: &str) -> Vec<Value> {
    stdout.lines().map(|l| serde_json::from_str(l).expect("one JSON object per line")).collect()
}

#[test]
fn fixed_points_of_net1() {
    let (_d, net, expr) = files();
    let r = bin(&["fixed-points", "--net", &net]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "10\n"), "{}", r.stderr);
    let r = bin(&["fixed-points", "--net", &expr, "--format", "expr"]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "10\n"));
}

#[test]
fn point_basins_of_net1() {
    let (_d, net, _) = files();
    let r = bin(&["basin", "--net", &net, "--set", "10", "--mode", "n"]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "10\n"));
    let r = bin(&["basin", "--net", &net, "--set", "10", "--mode", "p"]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "00,10\n"));
}

#[test]
fn invariance_is_an_exit_code() {
    let (_d, net, _) = files();
    let r = bin(&["invariant", "--net", &net, "--set", "00", "--mode", "n"]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("not n-invariant"));
    let r = in_process(&["invariant", "--net", &net, "--set", "01,11", "--mode", "p", "--json"]);
    assert_eq!(r.code, 0);
    assert_eq!(records(&r.stdout)[0]["invariant"], Value::Bool(true));
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let (d, net, _) = files();
    assert_eq!(bin(&["basin", "--net", &net, "--set", "10"]).code, 2);
    assert_eq!(bin(&["no-such-command"]).code, 2);
    assert_eq!(bin(&["fixed-points", "--net", "/nonexistent/file"]).code, 2);

    let broken = d.path().join("broken.net");
    std::fs::write(&broken, "n=2\n00 -> 11\n01 -> 11\n11 -> 01\n").unwrap();
    let r = bin(&["fixed-points", "--net", broken.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 4: missing state 10"), "{}", r.stderr);

    let r = bin(&["omega", "--net", &net, "--from", "00", "--schedule", "cycle 0:10 ; period 1 ; start 0"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("coordinate 2 never fires"), "{}", r.stderr);
    assert_eq!(bin(&["omega", "--net", &net, "--from", "000", "--schedule", "cycle 0:11 ; period 1"]).code, 2);
    assert_eq!(bin(&["--help"]).code, 0);
}

#[test]
fn flows_from_literal_and_file() {
    let (d, net, _) = files();
    let sched = d.path().join("sync.sched");
    std::fs::write(&sched, "# synchronous\ncycle 0:11 ;\nperiod 1\n").unwrap();
    for s in ["cycle 0:11 ; period 1 ; start 0", sched.to_str().unwrap()] {
        let r = bin(&["omega", "--net", &net, "--from", "00", "--schedule", s]);
        assert_eq!((r.code, r.stdout.as_str()), (0, "01,11\n"), "{}", r.stderr);
    }
    let r = bin(&["orbit", "--net", &net, "--from", "00", "--schedule", "cycle 0:11 ; period 1", "--json"]);
    let rec = &records(&r.stdout)[0];
    assert_eq!(rec["record"], "orbit");
    assert_eq!(rec["orbit"], serde_json::json!(["00", "01", "11"]));
    assert_eq!(rec["tail_period"], "2");
}

#[test]
fn json_records_are_stable() {
    let (_d, net, _) = files();
    let r = bin(&["basin", "--net", &net, "--set", "10", "--mode", "p", "--json"]);
    let rec = &records(&r.stdout)[0];
    assert_eq!(rec["record"], "basin");
    assert_eq!(rec["members"], serde_json::json!(["00", "10"]));
    assert_eq!(rec["witnesses"].as_object().unwrap().len(), 2);

    let r = bin(&["attractors", "--net", &net, "--json"]);
    let recs = records(&r.stdout);
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|a| a["record"] == "attractor" && a["p_class"] == "partial"));

    let r = bin(&["omega-basin", "--net", &net, "--from", "10", "--schedule", "cycle 0:11 ; period 1", "--mode", "n", "--json"]);
    assert_eq!(records(&r.stdout)[0]["members"], serde_json::json!(["10"]));
}

#[test]
fn portrait_is_byte_stable_and_written_to_file() {
    let (d, net, _) = files();
    let a = bin(&["portrait", "--net", &net]);
    let b = bin(&["portrait", "--net", &net]);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.contains("\"00\" [label=<<U>0</U><U>0</U>>];"));
    let out: PathBuf = d.path().join("net1.dot");
    let r = bin(&["portrait", "--net", &net, "--out", out.to_str().unwrap()]);
    assert_eq!((r.code, r.stdout.as_str()), (0, ""));
    assert_eq!(std::fs::read_to_string(out).unwrap(), a.stdout);
}

#[test]
fn verify_and_oracle_agree_on_net1() {
    let (_d, net, _) = files();
    let r = bin(&["verify", "--net", &net, "--max-prefix", "2", "--max-cycle", "3", "--json"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let recs = records(&r.stdout);
    let summary = recs.last().unwrap();
    assert_eq!(summary["record"], "verify");
    assert_eq!(summary["failures"], 0);

    let r = bin(&["oracle", "--net", &net, "--grow", "8", "--set", "10", "--mode", "p", "--json"]);
    let recs = records(&r.stdout);
    assert!(recs.iter().filter(|x| x["record"] == "oracle_omegas").all(|x| x["matches_graph"] == true));
    assert_eq!(recs.last().unwrap()["members"], serde_json::json!(["00", "10"]));
}

#[test]
fn witness_search() {
    let r = bin(&["search-witness", "--all-nets", "2", "--inclusion", "omega", "--json"]);
    assert_eq!(r.code, 0);
    let rec = &records(&r.stdout)[0];
    assert_eq!(rec["record"], "inclusion_witness");
    assert_ne!(rec["inner"], rec["outer"]);

    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id.net");
    std::fs::write(&id, "n=1\n0 -> 0\n1 -> 1\n").unwrap();
    let r = bin(&["search-witness", "--net", id.to_str().unwrap(), "--inclusion", "orbit"]);
    assert_eq!(r.code, 1);
    assert_eq!(bin(&["search-witness", "--all-nets", "3", "--inclusion", "orbit"]).code, 2);
}
