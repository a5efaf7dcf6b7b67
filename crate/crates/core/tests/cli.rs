use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn htest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htest"))
        .args(args)
        .env_remove("HTEST_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn test_exits_one_on_reject_and_zero_on_accept() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.g", "3 3\n0 1\n1 2\n0 2\n");
    let path = write(dir.path(), "path.g", "4 3\n0 1\n1 2\n2 3\n");
    let o = htest(&[
        "test",
        "--graph",
        &tri,
        "--pattern",
        "triangle",
        "--eps",
        "0.1",
        "--reps",
        "50",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["verdict"]["decision"], "reject");
    let o = htest(&[
        "test",
        "--graph",
        &path,
        "--pattern",
        "triangle",
        "--reps",
        "50",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"]["decision"], "accept");
}

#[test]
fn test_transcript_matches_query_count() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "c5.g", "5 5\n0 1\n1 2\n2 3\n3 4\n0 4\n");
    let o = htest(&[
        "test",
        "--graph",
        &g,
        "--pattern",
        "p5",
        "--reps",
        "2",
        "--seed",
        "1",
        "--transcript",
    ]);
    let v = json(&o);
    let log = &v["verdict"]["log"];
    let total = log["neighbor_queries"].as_u64().unwrap() + log["vertex_samples"].as_u64().unwrap();
    assert_eq!(log["transcript"].as_array().unwrap().len() as u64, total);
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.g", "3 1\n0 7\n");
    let good = write(dir.path(), "good.g", "2 1\n0 1\n");
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["test", "--graph", &good, "--pattern", "triangle", "--bogus"],
        vec!["test", "--graph", "/nonexistent/g", "--pattern", "triangle"],
        vec!["test", "--graph", &bad, "--pattern", "triangle"],
        vec!["test", "--graph", &good, "--pattern", "nosuchpattern"],
        vec![
            "test",
            "--graph",
            &good,
            "--pattern",
            "triangle",
            "--eps",
            "0",
        ],
        vec![
            "test",
            "--graph",
            &good,
            "--pattern",
            "triangle",
            "--reps",
            "0",
        ],
        vec!["sweep", "--gen", "p5"],
        vec!["sweep", "--gen", "nosuchgen", "--sizes", "10"],
        vec!["treedepth", "--graph", &bad],
        vec!["gen", "--gen", "p5", "--sizes", "x"],
    ];
    for args in cases {
        let o = htest(&args);
        assert_eq!(o.status.code(), Some(2), "args {args:?}");
        assert!(!o.stderr.is_empty(), "args {args:?}");
    }
}

#[test]
fn help_exits_zero() {
    assert_eq!(htest(&["--help"]).status.code(), Some(0));
    assert_eq!(htest(&["test", "--help"]).status.code(), Some(0));
}

#[test]
fn treedepth_of_p4() {
    let dir = tempfile::tempdir().unwrap();
    let p4 = write(dir.path(), "p4.g", "4 3\n0 1\n1 2\n2 3\n");
    let o = htest(&["treedepth", "--graph", &p4]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("td=3"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn same_seed_same_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "g.g",
        "6 7\n0 1\n1 2\n2 0\n2 3\n3 4\n4 5\n5 3\n",
    );
    let runs: Vec<Vec<&str>> = vec![
        vec![
            "gen",
            "--gen",
            "planted:triangle",
            "--sizes",
            "60",
            "--seed",
            "3",
        ],
        vec![
            "gen",
            "--gen",
            "bounded:c4:5",
            "--sizes",
            "80",
            "--seed",
            "3",
        ],
        vec![
            "test",
            "--graph",
            &g,
            "--pattern",
            "triangle",
            "--reps",
            "3",
            "--seed",
            "9",
        ],
        vec![
            "test",
            "--graph",
            &g,
            "--pattern",
            "triangle",
            "--reps",
            "3",
            "--trials",
            "50",
            "--seed",
            "9",
        ],
        vec![
            "sweep", "--gen", "p5", "--sizes", "20,40", "--reps", "2", "--trials", "50", "--seed",
            "4",
        ],
        vec![
            "pipeline",
            "--graph",
            &g,
            "--pattern",
            "triangle",
            "--eps",
            "0.2",
            "--seed",
            "5",
        ],
        vec!["selfcheck", "--trials", "20", "--seed", "2"],
    ];
    for args in runs {
        let a = htest(&args);
        let b = htest(&args);
        assert_eq!(a.status.code(), b.status.code(), "{args:?}");
        assert!(!a.stdout.is_empty(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn jobs_do_not_change_results() {
    let one = htest(&[
        "sweep", "--gen", "p5", "--sizes", "30", "--reps", "2", "--trials", "200", "--jobs", "1",
        "--seed", "8",
    ]);
    let four = htest(&[
        "sweep", "--gen", "p5", "--sizes", "30", "--reps", "2", "--trials", "200", "--jobs", "4",
        "--seed", "8",
    ]);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.g", "3 2\n0 1\n1 2\n");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_htest"))
            .args(["test", "--graph", &g, "--pattern", "triangle"])
            .env("HTEST_SEED", "42")
            .output()
            .unwrap()
    };
    let a = run();
    assert_eq!(json(&a)["seed"], 42);
    assert_eq!(a.stdout, run().stdout);
}

#[test]
fn sweep_queries_are_identical_across_sizes() {
    let o = htest(&[
        "sweep",
        "--gen",
        "p5",
        "--sizes",
        "100,1000,10000",
        "--reps",
        "1",
        "--trials",
        "100",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some(htest_core::experiments::SWEEP_CSV_HEADER)
    );
    let queries: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(queries, vec!["63"; 3]);
}

#[test]
fn gen_writes_a_loadable_graph_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p5.g");
    let o = htest(&[
        "gen",
        "--gen",
        "p5",
        "--sizes",
        "23",
        "--seed",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let g = htest_core::graph::load_graph(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(g.n(), 23);
    assert_eq!(v["certificate"]["copies"].as_array().unwrap().len(), 10);
    assert_eq!(v["instance"]["certified"], true);
}

#[test]
fn pipeline_reports_stages() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "tris.g",
        "9 9\n0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n6 7\n7 8\n6 8\n",
    );
    for order in ["layered", "color-restrict"] {
        let o = htest(&[
            "pipeline",
            "--graph",
            &g,
            "--pattern",
            "triangle",
            "--eps",
            "0.2",
            "--order",
            order,
            "--seed",
            "1",
        ]);
        assert_eq!(o.status.code(), Some(0), "{order}");
        let v = json(&o);
        assert_eq!(v["copies"], 3);
        assert!(v["stages"]
            .as_array()
            .unwrap()
            .iter()
            .all(|s| s["holds"] == true));
    }
}
