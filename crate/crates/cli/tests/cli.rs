mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{MockServer, Repo};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satd-forge"))
        .args(args)
        .env("SATD_FORGE_API_KEY", "k")
        .env_remove("SATD_FORGE_JOBS")
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Two repositories with three repaid debts between them.
fn fixture(root: &Path) {
    for (name, n) in [("alpha", 1), ("beta", 2)] {
        let mut repo = Repo::init(&root.join("clones").join(name));
        let body = |i: usize| format!("def f{i}_{name}(x):\n    return x + {i}\n\n\n");
        let plain: String = (0..n).map(body).collect();
        repo.write("m.py", &plain);
        repo.commit("init");
        let debt: String = (0..n).map(|i| format!("def f{i}_{name}(x):\n    # TODO check x before adding {i}\n    return x + {i}\n\n\n")).collect();
        repo.write("m.py", &debt);
        repo.commit("debt");
        let paid: String = (0..n).map(|i| format!("def f{i}_{name}(x):\n    assert x is not None\n    return x + {i}\n\n\n")).collect();
        repo.write("m.py", &paid);
        repo.commit("repay");
    }
    std::fs::write(root.join("repos.txt"), "clones/alpha acme/alpha\nclones/beta acme/beta\n").unwrap();
}

#[test]
fn mine_filter_split_are_rerunnable() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    fixture(t);
    let records = t.join("records.jsonl");
    assert_eq!(code(&["mine", "--lang", "python", "--repos", &s(&t.join("repos.txt")), "--out", &s(&records)]), 0);
    let text = std::fs::read_to_string(&records).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.contains("\"user\":\"acme\"") && l.contains("\"line_before_deletion\":")));
    let first = std::fs::read(&records).unwrap();
    assert_eq!(code(&["mine", "--lang", "python", "--repos", &s(&t.join("repos.txt")), "--out", &s(&records)]), 0);
    assert_eq!(std::fs::read(&records).unwrap(), first, "mine is not byte-stable");

    let samples = t.join("samples.jsonl");
    let args = ["filter", "--repos", &s(&t.join("repos.txt")), "--records", &s(&records), "--out", &s(&samples)];
    assert_eq!(code(&args), 0);
    let stats = std::fs::read_to_string(t.join("samples.stats.tsv")).unwrap();
    assert!(stats.ends_with("token_limit\t3\n"), "{stats}");

    // Two repositories cannot fill three buckets.
    let out = run(&["split", "--dataset", &s(&samples), "--seed", "3", "--out", &s(&t.join("split"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn split_writes_three_files() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let mut lines = String::new();
    for repo in 0..6 {
        for k in 0..2 {
            lines.push_str(&format!(
                "{{\"user\":\"u\",\"project\":\"p{repo}\",\"file_path\":\"m.py\",\"creation_commit\":\"a\",\"deletion_commit\":\"b\",\"line_at_creation\":{k},\"line_before_deletion\":{k},\"satd_comment\":\"# TODO x y z\",\"language\":\"python\",\"method_before\":\"def f():\\n    # TODO x y z\\n    return 1\",\"method_after\":\"def f():\\n    return 2\"}}\n"
            ));
        }
    }
    std::fs::write(t.join("d.jsonl"), lines).unwrap();
    let out = t.join("split");
    let r = run(&["split", "--dataset", &s(&t.join("d.jsonl")), "--seed", "11", "--out", &s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let count = |f: &str| std::fs::read_to_string(out.join(f)).unwrap().lines().count();
    assert_eq!(count("train.jsonl") + count("validation.jsonl") + count("test.jsonl"), 12);
    assert!(count("validation.jsonl") >= 2 && count("test.jsonl") >= 2);
    let before = std::fs::read(out.join("train.jsonl")).unwrap();
    run(&["split", "--dataset", &s(&t.join("d.jsonl")), "--seed", "11", "--out", &s(&out)]);
    assert_eq!(std::fs::read(out.join("train.jsonl")).unwrap(), before);
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    std::fs::write(t.join("d.jsonl"), "").unwrap();
    assert_eq!(code(&["generate", "--dataset", &s(&t.join("d.jsonl")), "--endpoint", "stub:truth", "--template", "cot9", "--out", "x"]), 2);
    assert_eq!(code(&["evaluate", "--dataset", &s(&t.join("missing.jsonl")), "--generations", "g", "--out", "x"]), 2);
    assert_eq!(code(&["mine", "--repos", &s(&t.join("d.jsonl")), "--out", "x"]), 2, "missing --lang");
    assert_eq!(code(&["split", "--jobs", "0", "--dataset", &s(&t.join("d.jsonl")), "--out", "x"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    std::fs::write(t.join("bad.toml"), "lang = \"cobol\"\n").unwrap();
    assert_eq!(code(&["split", "--config", &s(&t.join("bad.toml"))]), 2);
}

#[test]
fn malformed_data_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    std::fs::write(t.join("d.jsonl"), "{\"user\": 1}\n").unwrap();
    let out = run(&["split", "--dataset", &s(&t.join("d.jsonl")), "--out", &s(t)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d.jsonl:1"));
}

#[test]
fn failing_endpoint_exits_4_and_parks_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let sample = "{\"user\":\"u\",\"project\":\"p\",\"file_path\":\"m.py\",\"creation_commit\":\"a\",\"deletion_commit\":\"b\",\"line_at_creation\":2,\"line_before_deletion\":2,\"satd_comment\":\"# TODO x y z\",\"language\":\"python\",\"method_before\":\"def f():\\n    # TODO x y z\\n    return 1\",\"method_after\":\"def f():\\n    return 2\"}\n";
    std::fs::write(t.join("d.jsonl"), sample).unwrap();
    let server = MockServer::start(|_| (503, "{\"error\":\"overloaded\"}".into()));
    let out = run(&[
        "judge", "--dataset", &s(&t.join("d.jsonl")), "--endpoint", &server.url, "--model", "m", "--retry-limit", "2",
        "--out", &s(&t.join("kept.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(t.join("kept.pending.jsonl")).unwrap(), sample);
    assert_eq!(server.hits.load(std::sync::atomic::Ordering::SeqCst), 2);

    let denied = MockServer::start(|_| (401, "{}".into()));
    let out = run(&[
        "generate", "--dataset", &s(&t.join("d.jsonl")), "--endpoint", &denied.url, "--model", "m", "--template", "cot1",
        "--out", &s(&t.join("gen.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(denied.hits.load(std::sync::atomic::Ordering::SeqCst), 1, "auth failures are not retried");
}

#[test]
fn evaluate_with_truth_stub_scores_full_marks() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let sample = "{\"user\":\"u\",\"project\":\"p\",\"file_path\":\"m.py\",\"creation_commit\":\"a\",\"deletion_commit\":\"b\",\"line_at_creation\":2,\"line_before_deletion\":2,\"satd_comment\":\"# TODO x y z\",\"language\":\"python\",\"method_before\":\"def f():\\n    # TODO x y z\\n    return 1\",\"method_after\":\"def f():\\n    return 2\"}\n";
    std::fs::write(t.join("d.jsonl"), sample).unwrap();
    let d = s(&t.join("d.jsonl"));
    assert_eq!(code(&["generate", "--dataset", &d, "--endpoint", "stub:truth", "--template", "mastropaolo-t2", "--out", &s(&t.join("g.jsonl"))]), 0);
    assert_eq!(code(&["evaluate", "--dataset", &d, "--generations", &s(&t.join("g.jsonl")), "--out", &s(&t.join("r.jsonl"))]), 0);
    assert_eq!(code(&["report", "--runs", &s(&t.join("r.jsonl")), "--out", &s(&t.join("rep"))]), 0);
    let table = std::fs::read_to_string(t.join("rep/aggregate.tsv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(&row[..5], ["stub:truth", "Mastropaolo-T2", "all", "1", "100.00"]);
    let first = std::fs::read(t.join("rep/aggregate.tsv")).unwrap();
    assert_eq!(code(&["report", "--runs", &s(&t.join("r.jsonl")), "--out", &s(&t.join("rep"))]), 0);
    assert_eq!(std::fs::read(t.join("rep/aggregate.tsv")).unwrap(), first);
    let oracle = std::fs::read_to_string(t.join("rep/oracle.tsv")).unwrap();
    assert_eq!(oracle, "Model\tOracleEM\tBestTemplate\tBestEM\nstub:truth\t100.00\tMastropaolo-T2\t100.00\n");
}
