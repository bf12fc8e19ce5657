use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn crsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crsq")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = crsq(args);
    assert!(
        out.status.success(),
        "crsq {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/corpus")
        .join(name)
        .display()
        .to_string()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn select_into(out: &str) {
    ok(&[
        "select",
        "--meta",
        &corpus("meta.jsonl"),
        "--reviews",
        &corpus("reviews.jsonl"),
        "--categories",
        &corpus("categories.txt"),
        "--out",
        out,
    ]);
}

#[test]
fn select_finds_the_planted_positives() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "candidates.jsonl");
    select_into(&out);
    let ids: Vec<String> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            format!("{}#{}", v["review_id"].as_str().unwrap(), v["sentence_index"])
        })
        .collect();
    let expected: Vec<String> = fs::read_to_string(corpus("expected_candidates.txt"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(ids.len(), 8);
    assert_eq!(ids, expected);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{out}.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "select");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["versions"]["crsq"].is_string());
    assert_eq!(manifest["seed"], 0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (p(dir.path(), "a.jsonl"), p(dir.path(), "b.jsonl"));
    select_into(&a);
    select_into(&b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    for name in ["s1.jsonl", "s2.jsonl"] {
        ok(&["sample", "--candidates", &a, "--per-category", "2", "--seed", "9", "--out", &p(dir.path(), name)]);
    }
    let s1 = fs::read(p(dir.path(), "s1.jsonl")).unwrap();
    assert_eq!(s1, fs::read(p(dir.path(), "s2.jsonl")).unwrap());
    assert_eq!(String::from_utf8(s1).unwrap().lines().count(), 4);
}

#[test]
fn ingest_and_mine() {
    let dir = tempfile::tempdir().unwrap();
    let sentences = p(dir.path(), "sentences.jsonl");
    let args = ["--meta", &corpus("meta.jsonl"), "--reviews", &corpus("reviews.jsonl"), "--categories", &corpus("categories.txt")];
    ok(&[&["ingest"][..], &args, &["--out", &sentences]].concat());
    assert_eq!(fs::read_to_string(&sentences).unwrap().lines().count(), 50);
    let lex = p(dir.path(), "lexicons.tsv");
    ok(&[&["mine-aspects"][..], &args, &["--out", &lex]].concat());
    let text = fs::read_to_string(&lex).unwrap();
    assert!(text.starts_with("# category: Bikes\n"), "{text}");
    assert!(text.contains("tire\t"));
    // the mined file drives selection to the same result
    let (a, b) = (p(dir.path(), "a.jsonl"), p(dir.path(), "b.jsonl"));
    ok(&[&["select"][..], &args, &["--lexicons", &lex, "--out", &a]].concat());
    select_into(&b);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn dataset_flow_generate_evaluate_compare() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "data.tsv");
    ok(&["synth", "dataset", "--out", &data]);
    let stats = String::from_utf8(ok(&["dataset-stats", "--dataset", &data]).stdout).unwrap();
    assert!(stats.starts_with("records\t1115\napplicable\t838\nn/a\t277 (24.8%)\n"), "{stats}");
    assert!(stats.contains("Birdhouses\t15\t"));

    let (train, test) = (p(dir.path(), "train.tsv"), p(dir.path(), "test.tsv"));
    ok(&["split", "--dataset", &data, "--train-out", &train, "--test-out", &test]);
    let rows = |f: &str| fs::read_to_string(f).unwrap().lines().count() - 1;
    assert_eq!((rows(&train), rows(&test)), (892, 223));

    let q3 = p(dir.path(), "q3.tsv");
    ok(&["reduce", "--train", &train, "--questions", "q3", "--out", &q3]);
    let s = String::from_utf8(ok(&["dataset-stats", "--dataset", &q3, "--lenient", "--json"]).stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["questions"].as_u64().unwrap(), v["applicable"].as_u64().unwrap() * 3);

    let generated = p(dir.path(), "generated.jsonl");
    ok(&["generate", "--input", &test, "--engine", "template", "--out", &generated]);
    assert_eq!(fs::read_to_string(&generated).unwrap().lines().count(), 223);
    let report = p(dir.path(), "report.json");
    let text = String::from_utf8(
        ok(&["evaluate", "--references", &test, "--predictions", &generated, "--out", &report]).stdout,
    )
    .unwrap();
    assert!(text.starts_with("Accuracy\t"));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for key in ["accuracy", "bleu4", "rouge_l"] {
        let x = r[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x), "{key} = {x}");
    }
    assert_eq!(r["n_test"], 223);

    let replay = p(dir.path(), "replay.json");
    let text = String::from_utf8(
        ok(&["evaluate", "--references", &test, "--first-reference", "--out", &replay]).stdout,
    )
    .unwrap();
    assert!(text.starts_with("Accuracy\t1.0000\nBLEU-4\t1.0000\nROUGE-L\t1.0000\n"), "{text}");

    let table = String::from_utf8(
        ok(&["compare", &format!("template={report}"), &format!("replay={replay}")]).stdout,
    )
    .unwrap();
    assert!(table.starts_with("metric\ttemplate\treplay\nAccuracy\t"));
    assert_eq!(table.lines().count(), 4);

    let index = p(dir.path(), "index.txt");
    ok(&["index", "--questions", &train, "--out", &index]);
    let hits = String::from_utf8(ok(&["query", "--index", &index, "-k", "3", "camping with kids"]).stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&hits).unwrap();
    assert!(v["ranked"].as_array().unwrap().len() <= 3);
}

#[test]
fn adapter_engine_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cands = p(dir.path(), "c.jsonl");
    select_into(&cands);
    let out = p(dir.path(), "g.jsonl");
    let script = "while read -r line; do echo 'Would you like one for commuting?'; done";
    ok(&["generate", "--input", &cands, "--engine", "adapter", "--adapter-command", script, "--out", &out]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().all(|l| l.contains("\"provenance\":\"external-model\"")));

    // an adapter that answers nothing leaves a marked partial file
    let bad = p(dir.path(), "bad.jsonl");
    let r = crsq(&["generate", "--input", &cands, "--engine", "adapter", "--adapter-command", "exit 0", "--out", &bad]);
    assert_eq!(r.status.code(), Some(3));
    assert!(!Path::new(&bad).exists());
    assert!(Path::new(&format!("{bad}.partial")).exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(crsq(&["select"]).status.code(), Some(1));
    assert_eq!(crsq(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(crsq(&["--help"]).status.code(), Some(0));
    let missing = p(dir.path(), "missing.tsv");
    assert_eq!(crsq(&["dataset-stats", "--dataset", &missing]).status.code(), Some(2));
    let cfg = p(dir.path(), "bad.toml");
    fs::write(&cfg, "[aspects]\nmin_suport = 2\n").unwrap();
    let r = crsq(&["--config", &cfg, "dataset-stats", "--dataset", &missing]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("min_suport"));
    let no_adapter = crsq(&["generate", "--input", &corpus("expected_candidates.txt"), "--engine", "adapter", "--out", &p(dir.path(), "x")]);
    assert_ne!(no_adapter.status.code(), Some(0));
}

#[test]
fn config_values_apply_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "crsq.toml");
    fs::write(&cfg, "seed = 3\n[split]\ntrain_fraction = 0.5\n").unwrap();
    let data = p(dir.path(), "data.tsv");
    ok(&["synth", "dataset", "--out", &data]);
    let (train, test) = (p(dir.path(), "train.tsv"), p(dir.path(), "test.tsv"));
    ok(&["--config", &cfg, "split", "--dataset", &data, "--train-out", &train, "--test-out", &test]);
    let rows = |f: &str| fs::read_to_string(f).unwrap().lines().count() - 1;
    assert_eq!(rows(&train), 558);
    ok(&["--config", &cfg, "split", "--dataset", &data, "--train-fraction", "0.8", "--train-out", &train, "--test-out", &test]);
    assert_eq!(rows(&train), 892);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{train}.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config"]["split"]["train_fraction"], 0.8);
}
