use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FIXTURE: &str = "\
IL-2\tB-A
gene\tI-A
binds\tO
the\tO
Rel\tB-B

Rel\tB-B
acts\tO
on\tO
IL-2\tB-A
gene\tI-A

the\tO
IL-2\tB-A
gene\tI-A
is\tO
active\tO

Rel\tB-B
binds\tO
Rel\tB-B

IL-2\tB-A
acts\tO

the\tO
Rel\tB-B
is\tO
active\tO

IL-2\tB-A
gene\tI-A
acts\tO
on\tO
Rel\tB-B

on\tO
the\tO
IL-2\tB-A

Rel\tB-B
is\tO
the\tO
IL-2\tB-A
gene\tI-A

active\tO
Rel\tB-B
binds\tO
the\tO

";

fn picrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_picrf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = picrf(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        let dir = Dir(TempDir::new().unwrap());
        dir.write("train.conll", FIXTURE);
        dir
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, text: &str) {
        fs::write(self.path(name), text).unwrap();
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }

    fn train(&self, order: &str, model: &str) {
        ok(&["train", "--train", &self.arg("train.conll"), "--order", order, "--out", &self.arg(model)]);
    }
}

fn state_line(model: &Path) -> String {
    fs::read_to_string(model)
        .unwrap()
        .lines()
        .find(|l| l.starts_with("states "))
        .unwrap()
        .to_string()
}

fn last_column(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.rsplit('\t').next().unwrap().to_string())
        .collect()
}

#[test]
fn model_files_record_state_counts() {
    let dir = Dir::new();
    dir.train("pre-induced", "pre.model");
    assert_eq!(state_line(&dir.path("pre.model")), "states 7 effective 7");
    dir.train("second", "second.model");
    assert_eq!(state_line(&dir.path("second.model")), "states 30 effective 25");
    dir.train("first", "first.model");
    assert_eq!(state_line(&dir.path("first.model")), "states 5 effective 5");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = Dir::new();
    let out = picrf(&["train", "--train", &dir.arg("train.conll"), "--order", "third", "--out", &dir.arg("m")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(picrf(&["train", "--order", "first"]).status.code(), Some(2));
    assert_eq!(picrf(&["bench"]).status.code(), Some(2));
    assert_eq!(picrf(&["eval", "--gold", "x"]).status.code(), Some(2));
    assert_eq!(picrf(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(picrf(&["--help"]).status.code(), Some(0));
}

#[test]
fn tagging_reproduces_gold_and_is_deterministic() {
    let dir = Dir::new();
    for order in ["first", "second", "pre-induced"] {
        let model = format!("{order}.model");
        dir.train(order, &model);
        for out in ["a.conll", "b.conll"] {
            ok(&["tag", "--model", &dir.arg(&model), "--input", &dir.arg("train.conll"), "--output", &dir.arg(out)]);
        }
        let tagged = dir.read("a.conll");
        assert_eq!(tagged, dir.read("b.conll"), "{order}: output differs between runs");
        assert!(!tagged.contains("[O]"), "{order}: carrier label leaked");
        assert_eq!(tagged, FIXTURE, "{order}: separable fixture not reproduced");
    }
}

#[test]
fn tagging_accepts_token_only_input() {
    let dir = Dir::new();
    dir.train("pre-induced", "m");
    dir.write("tokens.txt", "Rel\nbinds\nthe\nIL-2\ngene\n");
    ok(&["tag", "--model", &dir.arg("m"), "--input", &dir.arg("tokens.txt"), "--output", &dir.arg("out")]);
    assert_eq!(last_column(&dir.read("out")), ["B-B", "O", "O", "B-A", "I-A"]);
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = Dir::new();
    dir.train("first", "m");
    let model = dir.read("m").replacen("picrf-model 1", "picrf-model 99", 1);
    dir.write("future.model", &model);
    let out = picrf(&["tag", "--model", &dir.arg("future.model"), "--input", &dir.arg("train.conll"), "--output", &dir.arg("o")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));

    dir.write("bad.conll", "IL-2\tB-A\njust_one_column\n");
    let out = picrf(&["train", "--train", &dir.arg("bad.conll"), "--out", &dir.arg("x")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    dir.write("short.conll", "IL-2\tB-A\n\n");
    let out = picrf(&["eval", "--gold", &dir.arg("train.conll"), "--pred", &dir.arg("short.conll")]);
    assert_eq!(out.status.code(), Some(1));
}

fn eval_pair(dir: &Dir, gold: &[&str], pred: &[&str]) -> String {
    let as_conll = |labels: &[&str]| {
        let mut s: String = labels
            .iter()
            .enumerate()
            .map(|(i, l)| format!("w{i}\t{l}\n"))
            .collect();
        s.push('\n');
        s
    };
    dir.write("gold.conll", &as_conll(gold));
    dir.write("pred.conll", &as_conll(pred));
    let out = ok(&["eval", "--gold", &dir.arg("gold.conll"), "--pred", &dir.arg("pred.conll")]);
    let text = String::from_utf8(out.stdout).unwrap();
    text.lines().find(|l| l.starts_with("overall")).unwrap().to_string()
}

fn overall_prf(line: &str) -> (f64, f64, f64) {
    let v: Vec<f64> = line.split_whitespace().skip(4).map(|x| x.parse().unwrap()).collect();
    (v[0], v[1], v[2])
}

#[test]
fn eval_matches_hand_computed_scores() {
    let dir = Dir::new();
    let perfect = overall_prf(&eval_pair(&dir, &["B-A", "I-A", "O"], &["B-A", "I-A", "O"]));
    assert_eq!(perfect, (1.0, 1.0, 1.0));
    let boundary = overall_prf(&eval_pair(&dir, &["B-A", "I-A"], &["B-A", "O"]));
    assert_eq!(boundary, (0.0, 0.0, 0.0));
    let partial = overall_prf(&eval_pair(
        &dir,
        &["B-A", "O", "B-B", "O", "O"],
        &["B-A", "B-B", "B-A", "B-A", "O"],
    ));
    assert_eq!(partial, (0.25, 0.5, 0.3333));
}

#[test]
fn eval_with_model_and_per_type_rows() {
    let dir = Dir::new();
    dir.train("pre-induced", "m");
    let out = ok(&[
        "eval",
        "--gold",
        &dir.arg("train.conll"),
        "--model",
        &dir.arg("m"),
        "--input",
        &dir.arg("train.conll"),
        "--per-type",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("A ")));
    assert!(text.lines().any(|l| l.starts_with("B ")));
    assert_eq!(overall_prf(text.lines().find(|l| l.starts_with("overall")).unwrap()).2, 1.0);
}

#[test]
fn transform_round_trips() {
    let dir = Dir::new();
    dir.write("ab.conll", "x\tB-A\ny\tO\nz\tO\nw\tB-B\n\n");
    ok(&["transform", "--input", &dir.arg("ab.conll"), "--output", &dir.arg("ind.conll"), "--direction", "induce"]);
    assert_eq!(last_column(&dir.read("ind.conll")), ["B-A", "A[O]", "A[O]", "B-B"]);

    ok(&["transform", "--input", &dir.arg("train.conll"), "--output", &dir.arg("i"), "--direction", "induce"]);
    ok(&["transform", "--input", &dir.arg("i"), "--output", &dir.arg("r"), "--direction", "revert"]);
    assert_eq!(dir.read("r"), FIXTURE);

    ok(&["transform", "--input", &dir.arg("train.conll"), "--output", &dir.arg("same"), "--direction", "revert"]);
    assert_eq!(dir.read("same"), FIXTURE);
}

#[test]
fn synth_is_reproducible() {
    let dir = Dir::new();
    for name in ["a", "b"] {
        ok(&["synth", "--seed", "7", "--sentences", "50", "--out", &dir.arg(name)]);
    }
    assert_eq!(dir.read("a"), dir.read("b"));
    ok(&["synth", "--seed", "8", "--sentences", "50", "--out", &dir.arg("c")]);
    assert_ne!(dir.read("a"), dir.read("c"));
}

#[test]
fn bench_timing_lists_every_order() {
    let dir = Dir::new();
    let out = ok(&[
        "bench",
        "--timing",
        "--sentences",
        "60",
        "--warmup",
        "1",
        "--measured",
        "3",
        "--records",
        &dir.arg("timing.jsonl"),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    for order in ["first", "pre-induced", "second"] {
        assert!(text.lines().any(|l| l.starts_with(order)), "{order} missing:\n{text}");
    }
    assert_eq!(dir.read("timing.jsonl").lines().count(), 3);
}

#[test]
fn bench_comparison_grid_covers_every_cell() {
    let dir = Dir::new();
    let out = ok(&[
        "bench",
        "--train",
        &dir.arg("train.conll"),
        "--test",
        &dir.arg("train.conll"),
        "--orders",
        "first,pre-induced",
        "--feature-sets",
        "1,2",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = text.lines().filter(|l| l.starts_with("first") || l.starts_with("pre-induced")).count();
    assert_eq!(rows, 4, "{text}");
}
