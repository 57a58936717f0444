//! The `dslice` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GUARDED: &str = "t = a;\nif (t > 2) {\n  u = b + 1;\n  v = u * 2;\n}\nw = t;\n";

fn dslice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dslice")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn slice_prints_source_and_labels() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "g.mini", GUARDED);
    let f = f.to_str().unwrap();

    let o = dslice(&["slice", "--kind", "backward", "--at", "end", "--vars", "v", f]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("if (t > 2)") && text.contains("v = u * 2;") && !text.contains("w = t"), "{text}");

    let o = dslice(&["slice", "--kind", "data", "--at", "after@4", "--vars", "v", "--labels-json", f]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("if (*)"), "{text}");
    let json: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(json["retained"], serde_json::json!([3, 4, 6]));
    assert_eq!(json["abstract_conds"], serde_json::json!([2]));
    assert_eq!(json["abstract_assigns"], serde_json::json!([]));
}

#[test]
fn unknown_variable_is_an_error() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "g.mini", GUARDED);
    let o = dslice(&["slice", "--at", "end", "--vars", "q", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`q`"));
}

#[test]
fn analyze_dumps() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "g.mini", GUARDED);
    let f = f.to_str().unwrap();

    let cfg = stdout(&dslice(&["analyze", "--dump-cfg", f]));
    assert!(cfg.starts_with("digraph"), "{cfg}");
    let du = stdout(&dslice(&["analyze", "--dump-du", "4", "u", f]));
    assert_eq!(du.trim(), "3:u");
    let cd = stdout(&dslice(&["analyze", "--dump-cd", f]));
    assert!(cd.lines().count() >= 2, "{cd}");
    let weak = stdout(&dslice(&["analyze", "--dump-cd", "--weak", f]));
    assert!(weak.lines().count() >= cd.lines().count());
    assert!(stdout(&dslice(&["analyze", "--dump-pdg", f])).starts_with("digraph"));

    assert_eq!(dslice(&["analyze", "--dump-du", "99", "u", f]).status.code(), Some(1));
    assert!(!dslice(&["analyze", f]).status.success());
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "g.mini", GUARDED);
    let f = f.to_str().unwrap();

    let corpus = corpus_dir().join("cruise.mini");
    let o = dslice(&["verify", "--at", "end", "--vars", "display", corpus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let sliced = stdout(&dslice(&["slice", "--at", "end", "--vars", "v", f]));
    let good = write(dir.path(), "good.mini", &sliced);
    let o = dslice(&["verify", "--at", "end", "--vars", "v", "--slice", good.to_str().unwrap(), f]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let mutated = write(dir.path(), "bad.mini", &sliced.replace("b + 1", "b + 2"));
    let o = dslice(&["verify", "--at", "end", "--vars", "v", "--slice", mutated.to_str().unwrap(), f]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));

    let data = ["verify", "--kind", "data", "--at", "after@4", "--vars", "v"];
    let o = dslice(&[&data[..], &[f]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = dslice(&[&data[..], &["--branch-budget", "0", f]].concat());
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn stats_csv() {
    let empty = TempDir::new().unwrap();
    let o = dslice(&["stats", empty.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "program,nodes,slices,bs,ds,cs,bs_pct,ds_pct,cs_pct\n");

    let corpus = corpus_dir();
    let run = || stdout(&dslice(&["--seed", "5", "stats", corpus.to_str().unwrap()]));
    let first = run();
    assert_eq!(first.lines().count(), 22);
    assert_eq!(first, run());
    assert!(first.lines().last().unwrap().starts_with("Overall,"));
}
