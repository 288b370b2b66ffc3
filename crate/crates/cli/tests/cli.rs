use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn lkw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lkw")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name).display().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p: PathBuf = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const C3: &str = "rel E 2\nuniverse 3\nE 0 1\nE 1 2\nE 2 0\n";
const C4: &str = "rel E 2\nuniverse 4\nE 0 1\nE 1 2\nE 2 3\nE 3 0\n";
const C5: &str = "rel E 2\nuniverse 5\nE 0 1\nE 1 2\nE 2 3\nE 3 4\nE 4 0\n";

#[test]
fn equiv_verdicts_set_the_exit_code() {
    let d = TempDir::new().unwrap();
    let c3 = write(&d, "c3.str", C3);
    let c4 = write(&d, "c4.str", C4);
    let c5 = write(&d, "c5.str", C5);
    let o = lkw(&["equiv", &c3, &c3, "-k", "2"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "equivalent\n"));
    // a non-adjacent pair exists in C4 only
    let o = lkw(&["equiv", &c3, &c4, "-k", "2", "--game"]);
    assert_eq!(o.status.code(), Some(1));
    // two pebbles cannot measure the distance between them, three can
    let o = lkw(&["equiv", &c4, &c5, "-k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let o = lkw(&["equiv", &c4, &c5, "-k", "3"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "not equivalent\n"));
}

#[test]
fn collider_is_not_separated_by_its_sink() {
    let d = TempDir::new().unwrap();
    let g = write(&d, "collider.dag", "node a\nnode b\nnode c\nedge a c\nedge b c\n");
    let o = lkw(&["dsep", &g, "--x", "a", "--y", "b", "--z", "c"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "not d-separated\n"));
    let o = lkw(&["dsep", &g, "--x", "a", "--y", "b", "--z"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "d-separated\n"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let w = data("cycle12.struct");
    let prog = data("edge_completion.prog");
    let runs: [&[&str]; 4] = [
        &["invariant", &w, "-k", "3"],
        &["types", &w, "-k", "2"],
        &["run-program", &prog, &w, "--start", "0,5"],
        &["cg", &prog, &w, "--start", "0,5"],
    ];
    for args in runs {
        let (a, b) = (lkw(args), lkw(args));
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn tableau_pipeline_round_trips() {
    let d = TempDir::new().unwrap();
    let w = data("cycle12.struct");
    let inv = write(&d, "th.inv", &stdout(&lkw(&["invariant", &w, "-k", "2"])));
    let tab = write(&d, "t.tab", &stdout(&lkw(&["tableau", &w, "-k", "2", "--theory", &inv])));
    let report = stdout(&lkw(&["check", &tab, "--theory", &inv]));
    assert!(report.lines().all(|l| l.ends_with("pass")), "{report}");
    let back = write(&d, "back.str", &stdout(&lkw(&["realize", &tab, "--theory", &inv])));
    let o = lkw(&["equiv", &w, &back, "-k", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn ifp_reports_stages() {
    let d = TempDir::new().unwrap();
    let c3 = write(&d, "c3.str", C3);
    let f = "(exists z (or (E x0 x1) (and (X x0 z) (E z x1))))";
    let out = stdout(&lkw(&["ifp", &c3, "--formula", f, "-r", "2"]));
    assert!(out.starts_with("stage 0\nstage 1 (0,1) (1,2) (2,0)\n"), "{out}");
    assert!(out.ends_with("stabilized 3\n"), "{out}");
}

#[test]
fn program_verdicts() {
    let w = data("cycle12.struct");
    let prog = data("edge_completion.prog");
    let o = lkw(&["locsep", &prog, &w, "--start", "0,6", "--a", "6", "--b", "6", "--c"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "not locally separated\n"));
    let o = lkw(&["locsep", &prog, &w, "--start", "0,6", "--a", "0", "--b", "6", "--c"]);
    assert_eq!(o.status.code(), Some(0));
    // 5 is not adjacent to 1, so the type has no realization
    let o = lkw(&["devmem", &prog, &w, "--start", "0,1", "--params", "1", "--witness", "5", "--b", "1", "--c", "--d", "0,1"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "not member\n"));
}

#[test]
fn corpora_have_the_expected_size_and_are_reproducible() {
    for (n, want) in [(2, 4), (3, 64)] {
        let d = TempDir::new().unwrap();
        let o = lkw(&["corpus", "all-digraphs", "-n", &n.to_string(), "--out", &d.path().display().to_string()]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(fs::read_dir(d.path()).unwrap().count(), want);
    }
    let read_all = |seed: &str| {
        let d = TempDir::new().unwrap();
        let o = lkw(&["corpus", "random", "--seed", seed, "--count", "5", "-n", "6", "--out", &d.path().display().to_string()]);
        assert_eq!(o.status.code(), Some(0));
        let mut files: Vec<_> = fs::read_dir(d.path()).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.iter().map(|p| fs::read_to_string(p).unwrap()).collect::<Vec<_>>()
    };
    let a = read_all("11");
    assert_eq!(a.len(), 5);
    assert!(a[0].starts_with("# random seed 11"));
    assert_eq!(a, read_all("11"));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(lkw(&["frobnicate"]).status.code(), Some(2));
    let o = lkw(&["types", "/no/such/file", "-k", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/file"));
    let d = TempDir::new().unwrap();
    let bad = write(&d, "bad.str", "rel E 2\nuniverse 2\nE 0 7\n");
    let o = lkw(&["invariant", &bad, "-k", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.str"));
    let o = lkw(&["corpus", "all-digraphs", "-n", "6", "--out", &d.path().display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
}
