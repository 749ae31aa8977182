use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cgmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgmm")).args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = path(dir, name);
    fs::write(&p, body).unwrap();
    p
}

fn two_hop(dir: &TempDir, n: usize) -> PathBuf {
    let data = path(dir, "two-hop.txt");
    let out = cgmm(&["synth", "two-hop", "--n-per-class", &n.to_string(), "--seed", "1", "--out", s(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data
}

const FAST: &str = "states = 6\npool_size = 2\nmax_layers = 2\npatience = 2\nem_max_iters = 10\nseed = 4\n";

#[test]
fn train_with_defaults_stacks_two_layers() {
    let dir = TempDir::new().unwrap();
    let data = two_hop(&dir, 50);
    let model = path(&dir, "model.txt");
    let out = cgmm(&["train", "--data", s(&data), "--out", s(&model)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("states = 20,40"), "resolved config is logged");
    let text = fs::read_to_string(&model).unwrap();
    let layers: usize = text.lines().find_map(|l| l.strip_prefix("layers ")).unwrap().parse().unwrap();
    assert!(layers >= 2, "{stderr}");
}

#[test]
fn training_twice_gives_identical_files_at_any_thread_count() {
    let dir = TempDir::new().unwrap();
    let data = two_hop(&dir, 15);
    let mut files = Vec::new();
    for threads in [1, 3, 1] {
        let cfg = write_config(&dir, &format!("t{threads}.cfg"), &format!("{FAST}threads = {threads}\n"));
        let model = path(&dir, &format!("m{}.txt", files.len()));
        let out = cgmm(&["train", "--data", s(&data), "--config", s(&cfg), "--out", s(&model)]);
        assert!(out.status.success());
        files.push(fs::read(&model).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn missing_dataset_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "nope.txt");
    let out = cgmm(&["train", "--data", s(&missing), "--out", s(&path(&dir, "m.txt"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cgmm(&["train"]).status.code(), Some(1));
    assert_eq!(cgmm(&["frobnicate"]).status.code(), Some(1));
    let data = two_hop(&dir, 10);
    let bad = write_config(&dir, "bad.cfg", "colour = blue\n");
    let out = cgmm(&["train", "--data", s(&data), "--config", s(&bad), "--out", s(&path(&dir, "m.txt"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let broken = path(&dir, "broken.txt");
    fs::write(&broken, "dataset x 2 1\ngraph g 0\nv 0 3\nend\n").unwrap();
    let out = cgmm(&["validate", "--data", s(&broken)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let out = cgmm(&["validate", "--data", s(&data)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn fingerprint_inspect_and_kernel_outputs() {
    let dir = TempDir::new().unwrap();
    let data = two_hop(&dir, 10);
    let cfg = write_config(&dir, "c.cfg", &format!("{FAST}fingerprint = unibigram\nkernel = rbf\ngamma = 0.01\n"));
    let model = path(&dir, "m.txt");
    assert!(cgmm(&["train", "--data", s(&data), "--config", s(&cfg), "--out", s(&model)]).status.success());
    let layers: usize = fs::read_to_string(&model)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix("layers ").map(|n| n.parse().unwrap()))
        .unwrap();

    let csv = path(&dir, "fp.csv");
    let kernel = path(&dir, "k.txt");
    let out = cgmm(&[
        "fingerprint", "--model", s(&model), "--data", s(&data), "--config", s(&cfg), "--out", s(&csv), "--kernel-out", s(&kernel),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 20);
    assert!(text.starts_with("graph_id,target,c_1,"));
    let k = fs::read_to_string(&kernel).unwrap();
    assert!(k.starts_with("kernel rbf gamma=1.0000000000000000e-2 20\n"));

    let means = path(&dir, "means.csv");
    let out = cgmm(&["inspect", "--model", s(&model), "--data", s(&data), "--out", s(&means)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&means).unwrap().lines().count(), 1 + 2 * layers);
}

#[test]
fn eval_prints_mean_and_std() {
    let dir = TempDir::new().unwrap();
    let data = two_hop(&dir, 50);
    let cfg = write_config(
        &dir,
        "c.cfg",
        "states = 20\npool_size = 10\nmax_layers = 5\npatience = 3\npredecessors = all\nfingerprint_layers = all\nseed = 1\n",
    );
    let out = cgmm(&["eval", "--data", s(&data), "--config", s(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "100.00 (0.00)");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let depths = stderr.lines().find_map(|l| l.strip_prefix("fold depths: ")).unwrap();
    assert!(depths.split(' ').all(|d| d.parse::<usize>().unwrap() >= 2), "{depths}");
}

#[test]
fn synth_outputs_are_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.txt");
    let b = path(&dir, "b.txt");
    for p in [&a, &b] {
        let out = cgmm(&["synth", "random", "--n-graphs", "12", "--edge-prob", "0.3", "--arc-labels", "2", "--seed", "5", "--out", s(p)]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = path(&dir, "c.txt");
    assert!(cgmm(&["synth", "cycle", "--n-graphs", "4", "--undirected", "--out", s(&c)]).status.success());
    assert_eq!(cgmm(&["validate", "--data", s(&c)]).status.code(), Some(0));
}
