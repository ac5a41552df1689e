use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sweetspot::runner::{read_manifest, MANIFEST_FILE, METRICS_FILE};

fn sweetspot(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sweetspot"))
        .args(args)
        .current_dir(cwd)
        .env_remove("OUTPUT_DIR")
        .env_remove("PARALLEL_CELLS")
        .env_remove("DETERMINISTIC")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const TINY: &str = "task = \"nw\"\nsize = 2\nn = 24\nval_size = 16\ndepth = 1\nmicro_batch = 4\naccumulation = 2\n\
max_updates = 40\neval_every = 10\ncheckpoint_every = 20\n";

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), TINY).unwrap();
    let a = sweetspot(&["generate", "--config", "c.toml", "--out", "a"], dir.path());
    let b = sweetspot(&["generate", "--config", "c.toml", "--out", "b"], dir.path());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert!(stdout(&a).contains("universe size: 256"));
    let sums = |o: &Output| stdout(o).lines().filter(|l| l.contains("sha256")).map(String::from).collect::<Vec<_>>();
    assert_eq!(sums(&a), sums(&b));
    assert_eq!(sums(&a).len(), 2);
    for f in ["train.tsv", "validation.tsv", "vocab.tsv", "header.toml"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
    assert_eq!(fs::read_to_string(dir.path().join("a/train.tsv")).unwrap().lines().count(), 24);
}

#[test]
fn oversubscribed_split_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), TINY).unwrap();
    let o = sweetspot(&["generate", "--config", "c.toml", "--set", "n=250", "--out", "x"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "task = \"nw\"\nunknown_key = 1\n").unwrap();
    assert_eq!(code(&sweetspot(&["generate", "--config", "c.toml"], dir.path())), 2);
    assert_eq!(code(&sweetspot(&["train", "--config", "missing.toml"], dir.path())), 2);
    assert_eq!(code(&sweetspot(&["analyze", "--runs", "nowhere"], dir.path())), 2);
    assert_eq!(code(&sweetspot(&["frobnicate"], dir.path())), 2);
}

#[test]
fn verify_passes_at_small_lengths() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), TINY).unwrap();
    let o = sweetspot(&["verify", "--config", "c.toml", "--set", "size=1"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("16 pairs, 64 cells, 0 mismatches"));
    let o = sweetspot(&["verify", "--config", "c.toml", "--set", "size=4"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn plot_without_analysis_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("empty")).unwrap();
    assert_eq!(code(&sweetspot(&["plot", "--analysis", "empty", "--out", "f"], dir.path())), 2);
    assert_eq!(code(&sweetspot(&["plot", "--analysis", "absent"], dir.path())), 2);
}

#[test]
fn train_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), TINY).unwrap();
    for out in ["r1", "r2"] {
        let o = sweetspot(&["train", "--config", "c.toml", "--seed", "5", "--out", out], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(dir.path().join("r1").join(METRICS_FILE)).unwrap();
    let b = fs::read(dir.path().join("r2").join(METRICS_FILE)).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().filter(|l| l.contains(",validation,exact_match,")).count(), 4);
}

#[test]
fn output_dir_sets_the_default_location() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), TINY).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sweetspot"))
        .args(["generate", "--config", "c.toml"])
        .current_dir(dir.path())
        .env("OUTPUT_DIR", "elsewhere")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("elsewhere/datasets/nw2-n24-s0/train.tsv").exists());
}

#[test]
fn sweep_analyze_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let base: String = TINY.lines().filter(|l| !l.starts_with("n =")).map(|l| format!("{l}\n")).collect();
    let sweep = format!("{base}suffix_bits = 2\nn = [16, 48, 300]\nseed = [0, 1]\n");
    fs::write(dir.path().join("s.toml"), sweep).unwrap();
    let o = sweetspot(&["sweep", "--manifest", "s.toml", "--out", "sw"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_manifest(&dir.path().join("sw").join(MANIFEST_FILE)).unwrap();
    assert_eq!(rows.len(), 6);
    let statuses: Vec<&str> = rows.iter().map(|r| r.status.name()).collect();
    assert_eq!(statuses.iter().filter(|s| **s == "failed").count(), 2, "{statuses:?}");
    assert!(statuses.iter().all(|s| ["done", "censored-budget", "failed"].contains(s)));

    let stamp = |p: &Path| fs::metadata(p).unwrap().modified().unwrap();
    let metrics = dir.path().join("sw/runs/nw2r2-n16-d1-s0").join(METRICS_FILE);
    let before = stamp(&metrics);
    let again = sweetspot(&["sweep", "--manifest", "s.toml", "--out", "sw"], dir.path());
    assert_eq!(code(&again), 0);
    assert!(String::from_utf8_lossy(&again.stderr).contains("4 already complete"));
    assert_eq!(stamp(&metrics), before);

    let o = sweetspot(&["analyze", "--runs", "sw", "--tau", "0.1,0.5"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("sw/analysis/summary.csv")).unwrap();
    assert!(summary.starts_with("task,size,depth,N,tau,source,"));
    assert_eq!(summary.lines().count(), 1 + 2 * 2 * 2);

    let o = sweetspot(&["plot", "--analysis", "sw/analysis"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let figures: Vec<String> = fs::read_dir(dir.path().join("sw/analysis/figures"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    for family in ["crossing_", "trajectory_", "gap_"] {
        assert!(figures.iter().any(|f| f.starts_with(family) && f.ends_with(".svg")), "{family} in {figures:?}");
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cells = |name: &str| sweetspot::config::SweepSpec::load(&dir.join(name), &[]).unwrap().cells.len();
    assert_eq!(cells("nw_l5_full.toml"), 200);
    assert_eq!(cells("nw_l5_suffix.toml"), 15);
    assert_eq!(cells("multiplication_d3.toml"), 65);
    assert_eq!(cells("addition_d10.toml"), 85);
    assert_eq!(cells("nw_l3_mini.toml"), 9);
    let single = sweetspot::config::Config::load(&dir.join("nw_l2_single.toml"), &[]).unwrap();
    assert!(single.split(&single.task_spec().unwrap()).is_ok());
}
