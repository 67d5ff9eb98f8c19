use std::path::Path;
use std::process::{Command, Output};

use ilp_gadgets::cli::RunConfig;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilp-gadgets"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(line: &str, key: &str) -> String {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
        .to_owned()
}

#[test]
fn version_prints_default_hash() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["--version"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains(env!("CARGO_PKG_VERSION")));
    assert!(s.trim_end().ends_with(&RunConfig::default_hash()));
}

#[test]
fn zero_rounds_gives_zero_delta() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["plru-pa", "--rounds", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "delta"), "0");
}

#[test]
fn miss_prob_default_is_high() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["miss-prob"]);
    assert_eq!(o.status.code(), Some(0));
    let p: f64 = field(&stdout(&o), "miss_prob").parse().unwrap();
    assert!(p >= 0.95, "{p}");
}

#[test]
fn add_granularity_table() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["granularity", "--ref", "add", "--target", "add", "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("target_len,min_ref_len\n"));
    let g: usize = field(s.lines().last().unwrap(), "granularity").parse().unwrap();
    assert!(g <= 3);
}

#[test]
fn unknown_key_exits_one_with_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.cfg");
    std::fs::write(&cfg, "# comment\nrob_size = 100\nno_such_key = 1\n").unwrap();
    let o = run(d.path(), &["arith", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("no_such_key"), "{err}");
}

#[test]
fn invalid_machine_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.cfg");
    std::fs::write(&cfg, "rob_size = 0\n").unwrap();
    assert_eq!(run(d.path(), &["plru-pa", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(d.path(), &["granularity", "--ref", "bogus"]).status.code(), Some(1));
    assert_eq!(run(d.path(), &["no-such-subcommand"]).status.code(), Some(1));
}

#[test]
fn empty_config_is_all_defaults() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("empty.cfg");
    std::fs::write(&cfg, "").unwrap();
    let o = run(d.path(), &["plru-reorder", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(d.path().join("plru-reorder.manifest")).unwrap();
    let rc = RunConfig::from_kv_str(&manifest).unwrap();
    let mut want = RunConfig::default();
    want.params.rounds = Some(100);
    assert_eq!(rc, want);
}

#[test]
fn small_rob_config_stops_the_sweep_sooner() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("small.cfg");
    std::fs::write(&cfg, "rob_size = 16\n").unwrap();
    let bound = |args: &[&str]| {
        let o = run(d.path(), args);
        assert!(o.status.success());
        let s = field(&stdout(&o), "rob_bound");
        s.trim_start_matches("RobExceeded(").trim_end_matches(')').parse::<usize>().unwrap()
    };
    assert!(bound(&["granularity", "--config", cfg.to_str().unwrap()]) < bound(&["granularity"]));
}

#[test]
fn degenerate_calibration_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.cfg");
    std::fs::write(&cfg, "timer_jitter = 0\nspectre_bits = 4\n").unwrap();
    let o = run(d.path(), &["spectre-back", "--rounds", "0", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manifest_reruns_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let cases: &[&[&str]] = &[
        &["plru-pa", "--rounds", "7"],
        &["arith", "--rounds", "12"],
        &["repetition", "--fix", "--rounds", "50"],
        &["granularity", "--ref", "mul"],
        &["classify", "--truth", "miss", "--seed", "9"],
        &["miss-prob", "--seed", "4"],
    ];
    for args in cases {
        assert!(run(&a, args).status.success(), "{args:?}");
        let name = args[0];
        let manifest = a.join(format!("{name}.manifest"));
        assert!(run(&b, &[name, "--config", manifest.to_str().unwrap()]).status.success());
        let x = std::fs::read(a.join(format!("{name}.csv"))).unwrap();
        let y = std::fs::read(b.join(format!("{name}.csv"))).unwrap();
        assert_eq!(x, y, "{name}");
    }
}
