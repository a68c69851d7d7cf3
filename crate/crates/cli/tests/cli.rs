use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swarmdisc::capture::read_dataset;
use swarmdisc::discovery::NoveltyArchive;
use swarmdisc::evaluation::{parse_rows, Label};
use swarmdisc_cli::manifest::RunManifest;
use swarmdisc_cli::report::parse_medoid_labels;

const BIN: &str = env!("CARGO_BIN_EXE_swarmdisc");
const REFEMBED: &str = env!("CARGO_BIN_EXE_swarmdisc-refembed");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn desk_scale_discover() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = ok(run(&[
        "discover", "--profile", "rsrs", "--backend", "metrics", "--pop", "10", "--gens", "10", "--k", "5", "--seed",
        "1", "--out", s(&out),
    ]));
    let archive = NoveltyArchive::load(&out.join("archive.swar")).unwrap();
    assert_eq!(archive.len(), 100);
    assert_eq!(archive.generations(), 10);
    let report = String::from_utf8(read(out.join("medoids.txt"))).unwrap();
    assert_eq!(parse_medoid_labels(&report).unwrap().len(), 5);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), report);
    let index = String::from_utf8(read(out.join("archive-index.txt"))).unwrap();
    assert_eq!(index.lines().count(), 101);
    let m = RunManifest::load(&out.join("manifest.txt")).unwrap();
    assert_eq!(m.subcommand, "discover");
    assert_eq!(m.profiles["main"].name, "rsrs");
    assert!(m.params.contains(&("seed_policy".into(), "fixed:1".into())));
}

#[test]
fn rerun_reproduces_outputs_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("short.profile");
    let mut p = swarmdisc::sim::SimProfile::default_sim();
    p.episode_steps = 120;
    std::fs::write(&profile, p.to_text()).unwrap();
    let a = dir.path().join("a");
    ok(run(&[
        "discover", "--profile", s(&profile), "--set", "n_agents=6", "--pop", "6", "--gens", "4", "--k", "3",
        "--seed", "9", "--seed-policy", "per-genome", "--out", s(&a),
    ]));
    // the rerun must not depend on the profile file any more
    std::fs::remove_file(&profile).unwrap();
    let b = dir.path().join("b");
    ok(run(&["rerun", "--manifest", s(&a.join("manifest.txt")), "--out", s(&b)]));
    for f in ["archive.swar", "archive-index.txt", "medoids.txt"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f}");
    }
    let m = RunManifest::load(&b.join("manifest.txt")).unwrap();
    assert_eq!(m.profiles["main"].n_agents, 6);
    assert_eq!(m.profiles["main"].episode_steps, 120);

    // a manifest directory works too, and the recorded --out is the default
    let c = dir.path().join("c");
    ok(run(&["rerun", "--manifest", s(&b), "--out", s(&c)]));
    assert_eq!(read(a.join("archive.swar")), read(c.join("archive.swar")));
}

#[test]
fn dataset_generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(run_in(dir.path(), &["gen-dataset", "--n", "5", "--seed", "1", "--out", "one"]));
    ok(run_in(dir.path(), &["gen-dataset", "--n", "5", "--seed", "1", "--out", "two"]));
    let one = dir.path().join("one/dataset.swbd");
    assert_eq!(read(&one), read(dir.path().join("two/dataset.swbd")));
    let (header, records) = read_dataset(&one).unwrap();
    assert_eq!(header.record_count, 5);
    assert_eq!((header.channels, header.height, header.width), (3, 64, 64));
    assert_eq!(header.profile_name, "rsrs");
    assert_eq!(records.len(), 5);
    ok(run_in(dir.path(), &["rerun", "--manifest", "one/manifest.txt", "--out", "three"]));
    assert_eq!(read(&one), read(dir.path().join("three/dataset.swbd")));
}

#[test]
fn simulate_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let o = ok(run(&[
        "simulate", "--genome", "0.09,1.6,0.09,-1.6", "--seed", "3", "--frame-every", "150", "--out", s(&sim),
    ]));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# swarmdisc metrics v1\n"));
    assert!(text.contains("label="));
    for k in [0, 150, 300, 450, 600] {
        let frame = read(sim.join(format!("frames/frame_{k:05}.pgm")));
        assert!(frame.starts_with(b"P5\n# swarmdisc frame v"));
        assert!(frame.len() > 64 * 64);
    }
    let replay = dir.path().join("replay");
    ok(run(&["replay", "--input", s(&sim.join("trajectory.swtr")), "--every", "300", "--out", s(&replay)]));
    assert_eq!(read(sim.join("frames/frame_00300.pgm")), read(replay.join("frames/frame_00300.pgm")));
    for name in ["stack_0_step00300.pgm", "stack_1_step00450.pgm", "stack_2_step00599.pgm"] {
        assert!(replay.join(name).is_file(), "{name}");
    }
    let bad = dir.path().join("bad.swtr");
    std::fs::write(&bad, &read(sim.join("trajectory.swtr"))[..40]).unwrap();
    let o = run(&["replay", "--input", s(&bad), "--out", s(&replay)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("truncated at byte"));
}

#[test]
fn profile_directory_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = swarmdisc::sim::SimProfile::rsrs();
    p.name = "tiny".into();
    p.episode_steps = 30;
    std::fs::write(dir.path().join("tiny.profile"), p.to_text()).unwrap();
    let out = dir.path().join("o");
    let o = Command::new(BIN)
        .env("SWARMDISC_PROFILE_DIR", dir.path())
        .args(["simulate", "--profile", "tiny", "--set", "n_agents=3", "--genome", "0.05,0,0.05,0.5", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    ok(o);
    let m = RunManifest::load(&out.join("manifest.txt")).unwrap();
    assert_eq!(m.profiles["main"].name, "tiny");
    assert_eq!(m.profiles["main"].episode_steps, 30);
    assert_eq!(m.profiles["main"].n_agents, 3);

    let o = run(&["simulate", "--profile", "tiny", "--genome", "0,0,0,0", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--profile"));
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    ok(run(&["discover", "--pop", "4", "--gens", "2", "--k", "2", "--out", s(&out)]));

    let o = run(&["discover", "--popsize", "4"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--popsize"));

    let o = run(&["discover", "--pop", "4", "--gens", "2", "--k", "9", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--k"));

    let o = run(&["discover", "--crossover", "1.5", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--crossover"));

    let o = run(&["simulate", "--genome", "5,0,0,0", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--genome"));

    let o = run(&["cluster", "--archive", s(&dir.path().join("missing.swar")), "--k", "2"]);
    assert_eq!(code(&o), 2);

    let archive = read(out.join("archive.swar"));
    let cut = dir.path().join("cut.swar");
    std::fs::write(&cut, &archive[..archive.len() - 3]).unwrap();
    let o = run(&["cluster", "--archive", s(&cut), "--k", "2", "--out", s(&out)]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("entry 7"), "{}", stderr(&o));

    // a regular file where a directory is needed
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let o = run(&["gen-dataset", "--n", "1", "--out", s(&blocker.join("sub"))]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let o = run(&["discover", "--pop", "4", "--gens", "2", "--k", "2", "--endpoint", "/no/such/encoder", "--out", s(&out)]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));

    let o = run(&["discover", "--backend", "endpoint", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--endpoint"));

    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("ablate"));
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn cluster_matches_discover_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    ok(run(&["discover", "--pop", "8", "--gens", "5", "--k", "4", "--seed", "5", "--out", s(&d)]));
    let c = dir.path().join("c");
    ok(run(&["cluster", "--archive", s(&d.join("archive.swar")), "--k", "4", "--seed", "5", "--out", s(&c)]));
    assert_eq!(read(d.join("medoids.txt")), read(c.join("medoids.txt")));
}

#[test]
fn evaluate_synthetic_archive_and_labeled() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("ev");
    let o = ok(run(&["evaluate", "--synthetic", "--per-class", "6", "--seed", "2", "--out", s(&ev)]));
    assert!(String::from_utf8_lossy(&o.stdout).contains("classifier accuracy on the synthetic suite: 1"));
    let kv = String::from_utf8(read(ev.join("confusion.kv"))).unwrap();
    assert!(kv.starts_with("# swarmdisc confusion-kv v1\n"));
    assert_eq!(kv.lines().filter(|l| l.starts_with("confusion.")).count(), 36);
    let rows = parse_rows(&String::from_utf8(read(ev.join("embeddings.tsv"))).unwrap()).unwrap();
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|r| r.values.len() == 5 && r.tag.parse::<Label>().is_ok()));

    let lab = dir.path().join("lab");
    ok(run(&["evaluate", "--labeled", s(&ev.join("embeddings.tsv")), "--out", s(&lab)]));
    assert_eq!(read(ev.join("confusion.kv")), read(lab.join("confusion.kv")));

    let d = dir.path().join("d");
    ok(run(&["discover", "--pop", "10", "--gens", "3", "--k", "3", "--seed", "4", "--out", s(&d)]));
    let ar = dir.path().join("ar");
    let o = run(&["evaluate", "--archive", s(&d.join("archive.swar")), "--out", s(&ar)]);
    // a single-label archive is a usage problem, anything else produces a matrix
    if code(&o) == 0 {
        assert!(ar.join("confusion.txt").is_file());
    } else {
        assert_eq!(code(&o), 2, "{}", stderr(&o));
        assert!(stderr(&o).contains("two labels"));
    }

    let o = run(&["evaluate", "--out", s(&ar)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn ablation_reports_both_profiles_and_the_mechanism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ab");
    let o = ok(run(&[
        "ablate", "--seed", "3", "--pop", "6", "--gens", "3", "--k", "3", "--set", "episode_steps=150", "--out",
        s(&out),
    ]));
    let text = String::from_utf8(read(out.join("ablation.txt"))).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
    assert!(text.starts_with("# swarmdisc ablation v1\n"));
    assert!(text.contains("class\trsrs\tdefault\n"));
    assert!(text.contains("mechanism=ok"));
    for p in ["rsrs", "default"] {
        let a = NoveltyArchive::load(&out.join(p).join("archive.swar")).unwrap();
        assert_eq!(a.len(), 18);
        assert_eq!(parse_medoid_labels(&String::from_utf8(read(out.join(p).join("medoids.txt"))).unwrap()).unwrap().len(), 3);
    }
    let m = RunManifest::load(&out.join("manifest.txt")).unwrap();
    assert_eq!(m.profiles["rsrs"].episode_steps, 150);
    assert_eq!(m.profiles["default"].friction_mu, 0.0);
}

// ---- learned backend ----

fn learned_discover(dir: &Path, name: &str, endpoint: &str, sessions: &str) -> PathBuf {
    let out = dir.join(name);
    ok(run(&[
        "discover", "--pop", "6", "--gens", "3", "--k", "3", "--seed", "2", "--set", "episode_steps=100", "--endpoint",
        endpoint, "--sessions", sessions, "--frame-size", "32", "--out", s(&out),
    ]));
    out
}

#[test]
fn learned_backend_over_stdio() {
    let dir = tempfile::tempdir().unwrap();
    let endpoint = format!("{REFEMBED} --dim 24 --seed 5");
    let a = learned_discover(dir.path(), "a", &endpoint, "2");
    let b = learned_discover(dir.path(), "b", &endpoint, "1");
    let archive = NoveltyArchive::load(&a.join("archive.swar")).unwrap();
    assert_eq!((archive.len(), archive.dim()), (18, 24));
    assert_eq!(archive.backend().to_string(), "learned");
    // session count does not change results
    assert_eq!(read(a.join("archive.swar")), read(b.join("archive.swar")));
    let c = dir.path().join("c");
    ok(run(&["rerun", "--manifest", s(&a.join("manifest.txt")), "--out", s(&c)]));
    assert_eq!(read(a.join("archive.swar")), read(c.join("archive.swar")));
}

#[test]
fn learned_backend_over_tcp() {
    use std::io::{BufRead, BufReader};
    let dir = tempfile::tempdir().unwrap();
    let mut server = Command::new(REFEMBED)
        .args(["--dim", "24", "--seed", "5", "--listen", "127.0.0.1:0", "--max-sessions", "2"])
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let tcp = learned_discover(dir.path(), "tcp", &format!("tcp://{addr}"), "2");
    assert!(server.wait().unwrap().success());
    let stdio = learned_discover(dir.path(), "stdio", &format!("{REFEMBED} --dim 24 --seed 5"), "1");
    assert_eq!(read(tcp.join("archive.swar")), read(stdio.join("archive.swar")));
}

#[test]
fn encoder_dying_mid_run_leaves_a_partial_archive() {
    let dir = tempfile::tempdir().unwrap();
    // the encoder exits after six responses
    let endpoint = format!("{REFEMBED} --dim 8 --max-requests 6");
    let out = dir.path().join("d");
    let o = run(&[
        "discover", "--pop", "4", "--gens", "3", "--k", "2", "--set", "episode_steps=60", "--endpoint", &endpoint,
        "--timeout-secs", "20", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    assert!(stderr(&o).contains("generation 1, genome 2"), "{}", stderr(&o));
    let partial = NoveltyArchive::load(&out.join("archive.partial.swar")).unwrap();
    assert_eq!((partial.len(), partial.dim()), (4, 8));
    assert!(!out.join("archive.swar").exists());
    let m = RunManifest::load(&out.join("manifest.txt")).unwrap();
    assert!(m.params.contains(&("status".into(), "failed".into())));
}
