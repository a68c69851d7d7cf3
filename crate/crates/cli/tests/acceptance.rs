//! Acceptance suite: one PASS/FAIL line per criterion, then a single verdict.
//!
//! Lines go straight to the process stdout so they survive libtest capture.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use swarmdisc::behavior::{handcrafted_embed, Backend, BehaviorVector};
use swarmdisc::capture::{generate_dataset, read_dataset, write_dataset, CaptureError, DatasetHeader, DatasetRecord};
use swarmdisc::discovery::{k_medoids, novelty, ArchiveEntry, NoveltyArchive};
use swarmdisc::evaluation::synthetic::synthetic_suite;
use swarmdisc::evaluation::{triplet_confusion, Label, LabeledBehavior};
use swarmdisc::sim::{
    run_episode, run_from, AgentState, ControllerGenome, SimProfile, Trajectory, Vec2, WorldState,
    PENETRATION_TOLERANCE,
};
use swarmdisc_cli::ablation::FrictionCheck;
use swarmdisc_cli::report::parse_medoid_labels;

type Criterion = (&'static str, fn() -> String);

const BIN: &str = env!("CARGO_BIN_EXE_swarmdisc");

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.write_all(b"\n");
    let _ = out.flush();
}

fn swarmdisc(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(o: Output) -> Output {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn timed_discover(out: &Path, pop: usize, gens: usize, k: usize, seed: u64) -> (NoveltyArchive, Duration) {
    let start = Instant::now();
    ok(swarmdisc(&[
        "discover",
        "--profile",
        "rsrs",
        "--backend",
        "metrics",
        "--pop",
        &pop.to_string(),
        "--gens",
        &gens.to_string(),
        "--k",
        &k.to_string(),
        "--seed",
        &seed.to_string(),
        "--seed-policy",
        "fixed",
        "--out",
        s(out),
    ]));
    let elapsed = start.elapsed();
    (NoveltyArchive::load(&out.join("archive.swar")).unwrap(), elapsed)
}

// ---- 1 ----

fn archive_arithmetic() -> String {
    let dir = tempfile::tempdir().unwrap();
    let (desk, desk_time) = timed_discover(&dir.path().join("desk"), 10, 10, 5, 0);
    assert_eq!(desk.len(), 100);
    assert!(desk_time < Duration::from_secs(120), "desk scale took {desk_time:?}");
    let (full, full_time) = timed_discover(&dir.path().join("full"), 50, 100, 10, 0);
    assert_eq!(full.len(), 5000);
    assert_eq!(full.generations(), 100);
    format!(
        "P10/G10 -> {} entries in {:.1}s; P50/G100 -> {} entries in {:.1}s",
        desk.len(),
        desk_time.as_secs_f64(),
        full.len(),
        full_time.as_secs_f64()
    )
}

// ---- 2 ----

fn violations(t: &Trajectory) -> [usize; 3] {
    let p = &t.profile;
    let r = p.body_radius;
    let tol = PENETRATION_TOLERANCE;
    let mut v = [0; 3];
    for snap in &t.snapshots {
        for (i, a) in snap.iter().enumerate() {
            let q = a.position;
            if q.x < r - tol || q.x > p.arena_width - r + tol || q.y < r - tol || q.y > p.arena_height - r + tol {
                v[0] += 1;
            }
            if a.velocity.norm() > p.v_max * (1.0 + 1e-12) || a.angular_velocity.abs() > p.w_max {
                v[1] += 1;
            }
            for b in &snap[i + 1..] {
                if q.distance(b.position) < 2.0 * r - tol {
                    v[2] += 1;
                }
            }
        }
    }
    v
}

fn circle_deviation() -> f64 {
    let mut p = SimProfile::rsrs();
    p.n_agents = 1;
    let start = Vec2::new(1.1, 0.9);
    let theta0 = -0.7;
    let world = WorldState {
        agents: vec![AgentState::at(start, theta0)],
        time_index: 0,
        rng: ChaCha8Rng::seed_from_u64(0),
    };
    let (v, w) = (p.v_max, p.w_max);
    let t = run_from(world, &ControllerGenome::new(v, w, v, w), &p, 0);
    let radius = v / w;
    let centre = start + Vec2::new(-theta0.sin(), theta0.cos()) * radius;
    t.snapshots
        .iter()
        .map(|snap| (snap[0].position.distance(centre) - radius).abs())
        .fold(0.0, f64::max)
}

fn physics_suite() -> String {
    let mut parts = Vec::new();
    for profile in [SimProfile::rsrs(), SimProfile::default_sim()] {
        let total = (0..1000u64)
            .into_par_iter()
            .map(|case| {
                let mut rng = ChaCha8Rng::seed_from_u64(0xACCE97 ^ (case << 8));
                let g = ControllerGenome::sample_uniform(&profile, &mut rng);
                violations(&run_episode(&g, &profile, rng.random()).unwrap())
            })
            .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
        assert_eq!(total, [0; 3], "{}: containment, velocity, overlap", profile.name);
        parts.push(format!("{} 1000 episodes clean", profile.name));
    }
    let dev = circle_deviation();
    assert!(dev < 1e-2, "circle deviation {dev}");
    parts.push(format!("circle deviation {dev:.2e} m"));
    parts.join("; ")
}

// ---- 3 ----

fn brute_novelty(b: &[f64], archive: &[Vec<f64>], k: usize) -> f64 {
    let mut d: Vec<f64> = archive
        .iter()
        .map(|a| b.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    let k = k.min(d.len());
    d[..k].iter().sum::<f64>() / k as f64
}

fn novelty_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut largest = 0;
    for case in 0..200 {
        let dim = rng.random_range(1..=8);
        let n = if case < 5 { 1000 } else { rng.random_range(1..=1000) };
        let k = rng.random_range(1..=30);
        let mut point = || (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>();
        let archive: Vec<Vec<f64>> = (0..n).map(|_| point()).collect();
        let b = point();
        let vectors: Vec<BehaviorVector> =
            archive.iter().map(|a| BehaviorVector::new(Backend::Handcrafted, a.clone())).collect();
        let got = novelty(&BehaviorVector::new(Backend::Handcrafted, b.clone()), &vectors, k).unwrap();
        assert_eq!(got, brute_novelty(&b, &archive, k), "case {case}");
        largest = largest.max(n);
    }
    format!("200 cases exact, largest archive {largest}")
}

// ---- 4 ----

fn medoid_cost(points: &[Vec<f64>], medoids: &[usize]) -> f64 {
    points
        .iter()
        .map(|p| {
            medoids
                .iter()
                .map(|&m| p.iter().zip(&points[m]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (k - 1..n)
        .flat_map(|last| {
            subsets(last, k - 1).into_iter().map(move |mut s| {
                s.push(last);
                s
            })
        })
        .collect()
}

fn k_medoids_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for instance in 0..100u64 {
        let n = rng.random_range(1..=8);
        let k = rng.random_range(1..=3usize.min(n));
        let dim = rng.random_range(1..=3);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let optimum = subsets(n, k).iter().map(|m| medoid_cost(&points, m)).fold(f64::INFINITY, f64::min);
        let c = k_medoids(&refs, k, instance).unwrap();
        assert!((c.cost - optimum).abs() <= 1e-9, "instance {instance}: {} vs {optimum}", c.cost);
    }
    let pts = [[0.0], [0.1], [10.0], [10.1]];
    let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
    let c = k_medoids(&refs, 2, 0).unwrap();
    // 0.1 and 10.1 - 10.0 are not exactly representable; compare with the same arithmetic
    let exact = (0.1f64 - 0.0) + (10.1f64 - 10.0);
    assert_eq!(c.cost, exact);
    assert!((c.cost - 0.2).abs() < 1e-12, "{}", c.cost);
    format!("100 instances at the exhaustive optimum; two-pair example cost {}", c.cost)
}

// ---- 5 ----

fn discovery_efficacy() -> String {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let mut counts = Vec::new();
    for seed in 1..=3u64 {
        let out = dir.path().join(format!("seed{seed}"));
        let (archive, _) = timed_discover(&out, 20, 25, 6, seed);
        assert_eq!(archive.len(), 500);
        let report = std::fs::read_to_string(out.join("medoids.txt")).unwrap();
        let labels = parse_medoid_labels(&report).unwrap();
        assert_eq!(labels.len(), 6);
        let mut distinct: Vec<Label> = labels.into_iter().filter(|l| *l != Label::Random).collect();
        distinct.sort();
        distinct.dedup();
        counts.push(distinct);
    }
    let elapsed = start.elapsed();
    let good = counts.iter().filter(|d| d.len() >= 2).count();
    let shown: Vec<String> = counts
        .iter()
        .enumerate()
        .map(|(i, d)| format!("seed {}: {}", i + 1, d.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    assert!(good >= 2, "{good}/3 seeds with two classes: {}", shown.join("; "));
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    format!("{good}/3 seeds with >= 2 classes ({}) in {:.1}s", shown.join("; "), elapsed.as_secs_f64())
}

// ---- 6 ----

fn ablation_mechanism() -> String {
    let check = FrictionCheck::run(&SimProfile::default_sim(), &SimProfile::rsrs());
    assert!(check.frictionless.min() > 0.0, "default progress {}", check.frictionless.min());
    assert!(check.full_friction.max() == 0.0, "mu=1 progress {}", check.full_friction.max());
    assert!(check.holds());

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ablate");
    ok(swarmdisc(&["ablate", "--pop", "20", "--gens", "25", "--k", "6", "--seed", "3", "--out", s(&out)]));
    let text = std::fs::read_to_string(out.join("ablation.txt")).unwrap();
    assert!(text.lines().any(|l| l == "mechanism=ok"), "{text}");
    assert!(text.lines().any(|l| l == "frictionless_slides=true"), "{text}");
    assert!(text.lines().any(|l| l == "full_friction_sticks=true"), "{text}");
    format!(
        "default slides {:.6} m/step; rsrs with mu=1 slides {} m/step; ablate reports mechanism=ok",
        check.frictionless.mean(),
        check.full_friction.max()
    )
}

// ---- 7 ----

fn triplet_evaluation() -> String {
    let mut parts = Vec::new();
    for profile in [SimProfile::rsrs(), SimProfile::default_sim()] {
        let labeled: Vec<_> = synthetic_suite(&profile, 12, 21)
            .into_iter()
            .map(|(label, t)| LabeledBehavior {
                label,
                vector: handcrafted_embed(&t, &profile).to_vector(),
            })
            .collect();
        let m = triplet_confusion(&labeled).unwrap();
        for label in [Label::CyclicPursuit, Label::Aggregation] {
            let v = m.diagonal(label).unwrap();
            assert!(v >= 0.9, "{} {label}: {v}", profile.name);
            parts.push(format!("{} {label} {v:.3}", profile.name));
        }
    }

    let draws = 20u64;
    let mut total = 0.0;
    let mut cells = 0;
    for seed in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut set = Vec::new();
        for label in [Label::CyclicPursuit, Label::Aggregation] {
            for _ in 0..100 {
                let v = (0..5).map(|_| rng.sample(StandardNormal)).collect();
                set.push(LabeledBehavior {
                    label,
                    vector: BehaviorVector::new(Backend::Handcrafted, v),
                });
            }
        }
        let m = triplet_confusion(&set).unwrap();
        for v in m.cells.iter().flatten() {
            total += v.unwrap();
            cells += 1;
        }
    }
    let null = total / f64::from(cells);
    assert!((null - 0.5).abs() <= 0.02, "null mean {null}");
    parts.push(format!("random null {null:.4}"));
    parts.join("; ")
}

// ---- 8 ----

fn format_round_trips() -> String {
    let dir = tempfile::tempdir().unwrap();

    let path = dir.path().join("gen.swbd");
    generate_dataset(7, &SimProfile::rsrs(), 5, 32, 32, &path).unwrap();
    let original = std::fs::read(&path).unwrap();
    let (header, records) = read_dataset(&path).unwrap();
    let again = dir.path().join("again.swbd");
    write_dataset(&again, &header, &records).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), original);

    let header = DatasetHeader::new("rsrs", 16, 16);
    let records: Vec<_> = (0..6u8)
        .map(|i| DatasetRecord {
            genome: [0.01 * f32::from(i), -0.5, 0.08, 1.5],
            seed: u64::from(i) * 7919,
            pixels: (0..header.record_pixels()).map(|p| (p as u8).wrapping_mul(i)).collect(),
        })
        .collect();
    let small = dir.path().join("small.swbd");
    write_dataset(&small, &header, &records).unwrap();
    let bytes = std::fs::read(&small).unwrap();
    let record_size = 16 + 8 + header.record_pixels();
    let header_size = bytes.len() - 6 * record_size;
    let cut = header_size + 2 * record_size + 17;
    let cut_path = dir.path().join("cut.swbd");
    std::fs::write(&cut_path, &bytes[..cut]).unwrap();
    match read_dataset(&cut_path) {
        Err(CaptureError::Format { source, .. }) => assert_eq!(source.offset(), Some(cut as u64)),
        other => panic!("truncated dataset: {other:?}"),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = SimProfile::rsrs();
    let mut archive = NoveltyArchive::new(Backend::Learned, 6);
    for i in 0..9u32 {
        archive
            .push(ArchiveEntry {
                genome: ControllerGenome::sample_uniform(&p, &mut rng).to_single_precision(),
                seed: rng.random(),
                generation: i / 3,
                vector: BehaviorVector::new(
                    Backend::Learned,
                    (0..6).map(|_| f64::from(rng.random_range(-4.0f32..4.0))).collect(),
                ),
                novelty: None,
            })
            .unwrap();
    }
    let a = dir.path().join("a.swar");
    archive.save(&a).unwrap();
    let loaded = NoveltyArchive::load(&a).unwrap();
    assert_eq!(loaded, archive);
    let b = dir.path().join("b.swar");
    loaded.save(&b).unwrap();
    let archive_bytes = std::fs::read(&a).unwrap();
    assert_eq!(std::fs::read(&b).unwrap(), archive_bytes);
    let entry_size = 16 + 8 + 4 + 6 * 4;
    let archive_header = archive_bytes.len() - 9 * entry_size;
    let cut = archive_header + 5 * entry_size + 3;
    let err = NoveltyArchive::read_from(&archive_bytes[..cut]).unwrap_err();
    assert_eq!(err.offset(), Some(cut as u64));

    "dataset and archive bytes identical after reload; truncation offsets exact".into()
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("archive arithmetic", archive_arithmetic),
        ("physics suite", physics_suite),
        ("novelty oracle", novelty_oracle),
        ("k-medoids oracle", k_medoids_oracle),
        ("desk-scale discovery efficacy", discovery_efficacy),
        ("ablation mechanism", ablation_mechanism),
        ("triplet evaluation", triplet_evaluation),
        ("format round trips", format_round_trips),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => say(&format!("PASS {n} {name}: {detail}")),
            Err(payload) => {
                let why = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                say(&format!("FAIL {n} {name}: {why}"));
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
