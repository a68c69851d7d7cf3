use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use swarmdisc::behavior::{handcrafted_embed, BehaviorVector, EndpointSpec, SessionPool, StackShape};
use swarmdisc::capture::pgm::write_pgm;
use swarmdisc::capture::{generate_dataset, rasterize, subsample, CaptureError, FrameStack, STACK_CHANNELS};
use swarmdisc::discovery::{
    run_discovery_with, DiscoveryError, EvalBackend, NoveltyArchive, SearchConfig, SeedPolicy,
};
use swarmdisc::evaluation::synthetic::synthetic_suite;
use swarmdisc::evaluation::{
    classify_behavior, export_embeddings, parse_rows, triplet_confusion, Calibration, EvalError, ExportRow, Label,
    LabeledBehavior,
};
use swarmdisc::sim::trajfile::{read_trajectory, write_trajectory};
use swarmdisc::sim::{run_episode, ControllerGenome, SimProfile, Trajectory};

use crate::ablation::FrictionCheck;
use crate::error::{read_error, CliError};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::report::{render_ablation, MedoidReport};
use crate::{
    AblateArgs, BackendArgs, BackendKind, ClusterArgs, Command, DatasetArgs, DiscoverArgs, EvaluateArgs,
    ProfileArgs, ProfileOverrides, ReplayArgs, RerunArgs, SearchArgs, SimulateArgs, PROFILE_DIR_VAR,
};

pub const ARCHIVE_FILE: &str = "archive.swar";
pub const PARTIAL_ARCHIVE_FILE: &str = "archive.partial.swar";
pub const INDEX_FILE: &str = "archive-index.txt";
pub const MEDOIDS_FILE: &str = "medoids.txt";
pub const TRAJECTORY_FILE: &str = "trajectory.swtr";
pub const METRICS_FILE: &str = "metrics.txt";
pub const DATASET_FILE: &str = "dataset.swbd";
pub const CONFUSION_FILE: &str = "confusion.txt";
pub const CONFUSION_KV_FILE: &str = "confusion.kv";
pub const EMBEDDINGS_FILE: &str = "embeddings.tsv";
pub const ABLATION_FILE: &str = "ablation.txt";

const MAIN_ROLE: &str = "main";

pub fn dispatch(command: Command, args: &[String], profiles: &ProfileOverrides) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate(&a, args, profiles),
        Command::Replay(a) => replay(&a, args),
        Command::GenDataset(a) => gen_dataset(&a, args, profiles),
        Command::Discover(a) => discover(&a, args, profiles),
        Command::Cluster(a) => cluster(&a, args, profiles),
        Command::Evaluate(a) => evaluate(&a, args, profiles),
        Command::Ablate(a) => ablate(&a, args, profiles),
        Command::Rerun(a) => rerun(&a),
    }
}

// ---- shared setup ----

fn find_profile(spec: &str) -> Result<SimProfile, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        return Ok(SimProfile::load(path)?);
    }
    if let Ok(p) = SimProfile::builtin(spec) {
        return Ok(p);
    }
    if let Some(dir) = std::env::var_os(PROFILE_DIR_VAR) {
        let candidate = PathBuf::from(dir).join(format!("{spec}.profile"));
        if candidate.is_file() {
            return Ok(SimProfile::load(&candidate)?);
        }
    }
    Err(CliError::usage(format!(
        "--profile: '{spec}' is not a built-in profile (rsrs, default), a file, or a profile in ${PROFILE_DIR_VAR}"
    )))
}

fn apply_overrides(profile: &mut SimProfile, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set: expected KEY=VALUE, got '{o}'")))?;
        profile
            .set(key.trim(), value.trim())
            .map_err(|e| CliError::usage(format!("--set {o}: {e}")))?;
    }
    profile.validate().map_err(|e| CliError::usage(format!("profile: {e}")))
}

fn resolve_profile(args: &ProfileArgs, role: &str, given: &ProfileOverrides) -> Result<SimProfile, CliError> {
    if let Some(p) = given.get(role) {
        return Ok(p.clone());
    }
    let mut profile = find_profile(&args.profile)?;
    apply_overrides(&mut profile, &args.overrides)?;
    Ok(profile)
}

fn search_config(s: &SearchArgs) -> Result<(SearchConfig, SeedPolicy), CliError> {
    let bad = |flag: &str, why: &str| Err(CliError::usage(format!("{flag}: {why}")));
    if s.pop < 2 {
        return bad("--pop", "population must be at least 2");
    }
    if s.gens < 1 {
        return bad("--gens", "need at least one generation");
    }
    if s.k_neighbors < 1 {
        return bad("--k-neighbors", "must be at least 1");
    }
    if s.k < 1 || s.k > s.pop * s.gens {
        return bad("--k", &format!("must lie in 1..={} (the archive size)", s.pop * s.gens));
    }
    for (flag, rate) in [("--crossover", s.crossover), ("--mutation", s.mutation)] {
        if !(0.0..=1.0).contains(&rate) {
            return bad(flag, "must be a probability in [0, 1]");
        }
    }
    if s.tournament < 1 {
        return bad("--tournament", "must be at least 1");
    }
    if !(s.sigma.is_finite() && s.sigma >= 0.0) {
        return bad("--sigma", "must be a finite non-negative fraction");
    }
    let policy = match s.seed_policy.as_str() {
        "fixed" => SeedPolicy::Fixed(s.seed),
        other => other.parse().map_err(|e: String| CliError::usage(format!("--seed-policy: {e}")))?,
    };
    let config = SearchConfig {
        population: s.pop,
        generations: s.gens,
        k_neighbors: s.k_neighbors,
        crossover_rate: s.crossover,
        mutation_rate: s.mutation,
        tournament_size: s.tournament,
        mutation_sigma_fraction: s.sigma,
        seed: s.seed,
        k_medoids: s.k,
    };
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok((config, policy))
}

fn record_search(m: &mut RunManifest, c: &SearchConfig, policy: SeedPolicy) {
    m.param("population", c.population);
    m.param("generations", c.generations);
    m.param("k_neighbors", c.k_neighbors);
    m.param("k_medoids", c.k_medoids);
    m.param("crossover_rate", c.crossover_rate);
    m.param("mutation_rate", c.mutation_rate);
    m.param("tournament_size", c.tournament_size);
    m.param("mutation_sigma_fraction", c.mutation_sigma_fraction);
    m.param("seed", c.seed);
    m.param("seed_policy", policy);
}

fn calibration(path: Option<&Path>, profile: &SimProfile) -> Result<Calibration, CliError> {
    match path {
        None => Ok(Calibration::builtin(&profile.name)),
        Some(p) => Calibration::load(p).map_err(|e| match e {
            EvalError::Io { path, source } => read_error(&path, source),
            other => CliError::InputFormat(format!("{}: {other}", p.display())),
        }),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(CliError::output(dir))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(CliError::output(path))
}

fn check_frame_size(flag: &str, size: u16) -> Result<usize, CliError> {
    if size < 8 {
        return Err(CliError::usage(format!("{flag}: frames must be at least 8 pixels wide")));
    }
    Ok(usize::from(size))
}

/// Connects an encoder session pool when the endpoint backend is selected.
fn connect_backend(b: &BackendArgs) -> Result<Option<SessionPool>, CliError> {
    let kind = b.backend.unwrap_or(if b.endpoint.is_some() {
        BackendKind::Endpoint
    } else {
        BackendKind::Metrics
    });
    match (kind, &b.endpoint) {
        (BackendKind::Metrics, None) => Ok(None),
        (BackendKind::Metrics, Some(_)) => Err(CliError::usage("--endpoint cannot be combined with --backend metrics")),
        (BackendKind::Endpoint, None) => Err(CliError::usage("--backend endpoint requires --endpoint")),
        (BackendKind::Endpoint, Some(spec)) => {
            let size = check_frame_size("--frame-size", b.frame_size)?;
            if b.sessions < 1 {
                return Err(CliError::usage("--sessions: must be at least 1"));
            }
            let spec: EndpointSpec = spec.parse().map_err(|e| CliError::usage(format!("--endpoint: {e}")))?;
            let shape = StackShape::new(STACK_CHANNELS as u8, size as u16, size as u16);
            let pool = SessionPool::connect(&spec, shape, b.sessions, Duration::from_secs(b.timeout_secs))?;
            log::info!("connected {} session(s) to {spec}, dimension {}", pool.len(), pool.dim());
            Ok(Some(pool))
        }
    }
}

fn record_backend(m: &mut RunManifest, b: &BackendArgs, pool: Option<&SessionPool>) {
    match pool {
        None => m.param("backend", "metrics"),
        Some(p) => {
            m.param("backend", "endpoint");
            m.param("endpoint", b.endpoint.as_deref().unwrap_or(""));
            m.param("sessions", p.len());
            m.param("embedding_dim", p.dim());
            m.param("frame_size", b.frame_size);
        }
    }
}

fn load_archive(path: &Path) -> Result<NoveltyArchive, CliError> {
    NoveltyArchive::load(path).map_err(|e| match e {
        DiscoveryError::Io { path, source } => read_error(&path, source),
        other => other.into(),
    })
}

fn save_archive(dir: &Path, archive: &NoveltyArchive) -> Result<(), CliError> {
    archive.save(&dir.join(ARCHIVE_FILE))?;
    archive.save_index(&dir.join(INDEX_FILE))?;
    Ok(())
}

fn write_frame(path: &Path, frame: &swarmdisc::capture::Frame) -> Result<(), CliError> {
    let file = File::create(path).map_err(CliError::output(path))?;
    write_pgm(frame, BufWriter::new(file)).map_err(CliError::output(path))
}

fn dump_frames(traj: &Trajectory, every: usize, size: usize, dir: &Path) -> Result<usize, CliError> {
    ensure_dir(dir)?;
    let steps: Vec<usize> = (0..traj.snapshots.len()).step_by(every).collect();
    let frames = steps
        .par_iter()
        .map(|&k| rasterize(&traj.snapshots[k], size, size, &traj.profile))
        .collect::<Result<Vec<_>, CaptureError>>()?;
    for (k, frame) in steps.iter().zip(&frames) {
        write_frame(&dir.join(format!("frame_{k:05}.pgm")), frame)?;
    }
    Ok(frames.len())
}

fn dump_stack(stack: &FrameStack, dir: &Path, m: &mut RunManifest) -> Result<(), CliError> {
    for (c, frame) in stack.channels.iter().enumerate() {
        let name = format!("stack_{c}_step{:05}.pgm", stack.steps[c]);
        write_frame(&dir.join(&name), frame)?;
        m.output(name);
    }
    Ok(())
}

// ---- subcommands ----

fn simulate(a: &SimulateArgs, args: &[String], given: &ProfileOverrides) -> Result<(), CliError> {
    let profile = resolve_profile(&a.profile, MAIN_ROLE, given)?;
    let genome: ControllerGenome = a
        .genome
        .parse()
        .map_err(|e| CliError::usage(format!("--genome: {e}")))?;
    genome
        .validate(&profile)
        .map_err(|e| CliError::usage(format!("--genome: {e}")))?;
    let size = check_frame_size("--frame-size", a.frame_size)?;
    let cal = calibration(a.calibration.as_deref(), &profile)?;
    ensure_dir(&a.out)?;

    let traj = run_episode(&genome, &profile, a.seed)?;
    let mut m = RunManifest::new("simulate", args);
    m.profiles.insert(MAIN_ROLE.into(), profile.clone());
    m.param("genome", genome);
    m.param("seed", a.seed);

    let path = a.out.join(TRAJECTORY_FILE);
    let file = File::create(&path).map_err(CliError::output(&path))?;
    write_trajectory(&traj, BufWriter::new(file)).map_err(CliError::output(&path))?;
    m.output(TRAJECTORY_FILE);

    let metrics = handcrafted_embed(&traj, &profile);
    let label = classify_behavior(&traj, &profile, &cal);
    let mut text = String::from("# swarmdisc metrics v1\n");
    for (name, v) in swarmdisc::behavior::HandcraftedMetrics::NAMES.iter().zip(metrics.to_array()) {
        text.push_str(&format!("{name}={v}\n"));
    }
    text.push_str(&format!("label={label}\n"));
    write_text(&a.out.join(METRICS_FILE), &text)?;
    m.output(METRICS_FILE);

    if a.frame_every > 0 {
        let n = dump_frames(&traj, a.frame_every, size, &a.out.join("frames"))?;
        m.param("frames", n);
        m.output("frames/");
    }
    m.write(&a.out)?;
    print!("{text}");
    Ok(())
}

fn replay(a: &ReplayArgs, args: &[String]) -> Result<(), CliError> {
    if a.every < 1 {
        return Err(CliError::usage("--every: must be at least 1"));
    }
    let size = check_frame_size("--frame-size", a.frame_size)?;
    let file = File::open(&a.input).map_err(|e| read_error(&a.input, e))?;
    let traj = read_trajectory(BufReader::new(file))
        .map_err(|e| CliError::InputFormat(format!("{}: {e}", a.input.display())))?;
    ensure_dir(&a.out)?;
    let mut m = RunManifest::new("replay", args);
    m.param("input", a.input.display());
    m.param("genome", traj.genome);
    m.param("seed", traj.seed);
    let n = dump_frames(&traj, a.every, size, &a.out.join("frames"))?;
    m.param("frames", n);
    m.output("frames/");
    match subsample(&traj, size, size) {
        Ok(stack) => dump_stack(&stack, &a.out, &mut m)?,
        Err(CaptureError::EpisodeTooShort(_)) => log::warn!("episode too short for a frame stack"),
        Err(e) => return Err(e.into()),
    }
    m.write(&a.out)?;
    println!("wrote {n} frames to {}", a.out.join("frames").display());
    Ok(())
}

fn gen_dataset(a: &DatasetArgs, args: &[String], given: &ProfileOverrides) -> Result<(), CliError> {
    let profile = resolve_profile(&a.profile, MAIN_ROLE, given)?;
    if a.n < 1 {
        return Err(CliError::usage("--n: must be at least 1"));
    }
    check_frame_size("--frame-size", a.frame_size)?;
    ensure_dir(&a.out)?;
    let summary = generate_dataset(a.n, &profile, a.seed, a.frame_size, a.frame_size, &a.out.join(DATASET_FILE))?;
    let mut m = RunManifest::new("gen-dataset", args);
    m.profiles.insert(MAIN_ROLE.into(), profile);
    m.param("n", a.n);
    m.param("seed", a.seed);
    m.param("frame_size", a.frame_size);
    m.output(DATASET_FILE);
    m.write(&a.out)?;
    println!(
        "wrote {} records ({} bytes) to {}",
        summary.records,
        summary.bytes,
        summary.path.display()
    );
    Ok(())
}

pub struct DiscoveryOutcome {
    pub archive: NoveltyArchive,
    pub report: MedoidReport,
}

/// Runs discovery and writes the archive, index and medoid report to `dir`.
/// A failed run leaves the partial archive behind.
fn discover_into(
    dir: &Path,
    profile: &SimProfile,
    config: &SearchConfig,
    policy: SeedPolicy,
    backend: &mut EvalBackend<'_>,
    cal: &Calibration,
) -> Result<DiscoveryOutcome, CliError> {
    ensure_dir(dir)?;
    let started = Instant::now();
    let result = run_discovery_with(profile, config, backend, policy, |s| {
        log::info!(
            "[{}] generation {} archive {} novelty mean {:.4} max {:.4}",
            profile.name,
            s.generation,
            s.archive_len,
            s.mean_novelty,
            s.max_novelty
        )
    });
    let archive = match result {
        Ok(a) => a,
        Err(e) => {
            let partial = dir.join(PARTIAL_ARCHIVE_FILE);
            e.partial.save(&partial)?;
            e.partial.save_index(&dir.join(INDEX_FILE))?;
            eprintln!("partial archive ({} entries) saved to {}", e.partial.len(), partial.display());
            return Err(e.into());
        }
    };
    log::info!("[{}] {} entries in {:.1?}", profile.name, archive.len(), started.elapsed());
    save_archive(dir, &archive)?;
    let report = MedoidReport::build(&archive, config.k_medoids, config.seed, profile, cal)?;
    write_text(&dir.join(MEDOIDS_FILE), &report.render(&archive, &profile.name))?;
    Ok(DiscoveryOutcome { archive, report })
}

fn discover(a: &DiscoverArgs, args: &[String], given: &ProfileOverrides) -> Result<(), CliError> {
    let profile = resolve_profile(&a.profile, MAIN_ROLE, given)?;
    let (config, policy) = search_config(&a.search)?;
    let cal = calibration(a.calibration.as_deref(), &profile)?;
    let mut pool = connect_backend(&a.backend)?;
    let mut m = RunManifest::new("discover", args);
    m.profiles.insert(MAIN_ROLE.into(), profile.clone());
    record_search(&mut m, &config, policy);
    record_backend(&mut m, &a.backend, pool.as_ref());

    let size = usize::from(a.backend.frame_size);
    let mut backend = match pool.as_mut() {
        Some(pool) => EvalBackend::Learned {
            pool,
            width: size,
            height: size,
        },
        None => EvalBackend::Handcrafted,
    };
    let outcome = discover_into(&a.out, &profile, &config, policy, &mut backend, &cal);
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            m.param("status", "failed");
            m.output(PARTIAL_ARCHIVE_FILE);
            if let Err(w) = m.write(&a.out) {
                log::warn!("{w}");
            }
            return Err(e);
        }
    };
    for f in [ARCHIVE_FILE, INDEX_FILE, MEDOIDS_FILE] {
        m.output(f);
    }
    m.write(&a.out)?;
    print!("{}", outcome.report.render(&outcome.archive, &profile.name));
    Ok(())
}

fn cluster(a: &ClusterArgs, args: &[String], given: &ProfileOverrides) -> Result<(), CliError> {
    let profile = resolve_profile(&a.profile, MAIN_ROLE, given)?;
    let cal = calibration(a.calibration.as_deref(), &profile)?;
    let archive = load_archive(&a.archive)?;
    if a.k < 1 || a.k > archive.len() {
        return Err(CliError::usage(format!("--k: must lie in 1..={} (the archive size)", archive.len())));
    }
    ensure_dir(&a.out)?;
    let report = MedoidReport::build(&archive, a.k, a.seed, &profile, &cal)?;
    let text = report.render(&archive, &profile.name);
    write_text(&a.out.join(MEDOIDS_FILE), &text)?;
    let mut m = RunManifest::new("cluster", args);
    m.profiles.insert(MAIN_ROLE.into(), profile);
    m.param("archive", a.archive.display());
    m.param("k", a.k);
    m.param("seed", a.seed);
    m.output(MEDOIDS_FILE);
    m.write(&a.out)?;
    print!("{text}");
    Ok(())
}

fn embed_trajectories(
    trajs: &[&Trajectory],
    profile: &SimProfile,
    pool: Option<&mut SessionPool>,
    size: usize,
) -> Result<Vec<BehaviorVector>, CliError> {
    match pool {
        None => Ok(trajs.par_iter().map(|t| handcrafted_embed(t, profile).to_vector()).collect()),
        Some(pool) => {
            let stacks = trajs
                .par_iter()
                .map(|t| subsample(t, size, size))
                .collect::<Result<Vec<_>, _>>()?;
            pool.embed_all(&stacks)
                .map_err(|(i, e)| CliError::Embedding(format!("item {i}: {e}")))
        }
    }
}

fn evaluate(a: &EvaluateArgs, args: &[String], given: &ProfileOverrides) -> Result<(), CliError> {
    if !a.synthetic && a.archive.is_none() && a.labeled.is_none() {
        return Err(CliError::usage("one of --synthetic, --archive or --labeled is required"));
    }
    let profile = resolve_profile(&a.profile, MAIN_ROLE, given)?;
    let cal = calibration(a.calibration.as_deref(), &profile)?;
    let mut m = RunManifest::new("evaluate", args);
    m.profiles.insert(MAIN_ROLE.into(), profile.clone());
    m.param("seed", a.seed);

    let mut accuracy = None;
    let (labeled, rows): (Vec<LabeledBehavior>, Vec<ExportRow>) = if a.synthetic {
        if a.per_class < 1 {
            return Err(CliError::usage("--per-class: must be at least 1"));
        }
        let mut pool = connect_backend(&a.backend)?;
        record_backend(&mut m, &a.backend, pool.as_ref());
        m.param("source", "synthetic");
        m.param("per_class", a.per_class);
        let suite = synthetic_suite(&profile, a.per_class, a.seed);
        let trajs: Vec<&Trajectory> = suite.iter().map(|(_, t)| t).collect();
        let vectors = embed_trajectories(&trajs, &profile, pool.as_mut(), usize::from(a.backend.frame_size))?;
        let correct = suite
            .par_iter()
            .filter(|(label, t)| classify_behavior(t, &profile, &cal) == *label)
            .count();
        accuracy = Some(correct as f64 / suite.len() as f64);
        suite
            .iter()
            .zip(vectors)
            .map(|((label, t), vector)| {
                let row = ExportRow::new(label.name(), t.genome, &vector);
                (LabeledBehavior { label: *label, vector }, row)
            })
            .unzip()
    } else if let Some(path) = &a.archive {
        if a.backend.endpoint.is_some() || a.backend.backend.is_some() {
            return Err(CliError::usage("--backend/--endpoint do not apply to --archive: vectors come from the archive"));
        }
        let archive = load_archive(path)?;
        m.param("source", "archive");
        m.param("archive", path.display());
        let labels = archive
            .entries()
            .par_iter()
            .map(|e| run_episode(&e.genome, &profile, e.seed).map(|t| classify_behavior(&t, &profile, &cal)))
            .collect::<Result<Vec<Label>, _>>()?;
        archive
            .entries()
            .iter()
            .zip(labels)
            .map(|(e, label)| {
                let row = ExportRow::new(label.name(), e.genome, &e.vector);
                (LabeledBehavior { label, vector: e.vector.clone() }, row)
            })
            .unzip()
    } else {
        let path = a.labeled.as_ref().expect("checked above");
        let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
        let rows = parse_rows(&text).map_err(|e| CliError::InputFormat(format!("{}: {e}", path.display())))?;
        m.param("source", "labeled");
        m.param("labeled", path.display());
        let labeled = rows
            .iter()
            .map(|r| {
                let label = r
                    .tag
                    .parse::<Label>()
                    .map_err(|e| CliError::InputFormat(format!("{}: {e}", path.display())))?;
                let vector = BehaviorVector::new(swarmdisc::behavior::Backend::Learned, r.values.clone());
                Ok(LabeledBehavior { label, vector })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        (labeled, rows)
    };

    let matrix = triplet_confusion(&labeled)?;
    ensure_dir(&a.out)?;
    let table = matrix.to_table();
    write_text(&a.out.join(CONFUSION_FILE), &table)?;
    write_text(&a.out.join(CONFUSION_KV_FILE), &matrix.to_key_values())?;
    export_embeddings(&rows, &a.out.join(EMBEDDINGS_FILE))?;
    for f in [CONFUSION_FILE, CONFUSION_KV_FILE, EMBEDDINGS_FILE] {
        m.output(f);
    }
    if let Some(acc) = accuracy {
        m.param("classifier_accuracy", acc);
    }
    m.write(&a.out)?;
    print!("{table}");
    if let Some(acc) = accuracy {
        println!("classifier accuracy on the synthetic suite: {acc}");
    }
    Ok(())
}

fn ablate(a: &AblateArgs, args: &[String], given: &ProfileOverrides) -> Result<(), CliError> {
    let (config, policy) = search_config(&a.search)?;
    let mut profiles = Vec::new();
    for name in ["rsrs", "default"] {
        let profile = match given.get(name) {
            Some(p) => p.clone(),
            None => {
                let mut p = SimProfile::builtin(name)?;
                apply_overrides(&mut p, &a.overrides)?;
                p
            }
        };
        profiles.push(profile);
    }
    ensure_dir(&a.out)?;
    let mut m = RunManifest::new("ablate", args);
    record_search(&mut m, &config, policy);
    m.param("backend", "metrics");

    let mut outcomes = Vec::new();
    for profile in &profiles {
        let cal = Calibration::builtin(&profile.name);
        let dir = a.out.join(&profile.name);
        let outcome = discover_into(&dir, profile, &config, policy, &mut EvalBackend::Handcrafted, &cal)?;
        for f in [ARCHIVE_FILE, INDEX_FILE, MEDOIDS_FILE] {
            m.output(format!("{}/{f}", profile.name));
        }
        m.profiles.insert(profile.name.clone(), profile.clone());
        outcomes.push(outcome);
    }

    let check = FrictionCheck::run(&profiles[1], &profiles[0]);
    let header = format!(
        "# seed={} seed_policy={} population={} generations={} k={}",
        config.seed, policy, config.population, config.generations, config.k_medoids
    );
    let reports: Vec<(&str, &MedoidReport)> = profiles
        .iter()
        .zip(&outcomes)
        .map(|(p, o)| (p.name.as_str(), &o.report))
        .collect();
    let text = render_ablation(&reports, &check, &header);
    write_text(&a.out.join(ABLATION_FILE), &text)?;
    m.output(ABLATION_FILE);
    m.param("mechanism", if check.holds() { "ok" } else { "violated" });
    m.write(&a.out)?;
    print!("{text}");
    if !check.holds() {
        return Err(CliError::Failed(
            "friction mechanism violated: the frictionless profile must slide along walls and full friction must stop it"
                .into(),
        ));
    }
    Ok(())
}

/// Replaces any `--out` in `args` with `out`.
fn with_out(args: &[String], out: &Path) -> Vec<String> {
    let mut kept = Vec::with_capacity(args.len() + 2);
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            kept.push(a.clone());
        }
    }
    kept.push("--out".into());
    kept.push(out.display().to_string());
    kept
}

fn rerun(a: &RerunArgs) -> Result<(), CliError> {
    let path = if a.manifest.is_dir() {
        a.manifest.join(MANIFEST_FILE)
    } else {
        a.manifest.clone()
    };
    let m = RunManifest::load(&path)?;
    if m.args.first().map(String::as_str) == Some("rerun") || m.args.is_empty() {
        return Err(CliError::InputFormat(format!(
            "{}: manifest does not record a runnable subcommand",
            path.display()
        )));
    }
    if m.tool_version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest written by version {}, running {}", m.tool_version, env!("CARGO_PKG_VERSION"));
    }
    let args = match &a.out {
        Some(out) => with_out(&m.args, out),
        None => m.args.clone(),
    };
    std::io::stdout().flush().ok();
    crate::run_args(&args, &m.profiles)
}
