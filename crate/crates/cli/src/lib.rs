//! Command-line driver: simulation, dataset generation, discovery,
//! clustering, evaluation and the profile ablation.

pub mod ablation;
mod commands;
pub mod error;
pub mod manifest;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use swarmdisc::sim::SimProfile;

pub use error::{exit, CliError};
pub use manifest::RunManifest;

/// Names profiles in `$SWARMDISC_PROFILE_DIR/<name>.profile`.
pub const PROFILE_DIR_VAR: &str = "SWARMDISC_PROFILE_DIR";

#[derive(Debug, Parser)]
#[command(name = "swarmdisc", version, about = "Discover emergent swarm behaviors by novelty search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one controller and write its trajectory.
    Simulate(SimulateArgs),
    /// Render a trajectory file to greymap frames.
    Replay(ReplayArgs),
    /// Write a dataset of frame stacks from uniformly sampled controllers.
    GenDataset(DatasetArgs),
    /// Run novelty search and report k representative behaviors.
    Discover(DiscoverArgs),
    /// Cluster an existing archive into k medoids.
    Cluster(ClusterArgs),
    /// Triplet confusion matrix of a labeled set, plus an embedding export.
    Evaluate(EvaluateArgs),
    /// Run discovery under the rsrs and default profiles and compare classes.
    Ablate(AblateArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Built-in name (rsrs, default), a profile file, or a name in $SWARMDISC_PROFILE_DIR.
    #[arg(long, default_value = "rsrs")]
    pub profile: String,
    /// Override one profile field, e.g. `--set episode_steps=300`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 50)]
    pub pop: usize,
    #[arg(long, default_value_t = 100)]
    pub gens: usize,
    /// Nearest neighbors averaged for novelty.
    #[arg(long, default_value_t = 15)]
    pub k_neighbors: usize,
    /// Number of medoids to report.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0.7)]
    pub crossover: f64,
    #[arg(long, default_value_t = 0.15)]
    pub mutation: f64,
    #[arg(long, default_value_t = 3)]
    pub tournament: usize,
    /// Mutation standard deviation as a fraction of each gene's range.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `fixed` (spawn seed = --seed), `fixed:<n>` or `per-genome`.
    #[arg(long, default_value = "fixed")]
    pub seed_policy: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Metrics,
    Endpoint,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Defaults to `endpoint` when --endpoint is given, else `metrics`.
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Encoder server: a command line to spawn, or tcp://host:port.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Parallel encoder sessions.
    #[arg(long, default_value_t = 1)]
    pub sessions: usize,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    /// Frame stack width and height for the encoder.
    #[arg(long, default_value_t = 64)]
    pub frame_size: u16,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Genes `v0,w0,v1,w1`.
    #[arg(long, allow_hyphen_values = true)]
    pub genome: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dump every n-th frame as a greymap (0 disables).
    #[arg(long, default_value_t = 0)]
    pub frame_every: usize,
    #[arg(long, default_value_t = 64)]
    pub frame_size: u16,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value = "swarmdisc-simulate")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Trajectory file written by `simulate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub every: usize,
    #[arg(long, default_value_t = 64)]
    pub frame_size: u16,
    #[arg(long, default_value = "swarmdisc-replay")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub frame_size: u16,
    #[arg(long, default_value = "swarmdisc-dataset")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Classifier thresholds; defaults to the shipped file for the profile.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value = "swarmdisc-discover")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value = "swarmdisc-cluster")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Label the closed-form synthetic suite.
    #[arg(long, conflicts_with_all = ["archive", "labeled"])]
    pub synthetic: bool,
    #[arg(long, default_value_t = 20)]
    pub per_class: usize,
    /// Label archive entries with the classifier.
    #[arg(long, conflicts_with = "labeled")]
    pub archive: Option<PathBuf>,
    /// An embedding export whose tags are labels.
    #[arg(long)]
    pub labeled: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value = "swarmdisc-evaluate")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    /// Overrides applied to both profiles, e.g. `--set episode_steps=300`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value = "swarmdisc-ablate")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Profiles supplied by a manifest, by role, replacing `--profile`/`--set`.
pub type ProfileOverrides = BTreeMap<String, SimProfile>;

/// Parses `args` (without the program name) and runs the subcommand.
pub fn run_args(args: &[String], profiles: &ProfileOverrides) -> Result<(), CliError> {
    let argv = std::iter::once("swarmdisc".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string().trim_end().to_string()))?;
    commands::dispatch(cli.command, args, profiles)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with<I: IntoIterator<Item = OsString>>(argv: I) -> i32 {
    let mut argv = argv.into_iter();
    let _program = argv.next();
    let args: Result<Vec<String>, _> = argv.map(OsString::into_string).collect();
    let Ok(args) = args else {
        eprintln!("error: arguments must be valid UTF-8");
        return exit::USAGE;
    };
    let all = std::iter::once("swarmdisc".to_string()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(all) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match commands::dispatch(cli.command, &args, &ProfileOverrides::new()) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
