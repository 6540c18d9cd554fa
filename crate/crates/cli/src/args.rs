use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crowdqf::ga::GaConfig;

#[derive(Debug, Parser)]
#[command(name = "crowdqf", version, about = "Quality scoring and parameter tuning for crowd trajectories")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; never changes any output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write a run manifest here after a successful run.
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit per-feature reference statistics on golden trajectories.
    FitReference(FitReferenceArgs),
    /// Learn feature weights from golden and degraded trajectories.
    TrainWeights(TrainWeightsArgs),
    /// Score a trajectory.
    Score(ScoreArgs),
    /// Write the feature samples of a trajectory.
    Features(FeaturesArgs),
    /// Inject an artifact into a trajectory.
    Degrade(DegradeArgs),
    /// Run the social-forces simulator on a generated scenario.
    Simulate(SimulateArgs),
    /// Search simulator parameters maximizing the score.
    Tune(TuneArgs),
    /// Re-run a command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct FitReferenceArgs {
    /// Directory of golden trajectory CSV files.
    #[arg(long)]
    pub golden: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crowdqf::qf::SIGMA_MIN)]
    pub sigma_min: f64,
    /// Density bin width of the fitted fundamental diagram (persons/m²).
    #[arg(long, default_value_t = crowdqf::qf::DEFAULT_FD_BIN_WIDTH)]
    pub fd_bin_width: f64,
}

#[derive(Debug, Args)]
pub struct GaArgs {
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub mutation_scale: Option<f64>,
    #[arg(long)]
    pub elitism: Option<usize>,
    #[arg(long)]
    pub tournament: Option<usize>,
    /// Generations without improvement before stopping.
    #[arg(long)]
    pub plateau: Option<usize>,
    #[arg(long)]
    pub plateau_epsilon: Option<f64>,
}

impl GaArgs {
    pub fn config(&self, seed: u64) -> GaConfig {
        let d = GaConfig::default();
        GaConfig {
            population_size: self.population.unwrap_or(d.population_size),
            max_generations: self.generations.unwrap_or(d.max_generations),
            crossover_rate: self.crossover_rate.unwrap_or(d.crossover_rate),
            mutation_rate: self.mutation_rate.unwrap_or(d.mutation_rate),
            mutation_scale: self.mutation_scale.unwrap_or(d.mutation_scale),
            elitism_count: self.elitism.unwrap_or(d.elitism_count),
            tournament_size: self.tournament.unwrap_or(d.tournament_size),
            plateau_generations: self.plateau.unwrap_or(d.plateau_generations),
            plateau_epsilon: self.plateau_epsilon.unwrap_or(d.plateau_epsilon),
            seed,
            ..d
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainWeightsArgs {
    #[arg(long)]
    pub golden: PathBuf,
    /// Directory of degraded trajectories (target 0).
    #[arg(long, conflicts_with = "auto_degrade", required_unless_present = "auto_degrade")]
    pub degraded: Option<PathBuf>,
    /// Degrade the golden set instead, cycling through these modes.
    #[arg(long, value_delimiter = ',', value_name = "MODES")]
    pub auto_degrade: Option<Vec<String>>,
    /// Degraded crowds generated per golden crowd with --auto-degrade.
    #[arg(long, default_value_t = 2)]
    pub per_golden: usize,
    #[arg(long)]
    pub stats: PathBuf,
    /// Weights seeding the first generation.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Fitness history CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[command(flatten)]
    pub ga: GaArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub stats: PathBuf,
    /// Weight file; the bundled Table 2 weights when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Per-feature breakdown CSV [default: <trajectory>.breakdown.csv].
    #[arg(long)]
    pub breakdown: Option<PathBuf>,
    /// Also score consecutive windows of this many steps.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Reference statistics providing the fundamental diagram.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    /// no-avoidance, jitter[:rad], speed-scale[:factor] or freeze[:fraction].
    #[arg(long)]
    pub mode: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Circle,
    Crossing,
    Random,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "circle")]
    pub kind: Kind,
    #[arg(long, default_value_t = 20)]
    pub agents: usize,
    /// Crossing angle in degrees.
    #[arg(long, default_value_t = 90.0)]
    pub angle: f64,
    /// Target density (persons/m²).
    #[arg(long)]
    pub density: Option<f64>,
    /// Circle radius or square side (m).
    #[arg(long)]
    pub size: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Social-forces parameter file; defaults when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 20.0)]
    pub duration: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Single,
    Generic,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long, value_enum, default_value = "single")]
    pub mode: Mode,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Number of scenarios, seeded from --seed onwards.
    #[arg(long, default_value_t = 1)]
    pub scenarios: usize,
    #[arg(long)]
    pub stats: PathBuf,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 20.0)]
    pub duration: f64,
    /// Mutation scale factor per generation.
    #[arg(long, default_value_t = crowdqf::tune::DEFAULT_EXPLORATION_DECAY)]
    pub decay: f64,
    #[command(flatten)]
    pub ga: GaArgs,
    /// Output parameter file.
    #[arg(long)]
    pub out: PathBuf,
    /// Score history CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Trajectory of the best parameters on the first scenario.
    #[arg(long)]
    pub best_trajectory: Option<PathBuf>,
    /// Best-parameter snapshots CSV, one row every --snapshot-every generations.
    #[arg(long, requires = "snapshot_every")]
    pub snapshots: Option<PathBuf>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}
