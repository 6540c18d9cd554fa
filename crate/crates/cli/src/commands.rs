use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use crowdqf::features::{extract, FeatureParams};
use crowdqf::io::{read_crowd_csv, write_crowd_csv};
use crowdqf::learn::{auto_degrade, build_training_set, check_correlations, degrade, train_weights, DegradeMode};
use crowdqf::qf::{fit_reference, radar, score, score_windows, FitOptions, ReferenceStats, WeightVector};
use crowdqf::sim::{simulate, Scenario, ScenarioKind, SocialForcesParams};
use crowdqf::tune::{tune, TuneConfig, TuneMode};
use crowdqf::{CrowdTrajectory, Error, Result};
use rayon::prelude::*;

use crate::args::*;
use crate::manifest::Manifest;

pub fn dispatch(command: &Command, seed: u64) -> Result<()> {
    match command {
        Command::FitReference(a) => fit_reference_cmd(a),
        Command::TrainWeights(a) => train_weights_cmd(a, seed),
        Command::Score(a) => score_cmd(a),
        Command::Features(a) => features_cmd(a),
        Command::Degrade(a) => degrade_cmd(a, seed),
        Command::Simulate(a) => simulate_cmd(a, seed),
        Command::Tune(a) => tune_cmd(a, seed),
        Command::Replay(_) => Err(Error::InvalidArgument("a manifest cannot replay another replay".into())),
    }
}

pub fn replay(args: &ReplayArgs) -> Result<()> {
    let manifest = Manifest::read(&args.manifest)?;
    let mut argv = vec!["crowdqf".to_string()];
    argv.extend(manifest.argv.iter().cloned());
    argv.extend(["--seed".to_string(), manifest.seed.to_string()]);
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| Error::MalformedInput(format!("manifest command line does not parse: {e}")))?;
    dispatch(&cli.command, cli.seed)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Trajectory CSV files of a directory, in file-name order.
fn read_dir_crowds(dir: &Path) -> Result<Vec<CrowdTrajectory>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths.par_iter().map(read_crowd_csv).collect()
}

fn load_weights(path: Option<&PathBuf>) -> Result<WeightVector> {
    match path {
        Some(p) => WeightVector::read(p),
        None => Ok(WeightVector::table2()),
    }
}

fn fit_reference_cmd(a: &FitReferenceArgs) -> Result<()> {
    let golden = read_dir_crowds(&a.golden)?;
    if golden.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no trajectory CSV files in {}",
            a.golden.display()
        )));
    }
    let params = FeatureParams::default();
    let sets = golden
        .par_iter()
        .map(|c| extract(c, &params))
        .collect::<Result<Vec<_>>>()?;
    let options = FitOptions {
        sigma_min: a.sigma_min,
        fd_bin_width: a.fd_bin_width,
    };
    fit_reference(&sets, options)?.write(&a.out)
}

fn train_weights_cmd(a: &TrainWeightsArgs, seed: u64) -> Result<()> {
    let stats = ReferenceStats::read(&a.stats)?;
    let golden = read_dir_crowds(&a.golden)?;
    let degraded: Vec<(CrowdTrajectory, f64)> = match (&a.degraded, &a.auto_degrade) {
        (Some(dir), _) => read_dir_crowds(dir)?.into_iter().map(|c| (c, 0.0)).collect(),
        (None, Some(modes)) => {
            let modes = modes
                .iter()
                .map(|m| m.parse::<DegradeMode>())
                .collect::<Result<Vec<_>>>()?;
            auto_degrade(&golden, &modes, a.per_golden, seed)?
        }
        (None, None) => unreachable!("clap requires one source of degraded crowds"),
    };
    let examples = build_training_set(&golden, &degraded, &stats.feature_params())?;
    if examples.len() >= 2 {
        for c in check_correlations(&examples)?.iter().filter(|c| c.flagged) {
            eprintln!("warning: {} and {} are strongly correlated (rho = {:.3})", c.a, c.b, c.rho);
        }
    }
    let initial = a.initial.as_ref().map(WeightVector::read).transpose()?;
    let result = train_weights(&examples, &stats, &a.ga.config(seed), initial.as_ref())?;
    result.weights.write(&a.out)?;
    if let Some(path) = &a.history {
        let mut csv = String::from("generation,best_fitness\n");
        for (g, f) in result.history.iter().enumerate() {
            let _ = writeln!(csv, "{g},{f}");
        }
        write_text(path, &csv)?;
    }
    println!("fitness={:.4}", result.fitness);
    Ok(())
}

fn default_breakdown_path(trajectory: &Path) -> PathBuf {
    trajectory.with_extension("breakdown.csv")
}

fn score_cmd(a: &ScoreArgs) -> Result<()> {
    let crowd = read_crowd_csv(&a.trajectory)?;
    let stats = ReferenceStats::read(&a.stats)?;
    let weights = load_weights(a.weights.as_ref())?;
    let result = score(&crowd, &stats, &weights)?;
    println!("S_QF={:.4}", result.total);
    let mut csv = String::from("feature,cost,weight,contribution,radar\n");
    for (id, closeness) in radar(&result) {
        let _ = writeln!(
            csv,
            "{id},{},{},{},{closeness}",
            result.cost(id),
            weights.get(id),
            result.contribution(id)
        );
    }
    let path = a.breakdown.clone().unwrap_or_else(|| default_breakdown_path(&a.trajectory));
    write_text(&path, &csv)?;
    if let Some(window) = a.window {
        for (k, w) in score_windows(&crowd, &stats, &weights, window)?.iter().enumerate() {
            println!("window {k} S_QF={:.4}", w.total);
        }
    }
    Ok(())
}

fn features_cmd(a: &FeaturesArgs) -> Result<()> {
    let crowd = read_crowd_csv(&a.trajectory)?;
    let params = match &a.stats {
        Some(p) => ReferenceStats::read(p)?.feature_params(),
        None => FeatureParams::default(),
    };
    let set = extract(&crowd, &params)?;
    let mut out = Vec::new();
    set.write_csv(&mut out).expect("writing to memory");
    std::fs::write(&a.out, out).map_err(|e| Error::io(&a.out, e))
}

fn degrade_cmd(a: &DegradeArgs, seed: u64) -> Result<()> {
    let crowd = read_crowd_csv(&a.trajectory)?;
    let mode: DegradeMode = a.mode.parse()?;
    write_crowd_csv(&a.out, &degrade(&crowd, mode, seed)?)
}

fn scenario(a: &ScenarioArgs, seed: u64) -> Scenario {
    let kind = match a.kind {
        Kind::Circle => ScenarioKind::Circle,
        Kind::Crossing => ScenarioKind::Crossing(a.angle.to_radians()),
        Kind::Random => ScenarioKind::Random,
    };
    Scenario {
        size: a.size,
        density: a.density,
        ..Scenario::new(kind, a.agents, seed)
    }
}

fn simulate_cmd(a: &SimulateArgs, seed: u64) -> Result<()> {
    let params = match &a.params {
        Some(p) => SocialForcesParams::read(p)?,
        None => SocialForcesParams::default(),
    };
    let crowd = simulate(&scenario(&a.scenario, seed), &params, a.duration, crowdqf::CANONICAL_DT)?;
    write_crowd_csv(&a.out, &crowd)
}

fn tune_cmd(a: &TuneArgs, seed: u64) -> Result<()> {
    let stats = ReferenceStats::read(&a.stats)?;
    let weights = load_weights(a.weights.as_ref())?;
    let mode = match a.mode {
        Mode::Single => TuneMode::Single,
        Mode::Generic => TuneMode::Generic,
    };
    let scenarios = (0..a.scenarios as u64)
        .map(|k| scenario(&a.scenario, seed.wrapping_add(k)))
        .collect();
    let mut config = TuneConfig::new(mode, scenarios, a.duration);
    config.ga = a.ga.config(seed);
    config.exploration_decay = a.decay;
    config.snapshot_every = a.snapshot_every.unwrap_or(0);
    let result = tune(&config, &stats, &weights)?;
    let best = result.social_forces()?;
    best.write(&a.out)?;
    if let Some(path) = &a.history {
        let mut csv = String::from("generation,best_score\n");
        for (g, s) in result.best_score_history.iter().enumerate() {
            let _ = writeln!(csv, "{g},{s}");
        }
        write_text(path, &csv)?;
    }
    if let Some(path) = &a.snapshots {
        let mut csv = format!("generation,{}\n", SocialForcesParams::NAMES.join(","));
        for (g, genes) in &result.snapshots {
            let values: Vec<String> = genes.iter().map(f64::to_string).collect();
            let _ = writeln!(csv, "{g},{}", values.join(","));
        }
        write_text(path, &csv)?;
    }
    if let Some(path) = &a.best_trajectory {
        let crowd = simulate(&config.scenarios[0], &best, config.duration, config.dt)?;
        write_crowd_csv(path, &crowd)?;
    }
    println!("S_QF={:.4}", result.final_score);
    Ok(())
}
