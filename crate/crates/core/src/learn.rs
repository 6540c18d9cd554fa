//! Labeled training sets and feature-weight learning.
//!
//! Golden crowds get target 1. Degraded copies, produced by [`degrade`], get
//! target 0 unless told otherwise. [`train_weights`] then searches the weight
//! vector whose scores best reproduce the targets.

use std::fmt;
use std::str::FromStr;

use glam::DVec2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{extract, refit_fundamental, FeatureId, FeatureParams, FeatureSet};
use crate::ga::{ga_optimize, GaConfig, StopReason};
use crate::qf::{feature_costs, ReferenceStats, WeightVector};
use crate::trajectory::{derive_kinematics, CrowdTrajectory};

pub const DEFAULT_JITTER_AMPLITUDE: f64 = 0.3;
pub const DEFAULT_SPEED_FACTOR: f64 = 2.0;
pub const DEFAULT_FREEZE_FRACTION: f64 = 0.3;
/// Absolute correlation above which a feature pair is reported.
pub const CORRELATION_THRESHOLD: f64 = 0.8;

/// Artifact injected by [`degrade`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegradeMode {
    /// Every agent walks straight to its goal at comfort speed, ignoring others.
    NoAvoidance,
    /// Each displacement is rotated by Gaussian noise of this standard deviation (rad).
    Jitter { amplitude: f64 },
    /// Displacements from the start are multiplied by this factor.
    SpeedScale { factor: f64 },
    /// This fraction of agents stops dead at a random time in the middle half.
    Freeze { fraction: f64 },
}

impl DegradeMode {
    /// The modes used when degrading automatically, with default strengths.
    pub const DEFAULTS: [DegradeMode; 4] = [
        DegradeMode::NoAvoidance,
        DegradeMode::Jitter {
            amplitude: DEFAULT_JITTER_AMPLITUDE,
        },
        DegradeMode::SpeedScale {
            factor: DEFAULT_SPEED_FACTOR,
        },
        DegradeMode::Freeze {
            fraction: DEFAULT_FREEZE_FRACTION,
        },
    ];
}

impl fmt::Display for DegradeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegradeMode::NoAvoidance => f.write_str("no-avoidance"),
            DegradeMode::Jitter { amplitude } => write!(f, "jitter:{amplitude}"),
            DegradeMode::SpeedScale { factor } => write!(f, "speed-scale:{factor}"),
            DegradeMode::Freeze { fraction } => write!(f, "freeze:{fraction}"),
        }
    }
}

impl FromStr for DegradeMode {
    type Err = Error;

    /// `no-avoidance`, or `jitter`, `speed-scale`, `freeze` with an optional `:<value>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let value = |default: f64| -> Result<f64> {
            match arg {
                None => Ok(default),
                Some(a) => a
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad value in degrade mode `{s}`"))),
            }
        };
        let mode = match name {
            "no-avoidance" if arg.is_none() => DegradeMode::NoAvoidance,
            "jitter" => DegradeMode::Jitter {
                amplitude: value(DEFAULT_JITTER_AMPLITUDE)?,
            },
            "speed-scale" => DegradeMode::SpeedScale {
                factor: value(DEFAULT_SPEED_FACTOR)?,
            },
            "freeze" => DegradeMode::Freeze {
                fraction: value(DEFAULT_FREEZE_FRACTION)?,
            },
            _ => return Err(Error::InvalidArgument(format!("unknown degrade mode `{s}`"))),
        };
        mode.check()?;
        Ok(mode)
    }
}

impl DegradeMode {
    fn check(&self) -> Result<()> {
        let ok = match *self {
            DegradeMode::NoAvoidance => true,
            DegradeMode::Jitter { amplitude } => amplitude >= 0.0 && amplitude.is_finite(),
            DegradeMode::SpeedScale { factor } => factor > 0.0 && factor.is_finite(),
            DegradeMode::Freeze { fraction } => (0.0..=1.0).contains(&fraction),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degrade mode {self} out of range")))
        }
    }
}

/// Copy of `crowd` carrying the artifact of `mode`. Agent count, step count,
/// time step, start positions and goals are preserved.
pub fn degrade(crowd: &CrowdTrajectory, mode: DegradeMode, seed: u64) -> Result<CrowdTrajectory> {
    mode.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracks = crowd.to_tracks();
    let steps = crowd.steps();
    match mode {
        DegradeMode::NoAvoidance => {
            for (track, ch) in tracks.iter_mut().zip(&crowd.characters) {
                let start = track.positions[0];
                let to_goal = ch.individuals.goal - start;
                let dist = to_goal.length();
                let dir = to_goal.normalize_or_zero();
                for (t, p) in track.positions.iter_mut().enumerate() {
                    let walked = (ch.individuals.comfort_speed * crowd.dt * t as f64).min(dist);
                    *p = start + dir * walked;
                }
            }
        }
        DegradeMode::Jitter { amplitude } => {
            let noise = Normal::new(0.0, amplitude).expect("amplitude checked");
            for track in &mut tracks {
                let original = track.positions.clone();
                let mut error = DVec2::ZERO;
                for t in 1..steps {
                    let step = original[t] - original[t - 1];
                    let rotated = DVec2::from_angle(noise.sample(&mut rng)).rotate(step);
                    error += rotated - step;
                    track.positions[t] = original[t] + error;
                }
            }
        }
        DegradeMode::SpeedScale { factor } => {
            for track in &mut tracks {
                let start = track.positions[0];
                for p in track.positions.iter_mut().skip(1) {
                    *p = start + (*p - start) * factor;
                }
            }
        }
        DegradeMode::Freeze { fraction } => {
            let n = tracks.len();
            let count = ((fraction * n as f64).ceil() as usize).min(n);
            let (lo, hi) = (steps / 4, (3 * steps / 4).max(steps / 4));
            for agent in sample(&mut rng, n, count).into_vec() {
                let stop = rng.gen_range(lo..=hi).min(steps - 1);
                let held = tracks[agent].positions[stop];
                tracks[agent].positions[stop..].fill(held);
            }
        }
    }
    let mut out = derive_kinematics(&tracks, crowd.dt)?;
    out.t0 = crowd.t0;
    Ok(out)
}

/// Degraded companions for each golden crowd, `per_golden` of them, cycling
/// through `modes`. Seeds are derived from `seed` and the pair index.
pub fn auto_degrade(
    golden: &[CrowdTrajectory],
    modes: &[DegradeMode],
    per_golden: usize,
    seed: u64,
) -> Result<Vec<(CrowdTrajectory, f64)>> {
    if modes.is_empty() {
        return Err(Error::InvalidArgument("no degrade modes given".into()));
    }
    (0..golden.len() * per_golden)
        .into_par_iter()
        .map(|k| {
            let crowd = &golden[k / per_golden];
            let mode = modes[k % modes.len()];
            Ok((degrade(crowd, mode, seed.wrapping_add(k as u64))?, 0.0))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub features: FeatureSet,
    /// Desired score in [0, 1].
    pub target: f64,
    pub label: String,
}

impl TrainingExample {
    pub fn new(features: FeatureSet, target: f64, label: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&target) {
            return Err(Error::InvalidArgument(format!(
                "training target must lie in [0, 1], got {target}"
            )));
        }
        Ok(Self {
            features,
            target,
            label: label.into(),
        })
    }
}

/// Extract features once for every crowd and attach targets.
pub fn build_training_set(
    golden: &[CrowdTrajectory],
    degraded: &[(CrowdTrajectory, f64)],
    params: &FeatureParams,
) -> Result<Vec<TrainingExample>> {
    if golden.is_empty() {
        return Err(Error::InsufficientData("training needs at least one golden crowd".into()));
    }
    let jobs: Vec<(&CrowdTrajectory, f64, String)> = golden
        .iter()
        .enumerate()
        .map(|(i, c)| (c, 1.0, format!("golden-{i}")))
        .chain(
            degraded
                .iter()
                .enumerate()
                .map(|(i, (c, target))| (c, *target, format!("degraded-{i}"))),
        )
        .collect();
    jobs.into_par_iter()
        .map(|(crowd, target, label)| TrainingExample::new(extract(crowd, params)?, target, label))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub a: FeatureId,
    pub b: FeatureId,
    pub rho: f64,
    /// `|rho|` exceeds [`CORRELATION_THRESHOLD`].
    pub flagged: bool,
    /// One of the two features is constant across examples; `rho` is reported as 0.
    pub degenerate: bool,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Pearson correlation of per-example feature means for every feature pair.
pub fn check_correlations(examples: &[TrainingExample]) -> Result<Vec<Correlation>> {
    if examples.len() < 2 {
        return Err(Error::InsufficientData(
            "correlations need at least 2 examples".into(),
        ));
    }
    let means: Vec<Vec<f64>> = FeatureId::ALL
        .iter()
        .map(|&id| examples.iter().map(|e| e.features.get(id).mean()).collect())
        .collect();
    let mut out = Vec::with_capacity(210);
    for (i, &a) in FeatureId::ALL.iter().enumerate() {
        for (j, &b) in FeatureId::ALL.iter().enumerate().skip(i + 1) {
            let rho = pearson(&means[i], &means[j]);
            let r = rho.unwrap_or(0.0);
            out.push(Correlation {
                a,
                b,
                rho: r,
                flagged: r.abs() > CORRELATION_THRESHOLD,
                degenerate: rho.is_none(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub weights: WeightVector,
    /// Mean absolute error of the returned weights.
    pub fitness: f64,
    /// Best fitness per generation.
    pub history: Vec<f64>,
    pub stop_reason: StopReason,
}

/// Training fitness of `omega` (rescaled when its sum exceeds 1) on cost vectors.
pub fn weight_fitness(omega: &[f64], costs: &[([f64; 21], f64)]) -> f64 {
    let sum: f64 = omega.iter().sum();
    let scale = if sum > 1.0 { 1.0 / sum } else { 1.0 };
    costs
        .iter()
        .map(|(c, target)| {
            let weighted: f64 = omega.iter().zip(c).map(|(w, c)| w * scale * c).sum();
            (target - (1.0 - weighted)).abs()
        })
        .sum::<f64>()
        / costs.len() as f64
}

/// Learn weights directly from per-example cost vectors and targets.
pub fn train_on_costs(
    costs: &[([f64; 21], f64)],
    config: &GaConfig,
    initial: Option<&WeightVector>,
) -> Result<TrainResult> {
    if costs.is_empty() {
        return Err(Error::InsufficientData("no training examples".into()));
    }
    let bounds = [(0.0, 1.0); 21];
    let seeds: Vec<Vec<f64>> = initial.map(|w| w.as_array().to_vec()).into_iter().collect();
    let ga = ga_optimize(|genes, _| weight_fitness(genes, costs), &bounds, config, &seeds)?;
    let mut omega = [0.0; 21];
    omega.copy_from_slice(&ga.best.values);
    Ok(TrainResult {
        weights: WeightVector::new(omega)?,
        fitness: ga.best_fitness,
        history: ga.history,
        stop_reason: ga.stop_reason,
    })
}

/// Per-example cost vectors against `stats`, with FDG recomputed on the
/// reference curve.
pub fn example_costs(examples: &[TrainingExample], stats: &ReferenceStats) -> Result<Vec<([f64; 21], f64)>> {
    examples
        .par_iter()
        .map(|e| {
            let mut set = e.features.clone();
            refit_fundamental(&mut set, &stats.fundamental_diagram);
            Ok((feature_costs(&set, stats)?, e.target))
        })
        .collect()
}

/// Search the weights minimizing the mean absolute gap between target and score.
pub fn train_weights(
    examples: &[TrainingExample],
    stats: &ReferenceStats,
    config: &GaConfig,
    initial: Option<&WeightVector>,
) -> Result<TrainResult> {
    train_on_costs(&example_costs(examples, stats)?, config, initial)
}
