//! Simulator parameter search maximizing the quality score.

use std::fmt;

use crate::error::{Error, Result};
use crate::ga::{ga_optimize, GaConfig, StopReason};
use crate::qf::{score, ReferenceStats, WeightVector};
use crate::sim::{self, default_parameter_bounds, Scenario, SocialForcesParams};
use crate::trajectory::{CrowdTrajectory, CANONICAL_DT};

pub const DEFAULT_EXPLORATION_DECAY: f64 = 0.97;
pub const DEFAULT_QUARTILE_EDGES: [f64; 3] = [0.225, 0.45, 0.675];

/// A parametric crowd simulator the tuner can drive.
pub trait CrowdModel: Sync {
    fn parameter_names(&self) -> Vec<String>;
    fn parameter_bounds(&self) -> Vec<(f64, f64)>;
    fn simulate(&self, genes: &[f64], scenario: &Scenario, duration: f64, dt: f64) -> Result<CrowdTrajectory>;
}

/// The bundled social-forces model.
#[derive(Debug, Clone, Copy, Default)]
pub struct SocialForces;

impl CrowdModel for SocialForces {
    fn parameter_names(&self) -> Vec<String> {
        SocialForcesParams::NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn parameter_bounds(&self) -> Vec<(f64, f64)> {
        default_parameter_bounds()
    }

    fn simulate(&self, genes: &[f64], scenario: &Scenario, duration: f64, dt: f64) -> Result<CrowdTrajectory> {
        sim::simulate(scenario, &SocialForcesParams::from_genome(genes)?, duration, dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneMode {
    /// Every genome is scored on the configured scenarios as given.
    Single,
    /// Scenarios are redrawn with fresh seeds every generation.
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub mode: TuneMode,
    pub scenarios: Vec<Scenario>,
    /// Simulated time per scenario (s).
    pub duration: f64,
    pub dt: f64,
    pub ga: GaConfig,
    /// Factor applied to the mutation scale after each generation.
    pub exploration_decay: f64,
    /// Search box; the model's default bounds when `None`.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Keep the best genome every this many generations (0 disables).
    pub snapshot_every: usize,
}

impl TuneConfig {
    pub fn new(mode: TuneMode, scenarios: Vec<Scenario>, duration: f64) -> Self {
        Self {
            mode,
            scenarios,
            duration,
            dt: CANONICAL_DT,
            ga: GaConfig::default(),
            exploration_decay: DEFAULT_EXPLORATION_DECAY,
            bounds: None,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::Configuration("tuning needs at least one scenario".into()));
        }
        if !(self.exploration_decay > 0.0 && self.exploration_decay <= 1.0) {
            return Err(Error::Configuration(format!(
                "exploration decay must lie in (0, 1], got {}",
                self.exploration_decay
            )));
        }
        sim::step_count(self.duration, self.dt)?;
        Ok(())
    }

    /// Scenarios faced by every genome of a generation.
    pub fn scenarios_for(&self, generation: usize) -> Vec<Scenario> {
        match self.mode {
            TuneMode::Single => self.scenarios.clone(),
            TuneMode::Generic => self
                .scenarios
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let seed = s
                        .seed
                        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                        .wrapping_add(((generation as u64) << 16) | k as u64);
                    s.reseeded(seed)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub p_opt: Vec<f64>,
    /// Best mean score per generation.
    pub best_score_history: Vec<f64>,
    pub final_score: f64,
    /// `(generation, best genome)` every `snapshot_every` generations.
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub stop_reason: StopReason,
}

impl TuneResult {
    pub fn social_forces(&self) -> Result<SocialForcesParams> {
        SocialForcesParams::from_genome(&self.p_opt)
    }
}

/// Mean score of one parameter set over a list of scenarios. Failed or
/// non-finite simulations count as score 0.
pub fn mean_score<M: CrowdModel + ?Sized>(
    model: &M,
    genes: &[f64],
    scenarios: &[Scenario],
    duration: f64,
    dt: f64,
    stats: &ReferenceStats,
    weights: &WeightVector,
) -> f64 {
    let total: f64 = scenarios
        .iter()
        .map(|s| {
            model
                .simulate(genes, s, duration, dt)
                .and_then(|crowd| score(&crowd, stats, weights))
                .map(|q| q.total)
                .ok()
                .filter(|v| v.is_finite())
                .unwrap_or(0.0)
        })
        .sum();
    total / scenarios.len() as f64
}

/// Search the model parameters whose simulations score best.
pub fn tune_model<M: CrowdModel + ?Sized>(
    model: &M,
    config: &TuneConfig,
    stats: &ReferenceStats,
    weights: &WeightVector,
    initial: &[Vec<f64>],
) -> Result<TuneResult> {
    config.validate()?;
    let bounds = config.bounds.clone().unwrap_or_else(|| model.parameter_bounds());
    let ga = GaConfig {
        mutation_decay: config.exploration_decay,
        ..config.ga.clone()
    };
    let fitness = |genes: &[f64], generation: usize| {
        let scenarios = config.scenarios_for(generation);
        1.0 - mean_score(model, genes, &scenarios, config.duration, config.dt, stats, weights)
    };
    let result = ga_optimize(fitness, &bounds, &ga, initial)?;
    let best_score_history: Vec<f64> = result.history.iter().map(|f| 1.0 - f).collect();
    let snapshots = if config.snapshot_every == 0 {
        Vec::new()
    } else {
        result
            .best_per_generation
            .iter()
            .enumerate()
            .filter(|(g, _)| g % config.snapshot_every == 0)
            .map(|(g, genes)| (g, genes.clone()))
            .collect()
    };
    Ok(TuneResult {
        p_opt: result.best.values,
        final_score: *best_score_history.last().expect("at least one generation"),
        best_score_history,
        snapshots,
        stop_reason: result.stop_reason,
    })
}

/// Tune the bundled social-forces model.
pub fn tune(config: &TuneConfig, stats: &ReferenceStats, weights: &WeightVector) -> Result<TuneResult> {
    tune_model(&SocialForces, config, stats, weights, &[])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Quartile {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl fmt::Display for Quartile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Quality bucket of a score; each bucket includes its lower edge.
pub fn quartile(score: f64, edges: [f64; 3]) -> Result<Quartile> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::InvalidArgument(format!("score {score} lies outside [0, 1]")));
    }
    let increasing = edges.windows(2).all(|w| w[0] < w[1]);
    if !increasing || !edges.iter().all(|e| (0.0..=1.0).contains(e)) {
        return Err(Error::InvalidArgument(format!(
            "quartile edges {edges:?} must be strictly increasing within [0, 1]"
        )));
    }
    Ok(match edges.iter().filter(|&&e| score >= e).count() {
        0 => Quartile::Q1,
        1 => Quartile::Q2,
        2 => Quartile::Q3,
        _ => Quartile::Q4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamental::FundamentalDiagram;
    use crate::qf::FeatureStats;
    use crate::sim::ScenarioKind;

    fn flat_stats() -> ReferenceStats {
        let f = FeatureStats {
            mu: 0.0,
            sigma: 1.0,
            sample_count: 10,
        };
        ReferenceStats::new([f; 21], FundamentalDiagram::from_knots(vec![(0.0, 1.3)]).unwrap()).unwrap()
    }

    fn small_config(mode: TuneMode) -> TuneConfig {
        let mut c = TuneConfig::new(mode, vec![Scenario::new(ScenarioKind::Random, 4, 1)], 2.0);
        c.ga = GaConfig {
            population_size: 6,
            max_generations: 4,
            ..GaConfig::default()
        };
        c
    }

    #[test]
    fn quartiles() {
        let e = DEFAULT_QUARTILE_EDGES;
        assert_eq!(quartile(0.22, e).unwrap(), Quartile::Q1);
        assert_eq!(quartile(0.79, e).unwrap(), Quartile::Q4);
        assert_eq!(quartile(0.45, e).unwrap(), Quartile::Q3);
        assert_eq!(quartile(0.0, e).unwrap(), Quartile::Q1);
        assert_eq!(quartile(1.0, e).unwrap(), Quartile::Q4);
        assert!(matches!(quartile(1.2, e), Err(Error::InvalidArgument(_))));
        assert!(matches!(quartile(-0.1, e), Err(Error::InvalidArgument(_))));
        assert!(quartile(0.5, [0.5, 0.4, 0.6]).is_err());
    }

    #[test]
    fn collapsed_box_keeps_the_point() {
        let point = SocialForcesParams::default().to_genome();
        let mut config = small_config(TuneMode::Single);
        config.bounds = Some(point.iter().map(|&v| (v, v)).collect());
        let result = tune(&config, &flat_stats(), &WeightVector::table2()).unwrap();
        assert_eq!(result.p_opt, point);
        assert!(result.best_score_history.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(result.final_score, *result.best_score_history.last().unwrap());
    }

    #[test]
    fn perfect_score_stops_immediately() {
        let zero = WeightVector::new([0.0; 21]).unwrap();
        let result = tune(&small_config(TuneMode::Single), &flat_stats(), &zero).unwrap();
        assert_eq!(result.best_score_history, [1.0]);
        assert_eq!(result.stop_reason, StopReason::Solved);
    }

    #[test]
    fn history_is_non_decreasing_and_in_bounds() {
        for mode in [TuneMode::Single, TuneMode::Generic] {
            let mut config = small_config(mode);
            config.snapshot_every = 2;
            let result = tune(&config, &flat_stats(), &WeightVector::table2()).unwrap();
            assert!(result.best_score_history.windows(2).all(|w| w[1] >= w[0]));
            for (v, (lo, hi)) in result.p_opt.iter().zip(default_parameter_bounds()) {
                assert!((lo..=hi).contains(v));
            }
            assert_eq!(result.snapshots.iter().map(|s| s.0).collect::<Vec<_>>(), [0, 2]);
            assert!(result.social_forces().is_ok());
        }
    }

    #[test]
    fn generic_mode_changes_scenarios_per_generation() {
        let config = small_config(TuneMode::Generic);
        assert_ne!(config.scenarios_for(0), config.scenarios_for(1));
        assert_eq!(config.scenarios_for(3), config.scenarios_for(3));
        let single = small_config(TuneMode::Single);
        assert_eq!(single.scenarios_for(0), single.scenarios_for(7));
    }

    #[test]
    fn invalid_configs() {
        let mut c = small_config(TuneMode::Single);
        c.exploration_decay = 0.0;
        assert!(matches!(tune(&c, &flat_stats(), &WeightVector::table2()), Err(Error::Configuration(_))));
        let mut c = small_config(TuneMode::Single);
        c.scenarios.clear();
        assert!(matches!(tune(&c, &flat_stats(), &WeightVector::table2()), Err(Error::Configuration(_))));
        let mut c = small_config(TuneMode::Single);
        c.duration = 0.01;
        assert!(matches!(tune(&c, &flat_stats(), &WeightVector::table2()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn failed_simulation_scores_zero() {
        let scenario = Scenario::new(ScenarioKind::Random, 3, 0);
        let bad = [0.5, 1.0, 0.3, 0.1, 0.0];
        let s = mean_score(&SocialForces, &bad, &[scenario], 2.0, 0.1, &flat_stats(), &WeightVector::table2());
        assert_eq!(s, 0.0);
    }
}
