//! The quality function: reference statistics, Gaussian-penalty costs and
//! their weighted combination into a score in `[0, 1]`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{extract, refit_fundamental, FeatureId, FeatureParams, FeatureSamples, FeatureSet};
use crate::fundamental::FundamentalDiagram;
use crate::kvfile::KvFile;
use crate::trajectory::CrowdTrajectory;

/// Floor applied to fitted standard deviations (feature units).
pub const SIGMA_MIN: f64 = 1e-3;
/// Default density bin width of the fitted fundamental diagram (persons/m²).
pub const DEFAULT_FD_BIN_WIDTH: f64 = 0.25;

const TABLE2_WEIGHTS: &str = include_str!("../data/table2_weights.txt");

/// Normal fit of one feature's reference values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureStats {
    pub mu: f64,
    pub sigma: f64,
    pub sample_count: usize,
}

impl FeatureStats {
    /// Mean and population standard deviation, the latter floored at `sigma_min`.
    pub fn fit(values: &[f64], sigma_min: f64) -> Option<Self> {
        if values.len() < 2 {
            return None;
        }
        let n = values.len() as f64;
        let mu = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
        Some(Self {
            mu,
            sigma: var.sqrt().max(sigma_min),
            sample_count: values.len(),
        })
    }

    /// Gaussian penalty of a single value: 0 at the mean, approaching 1 far away.
    pub fn penalty(&self, value: f64) -> f64 {
        let z = (value - self.mu) / self.sigma;
        1.0 - (-0.5 * z * z).exp()
    }
}

/// Per-feature reference statistics plus the reference fundamental diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStats {
    features: [FeatureStats; 21],
    pub fundamental_diagram: FundamentalDiagram,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub sigma_min: f64,
    pub fd_bin_width: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            sigma_min: SIGMA_MIN,
            fd_bin_width: DEFAULT_FD_BIN_WIDTH,
        }
    }
}

impl ReferenceStats {
    pub fn new(features: [FeatureStats; 21], fundamental_diagram: FundamentalDiagram) -> Result<Self> {
        for (id, s) in FeatureId::ALL.iter().zip(&features) {
            if !(s.mu.is_finite() && s.sigma.is_finite() && s.sigma > 0.0) {
                return Err(Error::Configuration(format!(
                    "{id}: reference mean must be finite and sigma positive"
                )));
            }
        }
        Ok(Self {
            features,
            fundamental_diagram,
        })
    }

    pub fn get(&self, id: FeatureId) -> &FeatureStats {
        &self.features[id.index()]
    }

    /// Feature parameters whose fundamental diagram is this reference curve.
    pub fn feature_params(&self) -> FeatureParams {
        FeatureParams {
            fundamental_diagram: Some(self.fundamental_diagram.clone()),
            ..FeatureParams::default()
        }
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::default();
        for id in FeatureId::ALL {
            let s = self.get(id);
            kv.insert(format!("{id}.mu"), s.mu.to_string());
            kv.insert(format!("{id}.sigma"), s.sigma.to_string());
            kv.insert(format!("{id}.count"), s.sample_count.to_string());
        }
        let curve = self
            .fundamental_diagram
            .knots()
            .iter()
            .map(|(d, v)| format!("{d}:{v}"))
            .collect::<Vec<_>>()
            .join(",");
        kv.insert("FDG.curve", curve);
        kv
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        check_qf_keys(kv)?;
        let mut features = [FeatureStats {
            mu: 0.0,
            sigma: 1.0,
            sample_count: 0,
        }; 21];
        for id in FeatureId::ALL {
            let require = |field: &str| -> Result<f64> {
                kv.get_f64(&format!("{id}.{field}"))?.ok_or_else(|| {
                    Error::Configuration(format!("reference statistics lack `{id}.{field}`"))
                })
            };
            let count = match kv.get(&format!("{id}.count")) {
                Some(v) => v.parse::<usize>().map_err(|_| {
                    Error::MalformedInput(format!("`{id}.count`: `{v}` is not a count"))
                })?,
                None => 2,
            };
            features[id.index()] = FeatureStats {
                mu: require("mu")?,
                sigma: require("sigma")?,
                sample_count: count,
            };
        }
        let curve = kv
            .get("FDG.curve")
            .ok_or_else(|| Error::Configuration("reference statistics lack `FDG.curve`".into()))?;
        let knots = curve
            .split(',')
            .map(|pair| {
                let parsed = pair.split_once(':').and_then(|(d, v)| {
                    Some((d.trim().parse::<f64>().ok()?, v.trim().parse::<f64>().ok()?))
                });
                parsed.ok_or_else(|| {
                    Error::MalformedInput(format!("`FDG.curve`: bad knot `{pair}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(features, FundamentalDiagram::from_knots(knots)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_kv().write(path)
    }
}

/// Accept only `CODE.mu`, `CODE.sigma`, `CODE.count`, `CODE.omega` and `FDG.curve`.
fn check_qf_keys(kv: &KvFile) -> Result<()> {
    kv.check_keys(|key| {
        if key == "FDG.curve" {
            return true;
        }
        match key.split_once('.') {
            Some((code, field)) => {
                FeatureId::ALL.iter().any(|id| id.code() == code)
                    && matches!(field, "mu" | "sigma" | "count" | "omega")
            }
            None => false,
        }
    })
}

/// Fit reference statistics from the feature sets of golden crowds.
///
/// The fundamental diagram is fitted first from pooled (LDN, AWS) pairs; the
/// FDG values are then recomputed against it before their own fit.
pub fn fit_reference(golden: &[FeatureSet], options: FitOptions) -> Result<ReferenceStats> {
    if golden.is_empty() {
        return Err(Error::InsufficientData("no golden trajectories to fit".into()));
    }
    let pairs: Vec<(f64, f64)> = golden
        .iter()
        .flat_map(|set| {
            set.get(FeatureId::Ldn)
                .values
                .iter()
                .copied()
                .zip(set.get(FeatureId::Aws).values.iter().copied())
        })
        .collect();
    let fd = FundamentalDiagram::fit(&pairs, options.fd_bin_width)?;

    let mut features = [FeatureStats {
        mu: 0.0,
        sigma: 1.0,
        sample_count: 0,
    }; 21];
    let refitted: Vec<FeatureSet> = golden
        .iter()
        .map(|set| {
            let mut set = set.clone();
            refit_fundamental(&mut set, &fd);
            set
        })
        .collect();
    for id in FeatureId::ALL {
        let pooled: Vec<f64> = refitted
            .iter()
            .flat_map(|set| set.get(id).values.iter().copied())
            .collect();
        features[id.index()] = FeatureStats::fit(&pooled, options.sigma_min).ok_or_else(|| {
            Error::InsufficientData(format!(
                "feature {id} has {} reference sample(s), at least 2 are required",
                pooled.len()
            ))
        })?;
    }
    ReferenceStats::new(features, fd)
}

/// Mean Gaussian penalty of a value set against its reference statistics.
pub fn cost(samples: &FeatureSamples, stats: &FeatureStats) -> Result<f64> {
    cost_of_values(&samples.values, stats)
}

pub fn cost_of_values(values: &[f64], stats: &FeatureStats) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot cost an empty value set".into()));
    }
    Ok(values.iter().map(|&v| stats.penalty(v)).sum::<f64>() / values.len() as f64)
}

/// The 21 feature weights. Stored normalized: a sum above 1 is rescaled to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    omega: [f64; 21],
}

impl WeightVector {
    pub fn new(mut omega: [f64; 21]) -> Result<Self> {
        if let Some((id, w)) = FeatureId::ALL
            .iter()
            .zip(&omega)
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::Configuration(format!(
                "{id}: weight must be finite and non-negative, got {w}"
            )));
        }
        let sum: f64 = omega.iter().sum();
        if sum > 1.0 {
            omega.iter_mut().for_each(|w| *w /= sum);
        }
        Ok(Self { omega })
    }

    /// The published learned weights shipped with the crate.
    pub fn table2() -> Self {
        let kv = KvFile::parse(TABLE2_WEIGHTS).expect("bundled weight file parses");
        Self::from_kv(&kv).expect("bundled weight file is complete")
    }

    /// All mass on a single feature.
    pub fn single(id: FeatureId) -> Self {
        let mut omega = [0.0; 21];
        omega[id.index()] = 1.0;
        Self { omega }
    }

    pub fn get(&self, id: FeatureId) -> f64 {
        self.omega[id.index()]
    }

    pub fn as_array(&self) -> &[f64; 21] {
        &self.omega
    }

    pub fn sum(&self) -> f64 {
        self.omega.iter().sum()
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::default();
        for id in FeatureId::ALL {
            kv.insert(format!("{id}.omega"), self.get(id).to_string());
        }
        kv
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        check_qf_keys(kv)?;
        let mut omega = [0.0; 21];
        for id in FeatureId::ALL {
            omega[id.index()] = kv.get_f64(&format!("{id}.omega"))?.ok_or_else(|| {
                Error::Configuration(format!("weights lack `{id}.omega`"))
            })?;
        }
        Self::new(omega)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_kv().write(path)
    }
}

/// Quality score with its per-feature breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityScore {
    pub total: f64,
    pub costs: [f64; 21],
    pub contributions: [f64; 21],
}

impl QualityScore {
    /// Combine per-feature costs: one minus the weighted sum, summed in catalog order.
    pub fn from_costs(costs: [f64; 21], weights: &WeightVector) -> Self {
        let mut contributions = [0.0; 21];
        for (i, c) in costs.iter().enumerate() {
            contributions[i] = weights.omega[i] * c;
        }
        let total = 1.0 - contributions.iter().sum::<f64>();
        Self {
            total,
            costs,
            contributions,
        }
    }

    pub fn cost(&self, id: FeatureId) -> f64 {
        self.costs[id.index()]
    }

    pub fn contribution(&self, id: FeatureId) -> f64 {
        self.contributions[id.index()]
    }
}

/// Per-feature costs of an extracted feature set, in catalog order.
pub fn feature_costs(set: &FeatureSet, stats: &ReferenceStats) -> Result<[f64; 21]> {
    let mut costs = [0.0; 21];
    for id in FeatureId::ALL {
        costs[id.index()] = cost(set.get(id), stats.get(id))?;
    }
    Ok(costs)
}

pub fn score_features(set: &FeatureSet, stats: &ReferenceStats, weights: &WeightVector) -> Result<QualityScore> {
    Ok(QualityScore::from_costs(feature_costs(set, stats)?, weights))
}

/// Extract features with the reference fundamental diagram and score them.
pub fn score(crowd: &CrowdTrajectory, stats: &ReferenceStats, weights: &WeightVector) -> Result<QualityScore> {
    let set = extract(crowd, &stats.feature_params())?;
    score_features(&set, stats, weights)
}

/// Score consecutive windows of `window` steps; a trailing partial window is
/// kept when it holds at least 2 steps.
pub fn score_windows(
    crowd: &CrowdTrajectory,
    stats: &ReferenceStats,
    weights: &WeightVector,
    window: usize,
) -> Result<Vec<QualityScore>> {
    if window < 2 {
        return Err(Error::InvalidArgument(format!(
            "score window must span at least 2 steps, got {window}"
        )));
    }
    let steps = crowd.steps();
    (0..steps)
        .step_by(window)
        .filter(|&start| steps - start >= 2)
        .map(|start| score(&crowd.slice(start, (start + window).min(steps))?, stats, weights))
        .collect()
}

/// Closeness to the reference per feature (`1 - cost`), in catalog order.
pub fn radar(score: &QualityScore) -> Vec<(FeatureId, f64)> {
    FeatureId::ALL
        .iter()
        .map(|&id| (id, 1.0 - score.cost(id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn stats(mu: f64, sigma: f64) -> FeatureStats {
        FeatureStats {
            mu,
            sigma,
            sample_count: 100,
        }
    }

    fn samples(values: Vec<f64>) -> FeatureSamples {
        let n = values.len();
        FeatureSamples::new(FeatureId::Aws, 1, n, values)
    }

    #[test]
    fn fit_normal_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(1.4, 0.2).unwrap();
        let draws: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        // direct sample statistics
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
        let fit = FeatureStats::fit(&draws, SIGMA_MIN).unwrap();
        assert_abs_diff_eq!(fit.mu, mean, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.sigma, sd, epsilon = 1e-12);
        assert!((fit.mu - 1.4).abs() < 0.02);
        assert!((fit.sigma - 0.2).abs() < 0.02);
    }

    #[test]
    fn fit_floor_and_population_convention() {
        let c = FeatureStats::fit(&[5.0; 8], SIGMA_MIN).unwrap();
        assert_eq!(c.mu, 5.0);
        assert_eq!(c.sigma, SIGMA_MIN);
        let two = FeatureStats::fit(&[0.0, 2.0], SIGMA_MIN).unwrap();
        assert_eq!(two.mu, 1.0);
        assert_eq!(two.sigma, 1.0);
        assert!(FeatureStats::fit(&[1.0], SIGMA_MIN).is_none());
    }

    #[test]
    fn gaussian_cost_values() {
        let s = stats(1.3, 0.25);
        assert_eq!(cost(&samples(vec![1.3; 4]), &s).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cost(&samples(vec![1.55; 4]), &s).unwrap(),
            0.393469340287,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            cost(&samples(vec![1.3, 1.8, 1.3, 1.8]), &s).unwrap(),
            0.432332358382,
            epsilon = 1e-9
        );
        assert!(matches!(
            cost(&samples(vec![]), &s),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn table2_weights() {
        let w = WeightVector::table2();
        assert_abs_diff_eq!(w.sum(), 0.9998, epsilon = 1e-9);
        assert_eq!(w.get(FeatureId::Aws), 0.1995);
        assert_eq!(w.get(FeatureId::Col), 0.0949);
        let all_ones = QualityScore::from_costs([1.0; 21], &w);
        assert_abs_diff_eq!(all_ones.total, 0.0002, epsilon = 1e-9);
        let zeros = QualityScore::from_costs([0.0; 21], &w);
        assert_eq!(zeros.total, 1.0);
    }

    #[test]
    fn weights_normalized_and_validated() {
        let w = WeightVector::new([0.1; 21]).unwrap();
        assert_abs_diff_eq!(w.sum(), 1.0, epsilon = 1e-12);
        let mut neg = [0.0; 21];
        neg[3] = -0.1;
        assert!(matches!(WeightVector::new(neg), Err(Error::Configuration(_))));
    }

    #[test]
    fn weight_file_round_trip_and_key_checks() {
        let w = WeightVector::table2();
        let back = WeightVector::from_kv(&KvFile::parse(&w.to_kv().to_text()).unwrap()).unwrap();
        assert_eq!(back, w);
        let mut text = w.to_kv().to_text();
        text.push_str("XYZ.omega = 0.1\n");
        assert!(matches!(
            WeightVector::from_kv(&KvFile::parse(&text).unwrap()),
            Err(Error::Configuration(_))
        ));
        let missing: String = w.to_kv().to_text().lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            WeightVector::from_kv(&KvFile::parse(&missing).unwrap()),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn radar_is_complement() {
        let mut costs = [0.0; 21];
        let s = QualityScore::from_costs(costs, &WeightVector::table2());
        let r = radar(&s);
        assert_eq!(r.len(), 21);
        assert!(r.iter().all(|(_, v)| *v == 1.0));
        costs[FeatureId::Aws.index()] = 0.39;
        let r = radar(&QualityScore::from_costs(costs, &WeightVector::table2()));
        assert_eq!(r[0].0, FeatureId::Aws);
        assert_abs_diff_eq!(r[0].1, 0.61, epsilon = 1e-12);
        assert_eq!(r.iter().map(|(id, _)| *id).collect::<Vec<_>>(), FeatureId::ALL);
    }

    proptest! {
        #[test]
        fn cost_invariant_under_affine_maps(
            values in prop::collection::vec(-5.0f64..5.0, 1..40),
            mu in -2.0f64..2.0,
            sigma in 0.05f64..3.0,
            a in prop_oneof![-4.0f64..-0.1, 0.1f64..4.0],
            b in -10.0f64..10.0,
        ) {
            let base = cost_of_values(&values, &stats(mu, sigma)).unwrap();
            let mapped: Vec<f64> = values.iter().map(|v| a * v + b).collect();
            let other = cost_of_values(&mapped, &stats(a * mu + b, a.abs() * sigma)).unwrap();
            prop_assert!((base - other).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&base));
            let mut reversed = values.clone();
            reversed.reverse();
            let permuted = cost_of_values(&reversed, &stats(mu, sigma)).unwrap();
            prop_assert!((base - permuted).abs() < 1e-12);
        }

        #[test]
        fn score_monotone_in_each_cost(
            costs in prop::array::uniform21(0.0f64..1.0),
            which in 0usize..21,
            bump in 0.0f64..1.0,
        ) {
            let w = WeightVector::table2();
            let base = QualityScore::from_costs(costs, &w);
            let mut raised = costs;
            raised[which] = (raised[which] + bump).min(1.0);
            let after = QualityScore::from_costs(raised, &w);
            prop_assert!(after.total <= base.total);
            prop_assert!((0.0..=1.0).contains(&after.total));
        }
    }
}
