//! Density/speed relation used by the fundamental-diagram feature.

use crate::error::{Error, Result};

/// Piecewise-constant expected speed as a function of local density.
///
/// Stored as the centers of the occupied density bins with their mean speed.
/// A query returns the value of the nearest occupied bin center, which equals
/// the containing bin when it is occupied. Ties go to the upper bin, matching
/// left-closed bins.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalDiagram {
    knots: Vec<(f64, f64)>,
}

impl FundamentalDiagram {
    /// Bin `(density, speed)` pairs by density and average the speeds per bin.
    pub fn fit(pairs: &[(f64, f64)], bin_width: f64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(
                "fundamental diagram needs at least one (density, speed) pair".into(),
            ));
        }
        if !(bin_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        let mut bins: std::collections::BTreeMap<i64, (f64, usize)> = Default::default();
        for &(density, speed) in pairs {
            if !(density.is_finite() && speed.is_finite()) {
                return Err(Error::InvalidArgument("non-finite density/speed pair".into()));
            }
            let bin = (density / bin_width).floor() as i64;
            let entry = bins.entry(bin).or_insert((0.0, 0));
            entry.0 += speed;
            entry.1 += 1;
        }
        let knots = bins
            .into_iter()
            .map(|(bin, (sum, n))| ((bin as f64 + 0.5) * bin_width, sum / n as f64))
            .collect();
        Ok(Self { knots })
    }

    /// Build directly from `(density, speed)` knots, e.g. read back from a file.
    pub fn from_knots(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidArgument("fundamental diagram has no knots".into()));
        }
        if knots.iter().any(|(d, v)| !(d.is_finite() && v.is_finite())) {
            return Err(Error::InvalidArgument("non-finite fundamental diagram knot".into()));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn expected_speed(&self, density: f64) -> f64 {
        let idx = self.knots.partition_point(|k| k.0 < density);
        match (idx.checked_sub(1).map(|i| self.knots[i]), self.knots.get(idx)) {
            (Some(lo), Some(hi)) => {
                if density - lo.0 < hi.0 - density {
                    lo.1
                } else {
                    hi.1
                }
            }
            (Some(lo), None) => lo.1,
            (None, Some(hi)) => hi.1,
            (None, None) => unreachable!("knots are never empty"),
        }
    }
}

/// Weidmann's empirical fundamental diagram, used when no reference curve
/// has been fitted yet.
pub fn weidmann_speed(density: f64) -> f64 {
    const FREE_SPEED: f64 = 1.34;
    const GAMMA: f64 = 1.913;
    const JAM_DENSITY: f64 = 5.4;
    if density <= 0.0 {
        return FREE_SPEED;
    }
    (FREE_SPEED * (1.0 - (-GAMMA * (1.0 / density - 1.0 / JAM_DENSITY)).exp())).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_bins() {
        let fd = FundamentalDiagram::fit(&[(0.25, 1.4), (0.75, 1.0)], 0.5).unwrap();
        assert_eq!(fd.expected_speed(0.0), 1.4);
        assert_eq!(fd.expected_speed(0.3), 1.4);
        assert_eq!(fd.expected_speed(0.49), 1.4);
        assert_eq!(fd.expected_speed(0.5), 1.0);
        assert_eq!(fd.expected_speed(0.99), 1.0);
        assert_eq!(fd.expected_speed(2.0), 1.0);
    }

    #[test]
    fn empty_bins_use_nearest_occupied() {
        let fd = FundamentalDiagram::fit(&[(0.1, 1.5), (2.1, 0.5)], 0.5).unwrap();
        assert_eq!(fd.expected_speed(0.6), 1.5);
        assert_eq!(fd.expected_speed(1.9), 0.5);
    }

    #[test]
    fn uniform_speed_is_flat() {
        let pairs: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 * 0.07, 1.25)).collect();
        let fd = FundamentalDiagram::fit(&pairs, 0.25).unwrap();
        for d in [0.0, 0.4, 1.3, 3.0, 10.0] {
            assert_eq!(fd.expected_speed(d), 1.25);
        }
    }

    #[test]
    fn averages_within_bin() {
        let fd = FundamentalDiagram::fit(&[(0.1, 1.0), (0.2, 2.0)], 0.5).unwrap();
        assert_eq!(fd.expected_speed(0.1), 1.5);
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(
            FundamentalDiagram::fit(&[], 0.5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn weidmann_is_decreasing() {
        assert!((weidmann_speed(0.0) - 1.34).abs() < 1e-12);
        assert!(weidmann_speed(1.0) > weidmann_speed(3.0));
        assert_eq!(weidmann_speed(5.4), 0.0);
    }
}
