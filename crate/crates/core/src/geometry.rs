//! Pairwise predictions under linear extrapolation of both agents.

use glam::DVec2;

use crate::trajectory::SPEED_EPSILON;

/// Time to closest approach, distance at closest approach and time to
/// collision for one ordered pair of agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPrediction {
    pub tca: f64,
    pub dca: f64,
    /// Capped at the prediction horizon when no collision is predicted.
    pub ttc: f64,
}

/// Time and distance of closest approach between two points moving at
/// constant velocity, looking forward in time only.
///
/// Receding pairs (and pairs without relative motion) are closest now.
pub fn closest_approach(pa: DVec2, va: DVec2, pb: DVec2, vb: DVec2) -> (f64, f64) {
    let dp = pb - pa;
    let dv = vb - va;
    let dv2 = dv.length_squared();
    if dv2 < SPEED_EPSILON * SPEED_EPSILON {
        return (0.0, dp.length());
    }
    let tca = (-dp.dot(dv) / dv2).max(0.0);
    (tca, (dp + dv * tca).length())
}

/// First time `t >= 0` at which two discs moving at constant velocity touch.
///
/// Overlapping discs collide now (`0`). When no contact is predicted, or the
/// contact lies beyond `horizon`, the result is `horizon`.
pub fn time_to_collision(
    pa: DVec2,
    va: DVec2,
    ra: f64,
    pb: DVec2,
    vb: DVec2,
    rb: f64,
    horizon: f64,
) -> f64 {
    let dp = pb - pa;
    let dv = vb - va;
    let radius = ra + rb;
    let c = dp.length_squared() - radius * radius;
    if c < 0.0 {
        return 0.0;
    }
    let a = dv.length_squared();
    let b = dp.dot(dv);
    // Approaching pairs only; |dp + t dv| = radius has no root with t >= 0 otherwise.
    if a < SPEED_EPSILON * SPEED_EPSILON || b >= 0.0 {
        return horizon;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return horizon;
    }
    // Smaller root of a t^2 + 2 b t + c, written to avoid cancellation since b < 0.
    let t = c / (-b + disc.sqrt());
    t.min(horizon)
}

pub fn predict_pair(
    pa: DVec2,
    va: DVec2,
    ra: f64,
    pb: DVec2,
    vb: DVec2,
    rb: f64,
    horizon: f64,
) -> PairPrediction {
    let (tca, dca) = closest_approach(pa, va, pb, vb);
    PairPrediction {
        tca,
        dca,
        ttc: time_to_collision(pa, va, ra, pb, vb, rb, horizon),
    }
}
