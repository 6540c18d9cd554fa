//! The 21 trajectory features and their extraction from a crowd.
//!
//! Every feature yields one scalar per sample. Individual and interaction
//! features are sampled per agent and timestep, `GLR` and `LEN` once per
//! agent, and the global features `FDG` and `VAR` once per timestep. Pairwise
//! quantities are aggregated over neighbours (min or max) so that each
//! agent/timestep cell holds exactly one value.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use glam::DVec2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fundamental::{weidmann_speed, FundamentalDiagram};
use crate::geometry::{closest_approach, time_to_collision};
use crate::trajectory::{AgentId, CrowdTrajectory, SPEED_EPSILON};

/// Sampling granularity of a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    AgentTime,
    Agent,
    Time,
}

macro_rules! feature_ids {
    ($($variant:ident => $code:literal, $gran:ident, $name:literal;)*) => {
        /// Trajectory feature, identified by its three-letter code.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum FeatureId {
            $(#[doc = $name] $variant,)*
        }

        impl FeatureId {
            /// All features in catalog order. Sums over features always use this order.
            pub const ALL: [FeatureId; 21] = [$(FeatureId::$variant,)*];

            pub const fn code(self) -> &'static str {
                match self {
                    $(FeatureId::$variant => $code,)*
                }
            }

            pub const fn name(self) -> &'static str {
                match self {
                    $(FeatureId::$variant => $name,)*
                }
            }

            pub const fn granularity(self) -> Granularity {
                match self {
                    $(FeatureId::$variant => Granularity::$gran,)*
                }
            }
        }
    };
}

feature_ids! {
    Aws => "AWS", AgentTime, "Average walking speed";
    Dgd => "DGD", AgentTime, "Difference to goal direction";
    Ine => "INE", AgentTime, "Inertia";
    Fdr => "FDR", AgentTime, "Flickering in direction";
    Fsp => "FSP", AgentTime, "Flickering in speed";
    Glr => "GLR", Agent, "Goal reaching";
    Dcs => "DCS", AgentTime, "Difference to comfort speed";
    Avl => "AVL", AgentTime, "Angular velocity";
    Len => "LEN", Agent, "Trajectory length";
    Edn => "EDN", AgentTime, "Environment-based density";
    Col => "COL", AgentTime, "Number of collisions";
    Ldn => "LDN", AgentTime, "Local density";
    Dta => "DTA", AgentTime, "Distance to other agents";
    Ttc => "TTC", AgentTime, "Time to collision";
    Ist => "IST", AgentTime, "Interaction strength";
    Tca => "TCA", AgentTime, "Time to closest approach";
    Ovp => "OVP", AgentTime, "Personal space overlap";
    Fdg => "FDG", Time, "Fundamental diagram";
    Ian => "IAN", AgentTime, "Interaction anticipation";
    Dca => "DCA", AgentTime, "Distance at closest approach";
    Var => "VAR", Time, "Feature values variety";
}

impl FeatureId {
    /// Position in [`FeatureId::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureId::ALL
            .into_iter()
            .find(|id| id.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature code `{s}`")))
    }
}

/// Value set of one feature for one crowd, laid out agent-major then by time.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSamples {
    pub id: FeatureId,
    pub agents: usize,
    pub steps: usize,
    pub values: Vec<f64>,
}

impl FeatureSamples {
    pub fn new(id: FeatureId, agents: usize, steps: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(
            values.len(),
            match id.granularity() {
                Granularity::AgentTime => agents * steps,
                Granularity::Agent => agents,
                Granularity::Time => steps,
            }
        );
        Self {
            id,
            agents,
            steps,
            values,
        }
    }

    /// `(agent index, step)` tag of the `i`-th value.
    pub fn tag(&self, i: usize) -> (Option<usize>, Option<usize>) {
        match self.id.granularity() {
            Granularity::AgentTime => (Some(i / self.steps), Some(i % self.steps)),
            Granularity::Agent => (Some(i), None),
            Granularity::Time => (None, Some(i)),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// All 21 value sets extracted from one crowd.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub agent_ids: Vec<AgentId>,
    pub t0: f64,
    pub dt: f64,
    samples: Vec<FeatureSamples>,
}

impl FeatureSet {
    pub fn from_samples(
        agent_ids: Vec<AgentId>,
        t0: f64,
        dt: f64,
        mut samples: Vec<FeatureSamples>,
    ) -> Result<Self> {
        samples.sort_by_key(|s| s.id);
        let ids: Vec<FeatureId> = samples.iter().map(|s| s.id).collect();
        if ids != FeatureId::ALL {
            return Err(Error::Configuration(
                "a feature set needs exactly one value set per feature".into(),
            ));
        }
        Ok(Self {
            agent_ids,
            t0,
            dt,
            samples,
        })
    }

    pub fn get(&self, id: FeatureId) -> &FeatureSamples {
        &self.samples[id.index()]
    }

    pub fn get_mut(&mut self, id: FeatureId) -> &mut FeatureSamples {
        &mut self.samples[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureSamples> {
        self.samples.iter()
    }

    /// Write `feature,agent_id,t,value` rows; tags the granularity omits stay blank.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "feature,agent_id,t,value")?;
        for fs in &self.samples {
            for (i, v) in fs.values.iter().enumerate() {
                let (agent, step) = fs.tag(i);
                let agent = agent.map(|a| self.agent_ids[a].to_string()).unwrap_or_default();
                let t = step
                    .map(|s| (self.t0 + s as f64 * self.dt).to_string())
                    .unwrap_or_default();
                writeln!(out, "{},{agent},{t},{v}", fs.id)?;
            }
        }
        Ok(())
    }
}

/// Tunable constants of the feature definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureParams {
    /// Neighbours farther than this are ignored by pairwise features (m).
    pub interaction_horizon: f64,
    /// Cap for time-based predictions (s).
    pub ttc_cap: f64,
    /// Radius of the local density disc (m).
    pub density_radius: f64,
    /// Margin added around the crowd's hull for environment density (m).
    pub density_margin: f64,
    /// Sliding window for flickering features (steps).
    pub flicker_window: usize,
    pub heading_flicker_threshold: f64,
    pub speed_flicker_threshold: f64,
    /// Decay time of the interaction strength (s).
    pub interaction_tau: f64,
    /// Angular velocity marking a maneuver onset (rad/s).
    pub maneuver_turn_rate: f64,
    /// Speed change rate marking a maneuver onset (m/s²).
    pub maneuver_speed_rate: f64,
    /// Distance at which an agent counts as having reached its goal (m).
    pub goal_tolerance: f64,
    /// Reference density/speed curve; Weidmann's curve when absent.
    pub fundamental_diagram: Option<FundamentalDiagram>,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            interaction_horizon: 30.0,
            ttc_cap: 10.0,
            density_radius: 2.0,
            density_margin: 1.0,
            flicker_window: 10,
            heading_flicker_threshold: 0.15,
            speed_flicker_threshold: 0.1,
            interaction_tau: 2.0,
            maneuver_turn_rate: 0.3,
            maneuver_speed_rate: 0.5,
            goal_tolerance: 0.3,
            fundamental_diagram: None,
        }
    }
}

impl FeatureParams {
    pub fn expected_speed(&self, density: f64) -> f64 {
        match &self.fundamental_diagram {
            Some(fd) => fd.expected_speed(density),
            None => weidmann_speed(density),
        }
    }
}

/// Signed angle wrapped to `(-pi, pi]`.
fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

fn angle_between(a: DVec2, b: DVec2) -> f64 {
    a.perp_dot(b).atan2(a.dot(b)).abs()
}

/// Area of the convex hull of `points` grown by `margin` (Minkowski sum with a disc).
fn inflated_hull_area(points: &[DVec2], margin: f64) -> f64 {
    let mut pts: Vec<DVec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    let disc = PI * margin * margin;
    if pts.len() < 2 {
        return disc;
    }
    let cross = |o: DVec2, a: DVec2, b: DVec2| (a - o).perp_dot(b - o);
    let mut hull: Vec<DVec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &DVec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let n = hull.len();
    let (mut area2, mut perimeter) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        area2 += a.perp_dot(b);
        perimeter += (b - a).length();
    }
    0.5 * area2.abs() + perimeter * margin + disc
}

/// Per-step pairwise aggregates for every agent.
#[derive(Debug, Clone, Copy, Default)]
struct Neighbourhood {
    dta: f64,
    neighbours_in_disc: usize,
    collision: bool,
    overlap: f64,
    ttc: f64,
    tca: f64,
    dca: f64,
}

fn neighbourhoods(crowd: &CrowdTrajectory, step: usize, params: &FeatureParams) -> Vec<Neighbourhood> {
    let chars = &crowd.characters;
    let n = chars.len();
    (0..n)
        .map(|a| {
            let sa = &chars[a].states[step];
            let mut nb = Neighbourhood {
                dta: params.interaction_horizon,
                ttc: params.ttc_cap,
                ..Default::default()
            };
            let mut best_dca: Option<(f64, f64)> = None;
            for b in (0..n).filter(|&b| b != a) {
                let sb = &chars[b].states[step];
                let dist = (sb.position - sa.position).length();
                if dist > params.interaction_horizon {
                    continue;
                }
                nb.dta = nb.dta.min(dist);
                if dist <= params.density_radius {
                    nb.neighbours_in_disc += 1;
                }
                let (ra, rb) = (chars[a].statics.body_radius, chars[b].statics.body_radius);
                nb.collision |= dist < ra + rb;
                let personal = chars[a].statics.personal_radius + chars[b].statics.personal_radius;
                nb.overlap = nb.overlap.max(personal - dist);
                nb.ttc = nb.ttc.min(time_to_collision(
                    sa.position,
                    sa.velocity,
                    ra,
                    sb.position,
                    sb.velocity,
                    rb,
                    params.ttc_cap,
                ));
                let (tca, dca) = closest_approach(sa.position, sa.velocity, sb.position, sb.velocity);
                if tca < params.ttc_cap && best_dca.is_none_or(|(_, d)| dca < d) {
                    best_dca = Some((tca, dca));
                }
            }
            match best_dca {
                Some((tca, dca)) => {
                    nb.tca = tca;
                    nb.dca = dca;
                }
                None => {
                    nb.tca = params.ttc_cap;
                    nb.dca = nb.dta;
                }
            }
            nb
        })
        .collect()
}

/// Alternations of sign between consecutive above-threshold changes, counted
/// over a trailing window and divided by the window length.
fn flicker(changes: &[f64], threshold: f64, window: usize) -> Vec<f64> {
    let steps = changes.len();
    let alternation: Vec<bool> = (0..steps)
        .map(|k| {
            k >= 2
                && changes[k].abs() > threshold
                && changes[k - 1].abs() > threshold
                && changes[k].signum() != changes[k - 1].signum()
        })
        .collect();
    (0..steps)
        .map(|t| {
            let from = (t + 2).saturating_sub(window);
            alternation[from..=t].iter().filter(|&&x| x).count() as f64 / window as f64
        })
        .collect()
}

/// Compute all 21 feature value sets.
///
/// Crowds with a single agent yield neutral pairwise samples: no neighbour
/// within the horizon, so distances equal the horizon and predictions equal
/// the cap.
pub fn extract(crowd: &CrowdTrajectory, params: &FeatureParams) -> Result<FeatureSet> {
    let n = crowd.agent_count();
    let steps = crowd.steps();
    if n == 0 {
        return Err(Error::MalformedInput("crowd has no agents".into()));
    }
    if steps < 2 {
        return Err(Error::MalformedInput(format!(
            "feature extraction needs at least 2 timesteps, got {steps}"
        )));
    }
    if params.flicker_window == 0 {
        return Err(Error::InvalidArgument("flicker window must be at least 1 step".into()));
    }
    let dt = crowd.dt;
    let cell = |a: usize, t: usize| a * steps + t;

    // Pairwise aggregates, step-parallel, assembled in fixed order.
    let per_step: Vec<(Vec<Neighbourhood>, f64)> = (0..steps)
        .into_par_iter()
        .map(|t| {
            let nbs = neighbourhoods(crowd, t, params);
            let area = inflated_hull_area(&crowd.positions_at(t), params.density_margin);
            (nbs, n as f64 / area)
        })
        .collect();

    let mut values: Vec<Vec<f64>> = FeatureId::ALL
        .iter()
        .map(|id| match id.granularity() {
            Granularity::AgentTime => vec![0.0; n * steps],
            Granularity::Agent => vec![0.0; n],
            Granularity::Time => vec![0.0; steps],
        })
        .collect();
    let disc_area = PI * params.density_radius * params.density_radius;

    for (a, c) in crowd.characters.iter().enumerate() {
        let states = &c.states;
        let heading_changes: Vec<f64> = (0..steps)
            .map(|t| if t == 0 { 0.0 } else { wrap_angle(states[t].heading - states[t - 1].heading) })
            .collect();
        let speed_changes: Vec<f64> = (0..steps)
            .map(|t| if t == 0 { 0.0 } else { states[t].speed - states[t - 1].speed })
            .collect();
        let fdr = flicker(&heading_changes, params.heading_flicker_threshold, params.flicker_window);
        let fsp = flicker(&speed_changes, params.speed_flicker_threshold, params.flicker_window);

        for (t, s) in states.iter().enumerate() {
            let i = cell(a, t);
            let nb = &per_step[t].0[a];
            let density = per_step[t].1;
            values[FeatureId::Aws.index()][i] = s.speed;
            values[FeatureId::Dcs.index()][i] = (s.speed - c.individuals.comfort_speed).abs();
            let to_goal = c.individuals.goal - s.position;
            values[FeatureId::Dgd.index()][i] =
                if s.speed < SPEED_EPSILON || to_goal.length() < SPEED_EPSILON {
                    0.0
                } else {
                    angle_between(s.velocity, to_goal)
                };
            values[FeatureId::Avl.index()][i] = heading_changes[t].abs() / dt;
            values[FeatureId::Ine.index()][i] = if t == 0 {
                0.0
            } else {
                (s.velocity - states[t - 1].velocity).length() / dt
            };
            values[FeatureId::Fdr.index()][i] = fdr[t];
            values[FeatureId::Fsp.index()][i] = fsp[t];

            values[FeatureId::Dta.index()][i] = nb.dta;
            values[FeatureId::Ldn.index()][i] = nb.neighbours_in_disc as f64 / disc_area;
            values[FeatureId::Edn.index()][i] = nb.dta * 2.0 * density.sqrt();
            values[FeatureId::Col.index()][i] = if nb.collision { 1.0 } else { 0.0 };
            values[FeatureId::Ovp.index()][i] = nb.overlap.max(0.0);
            values[FeatureId::Ttc.index()][i] = nb.ttc;
            values[FeatureId::Ist.index()][i] = if nb.ttc < params.ttc_cap {
                (-nb.ttc / params.interaction_tau).exp()
            } else {
                0.0
            };
            values[FeatureId::Tca.index()][i] = nb.tca;
            values[FeatureId::Dca.index()][i] = nb.dca;
        }

        // Anticipation: when a collision is first predicted, the remaining
        // time to collision at the onset of the first avoidance maneuver.
        let ttc_of = |t: usize| per_step[t].0[a].ttc;
        let maneuver = |t: usize| {
            t > 0
                && (heading_changes[t].abs() / dt > params.maneuver_turn_rate
                    || speed_changes[t].abs() / dt > params.maneuver_speed_rate)
        };
        for t in 0..steps {
            let appears = ttc_of(t) < params.ttc_cap && (t == 0 || ttc_of(t - 1) >= params.ttc_cap);
            if !appears {
                continue;
            }
            let onset = (t..steps)
                .take_while(|&s| ttc_of(s) < params.ttc_cap && ttc_of(s) > 0.0)
                .find(|&s| maneuver(s));
            if let Some(s) = onset {
                values[FeatureId::Ian.index()][cell(a, t)] = ttc_of(s);
            }
        }

        let first = states[0].position;
        let last = states[steps - 1].position;
        let goal = c.individuals.goal;
        let d_initial = (goal - first).length();
        let mut d_final = (goal - last).length();
        if d_final <= params.goal_tolerance {
            d_final = 0.0;
        }
        values[FeatureId::Glr.index()][a] = if d_initial < SPEED_EPSILON {
            1.0
        } else {
            (1.0 - d_final / d_initial).max(0.0)
        };
        let path: f64 = states.windows(2).map(|w| (w[1].position - w[0].position).length()).sum();
        values[FeatureId::Len.index()][a] = path / d_initial.max(SPEED_EPSILON);
    }

    for t in 0..steps {
        let speeds: Vec<f64> = crowd.characters.iter().map(|c| c.states[t].speed).collect();
        let mean = speeds.iter().sum::<f64>() / n as f64;
        let var = speeds.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        values[FeatureId::Var.index()][t] = if mean < SPEED_EPSILON { 0.0 } else { var.sqrt() / mean };
    }
    let aws = values[FeatureId::Aws.index()].clone();
    let ldn = values[FeatureId::Ldn.index()].clone();
    values[FeatureId::Fdg.index()] = fundamental_deviation(&aws, &ldn, n, steps, |d| params.expected_speed(d));

    let samples = FeatureId::ALL
        .iter()
        .zip(values)
        .map(|(&id, v)| FeatureSamples::new(id, n, steps, v))
        .collect();
    FeatureSet::from_samples(
        crowd.characters.iter().map(|c| c.statics.agent_id).collect(),
        crowd.t0,
        dt,
        samples,
    )
}

/// Per-step mean deviation of walking speed from the speed expected at the
/// agent's local density.
pub fn fundamental_deviation(
    aws: &[f64],
    ldn: &[f64],
    agents: usize,
    steps: usize,
    expected_speed: impl Fn(f64) -> f64,
) -> Vec<f64> {
    (0..steps)
        .map(|t| {
            (0..agents)
                .map(|a| {
                    let i = a * steps + t;
                    aws[i] - expected_speed(ldn[i])
                })
                .sum::<f64>()
                / agents as f64
        })
        .collect()
}

/// Recompute the `FDG` value set of `set` against a given curve.
pub fn refit_fundamental(set: &mut FeatureSet, fd: &FundamentalDiagram) {
    let aws = set.get(FeatureId::Aws);
    let (agents, steps) = (aws.agents, aws.steps);
    let values = fundamental_deviation(
        &aws.values,
        &set.get(FeatureId::Ldn).values,
        agents,
        steps,
        |d| fd.expected_speed(d),
    );
    set.get_mut(FeatureId::Fdg).values = values;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{derive_kinematics, AgentTrack};
    use approx::assert_abs_diff_eq;

    fn crowd_from(tracks: Vec<AgentTrack>) -> CrowdTrajectory {
        derive_kinematics(&tracks, 0.1).unwrap()
    }

    fn line(id: u32, start: DVec2, v: DVec2, steps: usize) -> AgentTrack {
        AgentTrack::new(AgentId(id), (0..steps).map(|k| start + v * (k as f64 * 0.1)).collect())
    }

    #[test]
    fn catalog_order_and_granularity() {
        let codes: Vec<&str> = FeatureId::ALL.iter().map(|f| f.code()).collect();
        assert_eq!(
            codes,
            [
                "AWS", "DGD", "INE", "FDR", "FSP", "GLR", "DCS", "AVL", "LEN", "EDN", "COL", "LDN",
                "DTA", "TTC", "IST", "TCA", "OVP", "FDG", "IAN", "DCA", "VAR"
            ]
        );
        for id in FeatureId::ALL {
            let expected = match id.code() {
                "GLR" | "LEN" => Granularity::Agent,
                "FDG" | "VAR" => Granularity::Time,
                _ => Granularity::AgentTime,
            };
            assert_eq!(id.granularity(), expected, "{id}");
            assert_eq!(id.code().parse::<FeatureId>().unwrap(), id);
        }
        assert!("XYZ".parse::<FeatureId>().is_err());
    }

    #[test]
    fn sample_counts_follow_granularity() {
        let crowd = crowd_from(vec![
            line(0, DVec2::ZERO, DVec2::X, 12),
            line(1, DVec2::new(0.0, 4.0), DVec2::X, 12),
            line(2, DVec2::new(0.0, 8.0), DVec2::X, 12),
        ]);
        let set = extract(&crowd, &FeatureParams::default()).unwrap();
        for fs in set.iter() {
            let expected = match fs.id.granularity() {
                Granularity::AgentTime => 36,
                Granularity::Agent => 3,
                Granularity::Time => 12,
            };
            assert_eq!(fs.values.len(), expected, "{}", fs.id);
            assert!(fs.values.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn straight_walk_to_goal() {
        let mut track = line(0, DVec2::new(1.0, 1.0), DVec2::new(0.8, 0.6), 30);
        track.comfort_speed = Some(1.0);
        let crowd = crowd_from(vec![track]);
        let set = extract(&crowd, &FeatureParams::default()).unwrap();
        for id in [FeatureId::Dcs, FeatureId::Dgd, FeatureId::Avl, FeatureId::Col] {
            for v in &set.get(id).values {
                assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-9);
            }
        }
        assert_abs_diff_eq!(set.get(FeatureId::Len).values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.get(FeatureId::Glr).values[0], 1.0);
        // single agent: neutral pairwise samples
        assert!(set.get(FeatureId::Ttc).values.iter().all(|&v| v == 10.0));
        assert!(set.get(FeatureId::Dta).values.iter().all(|&v| v == 30.0));
        assert!(set.get(FeatureId::Ist).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn collision_course_has_zero_dca() {
        let crowd = crowd_from(vec![
            line(0, DVec2::ZERO, DVec2::new(1.0, 0.0), 20),
            line(1, DVec2::new(5.0, -5.0), DVec2::new(0.0, 1.0), 20),
        ]);
        let set = extract(&crowd, &FeatureParams::default()).unwrap();
        let dca = set.get(FeatureId::Dca);
        let tca = set.get(FeatureId::Tca);
        for agent in 0..2 {
            assert_abs_diff_eq!(dca.values[agent * 20], 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(tca.values[agent * 20], 5.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn stationary_overlapping_bodies_collide() {
        let crowd = crowd_from(vec![
            line(0, DVec2::ZERO, DVec2::ZERO, 5),
            line(1, DVec2::new(0.5, 0.0), DVec2::ZERO, 5),
        ]);
        let set = extract(&crowd, &FeatureParams::default()).unwrap();
        assert!(set.get(FeatureId::Col).values.iter().all(|&v| v == 1.0));
        assert!(set.get(FeatureId::Ttc).values.iter().all(|&v| v == 0.0));
        assert!(set.get(FeatureId::Ist).values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn personal_space_overlap_depth() {
        let crowd = crowd_from(vec![
            line(0, DVec2::ZERO, DVec2::ZERO, 4),
            line(1, DVec2::new(0.8, 0.0), DVec2::ZERO, 4),
        ]);
        let set = extract(&crowd, &FeatureParams::default()).unwrap();
        for v in &set.get(FeatureId::Ovp).values {
            assert_abs_diff_eq!(*v, 0.2, epsilon = 1e-12);
        }
        assert!(set.get(FeatureId::Col).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn far_apart_agents_do_not_interact() {
        let crowd = crowd_from(vec![
            line(0, DVec2::ZERO, DVec2::new(1.0, 0.0), 15),
            line(1, DVec2::new(0.0, 40.0), DVec2::new(-1.0, 0.0), 15),
        ]);
        let set = extract(&crowd, &FeatureParams::default()).unwrap();
        assert!(set.get(FeatureId::Ist).values.iter().all(|&v| v == 0.0));
        assert!(set.get(FeatureId::Ttc).values.iter().all(|&v| v == 10.0));
        assert!(set.get(FeatureId::Ldn).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flicker_counts_alternations() {
        // zig-zag heading changes of +-0.3 rad every step
        let changes: Vec<f64> = (0..12).map(|k| if k == 0 { 0.0 } else if k % 2 == 0 { 0.3 } else { -0.3 }).collect();
        let f = flicker(&changes, 0.15, 10);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 0.0);
        assert_abs_diff_eq!(f[2], 0.1);
        assert_abs_diff_eq!(f[11], 0.9);
        // smooth turn: no alternation
        let smooth = vec![0.3; 12];
        assert!(flicker(&smooth, 0.15, 10).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn anticipation_records_ttc_at_maneuver() {
        // agent 0 walks toward a standing agent and starts turning at step 10
        let mut p = DVec2::ZERO;
        let mut heading: f64 = 0.0;
        let mut positions = vec![p];
        for k in 1..40 {
            if k > 10 && heading < PI / 2.0 {
                heading += 0.06;
            }
            p += DVec2::from_angle(heading) * 0.12;
            positions.push(p);
        }
        let crowd = crowd_from(vec![
            AgentTrack::new(AgentId(0), positions),
            line(1, DVec2::new(8.0, 0.0), DVec2::ZERO, 40),
        ]);
        let set = extract(&crowd, &FeatureParams::default()).unwrap();
        let ian = &set.get(FeatureId::Ian).values[..40];
        let ttc = &set.get(FeatureId::Ttc).values[..40];
        assert!(ttc[0] < 10.0);
        // the velocity at step 10 already includes the first turn
        assert_abs_diff_eq!(ian[0], ttc[10], epsilon = 1e-12);
        assert!(ian[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrap_angle_range() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-PI), PI);
        assert_abs_diff_eq!(wrap_angle(0.2), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn hull_area_of_square() {
        let square = [DVec2::ZERO, DVec2::X, DVec2::ONE, DVec2::Y, DVec2::splat(0.5)];
        assert_abs_diff_eq!(inflated_hull_area(&square, 0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inflated_hull_area(&square, 1.0), 1.0 + 4.0 + PI, epsilon = 1e-12);
        assert_abs_diff_eq!(inflated_hull_area(&[DVec2::ZERO], 1.0), PI);
        assert_abs_diff_eq!(
            inflated_hull_area(&[DVec2::ZERO, DVec2::new(2.0, 0.0)], 1.0),
            4.0 + PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn features_csv_layout() {
        let crowd = crowd_from(vec![line(7, DVec2::ZERO, DVec2::X, 3)]);
        let set = extract(&crowd, &FeatureParams::default()).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("feature,agent_id,t,value"));
        assert_eq!(lines.next(), Some("AWS,7,0,1"));
        assert!(text.contains("\nGLR,7,,"));
        assert!(text.contains("\nVAR,,0.2,"));
        assert_eq!(text.lines().count(), 1 + 17 * 3 + 2 + 2 * 3);
    }
}
