//! Crowd trajectory data model.
//!
//! A [`CrowdTrajectory`] holds `N` characters sampled on a shared uniform time
//! axis of `T` steps. Kinematics (velocity, speed, heading) are always derived
//! from positions by finite differences, so a crowd rebuilt from its own
//! positions is bit-identical to the original.

use std::collections::HashSet;
use std::fmt;

use glam::DVec2;

use crate::error::{Error, Result};

/// Canonical sampling interval used for all internal computation (s).
pub const CANONICAL_DT: f64 = 0.1;
/// Speeds below this are treated as standing still (m/s).
pub const SPEED_EPSILON: f64 = 1e-3;
pub const DEFAULT_BODY_RADIUS: f64 = 0.3;
pub const DEFAULT_PERSONAL_RADIUS: f64 = 0.5;
/// Comfort speed assumed for agents that never move in the input (m/s).
pub const FALLBACK_COMFORT_SPEED: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Properties fixed for the whole trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentStatics {
    pub agent_id: AgentId,
    pub body_radius: f64,
    pub personal_radius: f64,
}

impl AgentStatics {
    pub fn new(agent_id: AgentId, body_radius: f64) -> Self {
        Self {
            agent_id,
            body_radius,
            personal_radius: DEFAULT_PERSONAL_RADIUS.max(body_radius),
        }
    }
}

/// Per-character properties that stay constant over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentIndividuals {
    pub goal: DVec2,
    pub comfort_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: DVec2,
    pub velocity: DVec2,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterTrajectory {
    pub statics: AgentStatics,
    pub individuals: AgentIndividuals,
    pub states: Vec<AgentState>,
}

impl CharacterTrajectory {
    pub fn positions(&self) -> impl Iterator<Item = DVec2> + '_ {
        self.states.iter().map(|s| s.position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrowdTrajectory {
    pub characters: Vec<CharacterTrajectory>,
    pub dt: f64,
    pub t0: f64,
}

/// Raw per-agent input for [`derive_kinematics`]. Missing individual
/// properties are filled with defaults: goal = last position, comfort speed =
/// median observed speed, body radius = [`DEFAULT_BODY_RADIUS`].
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTrack {
    pub agent_id: AgentId,
    pub positions: Vec<DVec2>,
    pub goal: Option<DVec2>,
    pub comfort_speed: Option<f64>,
    pub body_radius: Option<f64>,
}

impl AgentTrack {
    pub fn new(agent_id: AgentId, positions: Vec<DVec2>) -> Self {
        Self {
            agent_id,
            positions,
            goal: None,
            comfort_speed: None,
            body_radius: None,
        }
    }
}

impl CrowdTrajectory {
    pub fn agent_count(&self) -> usize {
        self.characters.len()
    }

    /// Number of timesteps `T`.
    pub fn steps(&self) -> usize {
        self.characters.first().map_or(0, |c| c.states.len())
    }

    pub fn duration(&self) -> f64 {
        self.steps().saturating_sub(1) as f64 * self.dt
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }

    /// Position of every agent at `step`, in character order.
    pub fn positions_at(&self, step: usize) -> Vec<DVec2> {
        self.characters
            .iter()
            .map(|c| c.states[step].position)
            .collect()
    }

    /// Back to the raw per-agent form, keeping all individual properties.
    pub fn to_tracks(&self) -> Vec<AgentTrack> {
        self.characters
            .iter()
            .map(|c| AgentTrack {
                agent_id: c.statics.agent_id,
                positions: c.positions().collect(),
                goal: Some(c.individuals.goal),
                comfort_speed: Some(c.individuals.comfort_speed),
                body_radius: Some(c.statics.body_radius),
            })
            .collect()
    }

    /// Sub-range of time steps `[start, end)` with kinematics re-derived.
    pub fn slice(&self, start: usize, end: usize) -> Result<CrowdTrajectory> {
        let steps = self.steps();
        if start >= end || end > steps {
            return Err(Error::InvalidArgument(format!(
                "step range {start}..{end} outside 0..{steps}"
            )));
        }
        let tracks = self
            .to_tracks()
            .into_iter()
            .map(|mut t| {
                t.positions = t.positions[start..end].to_vec();
                t
            })
            .collect::<Vec<_>>();
        let mut crowd = derive_kinematics(&tracks, self.dt)?;
        crowd.t0 = self.time(start);
        Ok(crowd)
    }

    /// Rebuild with a rigid motion (rotation by `angle` then translation)
    /// applied to positions and goals.
    pub fn transformed(&self, angle: f64, translation: DVec2) -> Result<CrowdTrajectory> {
        let rot = DVec2::from_angle(angle);
        let tracks = self
            .to_tracks()
            .into_iter()
            .map(|mut t| {
                for p in &mut t.positions {
                    *p = rot.rotate(*p) + translation;
                }
                t.goal = t.goal.map(|g| rot.rotate(g) + translation);
                t
            })
            .collect::<Vec<_>>();
        let mut crowd = derive_kinematics(&tracks, self.dt)?;
        crowd.t0 = self.t0;
        Ok(crowd)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Derive velocities, speeds and headings from per-agent positions sampled at
/// a uniform `dt`.
///
/// Velocity at step `t` is the forward difference `(p[t+1] - p[t]) / dt`; the
/// last step reuses the backward difference. Headings follow the velocity
/// when moving and are carried forward when the agent stands still; a
/// stationary first state faces its goal.
pub fn derive_kinematics(tracks: &[AgentTrack], dt: f64) -> Result<CrowdTrajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::MalformedInput(format!("dt must be positive, got {dt}")));
    }
    if tracks.is_empty() {
        return Err(Error::MalformedInput("crowd has no agents".into()));
    }
    let mut characters = Vec::with_capacity(tracks.len());
    for track in tracks {
        let positions = &track.positions;
        let steps = positions.len();
        if steps < 2 {
            return Err(Error::MalformedInput(format!(
                "agent {} has {steps} timestep(s), at least 2 are required",
                track.agent_id
            )));
        }
        let velocities: Vec<DVec2> = (0..steps)
            .map(|t| {
                let (a, b) = if t + 1 < steps { (t, t + 1) } else { (t - 1, t) };
                (positions[b] - positions[a]) / dt
            })
            .collect();

        let goal = track.goal.unwrap_or(positions[steps - 1]);
        let comfort_speed = match track.comfort_speed {
            Some(s) => s,
            None => {
                let mut speeds: Vec<f64> = velocities.iter().map(|v| v.length()).collect();
                let observed = median(&mut speeds);
                if observed > SPEED_EPSILON {
                    observed
                } else {
                    FALLBACK_COMFORT_SPEED
                }
            }
        };

        let to_goal = goal - positions[0];
        let mut heading = if to_goal.length() > SPEED_EPSILON {
            to_goal.y.atan2(to_goal.x)
        } else {
            0.0
        };
        let states = positions
            .iter()
            .zip(&velocities)
            .map(|(&position, &velocity)| {
                let speed = velocity.length();
                if speed > SPEED_EPSILON {
                    heading = velocity.y.atan2(velocity.x);
                }
                AgentState {
                    position,
                    velocity,
                    heading,
                    speed,
                }
            })
            .collect();

        characters.push(CharacterTrajectory {
            statics: AgentStatics::new(
                track.agent_id,
                track.body_radius.unwrap_or(DEFAULT_BODY_RADIUS),
            ),
            individuals: AgentIndividuals {
                goal,
                comfort_speed,
            },
            states,
        });
    }
    let steps = characters[0].states.len();
    if let Some(c) = characters.iter().find(|c| c.states.len() != steps) {
        return Err(Error::MalformedInput(format!(
            "agent {} has {} timesteps, expected {steps}",
            c.statics.agent_id,
            c.states.len()
        )));
    }
    Ok(CrowdTrajectory {
        characters,
        dt,
        t0: 0.0,
    })
}

/// Linearly interpolate positions onto the grid `t0, t0 + dt_out, ...` and
/// re-derive kinematics. The grid stops at the last original sample.
pub fn resample(crowd: &CrowdTrajectory, dt_out: f64) -> Result<CrowdTrajectory> {
    if !(dt_out > 0.0) || !dt_out.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "output dt must be positive, got {dt_out}"
        )));
    }
    let steps = crowd.steps();
    let span = crowd.duration();
    // Tolerance keeps the final sample when the span is a multiple of dt_out.
    let out_steps = (span / dt_out + 1e-9).floor() as usize + 1;
    if out_steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "output dt {dt_out} leaves fewer than 2 samples over {span} s"
        )));
    }
    let ratio = dt_out / crowd.dt;
    let tracks: Vec<AgentTrack> = crowd
        .to_tracks()
        .into_iter()
        .map(|mut track| {
            let src = std::mem::take(&mut track.positions);
            track.positions = (0..out_steps)
                .map(|k| {
                    let x = k as f64 * ratio;
                    let i = (x.floor() as usize).min(steps - 1);
                    let frac = x - i as f64;
                    if i + 1 >= steps || frac <= 0.0 {
                        src[i]
                    } else {
                        src[i].lerp(src[i + 1], frac)
                    }
                })
                .collect();
            track
        })
        .collect();
    let mut out = derive_kinematics(&tracks, dt_out)?;
    out.t0 = crowd.t0;
    Ok(out)
}

/// One broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFiniteState { agent: AgentId, step: usize },
    DuplicateId(AgentId),
    RaggedStates { agent: AgentId, steps: usize, expected: usize },
    NonPositiveRadius { agent: AgentId },
    PersonalRadiusTooSmall { agent: AgentId },
    NonPositiveComfortSpeed { agent: AgentId },
    NonPositiveDt(f64),
    NoAgents,
    EmptyStates { agent: AgentId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteState { agent, step } => {
                write!(f, "agent {agent}: non-finite state at step {step}")
            }
            Violation::DuplicateId(id) => write!(f, "agent id {id} used more than once"),
            Violation::RaggedStates {
                agent,
                steps,
                expected,
            } => write!(f, "agent {agent}: {steps} states, expected {expected}"),
            Violation::NonPositiveRadius { agent } => {
                write!(f, "agent {agent}: body radius must be positive")
            }
            Violation::PersonalRadiusTooSmall { agent } => {
                write!(f, "agent {agent}: personal radius smaller than body radius")
            }
            Violation::NonPositiveComfortSpeed { agent } => {
                write!(f, "agent {agent}: comfort speed must be positive")
            }
            Violation::NonPositiveDt(dt) => write!(f, "dt must be positive, got {dt}"),
            Violation::NoAgents => write!(f, "crowd has no agents"),
            Violation::EmptyStates { agent } => write!(f, "agent {agent}: no states"),
        }
    }
}

/// Check every data-model invariant. An empty report means the crowd is valid.
pub fn validate(crowd: &CrowdTrajectory) -> Vec<Violation> {
    let mut report = Vec::new();
    if !(crowd.dt > 0.0) {
        report.push(Violation::NonPositiveDt(crowd.dt));
    }
    if crowd.characters.is_empty() {
        report.push(Violation::NoAgents);
        return report;
    }
    let expected = crowd.steps();
    let mut seen = HashSet::new();
    let mut duplicated = HashSet::new();
    for c in &crowd.characters {
        let agent = c.statics.agent_id;
        if !seen.insert(agent) && duplicated.insert(agent) {
            report.push(Violation::DuplicateId(agent));
        }
        if c.states.is_empty() {
            report.push(Violation::EmptyStates { agent });
        } else if c.states.len() != expected {
            report.push(Violation::RaggedStates {
                agent,
                steps: c.states.len(),
                expected,
            });
        }
        if !(c.statics.body_radius > 0.0) {
            report.push(Violation::NonPositiveRadius { agent });
        }
        if !(c.statics.personal_radius >= c.statics.body_radius) {
            report.push(Violation::PersonalRadiusTooSmall { agent });
        }
        if !(c.individuals.comfort_speed > 0.0) {
            report.push(Violation::NonPositiveComfortSpeed { agent });
        }
        for (step, s) in c.states.iter().enumerate() {
            let finite = s.position.is_finite()
                && s.velocity.is_finite()
                && s.heading.is_finite()
                && s.speed.is_finite();
            if !finite {
                report.push(Violation::NonFiniteState { agent, step });
            }
        }
    }
    report
}
