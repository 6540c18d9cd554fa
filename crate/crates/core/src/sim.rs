//! Social-forces crowd simulator and scenario generators.
//!
//! Each agent is driven towards its goal at its comfort speed and pushed away
//! from every other agent by a circular exponential repulsion:
//!
//! ```text
//! a = (v0 * e_goal - v) / tau + sum_j A * exp((r_i + r_j - d_ij) / B) * n_ji + noise
//! ```
//!
//! integrated with explicit Euler. Agents within [`GOAL_RADIUS`] of their goal
//! stop and hold their position for the rest of the run.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use glam::DVec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kvfile::KvFile;
use crate::trajectory::{derive_kinematics, AgentId, AgentTrack, CrowdTrajectory, DEFAULT_BODY_RADIUS};

/// Distance at which an agent counts as arrived (m).
pub const GOAL_RADIUS: f64 = 0.3;
const COMFORT_SPEED_MEAN: f64 = 1.4;
const COMFORT_SPEED_SD: f64 = 0.15;
const COMFORT_SPEED_RANGE: (f64, f64) = (0.8, 2.0);
const DEFAULT_DENSITY: f64 = 0.5;
/// Minimum free space between spawned bodies (m).
const SPAWN_GAP: f64 = 0.1;
const SPAWN_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialForcesParams {
    /// Time to relax towards the desired velocity (s).
    pub relaxation_time: f64,
    /// Repulsion magnitude at body contact (m/s²).
    pub repulsion_strength: f64,
    /// Decay length of the repulsion (m).
    pub repulsion_range: f64,
    pub max_speed: f64,
    /// Standard deviation of the per-axis random acceleration (m/s²).
    pub noise_amplitude: f64,
}

impl Default for SocialForcesParams {
    fn default() -> Self {
        Self {
            relaxation_time: 0.5,
            repulsion_strength: 10.0,
            repulsion_range: 0.8,
            max_speed: 2.5,
            noise_amplitude: 0.05,
        }
    }
}

impl SocialForcesParams {
    pub const NAMES: [&'static str; 5] = [
        "relaxation_time",
        "repulsion_strength",
        "repulsion_range",
        "max_speed",
        "noise_amplitude",
    ];

    pub fn to_genome(&self) -> Vec<f64> {
        vec![
            self.relaxation_time,
            self.repulsion_strength,
            self.repulsion_range,
            self.max_speed,
            self.noise_amplitude,
        ]
    }

    pub fn from_genome(genes: &[f64]) -> Result<Self> {
        match genes {
            &[relaxation_time, repulsion_strength, repulsion_range, max_speed, noise_amplitude] => {
                let p = Self {
                    relaxation_time,
                    repulsion_strength,
                    repulsion_range,
                    max_speed,
                    noise_amplitude,
                };
                p.validate()?;
                Ok(p)
            }
            _ => Err(Error::Configuration(format!(
                "social forces take 5 parameters, got {}",
                genes.len()
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip(self.to_genome()) {
            let ok = if *name == "noise_amplitude" { v >= 0.0 } else { v > 0.0 };
            if !(ok && v.is_finite()) {
                return Err(Error::Configuration(format!("{name} out of range: {v}")));
            }
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::default();
        for (name, v) in Self::NAMES.iter().zip(self.to_genome()) {
            kv.insert(*name, v.to_string());
        }
        kv
    }

    /// Keys missing from the file keep their default value.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.check_keys(|k| Self::NAMES.contains(&k))?;
        let mut genes = Self::default().to_genome();
        for (i, name) in Self::NAMES.iter().enumerate() {
            if let Some(v) = kv.get_f64(name)? {
                genes[i] = v;
            }
        }
        Self::from_genome(&genes)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_kv().write(path)
    }
}

/// Search box for each social-forces parameter, in [`SocialForcesParams::NAMES`] order.
pub fn default_parameter_bounds() -> Vec<(f64, f64)> {
    vec![(0.1, 5.0), (0.05, 20.0), (0.05, 2.0), (2.0, 4.0), (0.0, 3.0)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    /// Agents evenly spaced on a circle, each heading to the opposite point.
    Circle,
    /// Two flows whose walking directions differ by the given angle (radians).
    Crossing(f64),
    /// Uniform random spawns and goals in a square.
    Random,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioKind::Circle => f.write_str("circle"),
            ScenarioKind::Crossing(angle) => write!(f, "crossing:{}", angle.to_degrees()),
            ScenarioKind::Random => f.write_str("random"),
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    /// `circle`, `random`, `crossing` (90 degrees) or `crossing:<degrees>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("circle", None) => Ok(ScenarioKind::Circle),
            ("random", None) => Ok(ScenarioKind::Random),
            ("crossing", None) => Ok(ScenarioKind::Crossing(PI / 2.0)),
            ("crossing", Some(deg)) => deg
                .parse::<f64>()
                .map(|d| ScenarioKind::Crossing(d.to_radians()))
                .map_err(|_| Error::InvalidArgument(format!("bad crossing angle `{deg}`"))),
            _ => Err(Error::InvalidArgument(format!("unknown scenario kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub agent_count: usize,
    /// Circle radius, or square side for crossing blocks and random scenes (m).
    /// Derived from the density target when absent.
    pub size: Option<f64>,
    /// Target density (persons/m²), used when `size` is absent.
    pub density: Option<f64>,
    pub seed: u64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, agent_count: usize, seed: u64) -> Self {
        Self {
            kind,
            agent_count,
            size: None,
            density: None,
            seed,
        }
    }

    /// Same scenario drawn with another seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// State of one simulated agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimAgent {
    pub position: DVec2,
    pub velocity: DVec2,
    pub goal: DVec2,
    pub comfort_speed: f64,
    pub radius: f64,
    pub arrived: bool,
}

fn place_disc(
    placed: &[DVec2],
    rng: &mut ChaCha8Rng,
    sample: impl Fn(&mut ChaCha8Rng) -> DVec2,
) -> Result<DVec2> {
    let min_gap = 2.0 * DEFAULT_BODY_RADIUS + SPAWN_GAP;
    for _ in 0..SPAWN_ATTEMPTS {
        let p = sample(rng);
        if placed.iter().all(|q| (*q - p).length() >= min_gap) {
            return Ok(p);
        }
    }
    Err(Error::Configuration(format!(
        "cannot place {} non-overlapping agents in the scenario area",
        placed.len() + 1
    )))
}

/// Initial agents for a scenario: positions, goals and comfort speeds.
pub fn make_scenario(scenario: &Scenario) -> Result<Vec<SimAgent>> {
    let n = scenario.agent_count;
    if n == 0 {
        return Err(Error::Configuration("scenario needs at least one agent".into()));
    }
    if let Some(d) = scenario.density {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Configuration(format!("density must be positive, got {d}")));
        }
    }
    if let Some(s) = scenario.size {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Configuration(format!("scenario size must be positive, got {s}")));
        }
    }
    let density = scenario.density.unwrap_or(DEFAULT_DENSITY);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let min_gap = 2.0 * DEFAULT_BODY_RADIUS + SPAWN_GAP;

    let (positions, goals): (Vec<DVec2>, Vec<DVec2>) = match scenario.kind {
        ScenarioKind::Circle => {
            let radius = scenario.size.unwrap_or_else(|| match scenario.density {
                Some(d) => (n as f64 / (PI * d)).sqrt(),
                None => (n as f64 * 0.8 / (2.0 * PI)).max(5.0),
            });
            if n > 1 && 2.0 * radius * (PI / n as f64).sin() < min_gap {
                return Err(Error::Configuration(format!(
                    "{n} agents do not fit on a circle of radius {radius} m"
                )));
            }
            (0..n)
                .map(|k| {
                    let p = DVec2::from_angle(2.0 * PI * k as f64 / n as f64) * radius;
                    (p, -p)
                })
                .unzip()
        }
        ScenarioKind::Crossing(angle) => {
            let flows = [(n - n / 2, DVec2::X), (n / 2, DVec2::from_angle(angle))];
            let mut positions: Vec<DVec2> = Vec::with_capacity(n);
            let mut goals = Vec::with_capacity(n);
            for (count, dir) in flows {
                let side = scenario.size.unwrap_or_else(|| (count.max(1) as f64 / density).sqrt());
                let offset = side / 2.0 + 3.0;
                let center = -dir * offset;
                let lateral = dir.perp();
                for _ in 0..count {
                    let p = place_disc(&positions, &mut rng, |r| {
                        center
                            + dir * r.gen_range(-side / 2.0..=side / 2.0)
                            + lateral * r.gen_range(-side / 2.0..=side / 2.0)
                    })?;
                    positions.push(p);
                    goals.push(p + dir * 2.0 * offset);
                }
            }
            (positions, goals)
        }
        ScenarioKind::Random => {
            let side = scenario.size.unwrap_or_else(|| (n as f64 / density).sqrt());
            let half = side / 2.0;
            let mut positions: Vec<DVec2> = Vec::with_capacity(n);
            let mut goals: Vec<DVec2> = Vec::with_capacity(n);
            for _ in 0..n {
                let sample = |r: &mut ChaCha8Rng| {
                    DVec2::new(r.gen_range(-half..=half), r.gen_range(-half..=half))
                };
                positions.push(place_disc(&positions, &mut rng, sample)?);
                goals.push(place_disc(&goals, &mut rng, sample)?);
            }
            (positions, goals)
        }
    };

    let speed = Normal::new(COMFORT_SPEED_MEAN, COMFORT_SPEED_SD).expect("valid normal");
    Ok(positions
        .into_iter()
        .zip(goals)
        .map(|(position, goal)| SimAgent {
            position,
            velocity: DVec2::ZERO,
            goal,
            comfort_speed: speed
                .sample(&mut rng)
                .clamp(COMFORT_SPEED_RANGE.0, COMFORT_SPEED_RANGE.1),
            radius: DEFAULT_BODY_RADIUS,
            arrived: (goal - position).length() <= GOAL_RADIUS,
        })
        .collect())
}

/// Sum of repulsive accelerations acting on agent `i`.
pub fn repulsion(agents: &[SimAgent], i: usize, params: &SocialForcesParams) -> DVec2 {
    let a = &agents[i];
    agents
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, b)| {
            let away = a.position - b.position;
            let dist = away.length();
            let dir = if dist > 1e-9 { away / dist } else { DVec2::X };
            dir * params.repulsion_strength * ((a.radius + b.radius - dist) / params.repulsion_range).exp()
        })
        .sum()
}

/// Advance all agents by one explicit Euler step.
pub fn step(
    agents: &[SimAgent],
    params: &SocialForcesParams,
    dt: f64,
    rng: &mut impl Rng,
) -> Vec<SimAgent> {
    let noise = Normal::new(0.0, params.noise_amplitude.max(0.0)).expect("valid normal");
    agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let jitter = DVec2::new(noise.sample(rng), noise.sample(rng));
            if a.arrived {
                return SimAgent {
                    velocity: DVec2::ZERO,
                    ..*a
                };
            }
            let desired = (a.goal - a.position).normalize_or_zero() * a.comfort_speed;
            let accel =
                (desired - a.velocity) / params.relaxation_time + repulsion(agents, i, params) + jitter;
            let position = a.position + a.velocity * dt;
            let velocity = (a.velocity + accel * dt).clamp_length_max(params.max_speed);
            let arrived = (a.goal - position).length() <= GOAL_RADIUS;
            SimAgent {
                position,
                velocity: if arrived { DVec2::ZERO } else { velocity },
                arrived,
                ..*a
            }
        })
        .collect()
}

/// Whether any two body discs overlap at any recorded step.
pub fn has_collision(crowd: &CrowdTrajectory) -> bool {
    (0..crowd.steps()).any(|t| {
        let chars = &crowd.characters;
        (0..chars.len()).any(|i| {
            (0..i).any(|j| {
                let reach = chars[i].statics.body_radius + chars[j].statics.body_radius;
                (chars[i].states[t].position - chars[j].states[t].position).length() < reach
            })
        })
    })
}

/// Number of recorded states for a run of `duration` seconds.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(duration >= dt) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "duration {duration} s is shorter than one step of {dt} s"
        )));
    }
    Ok(((duration / dt) - 1e-9).ceil() as usize)
}

/// Run a scenario and record `ceil(duration / dt)` states per agent.
pub fn simulate(
    scenario: &Scenario,
    params: &SocialForcesParams,
    duration: f64,
    dt: f64,
) -> Result<CrowdTrajectory> {
    params.validate()?;
    let steps = step_count(duration, dt)?.max(2);
    let mut agents = make_scenario(scenario)?;
    if let Some(fastest) = agents.iter().map(|a| a.comfort_speed).reduce(f64::max) {
        if params.max_speed < fastest {
            return Err(Error::Configuration(format!(
                "max speed {} is below the largest comfort speed {fastest}",
                params.max_speed
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(1);
    let mut positions: Vec<Vec<DVec2>> = agents.iter().map(|a| vec![a.position]).collect();
    for _ in 1..steps {
        agents = step(&agents, params, dt, &mut rng);
        for (track, a) in positions.iter_mut().zip(&agents) {
            track.push(a.position);
        }
    }
    let tracks: Vec<AgentTrack> = agents
        .iter()
        .zip(positions)
        .enumerate()
        .map(|(i, (a, positions))| AgentTrack {
            agent_id: AgentId(i as u32),
            positions,
            goal: Some(a.goal),
            comfort_speed: Some(a.comfort_speed),
            body_radius: Some(a.radius),
        })
        .collect();
    derive_kinematics(&tracks, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn agent(position: DVec2, goal: DVec2) -> SimAgent {
        SimAgent {
            position,
            velocity: DVec2::ZERO,
            goal,
            comfort_speed: 1.4,
            radius: 0.3,
            arrived: false,
        }
    }

    fn quiet() -> SocialForcesParams {
        SocialForcesParams {
            noise_amplitude: 0.0,
            ..SocialForcesParams::default()
        }
    }

    #[test]
    fn circle_of_two() {
        let mut scenario = Scenario::new(ScenarioKind::Circle, 2, 1);
        scenario.size = Some(5.0);
        let agents = make_scenario(&scenario).unwrap();
        assert!((agents[0].position - DVec2::new(5.0, 0.0)).length() < 1e-12);
        assert!((agents[1].position - DVec2::new(-5.0, 0.0)).length() < 1e-12);
        assert!((agents[0].goal - agents[1].position).length() < 1e-12);
        assert!((agents[1].goal - agents[0].position).length() < 1e-12);
    }

    #[test]
    fn crossing_flows_are_perpendicular() {
        let scenario = Scenario::new(ScenarioKind::Crossing(PI / 2.0), 20, 4);
        let agents = make_scenario(&scenario).unwrap();
        assert_eq!(agents.len(), 20);
        let dir = |a: &SimAgent| (a.goal - a.position).normalize();
        for a in &agents[..10] {
            assert!((dir(a) - DVec2::X).length() < 1e-9);
        }
        for b in &agents[10..] {
            assert_abs_diff_eq!(dir(b).dot(DVec2::X), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn scenarios_are_deterministic_and_spaced() {
        for kind in [ScenarioKind::Circle, ScenarioKind::Crossing(1.0), ScenarioKind::Random] {
            let scenario = Scenario::new(kind, 15, 77);
            let a = make_scenario(&scenario).unwrap();
            assert_eq!(a, make_scenario(&scenario).unwrap());
            for i in 0..a.len() {
                assert!((0.8..=2.0).contains(&a[i].comfort_speed));
                for j in 0..i {
                    assert!((a[i].position - a[j].position).length() >= 0.6);
                }
            }
        }
    }

    #[test]
    fn infeasible_packing_is_a_configuration_error() {
        let mut scenario = Scenario::new(ScenarioKind::Random, 50, 0);
        scenario.size = Some(2.0);
        assert!(matches!(make_scenario(&scenario), Err(Error::Configuration(_))));
        let mut circle = Scenario::new(ScenarioKind::Circle, 40, 0);
        circle.size = Some(1.0);
        assert!(matches!(make_scenario(&circle), Err(Error::Configuration(_))));
    }

    #[test]
    fn first_step_from_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = quiet();
        let next = step(&[agent(DVec2::ZERO, DVec2::new(0.0, 10.0))], &p, 0.1, &mut rng);
        let expected = 0.1 * 1.4 / p.relaxation_time;
        assert_abs_diff_eq!(next[0].velocity.x, 0.0);
        assert_abs_diff_eq!(next[0].velocity.y, expected, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_walks_straight() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = SocialForcesParams {
            repulsion_strength: 1e-12,
            ..quiet()
        };
        let mut a = agent(DVec2::ZERO, DVec2::new(100.0, 0.0));
        a.velocity = DVec2::new(1.4, 0.0);
        let mut agents = vec![a];
        for k in 1..=50 {
            agents = step(&agents, &p, 0.1, &mut rng);
            assert_abs_diff_eq!(agents[0].position.y, 0.0);
            assert_abs_diff_eq!(agents[0].position.x, 0.14 * k as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn head_on_pair_stays_mirror_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = quiet();
        let mut agents = vec![
            agent(DVec2::new(-5.0, 0.0), DVec2::new(5.0, 0.0)),
            agent(DVec2::new(5.0, 0.0), DVec2::new(-5.0, 0.0)),
        ];
        for _ in 0..120 {
            agents = step(&agents, &p, 0.1, &mut rng);
            assert_eq!(agents[0].position, -agents[1].position);
            assert_eq!(agents[0].velocity, -agents[1].velocity);
        }
    }

    #[test]
    fn repulsion_weakens_with_spacing() {
        let p = quiet();
        let total = |spacing: f64| {
            let agents: Vec<SimAgent> = (0..5)
                .map(|k| agent(DVec2::new(k as f64 * spacing, 0.0), DVec2::ZERO))
                .collect();
            (0..5).map(|i| repulsion(&agents, i, &p).length()).sum::<f64>()
        };
        assert!(total(2.0) < total(1.0));
    }

    #[test]
    fn duration_guard() {
        let scenario = Scenario::new(ScenarioKind::Circle, 4, 0);
        assert!(matches!(
            simulate(&scenario, &quiet(), 0.05, 0.1),
            Err(Error::InvalidArgument(_))
        ));
        let crowd = simulate(&scenario, &quiet(), 2.0, 0.1).unwrap();
        assert_eq!(crowd.steps(), 20);
        assert_eq!(crowd.agent_count(), 4);
    }

    #[test]
    fn simulate_is_reproducible() {
        let scenario = Scenario::new(ScenarioKind::Random, 12, 5);
        let p = SocialForcesParams::default();
        assert_eq!(
            simulate(&scenario, &p, 5.0, 0.1).unwrap(),
            simulate(&scenario, &p, 5.0, 0.1).unwrap()
        );
    }

    #[test]
    fn max_speed_below_comfort_is_rejected() {
        let scenario = Scenario::new(ScenarioKind::Random, 10, 5);
        let p = SocialForcesParams {
            max_speed: 0.5,
            ..SocialForcesParams::default()
        };
        assert!(matches!(simulate(&scenario, &p, 5.0, 0.1), Err(Error::Configuration(_))));
    }

    #[test]
    fn collision_check() {
        let still = |gap: f64| {
            let tracks = vec![
                AgentTrack::new(AgentId(0), vec![DVec2::ZERO; 3]),
                AgentTrack::new(AgentId(1), vec![DVec2::new(gap, 0.0); 3]),
            ];
            derive_kinematics(&tracks, 0.1).unwrap()
        };
        assert!(has_collision(&still(0.5)));
        assert!(!has_collision(&still(0.7)));
    }

    #[test]
    fn params_file_round_trip() {
        let p = SocialForcesParams {
            relaxation_time: 0.37,
            ..SocialForcesParams::default()
        };
        let back = SocialForcesParams::from_kv(&KvFile::parse(&p.to_kv().to_text()).unwrap()).unwrap();
        assert_eq!(back, p);
        assert!(SocialForcesParams::from_kv(&KvFile::parse("speed = 1").unwrap()).is_err());
        assert!(SocialForcesParams::from_kv(&KvFile::parse("relaxation_time = -1").unwrap()).is_err());
    }

    #[test]
    fn scenario_kind_parsing() {
        assert_eq!("circle".parse::<ScenarioKind>().unwrap(), ScenarioKind::Circle);
        assert_eq!("random".parse::<ScenarioKind>().unwrap(), ScenarioKind::Random);
        match "crossing:45".parse::<ScenarioKind>().unwrap() {
            ScenarioKind::Crossing(a) => assert_abs_diff_eq!(a, PI / 4.0, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
        assert!("spiral".parse::<ScenarioKind>().is_err());
    }
}
