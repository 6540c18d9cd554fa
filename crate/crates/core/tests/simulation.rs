use crowdqf::features::{extract, FeatureId, FeatureParams};
use crowdqf::sim::{has_collision, simulate, step, Scenario, ScenarioKind, SimAgent, SocialForcesParams};
use crowdqf::sim::make_scenario;
use glam::DVec2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quiet() -> SocialForcesParams {
    SocialForcesParams {
        noise_amplitude: 0.0,
        ..SocialForcesParams::default()
    }
}

#[test]
fn lone_walker_reaches_its_goal() {
    let spec = Scenario::new(ScenarioKind::Crossing(1.0), 1, 3);
    let crowd = simulate(&spec, &quiet(), 15.0, 0.1).unwrap();
    let set = extract(&crowd, &FeatureParams::default()).unwrap();
    assert_eq!(set.get(FeatureId::Glr).values, [1.0]);
}

#[test]
fn circle_without_repulsion_collides() {
    let mut spec = Scenario::new(ScenarioKind::Circle, 10, 0);
    spec.size = Some(5.0);
    let p = SocialForcesParams {
        repulsion_strength: 1e-9,
        ..quiet()
    };
    let crowd = simulate(&spec, &p, 8.0, 0.1).unwrap();
    let set = extract(&crowd, &FeatureParams::default()).unwrap();
    let col = set.get(FeatureId::Col);
    let hits: Vec<usize> = (0..col.values.len()).filter(|&i| col.values[i] == 1.0).collect();
    assert!(!hits.is_empty());
    // Every contact happens close to the center the agents all cross.
    for i in hits {
        let (agent, step) = col.tag(i);
        let p = crowd.characters[agent.unwrap()].states[step.unwrap()].position;
        assert!(p.length() < 1.5, "contact at {p}");
    }
}

#[test]
fn default_parameters_avoid_contact_on_the_circle() {
    for seed in 0..5 {
        let crowd = simulate(&Scenario::new(ScenarioKind::Circle, 12, seed), &SocialForcesParams::default(), 10.0, 0.1).unwrap();
        assert!(!has_collision(&crowd), "seed {seed}");
    }
}

fn run_steps(mut agents: Vec<SimAgent>, p: &SocialForcesParams, steps: usize, mut check: impl FnMut(usize, &[SimAgent])) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for k in 0..steps {
        agents = step(&agents, p, 0.1, &mut rng);
        check(k, &agents);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn long_runs_stay_finite_and_below_max_speed(seed in 0u64..1000, strength in 0.5f64..20.0, range in 0.1f64..2.0) {
        let agents = make_scenario(&Scenario::new(ScenarioKind::Random, 10, seed)).unwrap();
        let p = SocialForcesParams { repulsion_strength: strength, repulsion_range: range, ..quiet() };
        run_steps(agents, &p, 10_000, |_, a| {
            for x in a {
                assert!(x.position.is_finite() && x.velocity.is_finite());
                assert!(x.velocity.length() <= p.max_speed + 1e-12);
            }
        });
    }

    #[test]
    fn goal_distance_shrinks_after_the_transient(seed in 0u64..1000, tau in 0.1f64..2.0) {
        let agents = make_scenario(&Scenario::new(ScenarioKind::Random, 6, seed)).unwrap();
        let p = SocialForcesParams { repulsion_strength: 1e-300, relaxation_time: tau, ..quiet() };
        let transient = (3.0 * tau / 0.1).ceil() as usize;
        let mut last: Vec<f64> = agents.iter().map(|a| (a.goal - a.position).length()).collect();
        run_steps(agents, &p, 300, |k, a| {
            for (i, x) in a.iter().enumerate() {
                let d = (x.goal - x.position).length();
                if k >= transient {
                    assert!(d <= last[i] + 1e-9, "agent {i} step {k}: {d} > {}", last[i]);
                }
                last[i] = d;
            }
        });
    }

    #[test]
    fn simulate_is_bit_reproducible(seed in 0u64..1000) {
        let spec = Scenario::new(ScenarioKind::Random, 8, seed);
        let p = SocialForcesParams::default();
        prop_assert_eq!(simulate(&spec, &p, 3.0, 0.1).unwrap(), simulate(&spec, &p, 3.0, 0.1).unwrap());
    }
}

#[test]
fn spacing_weakens_total_repulsion_at_start() {
    let p = quiet();
    let agents = |spacing: f64| -> Vec<SimAgent> {
        (0..6)
            .map(|k| SimAgent {
                position: DVec2::new(k as f64 * spacing, 0.0),
                velocity: DVec2::ZERO,
                goal: DVec2::new(50.0, 0.0),
                comfort_speed: 1.4,
                radius: 0.3,
                arrived: false,
            })
            .collect()
    };
    let total = |a: &[SimAgent]| (0..a.len()).map(|i| crowdqf::sim::repulsion(a, i, &p).length()).sum::<f64>();
    assert!(total(&agents(2.0)) < total(&agents(1.0)));
}
