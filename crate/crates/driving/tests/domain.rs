use guidedplan_core::env::Environment;
use guidedplan_core::oracle::exhaustive_despot_value;
use guidedplan_core::{sample_scenarios, Belief, DiscountSpec, DomainModel, FactoredReward};
use guidedplan_driving::features::{encode_frames, Frame};
use guidedplan_driving::geometry::Vec2;
use guidedplan_driving::hidden::{belief_from_observation, sample_hidden};
use guidedplan_driving::state::{Agent, Ego, Hidden, LaneCommand, AccelCommand};
use guidedplan_driving::{AgentKind, DrivingAction, DrivingConfig, DrivingEnv, DrivingModel, DrivingObservation, DrivingState, LaneGraph};
use proptest::prelude::*;

fn model_with(noise: f64) -> DrivingModel {
    DrivingModel::new(LaneGraph::default_intersection(), DrivingConfig { noise_sigma: noise, ..DrivingConfig::default() })
}

fn ego_on(model: &DrivingModel, lane: usize, s: f64, speed: f64) -> Ego {
    let path = &model.map.lanes[lane].path;
    Ego { pos: path.point_at(s), heading: path.heading_at(s), speed, lane, s }
}

fn lone_ego(model: &DrivingModel, speed: f64) -> DrivingState {
    DrivingState { ego: ego_on(model, 0, 20.0, speed), exos: vec![], collided: false, invalid_lane: false }
}

fn car(pos: Vec2, heading: f64, speed: f64, route: usize) -> Agent {
    Agent { kind: AgentKind::Car, pos, heading, speed, hidden: Hidden { route, attentive: false }, cruise: speed, active: true }
}

fn act(lane: LaneCommand, accel: AccelCommand) -> usize {
    DrivingAction { lane, accel }.index()
}

#[test]
fn maintain_at_full_speed_advances_two_metres() {
    let m = model_with(0.0);
    let s = lone_ego(&m, 6.0);
    let n = m.transition(&s, act(LaneCommand::Keep, AccelCommand::Maintain), 7);
    assert!((n.ego.pos.x - s.ego.pos.x - 2.0).abs() < 1e-12);
    assert!((n.ego.pos.y - s.ego.pos.y).abs() < 1e-12);
}

#[test]
fn braking_clamps_at_zero() {
    let m = model_with(0.05);
    let n = m.transition(&lone_ego(&m, 1.0), act(LaneCommand::Keep, AccelCommand::Dec), 1);
    assert_eq!(n.ego.speed, 0.0);
}

#[test]
fn same_seed_same_successor() {
    let m = model_with(0.05);
    let mut env = DrivingEnv::new(m.clone(), 60, 10);
    env.reset(5);
    let s = env.state().unwrap().clone();
    assert_eq!(m.step(&s, 2, 99), m.step(&s, 2, 99));
    assert_ne!(m.step(&s, 2, 99).state, m.step(&s, 2, 100).state);
}

#[test]
fn reward_examples() {
    let m = model_with(0.0);
    let s = lone_ego(&m, 6.0);
    let keep = act(LaneCommand::Keep, AccelCommand::Maintain);
    let n = m.transition(&s, keep, 0);
    assert_eq!(m.reward(&s, keep, &n), FactoredReward::new(0.0, 0.0));
    let mut crashed = n.clone();
    crashed.collided = true;
    assert_eq!(m.reward(&s, keep, &crashed).collision, -36500.0);
    let stopped = lone_ego(&m, 0.0);
    let dec = act(LaneCommand::Keep, AccelCommand::Dec);
    let n = m.transition(&stopped, dec, 0);
    assert!((m.reward(&stopped, dec, &n).total() + 4.1).abs() < 1e-12);
}

#[test]
fn invalid_lane_change_is_kept_and_flagged() {
    let m = model_with(0.0);
    // Lane 0 has no lane to its left.
    let s = lone_ego(&m, 6.0);
    let left = act(LaneCommand::Left, AccelCommand::Maintain);
    let n = m.transition(&s, left, 0);
    assert!(n.invalid_lane);
    assert_eq!(n.ego.lane, 0);
    assert_eq!(m.reward(&s, left, &n).total(), 0.0);
    let right = act(LaneCommand::Right, AccelCommand::Maintain);
    let n = m.transition(&s, right, 0);
    assert!(!n.invalid_lane);
    assert_eq!(n.ego.lane, 1);
    assert_eq!(m.reward(&s, right, &n).safe, -4.0);
}

#[test]
fn smooth_reward_examples() {
    let m = model_with(0.0);
    let s = lone_ego(&m, 6.0);
    assert!((m.smooth_reward(&s, act(LaneCommand::Keep, AccelCommand::Maintain), &s) - 0.05).abs() < 1e-15);
    assert!((m.smooth_reward(&s, act(LaneCommand::Left, AccelCommand::Maintain), &s) - 0.025).abs() < 1e-15);
    // Stationary ego, oncoming car closing 6 m at 6 m/s.
    let mut still = lone_ego(&m, 0.0);
    still.ego.heading = 0.0;
    let front = still.ego.pos + Vec2::new(m.config.car_length + 6.0, 0.0);
    still.exos.push(car(front, std::f64::consts::PI, 6.0, 4));
    assert!((m.ttc(&still) - 1.0).abs() < 1e-12);
    assert!((m.smooth_reward(&still, act(LaneCommand::Keep, AccelCommand::Maintain), &still) + 1.0 / 9.0).abs() < 1e-12);
}

#[test]
fn upper_bound_dominates_tiny_exhaustive_value() {
    let m = model_with(0.05);
    let mut env = DrivingEnv::new(m.clone(), 60, 10);
    let start = env.reset(2);
    let sc = sample_scenarios(&start.belief, 3, 4).unwrap();
    let d = DiscountSpec { gamma: 0.95, max_horizon: 4, search_depth: 2 };
    let v = exhaustive_despot_value(&sc, &m, &d).unwrap();
    assert!(v.value <= 0.0);
    assert_eq!(m.upper_bound(&sc.get(0).initial_state), 0.0);
}

#[test]
fn single_route_agent_gets_that_route() {
    let m = model_with(0.05);
    let mut s = lone_ego(&m, 3.0);
    let west = &m.map.routes[4].path;
    s.exos.push(car(west.point_at(20.0), west.heading_at(20.0), 4.0, 0));
    for seed in 0..50 {
        assert_eq!(sample_hidden(&m, &s, seed).hidden[0].route, 4);
    }
}

#[test]
fn two_feasible_routes_split_evenly() {
    let m = model_with(0.05);
    let mut s = lone_ego(&m, 3.0);
    let north = &m.map.routes[0].path;
    s.exos.push(car(north.point_at(20.0), north.heading_at(20.0), 4.0, 0));
    let n = 10_000;
    let straight = (0..n).filter(|&k| sample_hidden(&m, &s, k).hidden[0].route == 0).count();
    let turned = (0..n).filter(|&k| sample_hidden(&m, &s, k).hidden[0].route == 1).count();
    assert_eq!(straight + turned, n as usize);
    // Binomial(1e4, 0.5) has standard deviation 50.
    assert!((straight as f64 - 5000.0).abs() < 200.0, "{straight}");
    assert_eq!(sample_hidden(&m, &s, 17), sample_hidden(&m, &s, 17));
}

#[test]
fn features_are_invariant_to_rigid_motion() {
    let m = model_with(0.05);
    let mut env = DrivingEnv::new(m.clone(), 60, 10);
    env.reset(8);
    let mut frames = vec![Frame::from_state(env.state().unwrap())];
    for a in [3, 4, 5] {
        env.step(a);
        frames.push(Frame::from_state(env.state().unwrap()));
    }
    let base = encode_frames(&m.map, &m.config, &frames);
    assert_eq!(base.len(), m.feature_len());
    assert!(base.iter().all(|v| v.is_finite()));
    for &(rot, dx, dy) in &[(0.7, 13.0, -4.0), (-2.9, -100.0, 55.5), (std::f64::consts::PI, 0.0, 0.0)] {
        let shift = Vec2::new(dx, dy);
        let map = m.map.transformed(rot, shift);
        let moved: Vec<Frame> = frames.iter().map(|f| f.transformed(rot, shift)).collect();
        let f = encode_frames(&map, &m.config, &moved);
        for (a, b) in base.iter().zip(&f) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn stationary_ego_ttc_never_drops_when_exos_stop() {
    let m = model_with(0.05);
    for seed in 0..200 {
        let mut s = DrivingEnv::spawn(&m, seed);
        s.ego.speed = 0.0;
        let before = m.ttc(&s);
        for a in &mut s.exos {
            a.speed = 0.0;
        }
        assert!(m.ttc(&s) >= before);
    }
}

#[test]
fn stopping_a_crossing_agent_can_shorten_ttc() {
    let m = model_with(0.0);
    let mut s = lone_ego(&m, 6.0);
    s.ego.heading = 0.0;
    // A car ahead moving north, clearing the ego's path before it arrives.
    s.exos.push(car(s.ego.pos + Vec2::new(12.0, 0.0), std::f64::consts::FRAC_PI_2, 8.0, 0));
    let moving = m.ttc(&s);
    s.exos[0].speed = 0.0;
    assert!(m.ttc(&s) < moving);
}

#[test]
fn belief_from_observation_is_uniform_and_consistent() {
    let m = model_with(0.05);
    let mut env = DrivingEnv::new(m.clone(), 60, 40);
    let start = env.reset(3);
    assert_eq!(start.belief.len(), 40);
    let z = start.observation.expect("driving observes before acting");
    for (p, _) in start.belief.particles() {
        assert_eq!(DrivingObservation::of(p), z);
    }
    let again = belief_from_observation(&m, &z, 40, 9).unwrap();
    assert_eq!(again.len(), 40);
}

#[test]
fn episodes_are_deterministic() {
    let run = || {
        let mut env = DrivingEnv::new(model_with(0.05), 30, 10);
        env.reset(12);
        (0..30).map(|t| env.step(t % 9)).map(|s| (s.observation, s.reward, s.done)).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

fn random_scene() -> impl Strategy<Value = (u64, Vec<usize>, u64)> {
    (any::<u64>(), proptest::collection::vec(0usize..9, 1..25), any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transition_invariants((scene, actions, seed) in random_scene()) {
        let m = model_with(0.05);
        let c = &m.config;
        let mut s = DrivingEnv::spawn(&m, scene);
        let n_exo = s.exos.len();
        for (t, &a) in actions.iter().enumerate() {
            if m.is_terminal(&s) {
                break;
            }
            let out = m.step(&s, a, seed.wrapping_add(t as u64));
            let n = &out.state;
            prop_assert_eq!(n.exos.len(), n_exo);
            // Factored reward against the monolithic sum.
            let act = DrivingAction::from_index(a);
            let v = n.ego.speed;
            let mut mono = 4.0 * (v - 6.0) / 6.0;
            if act.accel == AccelCommand::Dec { mono -= 0.1; }
            if n.ego.lane != s.ego.lane { mono -= 4.0; }
            let col = if n.collided && !s.collided { -1000.0 * (v * v + 0.5) } else { 0.0 };
            prop_assert_eq!(out.reward.safe, mono);
            prop_assert_eq!(out.reward.collision, col);
            prop_assert_eq!(out.reward.safe + out.reward.collision, out.reward.total());
            // Kinematic sanity.
            let bound = |vmax: f64| vmax * c.dt + 3.0 * c.noise_sigma + 1e-12;
            prop_assert!((n.ego.pos - s.ego.pos).norm() <= bound(c.ego_max_speed));
            prop_assert!(n.ego.speed <= c.ego_max_speed);
            for (x, y) in s.exos.iter().zip(&n.exos) {
                if x.active && y.active {
                    let cap = if x.kind == AgentKind::Car { c.car_max_speed } else { c.pedestrian_max_speed };
                    prop_assert!((y.pos - x.pos).norm() <= bound(cap));
                    prop_assert!(y.speed <= cap);
                }
            }
            prop_assert!(out.reward.total() <= m.upper_bound(n));
            s = out.state;
        }
    }

    #[test]
    fn observation_likelihood_peaks_at_agreement(scene in any::<u64>()) {
        let m = model_with(0.05);
        let s = DrivingEnv::spawn(&m, scene);
        let o = DrivingObservation::of(&s);
        prop_assert_eq!(m.observation_likelihood(&o, &o), 1.0);
        let moved = m.step(&s, 4, scene).observation;
        prop_assert!(m.observation_likelihood(&moved, &o) <= 1.0);
    }
}

#[test]
fn belief_particles_track_truth() {
    let m = model_with(0.05);
    let mut env = DrivingEnv::new(m.clone(), 40, 30);
    let start = env.reset(21);
    let mut b: Belief<DrivingState> = start.belief;
    for t in 0..20u64 {
        let a = m.default_action(env.state().unwrap());
        let out = env.step(a);
        let up = guidedplan_core::particle_bayes_update(&b, a, &out.observation, &m, 30, t, false).unwrap();
        assert!(!up.depleted);
        b = up.belief;
        let truth = env.state().unwrap();
        for (p, _) in b.particles() {
            assert!((p.ego.pos - truth.ego.pos).norm() < 0.5);
        }
        if out.done {
            break;
        }
    }
}
