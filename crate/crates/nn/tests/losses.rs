use guidedplan_core::oracle::{soft_policy, soft_value_iteration, TabularMdp};
use guidedplan_nn::entropy::EntropySchedule;
use guidedplan_nn::losses::{loss_sac_policy, loss_sac_q, loss_ssl_policy, loss_ssl_value, soft_target};
use guidedplan_nn::{
    softmax, Adam, ApproximatorParams, Checkpoint, EntropyController, Mlp, NetworkConfig, PolicySample, Transition,
    TwinQ, ValueSample,
};

fn logits_net(logits: &[f64]) -> Mlp {
    let mut net = Mlp::zeros(&[1, logits.len()]);
    let n = net.param_count();
    net.params_mut()[n - logits.len()..].copy_from_slice(logits);
    net
}

#[test]
fn uniform_policy_cross_entropy_is_ln_actions() {
    let net = Mlp::zeros(&[2, 9]);
    let x = [0.5, 1.0];
    let out = loss_ssl_policy(&net, &[PolicySample { x: &x, action: 4 }], 0.0, false);
    assert!((out.loss - 9f64.ln()).abs() < 1e-12);
    assert!((out.loss - 2.1972).abs() < 1e-4);
}

#[test]
fn confident_correct_policy_has_near_zero_loss() {
    let net = logits_net(&[20.0, 0.0, -5.0]);
    let out = loss_ssl_policy(&net, &[PolicySample { x: &[0.0], action: 0 }], 0.0, false);
    assert!(out.loss <= 1e-6);
}

#[test]
fn zero_value_labels_only_train_masks() {
    let mut net = Mlp::zeros(&[1, 4]);
    let n = net.param_count();
    net.params_mut()[n - 4..].copy_from_slice(&[0.0, 0.0, 5.0, -7.0]);
    let out = loss_ssl_value(&net, &[ValueSample { x: &[1.0], safe: 0.0, collision: 0.0 }], false);
    assert!((out.loss - 0.5).abs() < 1e-15);
    // Bias gradients: masks pushed down, value outputs untouched.
    let g = &out.grads[n - 4..];
    assert!(g[0] > 0.0 && g[1] > 0.0);
    assert_eq!((g[2], g[3]), (0.0, 0.0));
}

#[test]
fn perfect_value_prediction_has_zero_loss() {
    let mut net = Mlp::zeros(&[1, 4]);
    let n = net.param_count();
    net.params_mut()[n - 4..].copy_from_slice(&[800.0, -800.0, -0.3, 12.0]);
    let out = loss_ssl_value(&net, &[ValueSample { x: &[0.0], safe: -0.3, collision: 0.0 }], false);
    assert_eq!(out.loss, 0.0);
}

#[test]
fn constant_q_gives_zero_policy_gradient() {
    let net = Mlp::random(&[2, 3, 4], 1, 1.0);
    let x = [0.2, -0.4];
    let out = loss_sac_policy(&net, &[&x], &[vec![3.0; 4]], 0.0, false);
    assert!(out.grads.iter().all(|g| g.abs() < 1e-14));
}

#[test]
fn one_hot_q_concentrates_policy() {
    let mut net = Mlp::zeros(&[1, 3]);
    let mut opt = Adam::new(net.param_count(), 0.05);
    let q = vec![vec![10.0, 0.0, 0.0]];
    for _ in 0..2000 {
        let out = loss_sac_policy(&net, &[&[1.0]], &q, 0.0, false);
        opt.step(net.params_mut(), &out.grads).unwrap();
    }
    assert!(softmax(&net.forward(&[1.0]))[0] > 0.99);
}

#[test]
fn done_transition_targets_reward() {
    let q = TwinQ::new(2, 2, &NetworkConfig { trunk: vec![3], head_hidden: 3, value_scale: 1.0 }, 1);
    let policy = Mlp::random(&[2, 2], 2, 1.0);
    let t = Transition { x: &[1.0, 0.0], action: 1, reward: -2.5, next_x: &[0.0, 1.0], done: true };
    assert_eq!(soft_target(&q, &policy, &t, 0.3, 0.99), -2.5);
}

/// Tabular soft actor-critic on the two-state toy, checked against soft
/// value iteration.
#[test]
fn soft_q_updates_reach_soft_value_iteration_fixed_point() {
    let mdp = TabularMdp::two_state_toy();
    let (gamma, alpha) = (0.9, 0.5);
    let oracle = soft_value_iteration(&mdp, gamma, alpha, 1e-12);
    let onehot = [[1.0, 0.0], [0.0, 1.0]];
    let mut q = TwinQ {
        online: [Mlp::zeros(&[2, 2]), Mlp::random(&[2, 2], 4, 1.0)],
        target: [Mlp::zeros(&[2, 2]), Mlp::zeros(&[2, 2])],
    };
    q.target = q.online.clone();
    let mut policy = Mlp::zeros(&[2, 2]);
    let steps = 30_000;
    let mut opt_q = [Adam::new(6, 0.05), Adam::new(6, 0.05)];
    let mut opt_pi = Adam::new(6, 0.05);
    let batch: Vec<Transition> = (0..2)
        .flat_map(|s| (0..2).map(move |a| (s, a)))
        .map(|(s, a)| Transition {
            x: &onehot[s],
            action: a,
            reward: mdp.rewards[s][a],
            next_x: &onehot[mdp.deterministic_next(s, a).unwrap()],
            done: false,
        })
        .collect();
    let xs: Vec<&[f64]> = onehot.iter().map(|x| x.as_slice()).collect();
    for step in 0..steps {
        let lr = 0.05 * (1.0 - step as f64 / steps as f64) + 1e-4;
        let out = loss_sac_q(&q, &policy, &batch, alpha, gamma, false);
        for k in 0..2 {
            opt_q[k].lr = lr;
            opt_q[k].step(q.online[k].params_mut(), &out.grads[k]).unwrap();
        }
        let qv: Vec<Vec<f64>> = xs.iter().map(|x| q.online_min(x)).collect();
        let pl = loss_sac_policy(&policy, &xs, &qv, alpha, false);
        opt_pi.lr = lr;
        opt_pi.step(policy.params_mut(), &pl.grads).unwrap();
        q.polyak(0.05);
    }
    for s in 0..2 {
        let got = q.online[0].forward(&onehot[s]);
        for a in 0..2 {
            assert!((got[a] - oracle[s][a]).abs() <= 1e-3, "Q({s},{a}) = {} vs {}", got[a], oracle[s][a]);
        }
        let pi = softmax(&policy.forward(&onehot[s]));
        let want = soft_policy(&oracle[s], alpha);
        assert!((pi[0] - want[0]).abs() <= 1e-3);
    }
}

/// Policy trained toward a one-hot label while alpha adapts; the batch
/// entropy must settle within 5% of both annealing endpoints.
#[test]
fn entropy_controller_tracks_targets() {
    let schedule = EntropySchedule::for_actions(9, 1);
    for target in [schedule.start, schedule.end] {
        let mut net = Mlp::random(&[2, 8, 9], 11, 1.0);
        let mut opt = Adam::new(net.param_count(), 3e-3);
        let mut ctl = EntropyController::new(1.0, target, 3e-3);
        let xs = [[1.0, 0.0], [0.0, 1.0]];
        let batch: Vec<PolicySample> = xs.iter().map(|x| PolicySample { x, action: 2 }).collect();
        let mut h = 0.0;
        for _ in 0..10_000 {
            let out = loss_ssl_policy(&net, &batch, ctl.alpha(), false);
            opt.step(net.params_mut(), &out.grads).unwrap();
            ctl.update(out.entropy);
            h = out.entropy;
        }
        assert!((h - target).abs() <= 0.05 * target, "entropy {h} target {target}");
    }
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let cfg = NetworkConfig { trunk: vec![7, 5], head_hidden: 6, value_scale: 100.0 };
    let params = ApproximatorParams::new(4, 3, &cfg, 8);
    let ck = Checkpoint { step: 42, params, q: Some(TwinQ::new(4, 3, &cfg, 9)), alpha: Some(0.123456789) };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("step-42.ckpt");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    let x = [0.1, -0.7, 3.3, 1e-3];
    assert_eq!(
        guidedplan_nn::forward_policy(&back.params, &x).iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        guidedplan_nn::forward_policy(&ck.params, &x).iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn corrupt_checkpoint_reports_line() {
    let cfg = NetworkConfig { trunk: vec![2], head_hidden: 2, value_scale: 1.0 };
    let ck = Checkpoint { step: 1, params: ApproximatorParams::zeros(2, 2, &cfg), q: None, alpha: None };
    let text = ck.to_text().replacen("0.0 0.0\n", "0.0 oops\n", 1);
    match Checkpoint::parse(&text) {
        Err(guidedplan_nn::NnError::Checkpoint { line, .. }) => assert!(line > 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn identical_training_runs_are_identical() {
    let run = |parallel: bool| {
        let mut net = Mlp::random(&[3, 6, 4], 5, 1.0);
        let mut opt = Adam::new(net.param_count(), 1e-2);
        let xs: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 50.0, 1.0, -(i as f64) / 25.0]).collect();
        let batch: Vec<PolicySample> = xs.iter().enumerate().map(|(i, x)| PolicySample { x, action: i % 4 }).collect();
        for _ in 0..20 {
            let out = loss_ssl_policy(&net, &batch, 0.1, parallel);
            opt.step(net.params_mut(), &out.grads).unwrap();
        }
        net
    };
    assert_eq!(run(false), run(false));
    assert_eq!(run(false), run(true));
}
