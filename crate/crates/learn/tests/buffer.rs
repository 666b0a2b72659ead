use guidedplan_core::{FactoredReward, FactoredValue};
use guidedplan_learn::{read_dataset, write_dataset, ExperienceTuple, LearnError, ReplayBuffer};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tuple(i: u64) -> ExperienceTuple {
    ExperienceTuple {
        episode: i / 10,
        step: (i % 10) as u32,
        x: vec![i as f64, -0.1 * i as f64, 1e-300, f64::MAX],
        action: (i % 9) as usize,
        reward: FactoredReward::new(-0.3 * i as f64, if i % 7 == 0 { -36500.0 } else { 0.0 }),
        rl_reward: 0.1 / (i as f64 + 3.0),
        planner_action: ((i + 1) % 9) as usize,
        value: FactoredValue::new(-1.0 / 3.0, -2.0e4),
        done: i % 10 == 9,
        next_x: vec![],
    }
}

#[test]
fn dataset_round_trip_is_exact() {
    let tuples: Vec<_> = (0..25).map(tuple).collect();
    let mut bytes = Vec::new();
    write_dataset(&mut bytes, &tuples).unwrap();
    let back = read_dataset(bytes.as_slice()).unwrap();
    assert_eq!(back, tuples);
    let mut again = Vec::new();
    write_dataset(&mut again, &back).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn corrupt_record_reports_its_line() {
    let tuples: Vec<_> = (0..3).map(tuple).collect();
    let mut bytes = Vec::new();
    write_dataset(&mut bytes, &tuples).unwrap();
    let mut text = String::from_utf8(bytes).unwrap();
    text = text.replacen("-0.1 ", "-0.1x ", 1);
    match read_dataset(text.as_bytes()) {
        Err(LearnError::CorruptDataset { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected corrupt dataset, got {other:?}"),
    }
    let truncated = "# header\n0 0 1 1 0 1.0 0.0\n";
    assert!(matches!(
        read_dataset(truncated.as_bytes()),
        Err(LearnError::CorruptDataset { line: 2, .. })
    ));
    let bad_flag = tuple(1).to_line().replacen(" 0 ", " 2 ", 1);
    assert!(read_dataset(bad_flag.as_bytes()).is_err());
}

#[test]
fn empty_buffer_cannot_sample() {
    let b = ReplayBuffer::new(4);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(
        b.sample_indices(1, &mut rng),
        Err(LearnError::BufferTooSmall { needed: 1, available: 0 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fifo_eviction_keeps_the_newest(capacity in 1usize..40, n in 0u64..120) {
        let mut b = ReplayBuffer::new(capacity);
        for i in 0..n {
            b.insert(tuple(i));
        }
        prop_assert_eq!(b.len(), (n as usize).min(capacity));
        prop_assert_eq!(b.inserted(), n);
        let first = n.saturating_sub(capacity as u64);
        for (k, t) in b.iter().enumerate() {
            prop_assert_eq!(t, &tuple(first + k as u64));
        }
    }

    #[test]
    fn batches_are_distinct_and_reproducible(len in 1usize..200, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let b = ReplayBuffer::from_tuples(500, (0..len as u64).map(tuple));
        let batch = ((len as f64 * frac) as usize).max(1);
        let draw = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..3).map(|_| b.sample_indices(batch, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        let a = draw(seed);
        prop_assert_eq!(&a, &draw(seed));
        for idx in &a {
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), batch);
            prop_assert!(idx.iter().all(|i| *i < len));
        }
        prop_assert!(b.sample_indices(len + 1, &mut ChaCha8Rng::seed_from_u64(seed)).is_err());
    }
}

#[test]
fn sampling_is_roughly_uniform() {
    let b = ReplayBuffer::from_tuples(100, (0..10).map(tuple));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut counts = [0usize; 10];
    let draws = 20_000;
    for _ in 0..draws {
        for i in b.sample_indices(3, &mut rng).unwrap() {
            counts[i] += 1;
        }
    }
    let expect = draws as f64 * 3.0 / 10.0;
    let sd = (draws as f64 * 0.3 * 0.7).sqrt();
    for c in counts {
        assert!((c as f64 - expect).abs() < 5.0 * sd, "{counts:?}");
    }
}
