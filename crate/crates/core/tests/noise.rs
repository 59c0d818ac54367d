use rds_sync::noise::{mix_word, parse_seed, Scenario};
use rds_sync::stats::chi_square_test;
use serde::Deserialize;

#[derive(Deserialize)]
struct Vector {
    seed: String,
    time: i64,
    slot: u64,
    word: String,
}

fn golden() -> Vec<Vector> {
    let text = include_str!("golden/noise_vectors.json");
    serde_json::from_str(text).unwrap()
}

#[test]
fn golden_vectors_are_stable() {
    let vectors = golden();
    assert_eq!(vectors.len(), 10);
    for v in vectors {
        let seed = parse_seed(&v.seed).unwrap();
        let expected = u64::from_str_radix(&v.word, 16).unwrap();
        assert_eq!(mix_word(seed, v.time, v.slot), expected, "{} {} {}", v.seed, v.time, v.slot);
    }
}

// Written out longhand from the published SplitMix64 finalizer constants.
fn reference_word(seed: u128, time: i64, slot: u64) -> u64 {
    fn fin(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
    let g: u64 = 0x9e3779b97f4a7c15;
    let mut h = fin(seed as u64 ^ g);
    h = fin(h ^ ((seed >> 64) as u64).wrapping_add(g.wrapping_mul(2)));
    h = fin(h ^ (time as u64).wrapping_mul(g).wrapping_add(g.wrapping_mul(3)));
    fin(h ^ fin(slot.wrapping_add(g.wrapping_mul(5))))
}

#[test]
fn matches_longhand_mixer() {
    for v in golden() {
        let seed = parse_seed(&v.seed).unwrap();
        assert_eq!(mix_word(seed, v.time, v.slot), reference_word(seed, v.time, v.slot));
    }
}

#[test]
fn uniform_draws_pass_chi_square() {
    let s = Scenario::new(0xfeed_f00d);
    let bins = 64;
    let mut counts = vec![0u64; bins];
    let mut sum = 0.0;
    let total = 1u64 << 16;
    for t in 0..total {
        let u = s.uniform(t as i64, 0);
        assert!((0.0..1.0).contains(&u));
        sum += u;
        counts[(u * bins as f64) as usize] += 1;
    }
    let probs = vec![1.0 / bins as f64; bins];
    let test = chi_square_test(&counts, &probs);
    assert!(test.p_value > 1e-6, "{test:?}");
    let mean = sum / total as f64;
    assert!((0.49..=0.51).contains(&mean), "mean {mean}");
}

#[test]
fn slots_look_independent() {
    let s = Scenario::new(99);
    let mut joint = vec![0u64; 16];
    for t in 0..(1i64 << 14) {
        let a = (s.uniform(t, 0) * 4.0) as usize;
        let b = (s.uniform(t, 1) * 4.0) as usize;
        joint[a * 4 + b] += 1;
    }
    let test = chi_square_test(&joint, &[1.0 / 16.0; 16]);
    assert!(test.p_value > 1e-6, "{test:?}");
}
