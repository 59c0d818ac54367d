use rds_sync::noise::Scenario;

/// Asymptotic Kolmogorov distribution tail P(K > x).
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_uniform_p(mut sample: Vec<f64>) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let d = sample
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / n).max((i + 1) as f64 / n - u))
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

#[test]
fn kolmogorov_tail_reference_points() {
    // Tabulated critical values of the Kolmogorov distribution.
    assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 1e-3);
    assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-3);
}

#[test]
fn shift_preserves_the_uniform_law() {
    for k in [0i64, 1, 17, -5, 1 << 40] {
        let sample: Vec<f64> = (0..10_000)
            .map(|i| Scenario::derive(0xabc, i).shift(k).uniform(0, 0))
            .collect();
        let p = ks_uniform_p(sample);
        assert!(p > 1e-4, "shift {k}: p = {p}");
    }
}

#[test]
fn shift_reindexes_time() {
    let s = Scenario::new(12345);
    for k in [-3i64, 0, 8] {
        for t in -10..10 {
            assert_eq!(s.shift(k).draw(t, 2), s.draw(t + k, 2));
        }
    }
}
