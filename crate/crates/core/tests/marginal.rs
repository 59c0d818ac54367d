use rds_sync::catalog;
use rds_sync::noise::Scenario;
use rds_sync::rds::{independent_rds, RdsRepresentation};
use rds_sync::stats::chi_square_test;

fn check_marginals(rds: &RdsRepresentation, draws: u64) {
    let kernel = rds.kernel();
    for x in 0..rds.len() {
        let mut counts = vec![0u64; rds.len()];
        for i in 0..draws {
            counts[rds.image(&Scenario::derive(0x77, i), 0, x)] += 1;
        }
        let probs: Vec<f64> = (0..rds.len()).map(|y| kernel.prob(x, y)).collect();
        let support: Vec<usize> = (0..rds.len()).filter(|&y| probs[y] > 0.0).collect();
        for y in 0..rds.len() {
            if probs[y] == 0.0 {
                assert_eq!(counts[y], 0, "impossible move {x}->{y}");
            }
        }
        if support.len() > 1 {
            let c: Vec<u64> = support.iter().map(|&y| counts[y]).collect();
            let p: Vec<f64> = support.iter().map(|&y| probs[y]).collect();
            let test = chi_square_test(&c, &p);
            assert!(test.p_value > 1e-6, "state {x}: {test:?}");
        }
    }
}

#[test]
fn explicit_families_reproduce_the_kernel() {
    check_marginals(&catalog::four_state_diagonal_rds(), 50_000);
    check_marginals(&catalog::epsilon_rds(0.1), 50_000);
    check_marginals(&catalog::truncated_walk_shift_rds(8), 20_000);
}

#[test]
fn independent_families_reproduce_the_kernel() {
    check_marginals(&catalog::four_state_independent_rds(), 50_000);
    check_marginals(&independent_rds(catalog::heavy_tail_kernel(10)), 50_000);
}
