mod common;

use efc_core::equilibrium::{projection, stationary_distribution, Distribution};
use efc_core::partition::{enumerate_partitions, Permutation, Partition};
use efc_core::{build_generator, Characteristics, Execution};
use proptest::prelude::*;

fn rho(c: &Characteristics, n: usize) -> Distribution {
    let g = build_generator(c, n, Execution::Sequential).unwrap();
    stationary_distribution(&g).unwrap().distribution
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn equilibrium_is_exchangeable(c in common::nondegenerate()) {
        for n in 1..=5 {
            let r = rho(&c, n);
            for p in enumerate_partitions(n).unwrap() {
                for sigma in Permutation::all(n) {
                    let moved = r.weight_of(&p.permute(&sigma).unwrap());
                    prop_assert!((moved - r.weight_of(&p)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn equilibria_project_consistently(c in common::nondegenerate()) {
        let levels: Vec<Distribution> = (1..=6).map(|n| rho(&c, n)).collect();
        for n in 1..6 {
            let p = projection(&levels[n], n).unwrap();
            for (a, b) in p.weights().iter().zip(levels[n - 1].weights()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn two_point_equilibrium_is_not_a_dirac(c in common::nondegenerate()) {
        let r = rho(&c, 2);
        prop_assert!(r.weight_of(&Partition::one_block(2)) > 0.0);
        prop_assert!(r.weight_of(&Partition::singletons(2)) > 0.0);
    }
}

#[test]
fn fast_erosion_thins_block_counts_with_n() {
    let c = Characteristics { c_e: 4.0, c_k: 1.0, ..Default::default() };
    let a: Vec<Vec<f64>> = (1..=8).map(|n| rho(&c, n).block_count_marginal()).collect();
    for k in 1..=4 {
        for n in k..8 {
            assert!(a[n][k - 1] <= a[n - 1][k - 1] * (1.0 + 1e-12), "K = {k}, n = {n}");
        }
    }
}

#[test]
fn isolated_one_shrinks_with_n_under_kingman() {
    let c = Characteristics { c_e: 1.0, c_k: 1.0, ..Default::default() };
    let mut prev = 1.0;
    for n in 1..=7 {
        let w = rho(&c, n).mass_where(|p| p.blocks()[0].len() == 1);
        assert!(w <= prev * (1.0 + 1e-12));
        prev = w;
    }
}
