use invctl_core::dp::TabularPolicy;
use invctl_core::instances;
use invctl_core::policies::Policy;
use invctl_core::sim::{self, InitialStates, SimConfig};
use invctl_core::stationary;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn joint_and_individual_stationary_agree(seed in 0u64..10_000) {
        let p = instances::random_small(seed);
        let joint = stationary::optimize_joint(&p).unwrap();
        let indiv = stationary::optimize_individual(&p).unwrap();
        let cj = stationary::stationary_cost(&joint, &p).unwrap();
        let ci = stationary::stationary_cost(&indiv, &p).unwrap();
        prop_assert!((cj - ci).abs() <= 1e-12, "{cj} vs {ci}");
        prop_assert_eq!(joint, indiv);
    }

    #[test]
    fn transformation_with_boundary_term_is_exact(seed in 0u64..10_000, frac in 0.0f64..=1.0) {
        let p = instances::random_small(seed);
        let slope = frac * p.ordering.pieces.iter().map(|q| q.slope).fold(f64::INFINITY, f64::min);
        let table = Policy::Tabular(TabularPolicy::random(&p, seed).unwrap());
        let cfg = SimConfig { runs: 1, initial: InitialStates::Grid, crn: true, ..SimConfig::default() };
        let r = sim::verify_cost_transformation(&p, &table, slope, &cfg).unwrap();
        prop_assert!(r.exact);
        prop_assert!(r.corrected_holds(1e-9), "max corrected residual {}", r.max_corrected_residual);
        for row in &r.rows {
            // The two forms differ exactly by the boundary term.
            prop_assert!((row.literal_residual - row.corrected_residual - row.boundary_term).abs() <= 1e-9);
        }
    }
}

#[test]
fn stationary_levels_minimize_over_the_grid() {
    for seed in 0..5 {
        let p = instances::random_small(seed);
        let best = stationary::optimize_individual(&p).unwrap();
        let c = stationary::stationary_cost(&best, &p).unwrap();
        for x in p.grid.points() {
            let other = vec![x; p.locations];
            assert!(stationary::stationary_cost(&other, &p).unwrap() >= c - 1e-12);
        }
    }
}
