mod common;

use common::*;
use proptest::prelude::*;

const NET_TOL: f64 = 1e-4;
const GD_TOL: f64 = 1e-6;
const END_TO_END_TOL: f64 = 1e-3;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn squared_error_backprop_matches_differences(seed in any::<u64>()) {
        let err = net_gradient_error(seed, SmoothLoss::SquaredError);
        prop_assert!(err <= NET_TOL, "rel err {err}");
    }

    #[test]
    fn cross_entropy_backprop_matches_differences(seed in any::<u64>()) {
        let err = net_gradient_error(seed, SmoothLoss::CrossEntropy);
        prop_assert!(err <= NET_TOL, "rel err {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gd_gradient_matches_differences(seed in any::<u64>()) {
        let err = gd_gradient_error(seed);
        prop_assert!(err <= GD_TOL, "rel err {err}");
    }

    #[test]
    fn regularizer_gradient_matches_differences(seed in any::<u64>()) {
        let err = prior_gradient_error(seed);
        prop_assert!(err <= GD_TOL, "rel err {err}");
    }
}

#[test]
fn generator_objective_matches_differences() {
    for seed in 0..8 {
        for hint_missing in [true, false] {
            let err = generator_objective_error(seed, hint_missing);
            assert!(
                err <= END_TO_END_TOL,
                "seed {seed}, hint_missing {hint_missing}: {err}"
            );
        }
    }
}

#[test]
fn discriminator_objective_matches_differences() {
    for seed in 0..8 {
        for hint_missing in [true, false] {
            let err = discriminator_objective_error(seed, hint_missing);
            assert!(
                err <= NET_TOL,
                "seed {seed}, hint_missing {hint_missing}: {err}"
            );
        }
    }
}
