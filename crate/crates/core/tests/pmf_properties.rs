use proptest::prelude::*;

use srwlab_core::distributions::{
    ball_occupation_pmf, geometric_site_pmf, joint_point_ball_pmf, joint_two_point_pmf,
    point_ball_upper_bound, two_point_upper_bound,
};
use srwlab_core::DimensionConstants;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn joint_two_point_is_symmetric(k in 0u64..200, l in 0u64..200) {
        let c = DimensionConstants::compute(3).unwrap();
        prop_assert_eq!(joint_two_point_pmf(&c, k, l), joint_two_point_pmf(&c, l, k));
    }

    #[test]
    fn probabilities_are_in_unit_interval(k in 0u64..300, l in 0u64..300) {
        let c = DimensionConstants::compute(3).unwrap();
        for p in [
            geometric_site_pmf(&c, k),
            joint_two_point_pmf(&c, k, l),
            ball_occupation_pmf(&c, k + 1).unwrap(),
            joint_point_ball_pmf(&c, k.min(l), l).unwrap(),
        ] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn upper_bounds_dominate_the_laws(k in 0u64..60, l in 0u64..60) {
        let c = DimensionConstants::compute(3).unwrap();
        prop_assert!(joint_two_point_pmf(&c, k, l) <= two_point_upper_bound(&c, k, l) * (1.0 + 1e-12));
        if k <= l {
            prop_assert!(joint_point_ball_pmf(&c, k, l).unwrap() <= point_ball_upper_bound(&c, k, l).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn geometric_tail_ratio(k in 0u64..500) {
        let c = DimensionConstants::compute(3).unwrap();
        let (a, b) = (geometric_site_pmf(&c, k), geometric_site_pmf(&c, k + 1));
        prop_assume!(a > 1e-300);
        prop_assert!((b / a - (1.0 - c.gamma)).abs() < 1e-10);
    }
}

#[test]
fn point_ball_rejects_k_above_l() {
    let c = DimensionConstants::compute(3).unwrap();
    assert!(joint_point_ball_pmf(&c, 3, 2).is_err());
    assert!(ball_occupation_pmf(&c, 0).is_err());
}
