use proptest::prelude::*;

use noma_mop::model::{
    ee_noma, ee_oma, se_noma_strong, se_noma_weak, se_oma, weighted_objective, ClusterSpec, MaScheme, PowerAllocation,
    Role, SubproblemKind, SystemParams,
};
use noma_mop::numeric::{maximize_concave_1d, SolverConfig};

fn gain() -> impl Strategy<Value = f64> {
    0.01f64..1000.0
}

fn power() -> impl Strategy<Value = f64> {
    0.0f64..20.0
}

fn kind() -> impl Strategy<Value = SubproblemKind> {
    prop::sample::select(SubproblemKind::ALL.to_vec())
}

proptest! {
    #[test]
    fn noma_ee_never_beats_oma_ee_at_equal_power(g1 in gain(), g2 in gain(), p1 in power(), p2 in power()) {
        let params = SystemParams::default();
        let (g1, g2) = (g1.min(g2), g1.max(g2));
        let weak = ee_noma(Role::Weak, g1, p1, g2, p2, &params).unwrap();
        let strong = ee_noma(Role::Strong, g1, p1, g2, p2, &params).unwrap();
        let oma1 = ee_oma(g1, p1, &params).unwrap();
        let oma2 = ee_oma(g2, p2, &params).unwrap();
        prop_assert!((weak - oma1).abs() <= 1e-12 * oma1.max(1.0));
        prop_assert!(strong <= oma2 + 1e-12 * oma2.max(1.0));
    }

    #[test]
    fn strong_rate_monotone(g1 in gain(), g2 in gain(), a in power(), b in power(), p in power()) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(se_noma_strong(g1, hi, g2, p).unwrap() <= se_noma_strong(g1, lo, g2, p).unwrap());
        prop_assert!(se_noma_strong(g1, p, g2, lo).unwrap() <= se_noma_strong(g1, p, g2, hi).unwrap());
    }

    #[test]
    fn metrics_vanish_at_zero_power(g1 in gain(), g2 in gain(), p in power()) {
        let params = SystemParams::default();
        prop_assert_eq!(se_oma(g1, 0.0).unwrap(), 0.0);
        prop_assert_eq!(se_noma_weak(g1, 0.0).unwrap(), 0.0);
        prop_assert_eq!(se_noma_strong(g1, p, g2, 0.0).unwrap(), 0.0);
        prop_assert_eq!(ee_oma(g1, 0.0, &params).unwrap(), 0.0);
        prop_assert_eq!(ee_noma(Role::Weak, g1, 0.0, g2, p, &params).unwrap(), 0.0);
        prop_assert_eq!(ee_noma(Role::Strong, g1, p, g2, 0.0, &params).unwrap(), 0.0);
        for v in [se_oma(g1, p), se_noma_weak(g1, p), se_noma_strong(g1, p, g2, p), ee_oma(g2, p, &params)] {
            prop_assert!(v.unwrap().is_finite());
        }
    }

    #[test]
    fn objective_affine_in_weight(k in kind(), g1 in gain(), g2 in gain(), p1 in 0.0f64..10.0, p2 in 0.0f64..10.0, w in 0.0f64..=1.0) {
        let params = SystemParams::default();
        let (g1, g2) = (g1.min(g2), g1.max(g2));
        let spec = ClusterSpec::of_kind(k, g1, g2, w, 10.0).unwrap();
        for scheme in [MaScheme::Noma, MaScheme::Oma] {
            let alloc = PowerAllocation::new(p1, p2, scheme);
            let at = |w1: f64| weighted_objective(&spec.with_w1(w1), &alloc, &params).unwrap();
            let blended = w * at(1.0) + (1.0 - w) * at(0.0);
            prop_assert!((at(w) - blended).abs() <= 1e-12 * blended.abs().max(1.0));
        }
    }

    #[test]
    fn golden_section_beats_grid(c in 0.1f64..50.0, s in 0.01f64..5.0, hi in 0.5f64..30.0) {
        // log2(1 + c x) - s x is concave on [0, hi]
        let f = |x: f64| (c * x).ln_1p() / std::f64::consts::LN_2 - s * x;
        let cfg = SolverConfig::default();
        let (x, fx) = maximize_concave_1d(f, 0.0, hi, &cfg).unwrap();
        prop_assert!((0.0..=hi).contains(&x));
        let grid_max = (0..10_000).map(|i| f(hi * i as f64 / 9_999.0)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(fx >= grid_max - cfg.tol_objective);
    }
}
