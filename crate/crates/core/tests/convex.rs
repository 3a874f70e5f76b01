use pfsc::convex::{beta, beta_inverse, ConvexContext};
use proptest::prelude::*;

fn ctx(theta_c: f64) -> ConvexContext {
    ConvexContext::new(theta_c).unwrap()
}

proptest! {
    #[test]
    fn fenchel_young_gap_is_nonnegative(tc in 0.1f64..5.0, r in -10.0f64..10.0, w in -1.0f64..=1.0) {
        let g = ctx(tc).fenchel_gap(r, w).unwrap();
        prop_assert!(g >= 0.0);
    }

    #[test]
    fn gap_vanishes_on_the_heaviside_graph(tc in 0.1f64..5.0, r in -10.0f64..10.0, w in -1.0f64..=1.0) {
        let c = ctx(tc);
        let h = c.heaviside(r);
        let w = if h.lo == h.hi { h.lo } else { w };
        prop_assert!(c.fenchel_gap(r, w).unwrap().abs() <= 1e-12 * r.abs().max(1.0));
        prop_assert_eq!(c.fenchel_gap(tc, w).unwrap(), 0.0);
    }

    #[test]
    fn envelope_sandwich_and_monotone_in_sigma(tc in 0.1f64..5.0, r in -10.0f64..10.0, s1 in 1e-4f64..2.0, f in 1.0f64..10.0) {
        let c = ctx(tc);
        let a = c.moreau_j(r, s1).unwrap();
        let b = c.moreau_j(r, s1 * f).unwrap();
        prop_assert!(a >= 0.0 && a <= c.j(r));
        prop_assert!(b <= a);
    }

    #[test]
    fn resolvent_identity(tc in 0.1f64..5.0, r in -10.0f64..10.0, s in 1e-4f64..2.0) {
        let c = ctx(tc);
        let x = c.resolvent(r, s).unwrap();
        let rhs = (r - x).powi(2) / (2.0 * s) + c.j(x);
        prop_assert!((c.moreau_j(r, s).unwrap() - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn envelope_derivative_from_resolvent(tc in 0.1f64..5.0, r in -10.0f64..10.0, s in 1e-4f64..2.0) {
        let c = ctx(tc);
        let d = c.moreau_jprime(r, s).unwrap();
        prop_assert!(d.abs() <= 1.0);
        prop_assert!((d - (r - c.resolvent(r, s).unwrap()) / s).abs() <= 1e-12);
    }

    #[test]
    fn beta_is_increasing_and_inverted(a in 1e-3f64..50.0, b in 1e-3f64..50.0) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(beta(lo).unwrap() < beta(hi).unwrap());
        prop_assert!((beta_inverse(beta(a).unwrap()) - a).abs() <= 1e-12 * a.max(1.0));
    }
}

#[test]
fn envelope_tends_to_j_within_half_sigma() {
    let c = ctx(1.0);
    for r in [-3.0, 0.2, 0.99, 1.0, 1.004, 1.7, 9.0] {
        let mut prev = -1.0;
        for k in 0..=10 {
            let s = 0.5f64.powi(k);
            let v = c.moreau_j(r, s).unwrap();
            assert!(v >= prev);
            assert!(c.j(r) - v <= s / 2.0 + 1e-15);
            prev = v;
        }
    }
}
