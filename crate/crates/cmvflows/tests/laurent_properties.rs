//! Algebraic identities of Laurent-matrix loops.

mod common;

use cmvflows::laurent::LaurentMatrix;
use common::{circle, laurent};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projections_split_every_loop(l in laurent(4)) {
        let sum = &l.project_k() + &l.project_b();
        prop_assert!(sum.distance(&l) < 1e-14);
    }

    #[test]
    fn star_reverses_products(a in laurent(2), b in laurent(2)) {
        let lhs = (&a * &b).star();
        let rhs = &b.star() * &a.star();
        prop_assert!(lhs.distance(&rhs) < 1e-13);
    }

    #[test]
    fn j_sharp_is_skew(x in laurent(4), y in laurent(4)) {
        let s = LaurentMatrix::pairing(&x.j_sharp(), &y).unwrap()
            + LaurentMatrix::pairing(&x, &y.j_sharp()).unwrap();
        prop_assert!(s.abs() < 1e-12);
    }

    #[test]
    fn evaluation_is_multiplicative(a in laurent(4), b in laurent(4)) {
        let ab = &a * &b;
        for h in circle(8) {
            let gap = (ab.eval(h).unwrap() - a.eval(h).unwrap() * b.eval(h).unwrap()).norm();
            prop_assert!(gap < 1e-12);
        }
    }

    #[test]
    fn sampling_round_trips(l in laurent(2)) {
        let back = LaurentMatrix::from_samples(2, &l.samples(16)).unwrap();
        prop_assert!(back.distance(&l) < 1e-13);
    }
}
