//! Monodromy, Dirichlet data and Bloch solutions.

mod common;

use cmvflows::conserved::discriminant;
use cmvflows::curve::{
    bloch_basis, bloch_solution_two_periods, dirichlet_data, h_branches, monodromy, wronskian, LaurentScalar,
};
use common::{annulus_point, generic_verblunsky, verblunsky};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monodromy_is_unimodular_with_trace_delta(v in verblunsky(), z in annulus_point(0.3, 3.0)) {
        let m = monodromy(&v, z).unwrap();
        prop_assert!((m.determinant() - 1.0).norm() < 1e-10);
        prop_assert!((m.trace() - discriminant(&v, z).unwrap()).norm() < 1e-10 * (1.0 + m.trace().norm()));
    }

    #[test]
    fn weighted_odd_wronskians_are_constant(v in verblunsky(), z in annulus_point(0.3, 3.0)) {
        let p = v.p() as i64;
        let (phi, psi) = bloch_basis(&v, p).unwrap();
        for j in 0..=p / 2 {
            let n = 2 * j - 1;
            let w = wronskian(&phi, &psi, n).eval(z) * v.rho(n);
            prop_assert!((w - v.rho(p - 1)).norm() < 1e-10);
        }
        prop_assert!((wronskian(&phi, &psi, p - 1).eval(z) - 1.0).norm() < 1e-10);
    }

    #[test]
    fn periodicity_transport(v in verblunsky(), z in annulus_point(0.3, 3.0)) {
        let p = v.p() as i64;
        let (phi, psi) = bloch_basis(&v, p + 1).unwrap();
        let m = monodromy(&v, z).unwrap();
        for j in -1..=1i64 {
            let row = nalgebra::RowVector2::new(phi.at(j).eval(z), psi.at(j).eval(z)) * m;
            let scale = 1.0 + row.norm();
            prop_assert!((row[0] - phi.at(j + p).eval(z)).norm() < 1e-10 * scale);
            prop_assert!((row[1] - psi.at(j + p).eval(z)).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn dirichlet_routes_agree(v in prop::sample::select(vec![2usize, 4, 6, 8]).prop_flat_map(generic_verblunsky)) {
        let dd = dirichlet_data(&v).unwrap();
        prop_assert_eq!(dd.z.len(), v.p() - 1);
        prop_assert!(dd.route_gap < 1e-7);
    }

    #[test]
    fn bloch_solution_is_quasi_periodic(v in prop::sample::select(vec![2usize, 4, 6]).prop_flat_map(generic_verblunsky), z in annulus_point(0.3, 3.0)) {
        let p = v.p();
        let Ok((h, _)) = h_branches(&v, z) else { return Ok(()) };
        let Ok(f) = bloch_solution_two_periods(&v, h, z) else { return Ok(()) };
        for j in 0..p {
            let want = f[j + 1] / h;
            prop_assert!((f[j + 1 + p] - want).norm() < 1e-8 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn laurent_scalar_products_evaluate(a in prop::collection::vec((-3i32..3, -1.0..1.0f64), 1..5), b in prop::collection::vec((-3i32..3, -1.0..1.0f64), 1..5), z in annulus_point(0.5, 2.0)) {
        let mk = |t: &[(i32, f64)]| LaurentScalar::from_terms(t.iter().map(|&(k, c)| (k, Complex64::new(c, 0.5 * c))));
        let (x, y) = (mk(&a), mk(&b));
        let lhs = (&x * &y).eval(z);
        prop_assert!((lhs - x.eval(z) * y.eval(z)).norm() < 1e-12 * (1.0 + lhs.norm()));
    }
}
