use num_complex::Complex64 as C64;
use proptest::prelude::*;
use string_spectra::discretization::{kernel_dimensions, BoundaryCondition, DiscreteOperatorSet};
use string_spectra::linalg::{self, c};
use string_spectra::random::{draw_coefficients, DrawConfig};
use string_spectra::report::num;
use string_spectra::{spectral, susy, trace};

fn family() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![
        Just(BoundaryCondition::Max),
        Just(BoundaryCondition::Min),
        Just(BoundaryCondition::Zero0),
        Just(BoundaryCondition::Zero1),
        (-2.0f64..2.0, -2.0f64..2.0)
            .prop_filter("omega nonzero", |(a, b)| a.hypot(*b) > 0.1)
            .prop_map(|(a, b)| BoundaryCondition::Quasi(c(a, b))),
    ]
}

/// Families with invertible `T*T`.
fn invertible_family() -> impl Strategy<Value = BoundaryCondition> {
    family().prop_filter("T*T invertible", |b| match b {
        BoundaryCondition::Quasi(w) => (w - c(1.0, 0.0)).norm() > 0.1,
        b => b.has_invertible_laplacian(),
    })
}

fn ops(seed: u64, n: usize, bc: BoundaryCondition) -> DiscreteOperatorSet {
    let (rho, alpha) = draw_coefficients(seed, &DrawConfig::default()).unwrap();
    DiscreteOperatorSet::build(n, &rho, &alpha, bc).unwrap()
}

fn vector(len: usize, seed: u64) -> Vec<C64> {
    (0..len).map(|k| c(((k as u64 * 7 + seed) % 13) as f64 - 6.0, ((k as u64 * 5 + seed) % 11) as f64 - 5.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn discrete_adjoint_is_exact(seed in 0u64..1000, n in 8usize..40, bc in family()) {
        let o = ops(seed, n, bc);
        let f = vector(o.nodes(), seed);
        let g = vector(o.cells(), seed + 1);
        let scale = linalg::vnorm(&f) * linalg::vnorm(&g) * linalg::norm2(&o.t).unwrap();
        prop_assert!(o.adjoint_defect(&f, &g) <= 1e-12 * scale);
    }

    #[test]
    fn kernel_census_matches_family(seed in 0u64..1000, n in 8usize..48, bc in family()) {
        let k = kernel_dimensions(&ops(seed, n, bc)).unwrap();
        let expected = match bc {
            BoundaryCondition::Quasi(w) if w == c(1.0, 0.0) => (1, 1, 2),
            b => b.expected_kernels(),
        };
        prop_assert_eq!((k.ker_t, k.ker_tstar, k.ker_d), expected);
    }

    #[test]
    fn spectrum_lies_in_strip(seed in 0u64..1000, n in 8usize..40, bc in family()) {
        let o = ops(seed, n, bc);
        let s = spectral::eigen_dirac_with(&o, false).unwrap();
        let max_im = s.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.im.abs()));
        prop_assert!(max_im <= o.b_norm() + 1e-10);
    }

    #[test]
    fn real_families_are_reflection_symmetric(seed in 0u64..1000, n in 8usize..40, k in 0usize..4) {
        let bc = [BoundaryCondition::Max, BoundaryCondition::Min, BoundaryCondition::Zero0, BoundaryCondition::Zero1][k];
        let s = spectral::eigen_dirac_with(&ops(seed, n, bc), false).unwrap();
        let r = spectral::check_symmetry(&s, bc, None).unwrap();
        prop_assert!(r.distance <= 1e-8 * s.op_norm.max(1.0));
    }

    #[test]
    fn trace_identities_hold(seed in 0u64..1000, n in 8usize..40, bc in invertible_family()) {
        let o = ops(seed, n, bc);
        let s = spectral::eigen_dirac_with(&o, false).unwrap();
        let d = trace::verify_trace_identity(0, &o, &s).unwrap();
        prop_assert!(d.even <= 1e-8 * d.scale_even, "even {} scale {}", d.even, d.scale_even);
        prop_assert!(d.odd <= 1e-8 * d.scale_odd, "odd {} scale {}", d.odd, d.scale_odd);
    }

    #[test]
    fn partners_are_isospectral(seed in 0u64..1000, n in 8usize..32, bc in family()) {
        let o = ops(seed, n, bc);
        let r = susy::check_isospectral(&o).unwrap();
        prop_assert!(r.distance <= 1e-10 * r.scale);
    }

    #[test]
    fn resolvent_trace_is_even_for_real_families(seed in 0u64..1000, n in 8usize..32, k in 0usize..3, z in 0.01f64..0.5) {
        let bc = [BoundaryCondition::Min, BoundaryCondition::Zero0, BoundaryCondition::Zero1][k];
        let o = ops(seed, n, bc);
        let r = trace::resolvent_trace_expansion(z, &o).unwrap();
        prop_assert!(r.parity_defect <= 1e-10 * r.lhs.abs().max(1.0));
        prop_assert!((r.lhs - r.rhs).abs() <= 1e-10 * r.lhs.abs().max(1.0));
    }

    #[test]
    fn csv_numbers_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }
}
