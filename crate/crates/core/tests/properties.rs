use std::f64::consts::PI;
use std::path::Path;

use lattice_heat::bessel::ScaledBesselRow;
use lattice_heat::io::{sequence_from_csv, sequence_to_csv};
use lattice_heat::kernel::{heat_kernel, lp_norm, LpExponent};
use lattice_heat::sequence::LatticeSequence;
use lattice_heat::solver::evolve;
use lattice_heat::DEFAULT_EPS;
use proptest::prelude::*;

fn sequence() -> impl Strategy<Value = LatticeSequence> {
    (-20i64..20, prop::collection::vec(-10.0f64..10.0, 1..12))
        .prop_map(|(offset, values)| LatticeSequence::new(offset, values))
}

fn nonnegative() -> impl Strategy<Value = LatticeSequence> {
    (-20i64..20, prop::collection::vec(0.0f64..10.0, 1..12))
        .prop_map(|(offset, values)| LatticeSequence::new(offset, values))
}

const PS: [LpExponent; 3] = [LpExponent::ONE, LpExponent::TWO, LpExponent::Infinity];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_contractive(f in sequence(), t in 0.01f64..50.0) {
        let u = evolve(&f, t, DEFAULT_EPS).unwrap().u;
        for p in PS {
            prop_assert!(lp_norm(&u, p) <= lp_norm(&f, p) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn evolution_preserves_positivity(f in nonnegative(), t in 0.01f64..50.0) {
        let u = evolve(&f, t, DEFAULT_EPS).unwrap().u;
        prop_assert!(u.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn semigroup_composition(f in sequence(), s in 0.01f64..20.0, t in 0.01f64..20.0) {
        let direct = evolve(&f, s + t, DEFAULT_EPS).unwrap().u;
        let half = evolve(&f, s, DEFAULT_EPS).unwrap().u;
        let composed = evolve(&half, t, DEFAULT_EPS).unwrap().u;
        let gap = lp_norm(&direct.sub(&composed), LpExponent::Infinity);
        prop_assert!(gap <= 1e-10 * lp_norm(&f, LpExponent::ONE).max(1e-300));
    }

    #[test]
    fn evolution_is_linear(
        f in sequence(),
        g in sequence(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        t in 0.01f64..20.0,
    ) {
        let lhs = evolve(&f.combine(a, &g, b), t, DEFAULT_EPS).unwrap().u;
        let uf = evolve(&f, t, DEFAULT_EPS).unwrap().u;
        let ug = evolve(&g, t, DEFAULT_EPS).unwrap().u;
        let rhs = uf.combine(a, &ug, b);
        let scale = a.abs() * lp_norm(&f, LpExponent::ONE) + b.abs() * lp_norm(&g, LpExponent::ONE);
        prop_assert!(lp_norm(&lhs.sub(&rhs), LpExponent::Infinity) <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn mass_is_conserved(f in sequence(), t in 0.01f64..100.0) {
        let snap = evolve(&f, t, DEFAULT_EPS).unwrap();
        let scale = lp_norm(&f, LpExponent::ONE);
        prop_assert!((snap.u.sum() - f.sum()).abs() <= 1e-11 * scale.max(1.0));
    }

    #[test]
    fn bessel_row_invariants(tau in 1e-3f64..500.0) {
        let row = ScaledBesselRow::new(tau, DEFAULT_EPS).unwrap();
        prop_assert!((row.mass() - 1.0).abs() <= 1e-12);
        let w = row.half_width() as i64;
        for n in 0..w {
            prop_assert_eq!(row.get(n), row.get(-n));
            prop_assert!(row.get(n + 1) <= row.get(n));
        }
        // b_{n-1} - b_{n+1} = (2n/τ) b_n away from the truncation edge.
        for n in 1..w.min(40) {
            let lhs = row.get(n - 1) - row.get(n + 1);
            let rhs = 2.0 * n as f64 / tau * row.get(n);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * row.get(n - 1).max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn fourier_symbol_at_random_frequency(t in 0.05f64..50.0, theta in -PI..PI) {
        let k = heat_kernel(t, DEFAULT_EPS).unwrap();
        let mut acc = k.get(0);
        for n in 1..=k.window() as i64 {
            acc += 2.0 * k.get(n) * (n as f64 * theta).cos();
        }
        let exact = (-4.0 * t * (0.5 * theta).sin().powi(2)).exp();
        prop_assert!((acc - exact).abs() <= 1e-11);
    }

    #[test]
    fn kernel_norms_are_ordered(t in 0.01f64..1000.0) {
        let g = heat_kernel(t, DEFAULT_EPS).unwrap().to_sequence();
        let sup = lp_norm(&g, LpExponent::Infinity);
        let two = lp_norm(&g, LpExponent::TWO);
        let one = lp_norm(&g, LpExponent::ONE);
        prop_assert!(sup <= two * (1.0 + 1e-14) && two <= one * (1.0 + 1e-14));
    }

    #[test]
    fn csv_round_trip_is_exact(f in sequence()) {
        let back = sequence_from_csv(&sequence_to_csv(&f), Path::new("mem")).unwrap();
        prop_assert_eq!(back.offset(), f.offset());
        prop_assert_eq!(back.values(), f.values());
    }
}
