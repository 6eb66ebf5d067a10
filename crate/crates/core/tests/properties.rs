use oseen_core::comparable::{split_by_height, stream_matrix, truncate_field};
use oseen_core::corpus::random_solenoidal;
use oseen_core::cutoff::CutoffProfile;
use oseen_core::exact::theta_at;
use oseen_core::lorentz::{distribution_function, lp_norm, weak_lp_quasinorm, DecaySeries};
use oseen_core::snapshot::Snapshot;
use oseen_core::{Grid, ScalarField, Spectral};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

fn small_grid() -> Grid {
    Grid::new(32, 4.0, 1.0).unwrap()
}

fn field_from(values: &[f64]) -> ScalarField {
    ScalarField::from_values(small_grid(), values.to_vec()).unwrap()
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 32 * 32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distribution_is_nonincreasing(v in samples(), a in 0.01..5.0f64, b in 0.01..5.0f64) {
        let f = field_from(&v);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(distribution_function(&f, hi).unwrap() <= distribution_function(&f, lo).unwrap());
    }

    #[test]
    fn chebyshev_weak_below_strong(v in samples(), p in 1.01..12.0f64) {
        let f = field_from(&v);
        let w = weak_lp_quasinorm(&f, p).unwrap();
        let s = lp_norm(&f, p).unwrap();
        prop_assert!(w <= s * (1.0 + 1e-12), "{} > {}", w, s);
    }

    #[test]
    fn weak_quasinorm_is_homogeneous(v in samples(), c in 0.01..100.0f64, p in 1.5..8.0f64) {
        let f = field_from(&v);
        let a = weak_lp_quasinorm(&f.scale(c), p).unwrap();
        let b = c * weak_lp_quasinorm(&f, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn exact_power_law_is_recovered(e in -3.0..3.0f64, c in 0.01..100.0f64, t0 in 0.01..1.0f64) {
        let times: Vec<f64> = (0..12).map(|i| t0 * 1.3f64.powi(i)).collect();
        let values = times.iter().map(|t| c * t.powf(e)).collect();
        let s = DecaySeries::from_samples("exact", e, times, values).unwrap()
            .fit_decay(0.0, f64::INFINITY).unwrap();
        let fit = s.fit.unwrap();
        prop_assert!((fit.exponent - e).abs() < 1e-12, "{}", fit.exponent);
    }

    #[test]
    fn snapshot_bytes_round_trip(v in samples(), t in -1e3..1e3f64) {
        let f = field_from(&v);
        let s = Snapshot::from_fields(t, &[&f]).unwrap();
        let bytes = s.to_bytes();
        let back = Snapshot::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn theta_scaling_identity(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64, t in 0.01..4.0f64, lam in 0.2..5.0f64) {
        prop_assume!(x1.hypot(x2) > 1e-3);
        let (a1, a2) = theta_at(0.7, lam * lam * t, lam * x1, lam * x2);
        let (b1, b2) = theta_at(0.7, t, x1, x2);
        prop_assert!((a1 - b1 / lam).abs() <= 1e-12 * (1.0 + b1.abs() / lam));
        prop_assert!((a2 - b2 / lam).abs() <= 1e-12 * (1.0 + b2.abs() / lam));
    }

    #[test]
    fn theta_is_linear_in_alpha(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let (s1, s2) = theta_at(a + b, 0.5, x1, x2);
        let (p1, p2) = theta_at(a, 0.5, x1, x2);
        let (q1, q2) = theta_at(b, 0.5, x1, x2);
        prop_assert!((s1 - p1 - q1).abs() < 1e-12 && (s2 - p2 - q2).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn truncation_is_linear_and_sandwiched(seed_a in 0u64..1000, seed_b in 1000u64..2000, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let g = Grid::new(256, 4.0, 1.0).unwrap();
        let sp = Spectral::new(g);
        let f = CutoffProfile::new(g).unwrap();
        let v = random_solenoidal(&sp, seed_a);
        let w = random_solenoidal(&sp, seed_b);
        let lhs = truncate_field(&sp, &v.scale(a).add(&w.scale(b)), &f).unwrap();
        let tv = truncate_field(&sp, &v, &f).unwrap();
        let rhs = tv.scale(a).add(&truncate_field(&sp, &w, &f).unwrap().scale(b));
        prop_assert!(lhs.sub(&rhs).max_abs() < 1e-10);
        let inner = tv.masked(|i| g.in_ball(i, 0.5)).max_abs();
        let outer = tv.sub(&v).masked(|i| !g.in_ball(i, 1.0)).max_abs();
        prop_assert!(inner <= 1e-10 * v.max_abs());
        prop_assert!(outer <= 1e-8 * v.max_abs());
    }

    #[test]
    fn stream_matrix_reconstructs_field(seed in 0u64..10_000) {
        let sp = Spectral::new(Grid::new(64, 4.0, 1.0).unwrap());
        let v = random_solenoidal(&sp, seed);
        let psi = stream_matrix(&sp, &v).unwrap();
        prop_assert!(psi.divergence(&sp).sub(&v).max_abs() < 1e-8);
    }

    #[test]
    fn split_parts_sum_to_input(seed in 0u64..10_000, delta in 0.05..0.95f64) {
        let sp = Spectral::new(Grid::new(64, 4.0, 1.0).unwrap());
        let v = random_solenoidal(&sp, seed);
        let s = split_by_height(&sp, &v, delta).unwrap();
        let sum = s.large_part.add(&s.small_part);
        prop_assert!(sp.leray_project(&sum).sub(&v).max_abs() < 1e-9);
        prop_assert!(sp.divergence(&s.large_part).max_abs() < 1e-10);
        prop_assert!(sp.divergence(&s.small_part).max_abs() < 1e-10);
    }

    #[test]
    fn leray_projection_is_idempotent(seed in 0u64..10_000) {
        let sp = Spectral::new(Grid::new(64, 4.0, 1.0).unwrap());
        let g = *sp.grid();
        let v = random_solenoidal(&sp, seed);
        let grad = sp.gradient(&ScalarField::from_fn(g, |x1, x2| (x1 * FRAC_PI_4).sin() * (x2 * FRAC_PI_2).cos()));
        let mixed = v.add(&grad);
        let once = sp.leray_project(&mixed);
        prop_assert!(once.sub(&v).max_abs() < 1e-10);
        prop_assert!(sp.leray_project(&once).sub(&once).max_abs() < 1e-12);
    }
}
