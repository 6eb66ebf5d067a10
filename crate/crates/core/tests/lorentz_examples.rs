use std::f64::consts::PI;

use oseen_core::lorentz::{
    distribution_function, dyadic_levels, lp_norm, small_value_tail, weak_lp_quasinorm, DecaySeries,
};
use oseen_core::{Grid, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk_indicator(g: Grid, r: f64) -> ScalarField {
    ScalarField::from_fn(g, |x1, x2| if x1.hypot(x2) < r { 1.0 } else { 0.0 })
}

fn capped_inverse_radius(n: usize, l: f64, cap: f64) -> ScalarField {
    let g = Grid::new(n, l, l / 4.0).unwrap();
    ScalarField::from_fn(g, |x1, x2| (1.0 / x1.hypot(x2)).min(cap))
}

/// Area of the ring of cells the staircase boundary of a disk can miss or add.
fn staircase(g: &Grid, r: f64) -> f64 {
    2.0 * PI * r * 2.0 * g.dx()
}

#[test]
fn indicator_lp_norm_follows_disk_area() {
    let g = Grid::new(256, 4.0, 1.0).unwrap();
    let f = disk_indicator(g, 1.0);
    let area = distribution_function(&f, 0.5).unwrap();
    assert!((area - PI).abs() < staircase(&g, 1.0), "{area}");
    // the p-norm of an indicator is exactly the sampled area to the 1/p
    let n4 = lp_norm(&f, 4.0).unwrap();
    assert!((n4 - area.powf(0.25)).abs() < 1e-12);
    let rel = (n4 / PI.powf(0.25) - 1.0).abs();
    assert!(rel < 0.25 * staircase(&g, 1.0) / PI, "{rel}");
    let w2 = weak_lp_quasinorm(&f, 2.0).unwrap();
    assert!((w2 - area.sqrt()).abs() < 1e-12);
}

/// The continuum value is √π; the sampled rearrangement picks up the lattice
/// point excess of the few nodes inside the cap (37 nodes where a disk of
/// radius √10·dx has area 31.4·dx²), so the discrete value sits 8.5% above.
#[test]
fn capped_inverse_radius_weak_norm_on_the_lattice() {
    let f = capped_inverse_radius(512, 10.0, 10.0);
    let w = weak_lp_quasinorm(&f, 2.0).unwrap();
    // level 1/(√10·dx) on the shell |x|² = 10·dx², measure 37·dx²
    let expect = (37.0f64 / 10.0).sqrt();
    assert!((w - expect).abs() < 1e-12, "{w} vs {expect}");
    assert!((w / PI.sqrt() - 1.0).abs() < 0.09);
}

#[test]
fn capped_inverse_radius_tail_is_sqrt_pi_on_scanned_decade() {
    // levels between the far-field floor (1/L) and the cap
    let f = capped_inverse_radius(512, 10.0, 10.0);
    let t = small_value_tail(&f, 2.0, 0.5, 5.0).unwrap();
    assert!((t / PI.sqrt() - 1.0).abs() < 0.03, "{t}");
}

#[test]
fn compact_tail_reduces_to_support_area() {
    // bounded field, levels below its minimum on the support
    let g = Grid::new(128, 4.0, 1.0).unwrap();
    let f = ScalarField::from_fn(g, |x1, x2| if x1.hypot(x2) < 1.0 { 2.0 + x1 } else { 0.0 });
    let support = distribution_function(&f, 1e-9).unwrap();
    let levels = dyadic_levels(0.05, 0.5).unwrap();
    let expect = levels.iter().map(|l| l * support.sqrt()).fold(0.0, f64::max);
    let got = small_value_tail(&f, 2.0, 0.05, 0.5).unwrap();
    assert!((got - expect).abs() < 1e-12 * expect);
}

#[test]
fn noisy_power_law_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let times: Vec<f64> = (0..40).map(|i| 0.1 * 1.08f64.powi(i)).collect();
    let values = times
        .iter()
        .map(|t| 3.0 * t.powf(-0.75) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
        .collect();
    let s = DecaySeries::from_samples("noisy", -0.75, times, values)
        .unwrap()
        .fit_decay(0.0, f64::INFINITY)
        .unwrap();
    let fit = s.fit.unwrap();
    assert!((fit.exponent + 0.75).abs() < 0.02, "{}", fit.exponent);
    assert!((fit.constant / 3.0 - 1.0).abs() < 0.05);
}
