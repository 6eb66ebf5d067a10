//! Seeded random divergence-free test fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{SpectralField, VectorField2};
use crate::spectral::Spectral;

/// Smooth periodic divergence-free field `∇^⊥φ` with a random Gaussian
/// spectrum, normalized to `max|v| = 1`.
///
/// The correlation length is drawn from `[R/4, R]`, so the field varies on
/// the scale of the truncation ball.
pub fn random_solenoidal(sp: &Spectral, seed: u64) -> VectorField2 {
    let grid = *sp.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = grid.ball_radius();
    let ell: f64 = rng.gen_range(0.25 * r..r);
    let n = grid.n_points();
    let coeffs: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (k1, k2) = (grid.wavenumber(idx / n), grid.wavenumber(idx % n));
            let env = (-(k1 * k1 + k2 * k2) * ell * ell / 4.0).exp();
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            // Nyquist rows have no consistent derivative; leave them empty
            if idx / n == n / 2 || idx % n == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(re, im) * env
        })
        .collect();
    // the real part of the inverse transform symmetrizes the spectrum
    let phi = sp.to_physical(&SpectralField::new(grid, coeffs));
    let v = sp.perp_gradient(&phi);
    let peak = v.max_abs();
    if peak > 0.0 {
        v.scale(1.0 / peak)
    } else {
        v
    }
}

/// `count` fields from consecutive seeds starting at `seed`.
pub fn random_corpus(sp: &Spectral, seed: u64, count: usize) -> Vec<VectorField2> {
    (0..count as u64).map(|i| random_solenoidal(sp, seed.wrapping_add(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn reproducible_and_divergence_free() {
        let sp = Spectral::new(Grid::new(64, 4.0, 1.0).unwrap());
        let a = random_solenoidal(&sp, 7);
        let b = random_solenoidal(&sp, 7);
        assert_eq!(a, b);
        assert_ne!(a, random_solenoidal(&sp, 8));
        assert!((a.max_abs() - 1.0).abs() < 1e-12);
        assert!(sp.divergence(&a).max_abs() < 1e-12);
    }
}
