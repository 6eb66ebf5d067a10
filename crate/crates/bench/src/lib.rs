//! Fixtures shared by the benchmarks.

use oseen_core::exact::{periodic_lamb_oseen_velocity, OseenParams};
use oseen_core::{Grid, Spectral, VectorField2};

/// `N×N` grid on `[-4, 4)²` with `R = 1`.
pub fn bench_grid(n: usize) -> Grid {
    Grid::new(n, 4.0, 1.0).expect("valid bench grid")
}

/// Periodic Lamb-Oseen velocity with `α = 0.1` at the default core time.
pub fn vortex(sp: &Spectral) -> VectorField2 {
    let params = OseenParams::with_default_core(0.1, sp.grid()).expect("valid params");
    periodic_lamb_oseen_velocity(sp, &params, params.core_time).expect("positive time")
}
