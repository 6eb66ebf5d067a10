//! The radial cut-off `f`, vanishing on `B_{R/2}` and equal to one outside
//! `B_{2R/3}`, together with closed-form Cartesian derivatives up to the
//! gradient of its Laplacian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Value and first three derivatives of a scalar function of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3(pub [f64; 4]);

impl std::ops::Add for Jet3 {
    type Output = Jet3;

    fn add(self, o: Jet3) -> Jet3 {
        let (a, b) = (self.0, o.0);
        Jet3([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
}

/// Leibniz rule up to third order.
impl std::ops::Mul for Jet3 {
    type Output = Jet3;

    fn mul(self, o: Jet3) -> Jet3 {
        let (f, g) = (self.0, o.0);
        Jet3([
            f[0] * g[0],
            f[1] * g[0] + f[0] * g[1],
            f[2] * g[0] + 2.0 * f[1] * g[1] + f[0] * g[2],
            f[3] * g[0] + 3.0 * f[2] * g[1] + 3.0 * f[1] * g[2] + f[0] * g[3],
        ])
    }
}

impl Jet3 {
    pub fn constant(c: f64) -> Self {
        Jet3([c, 0.0, 0.0, 0.0])
    }

    pub fn variable(x: f64) -> Self {
        Jet3([x, 1.0, 0.0, 0.0])
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    pub fn d(&self, k: usize) -> f64 {
        self.0[k]
    }

    /// `φ∘self` where `phi` holds `φ` and its first three derivatives at `self.value()`.
    pub fn compose(self, phi: [f64; 4]) -> Jet3 {
        let g = self.0;
        Jet3([
            phi[0],
            phi[1] * g[1],
            phi[2] * g[1] * g[1] + phi[1] * g[2],
            phi[3] * g[1].powi(3) + 3.0 * phi[2] * g[1] * g[2] + phi[1] * g[3],
        ])
    }

    pub fn exp(self) -> Jet3 {
        let e = self.value().exp();
        self.compose([e; 4])
    }

    pub fn recip(self) -> Jet3 {
        let u = self.value();
        self.compose([1.0 / u, -1.0 / (u * u), 2.0 / u.powi(3), -6.0 / u.powi(4)])
    }

    pub fn scale_arg(self, c: f64) -> Jet3 {
        let f = self.0;
        Jet3([f[0], f[1] * c, f[2] * c * c, f[3] * c * c * c])
    }
}

/// `σ(τ) = e^{-1/τ}` for `τ > 0`, zero otherwise.
fn sigma(tau: f64) -> Jet3 {
    // below this e^{-1/τ} underflows and every derivative is negligible
    if tau <= 1.0 / 700.0 {
        return Jet3::constant(0.0);
    }
    (Jet3::variable(tau).recip() * Jet3::constant(-1.0)).exp()
}

/// Smoothstep `s(τ) = σ(τ) / (σ(τ) + σ(1-τ))`: 0 for τ ≤ 0, 1 for τ ≥ 1.
pub fn smoothstep(tau: f64) -> Jet3 {
    if tau <= 0.0 {
        return Jet3::constant(0.0);
    }
    if tau >= 1.0 {
        return Jet3::constant(1.0);
    }
    let a = sigma(tau);
    // σ(1-τ) as a function of τ flips odd derivatives
    let b = sigma(1.0 - tau).0;
    let b = Jet3([b[0], -b[1], b[2], -b[3]]);
    let mut s = a * (a + b).recip();
    // direct quotient keeps the value inside [0, 1]
    s.0[0] = a.value() / (a.value() + b.value());
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// `σ(τ)/(σ(τ)+σ(1-τ))` with `σ(τ) = e^{-1/τ}`.
    ExpSmoothstep,
}

/// Pointwise derivative data of `f` at one node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CutoffJet {
    pub f: f64,
    pub grad: [f64; 2],
    /// `[∂₁₁f, ∂₁₂f, ∂₂₂f]`
    pub hess: [f64; 3],
    pub lap: f64,
    pub grad_lap: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile {
    grid: Grid,
    values: ScalarField,
    transition: Transition,
}

impl CutoffProfile {
    /// Inner and outer transition radii `R/2` and `2R/3`.
    pub fn band(grid: &Grid) -> (f64, f64) {
        let r = grid.ball_radius();
        (0.5 * r, 2.0 * r / 3.0)
    }

    pub fn new(grid: Grid) -> Result<Self> {
        let (r0, r1) = Self::band(&grid);
        if !(grid.dx() < (r1 - r0) / 2.0) {
            return Err(Error::Precondition(format!(
                "cut-off transition band [{r0}, {r1}] under-resolved: dx = {} must be below {}",
                grid.dx(),
                (r1 - r0) / 2.0
            )));
        }
        let values = ScalarField::from_fn(grid, |x1, x2| radial_jet(&grid, x1.hypot(x2)).value());
        Ok(CutoffProfile {
            grid,
            values,
            transition: Transition::ExpSmoothstep,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    pub fn transition(&self) -> Transition {
        self.transition
    }

    /// Value of `f` at radius `r`.
    pub fn at_radius(&self, r: f64) -> f64 {
        radial_jet(&self.grid, r).value()
    }

    /// Closed-form Cartesian derivatives at node `idx`.
    pub fn jet_at(&self, idx: usize) -> CutoffJet {
        let (x1, x2) = self.grid.position(idx);
        cartesian_jet(&self.grid, x1, x2)
    }

    pub fn jets(&self) -> Vec<CutoffJet> {
        (0..self.grid.len()).map(|i| self.jet_at(i)).collect()
    }
}

/// Derivatives of `f` in the radius.
fn radial_jet(grid: &Grid, r: f64) -> Jet3 {
    let (r0, r1) = CutoffProfile::band(grid);
    let w = r1 - r0;
    smoothstep((r - r0) / w).scale_arg(1.0 / w)
}

fn cartesian_jet(grid: &Grid, x1: f64, x2: f64) -> CutoffJet {
    let r = x1.hypot(x2);
    let j = radial_jet(grid, r);
    let (f0, f1, f2, f3) = (j.d(0), j.d(1), j.d(2), j.d(3));
    if f1 == 0.0 && f2 == 0.0 && f3 == 0.0 {
        return CutoffJet {
            f: f0,
            ..CutoffJet::default()
        };
    }
    // r > R/2 here, so the divisions are safe
    let (n1, n2) = (x1 / r, x2 / r);
    let tang = f1 / r;
    let hess = [
        f2 * n1 * n1 + tang * (1.0 - n1 * n1),
        (f2 - tang) * n1 * n2,
        f2 * n2 * n2 + tang * (1.0 - n2 * n2),
    ];
    let lap = f2 + tang;
    // d/dr (f'' + f'/r) = f''' + f''/r - f'/r²
    let dlap = f3 + f2 / r - f1 / (r * r);
    CutoffJet {
        f: f0,
        grad: [f1 * n1, f1 * n2],
        hess,
        lap,
        grad_lap: [dlap * n1, dlap * n2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(256, 4.0, 1.0).unwrap()
    }

    #[test]
    fn plateaus_and_midpoint() {
        let c = CutoffProfile::new(grid()).unwrap();
        assert_eq!(c.at_radius(0.4), 0.0);
        assert_eq!(c.at_radius(0.9), 1.0);
        let mid = (0.5 + 2.0 / 3.0) / 2.0;
        assert!((c.at_radius(mid) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn values_in_unit_interval_and_monotone() {
        let c = CutoffProfile::new(grid()).unwrap();
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = c.at_radius(i as f64 * 1e-3);
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev - 1e-15, "r={} {v} < {prev}", i as f64 * 1e-3);
            prev = v;
        }
    }

    #[test]
    fn under_resolved_band_rejected() {
        assert!(CutoffProfile::new(Grid::new(32, 4.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn smoothstep_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let j = smoothstep(t);
            for k in 1..4 {
                let fd = (smoothstep(t + h).d(k - 1) - smoothstep(t - h).d(k - 1)) / (2.0 * h);
                assert!((fd - j.d(k)).abs() < 1e-5 * (1.0 + j.d(k).abs()), "t={t} k={k}");
            }
        }
    }

    #[test]
    fn cartesian_derivatives_match_finite_differences() {
        let g = grid();
        let h = 1e-5;
        let f = |x: f64, y: f64| cartesian_jet(&g, x, y);
        for &(x, y) in &[(0.4, 0.3), (-0.2, 0.55), (0.0, 0.6)] {
            let j = f(x, y);
            let gx = (f(x + h, y).f - f(x - h, y).f) / (2.0 * h);
            let gy = (f(x, y + h).f - f(x, y - h).f) / (2.0 * h);
            assert!((gx - j.grad[0]).abs() < 1e-6);
            assert!((gy - j.grad[1]).abs() < 1e-6);
            let h12 = (f(x, y + h).grad[0] - f(x, y - h).grad[0]) / (2.0 * h);
            assert!((h12 - j.hess[1]).abs() < 1e-5);
            assert!((j.lap - j.hess[0] - j.hess[2]).abs() < 1e-9);
            let dl1 = (f(x + h, y).lap - f(x - h, y).lap) / (2.0 * h);
            let dl2 = (f(x, y + h).lap - f(x, y - h).lap) / (2.0 * h);
            assert!((dl1 - j.grad_lap[0]).abs() < 1e-4 * (1.0 + dl1.abs()));
            assert!((dl2 - j.grad_lap[1]).abs() < 1e-4 * (1.0 + dl2.abs()));
        }
    }
}
