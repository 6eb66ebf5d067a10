//! Fourier-space operators on the periodic box.
//!
//! First derivatives use `i·k` with the Nyquist mode zeroed so that they map
//! real fields to real fields and stay skew-adjoint; second-order operators use
//! the full `-|k|²`. Quadratic products are dealiased with the 2/3 rule: a slot
//! survives iff `3·|m| < n` in both axes.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, SpectralField, VectorField2};

pub(crate) type Spec = Vec<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// FFT plans and wavenumber tables for one grid.
///
/// Cheap to clone (plans are shared); every transform allocates its own
/// scratch, so a single instance may be used from several threads.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
    kd: Vec<f64>,
    keep: Vec<bool>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n_points();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let k: Vec<f64> = (0..n).map(|m| grid.wavenumber(m)).collect();
        let kd = (0..n)
            .map(|m| {
                if grid.mode_index(m) == -(n as i64 / 2) {
                    0.0
                } else {
                    k[m]
                }
            })
            .collect();
        let keep = (0..n)
            .map(|m| 3 * grid.mode_index(m).unsigned_abs() < n as u64)
            .collect();
        Spectral {
            grid,
            fwd,
            inv,
            k,
            kd,
            keep,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn n(&self) -> usize {
        self.grid.n_points()
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n();
        let pass = |buf: &mut [Complex64]| {
            buf.par_chunks_mut(n * 16).for_each(|rows| {
                let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
                plan.process_with_scratch(rows, &mut scratch);
            });
        };
        pass(buf);
        transpose(buf, n);
        pass(buf);
        transpose(buf, n);
    }

    pub(crate) fn fft(&self, values: &[f64]) -> Spec {
        let mut buf: Spec = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        buf
    }

    pub(crate) fn ifft(&self, mut hat: Spec) -> Vec<f64> {
        self.transform(&mut hat, &self.inv);
        let scale = 1.0 / self.grid.len() as f64;
        hat.into_iter().map(|c| c.re * scale).collect()
    }

    pub(crate) fn hat(&self, f: &ScalarField) -> Spec {
        debug_assert_eq!(f.grid(), &self.grid);
        self.fft(f.values())
    }

    pub(crate) fn real(&self, hat: Spec) -> ScalarField {
        ScalarField::from_values_unchecked(self.grid, self.ifft(hat))
    }

    /// Applies `op(k₁, k₂, k̃₁, k̃₂, keep)` slot by slot, where `k` is the full
    /// wavenumber and `k̃` the derivative wavenumber.
    pub(crate) fn map_modes(
        &self,
        hat: &[Complex64],
        op: impl Fn(ModeInfo, Complex64) -> Complex64 + Sync,
    ) -> Spec {
        let n = self.n();
        let mut out = vec![ZERO; hat.len()];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                let info = ModeInfo {
                    k1: self.k[i],
                    k2: self.k[j],
                    kd1: self.kd[i],
                    kd2: self.kd[j],
                    keep: self.keep[i] && self.keep[j],
                    zero: i == 0 && j == 0,
                };
                *slot = op(info, hat[i * n + j]);
            }
        });
        out
    }

    pub fn to_spectral(&self, f: &ScalarField) -> Result<SpectralField> {
        self.grid.check_same(f.grid(), "to_spectral")?;
        if !f.is_finite() {
            return Err(Error::RejectedInput(
                "field contains non-finite samples".into(),
            ));
        }
        Ok(SpectralField::new(self.grid, self.hat(f)))
    }

    pub fn to_physical(&self, f: &SpectralField) -> ScalarField {
        self.real(f.clone().into_coeffs())
    }

    pub(crate) fn d_hat(&self, hat: &[Complex64], axis: Axis) -> Spec {
        self.map_modes(hat, |m, c| {
            let k = match axis {
                Axis::X1 => m.kd1,
                Axis::X2 => m.kd2,
            };
            I * k * c
        })
    }

    pub fn derivative(&self, f: &ScalarField, axis: Axis) -> ScalarField {
        self.real(self.d_hat(&self.hat(f), axis))
    }

    pub fn gradient(&self, f: &ScalarField) -> VectorField2 {
        let h = self.hat(f);
        VectorField2 {
            u1: self.real(self.d_hat(&h, Axis::X1)),
            u2: self.real(self.d_hat(&h, Axis::X2)),
        }
    }

    /// `∇^⊥f = (∂₂f, -∂₁f)`, the orientation for which `x^⊥ = (x₂, -x₁)`.
    pub fn perp_gradient(&self, f: &ScalarField) -> VectorField2 {
        let h = self.hat(f);
        VectorField2 {
            u1: self.real(self.d_hat(&h, Axis::X2)),
            u2: self.real(self.d_hat(&h, Axis::X1)).scale(-1.0),
        }
    }

    pub fn divergence(&self, v: &VectorField2) -> ScalarField {
        let a = self.hat(&v.u1);
        let b = self.hat(&v.u2);
        let da = self.d_hat(&a, Axis::X1);
        let db = self.d_hat(&b, Axis::X2);
        self.real(da.iter().zip(&db).map(|(x, y)| x + y).collect())
    }

    /// Scalar vorticity `∂₂v₁ - ∂₁v₂`; with this sign `curl Θ₀ = δ₀`.
    pub fn curl(&self, v: &VectorField2) -> ScalarField {
        let a = self.hat(&v.u1);
        let b = self.hat(&v.u2);
        self.real(self.curl_hat(&a, &b))
    }

    pub(crate) fn curl_hat(&self, a: &[Complex64], b: &[Complex64]) -> Spec {
        let da = self.d_hat(a, Axis::X2);
        let db = self.d_hat(b, Axis::X1);
        da.iter().zip(&db).map(|(x, y)| x - y).collect()
    }

    pub(crate) fn lap_hat(&self, hat: &[Complex64]) -> Spec {
        self.map_modes(hat, |m, c| -(m.k1 * m.k1 + m.k2 * m.k2) * c)
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.real(self.lap_hat(&self.hat(f)))
    }

    /// Zero-mode-free inverse; the `k = 0` slot of the result is zero.
    pub(crate) fn inv_lap_hat(&self, hat: &[Complex64]) -> Spec {
        self.map_modes(hat, |m, c| {
            if m.zero {
                ZERO
            } else {
                -c / (m.k1 * m.k1 + m.k2 * m.k2)
            }
        })
    }

    /// Solves `Δu = f` for mean-zero `f`; the returned `u` has zero mean.
    pub fn inverse_laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        let mean = f.mean();
        let scale = f.max_abs();
        if mean.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) && mean != 0.0 {
            return Err(Error::Precondition(format!(
                "inverse_laplacian needs a mean-zero field, mean = {mean:e}"
            )));
        }
        Ok(self.real(self.inv_lap_hat(&self.hat(f))))
    }

    pub(crate) fn leray_hat(&self, a: &[Complex64], b: &[Complex64]) -> (Spec, Spec) {
        let n = self.n();
        let mut pa = a.to_vec();
        let mut pb = b.to_vec();
        for i in 0..n {
            for j in 0..n {
                let (k1, k2) = (self.kd[i], self.kd[j]);
                let kk = k1 * k1 + k2 * k2;
                if kk == 0.0 {
                    continue;
                }
                let idx = i * n + j;
                let dot = (k1 * a[idx] + k2 * b[idx]) / kk;
                pa[idx] -= k1 * dot;
                pb[idx] -= k2 * dot;
            }
        }
        (pa, pb)
    }

    /// Whole-space Leray projector `I - ∇Δ⁻¹div`, built from the same
    /// derivative symbols as [`Spectral::divergence`].
    pub fn leray_project(&self, v: &VectorField2) -> VectorField2 {
        let (a, b) = self.leray_hat(&self.hat(&v.u1), &self.hat(&v.u2));
        VectorField2 {
            u1: self.real(a),
            u2: self.real(b),
        }
    }

    pub(crate) fn biot_savart_hat(&self, omega: &[Complex64]) -> (Spec, Spec) {
        let phi = self.inv_lap_hat(omega);
        let a = self.d_hat(&phi, Axis::X2);
        let b = self.d_hat(&phi, Axis::X1).into_iter().map(|c| -c).collect();
        (a, b)
    }

    /// Periodic surrogate of the planar Biot-Savart law: `v = ∇^⊥Δ⁻¹(ω - mean ω)`.
    pub fn biot_savart(&self, omega: &ScalarField) -> VectorField2 {
        let (a, b) = self.biot_savart_hat(&self.hat(omega));
        VectorField2 {
            u1: self.real(a),
            u2: self.real(b),
        }
    }

    pub(crate) fn dealias_hat(&self, hat: &[Complex64]) -> Spec {
        self.map_modes(hat, |m, c| if m.keep { c } else { ZERO })
    }

    pub fn dealias(&self, f: &ScalarField) -> ScalarField {
        self.real(self.dealias_hat(&self.hat(f)))
    }

    /// Exact heat flow `e^{tΔ}` of each mode.
    pub(crate) fn heat_hat(&self, hat: &[Complex64], t: f64) -> Spec {
        self.map_modes(hat, |m, c| (-(m.k1 * m.k1 + m.k2 * m.k2) * t).exp() * c)
    }

    pub fn heat_flow(&self, f: &ScalarField, t: f64) -> ScalarField {
        self.real(self.heat_hat(&self.hat(f), t))
    }

    /// Dealiased advection `D[(Dv)·∇(Dv)]` from spectral components.
    pub(crate) fn advection_hat(&self, a: &[Complex64], b: &[Complex64]) -> (Spec, Spec) {
        let a = self.dealias_hat(a);
        let b = self.dealias_hat(b);
        let u1 = self.ifft(a.clone());
        let u2 = self.ifft(b.clone());
        let u1x = self.ifft(self.d_hat(&a, Axis::X1));
        let u1y = self.ifft(self.d_hat(&a, Axis::X2));
        let u2x = self.ifft(self.d_hat(&b, Axis::X1));
        let u2y = self.ifft(self.d_hat(&b, Axis::X2));
        let n1: Vec<f64> = (0..u1.len())
            .map(|i| u1[i] * u1x[i] + u2[i] * u1y[i])
            .collect();
        let n2: Vec<f64> = (0..u1.len())
            .map(|i| u1[i] * u2x[i] + u2[i] * u2y[i])
            .collect();
        (
            self.dealias_hat(&self.fft(&n1)),
            self.dealias_hat(&self.fft(&n2)),
        )
    }

    /// Dealiased scalar advection `D[u·∇(Dθ)]` with `u` already in physical space.
    pub(crate) fn scalar_advection_hat(&self, u1: &[f64], u2: &[f64], theta: &[Complex64]) -> Spec {
        let th = self.dealias_hat(theta);
        let tx = self.ifft(self.d_hat(&th, Axis::X1));
        let ty = self.ifft(self.d_hat(&th, Axis::X2));
        let prod: Vec<f64> = (0..tx.len())
            .map(|i| u1[i] * tx[i] + u2[i] * ty[i])
            .collect();
        self.dealias_hat(&self.fft(&prod))
    }

    /// Advection term `v·∇v`, dealiased by the 2/3 rule.
    ///
    /// The velocity is truncated before the product and the product after it,
    /// so `∑ v·(v·∇v) dx² = 0` up to rounding for divergence-free `v`.
    pub fn nonlinear_term(&self, v: &VectorField2) -> VectorField2 {
        let div = self.divergence(v).max_abs();
        let scale = v.max_abs() / self.grid.dx();
        if div > 1e-8 * scale.max(f64::MIN_POSITIVE) && div > 0.0 {
            log::warn!("nonlinear_term: input not divergence-free (max |div v| = {div:e})");
        }
        let (a, b) = self.advection_hat(&self.hat(&v.u1), &self.hat(&v.u2));
        VectorField2 {
            u1: self.real(a),
            u2: self.real(b),
        }
    }

    /// Pressure `p = -∑ ∂ᵢ∂ⱼΔ⁻¹(vᵢvⱼ)` with the products dealiased; mean zero.
    pub fn pressure_from_velocity(&self, v: &VectorField2) -> ScalarField {
        let a = self.dealias_hat(&self.hat(&v.u1));
        let b = self.dealias_hat(&self.hat(&v.u2));
        let u1 = self.ifft(a);
        let u2 = self.ifft(b);
        let prod = |f: &dyn Fn(usize) -> f64| -> Spec {
            let vals: Vec<f64> = (0..u1.len()).map(f).collect();
            self.dealias_hat(&self.fft(&vals))
        };
        let s11 = prod(&|i| u1[i] * u1[i]);
        let s12 = prod(&|i| u1[i] * u2[i]);
        let s22 = prod(&|i| u2[i] * u2[i]);
        let n = self.n();
        let mut p = vec![ZERO; self.grid.len()];
        for i in 0..n {
            for j in 0..n {
                let (k1, k2) = (self.kd[i], self.kd[j]);
                let kk = self.k[i] * self.k[i] + self.k[j] * self.k[j];
                if kk == 0.0 {
                    continue;
                }
                let idx = i * n + j;
                // ∂ᵢ∂ⱼ → -kᵢkⱼ and Δ⁻¹ → -1/|k|², so p̂ = -kᵢkⱼ ŝᵢⱼ / |k|².
                p[idx] = -(k1 * k1 * s11[idx] + 2.0 * k1 * k2 * s12[idx] + k2 * k2 * s22[idx]) / kk;
            }
        }
        self.real(p)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeInfo {
    pub k1: f64,
    pub k2: f64,
    pub kd1: f64,
    pub kd2: f64,
    pub keep: bool,
    pub zero: bool,
}

fn transpose(buf: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    buf.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, 4.0, 1.0).unwrap()
    }

    #[test]
    fn constant_maps_to_zero_mode() {
        let g = grid(32);
        let sp = Spectral::new(g);
        let f = sp.to_spectral(&ScalarField::constant(g, 2.5)).unwrap();
        let n2 = (32 * 32) as f64;
        assert!((f.mode(0, 0) - Complex64::new(2.5 * n2, 0.0)).norm() < 1e-10);
        let others: f64 = f.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(others < 1e-9);
    }

    #[test]
    fn single_sine_has_two_modes() {
        let g = grid(64);
        let sp = Spectral::new(g);
        let l = g.half_width();
        let f = ScalarField::from_fn(g, |x1, _| (PI * x1 / l).sin());
        let hat = sp.to_spectral(&f).unwrap();
        let big: Vec<_> = hat
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-8)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(big.len(), 2);
        assert!(hat.mode(1, 0).norm() > 1.0);
        assert!(hat.mode(-1, 0).norm() > 1.0);
        assert!(hat.hermitian_defect() < 1e-14);
    }

    #[test]
    fn non_finite_input_rejected() {
        let g = grid(32);
        let sp = Spectral::new(g);
        let mut v = vec![0.0; g.len()];
        v[3] = f64::INFINITY;
        let f = ScalarField::from_values_unchecked(g, v);
        assert!(matches!(sp.to_spectral(&f), Err(Error::RejectedInput(_))));
    }

    #[test]
    fn derivative_of_constant_and_sine() {
        let g = grid(64);
        let sp = Spectral::new(g);
        let l = g.half_width();
        let c = sp.derivative(&ScalarField::constant(g, 3.0), Axis::X2);
        assert!(c.max_abs() < 1e-12);
        let f = ScalarField::from_fn(g, |x1, _| (PI * x1 / l).sin());
        let d = sp.derivative(&f, Axis::X1);
        let exact = ScalarField::from_fn(g, |x1, _| PI / l * (PI * x1 / l).cos());
        assert!(d.sub(&exact).max_abs() < 1e-10);
        assert!(sp.derivative(&f, Axis::X2).max_abs() < 1e-10);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = grid(64);
        let sp = Spectral::new(g);
        let l = g.half_width();
        let (k1, k2) = (3.0 * PI / l, 2.0 * PI / l);
        let f = ScalarField::from_fn(g, |x1, x2| (k1 * x1 + k2 * x2).cos());
        let kk = k1 * k1 + k2 * k2;
        assert!(sp.laplacian(&f).sub(&f.scale(-kk)).max_abs() < 1e-9);
        let inv = sp.inverse_laplacian(&f).unwrap();
        assert!(inv.sub(&f.scale(-1.0 / kk)).max_abs() < 1e-12);
    }

    #[test]
    fn inverse_laplacian_rejects_constant() {
        let g = grid(32);
        let sp = Spectral::new(g);
        assert!(matches!(
            sp.inverse_laplacian(&ScalarField::constant(g, 1.0)),
            Err(Error::Precondition(_))
        ));
        assert!(sp.inverse_laplacian(&ScalarField::zeros(g)).is_ok());
    }

    #[test]
    fn leray_fixed_points_and_kernel() {
        let g = grid(64);
        let sp = Spectral::new(g);
        let l = g.half_width();
        let k = PI / l;
        // divergence-free single mode: ∇^⊥ of cos(k x₁ + 2k x₂)
        let v = VectorField2::from_fn(g, |x1, x2| {
            let s = (k * x1 + 2.0 * k * x2).sin();
            (-2.0 * k * s, k * s)
        });
        assert!(sp.leray_project(&v).sub(&v).max_abs() < 1e-12);
        let grad = sp.gradient(&ScalarField::from_fn(g, |x1, x2| {
            (k * x1).sin() * (3.0 * k * x2).cos()
        }));
        assert!(sp.leray_project(&grad).max_abs() < 1e-10);
    }

    #[test]
    fn nonlinear_term_of_constant_is_zero() {
        let g = grid(32);
        let sp = Spectral::new(g);
        let v = VectorField2::from_fn(g, |_, _| (0.7, -1.3));
        assert!(sp.nonlinear_term(&v).max_abs() < 1e-12);
    }

    #[test]
    fn pressure_of_rest_is_zero() {
        let g = grid(32);
        let sp = Spectral::new(g);
        assert_eq!(sp.pressure_from_velocity(&VectorField2::zeros(g)).max_abs(), 0.0);
    }

    #[test]
    fn biot_savart_of_zero() {
        let g = grid(32);
        let sp = Spectral::new(g);
        assert_eq!(sp.biot_savart(&ScalarField::zeros(g)).max_abs(), 0.0);
    }

    #[test]
    fn transpose_roundtrip() {
        let n = 70;
        let mut buf: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, 0.0)).collect();
        transpose(&mut buf, n);
        assert_eq!(buf[3 * n + 5].re, (5 * n + 3) as f64);
        transpose(&mut buf, n);
        assert!(buf.iter().enumerate().all(|(i, c)| c.re == i as f64));
    }
}
