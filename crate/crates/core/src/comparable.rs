//! Initial data comparable at infinity: the stream function of a
//! divergence-free field, its truncation `v̄ = div(fψ)` away from the
//! obstacle, the comparability check, and the height splitting `u₀ = z₀ + w₀`.

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField2};
use crate::lorentz::{lp_norm_where, weak_lp_quasinorm};
use crate::spectral::Spectral;

/// Skew-symmetric `ψ` with `div ψ = v`, stored through `ψ₁₂`.
///
/// Rows convention `(div ψ)ᵢ = ∂ⱼψᵢⱼ`, so `v = (∂₂ψ₁₂, -∂₁ψ₁₂)` and
/// `Δψ₁₂ = ∂₂v₁ - ∂₁v₂`. On the periodic box `ψ` is unique up to the additive
/// constant fixed by the vanishing mean over `B_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamMatrix {
    grid: Grid,
    psi12: ScalarField,
    ball_mean_removed: bool,
}

impl StreamMatrix {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn psi12(&self) -> &ScalarField {
        &self.psi12
    }

    pub fn ball_mean_removed(&self) -> bool {
        self.ball_mean_removed
    }

    /// Entry `ψᵢⱼ` for `i, j ∈ {1, 2}`.
    pub fn entry(&self, i: usize, j: usize) -> ScalarField {
        match (i, j) {
            (1, 2) => self.psi12.clone(),
            (2, 1) => self.psi12.scale(-1.0),
            (1, 1) | (2, 2) => ScalarField::zeros(self.grid),
            _ => panic!("stream matrix index ({i}, {j}) out of range"),
        }
    }

    /// `div ψ`, which reproduces the mean-free part of `v`.
    pub fn divergence(&self, sp: &Spectral) -> VectorField2 {
        sp.perp_gradient(&self.psi12)
    }
}

fn check_solenoidal(sp: &Spectral, v: &VectorField2) -> Result<()> {
    let div = sp.divergence(v).max_abs();
    let scale = v.max_abs();
    if div <= 1e-8 * scale {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "field is not divergence-free: max|div v| = {div:e} vs max|v| = {scale:e}"
        )))
    }
}

pub fn stream_matrix(sp: &Spectral, v: &VectorField2) -> Result<StreamMatrix> {
    sp.grid().check_same(v.grid(), "stream_matrix")?;
    check_solenoidal(sp, v)?;
    let grid = *sp.grid();
    let vort = sp.curl(v);
    // curl of a periodic field is mean-free up to roundoff
    let mean = vort.mean();
    let vort = vort.map(|w| w - mean);
    let psi = sp.inverse_laplacian(&vort)?;
    let c = psi.ball_mean(grid.ball_radius());
    Ok(StreamMatrix {
        grid,
        psi12: psi.map(|p| p - c),
        ball_mean_removed: true,
    })
}

/// `v̄ = div(fψ) = f·v + ψ∇f`, evaluated pointwise with the closed-form
/// derivatives of `f`.
///
/// Outside `B_{2R/3}` the result is exactly `v`, inside `B_{R/2}` exactly 0.
/// `v` is expected mean-free (as every periodic `∇^⊥φ` is); a nonzero mean
/// shows up as a divergence `∇f·mean(v)` in the band.
pub fn truncate_field(sp: &Spectral, v: &VectorField2, f: &CutoffProfile) -> Result<VectorField2> {
    sp.grid().check_same(f.grid(), "truncate_field")?;
    let psi = stream_matrix(sp, v)?;
    Ok(truncate_with(&psi, v, f))
}

pub(crate) fn truncate_with(psi: &StreamMatrix, v: &VectorField2, f: &CutoffProfile) -> VectorField2 {
    let grid = *v.grid();
    let p = psi.psi12.values();
    let (v1, v2) = (v.u1.values(), v.u2.values());
    let mut out1 = vec![0.0; grid.len()];
    let mut out2 = vec![0.0; grid.len()];
    for idx in 0..grid.len() {
        let j = f.jet_at(idx);
        if j.f == 0.0 {
            continue;
        }
        // (ψ∇f)₁ = ψ₁₂∂₂f, (ψ∇f)₂ = ψ₂₁∂₁f
        out1[idx] = j.f * v1[idx] + p[idx] * j.grad[1];
        out2[idx] = j.f * v2[idx] - p[idx] * j.grad[0];
    }
    VectorField2 {
        u1: ScalarField::from_values_unchecked(grid, out1),
        u2: ScalarField::from_values_unchecked(grid, out2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparabilityReport {
    /// `‖(u₀ - v₀)·1_{|x| > R_obs}‖_q`
    pub norm: f64,
    /// The difference vanishes (to roundoff) at every node with `|x| ≥ R`.
    pub compactly_supported_difference: bool,
}

/// Compares `u₀` and `v₀` on the exterior of the default obstacle `B_{R/4}`.
pub fn comparability_report(u0: &VectorField2, v0: &VectorField2, q: f64) -> Result<ComparabilityReport> {
    let grid = *u0.grid();
    grid.check_same(v0.grid(), "comparability_report")?;
    if !(q > 1.0 && q <= 2.0) {
        return Err(Error::InvalidExponent(format!("q = {q} outside (1, 2]")));
    }
    let d = u0.sub(v0);
    let r_obs = grid.obstacle_radius();
    let norm = lp_norm_where(&d, q, |i| !grid.in_ball(i, r_obs))?;
    let scale = u0.max_abs().max(v0.max_abs());
    let tol = 1e-12 * scale;
    let outside_max = (0..grid.len())
        .filter(|&i| !grid.in_ball(i, grid.ball_radius()))
        .map(|i| d.u1.values()[i].hypot(d.u2.values()[i]))
        .fold(0.0, f64::max);
    Ok(ComparabilityReport {
        norm,
        compactly_supported_difference: outside_max <= tol,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    /// `z₀`, carrying the values above the threshold (finite energy).
    pub large_part: VectorField2,
    /// `w₀`, small in weak `L²`.
    pub small_part: VectorField2,
    pub threshold: f64,
    pub weak_norm_of_small: f64,
}

/// Threshold by pointwise magnitude, then Leray-project both parts.
pub fn split_by_height(sp: &Spectral, u0: &VectorField2, threshold: f64) -> Result<SplitResult> {
    sp.grid().check_same(u0.grid(), "split_by_height")?;
    if !(threshold > 0.0) {
        return Err(Error::Precondition(format!("threshold δ = {threshold} must be positive")));
    }
    let (large, small) = raw_split(u0, threshold);
    let small_part = sp.leray_project(&small);
    Ok(SplitResult {
        large_part: sp.leray_project(&large),
        weak_norm_of_small: weak_lp_quasinorm(&small_part, 2.0)?,
        small_part,
        threshold,
    })
}

/// Unprojected split; the two parts sum to `u0` exactly.
pub fn raw_split(u0: &VectorField2, threshold: f64) -> (VectorField2, VectorField2) {
    let big = |i: usize| u0.u1.values()[i].hypot(u0.u2.values()[i]) > threshold;
    (u0.masked(big), u0.masked(|i| !big(i)))
}
