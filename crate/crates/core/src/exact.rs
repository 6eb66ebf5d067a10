//! Lamb-Oseen vortex `αΘ(t)` and the self-similar rescaling test.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField2};
use crate::lorentz::{lp_norm, DecaySeries};
use crate::solver::Trajectory;
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OseenParams {
    /// Circulation multiple, equal to the total vorticity mass.
    pub alpha: f64,
    /// Regularizing time: data at `t = 0` is replaced by `Θ(core_time)`.
    pub core_time: f64,
}

impl OseenParams {
    pub fn new(alpha: f64, core_time: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::RejectedInput(format!("alpha = {alpha} is not finite")));
        }
        if !(core_time > 0.0 && core_time.is_finite()) {
            return Err(Error::RejectedInput(format!("core_time = {core_time} must be positive")));
        }
        Ok(OseenParams { alpha, core_time })
    }

    /// `t_c = 4dx²`, so the core spans a couple of cells.
    pub fn with_default_core(alpha: f64, grid: &Grid) -> Result<Self> {
        Self::new(alpha, default_core_time(grid))
    }
}

pub fn default_core_time(grid: &Grid) -> f64 {
    4.0 * grid.dx() * grid.dx()
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("Lamb-Oseen time t = {t} must be positive")))
    }
}

/// `αΘ(t, x)` at a point, `Θ = x^⊥/(2π|x|²)(1 - e^{-|x|²/4t})`, `x^⊥ = (x₂, -x₁)`.
pub fn theta_at(alpha: f64, t: f64, x1: f64, x2: f64) -> (f64, f64) {
    let r2 = x1 * x1 + x2 * x2;
    let g = if r2 == 0.0 {
        1.0 / (4.0 * t)
    } else {
        -(-r2 / (4.0 * t)).exp_m1() / r2
    };
    let c = alpha * g / (2.0 * PI);
    (c * x2, -c * x1)
}

/// `α(4πt)^{-1}e^{-|x|²/4t}` at a point.
pub fn vorticity_at(alpha: f64, t: f64, x1: f64, x2: f64) -> f64 {
    alpha / (4.0 * PI * t) * (-(x1 * x1 + x2 * x2) / (4.0 * t)).exp()
}

pub fn lamb_oseen_velocity(params: &OseenParams, t: f64, grid: &Grid) -> Result<VectorField2> {
    check_time(t)?;
    let a = params.alpha;
    Ok(VectorField2::from_fn(*grid, |x1, x2| theta_at(a, t, x1, x2)))
}

pub fn lamb_oseen_vorticity(params: &OseenParams, t: f64, grid: &Grid) -> Result<ScalarField> {
    check_time(t)?;
    let a = params.alpha;
    Ok(ScalarField::from_fn(*grid, |x1, x2| vorticity_at(a, t, x1, x2)))
}

/// Mollified `αΘ₀`: the vortex at `t = core_time`.
pub fn initial_vortex(params: &OseenParams, grid: &Grid) -> VectorField2 {
    let a = params.alpha;
    let t = params.core_time;
    VectorField2::from_fn(*grid, |x1, x2| theta_at(a, t, x1, x2))
}

/// Periodic counterpart of `αΘ(t)`: the Biot-Savart velocity of the
/// (mean-free) Gaussian vorticity. Unlike the sampled closed form it is
/// smooth across the box edge, so spectral operators act on it exactly.
pub fn periodic_lamb_oseen_velocity(sp: &Spectral, params: &OseenParams, t: f64) -> Result<VectorField2> {
    let omega = lamb_oseen_vorticity(params, t, sp.grid())?;
    Ok(sp.biot_savart(&omega))
}

/// `tᵢ^{1/2-1/p}‖v(tᵢ)‖ₚ`, constant in time for a self-similar flow.
pub fn self_similar_series<'a>(
    snapshots: impl IntoIterator<Item = (f64, &'a VectorField2)>,
    p: f64,
) -> Result<DecaySeries> {
    let mut s = DecaySeries::new(format!("self_similar_p{p}"), 0.0);
    for (t, v) in snapshots {
        if !(t > 0.0) {
            return Err(Error::Precondition(format!("snapshot time {t} must be positive")));
        }
        s.push(t, t.powf(0.5 - 1.0 / p) * lp_norm(v, p)?)?;
    }
    Ok(s)
}

/// `self_similar_series` over the positive-time snapshots of a trajectory.
pub fn self_similar_residual(traj: &Trajectory, p: f64) -> Result<DecaySeries> {
    let sp = Spectral::new(traj.config.grid);
    let snaps: Vec<(f64, VectorField2)> = traj
        .snapshots
        .iter()
        .filter(|s| s.time > 0.0)
        .map(|s| (s.time, s.velocity_field(&sp)))
        .collect();
    self_similar_series(snaps.iter().map(|(t, v)| (*t, v)), p)
}
