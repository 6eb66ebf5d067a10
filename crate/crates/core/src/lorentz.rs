//! Lebesgue and weak-Lebesgue (Marcinkiewicz) norms of sampled fields, the
//! small-value tail functional, space-time norms and power-law fits.
//!
//! Every norm is a Riemann sum with the node area `dx²` as measure.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField2};

/// Anything whose pointwise magnitude can be integrated.
pub trait Sampled {
    fn grid(&self) -> &Grid;
    fn magnitude_at(&self, idx: usize) -> f64;

    fn magnitudes(&self) -> Vec<f64> {
        (0..self.grid().len()).map(|i| self.magnitude_at(i)).collect()
    }
}

impl Sampled for ScalarField {
    fn grid(&self) -> &Grid {
        ScalarField::grid(self)
    }

    fn magnitude_at(&self, idx: usize) -> f64 {
        self.values()[idx].abs()
    }
}

impl Sampled for VectorField2 {
    fn grid(&self) -> &Grid {
        VectorField2::grid(self)
    }

    fn magnitude_at(&self, idx: usize) -> f64 {
        self.u1.values()[idx].hypot(self.u2.values()[idx])
    }
}

fn check_p(p: f64, strict_above_one: bool) -> Result<()> {
    let ok = p.is_finite() && if strict_above_one { p > 1.0 } else { p >= 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidExponent(format!(
            "p = {p} outside {}",
            if strict_above_one { "(1, ∞)" } else { "[1, ∞)" }
        )))
    }
}

/// `(∑|f|ᵖ dx²)^{1/p}`, for `1 ≤ p < ∞`.
pub fn lp_norm(f: &impl Sampled, p: f64) -> Result<f64> {
    lp_norm_where(f, p, |_| true)
}

/// Lᵖ norm over the nodes selected by `keep`.
pub fn lp_norm_where(f: &impl Sampled, p: f64, keep: impl Fn(usize) -> bool) -> Result<f64> {
    check_p(p, false)?;
    let grid = f.grid();
    // Scale by the max to keep |f|ᵖ representable for large p.
    let mags: Vec<f64> = (0..grid.len())
        .filter(|&i| keep(i))
        .map(|i| f.magnitude_at(i))
        .collect();
    let peak = mags.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = mags.iter().map(|&v| (v / peak).powf(p)).sum();
    Ok(peak * (sum * grid.cell_area()).powf(1.0 / p))
}

/// Area of `{|f| > λ}`: `dx²·#{nodes with |f| > λ}`.
pub fn distribution_function(f: &impl Sampled, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("level λ = {lambda} must be positive")));
    }
    let grid = f.grid();
    let count = (0..grid.len())
        .filter(|&i| f.magnitude_at(i) > lambda)
        .count();
    Ok(count as f64 * grid.cell_area())
}

/// Weak-Lᵖ quasinorm `sup_λ λ·μ(λ)^{1/p}` via the decreasing rearrangement:
/// `max_k |f|₍ₖ₎·(k·dx²)^{1/p}` with `|f|₍ₖ₎` the k-th largest magnitude.
pub fn weak_lp_quasinorm(f: &impl Sampled, p: f64) -> Result<f64> {
    weak_lp_quasinorm_where(f, p, |_| true)
}

pub fn weak_lp_quasinorm_where(
    f: &impl Sampled,
    p: f64,
    keep: impl Fn(usize) -> bool,
) -> Result<f64> {
    check_p(p, true)?;
    let grid = f.grid();
    let mut mags: Vec<f64> = (0..grid.len())
        .filter(|&i| keep(i))
        .map(|i| f.magnitude_at(i))
        .collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let da = grid.cell_area();
    Ok(mags
        .iter()
        .enumerate()
        .map(|(k, &m)| m * ((k + 1) as f64 * da).powf(1.0 / p))
        .fold(0.0, f64::max))
}

/// Points of the dyadic level grid, 8 per octave, starting at `lambda_min`.
pub fn dyadic_levels(lambda_min: f64, lambda_max: f64) -> Result<Vec<f64>> {
    if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
        return Err(Error::Precondition(format!(
            "need 0 < lambda_min < lambda_max, got [{lambda_min}, {lambda_max}]"
        )));
    }
    const PER_OCTAVE: f64 = 8.0;
    let steps = (PER_OCTAVE * (lambda_max / lambda_min).log2() + 1e-9).floor() as usize;
    let levels: Vec<f64> = (0..=steps)
        .map(|i| lambda_min * (i as f64 / PER_OCTAVE).exp2())
        .collect();
    if levels.is_empty() {
        return Err(Error::Precondition("empty λ grid".into()));
    }
    Ok(levels)
}

/// `max_λ λ·μ(λ)^{1/p}` over the dyadic grid in `[lambda_min, lambda_max]`.
///
/// On a bounded box `μ(λ)` saturates at the box area, so the functional is
/// only meaningful for `lambda_min` above [`far_field_floor`].
pub fn small_value_tail(f: &impl Sampled, p: f64, lambda_min: f64, lambda_max: f64) -> Result<f64> {
    check_p(p, true)?;
    let levels = dyadic_levels(lambda_min, lambda_max)?;
    let mut mags = f.magnitudes();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let da = f.grid().cell_area();
    Ok(levels
        .iter()
        .map(|&lam| {
            // number of magnitudes strictly above lam in the descending list
            let count = mags.partition_point(|&m| m > lam);
            lam * (count as f64 * da).powf(1.0 / p)
        })
        .fold(0.0, f64::max))
}

/// Largest magnitude on the box edge `x₁ = -L` or `x₂ = -L`.
pub fn far_field_floor(f: &impl Sampled) -> f64 {
    let n = f.grid().n_points();
    (0..n)
        .flat_map(|i| [i, i * n])
        .map(|idx| f.magnitude_at(idx))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorentzReport {
    pub p: f64,
    pub strong_norm: f64,
    pub weak_quasinorm: f64,
    pub tail_functional: f64,
    pub lambda_grid: Vec<f64>,
    pub far_field_floor: f64,
    /// Set when `lambda_min` does not clear the far-field floor, in which case
    /// the tail functional is dominated by the box truncation.
    pub tail_truncated: bool,
}

impl LorentzReport {
    pub fn compute(f: &impl Sampled, p: f64, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        let lambda_grid = dyadic_levels(lambda_min, lambda_max)?;
        let floor = far_field_floor(f);
        Ok(LorentzReport {
            p,
            strong_norm: lp_norm(f, p)?,
            weak_quasinorm: weak_lp_quasinorm(f, p)?,
            tail_functional: small_value_tail(f, p, lambda_min, lambda_max)?,
            lambda_grid,
            far_field_floor: floor,
            tail_truncated: lambda_min <= floor,
        })
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p={}", self.p);
        let _ = writeln!(s, "strong_norm={:e}", self.strong_norm);
        let _ = writeln!(s, "weak_quasinorm={:e}", self.weak_quasinorm);
        let _ = writeln!(s, "tail_functional={:e}", self.tail_functional);
        let _ = writeln!(s, "lambda_min={:e}", self.lambda_grid[0]);
        let _ = writeln!(s, "lambda_max={:e}", self.lambda_grid[self.lambda_grid.len() - 1]);
        let _ = writeln!(s, "lambda_points={}", self.lambda_grid.len());
        let _ = writeln!(s, "far_field_floor={:e}", self.far_field_floor);
        let _ = writeln!(s, "tail_truncated={}", self.tail_truncated);
        s
    }
}

/// Trapezoidal `(∫ ‖f(t)‖₄⁴ dt)^{1/4}` over equally spaced snapshots.
pub fn spacetime_l4_norm<'a, F: Sampled + 'a>(
    snapshots: impl IntoIterator<Item = (f64, &'a F)>,
) -> Result<f64> {
    let samples: Vec<(f64, f64)> = snapshots
        .into_iter()
        .map(|(t, f)| lp_norm(f, 4.0).map(|n| (t, n.powi(4))))
        .collect::<Result<_>>()?;
    spacetime_norm_from_powers(&samples).map(|v| v.powf(0.25))
}

/// Trapezoid of `(tᵢ, yᵢ)` with equal spacing enforced.
pub(crate) fn spacetime_norm_from_powers(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Precondition(format!(
            "space-time norm needs at least 2 snapshots, got {}",
            samples.len()
        )));
    }
    let dt = samples[1].0 - samples[0].0;
    if !(dt > 0.0) {
        return Err(Error::Precondition("snapshot times must increase".into()));
    }
    for w in samples.windows(2) {
        let step = w[1].0 - w[0].0;
        if (step - dt).abs() > 1e-9 * dt.max(w[1].0.abs()) {
            return Err(Error::Precondition(format!(
                "snapshots not equally spaced: {step} vs {dt}"
            )));
        }
    }
    let last = samples.len() - 1;
    let sum: f64 = samples
        .iter()
        .enumerate()
        .map(|(i, &(_, y))| if i == 0 || i == last { 0.5 * y } else { y })
        .sum();
    Ok(sum * dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub constant: f64,
    /// Coefficient of determination of the log-log regression.
    pub quality: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// A `(tᵢ, yᵢ)` time series with the exponent the theory predicts for it.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub target_exponent: f64,
    pub fit: Option<PowerLawFit>,
    pub flags: Vec<String>,
}

impl DecaySeries {
    pub fn new(name: impl Into<String>, target_exponent: f64) -> Self {
        DecaySeries {
            name: name.into(),
            times: Vec::new(),
            values: Vec::new(),
            target_exponent,
            fit: None,
            flags: Vec::new(),
        }
    }

    pub fn from_samples(
        name: impl Into<String>,
        target_exponent: f64,
        times: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let mut s = DecaySeries::new(name, target_exponent);
        for (t, v) in times.into_iter().zip(values) {
            s.push(t, v)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::RejectedInput(format!(
                    "series times must increase strictly: {t} after {last}"
                )));
            }
        }
        if !t.is_finite() || !value.is_finite() {
            return Err(Error::RejectedInput(format!("non-finite sample ({t}, {value})")));
        }
        self.times.push(t);
        self.values.push(value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples whose time lies in `[t0, t1]`.
    pub fn window(&self, t0: f64, t1: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| (t, v))
            .filter(move |&(t, _)| t >= t0 && t <= t1)
    }

    pub fn first_value(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn last_value(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Final over initial value inside the window.
    pub fn ratio_in(&self, t0: f64, t1: f64) -> Option<f64> {
        let pts: Vec<_> = self.window(t0, t1).collect();
        let (first, last) = (pts.first()?.1, pts.last()?.1);
        (first != 0.0).then(|| last / first)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// True when no sample in the window exceeds its predecessor by more than
    /// `rel_tol` of the predecessor.
    pub fn is_nonincreasing_in(&self, t0: f64, t1: f64, rel_tol: f64) -> bool {
        let pts: Vec<_> = self.window(t0, t1).collect();
        pts.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + rel_tol))
    }

    /// Least-squares line through `(ln t, ln y)` over the samples in the window.
    pub fn fit_decay(mut self, t0: f64, t1: f64) -> Result<Self> {
        self.fit = Some(fit_power_law(self.window(t0, t1))?.with_window(t0, t1));
        Ok(self)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,value,target_exponent")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:e},{v:e},{}", self.target_exponent)?;
        }
        Ok(())
    }

    pub fn read_csv(name: impl Into<String>, r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let bad = |line: usize, why: String| Error::RejectedInput(format!("series CSV line {line}: {why}"));
        match lines.next() {
            Some(Ok(h)) if h.trim() == "t,value,target_exponent" => {}
            _ => return Err(bad(1, "missing header `t,value,target_exponent`".into())),
        }
        let mut s = DecaySeries::new(name, 0.0);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| bad(i + 2, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(i + 2, e.to_string()))?;
            if cols.len() != 3 {
                return Err(bad(i + 2, format!("expected 3 columns, got {}", cols.len())));
            }
            s.target_exponent = cols[2];
            s.push(cols[0], cols[1])?;
        }
        Ok(s)
    }
}

impl PowerLawFit {
    fn with_window(mut self, t0: f64, t1: f64) -> Self {
        self.window = (t0, t1);
        self
    }
}

/// Ordinary least squares of `ln y` on `ln t`; needs ≥ 5 positive samples.
pub fn fit_power_law(samples: impl IntoIterator<Item = (f64, f64)>) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = samples.into_iter().collect();
    if pts.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 samples in the window, got {}",
            pts.len()
        )));
    }
    if let Some(&(t, y)) = pts.iter().find(|&&(t, y)| !(t > 0.0 && y > 0.0)) {
        return Err(Error::Fit(format!(
            "log-log fit needs positive samples, got ({t}, {y})"
        )));
    }
    let (t0, t1) = (pts[0].0, pts[pts.len() - 1].0);
    let m = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all samples share one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_tot: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // A flat series is fitted perfectly by slope 0.
    let quality = if ss_tot <= 1e-30 * m {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        exponent: slope,
        constant: intercept.exp(),
        quality,
        window: (t0, t1),
        samples: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Grid {
        Grid::new(n, l, l / 4.0).unwrap()
    }

    #[test]
    fn zero_field_norms() {
        let g = grid(32, 4.0);
        let z = ScalarField::zeros(g);
        assert_eq!(lp_norm(&z, 2.0).unwrap(), 0.0);
        assert_eq!(weak_lp_quasinorm(&z, 2.0).unwrap(), 0.0);
        assert_eq!(small_value_tail(&z, 2.0, 0.1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn exponent_range_checked() {
        let g = grid(32, 4.0);
        let z = ScalarField::zeros(g);
        assert!(lp_norm(&z, 0.5).is_err());
        assert!(lp_norm(&z, f64::INFINITY).is_err());
        assert!(weak_lp_quasinorm(&z, 1.0).is_err());
        assert!(distribution_function(&z, 0.0).is_err());
        assert!(small_value_tail(&z, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_l2_norm() {
        // ∫ e^{-2|x|²} = π/2
        let g = grid(256, 8.0);
        let f = ScalarField::from_fn(g, |x1, x2| (-(x1 * x1 + x2 * x2)).exp());
        let n = lp_norm(&f, 2.0).unwrap();
        assert!((n - (PI / 2.0).sqrt()).abs() < 1e-4, "{n}");
    }

    #[test]
    fn vector_norm_uses_euclidean_magnitude() {
        let g = grid(32, 4.0);
        let v = VectorField2::from_fn(g, |_, _| (3.0, 4.0));
        let area = 64.0;
        assert!((lp_norm(&v, 1.0).unwrap() - 5.0 * area).abs() < 1e-9);
    }

    #[test]
    fn level_above_max_has_empty_set() {
        let g = grid(32, 4.0);
        let f = ScalarField::from_fn(g, |x1, _| x1.sin());
        assert_eq!(distribution_function(&f, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn inverse_radius_level_set() {
        // {1/|x| > 1} = unit disk
        let g = grid(512, 4.0);
        let f = ScalarField::from_fn(g, |x1, x2| 1.0 / x1.hypot(x2).max(1e-3));
        let mu = distribution_function(&f, 1.0).unwrap();
        let staircase = 2.0 * PI * g.dx() * 2.0;
        assert!((mu - PI).abs() < staircase, "{mu}");
    }

    #[test]
    fn dyadic_grid_has_eight_per_octave() {
        let lv = dyadic_levels(1.0, 4.0).unwrap();
        assert_eq!(lv.len(), 17);
        assert!((lv[8] - 2.0).abs() < 1e-12);
        assert!((lv[16] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tail_of_indicator() {
        // indicator of a disk, levels below 1: sup is at the top level
        let g = grid(128, 4.0);
        let f = ScalarField::from_fn(g, |x1, x2| if x1.hypot(x2) < 1.0 { 1.0 } else { 0.0 });
        let area = distribution_function(&f, 0.5).unwrap();
        let levels = dyadic_levels(0.1, 0.9).unwrap();
        let top = levels[levels.len() - 1];
        let expect = top * area.sqrt();
        let got = small_value_tail(&f, 2.0, 0.1, 0.9).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn time_constant_spacetime_norm() {
        let g = grid(32, 4.0);
        let f = ScalarField::from_fn(g, |x1, x2| (x1 * 0.3).cos() + x2 * 0.01);
        let snaps: Vec<(f64, &ScalarField)> = (0..11).map(|i| (i as f64 * 0.3, &f)).collect();
        let got = spacetime_l4_norm(snaps).unwrap();
        let expect = 3.0f64.powf(0.25) * lp_norm(&f, 4.0).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn spacetime_norm_needs_two_equal_steps() {
        assert!(spacetime_norm_from_powers(&[(0.0, 1.0)]).is_err());
        assert!(spacetime_norm_from_powers(&[(0.0, 1.0), (1.0, 1.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn decaying_spacetime_norm() {
        // ‖f(t)‖₄⁴ = 1/t on [1,2] integrates to ln 2
        let pts: Vec<(f64, f64)> = (0..=100).map(|i| 1.0 + i as f64 / 100.0).map(|t| (t, 1.0 / t)).collect();
        let v = spacetime_norm_from_powers(&pts).unwrap().powf(0.25);
        assert!((v / 2f64.ln().powf(0.25) - 1.0).abs() < 0.01);
    }

    #[test]
    fn exact_power_law_fit() {
        let ts: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.5).collect();
        let ys: Vec<f64> = ts.iter().map(|t| t.powf(-0.5)).collect();
        let s = DecaySeries::from_samples("x", -0.5, ts, ys).unwrap().fit_decay(0.0, 100.0).unwrap();
        let fit = s.fit.unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-12);
        assert!((fit.quality - 1.0).abs() < 1e-12);
        assert!((fit.constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_fits_zero_exponent() {
        let ts: Vec<f64> = (1..10).map(f64::from).collect();
        let s = DecaySeries::from_samples("c", 0.0, ts, vec![2.0; 9]).unwrap().fit_decay(0.0, 10.0).unwrap();
        let fit = s.fit.unwrap();
        assert!(fit.exponent.abs() < 1e-12);
        assert_eq!(fit.quality, 1.0);
    }

    #[test]
    fn fit_rejects_nonpositive_and_short_windows() {
        let ts: Vec<f64> = (1..10).map(f64::from).collect();
        let mut ys = vec![1.0; 9];
        ys[4] = 0.0;
        let s = DecaySeries::from_samples("z", 0.0, ts.clone(), ys).unwrap();
        assert!(matches!(s.fit_decay(0.0, 10.0), Err(Error::Fit(_))));
        let s = DecaySeries::from_samples("s", 0.0, ts, vec![1.0; 9]).unwrap();
        assert!(s.fit_decay(0.0, 3.5).is_err());
    }

    #[test]
    fn series_times_must_increase() {
        let mut s = DecaySeries::new("x", 0.0);
        s.push(1.0, 1.0).unwrap();
        assert!(s.push(1.0, 2.0).is_err());
        assert!(s.push(0.5, 2.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = DecaySeries::from_samples("h", -0.25, vec![0.5, 1.0, 2.0], vec![1.0, 0.5, 0.25]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,value,target_exponent\n"));
        let back = DecaySeries::read_csv("h", buf.as_slice()).unwrap();
        assert_eq!(back.times, s.times);
        assert_eq!(back.values, s.values);
        assert_eq!(back.target_exponent, -0.25);
    }

    #[test]
    fn report_flags_truncated_tail() {
        let g = grid(64, 4.0);
        let f = ScalarField::from_fn(g, |x1, x2| 1.0 / (1.0 + x1 * x1 + x2 * x2));
        let floor = far_field_floor(&f);
        let r = LorentzReport::compute(&f, 2.0, floor * 0.5, 1.0).unwrap();
        assert!(r.tail_truncated);
        let r = LorentzReport::compute(&f, 2.0, floor * 2.0, 1.0).unwrap();
        assert!(!r.tail_truncated);
        assert!(r.weak_quasinorm <= r.strong_norm);
        assert!(r.to_key_value().contains("tail_truncated=false"));
    }
}
