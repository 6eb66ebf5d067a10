//! Uniform periodic sampling of the square `[-L, L)²` standing in for the plane.
//!
//! Node `(i, j)` sits at `x₁ = -L + i·dx`, `x₂ = -L + j·dx` and is stored at
//! flat index `i·n + j` (row-major, rows run along `x₁`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    n_points: usize,
    half_width: f64,
    ball_radius: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    n_points: usize,
    half_width: f64,
    ball_radius: f64,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(s: GridSpec) -> Result<Self> {
        Grid::new(s.n_points, s.half_width, s.ball_radius)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            n_points: g.n_points,
            half_width: g.half_width,
            ball_radius: g.ball_radius,
        }
    }
}

impl Grid {
    pub fn new(n_points: usize, half_width: f64, ball_radius: f64) -> Result<Self> {
        if n_points < 32 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and at least 32, got {n_points}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if !(ball_radius.is_finite() && ball_radius > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "ball_radius must be positive, got {ball_radius}"
            )));
        }
        if 4.0 * ball_radius > half_width * (1.0 + 1e-12) {
            return Err(Error::InvalidGrid(format!(
                "4·ball_radius = {} exceeds half_width = {half_width}",
                4.0 * ball_radius
            )));
        }
        Ok(Grid {
            n_points,
            half_width,
            ball_radius,
        })
    }

    /// Grid with the largest admissible ball, `R = L/4`.
    pub fn with_quarter_ball(n_points: usize, half_width: f64) -> Result<Self> {
        Self::new(n_points, half_width, half_width / 4.0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    /// Area element `dx²` of one node.
    pub fn cell_area(&self) -> f64 {
        let dx = self.dx();
        dx * dx
    }

    pub fn len(&self) -> usize {
        self.n_points * self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    /// Physical position of the node at flat index `idx`.
    pub fn position(&self, idx: usize) -> (f64, f64) {
        let n = self.n_points;
        (self.coord(idx / n), self.coord(idx % n))
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let (x1, x2) = self.position(idx);
        x1.hypot(x2)
    }

    /// Discrete ball membership: a node is inside iff its center satisfies `|x| < r`.
    pub fn in_ball(&self, idx: usize, r: f64) -> bool {
        self.radius(idx) < r
    }

    /// Signed wavenumber index of FFT slot `m`, in `[-n/2, n/2)`.
    pub fn mode_index(&self, m: usize) -> i64 {
        let n = self.n_points as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Angular wavenumber of FFT slot `m`: `π·mode/L`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        std::f64::consts::PI * self.mode_index(m) as f64 / self.half_width
    }

    /// Upper end of the valid time window, `(L/4)²`: beyond it periodic images
    /// reach the region of interest.
    pub fn box_time(&self) -> f64 {
        (self.half_width / 4.0).powi(2)
    }

    /// Default obstacle radius `R/4`, inside `B_{R/2}` as required.
    pub fn obstacle_radius(&self) -> f64 {
        self.ball_radius / 4.0
    }

    pub(crate) fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self, other
            )))
        }
    }
}

/// Real samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::RejectedInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::RejectedInput(format!(
                "non-finite sample {} at index {i}",
                values[i]
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Skips the finiteness scan; for values produced by our own operators.
    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x1, x2) = grid.position(idx);
                f(x1, x2)
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField::from_values_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination; both fields must share the grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "zip_map on mismatched grids");
        ScalarField::from_values_unchecked(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Riemann sum `∑ f·dx²` over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Discrete inner product `∑ f·g·dx²`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product on mismatched grids");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area()
    }

    /// Mean over the nodes of the discrete ball `B_r`.
    pub fn ball_mean(&self, r: f64) -> f64 {
        let (sum, count) = self
            .values
            .iter()
            .enumerate()
            .filter(|(idx, _)| self.grid.in_ball(*idx, r))
            .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Values along the `x₂ = x₂[j]` line, as `(x₁, value)` pairs.
    pub fn slice_x1(&self, j: usize) -> Vec<(f64, f64)> {
        let n = self.grid.n_points();
        (0..n)
            .map(|i| (self.grid.coord(i), self.values[i * n + j]))
            .collect()
    }
}

/// Planar vector field `(u₁, u₂)` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl VectorField2 {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self> {
        u1.grid.check_same(&u2.grid, "vector components")?;
        Ok(VectorField2 { u1, u2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField2 {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (a, b): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .map(|idx| {
                let (x1, x2) = grid.position(idx);
                f(x1, x2)
            })
            .unzip();
        VectorField2 {
            u1: ScalarField::from_values_unchecked(grid, a),
            u2: ScalarField::from_values_unchecked(grid, b),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        self.u1.zip_map(&self.u2, f64::hypot)
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn add(&self, other: &VectorField2) -> Self {
        VectorField2 {
            u1: self.u1.add(&other.u1),
            u2: self.u2.add(&other.u2),
        }
    }

    pub fn sub(&self, other: &VectorField2) -> Self {
        VectorField2 {
            u1: self.u1.sub(&other.u1),
            u2: self.u2.sub(&other.u2),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        VectorField2 {
            u1: self.u1.scale(c),
            u2: self.u2.scale(c),
        }
    }

    /// Multiplies both components by a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Self {
        VectorField2 {
            u1: self.u1.mul(s),
            u2: self.u2.mul(s),
        }
    }

    /// Discrete inner product `∑ u·v·dx²`.
    pub fn inner(&self, other: &VectorField2) -> f64 {
        self.u1.inner(&other.u1) + self.u2.inner(&other.u2)
    }

    /// Kinetic energy `∑|u|²·dx²` (no factor ½).
    pub fn energy(&self) -> f64 {
        self.inner(self)
    }

    /// Zeroes every node where `keep` is false.
    pub fn masked(&self, keep: impl Fn(usize) -> bool) -> Self {
        let grid = *self.grid();
        let mask = |f: &ScalarField| {
            ScalarField::from_values_unchecked(
                grid,
                f.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if keep(i) { v } else { 0.0 })
                    .collect(),
            )
        };
        VectorField2 {
            u1: mask(&self.u1),
            u2: mask(&self.u2),
        }
    }

    /// Rotation by +π/2 about the origin: `R·u(Rᵀx)`.
    ///
    /// Exact on the grid because the node set `-L + i·dx` is closed under the
    /// map `(x₁, x₂) ↦ (-x₂, x₁)` modulo the period.
    pub fn rotate_quarter(&self) -> Self {
        let grid = *self.grid();
        let n = grid.n_points();
        // Node (i, j) ↦ position (-x₂, x₁); index of -x₂ is (n - j) mod n.
        let src = |i: usize, j: usize| -> usize {
            // value at new node (i, j) comes from old node at Rᵀ x = (x₂, -x₁)
            let si = j;
            let sj = (n - i) % n;
            si * n + sj
        };
        let mut a = vec![0.0; grid.len()];
        let mut b = vec![0.0; grid.len()];
        for i in 0..n {
            for j in 0..n {
                let s = src(i, j);
                let (v1, v2) = (self.u1.values[s], self.u2.values[s]);
                a[i * n + j] = -v2;
                b[i * n + j] = v1;
            }
        }
        VectorField2 {
            u1: ScalarField::from_values_unchecked(grid, a),
            u2: ScalarField::from_values_unchecked(grid, b),
        }
    }
}

/// Fourier coefficients on a grid, FFT slot order in both axes.
///
/// Forward transforms are unnormalized, `F(k) = ∑ f(x)e^{-ik·x}`; the inverse
/// divides by `n²`. A constant field `c` therefore maps to `F(0) = c·n²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub(crate) fn new(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at signed mode `(m₁, m₂)`, each in `[-n/2, n/2)`.
    pub fn mode(&self, m1: i64, m2: i64) -> Complex64 {
        let n = self.grid.n_points() as i64;
        let slot = |m: i64| m.rem_euclid(n) as usize;
        self.coeffs[slot(m1) * n as usize + slot(m2)]
    }

    /// Largest deviation from `F(-k) = conj(F(k))`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n_points();
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let a = self.coeffs[i * n + j];
                let b = self.coeffs[((n - i) % n) * n + (n - j) % n];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst / scale
    }
}
