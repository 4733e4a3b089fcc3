//! Uniform 1-D Dirichlet grids, difference operators, quadrature and pairings.
//!
//! All fields live at the `n` interior nodes of `(0, L)`; the boundary values
//! are implicitly zero. Gradients live on the `n + 1` cells between nodes
//! (boundary nodes included), second differences live back on the nodes.
//! Functionals mixing `|u|` and `|∇u|` collocate `u` at cell midpoints so
//! that both factors share the same quadrature points; pure-`|u|` functionals
//! use the rectangle rule at the nodes.

use crate::{Error, Result};

/// Uniform partition of the interval `(0, L)` with homogeneous Dirichlet
/// boundary: `n` interior nodes, spacing `L / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    n: usize,
    spacing: f64,
}

impl Grid1D {
    /// Build a grid over `(0, length)` with `n` interior nodes.
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidSpec(format!(
                "grid needs at least 3 interior nodes, got {n}"
            )));
        }
        Ok(Self {
            length,
            n,
            spacing: length / (n + 1) as f64,
        })
    }

    /// Domain length `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing `h = L / (n + 1)`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Coordinate of interior node `i` (0-based), `x_{i+1} = (i + 1) h`.
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing
    }

    /// Iterator over interior node coordinates.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }
}

/// Discrete function on the interior nodes of a [`Grid1D`]; boundary values
/// are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    /// Wrap interior node values. Length must match the grid and all entries
    /// must be finite.
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(grid.n(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field construction"));
        }
        Ok(Self { grid, values })
    }

    /// The zero field.
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n()],
        }
    }

    /// Sample a function of `x` at the interior nodes.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    /// Samples of the first Dirichlet mode `sin(πx / L)`.
    pub fn first_mode(grid: Grid1D) -> Self {
        let l = grid.length();
        Self::from_fn(grid, |x| (std::f64::consts::PI * x / l).sin())
            .expect("sine samples are finite")
    }

    /// Owning grid.
    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Interior node values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable interior node values.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// True if every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Discrete L² norm, `(h Σ u_i²)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Mean of the interior values.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Scale in place.
    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    /// `self + a * other`, same grid.
    pub fn add_scaled(&self, a: f64, other: &Field) -> Result<Field> {
        if self.grid.n() != other.grid.n() {
            return Err(Error::GridMismatch(self.grid.n(), other.grid.n()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Field::new(self.grid, values)
    }

    /// Normalize to the unit L² sphere. Errors on the zero field.
    pub fn normalized(&self) -> Result<Field> {
        let nrm = self.norm_l2();
        if nrm == 0.0 {
            return Err(Error::ZeroField);
        }
        let mut out = self.clone();
        out.scale(1.0 / nrm);
        Ok(out)
    }

    /// Max-norm distance to another field on the same grid.
    pub fn max_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Forward differences on raw node values with zero Dirichlet extension:
/// `n + 1` cell slopes for `n` interior values.
pub(crate) fn diff_raw(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    for &v in values {
        out.push((v - prev) / h);
        prev = v;
    }
    out.push((0.0 - prev) / h);
    out
}

/// Second differences on raw node values with zero Dirichlet extension.
pub(crate) fn second_diff_raw(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let h2 = h * h;
    (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { values[i - 1] };
            let right = if i + 1 == n { 0.0 } else { values[i + 1] };
            (right - 2.0 * values[i] + left) / h2
        })
        .collect()
}

/// Cell-midpoint values `(u_i + u_{i+1}) / 2` with zero Dirichlet extension:
/// `n + 1` values collocated with the forward differences.
pub(crate) fn midpoints_raw(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    for &v in values {
        out.push(0.5 * (prev + v));
        prev = v;
    }
    out.push(0.5 * prev);
    out
}

/// Discrete gradient: cell slopes `(u_i − u_{i−1}) / h`, `n + 1` entries,
/// with `u_0 = u_{n+1} = 0`.
pub fn forward_diff(u: &Field) -> Vec<f64> {
    diff_raw(u.values(), u.grid().spacing())
}

/// Discrete Laplacian at the nodes, `(u_{i+1} − 2 u_i + u_{i−1}) / h²`, with
/// zero boundary extension.
pub fn second_diff(u: &Field) -> Vec<f64> {
    second_diff_raw(u.values(), u.grid().spacing())
}

/// Rectangle-rule Lp norm `(h Σ |v_i|^p)^{1/p}`. Rejects `p < 1`.
pub fn lp_norm(vals: &[f64], p: f64, spacing: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::NormExponent(p));
    }
    let sum: f64 = vals.iter().map(|v| v.abs().powf(p)).sum();
    Ok((spacing * sum).powf(1.0 / p))
}

/// Discrete L² duality pairing `h Σ u_i w_i`. Requires matching grids.
pub fn pairing(u: &Field, w: &Field) -> Result<f64> {
    if u.grid().n() != w.grid().n() {
        return Err(Error::GridMismatch(u.grid().n(), w.grid().n()));
    }
    Ok(u.grid().spacing()
        * u.values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a * b)
            .sum::<f64>())
}
