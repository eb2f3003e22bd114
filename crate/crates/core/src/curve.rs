use serde::Serialize;

use crate::error::{Error, Result};

/// A function of time sampled on a strictly increasing grid.
///
/// Probability tails produced by this crate start at `t = 0` with value 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TailCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::invalid("tail curve needs at least one point"));
        }
        if grid.len() != values.len() {
            return Err(Error::invalid(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid[0] < 0.0 || grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("grid points must be finite and non-negative"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tail curve values must be finite"));
        }
        Ok(TailCurve { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.grid.last().expect("non-empty")
    }

    /// Linear interpolation; flat extrapolation on both sides.
    pub fn value_at(&self, t: f64) -> f64 {
        let g = &self.grid;
        if t <= g[0] {
            return self.values[0];
        }
        if t >= self.last_time() {
            return *self.values.last().expect("non-empty");
        }
        let i = g.partition_point(|&x| x <= t);
        let (t0, t1) = (g[i - 1], g[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Trapezoid estimate of `∫ tⁿ value(t) dt` over `[grid[0], upto]`.
    pub fn moment_integral(&self, n: u32, upto: f64) -> f64 {
        let g = &self.grid;
        let weighted = |t: f64, v: f64| t.powi(n as i32) * v;
        let mut acc = 0.0;
        for i in 1..g.len() {
            let (t0, t1) = (g[i - 1], g[i]);
            if t0 >= upto {
                break;
            }
            let (v0, v1) = (self.values[i - 1], self.values[i]);
            if t1 <= upto {
                acc += 0.5 * (t1 - t0) * (weighted(t0, v0) + weighted(t1, v1));
            } else {
                let v_end = v0 + (v1 - v0) * (upto - t0) / (t1 - t0);
                acc += 0.5 * (upto - t0) * (weighted(t0, v0) + weighted(upto, v_end));
            }
        }
        acc
    }

    /// Cumulative trapezoid integral aligned with the grid (first entry 0).
    pub fn cumulative_integral(&self) -> Vec<f64> {
        cumulative_trapezoid(&self.grid, &self.values)
    }

    /// `max |a - b|` over grid points; both curves must share a grid.
    pub fn sup_distance(&self, other: &TailCurve) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("curves are on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

pub(crate) fn cumulative_trapezoid(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..grid.len() {
        acc += 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
        out.push(acc);
    }
    out
}
