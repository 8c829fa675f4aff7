//! Shared domain types: time grids, discrete path profiles, problem
//! instances and solver/verifier reports.
//!
//! All types are immutable values after construction and safe to share
//! across threads.

use crate::error::{Error, Result};

/// Relative tolerance for uniform-spacing and node-alignment checks.
pub const GRID_REL_TOL: f64 = 1e-12;

/// A uniform partition of `[t_start, t_end]` into `N` cells (`N + 1` nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// Build a uniform grid with `n` cells. Requires `t_start < t_end`
    /// and `n >= 2`.
    pub fn uniform(t_start: f64, t_end: f64, n: usize) -> Result<Self> {
        if !(t_start < t_end) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidRange {
                start: t_start,
                end: t_end,
            });
        }
        if n < 2 {
            return Err(Error::InvalidSize { n, min: 2 });
        }
        let dt = (t_end - t_start) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| t_start + i as f64 * dt).collect();
        // Pin the endpoints exactly.
        nodes[0] = t_start;
        nodes[n] = t_end;
        Ok(TimeGrid {
            t_start,
            t_end,
            nodes,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of cells.
    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Uniform cell width.
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_cells() as f64
    }

    /// Midpoint of cell `i`.
    pub fn midpoint(&self, i: usize) -> f64 {
        0.5 * (self.nodes[i] + self.nodes[i + 1])
    }

    /// Index of the node equal to `t`, if `t` aligns with the grid
    /// within [`GRID_REL_TOL`] of the span.
    pub fn node_index_of(&self, t: f64) -> Result<usize> {
        let span = self.t_end - self.t_start;
        let x = (t - self.t_start) / span * self.n_cells() as f64;
        let k = x.round();
        if (x - k).abs() <= 1e-9 * self.n_cells() as f64 && k >= 0.0 && k <= self.n_cells() as f64
        {
            Ok(k as usize)
        } else {
            Err(Error::GridAlignment { t })
        }
    }
}

/// A candidate pair: curve values `F` at grid nodes and a nonnegative
/// density `rho`, piecewise constant on cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PathProfile {
    grid: TimeGrid,
    f: Vec<f64>,
    rho: Vec<f64>,
}

impl PathProfile {
    pub fn new(grid: TimeGrid, f: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let n = grid.n_cells();
        if f.len() != n + 1 {
            return Err(Error::InvalidSize {
                n: f.len(),
                min: n + 1,
            });
        }
        if rho.len() != n {
            return Err(Error::InvalidSize { n: rho.len(), min: n });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDomain {
                what: "F node value",
                value: f64::NAN,
            });
        }
        if let Some(&bad) = rho.iter().find(|&&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidDomain {
                what: "rho cell value",
                value: bad,
            });
        }
        Ok(PathProfile { grid, f, rho })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Per-cell slopes `(F[i+1] - F[i]) / (t[i+1] - t[i])`.
    pub fn cell_slopes(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        self.f
            .windows(2)
            .zip(nodes.windows(2))
            .map(|(fw, tw)| (fw[1] - fw[0]) / (tw[1] - tw[0]))
            .collect()
    }

    /// Value of the piecewise-linear interpolant at the midpoint of cell `i`.
    pub fn f_midpoint(&self, i: usize) -> f64 {
        0.5 * (self.f[i] + self.f[i + 1])
    }
}

/// The 5-tuple `(t1, x1, t2, x2, b)` defining the relaxed problem on
/// `[t1, t2]`: minimize the rate subject to the slack `g` staying
/// nonnegative, with `g(t1) = b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedInstance {
    pub t1: f64,
    pub x1: f64,
    pub t2: f64,
    pub x2: f64,
    pub b: f64,
}

impl RelaxedInstance {
    pub fn new(t1: f64, x1: f64, t2: f64, x2: f64, b: f64) -> Result<Self> {
        if !(t1 > 0.0) || !(t1 < t2) {
            return Err(Error::InvalidRange { start: t1, end: t2 });
        }
        let inst = RelaxedInstance { t1, x1, t2, x2, b };
        let b_max = inst.b_max();
        if !(b >= 0.0) || b > b_max * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InfeasibleInstance { b, b_max });
        }
        Ok(inst)
    }

    /// Upper bound on the slack: the Dirichlet deficit of the straight
    /// chord, `(x2-x1)^2/(t2-t1) + x1^2/t1 - x2^2/t2`.
    pub fn b_max(&self) -> f64 {
        let chord = (self.x2 - self.x1).powi(2) / (self.t2 - self.t1);
        chord + self.x1 * self.x1 / self.t1 - self.x2 * self.x2 / self.t2
    }
}

/// Output of the relaxed solver.
#[derive(Debug, Clone)]
pub struct SolutionReport {
    pub profile: PathProfile,
    /// Rate of the planted density on `[t1, t2]`.
    pub i2: f64,
    /// Slack values at grid nodes.
    pub g_trace: Vec<f64>,
    /// First node time where the slack reaches zero.
    pub t_b_est: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// A shortcut-margin violation at the node pair `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginViolation {
    pub p: f64,
    pub q: f64,
    pub margin: f64,
}

/// Summary of the all-pairs shortcut sweep.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub min_margin: f64,
    /// Times of the pair attaining the minimum margin.
    pub argmin_pair: (f64, f64),
    pub violations: Vec<MarginViolation>,
    pub passed: bool,
    /// Well-separated node pairs with near-zero margin that neither
    /// straddle the through-time nor span a linear stretch of `F`.
    pub near_zero_unexpected: Vec<(f64, f64)>,
}
