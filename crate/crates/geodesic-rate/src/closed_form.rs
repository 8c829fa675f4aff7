//! Exact evaluators for the optimal metric forcing the geodesic from
//! `(0,0)` to `(0,1)` through `(1,a)`: the rate, the limit shape, the
//! planted density, the breakpoint and the optimal slack.
//!
//! All formulas are stated for `a <= 1/2`; the `a > 1/2` case is the
//! time reflection `t -> 1 - t` at parameter `1 - a`.

use crate::domain::{PathProfile, TimeGrid};
use crate::error::{Error, Result};

/// Closed-form summary at a given through-time `a`.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormSolution {
    pub a: f64,
    /// Total rate of the optimal metric.
    pub i_rate: f64,
    /// Breakpoint time where the linear piece merges into the parabola.
    pub t_b: f64,
    pub x_b: f64,
    /// Optimal initial slack at `t = a`.
    pub b_opt: f64,
    /// Constant density on `[0, t_b]`.
    pub rho0: f64,
}

impl ClosedFormSolution {
    /// Evaluate every closed-form quantity at `a` in `(0, 1/2]`.
    pub fn at(a: f64) -> Result<Self> {
        check_a_half(a)?;
        let (x_b, t_b) = breakpoint(a)?;
        let rho0 = rho0(a);
        Ok(ClosedFormSolution {
            a,
            i_rate: rate_exact(a)?,
            t_b,
            x_b,
            b_opt: a * rho0,
            rho0,
        })
    }
}

fn check_a_open(a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDomain {
            what: "through-time a",
            value: a,
        })
    }
}

fn check_a_half(a: f64) -> Result<()> {
    if a > 0.0 && a <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidDomain {
            what: "through-time a",
            value: a,
        })
    }
}

/// `3 - sqrt(8a)`; stays `>= 1` on `(0, 1/2]`.
fn denom(a: f64) -> f64 {
    3.0 - (8.0 * a).sqrt()
}

fn rho0(a: f64) -> f64 {
    let c = denom(a);
    1.0 / (a * a * c * c)
}

/// Minimal rate `8 / (3 a'^2 (3 - sqrt(8 a'))^2)` with `a' = min(a, 1-a)`.
pub fn rate_exact(a: f64) -> Result<f64> {
    check_a_open(a)?;
    let ap = a.min(1.0 - a);
    let c = denom(ap);
    Ok(8.0 / (3.0 * ap * ap * c * c))
}

/// Limit shape `F_a(t)`: a line to `(1, a)`, a line to the breakpoint,
/// then a parabola in `sqrt(t)`; reflected for `a > 1/2`.
pub fn shape_exact(a: f64, t: f64) -> Result<f64> {
    check_a_open(a)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidDomain {
            what: "time t",
            value: t,
        });
    }
    if a > 0.5 {
        return shape_exact(1.0 - a, 1.0 - t);
    }
    let c = denom(a);
    let s2a = (2.0 * a).sqrt();
    if t <= a {
        Ok(t / a)
    } else if t <= 2.0 * a {
        let x_b = 4.0 * (1.0 - s2a) / c;
        Ok(1.0 + (t - a) / a * (x_b - 1.0))
    } else {
        Ok(4.0 * (t.sqrt() - t) / (s2a * c))
    }
}

/// Optimal planted density `rho_a(t)`: constant up to `t = 2a`, then
/// decaying like `1/t`; reflected for `a > 1/2`.
pub fn density_exact(a: f64, t: f64) -> Result<f64> {
    check_a_open(a)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidDomain {
            what: "time t",
            value: t,
        });
    }
    if a > 0.5 {
        return density_exact(1.0 - a, 1.0 - t);
    }
    let c = denom(a);
    if t <= 2.0 * a {
        Ok(1.0 / (a * a * c * c))
    } else {
        Ok(2.0 / (a * t * c * c))
    }
}

/// Breakpoint `(x_B, t_B) = (4(1 - sqrt(2a)) / (3 - sqrt(8a)), 2a)`
/// for `a` in `(0, 1/2]`.
pub fn breakpoint(a: f64) -> Result<(f64, f64)> {
    check_a_half(a)?;
    let x_b = 4.0 * (1.0 - (2.0 * a).sqrt()) / denom(a);
    Ok((x_b, 2.0 * a))
}

/// Optimal slack `b = a * rho0 = 1 / (a (3 - sqrt(8a))^2)`.
pub fn b_opt_exact(a: f64) -> Result<f64> {
    check_a_half(a)?;
    Ok(a * rho0(a))
}

/// Sample the closed form on a uniform grid over `[0, 1]`: `F` at
/// nodes, `rho` at cell midpoints. Sampling is exact at the sample
/// points on any grid; when the kinks of `F` (at `a` and at the
/// breakpoint) fall between nodes, the piecewise-linear interpolant
/// carries an extra `O(1/n)` error near them.
pub fn assemble_closed_form(a: f64, n: usize) -> Result<PathProfile> {
    check_a_open(a)?;
    let grid = TimeGrid::uniform(0.0, 1.0, n)?;
    let f = grid
        .nodes()
        .iter()
        .map(|&t| shape_exact(a, t))
        .collect::<Result<Vec<_>>>()?;
    let rho = (0..n)
        .map(|k| density_exact(a, grid.midpoint(k)))
        .collect::<Result<Vec<_>>>()?;
    PathProfile::new(grid, f, rho)
}
