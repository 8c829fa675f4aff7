//! The Dirichlet metric, planted path lengths, the slack function `g`,
//! the rate functional and shortcut margins on discrete profiles.
//!
//! A profile's planted length between nodes is the cell sum of
//! `(rho - F'^2) dt`; the slack `g` accumulates `rho - (F/t - F')^2`
//! starting from `g(t1) = b`, with `F/t` evaluated at cell midpoints.

use crate::domain::{MarginViolation, PathProfile, TimeGrid, VerificationReport};
use crate::error::{Error, Result};

/// Slack values at grid nodes; `g[0]` equals the instance's `b`.
#[derive(Debug, Clone)]
pub struct GTrace {
    pub grid: TimeGrid,
    pub g: Vec<f64>,
}

/// Dirichlet metric `d(x,s,y,t) = -(y-x)^2 / (t-s)`. Always `<= 0`.
pub fn dirichlet(x: f64, s: f64, y: f64, t: f64) -> Result<f64> {
    if !(s < t) {
        return Err(Error::InvalidRange { start: s, end: t });
    }
    Ok(-(y - x) * (y - x) / (t - s))
}

/// Per-cell planted length contributions `(rho[k] - slope[k]^2) * dt`.
fn cell_lengths(profile: &PathProfile) -> Vec<f64> {
    let dt = profile.grid().dt();
    profile
        .rho()
        .iter()
        .zip(profile.cell_slopes())
        .map(|(&r, s)| (r - s * s) * dt)
        .collect()
}

/// Prefix sums of the per-cell planted lengths: `P[k]` is the planted
/// length from node 0 to node `k`.
pub fn planted_prefix(profile: &PathProfile) -> Vec<f64> {
    let mut p = Vec::with_capacity(profile.grid().n_cells() + 1);
    let mut acc = 0.0;
    p.push(0.0);
    for c in cell_lengths(profile) {
        acc += c;
        p.push(acc);
    }
    p
}

/// Planted-metric length along the profile between nodes `i` and `j`.
pub fn path_length(profile: &PathProfile, i: usize, j: usize) -> Result<f64> {
    if i >= j || j > profile.grid().n_cells() {
        return Err(Error::IndexOrder { i, j });
    }
    let p = planted_prefix(profile);
    Ok(p[j] - p[i])
}

/// Rate functional `(4/3) * sum rho[k]^(3/2) * dt`.
pub fn rate(profile: &PathProfile) -> f64 {
    let dt = profile.grid().dt();
    4.0 / 3.0 * dt * profile.rho().iter().map(|&r| r * r.sqrt()).sum::<f64>()
}

/// Evaluate the slack `g` at every node, starting from `g(t_start) = b`.
///
/// `F/t` is taken at cell midpoints with `F` linearly interpolated. A
/// grid starting at `t = 0` is accepted when `F(0) = 0`; the midpoint
/// rule then reproduces the exact limit `F/t -> F'` on the first cell.
pub fn g_eval(profile: &PathProfile, b: f64) -> Result<GTrace> {
    let grid = profile.grid();
    let t0 = grid.t_start();
    if t0 < 0.0 || (t0 == 0.0 && profile.f()[0] != 0.0) {
        return Err(Error::InvalidDomain {
            what: "grid t_start",
            value: t0,
        });
    }
    let dt = grid.dt();
    let slopes = profile.cell_slopes();
    let mut g = Vec::with_capacity(grid.n_cells() + 1);
    g.push(b);
    let mut acc = b;
    for k in 0..grid.n_cells() {
        let h = profile.f_midpoint(k) / grid.midpoint(k) - slopes[k];
        acc += (profile.rho()[k] - h * h) * dt;
        g.push(acc);
    }
    Ok(GTrace {
        grid: grid.clone(),
        g,
    })
}

/// Shortcut margin between nodes `i < j`: planted length along the
/// profile minus the Dirichlet length of the straight chord. A
/// nonnegative margin means the chord does not beat the planted path.
pub fn shortcut_margin(profile: &PathProfile, i: usize, j: usize) -> Result<f64> {
    if i >= j || j > profile.grid().n_cells() {
        return Err(Error::IndexOrder { i, j });
    }
    let p = planted_prefix(profile);
    Ok(margin_from_prefix(profile, &p, i, j))
}

fn margin_from_prefix(profile: &PathProfile, prefix: &[f64], i: usize, j: usize) -> f64 {
    let nodes = profile.grid().nodes();
    let f = profile.f();
    let chord = (f[j] - f[i]) * (f[j] - f[i]) / (nodes[j] - nodes[i]);
    prefix[j] - prefix[i] + chord
}

/// Minimum separation (in cells) for a near-zero margin to be reported
/// by the classification pass; shorter chords have margins that vanish
/// with the chord length regardless of geometry.
const NEAR_ZERO_MIN_CELLS: usize = 10;

/// Sweep all node pairs `(p, q)` and check the no-shortcut condition.
///
/// The profile must live on `[0, 1]` with `F(0) = F(1) = 0` and the
/// through-time `a` must be a grid node. Passes iff the minimum margin
/// is at least `-margin_tol`. Well-separated pairs whose margin is
/// within `margin_tol` of zero are classified: they are expected only
/// when they straddle `a` or span a linear stretch of `F`.
pub fn verify_geodesic(
    profile: &PathProfile,
    a: f64,
    margin_tol: f64,
) -> Result<VerificationReport> {
    let grid = profile.grid();
    let n = grid.n_cells();
    let f = profile.f();
    if grid.t_start().abs() > 1e-9 || (grid.t_end() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRange {
            start: grid.t_start(),
            end: grid.t_end(),
        });
    }
    if f[0].abs() > margin_tol || f[n].abs() > margin_tol {
        return Err(Error::InvalidDomain {
            what: "endpoint F value",
            value: f[0].abs().max(f[n].abs()),
        });
    }
    let a_idx = grid.node_index_of(a)?;

    let prefix = planted_prefix(profile);
    let nodes = grid.nodes();
    let mut min_margin = f64::INFINITY;
    let mut argmin = (0usize, 1usize);
    let mut violations = Vec::new();
    let mut near_zero_unexpected = Vec::new();

    for i in 0..n {
        for j in (i + 1)..=n {
            let m = margin_from_prefix(profile, &prefix, i, j);
            if m < min_margin {
                min_margin = m;
                argmin = (i, j);
            }
            if m < -margin_tol {
                violations.push(MarginViolation {
                    p: nodes[i],
                    q: nodes[j],
                    margin: m,
                });
            } else if m <= margin_tol && j - i >= NEAR_ZERO_MIN_CELLS {
                let straddles = i <= a_idx && a_idx <= j;
                if !straddles && !is_linear_segment(profile, i, j, margin_tol) {
                    near_zero_unexpected.push((nodes[i], nodes[j]));
                }
            }
        }
    }

    Ok(VerificationReport {
        min_margin,
        argmin_pair: (nodes[argmin.0], nodes[argmin.1]),
        violations,
        passed: min_margin >= -margin_tol,
        near_zero_unexpected,
    })
}

/// True when `F` deviates from the chord of `[i, j]` by at most `tol`.
fn is_linear_segment(profile: &PathProfile, i: usize, j: usize, tol: f64) -> bool {
    let nodes = profile.grid().nodes();
    let f = profile.f();
    let slope = (f[j] - f[i]) / (nodes[j] - nodes[i]);
    (i..=j).all(|k| (f[k] - (f[i] + slope * (nodes[k] - nodes[i]))).abs() <= tol)
}
