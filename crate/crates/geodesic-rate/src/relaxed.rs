//! Numerical solver for the relaxed problem on `[t1, t2]`: minimize the
//! rate `(4/3) int rho^(3/2)` over discrete `(F, rho)` subject to the
//! slack constraints `g >= 0` at every node, with `g(t1) = b`.
//!
//! The discrete problem is convex. It is solved in slack coordinates:
//! the nodewise slack values `G >= 0` replace the density as variables
//! (the density is recovered cellwise from the slack increments), so
//! the constraint becomes a simple box that a projection keeps exact,
//! and a banded projected Newton iteration minimizes the objective.

use crate::domain::{PathProfile, RelaxedInstance, SolutionReport, TimeGrid};
use crate::error::{Error, Result};
use crate::metric::{g_eval, rate};

/// Escalation schedule for the regularization weight: when the Newton
/// system is singular (zero-density cells carry no curvature) the
/// solver retries with Levenberg damping grown along this sequence.
#[derive(Debug, Clone, Copy)]
pub struct PenaltySchedule {
    pub mu0: f64,
    pub growth: f64,
    pub mu_max: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        // Bounded: damping beyond mu_max would freeze the iteration
        // entirely, at which point the solver reports non-convergence
        // instead of spinning.
        PenaltySchedule {
            mu0: 10.0,
            growth: 5.0,
            mu_max: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Cell count of the discretization (>= 16).
    pub n_cells: usize,
    /// Feasibility tolerance: converged solutions satisfy `g >= -g_tol`.
    pub g_tol: f64,
    /// Stationarity tolerance, scaled by `1 + |I2|`.
    pub kkt_tol: f64,
    /// Cap on total inner iterations.
    pub max_iters: usize,
    pub penalty: PenaltySchedule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            n_cells: 256,
            g_tol: 1e-7,
            kkt_tol: 1e-7,
            max_iters: 200_000,
            penalty: PenaltySchedule::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_cells(n_cells: usize) -> Self {
        SolverOptions {
            n_cells,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_cells < 16 {
            return Err(Error::InvalidSize {
                n: self.n_cells,
                min: 16,
            });
        }
        if !(self.g_tol > 0.0) || !(self.kkt_tol > 0.0) {
            return Err(Error::InvalidDomain {
                what: "solver tolerance",
                value: self.g_tol.min(self.kkt_tol),
            });
        }
        Ok(())
    }
}

/// Starting pair: the straight chord with the constant density
/// `x1^2/t1^2 + x2^2/t2^2`. Along the chord the minimum slack equals
/// `b - (sqrt(rho t1) - |x1 - s t1|/sqrt(t1))^2`, so the start is
/// feasible for large enough `b` but may be infeasible for small `b`;
/// the solver does not require a feasible start.
pub fn initial_guess(inst: &RelaxedInstance, n: usize) -> Result<PathProfile> {
    let grid = TimeGrid::uniform(inst.t1, inst.t2, n)?;
    let slope = (inst.x2 - inst.x1) / (inst.t2 - inst.t1);
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&t| inst.x1 + slope * (t - inst.t1))
        .collect();
    let r1 = inst.x1 / inst.t1;
    let r2 = inst.x2 / inst.t2;
    let rho = vec![r1 * r1 + r2 * r2; n];
    PathProfile::new(grid, f, rho)
}

/// Replace `F` by the least concave majorant of the running minimum of
/// `F(t)/t`. The density is untouched, so the rate is unchanged, and
/// the slack can only improve.
pub fn concavify(profile: &PathProfile) -> Result<PathProfile> {
    let grid = profile.grid();
    if !(grid.t_start() > 0.0) {
        return Err(Error::InvalidDomain {
            what: "grid t_start",
            value: grid.t_start(),
        });
    }
    let nodes = grid.nodes();
    let f = profile.f();

    // Stage 1: G(t)/t = running minimum of F(tau)/tau.
    let mut run_min = f64::INFINITY;
    let g_curve: Vec<f64> = nodes
        .iter()
        .zip(f)
        .map(|(&t, &v)| {
            run_min = run_min.min(v / t);
            run_min * t
        })
        .collect();

    // Stage 2: least concave majorant, i.e. the upper convex hull of
    // the node points, evaluated back at the nodes.
    let hull = upper_hull(nodes, &g_curve);
    let mut f_hat = vec![0.0; nodes.len()];
    let mut seg = 0;
    for (i, &t) in nodes.iter().enumerate() {
        while seg + 1 < hull.len() - 1 && nodes[hull[seg + 1]] <= t {
            seg += 1;
        }
        let (l, r) = (hull[seg], hull[seg + 1]);
        let w = (t - nodes[l]) / (nodes[r] - nodes[l]);
        f_hat[i] = g_curve[l] + w * (g_curve[r] - g_curve[l]);
    }
    PathProfile::new(grid.clone(), f_hat, profile.rho().to_vec())
}

/// Indices of the upper convex hull of `(x[i], y[i])`, left to right.
fn upper_hull(x: &[f64], y: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Keep b only if it lies strictly above the chord a -> i.
            let cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Sort cell densities into nonincreasing order. Preserves the value
/// multiset (hence the rate) and weakly increases every prefix sum.
pub fn decreasing_rearrangement(rho: &[f64]) -> Vec<f64> {
    let mut out = rho.to_vec();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

/// Primal state carried between related solves (warm starting).
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub f: Vec<f64>,
    pub rho: Vec<f64>,
}

pub fn solve_relaxed(inst: &RelaxedInstance, opts: &SolverOptions) -> Result<SolutionReport> {
    solve_relaxed_warm(inst, opts, None).map(|(rep, _)| rep)
}

/// Like [`solve_relaxed`], optionally starting from a previous solve of
/// a nearby instance, and returning state for the next warm start.
pub fn solve_relaxed_warm(
    inst: &RelaxedInstance,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> Result<(SolutionReport, WarmStart)> {
    opts.validate()?;
    let b_max = inst.b_max();
    if !(inst.b >= 0.0) || inst.b > b_max * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::InfeasibleInstance { b: inst.b, b_max });
    }

    // Degenerate slack values have closed-form answers.
    if inst.b >= b_max * (1.0 - 1e-12) {
        return degenerate_zero_rho(inst, opts);
    }
    if inst.b <= 1e-14 && inst.x1 / inst.t1 >= inst.x2 / inst.t2 {
        return degenerate_full_parabola(inst, opts);
    }

    Workspace::new(inst, opts, warm)?.run()
}

/// `b = b_max`: the chord with no planted mass is optimal.
fn degenerate_zero_rho(
    inst: &RelaxedInstance,
    opts: &SolverOptions,
) -> Result<(SolutionReport, WarmStart)> {
    let profile = {
        let base = initial_guess(inst, opts.n_cells)?;
        PathProfile::new(
            base.grid().clone(),
            base.f().to_vec(),
            vec![0.0; opts.n_cells],
        )?
    };
    finish(inst, opts, profile, 0, 0.0, true)
}

/// `b = 0`: the slack is pinned at zero, so the whole segment is the
/// parabola `c1 sqrt(t) + c2 t` with `rho = c1^2 / (4t)`.
fn degenerate_full_parabola(
    inst: &RelaxedInstance,
    opts: &SolverOptions,
) -> Result<(SolutionReport, WarmStart)> {
    let (s1, s2) = (inst.t1.sqrt(), inst.t2.sqrt());
    let c1 = (inst.x1 / inst.t1 - inst.x2 / inst.t2) / (1.0 / s1 - 1.0 / s2);
    let c2 = inst.x1 / inst.t1 - c1 / s1;
    let grid = TimeGrid::uniform(inst.t1, inst.t2, opts.n_cells)?;
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&t| c1 * t.sqrt() + c2 * t)
        .collect();
    // Use the discretization's own residual (F_mid/t_mid - slope)^2,
    // which tends to c1^2/(4t), so the discrete slack is exactly zero.
    let base = PathProfile::new(grid.clone(), f.clone(), vec![0.0; opts.n_cells])?;
    let slopes = base.cell_slopes();
    let rho: Vec<f64> = (0..opts.n_cells)
        .map(|k| {
            let h = base.f_midpoint(k) / grid.midpoint(k) - slopes[k];
            h * h
        })
        .collect();
    let profile = PathProfile::new(grid, f, rho)?;
    finish(inst, opts, profile, 0, 0.0, true)
}

fn finish(
    inst: &RelaxedInstance,
    opts: &SolverOptions,
    profile: PathProfile,
    iterations: usize,
    kkt_residual: f64,
    converged: bool,
) -> Result<(SolutionReport, WarmStart)> {
    let trace = g_eval(&profile, inst.b)?;
    let t_b_est = estimate_breakpoint(&trace.g, profile.grid(), inst.b, opts.g_tol);
    let warm = WarmStart {
        f: profile.f().to_vec(),
        rho: profile.rho().to_vec(),
    };
    let i2 = rate(&profile);
    Ok((
        SolutionReport {
            i2,
            g_trace: trace.g,
            t_b_est,
            iterations,
            kkt_residual,
            converged,
            profile,
        },
        warm,
    ))
}

/// First node time where the slack drops to (numerical) zero. The
/// threshold sits well above the feasibility tolerance because the
/// converged slack wiggles at the KKT scale on its zero set.
fn estimate_breakpoint(g: &[f64], grid: &TimeGrid, b: f64, g_tol: f64) -> f64 {
    let thresh = (10.0 * g_tol).max(1e-4 * b.max(1.0));
    for (k, &v) in g.iter().enumerate() {
        if v <= thresh {
            return grid.node(k);
        }
    }
    grid.t_end()
}

/// Index of node value `F_i` in the interleaved variable vector.
#[inline]
fn idx_f(i: usize) -> usize {
    2 * i - 1
}

/// Index of slack value `G_j` (slack at node `j + 1`).
#[inline]
fn idx_g(j: usize) -> usize {
    2 * j
}

/// Half-bandwidth of the Hessian in the interleaved ordering: the
/// variables of one cell are `G_{j-1}, F_j, G_j, F_{j+1}` with indices
/// `2j-2 .. 2j+1`.
const BAND: usize = 3;

/// Primal solver state in slack coordinates.
///
/// Instead of `(F, rho)` with the nodewise constraint `g >= 0`, the
/// solver optimizes `(F, G)` where `G_j` is the slack at node `j + 1`
/// and the density is implied cellwise:
///
/// ```text
/// rho_j = (G_j - G_{j-1}) / dt + h_j^2,   G_{-1} = b,
/// h_j   = F_mid / t_mid - slope = alpha_j F_j + beta_j F_{j+1}.
/// ```
///
/// Feasibility becomes the box `G >= 0`, which a projection keeps exact,
/// and `rho >= 0` is a domain guard in the line search. The objective
/// `(4/3) dt sum rho^(3/2)` stays convex in `(F, G)` (it is a convex
/// nondecreasing function of `rho`, which is itself convex in the
/// variables), and its Hessian is banded with half-bandwidth 3 in the
/// interleaved ordering `G_0, F_1, G_1, F_2, ...`. The iteration is a
/// two-metric projected Newton method: active bounds take a plain
/// gradient step while free variables take a banded-Cholesky Newton
/// step, with Levenberg damping drawn from the penalty schedule when
/// the system is singular (cells with `rho = 0` contribute no
/// curvature).
struct Workspace {
    inst: RelaxedInstance,
    opts: SolverOptions,
    grid: TimeGrid,
    n: usize,
    dt: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    z: Vec<f64>,
}

impl Workspace {
    fn new(inst: &RelaxedInstance, opts: &SolverOptions, warm: Option<&WarmStart>) -> Result<Self> {
        let n = opts.n_cells;
        let grid = TimeGrid::uniform(inst.t1, inst.t2, n)?;
        let dt = (inst.t2 - inst.t1) / n as f64;
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        for j in 0..n {
            let tm = grid.midpoint(j);
            alpha[j] = 0.5 / tm + 1.0 / dt;
            beta[j] = 0.5 / tm - 1.0 / dt;
        }
        let (f, rho) = match warm {
            Some(w) if w.f.len() == n + 1 && w.rho.len() == n => (w.f.clone(), w.rho.clone()),
            _ => {
                let p = initial_guess(inst, n)?;
                (p.f().to_vec(), p.rho().to_vec())
            }
        };
        let mut ws = Workspace {
            inst: *inst,
            opts: *opts,
            grid,
            n,
            dt,
            alpha,
            beta,
            z: vec![0.0; 2 * n - 1],
        };
        for i in 1..n {
            ws.z[idx_f(i)] = f[i];
        }
        // Feasible start: integrate the slack recursion and clamp at
        // zero. Wherever the clamp bites, the implied density can only
        // grow relative to the guess, so it stays nonnegative.
        let mut g_prev = inst.b;
        for j in 0..n {
            let h = ws.h_cell(j, &f);
            let g = (g_prev + (rho[j] - h * h) * dt).max(0.0);
            ws.z[idx_g(j)] = g;
            g_prev = g;
        }
        Ok(ws)
    }

    /// `h_j` from a full node-value array (boundary values included).
    #[inline]
    fn h_cell(&self, j: usize, f: &[f64]) -> f64 {
        self.alpha[j] * f[j] + self.beta[j] * f[j + 1]
    }

    /// Node value `F_i` under the variable vector `z`.
    #[inline]
    fn f_node(&self, z: &[f64], i: usize) -> f64 {
        if i == 0 {
            self.inst.x1
        } else if i == self.n {
            self.inst.x2
        } else {
            z[idx_f(i)]
        }
    }

    #[inline]
    fn h_of(&self, z: &[f64], j: usize) -> f64 {
        self.alpha[j] * self.f_node(z, j) + self.beta[j] * self.f_node(z, j + 1)
    }

    /// Implied densities. Returns `false` if any density is negative
    /// beyond rounding noise (infeasible trial point); tiny negative
    /// values are clamped to zero.
    fn densities(&self, z: &[f64], rho: &mut [f64]) -> bool {
        let mut g_prev = self.inst.b;
        for j in 0..self.n {
            let g = z[idx_g(j)];
            let h = self.h_of(z, j);
            let r = (g - g_prev) / self.dt + h * h;
            if r < -1e-11 * (1.0 + h * h) {
                return false;
            }
            rho[j] = r.max(0.0);
            g_prev = g;
        }
        true
    }

    fn objective(&self, rho: &[f64]) -> f64 {
        let mut s = 0.0;
        for &r in rho {
            s += r * r.sqrt();
        }
        4.0 / 3.0 * self.dt * s
    }

    fn gradient(&self, z: &[f64], rho: &[f64], grad: &mut [f64]) {
        // w_j = dJ/drho_j; chain through rho_j's dependence on
        // G_{j-1}, G_j, F_j, F_{j+1}.
        grad.fill(0.0);
        for j in 0..self.n {
            let w = 2.0 * self.dt * rho[j].sqrt();
            let h = self.h_of(z, j);
            grad[idx_g(j)] += w / self.dt;
            if j >= 1 {
                grad[idx_g(j - 1)] -= w / self.dt;
                grad[idx_f(j)] += w * 2.0 * h * self.alpha[j];
            }
            if j < self.n - 1 {
                grad[idx_f(j + 1)] += w * 2.0 * h * self.beta[j];
            }
        }
    }

    /// Assemble the banded Hessian, skipping rows and columns of active
    /// bound variables (they get an identity row instead).
    fn hessian(&self, z: &[f64], rho: &[f64], active: &[bool], band: &mut [Vec<f64>]) {
        for row in band.iter_mut() {
            row.fill(0.0);
        }
        let dim = z.len();
        let add = |band: &mut [Vec<f64>], p: usize, q: usize, v: f64| {
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            band[hi - lo][lo] += v;
        };
        for j in 0..self.n {
            let w = 2.0 * self.dt * rho[j].sqrt();
            let kappa = self.dt / rho[j].max(1e-12).sqrt();
            let h = self.h_of(z, j);
            // Partials of rho_j with respect to its (at most four)
            // variables, bound variables excluded.
            let mut vars: [(usize, f64); 4] = [(usize::MAX, 0.0); 4];
            let mut m = 0;
            let push = |idx: usize, d: f64, m: &mut usize, vars: &mut [(usize, f64); 4]| {
                if !active[idx] {
                    vars[*m] = (idx, d);
                    *m += 1;
                }
            };
            push(idx_g(j), 1.0 / self.dt, &mut m, &mut vars);
            if j >= 1 {
                push(idx_g(j - 1), -1.0 / self.dt, &mut m, &mut vars);
                push(idx_f(j), 2.0 * h * self.alpha[j], &mut m, &mut vars);
            }
            if j < self.n - 1 {
                push(idx_f(j + 1), 2.0 * h * self.beta[j], &mut m, &mut vars);
            }
            for p in 0..m {
                for q in p..m {
                    add(band, vars[p].0, vars[q].0, kappa * vars[p].1 * vars[q].1);
                }
            }
            // Second derivative of rho_j in F: d2rho/dF^2 = 2 e e^T.
            if j >= 1 && !active[idx_f(j)] {
                add(band, idx_f(j), idx_f(j), w * 2.0 * self.alpha[j] * self.alpha[j]);
            }
            if j < self.n - 1 && !active[idx_f(j + 1)] {
                add(band, idx_f(j + 1), idx_f(j + 1), w * 2.0 * self.beta[j] * self.beta[j]);
            }
            if j >= 1 && j < self.n - 1 && !active[idx_f(j)] && !active[idx_f(j + 1)] {
                add(band, idx_f(j), idx_f(j + 1), w * 2.0 * self.alpha[j] * self.beta[j]);
            }
        }
        for i in 0..dim {
            if active[i] {
                band[0][i] = 1.0;
            }
        }
    }

    fn run(mut self) -> Result<(SolutionReport, WarmStart)> {
        let trace = std::env::var_os("SOLVER_TRACE").is_some();
        let dim = self.z.len();
        let mut rho = vec![0.0; self.n];
        let mut grad = vec![0.0; dim];
        let mut band: Vec<Vec<f64>> = (0..=BAND).map(|_| vec![0.0; dim]).collect();
        let mut lband: Vec<Vec<f64>> = (0..=BAND).map(|_| vec![0.0; dim]).collect();
        let mut diag = vec![0.0; dim];
        let mut dir = vec![0.0; dim];
        let mut active = vec![false; dim];
        let mut z_try = vec![0.0; dim];
        let mut rho_try = vec![0.0; self.n];

        assert!(self.densities(&self.z, &mut rho), "start must be feasible");
        let mut phi = self.objective(&rho);

        let mut iters = 0usize;
        let mut converged = false;
        let mut kkt = f64::INFINITY;
        let mut kkt_best = f64::INFINITY;
        let mut since_best = 0usize;
        let eps_act = 1e-10 * (1.0 + self.inst.b);

        while iters < self.opts.max_iters {
            self.gradient(&self.z, &rho, &mut grad);

            // KKT residual: projected-gradient norm plus complementarity
            // (the multiplier of G_k >= 0 is the G_k-gradient).
            let mut res = 0.0f64;
            let mut res_at = 0usize;
            let mut comp = 0.0f64;
            for i in 0..dim {
                let pg = if i % 2 == 0 && self.z[i] <= 0.0 {
                    grad[i].min(0.0)
                } else {
                    grad[i]
                };
                if pg.abs() > res {
                    res = pg.abs();
                    res_at = i;
                }
                if i % 2 == 0 {
                    comp += (grad[i] * self.z[i]).abs();
                }
            }
            kkt = res + comp;
            let scale = 1.0 + phi.abs();
            if trace && iters.is_multiple_of(10) {
                let n_act = (0..self.n).filter(|&j| self.z[idx_g(j)] <= eps_act).count();
                eprintln!(
                    "iter {iters:4}  phi {phi:.9e}  res {res:.3e}@{res_at} (z={:.3e})  comp {comp:.3e}  act {n_act}/{}",
                    self.z[res_at], self.n
                );
            }
            if kkt <= self.opts.kkt_tol * scale {
                converged = true;
                break;
            }
            // Rounding-floor detection: once the residual stops
            // improving, more iterations cannot help.
            if kkt < 0.99 * kkt_best {
                kkt_best = kkt;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > 50 {
                    break;
                }
            }

            for j in 0..self.n {
                let i = idx_g(j);
                active[i] = self.z[i] <= eps_act && grad[i] > 0.0;
            }
            self.hessian(&self.z, &rho, &active, &mut band);

            // Newton direction via banded LDL^T; escalate Levenberg
            // damping from the penalty schedule if the (possibly
            // semidefinite) system resists factorization.
            let mut damp = 0.0;
            let mut solved = false;
            loop {
                if ldlt_banded(&band, damp, &mut lband, &mut diag) {
                    solve_banded(&lband, &diag, &grad, &mut dir);
                    solved = true;
                    break;
                }
                damp = if damp == 0.0 {
                    self.opts.penalty.mu0 * 1e-6
                } else {
                    damp * self.opts.penalty.growth
                };
                if damp > self.opts.penalty.mu_max {
                    break;
                }
            }
            if !solved {
                dir.copy_from_slice(&grad);
            }

            // Projected backtracking line search (Armijo on the
            // projected step, with the rho >= 0 domain guard). Near
            // the optimum the predicted decrease drops below the
            // rounding noise of the objective sum; such polish steps
            // are accepted on a no-increase test instead, so Newton
            // can drive the gradient to tolerance.
            let noise = 1e-12 * scale;
            let mut a = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                for i in 0..dim {
                    let v = self.z[i] - a * dir[i];
                    z_try[i] = if i % 2 == 0 { v.max(0.0) } else { v };
                }
                if self.densities(&z_try, &mut rho_try) {
                    let phi_try = self.objective(&rho_try);
                    let mut pred = 0.0;
                    for i in 0..dim {
                        pred += grad[i] * (z_try[i] - self.z[i]);
                    }
                    let ok = if pred <= -noise {
                        phi_try <= phi + 1e-4 * pred
                    } else {
                        pred <= 0.0 && phi_try <= phi + noise
                    };
                    if ok {
                        self.z.copy_from_slice(&z_try);
                        rho.copy_from_slice(&rho_try);
                        phi = phi_try;
                        accepted = true;
                        break;
                    }
                }
                a *= 0.5;
            }
            if trace && iters.is_multiple_of(10) {
                eprintln!(
                    "      step a {a:.3e}  dir@{res_at} {:.3e}  damp {damp:.1e}  accepted {accepted}",
                    dir[res_at]
                );
            }
            iters += 1;
            if !accepted {
                // No progress along either Newton or gradient
                // direction: stationary to machine precision.
                break;
            }
        }

        let f: Vec<f64> = (0..=self.n).map(|i| self.f_node(&self.z, i)).collect();
        let profile = PathProfile::new(self.grid.clone(), f, rho)?;
        let conv = converged && kkt.is_finite();
        finish(&self.inst, &self.opts, profile, iters, kkt, conv)
    }
}

/// Banded LDL^T factorization of `A + damp I` (half-bandwidth [`BAND`]).
/// `band[d][i] = A[i + d][i]`. Returns `false` on a nonpositive pivot.
fn ldlt_banded(band: &[Vec<f64>], damp: f64, lband: &mut [Vec<f64>], diag: &mut [f64]) -> bool {
    let dim = diag.len();
    for j in 0..dim {
        let mut dj = band[0][j] + damp;
        let k0 = j.saturating_sub(BAND);
        for k in k0..j {
            let l = lband[j - k][k];
            dj -= l * l * diag[k];
        }
        if !(dj > 1e-14 * (1.0 + band[0][j].abs())) {
            return false;
        }
        diag[j] = dj;
        for d in 1..=BAND {
            let i = j + d;
            if i >= dim {
                break;
            }
            let mut v = band[d][j];
            for k in i.saturating_sub(BAND)..j {
                v -= lband[i - k][k] * lband[j - k][k] * diag[k];
            }
            lband[d][j] = v / dj;
        }
    }
    true
}

/// Solve `L D L^T x = rhs` from [`ldlt_banded`] factors.
fn solve_banded(lband: &[Vec<f64>], diag: &[f64], rhs: &[f64], x: &mut [f64]) {
    let dim = diag.len();
    for j in 0..dim {
        let mut v = rhs[j];
        for k in j.saturating_sub(BAND)..j {
            v -= lband[j - k][k] * x[k];
        }
        x[j] = v;
    }
    for j in 0..dim {
        x[j] /= diag[j];
    }
    for j in (0..dim).rev() {
        let mut v = x[j];
        for d in 1..=BAND {
            let i = j + d;
            if i >= dim {
                break;
            }
            v -= lband[d][j] * x[i];
        }
        x[j] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_guess_values() {
        let inst = RelaxedInstance::new(0.5, 1.0, 1.0, 0.0, 0.0).unwrap();
        let p = initial_guess(&inst, 4).unwrap();
        for s in p.cell_slopes() {
            assert!((s + 2.0).abs() < 1e-12);
        }
        for &r in p.rho() {
            assert!((r - 4.0).abs() < 1e-12);
        }

        let inst = RelaxedInstance::new(0.25, 1.0, 1.0, 0.0, 1.0).unwrap();
        let p = initial_guess(&inst, 8).unwrap();
        for &r in p.rho() {
            assert!((r - 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_guess_slack() {
        // Minimum slack along the chord guess is
        // b - (sqrt(rho t1) - K/sqrt(t1))^2 with K = |x1 - s t1|.
        let min_slack = |t1: f64, x1: f64, t2: f64, x2: f64, b: f64| {
            let inst = RelaxedInstance::new(t1, x1, t2, x2, b).unwrap();
            let p = initial_guess(&inst, 512).unwrap();
            let g = g_eval(&p, b).unwrap();
            g.g.iter().cloned().fold(f64::INFINITY, f64::min)
        };

        // Tent instance at b = 2: the dip bottoms out at exactly zero.
        assert!(min_slack(0.5, 1.0, 1.0, 0.0, 2.0).abs() < 1e-4);
        // Large enough b keeps the guess strictly feasible.
        assert!(min_slack(0.5, 1.0, 1.0, 0.0, 3.0) > 0.9);
        assert!(min_slack(0.1, 0.5, 2.0, -0.3, 0.5) > 0.0);
        // Small b leaves the guess infeasible; the solver tolerates it.
        let expect = -( (4.0f64 * 0.5).sqrt() - 2.0 / 0.5f64.sqrt() ).powi(2);
        let got = min_slack(0.5, 1.0, 1.0, 0.0, 0.0);
        assert!((got - expect).abs() < 1e-4, "got {got} want {expect}");
    }

    #[test]
    fn concavify_fixed_points() {
        // A concave profile with F' <= F/t is untouched.
        let grid = TimeGrid::uniform(0.5, 1.5, 10).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|&t| t.sqrt()).collect();
        let p = PathProfile::new(grid, f.clone(), vec![0.0; 10]).unwrap();
        let q = concavify(&p).unwrap();
        for (a, b) in q.f().iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }

        // A line through the origin maps to itself.
        let grid = TimeGrid::uniform(0.25, 1.0, 6).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|&t| 2.0 * t).collect();
        let p = PathProfile::new(grid, f.clone(), vec![0.0; 6]).unwrap();
        let q = concavify(&p).unwrap();
        for (a, b) in q.f().iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn concavify_fills_dip() {
        // Nodes (1, 1), (1.5, 0.9), (2, 1.1): F/t decreasing, hull
        // replaces the dip with the chord (value 1.05 at t = 1.5).
        let grid = TimeGrid::uniform(1.0, 2.0, 2).unwrap();
        let p = PathProfile::new(grid, vec![1.0, 0.9, 1.1], vec![0.0, 0.0]).unwrap();
        let q = concavify(&p).unwrap();
        assert!((q.f()[0] - 1.0).abs() < 1e-12);
        assert!((q.f()[1] - 1.05).abs() < 1e-12);
        assert!((q.f()[2] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn rearrangement_examples() {
        assert_eq!(decreasing_rearrangement(&[1.0, 3.0, 2.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(decreasing_rearrangement(&[5.0, 5.0, 5.0]), vec![5.0; 3]);
        // Prefix domination.
        let orig = [1.0, 3.0, 2.0];
        let sorted = decreasing_rearrangement(&orig);
        let mut po = 0.0;
        let mut ps = 0.0;
        for k in 0..3 {
            po += orig[k];
            ps += sorted[k];
            assert!(ps >= po);
        }
    }

    #[test]
    fn solve_b_max_gives_zero_rate() {
        let inst = RelaxedInstance::new(0.5, 1.0, 1.0, 0.0, 4.0).unwrap();
        let rep = solve_relaxed(&inst, &SolverOptions::with_cells(64)).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.i2, 0.0);
        for &r in rep.profile.rho() {
            assert_eq!(r, 0.0);
        }
        let slopes = rep.profile.cell_slopes();
        for s in &slopes {
            assert!((s + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_b_zero_gives_parabola() {
        let inst = RelaxedInstance::new(0.25, 1.0, 1.0, 0.0, 0.0).unwrap();
        let rep = solve_relaxed(&inst, &SolverOptions::with_cells(64)).unwrap();
        assert!(rep.converged);
        assert!((rep.t_b_est - 0.25).abs() < 1e-12);
        // g stays pinned at zero.
        for &v in &rep.g_trace {
            assert!(v.abs() < 1e-9);
        }
        // F(t) = c1 sqrt(t) + c2 t through (0.25, 1) and (1, 0).
        let f = rep.profile.f();
        let nodes = rep.profile.grid().nodes();
        let c1 = (1.0 / 0.25 - 0.0) / (2.0 - 1.0); // 4
        let c2 = 4.0 - c1 * 2.0; // -4
        for (&t, &v) in nodes.iter().zip(f) {
            assert!((v - (c1 * t.sqrt() + c2 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_tent_instance() {
        // a = 1/2 closed form restricted to [1/2, 1] at b = b_opt = 2:
        // F stays linear, rho = 4, I2 = 16/3.
        let inst = RelaxedInstance::new(0.5, 1.0, 1.0, 0.0, 2.0).unwrap();
        let rep = solve_relaxed(&inst, &SolverOptions::with_cells(256)).unwrap();
        assert!(rep.converged, "kkt = {}", rep.kkt_residual);
        let i2 = 16.0 / 3.0;
        assert!(
            (rep.i2 - i2).abs() / i2 < 5e-3,
            "I2 = {} want {}",
            rep.i2,
            i2
        );
        let slopes = rep.profile.cell_slopes();
        for s in &slopes {
            assert!((s + 2.0).abs() < 0.05, "slope {s}");
        }
        for &r in rep.profile.rho() {
            assert!((r - 4.0).abs() < 0.2, "rho {r}");
        }
    }

    #[test]
    fn solve_eighth_instance() {
        // a = 1/8 closed form restricted to [1/8, 1] at b = b_opt = 2:
        // I2 = 128/3 - 32/3 = 32, breakpoint at 0.25.
        let inst = RelaxedInstance::new(0.125, 1.0, 1.0, 0.0, 2.0).unwrap();
        let rep = solve_relaxed(&inst, &SolverOptions::with_cells(512)).unwrap();
        assert!(rep.converged, "kkt = {}", rep.kkt_residual);
        assert!((rep.i2 - 32.0).abs() / 32.0 < 1e-2, "I2 = {}", rep.i2);
        assert!((rep.t_b_est - 0.25).abs() < 0.02, "t_B = {}", rep.t_b_est);
    }
}
