//! Slow brute-force optimizer for tiny instances, used to validate the
//! specialized solver. Deliberately generic: multi-start random
//! perturbations of the chord guess, driven by a plain quadratic
//! penalty method with monotone Armijo projected descent (no
//! multipliers, no spectral steps).

use crate::domain::{PathProfile, RelaxedInstance, SolutionReport, TimeGrid};
use crate::error::{Error, Result};
use crate::metric::{g_eval, rate};
use crate::relaxed::initial_guess;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_CELLS: usize = 12;

/// Best-found minimizer over `restarts` random starts on a grid of at
/// most 12 cells. Restart seeds derive from the instance, so repeated
/// calls are reproducible.
pub fn brute_solve(
    inst: &RelaxedInstance,
    n_small: usize,
    restarts: usize,
) -> Result<SolutionReport> {
    if !(2..=MAX_CELLS).contains(&n_small) {
        return Err(Error::InvalidSize {
            n: n_small,
            min: 2,
        });
    }
    let grid = TimeGrid::uniform(inst.t1, inst.t2, n_small)?;
    let guess = initial_guess(inst, n_small)?;
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(inst, n_small));

    // Select by feasibility first, objective second: a run that ends a
    // hair outside the constraint can undercut every feasible one.
    let mut best: Option<(bool, f64, Vec<f64>, Vec<f64>)> = None;
    for restart in 0..restarts.max(1) {
        let (mut f, mut rho) = perturb(&guess, inst, restart, &mut rng);
        penalty_descent(inst, &grid, &mut f, &mut rho);
        let cost = objective(&grid, &rho);
        let p = PathProfile::new(grid.clone(), f.clone(), rho.clone())?;
        let mg = g_eval(&p, inst.b)?
            .g
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let feasible = mg >= -1e-6;
        let better = match &best {
            None => true,
            Some((bf, bc, _, _)) => (feasible && !bf) || (feasible == *bf && cost < *bc),
        };
        if better {
            best = Some((feasible, cost, f, rho));
        }
    }
    let (_, _, f, rho) = best.expect("at least one restart");
    let profile = PathProfile::new(grid.clone(), f, rho)?;
    let trace = g_eval(&profile, inst.b)?;
    let min_g = trace.g.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_b_est = trace
        .g
        .iter()
        .position(|&v| v <= 1e-4 * inst.b.max(1.0))
        .map(|k| grid.node(k))
        .unwrap_or(inst.t2);
    let i2 = rate(&profile);
    Ok(SolutionReport {
        i2,
        g_trace: trace.g,
        t_b_est,
        iterations: restarts,
        kkt_residual: (-min_g).max(0.0),
        converged: min_g >= -1e-6,
        profile,
    })
}

fn instance_seed(inst: &RelaxedInstance, n: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in [inst.t1, inst.x1, inst.t2, inst.x2, inst.b, n as f64] {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Random feasible-ish start: the chord guess with its density scaled
/// and the curve jittered. Restart 0 keeps the plain guess.
fn perturb(
    guess: &PathProfile,
    inst: &RelaxedInstance,
    restart: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut f = guess.f().to_vec();
    let mut rho = guess.rho().to_vec();
    if restart > 0 {
        let span = (inst.x1 - inst.x2).abs().max(1.0);
        let interior = f.len() - 2;
        for v in f.iter_mut().skip(1).take(interior) {
            *v += 0.2 * span * (rng.gen::<f64>() - 0.5);
        }
        for r in rho.iter_mut() {
            *r *= 0.5 + 1.5 * rng.gen::<f64>();
        }
    }
    (f, rho)
}

fn objective(grid: &TimeGrid, rho: &[f64]) -> f64 {
    4.0 / 3.0 * grid.dt() * rho.iter().map(|&r| r * r.sqrt()).sum::<f64>()
}

/// Quadratic penalty: `J + mu * sum max(0, -g_k)^2`, minimized by
/// monotone projected gradient with backtracking, for a fixed ladder
/// of penalty weights.
fn penalty_descent(inst: &RelaxedInstance, grid: &TimeGrid, f: &mut [f64], rho: &mut [f64]) {
    let n = grid.n_cells();
    let dt = grid.dt();
    let tmid: Vec<f64> = (0..n).map(|k| grid.midpoint(k)).collect();

    let slack = |f: &[f64], rho: &[f64]| -> Vec<f64> {
        let mut g = Vec::with_capacity(n);
        let mut acc = inst.b;
        for k in 0..n {
            let s = (f[k + 1] - f[k]) / dt;
            let h = 0.5 * (f[k] + f[k + 1]) / tmid[k] - s;
            acc += (rho[k] - h * h) * dt;
            g.push(acc);
        }
        g
    };

    let mut mu = 10.0;
    for _ladder in 0..15 {
        let cost = |f: &[f64], rho: &[f64]| -> f64 {
            let g = slack(f, rho);
            let pen: f64 = g.iter().map(|&v| v.min(0.0) * v.min(0.0)).sum();
            objective(grid, rho) + mu * pen
        };

        let mut c = cost(f, rho);
        let mut step = 1e-2;
        for _ in 0..4000 {
            // One-sided numeric gradient keeps this oracle independent
            // of the analytic gradient used by the main solver.
            let eps = 1e-7;
            let mut gf = vec![0.0; n + 1];
            let mut gr = vec![0.0; n];
            for i in 1..n {
                let old = f[i];
                f[i] = old + eps;
                gf[i] = (cost(f, rho) - c) / eps;
                f[i] = old;
            }
            for k in 0..n {
                let old = rho[k];
                rho[k] = old + eps;
                gr[k] = (cost(f, rho) - c) / eps;
                rho[k] = old;
            }
            let gnorm: f64 = gf.iter().chain(gr.iter()).map(|v| v * v).sum::<f64>();
            if gnorm.sqrt() < 1e-9 * (1.0 + c.abs()) {
                break;
            }

            let mut improved = false;
            for _bt in 0..30 {
                let ft: Vec<f64> = f
                    .iter()
                    .zip(&gf)
                    .map(|(&v, &g)| v - step * g)
                    .collect();
                let rt: Vec<f64> = rho
                    .iter()
                    .zip(&gr)
                    .map(|(&v, &g)| (v - step * g).max(0.0))
                    .collect();
                let ct = cost(&ft, &rt);
                if ct < c - 1e-12 {
                    f.copy_from_slice(&ft);
                    rho.copy_from_slice(&rt);
                    c = ct;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        mu *= 4.0;
    }
    // Final clean-up: clamp tiny negative densities.
    for r in rho.iter_mut() {
        if *r < 0.0 {
            *r = 0.0;
        }
    }
}
