//! Geodesic large-deviation toolkit for the planted directed metric.
//!
//! The crate answers one question in two independent ways. Given a
//! target through-point `(a, 1)` for a unit-speed-normalized geodesic
//! from `(0, 0)` to `(0, 1)`:
//!
//! * [`closed_form`] evaluates the exact rate `I(a)`, the limiting
//!   geodesic shape `F_a`, and the planted density in closed form.
//! * [`relaxed`] and [`full`] solve the same problem numerically as a
//!   discretized convex program, without using the closed forms.
//!
//! Agreement between the two paths is the main correctness argument,
//! exercised by the acceptance suite. Supporting modules: [`metric`]
//! (Dirichlet lengths, slack traces, the no-shortcut verifier),
//! [`oracle`] (a slow brute-force optimizer for tiny grids), and
//! [`io`] (JSON/CSV artifacts for the CLI).

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the
// out-of-range values, which `x <= 0.0` would silently admit.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Banded numeric kernels read more clearly with explicit indices than
// with iterator chains over several offset slices.
#![allow(clippy::needless_range_loop)]

pub mod closed_form;
pub mod domain;
pub mod error;
pub mod full;
pub mod io;
pub mod metric;
pub mod oracle;
pub mod relaxed;

pub use closed_form::{
    assemble_closed_form, b_opt_exact, breakpoint, density_exact, rate_exact, shape_exact,
};
pub use domain::{PathProfile, RelaxedInstance, SolutionReport, TimeGrid, VerificationReport};
pub use error::{Error, Result};
pub use full::{check_against_closed_form, solve_full, FullSolution};
pub use metric::{dirichlet, g_eval, rate, verify_geodesic};
pub use relaxed::{solve_relaxed, SolverOptions};
