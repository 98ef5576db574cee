//! Joint convex relaxation of the port-selection problem.
//!
//! Binary port indicators are relaxed to per-antenna simplices and the
//! capacity is replaced by the concave surrogate `U(x, y) = sum |g|^2 min(x, y)`.
//! The relaxation is solved exactly as an epigraph LP.

mod ipm;

use std::fmt::Write as _;

use crate::capacity::surrogate_u;
use crate::channel::{Dims, OverallChannel};
use crate::error::{Error, Result};

use ipm::{Structure, Term};

/// Convergence report of the interior-point solver.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    /// Duality gap over `max(1, |objective|)`, on the normalized problem.
    pub relative_gap: f64,
    /// Largest primal constraint violation.
    pub primal_residual: f64,
    /// Largest dual constraint violation, relative to the largest objective weight.
    pub dual_residual: f64,
    /// Largest slack-multiplier product.
    pub complementarity: f64,
    /// Whether the tight internal targets were reached (a run can still be
    /// accepted at the looser acceptance tolerances).
    pub converged: bool,
}

/// One epigraph variable: `t <= x[row]`, `t <= y[col]`, objective weight `|g|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpigraphTerm {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

/// The epigraph LP: maximize `sum weight * t` subject to `t <= x_row`,
/// `t <= y_col`, `t >= 0`, `x, y >= 0` and one simplex equality per antenna.
/// Entries with `|g|^2 = 0` get no `t` variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    dims: Dims,
    terms: Vec<EpigraphTerm>,
}

impl LpProblem {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn terms(&self) -> &[EpigraphTerm] {
        &self.terms
    }

    pub fn num_variables(&self) -> usize {
        self.dims.rows() + self.dims.cols() + self.terms.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.dims.m_r + self.dims.m_t
    }

    /// Coupling inequalities `t <= x`, `t <= y` (bounds excluded).
    pub fn num_inequalities(&self) -> usize {
        2 * self.terms.len()
    }

    /// Renders the LP in CPLEX LP text format for cross-checking with
    /// external solvers. Variables are `x<i>_<n>`, `y<j>_<k>` and `t<row>_<col>`,
    /// 1-based; `t` indices are rows/columns of the overall channel.
    pub fn to_lp_format(&self) -> String {
        let d = self.dims;
        let xname = |r: usize| format!("x{}_{}", r / d.n_r + 1, r % d.n_r + 1);
        let yname = |c: usize| format!("y{}_{}", c / d.n_t + 1, c % d.n_t + 1);
        let tname = |e: &EpigraphTerm| format!("t{}_{}", e.row + 1, e.col + 1);
        let mut out = String::new();
        out.push_str("\\ joint convex relaxation, epigraph form\nMaximize\n obj:");
        if self.terms.is_empty() {
            out.push_str(" 0 x1_1");
        }
        for e in &self.terms {
            write!(out, " + {:?} {}", e.weight, tname(e)).ok();
        }
        out.push_str("\nSubject To\n");
        for i in 0..d.m_r {
            let vars: Vec<String> = (0..d.n_r).map(|n| xname(i * d.n_r + n)).collect();
            writeln!(out, " rx{}: {} = 1", i + 1, vars.join(" + ")).ok();
        }
        for j in 0..d.m_t {
            let vars: Vec<String> = (0..d.n_t).map(|k| yname(j * d.n_t + k)).collect();
            writeln!(out, " tx{}: {} = 1", j + 1, vars.join(" + ")).ok();
        }
        for e in &self.terms {
            writeln!(out, " cx{0}_{1}: {2} - {3} <= 0", e.row + 1, e.col + 1, tname(e), xname(e.row)).ok();
            writeln!(out, " cy{0}_{1}: {2} - {3} <= 0", e.row + 1, e.col + 1, tname(e), yname(e.col)).ok();
        }
        out.push_str("End\n");
        out
    }
}

pub fn build_lp(channel: &OverallChannel) -> LpProblem {
    let dims = channel.dims();
    let mut terms = Vec::new();
    for row in 0..dims.rows() {
        for col in 0..dims.cols() {
            let weight = channel.get(row, col).norm_sqr();
            if weight > 0.0 {
                terms.push(EpigraphTerm { row, col, weight });
            }
        }
    }
    LpProblem { dims, terms }
}

/// Optimal fractional port weights of the relaxation.
///
/// Optima are generally not unique; treat `x_hat`/`y_hat` as scores.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub dims: Dims,
    pub x_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    /// Optimal surrogate value `U*`.
    pub u_star: f64,
    /// Multipliers of the per-antenna simplex equalities, receive antennas
    /// first; at optimum they sum to `u_star`.
    pub simplex_prices: Vec<f64>,
    pub stats: SolverStats,
}

impl RelaxedSolution {
    /// Weights of receive antenna `i` (0-based).
    pub fn rx_weights(&self, i: usize) -> &[f64] {
        &self.x_hat[i * self.dims.n_r..(i + 1) * self.dims.n_r]
    }

    /// Weights of transmit antenna `j` (0-based).
    pub fn tx_weights(&self, j: usize) -> &[f64] {
        &self.y_hat[j * self.dims.n_t..(j + 1) * self.dims.n_t]
    }
}

/// Solves the relaxation with the in-repo interior-point method.
pub fn solve_jcr(channel: &OverallChannel) -> Result<RelaxedSolution> {
    solve_lp(&build_lp(channel), channel)
}

pub fn solve_lp(lp: &LpProblem, channel: &OverallChannel) -> Result<RelaxedSolution> {
    let dims = lp.dims;
    if channel.dims() != dims {
        return Err(Error::Dimension("LP and channel dimensions differ".into()));
    }
    if lp.terms.iter().any(|e| !e.weight.is_finite()) {
        return Err(Error::Domain("channel has non-finite entries".into()));
    }
    let scale = lp.terms.iter().fold(0.0_f64, |m, e| m.max(e.weight));
    if scale == 0.0 {
        // Zero objective: every feasible point is optimal.
        return Ok(RelaxedSolution {
            dims,
            x_hat: vec![1.0 / dims.n_r as f64; dims.rows()],
            y_hat: vec![1.0 / dims.n_t as f64; dims.cols()],
            u_star: 0.0,
            simplex_prices: vec![0.0; dims.m_r + dims.m_t],
            stats: SolverStats {
                converged: true,
                ..SolverStats::default()
            },
        });
    }
    let terms: Vec<Term> = lp
        .terms
        .iter()
        .map(|e| Term {
            row: e.row,
            col: e.col,
            weight: e.weight / scale,
        })
        .collect();
    let structure = Structure {
        terms: &terms,
        rx_groups: dims.m_r,
        rx_ports: dims.n_r,
        tx_groups: dims.m_t,
        tx_ports: dims.n_t,
    };
    let sol = ipm::solve(&structure);
    let stats = sol.stats;
    let acceptable = stats.relative_gap <= ipm::ACCEPT_GAP
        && stats.primal_residual <= ipm::ACCEPT_RESIDUAL
        && stats.dual_residual <= ipm::ACCEPT_DUAL_RESIDUAL;
    if !stats.converged && !acceptable {
        return Err(Error::SolverFailure(stats));
    }
    let clamp = |v: Vec<f64>| v.into_iter().map(|a| a.clamp(0.0, 1.0)).collect::<Vec<_>>();
    let x_hat = clamp(sol.x);
    let y_hat = clamp(sol.y);
    let u_star = scale * terms.iter().zip(&sol.t).map(|(e, t)| e.weight * t).sum::<f64>();
    debug_assert!((surrogate_u(channel, &x_hat, &y_hat)? - u_star).abs() <= 1e-6 * u_star.max(1.0));
    Ok(RelaxedSolution {
        dims,
        x_hat,
        y_hat,
        u_star,
        simplex_prices: sol.prices.into_iter().map(|p| p * scale).collect(),
        stats,
    })
}
