//! Primal-dual path-following solver for the epigraph LP
//!
//! ```text
//! minimize    -c't
//! subject to  t_e <= x_r(e),  t_e <= y_c(e),  t >= 0,  x >= 0,  y >= 0,
//!             sum of x over each receive antenna = 1,
//!             sum of y over each transmit antenna = 1,
//! ```
//!
//! written as `G z + s = 0, s >= 0, A z = b` with `z = (x, y, t)`, solved with
//! Mehrotra's predictor-corrector. Each `t_e` touches exactly three
//! inequalities, so its Newton block is diagonal and is eliminated first; the
//! remaining `(x, y)` system is dense but only `M_R N_R + M_T N_T` wide.

use super::SolverStats;

/// Stop once the relative gap and residuals are this small.
const TARGET_GAP: f64 = 1e-9;
const TARGET_RESIDUAL: f64 = 1e-10;
/// Accept a stalled or capped run only within these. Degenerate instances
/// (fully correlated ports) stall with a dual residual near 1e-8.
pub(crate) const ACCEPT_GAP: f64 = 1e-7;
pub(crate) const ACCEPT_RESIDUAL: f64 = 1e-8;
pub(crate) const ACCEPT_DUAL_RESIDUAL: f64 = 1e-6;
const MAX_ITERATIONS: usize = 100;
const STEP_FRACTION: f64 = 0.99;
const REFINEMENT_ROUNDS: usize = 4;
const PIVOT_FLOOR: f64 = 1e-14;
/// Give up after this many iterations without improving the best iterate.
const STALL_LIMIT: usize = 5;

/// Sparse objective term: `t_e` with weight `weight` is bounded by `x[row]`
/// and `y[col]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Term {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

pub(crate) struct Structure<'a> {
    pub terms: &'a [Term],
    /// Ports per antenna on each side; `rx_groups * rx_ports` is the length of `x`.
    pub rx_groups: usize,
    pub rx_ports: usize,
    pub tx_groups: usize,
    pub tx_ports: usize,
}

pub(crate) struct IpmSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    /// Multipliers of the simplex equalities (receive antennas first).
    pub prices: Vec<f64>,
    pub stats: SolverStats,
}

/// Inequality slacks or multipliers, grouped by constraint family.
#[derive(Clone)]
struct Cone {
    x_lo: Vec<f64>,
    y_lo: Vec<f64>,
    t_lo: Vec<f64>,
    t_x: Vec<f64>,
    t_y: Vec<f64>,
}

impl Cone {
    fn filled(nx: usize, ny: usize, m: usize, v: f64) -> Self {
        Cone {
            x_lo: vec![v; nx],
            y_lo: vec![v; ny],
            t_lo: vec![v; m],
            t_x: vec![v; m],
            t_y: vec![v; m],
        }
    }

    fn parts(&self) -> [&Vec<f64>; 5] {
        [&self.x_lo, &self.y_lo, &self.t_lo, &self.t_x, &self.t_y]
    }

    fn parts_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [&mut self.x_lo, &mut self.y_lo, &mut self.t_lo, &mut self.t_x, &mut self.t_y]
    }

    fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.parts().into_iter().flat_map(|p| p.iter().copied())
    }

    fn len(&self) -> usize {
        self.parts().iter().map(|p| p.len()).sum()
    }

    fn zip_map(&self, other: &Cone, f: impl Fn(f64, f64) -> f64) -> Cone {
        let mut out = self.clone();
        for (o, b) in out.parts_mut().into_iter().zip(other.parts()) {
            for (a, &bv) in o.iter_mut().zip(b.iter()) {
                *a = f(*a, bv);
            }
        }
        out
    }

    fn dot(&self, other: &Cone) -> f64 {
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    fn axpy(&mut self, alpha: f64, d: &Cone) {
        for (o, b) in self.parts_mut().into_iter().zip(d.parts()) {
            for (a, &bv) in o.iter_mut().zip(b.iter()) {
                *a += alpha * bv;
            }
        }
    }
}

/// Largest step in `(0, 1]` keeping `v + alpha dv >= 0`.
fn max_step(v: &Cone, dv: &Cone) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|&(_, d)| d < 0.0)
        .map(|(a, d)| -a / d)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone)]
struct Primal {
    x: Vec<f64>,
    y: Vec<f64>,
    t: Vec<f64>,
}

impl Primal {
    fn axpy(&mut self, alpha: f64, d: &Primal) {
        for (a, b) in [(&mut self.x, &d.x), (&mut self.y, &d.y), (&mut self.t, &d.t)] {
            for (v, dv) in a.iter_mut().zip(b.iter()) {
                *v += alpha * dv;
            }
        }
    }
}

struct Lp<'a> {
    s: &'a Structure<'a>,
    nx: usize,
    ny: usize,
}

impl<'a> Lp<'a> {
    /// `G z`
    fn g_mul(&self, z: &Primal) -> Cone {
        let terms = self.s.terms;
        Cone {
            x_lo: z.x.iter().map(|v| -v).collect(),
            y_lo: z.y.iter().map(|v| -v).collect(),
            t_lo: z.t.iter().map(|v| -v).collect(),
            t_x: terms.iter().zip(&z.t).map(|(e, t)| t - z.x[e.row]).collect(),
            t_y: terms.iter().zip(&z.t).map(|(e, t)| t - z.y[e.col]).collect(),
        }
    }

    /// `G' v`
    fn gt_mul(&self, v: &Cone) -> Primal {
        let mut x: Vec<f64> = v.x_lo.iter().map(|a| -a).collect();
        let mut y: Vec<f64> = v.y_lo.iter().map(|a| -a).collect();
        let mut t = vec![0.0; self.s.terms.len()];
        for (e, term) in self.s.terms.iter().enumerate() {
            x[term.row] -= v.t_x[e];
            y[term.col] -= v.t_y[e];
            t[e] = -v.t_lo[e] + v.t_x[e] + v.t_y[e];
        }
        Primal { x, y, t }
    }

    /// `A z` (simplex sums, receive antennas first).
    fn a_mul(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let s = self.s;
        x.chunks(s.rx_ports)
            .chain(y.chunks(s.tx_ports))
            .map(|c| c.iter().sum())
            .collect()
    }

    /// Column of `A'` for equality `p`, as a dense `(x, y)` vector.
    fn equality_row(&self, p: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.nx + self.ny];
        let (start, len) = if p < self.s.rx_groups {
            (p * self.s.rx_ports, self.s.rx_ports)
        } else {
            (self.nx + (p - self.s.rx_groups) * self.s.tx_ports, self.s.tx_ports)
        };
        row[start..start + len].iter_mut().for_each(|v| *v = 1.0);
        row
    }

    fn groups(&self) -> usize {
        self.s.rx_groups + self.s.tx_groups
    }
}

/// Factored Newton system for one interior point.
struct Kkt {
    n: usize,
    /// Cholesky factor of the reduced `(x, y)` block.
    chol: Vec<f64>,
    /// Cholesky factor of `A K^-1 A'`.
    schur: Vec<f64>,
    /// `K^-1 A'`, one column per equality.
    k_inv_at: Vec<Vec<f64>>,
    h_tt: Vec<f64>,
    w: Cone,
}

/// In-place Cholesky of a dense SPD matrix. Pivots lost to cancellation are
/// floored relative to the diagonal; iterative refinement absorbs the error.
fn cholesky(a: &mut [f64], n: usize) {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        let scale = a[j * n + j].abs().max(1.0);
        let d = d.max(PIVOT_FLOOR * scale).sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * n + k] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= l[k * n + i] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
}

impl Kkt {
    fn factor(lp: &Lp, slack: &Cone, mult: &Cone) -> Kkt {
        let w = mult.zip_map(slack, |l, s| l / s);
        let (nx, ny) = (lp.nx, lp.ny);
        let n = nx + ny;
        let terms = lp.s.terms;
        let h_tt: Vec<f64> = (0..terms.len()).map(|e| w.t_lo[e] + w.t_x[e] + w.t_y[e]).collect();

        let mut k = vec![0.0; n * n];
        for r in 0..nx {
            k[r * n + r] = w.x_lo[r];
        }
        for c in 0..ny {
            k[(nx + c) * n + nx + c] = w.y_lo[c];
        }
        for (e, term) in terms.iter().enumerate() {
            let (wl, wx, wy, h) = (w.t_lo[e], w.t_x[e], w.t_y[e], h_tt[e]);
            let (r, c) = (term.row, nx + term.col);
            // Schur complement of the diagonal t block, written without cancellation.
            k[r * n + r] += wx * (wl + wy) / h;
            k[c * n + c] += wy * (wl + wx) / h;
            let off = -wx * wy / h;
            if r < c {
                k[c * n + r] += off;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                k[i * n + j] = k[j * n + i];
            }
        }
        cholesky(&mut k, n);

        let p = lp.groups();
        let k_inv_at: Vec<Vec<f64>> = (0..p)
            .map(|q| {
                let mut col = lp.equality_row(q);
                cholesky_solve(&k, n, &mut col);
                col
            })
            .collect();
        let mut schur = vec![0.0; p * p];
        for a in 0..p {
            let row = lp.equality_row(a);
            for b in 0..=a {
                let v: f64 = row.iter().zip(&k_inv_at[b]).map(|(r, c)| r * c).sum();
                schur[a * p + b] = v;
                schur[b * p + a] = v;
            }
        }
        cholesky(&mut schur, p);
        Kkt {
            n,
            chol: k,
            schur,
            k_inv_at,
            h_tt,
            w,
        }
    }

    /// Solves `G'WG dz + A' dnu = rz`, `A dz = rnu` for `(dz, dnu)`.
    fn solve(&self, lp: &Lp, rz: &Primal, rnu: &[f64]) -> (Primal, Vec<f64>) {
        let (nx, n) = (lp.nx, self.n);
        let terms = lp.s.terms;
        let mut red = Vec::with_capacity(n);
        red.extend_from_slice(&rz.x);
        red.extend_from_slice(&rz.y);
        for (e, term) in terms.iter().enumerate() {
            let f = rz.t[e] / self.h_tt[e];
            red[term.row] += self.w.t_x[e] * f;
            red[nx + term.col] += self.w.t_y[e] * f;
        }
        let mut k_inv_r = red.clone();
        cholesky_solve(&self.chol, n, &mut k_inv_r);
        let p = self.k_inv_at.len();
        let mut dnu: Vec<f64> = (0..p)
            .map(|q| {
                let row = lp.equality_row(q);
                row.iter().zip(&k_inv_r).map(|(a, b)| a * b).sum::<f64>() - rnu[q]
            })
            .collect();
        cholesky_solve(&self.schur, p, &mut dnu);
        let mut dxy = k_inv_r;
        for (q, col) in self.k_inv_at.iter().enumerate() {
            for (v, c) in dxy.iter_mut().zip(col) {
                *v -= dnu[q] * c;
            }
        }
        let dy = dxy.split_off(nx);
        let dx = dxy;
        let dt: Vec<f64> = terms
            .iter()
            .enumerate()
            .map(|(e, term)| {
                (rz.t[e] + self.w.t_x[e] * dx[term.row] + self.w.t_y[e] * dy[term.col]) / self.h_tt[e]
            })
            .collect();
        (Primal { x: dx, y: dy, t: dt }, dnu)
    }
}

impl Kkt {
    /// `(G'WG dz + A' dnu, A dz)` with the unfactored operators.
    fn apply(&self, lp: &Lp, dz: &Primal, dnu: &[f64]) -> (Primal, Vec<f64>) {
        let wg = self.w.zip_map(&lp.g_mul(dz), |w, g| w * g);
        let mut out = lp.gt_mul(&wg);
        add_prices(lp.s, dnu, &mut out);
        (out, lp.a_mul(&dz.x, &dz.y))
    }

    /// `solve` plus a few rounds of iterative refinement; the reduced block
    /// loses accuracy as slacks approach zero.
    fn refined_solve(&self, lp: &Lp, rz: &Primal, rnu: &[f64]) -> (Primal, Vec<f64>) {
        let (mut dz, mut dnu) = self.solve(lp, rz, rnu);
        for _ in 0..REFINEMENT_ROUNDS {
            let (lhs, eq) = self.apply(lp, &dz, &dnu);
            let ez = Primal {
                x: rz.x.iter().zip(&lhs.x).map(|(r, l)| r - l).collect(),
                y: rz.y.iter().zip(&lhs.y).map(|(r, l)| r - l).collect(),
                t: rz.t.iter().zip(&lhs.t).map(|(r, l)| r - l).collect(),
            };
            let enu: Vec<f64> = rnu.iter().zip(&eq).map(|(r, l)| r - l).collect();
            let (cz, cnu) = self.solve(lp, &ez, &enu);
            dz.axpy(1.0, &cz);
            dnu.iter_mut().zip(&cnu).for_each(|(v, c)| *v += c);
        }
        (dz, dnu)
    }
}

/// Adds `A' nu` to `out`.
fn add_prices(s: &Structure, nu: &[f64], out: &mut Primal) {
    for (q, &v) in nu.iter().enumerate() {
        let (start, len, target) = if q < s.rx_groups {
            (q * s.rx_ports, s.rx_ports, &mut out.x)
        } else {
            ((q - s.rx_groups) * s.tx_ports, s.tx_ports, &mut out.y)
        };
        target[start..start + len].iter_mut().for_each(|r| *r += v);
    }
}

fn inf_norm<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn solve(s: &Structure) -> IpmSolution {
    let nx = s.rx_groups * s.rx_ports;
    let ny = s.tx_groups * s.tx_ports;
    let m = s.terms.len();
    let lp = Lp { s, nx, ny };
    let b = vec![1.0; lp.groups()];
    let cost = Primal {
        x: vec![0.0; nx],
        y: vec![0.0; ny],
        t: s.terms.iter().map(|e| -e.weight).collect(),
    };
    let c_norm = inf_norm(&cost.t).max(1.0);

    // Strictly interior start: uniform simplices, t at half the smaller share.
    let x0 = 1.0 / s.rx_ports as f64;
    let y0 = 1.0 / s.tx_ports as f64;
    let mut z = Primal {
        x: vec![x0; nx],
        y: vec![y0; ny],
        t: vec![0.5 * x0.min(y0); m],
    };
    let mut slack = lp.g_mul(&z).zip_map(&Cone::filled(nx, ny, m, 0.0), |g, _| -g);
    let mut mult = Cone::filled(nx, ny, m, 1.0);
    let mut nu = vec![0.0; lp.groups()];
    let cone_dim = slack.len() as f64;

    let mut stats = SolverStats::default();
    let mut best: Option<(f64, Primal, Vec<f64>, SolverStats)> = None;
    let mut since_best = 0;
    for iteration in 0..=MAX_ITERATIONS {
        // residuals
        let gt_l = lp.gt_mul(&mult);
        let mut r_dual = Primal {
            x: cost.x.iter().zip(&gt_l.x).map(|(c, g)| c + g).collect(),
            y: cost.y.iter().zip(&gt_l.y).map(|(c, g)| c + g).collect(),
            t: cost.t.iter().zip(&gt_l.t).map(|(c, g)| c + g).collect(),
        };
        add_prices(s, &nu, &mut r_dual);
        let gz = lp.g_mul(&z);
        let r_ineq = gz.zip_map(&slack, |g, sl| g + sl);
        let az = lp.a_mul(&z.x, &z.y);
        let r_eq: Vec<f64> = az.iter().zip(&b).map(|(a, bb)| a - bb).collect();

        let gap = slack.dot(&mult);
        let pobj: f64 = cost.t.iter().zip(&z.t).map(|(c, t)| c * t).sum();
        let dobj: f64 = -b.iter().zip(&nu).map(|(bb, v)| bb * v).sum::<f64>();
        let rel_gap = gap / pobj.abs().max(dobj.abs()).max(1.0);
        let primal_res = r_ineq.iter().fold(inf_norm(&r_eq), |m, v| m.max(v.abs()));
        let dual_res = inf_norm(r_dual.x.iter().chain(&r_dual.y).chain(&r_dual.t)) / c_norm;
        stats = SolverStats {
            iterations: iteration,
            relative_gap: rel_gap,
            primal_residual: primal_res,
            dual_residual: dual_res,
            complementarity: slack.iter().zip(mult.iter()).map(|(a, b)| a * b).fold(0.0, f64::max),
            converged: false,
        };
        if rel_gap <= TARGET_GAP && primal_res <= TARGET_RESIDUAL && dual_res <= 10.0 * TARGET_GAP {
            stats.converged = true;
            best = None;
            break;
        }
        let merit = rel_gap.max(primal_res).max(dual_res);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, z.clone(), nu.clone(), stats));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL_LIMIT {
                break;
            }
        }
        if iteration == MAX_ITERATIONS {
            break;
        }

        let kkt = Kkt::factor(&lp, &slack, &mult);
        let mu = gap / cone_dim;

        // Newton direction for complementarity target `r_comp` (applied to s o l).
        let direction = |r_comp: &Cone| -> (Primal, Cone, Cone, Vec<f64>) {
            // dl = W (r_ineq + G dz) + r_comp / s
            let w_r = kkt.w.zip_map(&r_ineq, |w, r| w * r);
            let corr = r_comp.zip_map(&slack, |rc, sl| rc / sl);
            let g_term = lp.gt_mul(&w_r.zip_map(&corr, |a, c| a + c));
            let rz = Primal {
                x: r_dual.x.iter().zip(&g_term.x).map(|(r, g)| -r - g).collect(),
                y: r_dual.y.iter().zip(&g_term.y).map(|(r, g)| -r - g).collect(),
                t: r_dual.t.iter().zip(&g_term.t).map(|(r, g)| -r - g).collect(),
            };
            let rnu: Vec<f64> = r_eq.iter().map(|r| -r).collect();
            let (dz, dnu) = kkt.refined_solve(&lp, &rz, &rnu);
            let g_dz = lp.g_mul(&dz);
            let dl = kkt
                .w
                .zip_map(&r_ineq.zip_map(&g_dz, |a, g| a + g), |w, v| w * v)
                .zip_map(&corr, |a, c| a + c);
            // ds = -r_ineq - G dz
            let ds = r_ineq.zip_map(&g_dz, |r, g| -r - g);
            (dz, ds, dl, dnu)
        };

        let affine_target = slack.zip_map(&mult, |a, b| -a * b);
        let (_, ds_aff, dl_aff, _) = direction(&affine_target);
        let alpha_aff = max_step(&slack, &ds_aff).min(max_step(&mult, &dl_aff)).min(1.0);
        let mut s_aff = slack.clone();
        s_aff.axpy(alpha_aff, &ds_aff);
        let mut l_aff = mult.clone();
        l_aff.axpy(alpha_aff, &dl_aff);
        let mu_aff = s_aff.dot(&l_aff) / cone_dim;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        let cross = ds_aff.zip_map(&dl_aff, |a, b| a * b);
        let target = affine_target.zip_map(&cross, |a, c| a - c + sigma * mu);
        let (dz, ds, dl, dnu) = direction(&target);
        let alpha = (STEP_FRACTION * max_step(&slack, &ds).min(max_step(&mult, &dl))).min(1.0);
        if !(alpha > 1e-14) {
            break;
        }
        z.axpy(alpha, &dz);
        slack.axpy(alpha, &ds);
        mult.axpy(alpha, &dl);
        for (v, d) in nu.iter_mut().zip(&dnu) {
            *v += alpha * d;
        }
    }

    if let Some((_, bz, bnu, bstats)) = best {
        z = bz;
        nu = bnu;
        stats = bstats;
    }
    IpmSolution {
        x: z.x,
        y: z.y,
        t: z.t,
        prices: nu,
        stats,
    }
}
