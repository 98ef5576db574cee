//! Port selection strategies: exhaustive search, the two relaxation-based
//! heuristics (reduced exhaustive search and alternating optimization) and
//! the random / first-port baselines.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::{CapacityWorkspace, PortSelection};
use crate::channel::{Dims, OverallChannel};
use crate::error::{Error, Result};
use crate::jcr::{solve_jcr, RelaxedSolution};

/// Default cap on the number of selections exhaustive search will enumerate.
pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 100_000_000;
/// Alternating optimization defaults: relative tolerance and sweep cap.
pub const DEFAULT_AO_EPSILON: f64 = 1e-3;
pub const DEFAULT_AO_MAX_ITERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Exhaustive,
    JcrRes,
    JcrAo,
    Random,
    Conventional,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Exhaustive,
        Algorithm::JcrRes,
        Algorithm::JcrAo,
        Algorithm::Random,
        Algorithm::Conventional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::JcrRes => "jcr-res",
            Algorithm::JcrAo => "jcr-ao",
            Algorithm::Random => "random",
            Algorithm::Conventional => "conventional",
        }
    }

    pub fn uses_relaxation(self) -> bool {
        matches!(self, Algorithm::JcrRes | Algorithm::JcrAo)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config("algo", format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub selection: PortSelection,
    pub capacity_bits: f64,
    pub algorithm: Algorithm,
    /// Alternating-optimization sweeps (0 for other algorithms).
    pub iterations: usize,
    /// Capacity evaluations performed.
    pub evaluations: u64,
    /// Capacity after initialization and after each sweep (AO only).
    pub capacity_trace: Vec<f64>,
}

impl SelectionResult {
    fn new(algorithm: Algorithm, selection: PortSelection, capacity_bits: f64, evaluations: u64) -> Self {
        SelectionResult {
            selection,
            capacity_bits,
            algorithm,
            iterations: 0,
            evaluations,
            capacity_trace: Vec::new(),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::Domain(format!("rho must be finite and non-negative, got {rho}")));
    }
    Ok(())
}

/// Odometer over all selections: receive antennas are the outer digits,
/// transmit antennas the inner ones, ports ascending. Returns `false` after
/// the last selection.
fn advance(sel: &mut PortSelection, dims: Dims) -> bool {
    for p in sel.tx_ports.iter_mut().rev() {
        *p += 1;
        if *p < dims.n_t {
            return true;
        }
        *p = 0;
    }
    for p in sel.rx_ports.iter_mut().rev() {
        *p += 1;
        if *p < dims.n_r {
            return true;
        }
        *p = 0;
    }
    false
}

pub fn exhaustive_search(channel: &OverallChannel, rho: f64) -> Result<SelectionResult> {
    exhaustive_search_capped(channel, rho, DEFAULT_EXHAUSTIVE_CAP)
}

/// Global optimum by enumerating every selection. Ties keep the first
/// selection in enumeration order.
pub fn exhaustive_search_capped(channel: &OverallChannel, rho: f64, cap: u128) -> Result<SelectionResult> {
    check_rho(rho)?;
    let dims = channel.dims();
    let combinations = dims.combinations();
    if combinations > cap {
        return Err(Error::CapExceeded {
            combinations,
            cap,
            context: None,
        });
    }
    let mut ws = CapacityWorkspace::new();
    let mut sel = PortSelection::first(dims);
    let mut best = sel.clone();
    let mut best_c = f64::NEG_INFINITY;
    let mut evaluations = 0u64;
    loop {
        let c = ws.selection_capacity(channel, &sel, rho);
        evaluations += 1;
        if c > best_c {
            best_c = c;
            best.clone_from(&sel);
        }
        if !advance(&mut sel, dims) {
            break;
        }
    }
    Ok(SelectionResult::new(Algorithm::Exhaustive, best, best_c, evaluations))
}

/// `ceil(log2(n + 1))`, the number of ports kept per antenna by the reduced search.
pub fn reduced_port_count(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Indices of the `keep` largest weights, ties to the lower index, returned ascending.
fn top_ports(weights: &[f64], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    order
}

/// Relaxation followed by exhaustive search over the best-scored ports.
pub fn jcr_res(channel: &OverallChannel, rho: f64) -> Result<SelectionResult> {
    let relaxed = solve_jcr(channel)?;
    jcr_res_from(channel, rho, &relaxed)
}

/// [`jcr_res`] with an already solved relaxation.
pub fn jcr_res_from(channel: &OverallChannel, rho: f64, relaxed: &RelaxedSolution) -> Result<SelectionResult> {
    check_rho(rho)?;
    let dims = channel.dims();
    if relaxed.dims != dims {
        return Err(Error::Dimension("relaxed solution does not match the channel".into()));
    }
    let keep_r = reduced_port_count(dims.n_r).min(dims.n_r);
    let keep_t = reduced_port_count(dims.n_t).min(dims.n_t);
    let rx_keep: Vec<Vec<usize>> = (0..dims.m_r).map(|i| top_ports(relaxed.rx_weights(i), keep_r)).collect();
    let tx_keep: Vec<Vec<usize>> = (0..dims.m_t).map(|j| top_ports(relaxed.tx_weights(j), keep_t)).collect();
    let reduced = channel.submatrix(&rx_keep, &tx_keep)?;
    let inner = exhaustive_search_capped(&reduced, rho, u128::MAX)?;
    let selection = PortSelection::new(
        inner.selection.rx_ports.iter().enumerate().map(|(i, &p)| rx_keep[i][p]).collect(),
        inner.selection.tx_ports.iter().enumerate().map(|(j, &p)| tx_keep[j][p]).collect(),
    );
    Ok(SelectionResult::new(Algorithm::JcrRes, selection, inner.capacity_bits, inner.evaluations))
}

/// Rounds a relaxed solution to the largest-weight port per antenna, ties to
/// the lower index.
pub fn ao_round(relaxed: &RelaxedSolution) -> PortSelection {
    let argmax = |w: &[f64]| {
        w.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (p, &v)| if v > best.1 { (p, v) } else { best })
            .0
    };
    PortSelection::new(
        (0..relaxed.dims.m_r).map(|i| argmax(relaxed.rx_weights(i))).collect(),
        (0..relaxed.dims.m_t).map(|j| argmax(relaxed.tx_weights(j))).collect(),
    )
}

/// Relaxation, rounding, then cyclic per-antenna best-port sweeps.
pub fn jcr_ao(channel: &OverallChannel, rho: f64, epsilon: f64, max_iters: usize) -> Result<SelectionResult> {
    let relaxed = solve_jcr(channel)?;
    jcr_ao_from(channel, rho, &relaxed, epsilon, max_iters)
}

/// [`jcr_ao`] with an already solved relaxation.
///
/// A sweep visits receive antennas then transmit antennas; for each it tries
/// every port with the others fixed and keeps the last port whose capacity
/// is at least the best seen so far. Sweeps repeat while the capacity
/// changed by more than `epsilon` relative to the previous sweep, up to
/// `max_iters` sweeps.
pub fn jcr_ao_from(
    channel: &OverallChannel,
    rho: f64,
    relaxed: &RelaxedSolution,
    epsilon: f64,
    max_iters: usize,
) -> Result<SelectionResult> {
    check_rho(rho)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::config("epsilon", "must be positive"));
    }
    if max_iters == 0 {
        return Err(Error::config("max-iters", "must be at least 1"));
    }
    let dims = channel.dims();
    if relaxed.dims != dims {
        return Err(Error::Dimension("relaxed solution does not match the channel".into()));
    }
    let mut ws = CapacityWorkspace::new();
    let mut sel = ao_round(relaxed);
    let mut c_old = 0.0_f64;
    let mut c_new = ws.selection_capacity(channel, &sel, rho);
    let mut c_best = c_new;
    let mut evaluations = 1u64;
    let mut sweeps = 0usize;
    let mut trace = vec![c_new];

    while (c_new - c_old).abs() > c_old.abs() * epsilon && sweeps < max_iters {
        c_old = c_new;
        for i in 0..dims.m_r {
            let mut n_best = sel.rx_ports[i];
            for n in 0..dims.n_r {
                sel.rx_ports[i] = n;
                let c = ws.selection_capacity(channel, &sel, rho);
                evaluations += 1;
                if c >= c_best {
                    c_best = c;
                    n_best = n;
                }
            }
            sel.rx_ports[i] = n_best;
        }
        for j in 0..dims.m_t {
            let mut k_best = sel.tx_ports[j];
            for k in 0..dims.n_t {
                sel.tx_ports[j] = k;
                let c = ws.selection_capacity(channel, &sel, rho);
                evaluations += 1;
                if c >= c_best {
                    c_best = c;
                    k_best = k;
                }
            }
            sel.tx_ports[j] = k_best;
        }
        c_new = c_best;
        sweeps += 1;
        trace.push(c_new);
    }

    let mut result = SelectionResult::new(Algorithm::JcrAo, sel, c_new, evaluations);
    result.iterations = sweeps;
    result.capacity_trace = trace;
    Ok(result)
}

/// Baseline sample count `5 (M_R N_R + M_T N_T)`, i.e. `10 N M` for symmetric links.
pub fn default_random_samples(dims: Dims) -> usize {
    5 * (dims.rows() + dims.cols())
}

/// Best of `samples` uniform random selections (with replacement).
pub fn random_selection(channel: &OverallChannel, rho: f64, samples: usize, seed: u64) -> Result<SelectionResult> {
    check_rho(rho)?;
    if samples == 0 {
        return Err(Error::config("samples", "must be at least 1"));
    }
    let dims = channel.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ws = CapacityWorkspace::new();
    let mut sel = PortSelection::first(dims);
    let mut best = sel.clone();
    let mut best_c = f64::NEG_INFINITY;
    for _ in 0..samples {
        sel.rx_ports.iter_mut().for_each(|p| *p = rng.random_range(0..dims.n_r));
        sel.tx_ports.iter_mut().for_each(|p| *p = rng.random_range(0..dims.n_t));
        let c = ws.selection_capacity(channel, &sel, rho);
        if c > best_c {
            best_c = c;
            best.clone_from(&sel);
        }
    }
    Ok(SelectionResult::new(Algorithm::Random, best, best_c, samples as u64))
}

/// First port of every fluid antenna.
pub fn conventional_mimo(channel: &OverallChannel, rho: f64) -> Result<SelectionResult> {
    check_rho(rho)?;
    let sel = PortSelection::first(channel.dims());
    let c = CapacityWorkspace::new().selection_capacity(channel, &sel, rho);
    Ok(SelectionResult::new(Algorithm::Conventional, sel, c, 1))
}
