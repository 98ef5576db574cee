//! Channel capacity of a port selection, its padded selection-matrix form,
//! and the concave surrogate used by the relaxation.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::channel::{Dims, OverallChannel};
use crate::error::{Error, Result};

/// Full-size `Q` products above this many entries are refused by
/// [`capacity_q_form`].
pub const Q_FORM_ENTRY_LIMIT: usize = 10_000_000;

/// One selected port per fluid antenna, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PortSelection {
    pub rx_ports: Vec<usize>,
    pub tx_ports: Vec<usize>,
}

impl PortSelection {
    pub fn new(rx_ports: Vec<usize>, tx_ports: Vec<usize>) -> Self {
        PortSelection { rx_ports, tx_ports }
    }

    /// First port on every antenna.
    pub fn first(dims: Dims) -> Self {
        PortSelection {
            rx_ports: vec![0; dims.m_r],
            tx_ports: vec![0; dims.m_t],
        }
    }

    pub fn validate(&self, dims: Dims) -> Result<()> {
        if self.rx_ports.len() != dims.m_r || self.tx_ports.len() != dims.m_t {
            return Err(Error::Dimension(format!(
                "selection has {} rx / {} tx antennas, channel has {} / {}",
                self.rx_ports.len(),
                self.tx_ports.len(),
                dims.m_r,
                dims.m_t
            )));
        }
        if let Some(p) = self.rx_ports.iter().find(|&&p| p >= dims.n_r) {
            return Err(Error::Dimension(format!("rx port {} outside 1..={}", p + 1, dims.n_r)));
        }
        if let Some(p) = self.tx_ports.iter().find(|&&p| p >= dims.n_t) {
            return Err(Error::Dimension(format!("tx port {} outside 1..={}", p + 1, dims.n_t)));
        }
        Ok(())
    }

    /// Indicator vectors `(x, y)` of lengths `M_R N_R` and `M_T N_T`.
    pub fn to_binary(&self, dims: Dims) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; dims.rows()];
        let mut y = vec![0.0; dims.cols()];
        for (i, &n) in self.rx_ports.iter().enumerate() {
            x[i * dims.n_r + n] = 1.0;
        }
        for (j, &k) in self.tx_ports.iter().enumerate() {
            y[j * dims.n_t + k] = 1.0;
        }
        (x, y)
    }

    /// Inverse of [`to_binary`](Self::to_binary); each antenna block must be
    /// a 0/1 indicator with exactly one 1.
    pub fn from_binary(dims: Dims, x: &[f64], y: &[f64]) -> Result<Self> {
        fn decode(v: &[f64], antennas: usize, ports: usize, side: &str) -> Result<Vec<usize>> {
            if v.len() != antennas * ports {
                return Err(Error::Dimension(format!("{side} vector has length {}", v.len())));
            }
            v.chunks(ports)
                .enumerate()
                .map(|(a, block)| {
                    if block.iter().any(|&b| b != 0.0 && b != 1.0) {
                        return Err(Error::Domain(format!("{side} antenna {} is not binary", a + 1)));
                    }
                    let ones: Vec<usize> = (0..ports).filter(|&p| block[p] == 1.0).collect();
                    match ones.as_slice() {
                        [p] => Ok(*p),
                        _ => Err(Error::Domain(format!(
                            "{side} antenna {} selects {} ports",
                            a + 1,
                            ones.len()
                        ))),
                    }
                })
                .collect()
        }
        Ok(PortSelection {
            rx_ports: decode(x, dims.m_r, dims.n_r, "rx")?,
            tx_ports: decode(y, dims.m_t, dims.n_t, "tx")?,
        })
    }

    /// 1-based rendering, e.g. `rx=[3,1] tx=[2,5]`.
    pub fn display_one_based(&self) -> String {
        let fmt = |v: &[usize]| {
            v.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(",")
        };
        format!("rx=[{}] tx=[{}]", fmt(&self.rx_ports), fmt(&self.tx_ports))
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl EffectiveChannel {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows} x {cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(EffectiveChannel { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        EffectiveChannel {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

pub fn extract_effective(channel: &OverallChannel, sel: &PortSelection) -> Result<EffectiveChannel> {
    let dims = channel.dims();
    sel.validate(dims)?;
    let mut h = EffectiveChannel::zeros(dims.m_r, dims.m_t);
    fill_effective(channel, sel, &mut h.entries);
    Ok(h)
}

#[inline]
fn fill_effective(channel: &OverallChannel, sel: &PortSelection, out: &mut [Complex64]) {
    let d = channel.dims();
    for (i, &n) in sel.rx_ports.iter().enumerate() {
        for (j, &k) in sel.tx_ports.iter().enumerate() {
            out[i * d.m_t + j] = channel.coeff(i, n, j, k);
        }
    }
}

/// `log2 det(A)` for a Hermitian positive definite `A` (`n x n`, row-major,
/// only the lower triangle is read) via an in-place `L D L^H` factorization.
/// Returns `None` if a pivot is not positive.
pub(crate) fn hermitian_log2_det(a: &mut [Complex64], n: usize) -> Option<f64> {
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr() * a[k * n + k].re;
        }
        if !(d > 0.0) {
            return None;
        }
        a[j * n + j] = Complex64::new(d, 0.0);
        log_det += d.log2();
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k].conj() * a[k * n + k].re;
            }
            a[i * n + j] = v / d;
        }
    }
    Some(log_det)
}

/// Reusable scratch space for repeated capacity evaluations.
#[derive(Debug, Default, Clone)]
pub struct CapacityWorkspace {
    effective: Vec<Complex64>,
    gram: Vec<Complex64>,
}

impl CapacityWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Capacity of `sel` on `channel`. The selection is trusted to be in range.
    pub fn selection_capacity(&mut self, channel: &OverallChannel, sel: &PortSelection, rho: f64) -> f64 {
        let d = channel.dims();
        self.effective.resize(d.m_r * d.m_t, Complex64::new(0.0, 0.0));
        fill_effective(channel, sel, &mut self.effective);
        gram_log2_det(&self.effective, d.m_r, d.m_t, rho, &mut self.gram)
    }
}

/// `log2 det(I + rho G)` where `G` is the smaller of `H H^H` and `H^H H`
/// (`H^H H` iff `cols < rows`).
fn gram_log2_det(h: &[Complex64], rows: usize, cols: usize, rho: f64, gram: &mut Vec<Complex64>) -> f64 {
    let use_cols = cols < rows;
    let n = if use_cols { cols } else { rows };
    gram.clear();
    gram.resize(n * n, Complex64::new(0.0, 0.0));
    for a in 0..n {
        for b in 0..=a {
            let mut s = Complex64::new(0.0, 0.0);
            if use_cols {
                for r in 0..rows {
                    s += h[r * cols + a] * h[r * cols + b].conj();
                }
            } else {
                for c in 0..cols {
                    s += h[a * cols + c] * h[b * cols + c].conj();
                }
            }
            gram[a * n + b] = s * rho;
        }
        gram[a * n + a] += 1.0;
    }
    // I + rho G is Hermitian with eigenvalues >= 1, so the factorization succeeds
    // for finite input and the determinant is at least 1.
    hermitian_log2_det(gram, n).map_or(0.0, |v| v.max(0.0))
}

fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::Domain(format!("rho must be finite and non-negative, got {rho}")));
    }
    Ok(())
}

/// Shannon capacity `log2 det(I + rho H H^H)` in bits/s/Hz.
pub fn capacity(effective: &EffectiveChannel, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if effective.entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("channel has non-finite entries".into()));
    }
    let mut gram = Vec::new();
    Ok(gram_log2_det(&effective.entries, effective.rows, effective.cols, rho, &mut gram))
}

/// Capacity evaluated on the full-size masked matrix `Q = X G Y`, with
/// `log2 det(I + rho Q Q^H)` at dimension `M_R N_R`. Test-scale only.
pub fn capacity_q_form(channel: &OverallChannel, sel: &PortSelection, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let dims = channel.dims();
    sel.validate(dims)?;
    let (rows, cols) = (dims.rows(), dims.cols());
    if rows.saturating_mul(rows).max(rows.saturating_mul(cols)) > Q_FORM_ENTRY_LIMIT {
        return Err(Error::Dimension(format!(
            "full-size Q form of {rows} x {cols} exceeds {Q_FORM_ENTRY_LIMIT} entries"
        )));
    }
    if channel.entries().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("channel has non-finite entries".into()));
    }
    let (x, y) = sel.to_binary(dims);
    let q: Vec<Complex64> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| channel.get(r, c) * (x[r] * y[c]))
        .collect();
    let mut a = vec![Complex64::new(0.0, 0.0); rows * rows];
    for r1 in 0..rows {
        for r2 in 0..=r1 {
            let mut s = Complex64::new(0.0, 0.0);
            for c in 0..cols {
                s += q[r1 * cols + c] * q[r2 * cols + c].conj();
            }
            a[r1 * rows + r2] = s * rho;
        }
        a[r1 * rows + r1] += 1.0;
    }
    Ok(hermitian_log2_det(&mut a, rows).map_or(0.0, |v| v.max(0.0)))
}

fn check_unit_box(v: &[f64], len: usize, side: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::Dimension(format!("{side} has length {}, expected {len}", v.len())));
    }
    if let Some(p) = v.iter().position(|&a| !(0.0..=1.0).contains(&a)) {
        return Err(Error::Domain(format!("{side}[{p}] = {} outside [0, 1]", v[p])));
    }
    Ok(())
}

/// `U(x, y) = sum |g|^2 min(x_row, y_col)` over every entry of the channel.
pub fn surrogate_u(channel: &OverallChannel, x: &[f64], y: &[f64]) -> Result<f64> {
    check_unit_box(x, channel.rows(), "x")?;
    check_unit_box(y, channel.cols(), "y")?;
    let mut u = 0.0;
    for (r, &xr) in x.iter().enumerate() {
        if xr == 0.0 {
            continue;
        }
        for (c, &yc) in y.iter().enumerate() {
            u += channel.get(r, c).norm_sqr() * xr.min(yc);
        }
    }
    Ok(u)
}

/// Linear upper bound `(rho / ln 2) * U` on the capacity at a binary point.
pub fn capacity_upper_bound(u_value: f64, rho: f64) -> f64 {
    rho / LN_2 * u_value
}
