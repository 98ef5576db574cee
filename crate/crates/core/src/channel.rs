//! Spatially correlated fluid-MIMO channel model and channel file I/O.
//!
//! Every port of a fluid antenna sees the same block-shared Gaussian pair
//! `(u0, v0)` mixed with a private pair `(u, v)`; the mixing weight is the
//! Bessel-based correlation parameter, so `W = 0` collapses each block to a
//! single coefficient and large `W` decorrelates the ports.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bessel::j0_unchecked;
use crate::error::{Error, Result};

/// Antenna and port counts of a fluid-MIMO link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    /// Receive fluid antennas.
    pub m_r: usize,
    /// Transmit fluid antennas.
    pub m_t: usize,
    /// Ports per receive fluid antenna.
    pub n_r: usize,
    /// Ports per transmit fluid antenna.
    pub n_t: usize,
}

impl Dims {
    pub fn new(m_r: usize, m_t: usize, n_r: usize, n_t: usize) -> Result<Self> {
        let dims = Dims { m_r, m_t, n_r, n_t };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, value) in [("mr", self.m_r), ("mt", self.m_t), ("nr", self.n_r), ("nt", self.n_t)] {
            if value == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Rows of the overall channel, `M_R * N_R`.
    pub fn rows(&self) -> usize {
        self.m_r * self.n_r
    }

    /// Columns of the overall channel, `M_T * N_T`.
    pub fn cols(&self) -> usize {
        self.m_t * self.n_t
    }

    /// Number of feasible port selections, `N_R^M_R * N_T^M_T`, saturating.
    pub fn combinations(&self) -> u128 {
        let pow = |base: usize, exp: usize| {
            (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
        };
        pow(self.n_r, self.m_r).saturating_mul(pow(self.n_t, self.m_t))
    }
}

/// Link configuration: dimensions, average receive SNR and normalized antenna length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidMimoConfig {
    pub m_r: usize,
    pub m_t: usize,
    pub n_r: usize,
    pub n_t: usize,
    /// Average SNR per receive fluid antenna, in dB.
    pub snr_db: f64,
    /// Fluid antenna length in wavelengths.
    pub w: f64,
}

impl Default for FluidMimoConfig {
    fn default() -> Self {
        FluidMimoConfig {
            m_r: 2,
            m_t: 2,
            n_r: 10,
            n_t: 10,
            snr_db: 5.0,
            w: 0.5,
        }
    }
}

impl FluidMimoConfig {
    pub fn symmetric(m: usize, n: usize, snr_db: f64, w: f64) -> Result<Self> {
        let config = FluidMimoConfig {
            m_r: m,
            m_t: m,
            n_r: n,
            n_t: n,
            snr_db,
            w,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims().validate()?;
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr-db", "must be finite"));
        }
        if !self.w.is_finite() || self.w < 0.0 {
            return Err(Error::config("w", "must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        Dims {
            m_r: self.m_r,
            m_t: self.m_t,
            n_r: self.n_r,
            n_t: self.n_t,
        }
    }

    /// Per-transmit-antenna SNR factor `rho = 10^(snr_db / 10) / M_T`.
    pub fn rho(&self) -> f64 {
        rho_from_snr_db(self.snr_db, self.m_t)
    }
}

pub fn rho_from_snr_db(snr_db: f64, m_t: usize) -> f64 {
    10f64.powf(snr_db / 10.0) / m_t as f64
}

/// Port-pair correlation parameters, `N_R x N_T`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    n_r: usize,
    n_t: usize,
    mu: Vec<f64>,
}

impl CorrelationProfile {
    /// `mu[n][k]` with 0-based port indices.
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.mu[n * self.n_t + k]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_r, self.n_t)
    }

    pub fn transpose(&self) -> CorrelationProfile {
        let mut mu = vec![0.0; self.mu.len()];
        for n in 0..self.n_r {
            for k in 0..self.n_t {
                mu[k * self.n_r + n] = self.get(n, k);
            }
        }
        CorrelationProfile {
            n_r: self.n_t,
            n_t: self.n_r,
            mu,
        }
    }
}

/// Bessel argument for port `index` (0-based) of an antenna with `count`
/// evenly spaced ports over a length of `w` wavelengths. A lone port sits at 0.
fn port_argument(index: usize, count: usize, w: f64) -> f64 {
    if count <= 1 {
        0.0
    } else {
        2.0 * PI * index as f64 * w / (count - 1) as f64
    }
}

pub fn correlation_profile(n_r: usize, n_t: usize, w: f64) -> Result<CorrelationProfile> {
    if n_r == 0 {
        return Err(Error::config("nr", "must be at least 1"));
    }
    if n_t == 0 {
        return Err(Error::config("nt", "must be at least 1"));
    }
    if !w.is_finite() || w < 0.0 {
        return Err(Error::config("w", "must be finite and non-negative"));
    }
    let rx: Vec<f64> = (0..n_r).map(|n| j0_unchecked(port_argument(n, n_r, w))).collect();
    let tx: Vec<f64> = (0..n_t).map(|k| j0_unchecked(port_argument(k, n_t, w))).collect();
    let mut mu = Vec::with_capacity(n_r * n_t);
    for a in &rx {
        for b in &tx {
            mu.push(0.5 * (a + b));
        }
    }
    Ok(CorrelationProfile { n_r, n_t, mu })
}

/// Dense `(M_R N_R) x (M_T N_T)` channel. Row `i * N_R + n` is port `n` of
/// receive antenna `i`, column `j * N_T + k` is port `k` of transmit antenna
/// `j` (all 0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct OverallChannel {
    dims: Dims,
    entries: Vec<Complex64>,
}

impl OverallChannel {
    pub fn from_entries(dims: Dims, entries: Vec<Complex64>) -> Result<Self> {
        dims.validate()?;
        if entries.len() != dims.rows() * dims.cols() {
            return Err(Error::Dimension(format!(
                "expected {} x {} = {} entries, got {}",
                dims.rows(),
                dims.cols(),
                dims.rows() * dims.cols(),
                entries.len()
            )));
        }
        Ok(OverallChannel { dims, entries })
    }

    /// Builds a channel by evaluating `f(row, col)` for every entry.
    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        dims.validate()?;
        let mut entries = Vec::with_capacity(dims.rows() * dims.cols());
        for r in 0..dims.rows() {
            for c in 0..dims.cols() {
                entries.push(f(r, c));
            }
        }
        Ok(OverallChannel { dims, entries })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn rows(&self) -> usize {
        self.dims.rows()
    }

    pub fn cols(&self) -> usize {
        self.dims.cols()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dims.cols() + col]
    }

    /// Coefficient between port `n` of receive antenna `i` and port `k` of
    /// transmit antenna `j`.
    #[inline]
    pub fn coeff(&self, i: usize, n: usize, j: usize, k: usize) -> Complex64 {
        self.get(i * self.dims.n_r + n, j * self.dims.n_t + k)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Sub-channel keeping, per receive antenna, the listed ports (in order),
    /// and likewise per transmit antenna. Every antenna must keep the same
    /// number of ports.
    pub fn submatrix(&self, rx_keep: &[Vec<usize>], tx_keep: &[Vec<usize>]) -> Result<Self> {
        let d = self.dims;
        if rx_keep.len() != d.m_r || tx_keep.len() != d.m_t {
            return Err(Error::Dimension("keep-set count does not match antenna count".into()));
        }
        let k_r = rx_keep[0].len();
        let k_t = tx_keep[0].len();
        if rx_keep.iter().any(|p| p.len() != k_r || p.iter().any(|&n| n >= d.n_r))
            || tx_keep.iter().any(|p| p.len() != k_t || p.iter().any(|&k| k >= d.n_t))
        {
            return Err(Error::Dimension("ragged or out-of-range keep-set".into()));
        }
        let rows: Vec<usize> = rx_keep
            .iter()
            .enumerate()
            .flat_map(|(i, ports)| ports.iter().map(move |&n| i * d.n_r + n))
            .collect();
        let cols: Vec<usize> = tx_keep
            .iter()
            .enumerate()
            .flat_map(|(j, ports)| ports.iter().map(move |&k| j * d.n_t + k))
            .collect();
        let dims = Dims::new(d.m_r, d.m_t, k_r, k_t)?;
        OverallChannel::from_fn(dims, |r, c| self.get(rows[r], cols[c]))
    }
}

/// Draws a channel realization.
///
/// Each block `(i, j)` uses its own ChaCha8 stream (stream id `i * M_T + j`)
/// under the shared `seed`. Within a block the draw order is `u0, v0`, then
/// `u, v` for every port pair in `(n, k)` row-major order. All Gaussian
/// components have variance 1/2.
pub fn generate_channel(config: &FluidMimoConfig, seed: u64) -> Result<OverallChannel> {
    config.validate()?;
    let dims = config.dims();
    let profile = correlation_profile(dims.n_r, dims.n_t, config.w)?;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = vec![Complex64::new(0.0, 0.0); dims.rows() * dims.cols()];
    let cols = dims.cols();
    for i in 0..dims.m_r {
        for j in 0..dims.m_t {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((i * dims.m_t + j) as u64);
            let mut normal = || -> f64 { scale * rng.sample::<f64, _>(StandardNormal) };
            let u0 = normal();
            let v0 = normal();
            for n in 0..dims.n_r {
                for k in 0..dims.n_t {
                    let mu = profile.get(n, k);
                    let private = (1.0 - mu * mu).max(0.0).sqrt();
                    let u = normal();
                    let v = normal();
                    entries[(i * dims.n_r + n) * cols + j * dims.n_t + k] =
                        Complex64::new(private * u + mu * u0, private * v + mu * v0);
                }
            }
        }
    }
    OverallChannel::from_entries(dims, entries)
}

const FILE_MAGIC: &str = "# fluid-mimo channel";
const COLUMN_HEADER: &str = "i,n,j,k,re,im";

/// Writes the channel as text: a dimension line, the column header
/// `i,n,j,k,re,im`, then one row per coefficient with 1-based indices.
/// Floats use the shortest representation that round-trips exactly.
pub fn save_channel<W: Write>(channel: &OverallChannel, mut out: W) -> Result<()> {
    let d = channel.dims();
    let mut buf = String::new();
    writeln!(buf, "{FILE_MAGIC} m_r={} m_t={} n_r={} n_t={}", d.m_r, d.m_t, d.n_r, d.n_t).ok();
    writeln!(buf, "{COLUMN_HEADER}").ok();
    for i in 0..d.m_r {
        for n in 0..d.n_r {
            for j in 0..d.m_t {
                for k in 0..d.n_t {
                    let g = channel.coeff(i, n, j, k);
                    writeln!(buf, "{},{},{},{},{:?},{:?}", i + 1, n + 1, j + 1, k + 1, g.re, g.im).ok();
                }
            }
        }
    }
    out.write_all(buf.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn parse_dims_line(line: &str) -> Result<Dims> {
    let bad = |reason: &str| Error::Parse {
        line: 1,
        reason: reason.to_string(),
    };
    let rest = line
        .strip_prefix(FILE_MAGIC)
        .ok_or_else(|| bad("missing channel header line"))?;
    let mut values = [None; 4];
    for token in rest.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| bad("malformed header token"))?;
        let slot = match key {
            "m_r" => 0,
            "m_t" => 1,
            "n_r" => 2,
            "n_t" => 3,
            _ => return Err(bad(&format!("unknown header key `{key}`"))),
        };
        let v: usize = value
            .parse()
            .map_err(|_| bad(&format!("header value for `{key}` is not a count")))?;
        values[slot] = Some(v);
    }
    match values {
        [Some(m_r), Some(m_t), Some(n_r), Some(n_t)] => {
            Dims::new(m_r, m_t, n_r, n_t).map_err(|e| bad(&e.to_string()))
        }
        _ => Err(bad("header must declare m_r, m_t, n_r and n_t")),
    }
}

pub fn load_channel<R: BufRead>(input: R) -> Result<OverallChannel> {
    let mut lines = input.lines();
    let first = lines.next().transpose()?.ok_or(Error::Parse {
        line: 1,
        reason: "empty file".into(),
    })?;
    let dims = parse_dims_line(first.trim_end())?;
    let second = lines.next().transpose()?.unwrap_or_default();
    if second.trim() != COLUMN_HEADER {
        return Err(Error::Parse {
            line: 2,
            reason: format!("expected column header `{COLUMN_HEADER}`"),
        });
    }

    let total = dims.rows() * dims.cols();
    let mut entries: Vec<Option<Complex64>> = vec![None; total];
    let mut seen = 0usize;
    let mut last_line = 2;
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 3;
        last_line = line_no;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse { line: line_no, reason };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let mut idx = [0usize; 4];
        let limits = [dims.m_r, dims.n_r, dims.m_t, dims.n_t];
        for (slot, field) in fields[..4].iter().enumerate() {
            let v: usize = field
                .trim()
                .parse()
                .map_err(|_| err(format!("index `{field}` is not a positive integer")))?;
            if v == 0 || v > limits[slot] {
                return Err(err(format!("index {v} outside 1..={}", limits[slot])));
            }
            idx[slot] = v - 1;
        }
        let parse_f = |s: &str| -> Result<f64> {
            let v: f64 = s.trim().parse().map_err(|_| err(format!("`{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("non-finite value `{s}`")))
            }
        };
        let g = Complex64::new(parse_f(fields[4])?, parse_f(fields[5])?);
        let pos = (idx[0] * dims.n_r + idx[1]) * dims.cols() + idx[2] * dims.n_t + idx[3];
        if entries[pos].replace(g).is_some() {
            return Err(err("duplicate entry".into()));
        }
        seen += 1;
    }
    if seen != total {
        return Err(Error::Parse {
            line: last_line,
            reason: format!("header declares {total} entries but body has {seen}"),
        });
    }
    let entries = entries.into_iter().map(|g| g.expect("all entries seen")).collect();
    OverallChannel::from_entries(dims, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::oracle::j0_series;

    #[test]
    fn profile_examples() {
        let p = correlation_profile(10, 10, 0.0).unwrap();
        assert!(p.mu.iter().all(|&m| m == 1.0));
        let p = correlation_profile(10, 10, 0.5).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        let expected = 0.5 * (1.0 + j0_series(PI));
        assert!((expected - 0.347_88).abs() < 1e-5);
        assert!((p.get(0, 9) - expected).abs() < 1e-5);
    }

    #[test]
    fn profile_single_port() {
        let p = correlation_profile(1, 4, 0.5).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert!(p.get(0, 3) < 1.0);
        assert!(correlation_profile(0, 4, 0.5).is_err());
        assert!(correlation_profile(4, 4, -0.1).is_err());
    }

    #[test]
    fn zero_width_collapses_blocks() {
        let config = FluidMimoConfig::symmetric(2, 3, 5.0, 0.0).unwrap();
        let ch = generate_channel(&config, 11).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let g = ch.coeff(i, 0, j, 0);
                for n in 0..3 {
                    for k in 0..3 {
                        assert_eq!(ch.coeff(i, n, j, k), g);
                    }
                }
            }
        }
        assert_ne!(ch.coeff(0, 0, 0, 0), ch.coeff(1, 0, 0, 0));
    }

    #[test]
    fn generation_is_deterministic() {
        let config = FluidMimoConfig::default();
        let a = generate_channel(&config, 7).unwrap();
        let b = generate_channel(&config, 7).unwrap();
        let c = generate_channel(&config, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unit_power_normalization() {
        let config = FluidMimoConfig::symmetric(1, 10, 5.0, 0.5).unwrap();
        let samples = 100_000;
        let (mut power, mut re2, mut im2) = (0.0, 0.0, 0.0);
        for seed in 0..samples {
            let g = generate_channel(&config, seed).unwrap().coeff(0, 0, 0, 0);
            power += g.norm_sqr();
            re2 += g.re * g.re;
            im2 += g.im * g.im;
        }
        let n = samples as f64;
        assert!((power / n - 1.0).abs() < 0.02, "mean power {}", power / n);
        assert!((re2 / n - 0.5).abs() < 0.02);
        assert!((im2 / n - 0.5).abs() < 0.02);
    }

    #[test]
    fn wide_antennas_decorrelate_ports() {
        let config = FluidMimoConfig::symmetric(1, 10, 5.0, 50.0).unwrap();
        let samples = 100_000;
        let pairs = [((0, 0), (1, 0)), ((2, 3), (7, 8)), ((0, 0), (9, 9)), ((3, 5), (6, 2))];
        let mu = correlation_profile(10, 10, 50.0).unwrap();
        let mut acc = vec![Complex64::new(0.0, 0.0); pairs.len()];
        for seed in 0..samples {
            let ch = generate_channel(&config, seed).unwrap();
            for (slot, &((n1, k1), (n2, k2))) in pairs.iter().enumerate() {
                acc[slot] += ch.coeff(0, n1, 0, k1) * ch.coeff(0, n2, 0, k2).conj();
            }
        }
        for (a, &((n1, k1), (n2, k2))) in acc.iter().zip(&pairs) {
            // unit power on both sides, and only the shared term correlates
            let expected = mu.get(n1, k1) * mu.get(n2, k2);
            assert!((a / samples as f64 - expected).norm() < 0.02, "{a} vs {expected}");
        }
        assert!((acc[3] / samples as f64).norm() < 0.05);
    }

    #[test]
    fn file_example_row() {
        let dims = Dims::new(1, 1, 1, 1).unwrap();
        let ch = OverallChannel::from_entries(dims, vec![Complex64::new(1.0, 2.0)]).unwrap();
        let mut buf = Vec::new();
        save_channel(&ch, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "i,n,j,k,re,im");
        assert_eq!(lines[2], "1,1,1,1,1.0,2.0");
        assert_eq!(load_channel(&buf[..]).unwrap(), ch);
    }

    #[test]
    fn file_row_count_mismatch() {
        let text = "# fluid-mimo channel m_r=1 m_t=1 n_r=2 n_t=2\ni,n,j,k,re,im\n\
                    1,1,1,1,0.5,0.5\n1,1,1,2,0.5,0.5\n1,2,1,1,0.5,0.5\n";
        match load_channel(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn file_malformed_rows() {
        let head = "# fluid-mimo channel m_r=1 m_t=1 n_r=1 n_t=1\ni,n,j,k,re,im\n";
        for body in ["1,1,1,1,abc,0\n", "1,1,1,2,0,0\n", "1,1,1,1,0\n", "1,1,1,1,0,0\n1,1,1,1,0,0\n"] {
            let text = format!("{head}{body}");
            assert!(matches!(load_channel(text.as_bytes()), Err(Error::Parse { line: 3 | 4, .. })));
        }
        assert!(matches!(
            load_channel("garbage\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn generated_channel_round_trips() {
        let config = FluidMimoConfig::symmetric(2, 4, 5.0, 0.7).unwrap();
        let ch = generate_channel(&config, 99).unwrap();
        let mut buf = Vec::new();
        save_channel(&ch, &mut buf).unwrap();
        assert_eq!(load_channel(&buf[..]).unwrap(), ch);
    }

    #[test]
    fn submatrix_picks_rows_and_cols() {
        let dims = Dims::new(2, 1, 3, 2).unwrap();
        let ch = OverallChannel::from_fn(dims, |r, c| Complex64::new(r as f64, c as f64)).unwrap();
        let sub = ch.submatrix(&[vec![2], vec![0]], &[vec![1]]).unwrap();
        assert_eq!(sub.dims(), Dims::new(2, 1, 1, 1).unwrap());
        assert_eq!(sub.get(0, 0), Complex64::new(2.0, 1.0));
        assert_eq!(sub.get(1, 0), Complex64::new(3.0, 1.0));
    }
}
