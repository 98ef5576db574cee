//! Monte Carlo sweeps over port count, SNR or antenna size.
//!
//! Every trial draws one channel that all requested algorithms share, so the
//! per-trial comparison is paired. Channel seeds depend on the master seed and
//! the trial index only: trial `t` uses the same Gaussian components at every
//! sweep point (common random numbers), and adding or removing points leaves
//! the other points' trials untouched.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{generate_channel, FluidMimoConfig};
use crate::error::{Error, Result};
use crate::jcr::solve_jcr;
use crate::selection::{
    conventional_mimo, default_random_samples, exhaustive_search_capped, jcr_ao_from, jcr_res_from,
    random_selection, Algorithm, SelectionResult, DEFAULT_AO_EPSILON, DEFAULT_AO_MAX_ITERS,
    DEFAULT_EXHAUSTIVE_CAP,
};

const CHANNEL_STREAM: u64 = 0;
const RANDOM_BASELINE_STREAM: u64 = 1;

pub const RECORDS_HEADER: &str =
    "sweep_var,point_value,trial,algorithm,capacity_bits,ao_iterations,evaluations,wall_time_ms";
pub const SUMMARY_HEADER: &str =
    "sweep_var,point_value,algorithm,mean_capacity,stddev,ci95,mean_ratio,mean_ao_iterations";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// `N_R = N_T = value`.
    PortsPerAntenna,
    SnrDb,
    AntennaSizeW,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PortsPerAntenna => "n",
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::AntennaSizeW => "w",
        }
    }

    /// `base` with the swept quantity set to `value`.
    pub fn apply(self, base: &FluidMimoConfig, value: f64) -> Result<FluidMimoConfig> {
        let mut config = *base;
        match self {
            SweepVariable::PortsPerAntenna => {
                if !(value >= 1.0) || value.fract() != 0.0 || value > u32::MAX as f64 {
                    return Err(Error::config("values", format!("port count {value} is not a positive integer")));
                }
                config.n_r = value as usize;
                config.n_t = value as usize;
            }
            SweepVariable::SnrDb => config.snr_db = value,
            SweepVariable::AntennaSizeW => config.w = value,
        }
        config.validate()?;
        Ok(config)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" | "ports" => Ok(SweepVariable::PortsPerAntenna),
            "snr" | "snr_db" | "snr-db" => Ok(SweepVariable::SnrDb),
            "w" => Ok(SweepVariable::AntennaSizeW),
            _ => Err(Error::config("vary", format!("unknown sweep variable `{s}` (use n, snr or w)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: FluidMimoConfig,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    pub ao_epsilon: f64,
    pub ao_max_iters: usize,
    pub exhaustive_cap: u128,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn new(base: FluidMimoConfig, variable: SweepVariable, values: Vec<f64>) -> Self {
        SweepSpec {
            base,
            variable,
            values,
            trials: 100,
            algorithms: Algorithm::ALL.to_vec(),
            master_seed: 1,
            ao_epsilon: DEFAULT_AO_EPSILON,
            ao_max_iters: DEFAULT_AO_MAX_ITERS,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            threads: None,
        }
    }

    /// Checks everything that can be checked before running, including the
    /// exhaustive-search cap at every point. Returns the per-point configs.
    pub fn validate(&self) -> Result<Vec<FluidMimoConfig>> {
        self.base.validate()?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algos", "at least one algorithm is required"));
        }
        if self.values.is_empty() {
            return Err(Error::config("values", "at least one sweep value is required"));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("values", "must be strictly increasing"));
        }
        if !(self.ao_epsilon > 0.0) || !self.ao_epsilon.is_finite() {
            return Err(Error::config("epsilon", "must be positive"));
        }
        if self.ao_max_iters == 0 {
            return Err(Error::config("max-iters", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        let configs: Vec<FluidMimoConfig> = self
            .values
            .iter()
            .map(|&v| self.variable.apply(&self.base, v))
            .collect::<Result<_>>()?;
        if self.algorithms.contains(&Algorithm::Exhaustive) {
            for (config, value) in configs.iter().zip(&self.values) {
                let combinations = config.dims().combinations();
                if combinations > self.exhaustive_cap {
                    return Err(Error::CapExceeded {
                        combinations,
                        cap: self.exhaustive_cap,
                        context: Some(format!("sweep point {}={value}", self.variable)),
                    });
                }
            }
        }
        Ok(configs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point_index: usize,
    pub point_value: f64,
    pub trial: usize,
    pub algorithm: Algorithm,
    pub capacity_bits: f64,
    pub ao_iterations: usize,
    pub capacity_evaluations: u64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub point_index: usize,
    pub point_value: f64,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub mean_capacity: f64,
    /// Sample standard deviation (0 for a single trial).
    pub stddev: f64,
    /// Half-width of the normal-approximation 95% confidence interval.
    pub ci95: f64,
    /// Mean ratio to the exhaustive optimum of the same trial, when exhaustive ran.
    pub mean_ratio: Option<f64>,
    /// Trials left out of `mean_ratio` because the optimum was zero.
    pub ratio_excluded: usize,
    pub mean_ao_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub variable: SweepVariable,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<PointSummary>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `stream` of trial `trial`: `splitmix64(splitmix64(splitmix64(master) ^ trial) ^ stream)`.
/// Stream 0 draws the channel, stream 1 the random baseline.
pub fn derive_seed(master_seed: u64, trial: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ trial) ^ stream)
}

/// `achieved / optimal`; a zero optimum gives 1 if `achieved` is also zero and
/// `None` otherwise.
pub fn approximation_ratio(achieved: f64, optimal: f64) -> Option<f64> {
    if optimal > 0.0 {
        Some(achieved / optimal)
    } else if achieved == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

fn run_trial(
    spec: &SweepSpec,
    point_index: usize,
    config: &FluidMimoConfig,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let channel = generate_channel(config, derive_seed(spec.master_seed, trial as u64, CHANNEL_STREAM))?;
    let rho = config.rho();
    let relaxed = if spec.algorithms.iter().any(|a| a.uses_relaxation()) {
        let start = Instant::now();
        let relaxed = solve_jcr(&channel)?;
        Some((relaxed, start.elapsed().as_secs_f64() * 1e3))
    } else {
        None
    };

    let mut records = Vec::with_capacity(spec.algorithms.len());
    for &algorithm in &spec.algorithms {
        let start = Instant::now();
        let (result, extra_ms): (SelectionResult, f64) = match algorithm {
            Algorithm::Exhaustive => (exhaustive_search_capped(&channel, rho, spec.exhaustive_cap)?, 0.0),
            Algorithm::JcrRes => {
                let (relaxed, ms) = relaxed.as_ref().expect("relaxation solved");
                (jcr_res_from(&channel, rho, relaxed)?, *ms)
            }
            Algorithm::JcrAo => {
                let (relaxed, ms) = relaxed.as_ref().expect("relaxation solved");
                (jcr_ao_from(&channel, rho, relaxed, spec.ao_epsilon, spec.ao_max_iters)?, *ms)
            }
            Algorithm::Random => {
                let seed = derive_seed(spec.master_seed, trial as u64, RANDOM_BASELINE_STREAM);
                (random_selection(&channel, rho, default_random_samples(channel.dims()), seed)?, 0.0)
            }
            Algorithm::Conventional => (conventional_mimo(&channel, rho)?, 0.0),
        };
        records.push(TrialRecord {
            point_index,
            point_value: spec.values[point_index],
            trial,
            algorithm,
            capacity_bits: result.capacity_bits,
            ao_iterations: result.iterations,
            capacity_evaluations: result.evaluations,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3 + extra_ms,
        });
    }
    Ok(records)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    let configs = spec.validate()?;
    let mut algorithms = spec.algorithms.clone();
    algorithms.sort_by_key(|a| a.name());
    algorithms.dedup();
    let spec = SweepSpec {
        algorithms,
        ..spec.clone()
    };

    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let run = || -> Result<Vec<TrialRecord>> {
        let nested: Vec<Vec<TrialRecord>> = jobs
            .par_iter()
            .map(|&(p, t)| run_trial(&spec, p, &configs[p], t))
            .collect::<Result<_>>()?;
        Ok(nested.into_iter().flatten().collect())
    };
    let mut records = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    records.sort_by(|a, b| {
        (a.point_index, a.trial, a.algorithm.name()).cmp(&(b.point_index, b.trial, b.algorithm.name()))
    });
    let summaries = summarize(&records);
    Ok(SweepOutput {
        variable: spec.variable,
        records,
        summaries,
    })
}

/// Per-(point, algorithm) statistics. Input order does not matter.
pub fn summarize(records: &[TrialRecord]) -> Vec<PointSummary> {
    let mut optimum: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.algorithm == Algorithm::Exhaustive) {
        optimum.insert((r.point_index, r.trial), r.capacity_bits);
    }
    let mut groups: BTreeMap<(usize, &'static str), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.point_index, r.algorithm.name())).or_default().push(r);
    }
    groups
        .into_values()
        .map(|mut group| {
            group.sort_by_key(|r| r.trial);
            let n = group.len() as f64;
            let mean = group.iter().map(|r| r.capacity_bits).sum::<f64>() / n;
            let stddev = if group.len() > 1 {
                (group.iter().map(|r| (r.capacity_bits - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let mut ratios = Vec::new();
            let mut excluded = 0;
            let mut have_optimum = false;
            for r in &group {
                if let Some(&opt) = optimum.get(&(r.point_index, r.trial)) {
                    have_optimum = true;
                    match approximation_ratio(r.capacity_bits, opt) {
                        Some(v) => ratios.push(v),
                        None => excluded += 1,
                    }
                }
            }
            let mean_ratio = (have_optimum && !ratios.is_empty())
                .then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
            PointSummary {
                point_index: group[0].point_index,
                point_value: group[0].point_value,
                algorithm: group[0].algorithm,
                trials: group.len(),
                mean_capacity: mean,
                stddev,
                ci95: 1.96 * stddev / n.sqrt(),
                mean_ratio,
                ratio_excluded: excluded,
                mean_ao_iterations: group.iter().map(|r| r.ao_iterations as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Writes `records.csv`. Wall times are machine-dependent, so the column is
/// left empty unless `include_timing` is set; that keeps reruns byte-identical.
pub fn write_records_csv<W: Write>(
    variable: SweepVariable,
    records: &[TrialRecord],
    include_timing: bool,
    mut out: W,
) -> Result<()> {
    let mut buf = String::with_capacity(64 * (records.len() + 1));
    buf.push_str(RECORDS_HEADER);
    buf.push('\n');
    for r in records {
        write!(
            buf,
            "{},{:?},{},{},{:?},{},{},",
            variable, r.point_value, r.trial, r.algorithm, r.capacity_bits, r.ao_iterations, r.capacity_evaluations
        )
        .ok();
        if include_timing {
            write!(buf, "{:?}", r.wall_time_ms).ok();
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(variable: SweepVariable, summaries: &[PointSummary], mut out: W) -> Result<()> {
    let mut buf = String::new();
    buf.push_str(SUMMARY_HEADER);
    buf.push('\n');
    for s in summaries {
        let ratio = s.mean_ratio.map(|v| format!("{v:?}")).unwrap_or_default();
        writeln!(
            buf,
            "{},{:?},{},{:?},{:?},{:?},{},{:?}",
            variable, s.point_value, s.algorithm, s.mean_capacity, s.stddev, s.ci95, ratio, s.mean_ao_iterations
        )
        .ok();
    }
    out.write_all(buf.as_bytes())?;
    out.flush()?;
    Ok(())
}
