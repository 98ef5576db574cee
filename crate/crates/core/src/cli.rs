//! Command-line front end.
//!
//! Settings come from flags, an optional flat `key = value` file (`--config`)
//! and built-in defaults, in that order of precedence. File keys use the flag
//! names without dashes, e.g. `snr-db = 5` or `values = 5,10,15,20`.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::channel::{generate_channel, load_channel, save_channel, FluidMimoConfig, OverallChannel};
use crate::error::{Error, Result};
use crate::harness::{run_sweep, write_records_csv, write_summary_csv, SweepSpec, SweepVariable};
use crate::jcr::{build_lp, solve_jcr};
use crate::selection::{
    conventional_mimo, default_random_samples, exhaustive_search_capped, jcr_ao_from, jcr_res_from,
    random_selection, Algorithm, SelectionResult, DEFAULT_AO_EPSILON, DEFAULT_AO_MAX_ITERS,
    DEFAULT_EXHAUSTIVE_CAP,
};

#[derive(Debug, Parser)]
#[command(name = "fluid-mimo", version, about = "Fluid-MIMO antenna port selection for capacity maximization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a channel realization and write it to a file.
    Generate(GenerateArgs),
    /// Run port selection on one channel.
    Solve(SolveArgs),
    /// Run a Monte Carlo sweep and write records.csv / summary.csv.
    Sweep(SweepArgs),
}

/// Link parameters shared by all subcommands.
#[derive(Debug, Args, Default, Clone)]
pub struct LinkArgs {
    /// Flat key=value settings file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fluid antennas on both sides (M_R = M_T).
    #[arg(long)]
    pub m: Option<usize>,
    /// Ports per fluid antenna on both sides (N_R = N_T).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub mr: Option<usize>,
    #[arg(long)]
    pub mt: Option<usize>,
    #[arg(long)]
    pub nr: Option<usize>,
    #[arg(long)]
    pub nt: Option<usize>,
    /// Fluid antenna length in wavelengths.
    #[arg(long)]
    pub w: Option<f64>,
    /// Average SNR per receive fluid antenna, dB.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    /// Channel file; when absent a channel is generated from the link flags and --seed.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// exhaustive, jcr-res, jcr-ao, random, conventional or all.
    #[arg(long)]
    pub algo: Option<String>,
    /// Alternating optimization relative tolerance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Alternating optimization sweep cap.
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Random baseline sample count (default 5 (M_R N_R + M_T N_T)).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long = "random-seed")]
    pub random_seed: Option<u64>,
    /// Largest number of selections exhaustive search may enumerate.
    #[arg(long = "max-combinations")]
    pub max_combinations: Option<u128>,
    /// Emit one JSON object per algorithm instead of text.
    #[arg(long)]
    pub json: bool,
    /// Also write the relaxation LP in CPLEX LP format.
    #[arg(long = "dump-lp")]
    pub dump_lp: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    /// Swept quantity: n, snr or w.
    #[arg(long)]
    pub vary: Option<String>,
    /// Comma-separated, strictly increasing sweep values.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated algorithm names, or `all`.
    #[arg(long)]
    pub algos: Option<String>,
    #[arg(long = "master-seed")]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long = "max-combinations")]
    pub max_combinations: Option<u128>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Fill the wall_time_ms column (makes records.csv machine-dependent).
    #[arg(long = "record-timing")]
    pub record_timing: bool,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

const FILE_KEYS: &[&str] = &[
    "m", "n", "mr", "mt", "nr", "nt", "w", "snr-db", "seed", "algo", "epsilon", "max-iters", "samples",
    "random-seed", "max-combinations", "vary", "values", "trials", "algos", "master-seed", "threads",
];

/// Parsed `key = value` settings file.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    /// Parses flat `key = value` text. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().replace('_', "-");
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(Error::config(key, "unknown configuration key"));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::config(key, format!("cannot parse `{v}`"))))
            .transpose()
    }

    /// Flag value, else file value, else `default`.
    fn resolve<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

fn load_file(link: &LinkArgs) -> Result<ConfigFile> {
    link.config.as_deref().map(ConfigFile::load).transpose().map(Option::unwrap_or_default)
}

/// Resolves the link configuration; `M_R = M_T` and `N_R = N_T` unless set separately.
pub fn resolve_link(link: &LinkArgs, file: &ConfigFile) -> Result<FluidMimoConfig> {
    let defaults = FluidMimoConfig::default();
    let m = file.resolve("m", link.m, defaults.m_r)?;
    let n = file.resolve("n", link.n, defaults.n_r)?;
    // an explicit symmetric flag beats a side-specific file value
    let side = |key: &str, flag: Option<usize>, sym_flag: Option<usize>, sym: usize| -> Result<usize> {
        match (flag, sym_flag) {
            (Some(v), _) => Ok(v),
            (None, Some(v)) => Ok(v),
            (None, None) => file.resolve(key, None, sym),
        }
    };
    let config = FluidMimoConfig {
        m_r: side("mr", link.mr, link.m, m)?,
        m_t: side("mt", link.mt, link.m, m)?,
        n_r: side("nr", link.nr, link.n, n)?,
        n_t: side("nt", link.nt, link.n, n)?,
        snr_db: file.resolve("snr-db", link.snr_db, defaults.snr_db)?,
        w: file.resolve("w", link.w, defaults.w)?,
    };
    for (key, v) in [("m", link.m), ("n", link.n)] {
        if v == Some(0) {
            return Err(Error::config(key, "must be at least 1"));
        }
    }
    config.validate()?;
    Ok(config)
}

fn parse_algorithms(key: &str, text: &str) -> Result<Vec<Algorithm>> {
    let text = text.trim();
    if text == "all" {
        return Ok(Algorithm::ALL.to_vec());
    }
    let algos: Vec<Algorithm> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::config(key, format!("unknown algorithm `{s}`"))))
        .collect::<Result<_>>()?;
    if algos.is_empty() {
        return Err(Error::config(key, "at least one algorithm is required"));
    }
    Ok(algos)
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::config("values", format!("`{s}` is not a finite number")))
        })
        .collect()
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate(args) => cmd_generate(&args, out),
        Command::Solve(args) => cmd_solve(&args, out),
        Command::Sweep(args) => cmd_sweep(&args, out),
    }
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let file = load_file(&args.link)?;
    let config = resolve_link(&args.link, &file)?;
    let seed = file.resolve("seed", args.seed, 0)?;
    let channel = generate_channel(&config, seed)?;
    let handle = File::create(&args.out)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", args.out.display()))))?;
    save_channel(&channel, BufWriter::new(handle))?;
    writeln!(
        out,
        "wrote {} ({} x {} channel, M_R={} M_T={} N_R={} N_T={}, W={}, seed={})",
        args.out.display(),
        channel.rows(),
        channel.cols(),
        config.m_r,
        config.m_t,
        config.n_r,
        config.n_t,
        config.w,
        seed
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SolveLine<'a> {
    algorithm: &'a str,
    rx_ports: Vec<usize>,
    tx_ports: Vec<usize>,
    capacity_bits: f64,
    iterations: usize,
    evaluations: u64,
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let file = load_file(&args.link)?;
    let seed = file.resolve("seed", args.seed, 0)?;
    let (channel, snr_db): (OverallChannel, f64) = match &args.channel {
        Some(path) => {
            let handle = File::open(path)
                .map_err(|e| Error::config("channel", format!("cannot open {}: {e}", path.display())))?;
            let channel = load_channel(BufReader::new(handle))?;
            let snr_db = file.resolve("snr-db", args.link.snr_db, FluidMimoConfig::default().snr_db)?;
            (channel, snr_db)
        }
        None => {
            let config = resolve_link(&args.link, &file)?;
            (generate_channel(&config, seed)?, config.snr_db)
        }
    };
    if !snr_db.is_finite() {
        return Err(Error::config("snr-db", "must be finite"));
    }
    let dims = channel.dims();
    let rho = crate::channel::rho_from_snr_db(snr_db, dims.m_t);
    let algorithms = parse_algorithms("algo", &file.resolve("algo", args.algo.clone(), "all".to_string())?)?;
    let epsilon = file.resolve("epsilon", args.epsilon, DEFAULT_AO_EPSILON)?;
    let max_iters = file.resolve("max-iters", args.max_iters, DEFAULT_AO_MAX_ITERS)?;
    let samples = file.resolve("samples", args.samples, default_random_samples(dims))?;
    let random_seed = file.resolve("random-seed", args.random_seed, seed)?;
    let cap = file.resolve("max-combinations", args.max_combinations, DEFAULT_EXHAUSTIVE_CAP)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::config("epsilon", "must be positive"));
    }
    if max_iters == 0 {
        return Err(Error::config("max-iters", "must be at least 1"));
    }
    if samples == 0 {
        return Err(Error::config("samples", "must be at least 1"));
    }

    if let Some(path) = &args.dump_lp {
        fs::write(path, build_lp(&channel).to_lp_format())?;
    }
    let relaxed = if algorithms.iter().any(|a| a.uses_relaxation()) {
        Some(solve_jcr(&channel)?)
    } else {
        None
    };

    if !args.json {
        writeln!(
            out,
            "channel {} x {} (M_R={} M_T={} N_R={} N_T={}), snr={} dB, rho={}",
            dims.rows(),
            dims.cols(),
            dims.m_r,
            dims.m_t,
            dims.n_r,
            dims.n_t,
            snr_db,
            rho
        )?;
        if let Some(r) = &relaxed {
            writeln!(
                out,
                "relaxation U*={:.6} bound={:.6} bits/s/Hz ({} interior-point iterations)",
                r.u_star,
                crate::capacity::capacity_upper_bound(r.u_star, rho),
                r.stats.iterations
            )?;
        }
    }
    for algorithm in algorithms {
        let result: SelectionResult = match algorithm {
            Algorithm::Exhaustive => exhaustive_search_capped(&channel, rho, cap)?,
            Algorithm::JcrRes => jcr_res_from(&channel, rho, relaxed.as_ref().expect("relaxation"))?,
            Algorithm::JcrAo => jcr_ao_from(&channel, rho, relaxed.as_ref().expect("relaxation"), epsilon, max_iters)?,
            Algorithm::Random => random_selection(&channel, rho, samples, random_seed)?,
            Algorithm::Conventional => conventional_mimo(&channel, rho)?,
        };
        if args.json {
            let line = SolveLine {
                algorithm: algorithm.name(),
                rx_ports: result.selection.rx_ports.iter().map(|p| p + 1).collect(),
                tx_ports: result.selection.tx_ports.iter().map(|p| p + 1).collect(),
                capacity_bits: result.capacity_bits,
                iterations: result.iterations,
                evaluations: result.evaluations,
            };
            writeln!(out, "{}", serde_json::to_string(&line).expect("serializable"))?;
        } else {
            writeln!(
                out,
                "{:<13} {} capacity={:.6} bits/s/Hz iterations={} evaluations={}",
                algorithm.name(),
                result.selection.display_one_based(),
                result.capacity_bits,
                result.iterations,
                result.evaluations
            )?;
        }
    }
    Ok(())
}

/// Builds the sweep specification from flags and file.
pub fn resolve_sweep(args: &SweepArgs, file: &ConfigFile) -> Result<SweepSpec> {
    let base = resolve_link(&args.link, file)?;
    let variable: SweepVariable = match args.vary.clone().or(file.get("vary")?) {
        Some(v) => v.parse()?,
        None => return Err(Error::config("vary", "a sweep variable is required (n, snr or w)")),
    };
    let values = match args.values.clone().or(file.get("values")?) {
        Some(v) => parse_values(&v)?,
        None => return Err(Error::config("values", "sweep values are required")),
    };
    let mut spec = SweepSpec::new(base, variable, values);
    spec.trials = file.resolve("trials", args.trials, spec.trials)?;
    spec.algorithms = parse_algorithms("algos", &file.resolve("algos", args.algos.clone(), "all".to_string())?)?;
    spec.master_seed = file.resolve("master-seed", args.master_seed, spec.master_seed)?;
    spec.ao_epsilon = file.resolve("epsilon", args.epsilon, spec.ao_epsilon)?;
    spec.ao_max_iters = file.resolve("max-iters", args.max_iters, spec.ao_max_iters)?;
    spec.exhaustive_cap = file.resolve("max-combinations", args.max_combinations, spec.exhaustive_cap)?;
    spec.threads = match args.threads {
        Some(t) => Some(t),
        None => file.get("threads")?,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let file = load_file(&args.link)?;
    let spec = resolve_sweep(args, &file)?;
    let output = run_sweep(&spec)?;
    fs::create_dir_all(&args.out_dir)?;
    let records_path = args.out_dir.join("records.csv");
    let summary_path = args.out_dir.join("summary.csv");
    write_records_csv(output.variable, &output.records, args.record_timing, BufWriter::new(File::create(&records_path)?))?;
    write_summary_csv(output.variable, &output.summaries, BufWriter::new(File::create(&summary_path)?))?;

    writeln!(out, "{:>10} {:<13} {:>12} {:>10} {:>8} {:>8}", output.variable.name(), "algorithm", "capacity", "ci95", "ratio", "ao_iter")?;
    for s in &output.summaries {
        let ratio = s.mean_ratio.map(|r| format!("{:.4}", r)).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{:>10} {:<13} {:>12.6} {:>10.6} {:>8} {:>8.3}",
            s.point_value, s.algorithm.name(), s.mean_capacity, s.ci95, ratio, s.mean_ao_iterations
        )?;
    }
    writeln!(out, "wrote {} and {}", records_path.display(), summary_path.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing() {
        let f = ConfigFile::parse("# comment\nm = 3\nsnr_db = -5\n\nvalues = 1,2,3 # trailing\n").unwrap();
        assert_eq!(f.get::<usize>("m").unwrap(), Some(3));
        assert_eq!(f.get::<f64>("snr-db").unwrap(), Some(-5.0));
        assert_eq!(f.get::<String>("values").unwrap().as_deref(), Some("1,2,3"));
        assert!(matches!(ConfigFile::parse("bogus = 1"), Err(Error::Config { key, .. }) if key == "bogus"));
        assert!(matches!(ConfigFile::parse("m 3"), Err(Error::Parse { line: 1, .. })));
        let bad = ConfigFile::parse("nr = ten").unwrap();
        assert!(matches!(resolve_link(&LinkArgs::default(), &bad), Err(Error::Config { key, .. }) if key == "nr"));
    }

    #[test]
    fn precedence() {
        let file = ConfigFile::parse("m = 3\nnr = 4\nw = 2.0").unwrap();
        let mut link = LinkArgs::default();
        let c = resolve_link(&link, &file).unwrap();
        assert_eq!((c.m_r, c.m_t, c.n_r, c.n_t, c.w, c.snr_db), (3, 3, 4, 10, 2.0, 5.0));
        link.m = Some(1);
        link.nr = Some(6);
        link.w = Some(0.25);
        let c = resolve_link(&link, &file).unwrap();
        assert_eq!((c.m_r, c.m_t, c.n_r, c.n_t, c.w), (1, 1, 6, 10, 0.25));
        link.n = Some(0);
        assert!(resolve_link(&link, &file).is_err());
    }

    #[test]
    fn zero_ports_rejected_by_name() {
        let link = LinkArgs {
            nr: Some(0),
            ..LinkArgs::default()
        };
        let err = resolve_link(&link, &ConfigFile::default()).unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "nr"));
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`nr`"));
    }

    #[test]
    fn algorithm_lists() {
        assert_eq!(parse_algorithms("algos", "all").unwrap().len(), 5);
        assert_eq!(
            parse_algorithms("algos", "jcr-res, exhaustive").unwrap(),
            vec![Algorithm::JcrRes, Algorithm::Exhaustive]
        );
        assert!(parse_algorithms("algos", "").is_err());
        assert!(parse_algorithms("algos", "greedy").is_err());
    }
}
