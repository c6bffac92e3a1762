//! Flags, the optional JSON config file, and their merge into a [`JobSpec`].

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use prismconn::channel::ModelSpec;
use prismconn::geometry::DomainSpec;
use prismconn::quadrature::DEFAULT_REL_TOL;
use serde::Deserialize;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_100_531;
pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_OUT: &str = "prismconn-out";
const DEFAULT_PHASE_RHO: &str = "0.02:3:0.02";
const DEFAULT_PHASE_LENGTHS: &str = "2:60:1";

#[derive(Debug, Parser)]
#[command(name = "prismconn", version, about = "Full-connectivity probability of dense networks in right prisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Analytic,
    Simulate,
    Compare,
    PhaseMap,
    Validate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary expansion of the outage probability, term by term.
    Analytic(JobArgs),
    /// Monte Carlo estimate of full connectivity.
    Simulate(JobArgs),
    /// Expansion and simulation on the same sweep, with z-scores.
    Compare(JobArgs),
    /// Dominant term over a (density, side length) grid for the house.
    PhaseMap(JobArgs),
    /// Closed forms against adaptive quadrature.
    Validate(JobArgs),
}

impl Command {
    pub fn split(self) -> (CommandKind, JobArgs) {
        match self {
            Command::Analytic(a) => (CommandKind::Analytic, a),
            Command::Simulate(a) => (CommandKind::Simulate, a),
            Command::Compare(a) => (CommandKind::Compare, a),
            Command::PhaseMap(a) => (CommandKind::PhaseMap, a),
            Command::Validate(a) => (CommandKind::Validate, a),
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct JobArgs {
    /// JSON file with any of the options below; it wins over flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Domain as a JSON file or inline JSON, e.g. '{"kind":"house","L":5}'.
    #[arg(long)]
    pub domain: Option<String>,
    /// Model as a JSON file or inline JSON, e.g. '{"family":"mimo_mrc_2x2","beta":1}'.
    #[arg(long)]
    pub model: Option<String>,
    /// Density range `start:stop:step`, both ends included.
    #[arg(long, conflicts_with_all = ["rho_list", "n_list"])]
    pub rho: Option<String>,
    /// Comma-separated densities.
    #[arg(long, value_delimiter = ',', num_args = 0.., conflicts_with = "n_list")]
    pub rho_list: Option<Vec<f64>>,
    /// Comma-separated node counts (density = N / volume).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub n_list: Option<Vec<usize>>,
    /// House side lengths for phase-map, `start:stop:step`.
    #[arg(long, conflicts_with = "length_list")]
    pub lengths: Option<String>,
    /// Comma-separated house side lengths for phase-map.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub length_list: Option<Vec<f64>>,
    /// Trials per sweep point [default: 10000].
    #[arg(long)]
    pub trials: Option<u64>,
    /// Base seed [default: 20100531].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: prismconn-out].
    #[arg(long, env = "PRISMCONN_OUT")]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Use the quadrature oracle instead of closed forms (any smooth model).
    #[arg(long)]
    pub quadrature: bool,
    /// Relative tolerance of the quadrature oracle [default: 1e-10].
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Edge length used by validate's edge row [default: 14].
    #[arg(long)]
    pub edge_length: Option<f64>,
}

/// Config file layout. Field names follow the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub domain: Option<DomainSpec>,
    pub model: Option<ModelSpec>,
    pub rho: Option<String>,
    pub rho_list: Option<Vec<f64>>,
    pub n_list: Option<Vec<usize>>,
    pub lengths: Option<String>,
    pub length_list: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub plot: Option<bool>,
    pub threads: Option<usize>,
    pub quadrature: Option<bool>,
    pub rel_tol: Option<f64>,
    pub edge_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Density(Vec<f64>),
    Count(Vec<usize>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::Density(v) => v.len(),
            Sweep::Count(v) => v.len(),
        }
    }
}

/// Everything a subcommand needs, after defaults.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub command: CommandKind,
    pub domain: DomainSpec,
    pub model: ModelSpec,
    pub sweep: Option<Sweep>,
    pub lengths: Option<Vec<f64>>,
    pub trials: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub plot: bool,
    pub threads: Option<usize>,
    pub quadrature: bool,
    pub rel_tol: f64,
    pub edge_length: f64,
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_range(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("range `{text}` is not start:stop:step"))?;
    let [start, stop, step] = parts[..] else {
        bail!("range `{text}` is not start:stop:step");
    };
    if !(step > 0.0 && start.is_finite() && stop.is_finite()) {
        bail!("range `{text}` needs finite ends and a positive step");
    }
    let count = ((stop - start) / step + 1e-9).floor();
    if count < 0.0 {
        return Ok(Vec::new());
    }
    Ok((0..=count as usize)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn parse_json<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> anyhow::Result<T> {
    let trimmed = text.trim_start();
    let body = if trimmed.starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).with_context(|| format!("cannot read {what} file `{text}`"))?
    };
    serde_json::from_str(&body).with_context(|| format!("invalid {what} description"))
}

fn read_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config `{}`", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config `{}`", path.display()))
}

/// File value if present (warning when the flag was also set), else the flag.
fn pick<T>(name: &str, file: Option<T>, flag: Option<T>) -> Option<T> {
    match (file, flag) {
        (Some(f), Some(_)) => {
            log::warn!("--{name} given on the command line and in the config file; using the file");
            Some(f)
        }
        (f, g) => f.or(g),
    }
}

fn switch(name: &str, file: Option<bool>, flag: bool) -> bool {
    pick(name, file, flag.then_some(true)).unwrap_or(false)
}

impl JobSpec {
    pub fn resolve(command: CommandKind, args: JobArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(path) => read_config(path)?,
            None => FileConfig::default(),
        };
        let domain_flag = args.domain.as_deref().map(|t| parse_json("domain", t)).transpose()?;
        let model_flag = args.model.as_deref().map(|t| parse_json("model", t)).transpose()?;
        let domain = pick("domain", file.domain, domain_flag).unwrap_or(DomainSpec::House { l: 5.0 });
        let model = pick("model", file.model, model_flag).unwrap_or(ModelSpec::MimoMrc2x2 { beta: 1.0 });

        // a sweep from the file replaces any sweep from the flags
        let file_sweep = sweep_from(file.rho, file.rho_list, file.n_list)?;
        let flag_sweep = sweep_from(args.rho, args.rho_list, args.n_list)?;
        let mut sweep = pick("rho", file_sweep, flag_sweep);

        let file_lengths = lengths_from(file.lengths, file.length_list)?;
        let flag_lengths = lengths_from(args.lengths, args.length_list)?;
        let mut lengths = pick("lengths", file_lengths, flag_lengths);

        match command {
            CommandKind::Analytic | CommandKind::Simulate | CommandKind::Compare => {
                if sweep.is_none() {
                    bail!("a sweep is required: --rho, --rho-list or --n-list");
                }
            }
            CommandKind::PhaseMap => {
                if matches!(sweep, Some(Sweep::Count(_))) {
                    bail!("phase-map takes densities, not node counts");
                }
                sweep.get_or_insert_with(|| Sweep::Density(parse_range(DEFAULT_PHASE_RHO).unwrap()));
                lengths.get_or_insert_with(|| parse_range(DEFAULT_PHASE_LENGTHS).unwrap());
            }
            CommandKind::Validate => {}
        }
        if sweep.as_ref().is_some_and(|s| s.len() == 0) {
            bail!("the sweep is empty");
        }
        if lengths.as_ref().is_some_and(|l| l.is_empty()) {
            bail!("the length grid is empty");
        }

        let trials = pick("trials", file.trials, args.trials).unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            bail!("--trials must be positive");
        }
        let threads = pick("threads", file.threads, args.threads);
        if threads == Some(0) {
            bail!("--threads must be positive");
        }
        let rel_tol = pick("rel-tol", file.rel_tol, args.rel_tol).unwrap_or(DEFAULT_REL_TOL);
        let edge_length = pick("edge-length", file.edge_length, args.edge_length).unwrap_or(14.0);
        if !(edge_length > 0.0 && edge_length.is_finite()) {
            bail!("--edge-length must be positive");
        }
        Ok(Self {
            command,
            domain,
            model,
            sweep,
            lengths,
            trials,
            seed: pick("seed", file.seed, args.seed).unwrap_or(DEFAULT_SEED),
            out: pick("out", file.out, args.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            plot: switch("plot", file.plot, args.plot),
            threads,
            quadrature: switch("quadrature", file.quadrature, args.quadrature),
            rel_tol,
            edge_length,
        })
    }
}

fn sweep_from(
    range: Option<String>,
    list: Option<Vec<f64>>,
    counts: Option<Vec<usize>>,
) -> anyhow::Result<Option<Sweep>> {
    let given = range.is_some() as u8 + list.is_some() as u8 + counts.is_some() as u8;
    if given > 1 {
        return Err(anyhow!("give only one of rho, rho_list and n_list"));
    }
    Ok(if let Some(r) = range {
        Some(Sweep::Density(parse_range(&r)?))
    } else if let Some(l) = list {
        Some(Sweep::Density(l))
    } else {
        counts.map(Sweep::Count)
    })
}

fn lengths_from(range: Option<String>, list: Option<Vec<f64>>) -> anyhow::Result<Option<Vec<f64>>> {
    if range.is_some() && list.is_some() {
        bail!("give only one of lengths and length_list");
    }
    range.map(|r| parse_range(&r)).transpose().map(|r| r.or(list))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_include_both_ends() {
        assert_eq!(parse_range("0.8:1.2:0.2").unwrap(), vec![0.8, 1.0, 1.2]);
        assert_eq!(parse_range("1:1:0.5").unwrap(), vec![1.0]);
        assert!(parse_range("2:1:0.5").unwrap().is_empty());
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("1:2:0").is_err());
    }

    #[test]
    fn file_wins() {
        assert_eq!(pick("seed", Some(3), Some(4)), Some(3));
        assert_eq!(pick("seed", None, Some(4)), Some(4));
        assert!(switch("plot", Some(true), false));
    }
}
