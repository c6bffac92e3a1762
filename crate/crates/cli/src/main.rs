mod args;
mod commands;
mod plot;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, JobSpec};

/// What went wrong, and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1: the validation suite ran and some rows failed.
    Validation(String),
    /// Exit 2: bad flags, config, domain or model, or unwritable output.
    Config(anyhow::Error),
    /// Exit 3: quadrature or expansion failed numerically.
    Numeric(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl From<prismconn::Error> for Failure {
    fn from(e: prismconn::Error) -> Self {
        use prismconn::Error::*;
        match e {
            Quadrature { .. } | Divergent(_) => Failure::Numeric(e.into()),
            _ => Failure::Config(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(e.into())
    }
}

fn run(spec: &JobSpec) -> Result<(), Failure> {
    if let Some(threads) = spec.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Config(e.into()))?;
    }
    std::fs::create_dir_all(&spec.out)?;
    commands::dispatch(spec)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (kind, job) = Cli::parse().command.split();
    let outcome = JobSpec::resolve(kind, job)
        .map_err(Failure::Config)
        .and_then(|spec| run(&spec));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(msg) => eprintln!("validation failed: {msg}"),
                Failure::Config(e) => eprintln!("error: {e:#}"),
                Failure::Numeric(e) => eprintln!("numeric failure: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let numeric = prismconn::Error::Quadrature { estimate: 1.0, error: 1.0, target: 1e-10 };
        assert_eq!(Failure::from(numeric).code(), 3);
        assert_eq!(Failure::from(prismconn::Error::Divergent("x".into())).code(), 3);
        assert_eq!(Failure::from(prismconn::Error::InvalidGeometry("x".into())).code(), 2);
        assert_eq!(Failure::from(prismconn::Error::UnsupportedModel("x".into())).code(), 2);
        assert_eq!(Failure::Validation(String::new()).code(), 1);
    }
}
