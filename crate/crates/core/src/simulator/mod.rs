//! Monte Carlo estimate of the full-connectivity probability.
//!
//! A trial places `N` nodes uniformly in the domain, links every pair
//! independently with probability `H(distance)` and checks whether the
//! resulting graph is connected. Trial `i` of a run seeded with `s` draws
//! from its own ChaCha8 stream `(s, i)`, so results do not depend on how
//! trials are scheduled across threads.

mod dsu;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ConnectivityModel, NEGLIGIBLE_H};
use crate::geometry::{Domain, Point3};
use crate::{Error, Result};

pub use dsu::DisjointSets;

/// How many nodes a trial deploys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSize {
    /// `N = round(ρ V)`.
    Density(f64),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub domain: Domain,
    pub model: ConnectivityModel,
    pub size: SampleSize,
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(domain: Domain, model: ConnectivityModel, size: SampleSize) -> Self {
        Self {
            domain,
            model,
            size,
            trials: 1000,
            seed: 0,
        }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_size(mut self, size: SampleSize) -> Self {
        self.size = size;
        self
    }

    /// Number of nodes per trial. Zero nodes is rejected.
    pub fn node_count(&self) -> Result<usize> {
        let n = match self.size {
            SampleSize::Density(rho) => {
                if !(rho > 0.0 && rho.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "density must be positive, got {rho}"
                    )));
                }
                (rho * self.domain.volume()).round() as usize
            }
            SampleSize::Count(n) => n,
        };
        if n == 0 {
            return Err(Error::InvalidParameter("a trial needs at least one node".into()));
        }
        Ok(n)
    }

    /// Density echoed in results: the requested `ρ`, or `N / V`.
    pub fn density(&self) -> f64 {
        match self.size {
            SampleSize::Density(rho) => rho,
            SampleSize::Count(n) => n as f64 / self.domain.volume(),
        }
    }

    fn validate(&self) -> Result<usize> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        self.node_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub connected: bool,
    pub min_degree: usize,
    pub component_count: usize,
}

impl TrialOutcome {
    /// `connected ⇒ one component ⇒ min_degree ≥ 1` (the last step for `N ≥ 2`).
    pub fn is_consistent(&self, n: usize) -> bool {
        let single = !self.connected || self.component_count == 1;
        let degree = !(self.component_count == 1 && n >= 2) || self.min_degree >= 1;
        single && degree
    }
}

/// Connectivity of an undirected simple graph given as an edge list.
///
/// A single vertex counts as connected; the empty graph does not.
///
/// # Panics
/// On self-loops or vertex indices `>= n`.
pub fn analyze_graph(n: usize, edges: &[(usize, usize)]) -> TrialOutcome {
    let mut sets = DisjointSets::new(n);
    let mut degree = vec![0usize; n];
    for &(a, b) in edges {
        assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} vertices");
        assert_ne!(a, b, "self-loop at vertex {a}");
        degree[a] += 1;
        degree[b] += 1;
        sets.union(a, b);
    }
    TrialOutcome {
        connected: n > 0 && sets.set_count() == 1,
        min_degree: degree.iter().copied().min().unwrap_or(0),
        component_count: sets.set_count(),
    }
}

/// Shorthand for `analyze_graph(n, edges).connected`.
pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    analyze_graph(n, edges).connected
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws the node positions and links of one trial, calling `link(i, j)`
/// for every linked pair `i < j` in lexicographic order.
///
/// Exactly one uniform number is consumed per pair regardless of distance,
/// so two models evaluated with the same seed see the same draws.
fn draw_trial<F: FnMut(usize, usize)>(
    config: &SimConfig,
    n: usize,
    index: u64,
    mut link: F,
) -> Vec<Point3> {
    let mut rng = trial_rng(config.seed, index);
    let points: Vec<Point3> = (0..n).map(|_| config.domain.sample_uniform(&mut rng)).collect();
    let model = &config.model;
    // beyond this distance H < NEGLIGIBLE_H, so a draw at or above it cannot link
    let cut = model.truncation_radius();
    let cut2 = cut * cut;
    for i in 0..n {
        let p = points[i];
        for (j, q) in points.iter().enumerate().skip(i + 1) {
            let (dx, dy, dz) = (p[0] - q[0], p[1] - q[1], p[2] - q[2]);
            let d2 = dx * dx + dy * dy + dz * dz;
            let u: f64 = rand::Rng::random(&mut rng);
            let linked = if d2 > cut2 && u >= NEGLIGIBLE_H {
                false
            } else {
                u < model.eval(d2.sqrt())
            };
            if linked {
                link(i, j);
            }
        }
    }
    points
}

/// Node positions and edge list of a trial.
pub type SampledGraph = (Vec<Point3>, Vec<(usize, usize)>);

/// Node positions and edge list of trial `index`.
pub fn sample_graph(config: &SimConfig, index: u64) -> Result<SampledGraph> {
    let n = config.node_count()?;
    let mut edges = Vec::new();
    let points = draw_trial(config, n, index, |i, j| edges.push((i, j)));
    Ok((points, edges))
}

/// Runs trial `index`; deterministic in `(config.seed, index)`.
pub fn run_trial(config: &SimConfig, index: u64) -> Result<TrialOutcome> {
    let n = config.node_count()?;
    Ok(trial_outcome(config, n, index))
}

fn trial_outcome(config: &SimConfig, n: usize, index: u64) -> TrialOutcome {
    let mut sets = DisjointSets::new(n);
    let mut degree = vec![0usize; n];
    draw_trial(config, n, index, |i, j| {
        degree[i] += 1;
        degree[j] += 1;
        sets.union(i, j);
    });
    TrialOutcome {
        connected: sets.set_count() == 1,
        min_degree: degree.iter().copied().min().unwrap_or(0),
        component_count: sets.set_count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub rho: f64,
    pub n_nodes: usize,
    pub seed: u64,
    pub n_trials: u64,
    pub fc_count: u64,
    pub min_deg_ge1_count: u64,
    pub p_fc_hat: f64,
    pub p_min_deg_hat: f64,
    /// Binomial standard error of `p_fc_hat`.
    pub std_err: f64,
    /// Seconds.
    pub wall_time: f64,
}

impl SimResult {
    fn from_counts(config: &SimConfig, n: usize, fc: u64, min_deg: u64, wall_time: f64) -> Self {
        let trials = config.trials;
        let p = fc as f64 / trials as f64;
        Self {
            rho: config.density(),
            n_nodes: n,
            seed: config.seed,
            n_trials: trials,
            fc_count: fc,
            min_deg_ge1_count: min_deg,
            p_fc_hat: p,
            p_min_deg_hat: min_deg as f64 / trials as f64,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
            wall_time,
        }
    }

    pub fn p_out_hat(&self) -> f64 {
        (self.n_trials - self.fc_count) as f64 / self.n_trials as f64
    }

    /// The result with its timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time: 0.0,
            ..self.clone()
        }
    }
}

/// Runs `config.trials` trials on the current rayon pool and aggregates them.
///
/// # Panics
/// If a trial violates `connected ⇒ one component ⇒ min_degree ≥ 1`.
pub fn estimate(config: &SimConfig) -> Result<SimResult> {
    let n = config.validate()?;
    let start = Instant::now();
    let (fc, min_deg) = (0..config.trials)
        .into_par_iter()
        .map(|index| {
            let outcome = trial_outcome(config, n, index);
            assert!(
                outcome.is_consistent(n),
                "inconsistent trial {index}: {outcome:?}"
            );
            (
                outcome.connected as u64,
                (n < 2 || outcome.min_degree >= 1) as u64,
            )
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let elapsed = start.elapsed().as_secs_f64();
    log::debug!(
        "rho={} N={n}: {fc}/{} connected in {elapsed:.2}s",
        config.density(),
        config.trials
    );
    Ok(SimResult::from_counts(config, n, fc, min_deg, elapsed))
}

/// One [`estimate`] per entry of `sizes`, which must be strictly monotone.
pub fn sweep(config: &SimConfig, sizes: &[SampleSize]) -> Result<Vec<SimResult>> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("sweep is empty".into()));
    }
    let keys: Vec<f64> = sizes
        .iter()
        .map(|s| match *s {
            SampleSize::Density(rho) => rho,
            SampleSize::Count(n) => n as f64,
        })
        .collect();
    let same_kind = sizes
        .windows(2)
        .all(|w| std::mem::discriminant(&w[0]) == std::mem::discriminant(&w[1]));
    let up = keys.windows(2).all(|w| w[1] > w[0]);
    let down = keys.windows(2).all(|w| w[1] < w[0]);
    if !same_kind || !(up || down) {
        return Err(Error::InvalidParameter(
            "sweep values must be of one kind and strictly monotone".into(),
        ));
    }
    sizes
        .iter()
        .map(|&size| estimate(&config.clone().with_size(size)))
        .collect()
}
