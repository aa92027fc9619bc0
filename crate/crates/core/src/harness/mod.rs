//! Ensemble execution, streaming statistics and CSV persistence.
//!
//! Path `i` always draws from stream `(master_seed, i)` and every reduction
//! runs in ascending path order, so results do not depend on the worker
//! count.

mod export;

pub use export::*;

use crate::diagnostics::{MetricContext, MetricKind, MetricTable};
use crate::error::{Error, Result};
use crate::integrator::{Integrator, Path};
use crate::linalg::Vector;

/// Environment variable capping worker threads (`0` = all cores).
pub const THREADS_ENV: &str = "MONOTONE_SDI_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `threads == 0` uses one worker per core. Without the `parallel`
    /// feature this runs sequentially.
    Parallel { threads: usize },
}

impl Execution {
    /// Parallel with the worker cap from `MONOTONE_SDI_THREADS`.
    pub fn from_env() -> Result<Execution> {
        match std::env::var(THREADS_ENV) {
            Err(_) => Ok(Execution::Parallel { threads: 0 }),
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .map(|threads| Execution::Parallel { threads })
                .map_err(|_| Error::validation(THREADS_ENV, "must be a non-negative integer")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub master_seed: u64,
    /// Leading paths kept in full for export.
    pub retain_paths: usize,
    pub execution: Execution,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, master_seed: u64) -> Self {
        EnsembleConfig {
            n_paths,
            master_seed,
            retain_paths: 0,
            execution: Execution::Parallel { threads: 0 },
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_retained(mut self, retain_paths: usize) -> Self {
        self.retain_paths = retain_paths;
        self
    }
}

/// A fully specified simulation: dynamics, start point and observables.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub integrator: Integrator,
    pub x0: Vector,
    pub context: MetricContext,
}

impl Experiment {
    pub fn new(integrator: Integrator, x0: Vector, metrics: &[MetricKind], thin: usize) -> Result<Self> {
        let x0 = integrator.initial_state(&x0)?;
        let context = MetricContext::new(
            integrator.op(),
            integrator.noise(),
            integrator.tikhonov(),
            integrator.grid(),
            &x0,
            metrics,
            thin,
        )?;
        Ok(Experiment {
            integrator,
            x0,
            context,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub n_paths: usize,
    pub master_seed: u64,
    pub tables: Vec<MetricTable>,
    pub retained: Vec<Path>,
}

impl EnsembleRun {
    pub fn table(&self, kind: &MetricKind) -> Option<&MetricTable> {
        self.tables.iter().find(|t| &t.kind == kind)
    }

    pub fn stats(&self, digest: &str) -> Result<EnsembleStats> {
        let metrics = self
            .tables
            .iter()
            .map(|t| Ok((t.name().to_string(), reduce_stats(&t.times, &t.values)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EnsembleStats {
            n_paths: self.n_paths,
            master_seed: self.master_seed,
            digest: digest.into(),
            metrics,
        })
    }
}

/// Mean, unbiased variance and 95% normal band of one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub n_paths: usize,
    /// Set for a single path, where no variance can be estimated.
    pub degenerate: bool,
}

impl SeriesStats {
    /// Standard error of the mean at time index `k`.
    pub fn se(&self, k: usize) -> f64 {
        (self.var[k] / self.n_paths as f64).sqrt()
    }

    pub fn ci_width(&self, k: usize) -> f64 {
        self.ci_hi[k] - self.ci_lo[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_paths: usize,
    pub master_seed: u64,
    pub digest: String,
    pub metrics: Vec<(String, SeriesStats)>,
}

/// Welford moments over `series[path][time]`, accumulated in path order.
pub fn reduce_stats(times: &[f64], series: &[Vec<f64>]) -> Result<SeriesStats> {
    if series.is_empty() {
        return Err(Error::validation("ensemble.n_paths", "requires at least one path"));
    }
    if series.iter().any(|s| s.len() != times.len()) {
        return Err(Error::GridMismatch);
    }
    let nt = times.len();
    let mut mean = vec![0.0; nt];
    let mut m2 = vec![0.0; nt];
    for (i, s) in series.iter().enumerate() {
        let n = (i + 1) as f64;
        for k in 0..nt {
            let delta = s[k] - mean[k];
            mean[k] += delta / n;
            m2[k] += delta * (s[k] - mean[k]);
        }
    }
    let n = series.len();
    let var: Vec<f64> = if n > 1 {
        m2.iter().map(|v| v / (n - 1) as f64).collect()
    } else {
        vec![0.0; nt]
    };
    let half: Vec<f64> = var.iter().map(|v| 1.96 * (v / n as f64).sqrt()).collect();
    Ok(SeriesStats {
        times: times.to_vec(),
        ci_lo: mean.iter().zip(&half).map(|(m, w)| m - w).collect(),
        ci_hi: mean.iter().zip(&half).map(|(m, w)| m + w).collect(),
        mean,
        var,
        n_paths: n,
        degenerate: n == 1,
    })
}

type PathOutput = (Vec<Vec<f64>>, Option<Path>);

fn simulate_one(exp: &Experiment, cfg: &EnsembleConfig, i: usize) -> Result<PathOutput> {
    let run = || -> Result<PathOutput> {
        let path = exp.integrator.simulate_path(&exp.x0, cfg.master_seed, i as u64)?;
        let values = exp.context.evaluate(&path)?;
        Ok((values, (i < cfg.retain_paths).then_some(path)))
    };
    run().map_err(|e| Error::Path {
        index: i,
        source: Box::new(e),
    })
}

#[cfg(feature = "parallel")]
fn map_paths(exp: &Experiment, cfg: &EnsembleConfig) -> Result<Vec<PathOutput>> {
    use rayon::prelude::*;
    match cfg.execution {
        Execution::Sequential => (0..cfg.n_paths).map(|i| simulate_one(exp, cfg, i)).collect(),
        Execution::Parallel { threads } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            // collect everything so the reported failure is the lowest index
            let all: Vec<Result<PathOutput>> = pool.install(|| {
                (0..cfg.n_paths)
                    .into_par_iter()
                    .map(|i| simulate_one(exp, cfg, i))
                    .collect()
            });
            all.into_iter().collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn map_paths(exp: &Experiment, cfg: &EnsembleConfig) -> Result<Vec<PathOutput>> {
    (0..cfg.n_paths).map(|i| simulate_one(exp, cfg, i)).collect()
}

pub fn run_ensemble(exp: &Experiment, cfg: &EnsembleConfig) -> Result<EnsembleRun> {
    if cfg.n_paths == 0 {
        return Err(Error::validation("ensemble.n_paths", "requires at least one path"));
    }
    let outputs = map_paths(exp, cfg)?;
    let times = exp.context.eval_times();
    let mut tables: Vec<MetricTable> = exp
        .context
        .metrics()
        .iter()
        .map(|kind| MetricTable {
            kind: kind.clone(),
            times: times.clone(),
            values: Vec::with_capacity(cfg.n_paths),
        })
        .collect();
    let mut retained = Vec::new();
    for (values, path) in outputs {
        for (table, series) in tables.iter_mut().zip(values) {
            table.values.push(series);
        }
        retained.extend(path);
    }
    Ok(EnsembleRun {
        n_paths: cfg.n_paths,
        master_seed: cfg.master_seed,
        tables,
        retained,
    })
}
