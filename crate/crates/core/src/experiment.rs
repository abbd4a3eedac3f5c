//! Many independent seeded runs of the GA or the CA, summarized.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ca::{run_ca, CaConfig, CaError, CaStart};
use crate::exec::{derive_seed, map_indices, Execution};
use crate::ga::{run_ga, GaConfig, GaError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("an experiment needs at least one run")]
    NoRuns,
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Ca(#[from] CaError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    Ga { cfg: GaConfig, n: usize },
    Ca { cfg: CaConfig, start: CaStart },
}

impl ExperimentKind {
    fn t_limit(&self) -> usize {
        match self {
            ExperimentKind::Ga { cfg, .. } => cfg.max_iterations,
            ExperimentKind::Ca { cfg, .. } => cfg.t_limit,
        }
    }

    fn run_once(&self, seed: u64) -> Result<RunOutcome, ExperimentError> {
        match self {
            ExperimentKind::Ga { cfg, n } => {
                let cfg = GaConfig { seed, ..cfg.clone() };
                let out = run_ga(&cfg, *n)?;
                let cells = (cfg.params.k() * n * n) as f64;
                Ok(RunOutcome {
                    index: 0,
                    seed,
                    best_tps: out.best_fitness,
                    best_wealth: out.best_fitness / cells,
                    t_best: out.best_found_at,
                    stable: false,
                    tps_final: out.best_fitness,
                })
            }
            ExperimentKind::Ca { cfg, start } => {
                let cfg = CaConfig {
                    seed,
                    record_trace: false,
                    ..cfg.clone()
                };
                let out = run_ca(&cfg, start)?;
                Ok(RunOutcome {
                    index: 0,
                    seed,
                    best_tps: out.tps_max,
                    best_wealth: out.w_max,
                    t_best: out.t_max,
                    stable: out.stable,
                    tps_final: out.tps_final,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub index: usize,
    pub seed: u64,
    pub best_tps: f64,
    pub best_wealth: f64,
    /// First iteration/generation at which `best_tps` was reached.
    pub t_best: usize,
    /// CA only: the final pattern is a fixed point of the rule.
    pub stable: bool,
    pub tps_final: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Wealth rounded to 4 decimals.
    pub wealth: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub n_runs: usize,
    pub t_limit: usize,
    pub w_max_max: f64,
    pub w_max_avrg: f64,
    pub t_avrg: f64,
    pub t_min: usize,
    pub t_max: usize,
    pub optimum_tps: Option<f64>,
    pub n_opt_found: Option<usize>,
    pub n_stable: usize,
    pub wealth_histogram: Vec<HistogramBin>,
    pub runs: Vec<RunOutcome>,
}

impl ExperimentSummary {
    pub fn from_runs(runs: Vec<RunOutcome>, t_limit: usize, optimum_tps: Option<f64>) -> Result<Self, ExperimentError> {
        if runs.is_empty() {
            return Err(ExperimentError::NoRuns);
        }
        let count = runs.len() as f64;
        let w_max_max = runs.iter().map(|r| r.best_wealth).fold(f64::NEG_INFINITY, f64::max);
        let w_max_avrg = runs.iter().map(|r| r.best_wealth).sum::<f64>() / count;
        let t_avrg = runs.iter().map(|r| r.t_best as f64).sum::<f64>() / count;
        let t_min = runs.iter().map(|r| r.t_best).min().unwrap_or(0);
        let t_max = runs.iter().map(|r| r.t_best).max().unwrap_or(0);
        let n_opt_found = optimum_tps.map(|opt| runs.iter().filter(|r| r.best_tps >= opt - 1e-9).count());
        let n_stable = runs.iter().filter(|r| r.stable).count();

        let mut keys: Vec<i64> = runs.iter().map(|r| (r.best_wealth * 1e4).round() as i64).collect();
        keys.sort_unstable();
        let mut wealth_histogram: Vec<HistogramBin> = Vec::new();
        for key in keys {
            let wealth = key as f64 / 1e4;
            match wealth_histogram.last_mut() {
                Some(bin) if bin.wealth == wealth => bin.count += 1,
                _ => wealth_histogram.push(HistogramBin { wealth, count: 1 }),
            }
        }

        Ok(ExperimentSummary {
            n_runs: runs.len(),
            t_limit,
            w_max_max,
            w_max_avrg,
            t_avrg,
            t_min,
            t_max,
            optimum_tps,
            n_opt_found,
            n_stable,
            wealth_histogram,
            runs,
        })
    }

    /// Histogram as CSV with header `wealth,count`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("wealth,count\n");
        for bin in &self.wealth_histogram {
            out.push_str(&format!("{:.4},{}\n", bin.wealth, bin.count));
        }
        out
    }
}

/// Runs `n_runs` independent runs. Run `k` uses `derive_seed(base_seed, k)`;
/// outcomes are ordered by run index whatever the scheduling.
pub fn run_experiment(
    kind: &ExperimentKind,
    n_runs: usize,
    base_seed: u64,
    optimum_tps: Option<f64>,
    exec: Execution,
) -> Result<ExperimentSummary, ExperimentError> {
    if n_runs == 0 {
        return Err(ExperimentError::NoRuns);
    }
    let results = map_indices(n_runs, exec, |k| {
        kind.run_once(derive_seed(base_seed, k as u64)).map(|r| RunOutcome { index: k, ..r })
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    ExperimentSummary::from_runs(runs, kind.t_limit(), optimum_tps)
}
