//! Monte Carlo campaigns: repeated sample-and-estimate trials, their
//! statistics against the Cramér-Rao bound, and CSV/JSON output.
//!
//! Trial `i` of a campaign draws its sample from the ChaCha substream
//! `(master_seed, i)`, so results do not depend on the number of workers or
//! on scheduling. Aggregation runs sequentially in trial order.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate, SolverConfig};
use crate::information::{crb, fisher_resolved};
use crate::parametrization::{wrap_angle, SphericalParams};
use crate::probability::{Efficiency, Visibility};
use crate::sampling::{generate_sample, SampleConfig, RNG_ALGORITHM};

pub const PARAMETER_NAMES: [&str; 3] = ["s", "theta", "phi"];

pub const DEFAULT_N_VALUES: [usize; 6] = [125, 250, 500, 1000, 2000, 4000];

pub const DEFAULT_REPETITIONS: usize = 1000;

pub const REPETITIONS_NOTE: &str = "repetitions default to 1000; the reference campaign is described with both \
1000 and 10^4 repetitions per point, pass --repetitions 10000 for the larger count";

/// Column order of [`write_csv`].
pub const CSV_HEADER: [&str; 15] = [
    "truth_s",
    "truth_theta",
    "truth_phi",
    "nu",
    "gamma",
    "n",
    "parameter",
    "truth",
    "mean",
    "variance",
    "crb",
    "variance_over_crb",
    "bias_ratio",
    "trials_run",
    "trials_converged",
];

/// Reference truths of the standard campaign.
pub fn fig4_truths() -> [SphericalParams; 3] {
    [
        SphericalParams::new(3.0, PI / 5.0, PI / 4.0).expect("valid"),
        SphericalParams::new(4.0, PI / 4.0, PI / 3.0).expect("valid"),
        SphericalParams::new(5.0, PI / 3.0, PI / 5.0).expect("valid"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub truth: SphericalParams,
    pub nu: Visibility,
    pub gamma: Efficiency,
    pub n_values: Vec<usize>,
    pub repetitions: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Thread count; `None` uses the global rayon pool. Never affects results.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(truth: SphericalParams, nu: Visibility, n_values: Vec<usize>) -> Self {
        Self {
            truth,
            nu,
            gamma: Efficiency::PERFECT,
            n_values,
            repetitions: DEFAULT_REPETITIONS,
            master_seed: 0,
            solver: SolverConfig::default(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.n_values.is_empty() {
            return Err(Error::invalid("n_values must not be empty"));
        }
        if self.n_values.contains(&0) {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_values must be strictly ascending"));
        }
        if self.gamma.get() == 0.0 {
            return Err(Error::UnreachableSample);
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterStats {
    pub truth: f64,
    pub mean: f64,
    pub variance: f64,
    pub crb: f64,
    pub variance_over_crb: f64,
    pub bias_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub truth: SphericalParams,
    pub nu: Visibility,
    pub gamma: Efficiency,
    pub n: usize,
    /// Ordered as [`PARAMETER_NAMES`].
    pub parameters: [ParameterStats; 3],
    pub trials_run: usize,
    pub trials_converged: usize,
    /// Trials excluded from the statistics (solver failure, non-convergence
    /// or an estimate with undefined angles).
    pub excluded: usize,
    pub first_failure: Option<String>,
}

impl TrialStats {
    pub fn parameter(&self, name: &str) -> Option<&ParameterStats> {
        PARAMETER_NAMES.iter().position(|p| *p == name).map(|i| &self.parameters[i])
    }
}

enum TrialOutcome {
    Estimate([f64; 3]),
    Excluded(String),
}

fn run_one(cfg: &ExperimentConfig, n: usize, trial: usize) -> TrialOutcome {
    let sample_cfg = SampleConfig {
        truth: cfg.truth,
        nu: cfg.nu,
        gamma: cfg.gamma,
        n_detected: n,
        seed: cfg.master_seed,
        stream: trial as u64,
    };
    let sample = match generate_sample(&sample_cfg) {
        Ok(s) => s,
        Err(e) => return TrialOutcome::Excluded(format!("trial {trial}: {e}")),
    };
    match estimate(&sample.records, cfg.nu, &cfg.solver) {
        Ok(r) if !r.converged => TrialOutcome::Excluded(format!(
            "trial {trial}: solver did not converge (gradient norm {:.3e})",
            r.gradient_norm
        )),
        Ok(r) => match (r.estimate.defined_theta(), r.estimate.defined_phi()) {
            (Some(t), Some(p)) => TrialOutcome::Estimate([r.estimate.s(), t, p]),
            _ => TrialOutcome::Excluded(format!("trial {trial}: estimate has undefined angles")),
        },
        Err(e) => TrialOutcome::Excluded(format!("trial {trial}: {e}")),
    }
}

fn with_pool<T: Send, F: FnOnce() -> T + Send>(workers: Option<usize>, f: F) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Run `cfg.repetitions` independent trials at sample size `n`.
pub fn run_trials(cfg: &ExperimentConfig, n: usize) -> Result<TrialStats> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let reps = cfg.repetitions;
    let outcomes: Vec<TrialOutcome> =
        with_pool(cfg.workers, || (0..reps).into_par_iter().map(|i| run_one(cfg, n, i)).collect())?;

    let mut estimates = Vec::with_capacity(reps);
    let mut first_failure = None;
    for o in outcomes {
        match o {
            TrialOutcome::Estimate(e) => estimates.push(e),
            TrialOutcome::Excluded(msg) => {
                first_failure.get_or_insert(msg);
            }
        }
    }
    if estimates.is_empty() {
        return Err(Error::AllTrialsFailed {
            trials: reps,
            last: first_failure.unwrap_or_default(),
        });
    }

    let truth = [cfg.truth.s(), cfg.truth.theta(), cfg.truth.phi()];
    let bound = crb(&fisher_resolved(&cfg.truth, cfg.nu, cfg.gamma)?, n)?.as_array();
    let m = estimates.len() as f64;
    let mut parameters = [ParameterStats {
        truth: 0.0,
        mean: 0.0,
        variance: 0.0,
        crb: 0.0,
        variance_over_crb: 0.0,
        bias_ratio: 0.0,
    }; 3];
    for j in 0..3 {
        // deviations from the truth; wrapped for the azimuth so that estimates
        // on either side of 0 ≡ 2π are averaged correctly
        let dev: Vec<f64> = estimates
            .iter()
            .map(|e| if j == 2 { wrap_angle(e[j] - truth[j]) } else { e[j] - truth[j] })
            .collect();
        let mean_dev = dev.iter().sum::<f64>() / m;
        let variance = if estimates.len() > 1 {
            dev.iter().map(|d| (d - mean_dev).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        let mean = truth[j] + mean_dev;
        parameters[j] = ParameterStats {
            truth: truth[j],
            mean,
            variance,
            crb: bound[j],
            variance_over_crb: variance / bound[j],
            bias_ratio: mean / truth[j],
        };
    }
    Ok(TrialStats {
        truth: cfg.truth,
        nu: cfg.nu,
        gamma: cfg.gamma,
        n,
        parameters,
        trials_run: reps,
        trials_converged: estimates.len(),
        excluded: reps - estimates.len(),
        first_failure,
    })
}

/// Run every sample size of `cfg`.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<Vec<TrialStats>> {
    cfg.validate()?;
    cfg.n_values.iter().map(|&n| run_trials(cfg, n)).collect()
}

/// Settings shared by the six standard campaigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Options {
    pub n_values: Vec<usize>,
    pub repetitions: usize,
    pub master_seed: u64,
    pub gamma: Efficiency,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for Fig4Options {
    fn default() -> Self {
        Self {
            n_values: DEFAULT_N_VALUES.to_vec(),
            repetitions: DEFAULT_REPETITIONS,
            master_seed: 0,
            gamma: Efficiency::PERFECT,
            solver: SolverConfig::default(),
            workers: None,
        }
    }
}

impl Fig4Options {
    /// The three truths crossed with ν ∈ {1, 0.7}.
    pub fn configs(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for nu in [1.0, 0.7] {
            for truth in fig4_truths() {
                out.push(ExperimentConfig {
                    truth,
                    nu: Visibility::new(nu).expect("valid"),
                    gamma: self.gamma,
                    n_values: self.n_values.clone(),
                    repetitions: self.repetitions,
                    master_seed: self.master_seed,
                    solver: self.solver,
                    workers: self.workers,
                });
            }
        }
        out
    }
}

/// Run the six standard campaigns; rows are ordered by ν, truth, then N.
pub fn reproduce_fig4(opts: &Fig4Options) -> Result<Vec<TrialStats>> {
    let configs = opts.configs();
    for c in &configs {
        c.validate()?;
    }
    let mut rows = Vec::new();
    for c in &configs {
        rows.extend(run_campaign(c)?);
    }
    Ok(rows)
}

/// JSON summary written next to the CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub configs: Vec<ExperimentConfig>,
    pub rng_algorithm: String,
    pub repetitions_note: String,
    pub results: Vec<TrialStats>,
}

impl Summary {
    pub fn new(configs: Vec<ExperimentConfig>, results: Vec<TrialStats>) -> Self {
        Self {
            configs,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            repetitions_note: REPETITIONS_NOTE.to_string(),
            results,
        }
    }
}

/// One row per (truth, ν, N, parameter).
pub fn write_csv_to<W: Write>(w: W, rows: &[TrialStats]) -> std::result::Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        for (name, p) in PARAMETER_NAMES.iter().zip(&r.parameters) {
            out.write_record([
                r.truth.s().to_string(),
                r.truth.theta().to_string(),
                r.truth.phi().to_string(),
                r.nu.get().to_string(),
                r.gamma.get().to_string(),
                r.n.to_string(),
                name.to_string(),
                p.truth.to_string(),
                p.mean.to_string(),
                p.variance.to_string(),
                p.crb.to_string(),
                p.variance_over_crb.to_string(),
                p.bias_ratio.to_string(),
                r.trials_run.to_string(),
                r.trials_converged.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[TrialStats]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(BufWriter::new(file), rows).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::NumericFailure(format!("csv encoding failed: {other:?}")),
    })
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, summary).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Write `<stem>.csv` and `<stem>.json` into `dir`.
pub fn emit_results(dir: &Path, stem: &str, summary: &Summary) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join(format!("{stem}.csv")), &summary.results)?;
    write_summary(&dir.join(format!("{stem}.json")), summary)
}
