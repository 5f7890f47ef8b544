//! Experiment runner: rate sweeps, adversary stress tables and file output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, CollisionCounts};
use crate::channel::{self, AdversaryKind};
use crate::protocol::{mix64, ProtocolFamily};
use crate::randex::ExchangeMode;
use crate::schemes::{run_simulation, RunInputs, Scheme, SchemeConfig, SchemeParams, SimulationResult};
use crate::{Error, Result};

/// One sweep: a scheme against one adversary over a list of noise rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub eps: Vec<f64>,
    pub trials: usize,
    pub adversary: AdversaryKind,
    pub exchange: ExchangeMode,
    pub family: ProtocolFamily,
    pub seed: u64,
    pub constants: SchemeConfig,
    /// Trials per ε whose full channel and iteration traces are kept.
    pub traced_trials: usize,
}

impl ExperimentConfig {
    pub fn new(scheme: Scheme, n: usize, eps: Vec<f64>, adversary: AdversaryKind) -> Self {
        Self {
            scheme,
            n,
            eps,
            trials: 1,
            adversary,
            exchange: ExchangeMode::Repetition,
            family: ProtocolFamily::FullEntropy,
            seed: 0,
            constants: SchemeConfig::default(),
            traced_trials: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.eps.is_empty() {
            return Err(Error::InvalidParameter("empty ε list".into()));
        }
        for &eps in &self.eps {
            self.params(eps)?;
        }
        Ok(())
    }

    pub fn params(&self, eps: f64) -> Result<SchemeParams> {
        SchemeParams::new(self.scheme, self.n, eps, self.exchange, &self.constants)
    }
}

/// Seed of trial `trial` in ε cell `cell`; independent of scheduling.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    mix64(mix64(master ^ mix64(cell as u64)) ^ trial as u64)
}

/// Runs one trial.
pub fn run_trial(
    params: &SchemeParams,
    family: ProtocolFamily,
    adversary: AdversaryKind,
    seed: u64,
    record_events: bool,
) -> Result<SimulationResult> {
    let inputs = RunInputs {
        family,
        seed,
        record_events,
    };
    run_simulation(params, &inputs, adversary.build(params.eps, mix64(seed ^ 0xad)))
}

/// Compact outcome of one trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    pub eps: f64,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    /// Longest common prefix of the two final transcripts.
    pub agreed_prefix: usize,
    pub corruptions: u64,
    pub exchange_corruptions: u64,
    pub budget: u64,
    pub collisions: CollisionCounts,
    pub max_drop: f64,
    pub final_phi: f64,
    pub final_bound: f64,
    pub lemma_violations: usize,
}

impl TrialSummary {
    fn new(params: &SchemeParams, trial: usize, seed: u64, res: &SimulationResult) -> Self {
        let report = res.lemma_report(params);
        Self {
            eps: params.eps,
            trial,
            seed,
            success: res.success,
            agreed_prefix: res.agreed_prefix,
            corruptions: res.corruptions,
            exchange_corruptions: res.exchange_corruptions,
            budget: res.budget.total,
            collisions: res.collisions,
            max_drop: report.max_drop,
            final_phi: report.final_phi,
            final_bound: report.final_bound,
            lemma_violations: report.violations(),
        }
    }
}

/// Aggregate over the trials of one `(scheme, ε)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    pub scheme: Scheme,
    pub adversary: AdversaryKind,
    pub n: usize,
    pub eps: f64,
    pub trials: usize,
    pub total_rounds: u64,
    pub overhead: f64,
    pub failure_rate: f64,
    pub mean_collisions: f64,
    pub mean_budget_spent: f64,
}

pub const RATES_HEADER: &str =
    "scheme,adversary,n,eps,trials,total_rounds,overhead,failure_rate,mean_collisions,mean_budget_spent";

impl RatePoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.4},{:.4}",
            self.scheme.name(),
            self.adversary.name(),
            self.n,
            self.eps,
            self.trials,
            self.total_rounds,
            self.overhead,
            self.failure_rate,
            self.mean_collisions,
            self.mean_budget_spent
        )
    }
}

/// Trace files of one kept trial.
#[derive(Clone, Debug)]
pub struct TrialTrace {
    pub eps: f64,
    pub trial: usize,
    pub channel_csv: Vec<u8>,
    pub iteration_csv: Vec<u8>,
}

/// Everything one sweep produced.
#[derive(Clone, Debug)]
pub struct RateReport {
    pub config: ExperimentConfig,
    pub params: Vec<SchemeParams>,
    pub points: Vec<RatePoint>,
    pub trials: Vec<TrialSummary>,
    pub traces: Vec<TrialTrace>,
}

/// Runs every `(ε, trial)` of `config`; parallel across trials, and
/// identical to a serial run because each trial's seed is derived up front.
pub fn sweep(config: &ExperimentConfig) -> Result<RateReport> {
    config.validate()?;
    let mut all_params = Vec::new();
    let mut points = Vec::new();
    let mut trials = Vec::new();
    let mut traces = Vec::new();
    for (cell, &eps) in config.eps.iter().enumerate() {
        let params = config.params(eps)?;
        let outcomes: Vec<(TrialSummary, Option<TrialTrace>)> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(config.seed, cell, trial);
                let keep = trial < config.traced_trials;
                let res = run_trial(&params, config.family, config.adversary, seed, keep)?;
                let trace = keep.then(|| encode_trace(eps, trial, &res)).transpose()?;
                Ok((TrialSummary::new(&params, trial, seed, &res), trace))
            })
            .collect::<Result<_>>()?;
        let count = outcomes.len() as f64;
        let failures = outcomes.iter().filter(|(s, _)| !s.success).count();
        let collisions: u64 = outcomes.iter().map(|(s, _)| s.collisions.h1 + s.collisions.h2).sum();
        let spent: u64 = outcomes.iter().map(|(s, _)| s.corruptions).sum();
        points.push(RatePoint {
            scheme: config.scheme,
            adversary: config.adversary,
            n: config.n,
            eps,
            trials: config.trials,
            total_rounds: params.total_rounds,
            overhead: params.overhead(),
            failure_rate: failures as f64 / count,
            mean_collisions: collisions as f64 / count,
            mean_budget_spent: spent as f64 / count,
        });
        for (summary, trace) in outcomes {
            trials.push(summary);
            traces.extend(trace);
        }
        all_params.push(params);
    }
    Ok(RateReport {
        config: config.clone(),
        params: all_params,
        points,
        trials,
        traces,
    })
}

fn encode_trace(eps: f64, trial: usize, res: &SimulationResult) -> Result<TrialTrace> {
    let mut channel_csv = Vec::new();
    channel::write_trace(&mut channel_csv, &res.events)?;
    let mut iteration_csv = Vec::new();
    analysis::write_iterations(&mut iteration_csv, &res.traces)?;
    Ok(TrialTrace {
        eps,
        trial,
        channel_csv,
        iteration_csv,
    })
}

/// Writes `rates.csv`, `trace/*.csv` and `runs.jsonl` under `dir`.
pub fn write_report(report: &RateReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("trace"))?;
    let mut rates = BufWriter::new(File::create(dir.join("rates.csv"))?);
    writeln!(rates, "{RATES_HEADER}")?;
    for p in &report.points {
        writeln!(rates, "{}", p.csv_row())?;
    }
    rates.flush()?;

    let scheme = report.config.scheme.name();
    for t in &report.traces {
        let stem = format!("{scheme}_eps{}_t{}", t.eps, t.trial);
        fs::write(dir.join("trace").join(format!("{stem}_channel.csv")), &t.channel_csv)?;
        fs::write(dir.join("trace").join(format!("{stem}_iter.csv")), &t.iteration_csv)?;
    }

    let mut meta = BufWriter::new(File::create(dir.join("runs.jsonl"))?);
    serde_json::to_writer(&mut meta, &serde_json::json!({ "config": report.config }))?;
    writeln!(meta)?;
    for params in &report.params {
        let exchange = params.exchange.as_ref();
        let line = serde_json::json!({
            "params": params,
            "drop_bound": params.config.potential.drop_bound(),
            "log2_inv_delta": exchange.map(|e| e.effective_log2_inv_delta),
            "budget": params.budget(),
        });
        serde_json::to_writer(&mut meta, &line)?;
        writeln!(meta)?;
    }
    for t in &report.trials {
        serde_json::to_writer(&mut meta, &serde_json::json!({ "trial": t }))?;
        writeln!(meta)?;
    }
    meta.flush()?;
    Ok(())
}

/// One cell of the stress table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StressRow {
    pub scheme: Scheme,
    pub adversary: AdversaryKind,
    pub trials: usize,
    pub failure_rate: f64,
    pub max_drop: f64,
    pub mean_corruptions: f64,
}

/// Every built-in adversary against every scheme at a fixed `(n, ε)`.
pub fn stress(n: usize, eps: f64, trials: usize, exchange: ExchangeMode, seed: u64) -> Result<Vec<StressRow>> {
    let mut rows = Vec::new();
    for scheme in Scheme::ALL {
        let mut config = ExperimentConfig::new(scheme, n, vec![eps], AdversaryKind::None);
        config.trials = trials;
        config.exchange = exchange;
        config.seed = seed;
        for adversary in AdversaryKind::ALL {
            config.adversary = adversary;
            let report = sweep(&config)?;
            let count = report.trials.len() as f64;
            rows.push(StressRow {
                scheme,
                adversary,
                trials,
                failure_rate: report.points[0].failure_rate,
                max_drop: report.trials.iter().map(|t| t.max_drop).fold(0.0, f64::max),
                mean_corruptions: report.trials.iter().map(|t| t.corruptions as f64).sum::<f64>() / count,
            });
        }
    }
    Ok(rows)
}
