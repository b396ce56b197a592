//! Two-stage round engine: bootstrap once, then alternate collection and
//! re-selection. Selection for round r+1 sees only what round r's sensing
//! set observed; ground truth is computed per round for the metric alone.

use std::collections::BTreeSet;

use crate::bootstrap::bootstrap_strategy;
use crate::error::{Error, Result};
use crate::graph::{coverage_ratio, ground_truth_graph, observed_graph};
use crate::model::{BudgetSpec, ContactTrace, DeviceId, ResolvedConfig, SimConfig, SocialProfiles};
use crate::rng::{derive_point_seed, derive_rng, Stream};
use crate::select::{cover_strategy, SelectCtx};

/// One round of a run, as reported.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round_index: u32,
    pub start_s: i64,
    pub end_s: i64,
    pub sensing_set: BTreeSet<DeviceId>,
    pub observed_edges: usize,
    pub truth_edges: usize,
    pub coverage_ratio: f64,
    pub algorithm: String,
    pub bootstrap: String,
    pub seed: u64,
}

/// Result of a run. `truncated_rounds` counts configured rounds that were
/// dropped because they started past the last trace event.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub reports: Vec<RoundReport>,
    pub truncated_rounds: u32,
    pub config: ResolvedConfig,
}

pub fn run(trace: &ContactTrace, profiles: &SocialProfiles, config: &SimConfig) -> Result<RunOutput> {
    let cfg = config.resolve(trace.registry(), trace.tau_s())?;
    run_resolved(trace, profiles, &cfg)
}

pub fn run_resolved(
    trace: &ContactTrace,
    profiles: &SocialProfiles,
    cfg: &ResolvedConfig,
) -> Result<RunOutput> {
    if trace.events().is_empty() {
        return Err(Error::InvalidConfig("trace has no events".into()));
    }
    let trace_end = trace.last_event_time().unwrap();
    if cfg.start_time_s > trace_end {
        return Err(Error::InvalidConfig(format!(
            "start_time_s {} past last event at {trace_end}",
            cfg.start_time_s
        )));
    }

    let selector = cover_strategy(&cfg.algorithm)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {:?}", cfg.algorithm)))?;
    let booter = bootstrap_strategy(&cfg.bootstrap)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown bootstrap {:?}", cfg.bootstrap)))?;

    let v_in = trace.registry().internal();
    let n = (cfg.n as usize).min(v_in.len());
    let mut boot_rng = derive_rng(cfg.seed, Stream::Bootstrap);
    let mut select_rng = derive_rng(cfg.seed, Stream::Selection);

    let mut sensing = booter.select(profiles, v_in, n, &mut boot_rng)?;
    let mut reports = Vec::new();
    let mut truncated = 0u32;

    for round in 0..cfg.rounds {
        let start_s = cfg.start_time_s + round as i64 * cfg.ts_seconds;
        if start_s > trace_end {
            truncated = cfg.rounds - round;
            break;
        }
        let observed = observed_graph(trace, start_s, cfg.ts_seconds, &sensing);
        let truth = ground_truth_graph(trace, start_s, cfg.ts_seconds);
        let ratio = coverage_ratio(&observed, &truth)?;
        reports.push(RoundReport {
            round_index: round,
            start_s,
            end_s: start_s + cfg.ts_seconds,
            sensing_set: sensing.clone(),
            observed_edges: observed.edges.len(),
            truth_edges: truth.edges.len(),
            coverage_ratio: ratio,
            algorithm: cfg.algorithm.clone(),
            bootstrap: cfg.bootstrap.clone(),
            seed: cfg.seed,
        });

        if round + 1 < cfg.rounds {
            let mut ctx = SelectCtx {
                prev_sensing: &sensing,
                n,
                k: cfg.k as usize,
                rng: &mut select_rng,
            };
            sensing = selector.select(&observed, v_in, &mut ctx)?;
        }
    }
    Ok(RunOutput { reports, truncated_rounds: truncated, config: cfg.clone() })
}

/// Parameter grid for a sweep. Empty dimensions fall back to the base
/// config's value.
#[derive(Debug, Clone, Default)]
pub struct SweepGrid {
    pub ts_seconds: Vec<i64>,
    pub budgets: Vec<BudgetSpec>,
    pub algorithms: Vec<String>,
    pub bootstraps: Vec<String>,
    pub seeds: Vec<u64>,
}

/// Coordinates of one grid point, echoed with its results.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub ts_seconds: i64,
    pub budget: BudgetSpec,
    pub algorithm: String,
    pub bootstrap: String,
    pub seed: u64,
}

/// One run per grid point, in deterministic grid order. Each point gets an
/// independent seed derived from its own seed value and grid index.
pub fn run_sweep(
    trace: &ContactTrace,
    profiles: &SocialProfiles,
    base: &SimConfig,
    grid: &SweepGrid,
) -> Result<Vec<(GridPoint, RunOutput)>> {
    let ts_axis = if grid.ts_seconds.is_empty() { vec![base.ts_seconds] } else { grid.ts_seconds.clone() };
    let budget_axis = if grid.budgets.is_empty() { vec![base.budget] } else { grid.budgets.clone() };
    let algo_axis = if grid.algorithms.is_empty() { vec![base.algorithm.clone()] } else { grid.algorithms.clone() };
    let boot_axis = if grid.bootstraps.is_empty() { vec![base.bootstrap.clone()] } else { grid.bootstraps.clone() };
    let seed_axis = if grid.seeds.is_empty() { vec![base.seed] } else { grid.seeds.clone() };

    let mut out = Vec::new();
    let mut index = 0u64;
    for &ts in &ts_axis {
        for &budget in &budget_axis {
            for algorithm in &algo_axis {
                for bootstrap in &boot_axis {
                    for &seed in &seed_axis {
                        let point = GridPoint {
                            ts_seconds: ts,
                            budget,
                            algorithm: algorithm.clone(),
                            bootstrap: bootstrap.clone(),
                            seed,
                        };
                        let cfg = SimConfig {
                            ts_seconds: ts,
                            budget,
                            algorithm: algorithm.clone(),
                            bootstrap: bootstrap.clone(),
                            seed: derive_point_seed(seed, index),
                            ..base.clone()
                        };
                        out.push((point, run(trace, profiles, &cfg)?));
                        index += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Mean coverage ratio over an inclusive round range, for summarizing runs.
pub fn mean_ratio(reports: &[RoundReport], from: usize, to: usize) -> f64 {
    let slice: Vec<f64> =
        reports.iter().filter(|r| (from..=to).contains(&(r.round_index as usize))).map(|r| r.coverage_ratio).collect();
    if slice.is_empty() {
        return 0.0;
    }
    slice.iter().sum::<f64>() / slice.len() as f64
}
