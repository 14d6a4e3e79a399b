//! Posterior-to-indicator convergence and the log-count diagnostic.

use serde::Serialize;

use super::{fold_replications, median, run_replication, Plan};
use crate::model::{argmax_min_index, ModelSpec, ParameterGrid, TruthMode};
use crate::policies::PolicyKind;
use crate::trace::ActionTrace;
use crate::{Action, Error, ParamIndex, Result};

/// Largest allowed ratio between the median `N / log T` at consecutive
/// checkpoints for the log-count study to call the counts bounded.
pub const LOG_COUNT_STABILITY_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationConvergence {
    pub replication: usize,
    pub truth: ParamIndex,
    pub optimal_action: Action,
    /// `P(A* = a | H_T)` for every action.
    pub terminal_p: Vec<f64>,
    /// `max_a |p_T(a) − I{a = A*(θ*)}|`.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorConvergenceReport {
    pub horizon: usize,
    pub rows: Vec<ReplicationConvergence>,
    pub median_gap: f64,
}

/// Exact Thompson sampling on `grid` with `θ*` drawn from the prior in each
/// replication; compares the terminal optimal-action posterior with the
/// indicator of the realized optimal action.
pub fn posterior_convergence_report(grid: &ParameterGrid, plan: &Plan) -> Result<PosteriorConvergenceReport> {
    if plan.replications == 0 || plan.horizon == 0 {
        return Err(Error::invalid("horizon and n_replications must be at least 1"));
    }
    let model = ModelSpec::Grid {
        grid: grid.clone(),
        truth: TruthMode::DrawnFromPrior,
    };
    model.validate()?;
    let rows = fold_replications(
        plan.replications,
        |i| {
            let rep = run_replication(&model, &PolicyKind::ThompsonDiscrete, plan, i, false)?;
            let p = rep
                .state
                .exact_optimal_action_distribution(&rep.env.grid)
                .expect("thompson-discrete holds an exact posterior");
            let best = rep.env.optimal_action();
            let gap = p
                .probs
                .iter()
                .enumerate()
                .map(|(a, &q)| (q - if a == best { 1.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max);
            Ok(ReplicationConvergence {
                replication: i,
                truth: rep.env.truth,
                optimal_action: best,
                terminal_p: p.probs,
                gap,
            })
        },
        Vec::new(),
        |mut acc, row| {
            acc.push(row);
            Ok(acc)
        },
    )?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    Ok(PosteriorConvergenceReport {
        horizon: plan.horizon,
        median_gap: median(&gaps),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogCountPoint {
    pub t: usize,
    /// `(arm, N_{arm,t} / ln t)` for every strictly suboptimal arm.
    pub ratios: Vec<(Action, f64)>,
}

/// Visit counts of the strictly suboptimal arms of `true_means`, divided by
/// `ln t`, at each checkpoint. Checkpoints must be at least two, each `≥ 2`,
/// strictly increasing and within the trace.
pub fn log_count_ratio(trace: &ActionTrace, true_means: &[f64], checkpoints: &[usize]) -> Result<Vec<LogCountPoint>> {
    if checkpoints.len() < 2 {
        return Err(Error::invalid("log-count ratio needs at least two checkpoints"));
    }
    if checkpoints[0] < 2 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be ≥ 2 and strictly increasing"));
    }
    let last = *checkpoints.last().unwrap();
    if last > trace.len() {
        return Err(Error::CheckpointOutOfRange {
            checkpoint: last,
            len: trace.len(),
        });
    }
    let best = true_means[argmax_min_index(true_means)];
    let suboptimal: Vec<Action> = (0..true_means.len()).filter(|&a| true_means[a] < best).collect();
    let mut counts = vec![0u64; true_means.len()];
    let mut seen = 0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        for s in &trace.steps()[seen..t] {
            counts[s.action] += 1;
        }
        seen = t;
        let log_t = (t as f64).ln();
        out.push(LogCountPoint {
            t,
            ratios: suboptimal.iter().map(|&a| (a, counts[a] as f64 / log_t)).collect(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LogCountStudy {
    pub checkpoints: Vec<usize>,
    pub suboptimal_arms: Vec<Action>,
    /// `medians[c][j]`: median over replications of `N / ln t` for arm
    /// `suboptimal_arms[j]` at checkpoint `c`.
    pub medians: Vec<Vec<f64>>,
    /// Largest ratio of medians between consecutive checkpoints, over arms.
    pub max_change_factor: f64,
    /// `max_change_factor < LOG_COUNT_STABILITY_FACTOR`.
    pub bounded: bool,
}

/// Replicated log-count diagnostic on fixed true arm means.
pub fn log_count_study(true_means: &[f64], kind: &PolicyKind, plan: &Plan, checkpoints: &[usize]) -> Result<LogCountStudy> {
    let model = ModelSpec::BetaBernoulli {
        arms: true_means.len(),
        means: Some(true_means.to_vec()),
    };
    model.validate()?;
    if plan.replications == 0 {
        return Err(Error::invalid("n_replications must be at least 1"));
    }
    let per_rep: Vec<Vec<LogCountPoint>> = fold_replications(
        plan.replications,
        |i| {
            let rep = run_replication(&model, kind, plan, i, false)?;
            log_count_ratio(&rep.trace, true_means, checkpoints)
        },
        Vec::new(),
        |mut acc, r| {
            acc.push(r);
            Ok(acc)
        },
    )?;
    let suboptimal_arms: Vec<Action> = per_rep[0][0].ratios.iter().map(|r| r.0).collect();
    let medians: Vec<Vec<f64>> = (0..checkpoints.len())
        .map(|c| {
            (0..suboptimal_arms.len())
                .map(|j| median(&per_rep.iter().map(|r| r[c].ratios[j].1).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    let mut max_change_factor: f64 = 1.0;
    for w in medians.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            let factor = if *a == 0.0 && *b == 0.0 {
                1.0
            } else if *a == 0.0 || *b == 0.0 {
                f64::INFINITY
            } else {
                (b / a).max(a / b)
            };
            max_change_factor = max_change_factor.max(factor);
        }
    }
    Ok(LogCountStudy {
        checkpoints: checkpoints.to_vec(),
        suboptimal_arms,
        medians,
        max_change_factor,
        bounded: max_change_factor < LOG_COUNT_STABILITY_FACTOR,
    })
}
