//! Bayesian regret by replication, and the square-step counterexample.
//!
//! The per-step regret is measured as the mean gap `f(θ*, A*(θ*)) − f(θ*, A_t)`
//! rather than a difference of noisy rewards. Both have the same expectation,
//! and the gap has lower variance.

use serde::Serialize;

use super::{fold_replications, run_replication, Plan};
use crate::model::{argmax_min_index, ModelSpec, TruthMode};
use crate::observer::FrequencyEstimator;
use crate::policies::{is_perfect_square, PolicyKind};
use crate::{Action, Error, Result};

/// Running mean and sum of squared deviations per time step (Welford).
#[derive(Debug, Clone)]
pub(crate) struct SeriesStats {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl SeriesStats {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub(crate) fn push(&mut self, xs: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(xs) {
            let d = x - *mean;
            *mean += d / n;
            *m2 += d * (x - *mean);
        }
    }

    fn standard_errors(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.n as f64;
        self.m2.iter().map(|m2| (m2 / (n - 1.0) / n).sqrt()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegretReport {
    pub horizon: usize,
    pub replications: usize,
    /// Mean per-step gap at `t = 1..T` (index `t - 1`).
    pub mean_gap: Vec<f64>,
    pub gap_se: Vec<f64>,
    /// Mean cumulative gap up to and including `t`.
    pub cumulative: Vec<f64>,
    pub cumulative_se: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretCheckpoint {
    pub t: usize,
    pub cumulative: f64,
    pub cumulative_se: f64,
    pub per_t: f64,
    pub per_sqrt_t: f64,
}

impl RegretReport {
    pub(crate) fn from_stats(horizon: usize, gaps: &SeriesStats, cumulative: &SeriesStats) -> Self {
        Self {
            horizon,
            replications: gaps.n,
            mean_gap: gaps.mean.clone(),
            gap_se: gaps.standard_errors(),
            cumulative: cumulative.mean.clone(),
            cumulative_se: cumulative.standard_errors(),
        }
    }

    pub fn at(&self, t: usize) -> Result<RegretCheckpoint> {
        if t == 0 || t > self.horizon {
            return Err(Error::CheckpointOutOfRange {
                checkpoint: t,
                len: self.horizon,
            });
        }
        let cumulative = self.cumulative[t - 1];
        Ok(RegretCheckpoint {
            t,
            cumulative,
            cumulative_se: self.cumulative_se[t - 1],
            per_t: cumulative / t as f64,
            per_sqrt_t: cumulative / (t as f64).sqrt(),
        })
    }

    pub fn checkpoints(&self, ts: &[usize]) -> Result<Vec<RegretCheckpoint>> {
        ts.iter().map(|&t| self.at(t)).collect()
    }
}

pub(crate) fn gap_series(means: &[f64], actions: impl Iterator<Item = Action>) -> (Vec<f64>, Vec<f64>) {
    let best = means[argmax_min_index(means)];
    let mut total = 0.0;
    let mut gaps = Vec::new();
    let mut cumulative = Vec::new();
    for a in actions {
        let g = best - means[a];
        total += g;
        gaps.push(g);
        cumulative.push(total);
    }
    (gaps, cumulative)
}

/// Estimate the Bayesian regret of `kind` on `model` over `plan.replications`
/// seeded episodes. With [`TruthMode::DrawnFromPrior`] (or Beta-Bernoulli arms
/// without fixed means) each replication draws its own true parameter.
pub fn bayes_regret_estimate(model: &ModelSpec, kind: &PolicyKind, plan: &Plan) -> Result<RegretReport> {
    check_plan(plan)?;
    model.validate()?;
    let (gaps, cumulative) = fold_replications(
        plan.replications,
        |i| {
            let rep = run_replication(model, kind, plan, i, false)?;
            Ok(gap_series(rep.env.true_means(), rep.trace.actions()))
        },
        (SeriesStats::new(plan.horizon), SeriesStats::new(plan.horizon)),
        |(mut g, mut c), (gaps, cum)| {
            g.push(&gaps);
            c.push(&cum);
            Ok((g, c))
        },
    )?;
    Ok(RegretReport::from_stats(plan.horizon, &gaps, &cumulative))
}

fn check_plan(plan: &Plan) -> Result<()> {
    if plan.horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if plan.replications == 0 {
        return Err(Error::invalid("n_replications must be at least 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleCheckpoint {
    pub t: usize,
    pub regret_per_t: f64,
    pub regret_per_t_se: f64,
    /// Mean over replications of the fixed action's visit count up to `t`.
    pub mean_fixed_count: f64,
    /// Mean over replications of the fixed action's visit frequency up to `t`.
    pub fixed_frequency: f64,
    /// Perfect squares in `1..=t`.
    pub forced_plays: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub horizon: usize,
    pub replications: usize,
    pub fixed_action: Action,
    /// Steps at which the fixed action was forced, counted from the traces.
    /// Equal to `floor(sqrt(T))` in every replication.
    pub forced_plays: usize,
    pub checkpoints: Vec<CounterexampleCheckpoint>,
    pub regret_per_t_decreasing: bool,
    /// True when the fixed action's count strictly increases between
    /// consecutive checkpoints in every replication.
    pub fixed_count_strictly_increasing: bool,
    /// Fraction of replications whose observer point estimate is the true optimal action.
    pub point_estimate_accuracy: f64,
}

struct CounterexampleRun {
    gaps: Vec<f64>,
    cumulative: Vec<f64>,
    forced: usize,
    fixed_counts: Vec<u64>,
    correct: bool,
}

/// Run the square-step composite (fixed action on `t = i²`, `inner` elsewhere)
/// and report sublinear regret alongside unbounded visits of the fixed action.
pub fn counterexample_report(
    model: &ModelSpec,
    inner: &PolicyKind,
    fixed_action: Action,
    plan: &Plan,
    checkpoints: &[usize],
) -> Result<CounterexampleReport> {
    check_plan(plan)?;
    model.validate()?;
    if fixed_action >= model.num_actions() {
        return Err(Error::invalid(format!("fixed action {} out of range", fixed_action + 1)));
    }
    let suboptimal_somewhere = match model {
        ModelSpec::Grid { grid, truth } => {
            let params: Vec<usize> = match truth {
                TruthMode::Fixed(m) => vec![*m],
                TruthMode::DrawnFromPrior => (0..grid.num_params()).filter(|&m| grid.prior()[m] > 0.0).collect(),
            };
            params
                .iter()
                .any(|&m| grid.optimal_action(m).map(|a| a != fixed_action).unwrap_or(false))
        }
        ModelSpec::BetaBernoulli { means: Some(m), .. } => argmax_min_index(m) != fixed_action,
        ModelSpec::BetaBernoulli { arms, means: None } => *arms >= 2,
    };
    if !suboptimal_somewhere {
        return Err(Error::invalid(
            "fixed action must be suboptimal under at least one parameter with positive prior weight",
        ));
    }
    let mut cps = checkpoints.to_vec();
    if cps.last() != Some(&plan.horizon) {
        cps.push(plan.horizon);
    }
    if cps.windows(2).any(|w| w[0] >= w[1]) || cps[0] == 0 || *cps.last().unwrap() > plan.horizon {
        return Err(Error::invalid("checkpoints must be strictly increasing within 1..=T"));
    }

    let kind = PolicyKind::square_step(fixed_action, inner.clone());
    let k = model.num_actions();
    let initial = (
        SeriesStats::new(plan.horizon),
        SeriesStats::new(plan.horizon),
        Vec::<usize>::new(),
        vec![0.0; cps.len()],
        true,
        0usize,
    );
    let (gaps, cumulative, forced, fixed_sum, increasing, correct) = fold_replications(
        plan.replications,
        |i| {
            let rep = run_replication(model, &kind, plan, i, false)?;
            let (gaps, cumulative) = gap_series(rep.env.true_means(), rep.trace.actions());
            let forced = rep
                .trace
                .steps()
                .iter()
                .filter(|s| is_perfect_square(s.t) && s.action == fixed_action)
                .count();
            let mut fixed_counts = Vec::with_capacity(cps.len());
            let mut count = 0u64;
            let mut seen = 0;
            for &t in &cps {
                count += rep.trace.steps()[seen..t]
                    .iter()
                    .filter(|s| s.action == fixed_action)
                    .count() as u64;
                seen = t;
                fixed_counts.push(count);
            }
            let estimate = FrequencyEstimator::from_actions(k, rep.trace.actions())?.point_estimate()?;
            Ok(CounterexampleRun {
                gaps,
                cumulative,
                forced,
                fixed_counts,
                correct: estimate == rep.env.optimal_action(),
            })
        },
        initial,
        |(mut g, mut c, mut forced, mut fixed_sum, increasing, correct), run| {
            g.push(&run.gaps);
            c.push(&run.cumulative);
            forced.push(run.forced);
            for (acc, &n) in fixed_sum.iter_mut().zip(&run.fixed_counts) {
                *acc += n as f64;
            }
            let inc = run.fixed_counts.windows(2).all(|w| w[0] < w[1]);
            Ok((g, c, forced, fixed_sum, increasing && inc, correct + usize::from(run.correct)))
        },
    )?;

    let forced_plays = forced[0];
    if forced.iter().any(|&f| f != forced_plays) {
        return Err(Error::invalid("forced-play count differs between replications"));
    }
    let regret = RegretReport::from_stats(plan.horizon, &gaps, &cumulative);
    let n = plan.replications as f64;
    let checkpoints: Vec<CounterexampleCheckpoint> = cps
        .iter()
        .zip(&fixed_sum)
        .map(|(&t, &sum)| {
            let r = regret.at(t).expect("validated checkpoint");
            CounterexampleCheckpoint {
                t,
                regret_per_t: r.per_t,
                regret_per_t_se: r.cumulative_se / t as f64,
                mean_fixed_count: sum / n,
                fixed_frequency: sum / n / t as f64,
                forced_plays: t.isqrt(),
            }
        })
        .collect();
    let regret_per_t_decreasing = checkpoints.windows(2).all(|w| w[1].regret_per_t < w[0].regret_per_t);
    Ok(CounterexampleReport {
        horizon: plan.horizon,
        replications: plan.replications,
        fixed_action,
        forced_plays,
        checkpoints,
        regret_per_t_decreasing,
        fixed_count_strictly_increasing: increasing,
        point_estimate_accuracy: correct as f64 / n,
    })
}
