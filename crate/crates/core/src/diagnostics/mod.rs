//! Empirical and exact checks of the convergence theory.
//!
//! * [`enumerate`]: every history of a small Bernoulli instance under exact
//!   Thompson sampling, with exact probabilities, and the tower-residual check
//!   of the optimal-action posterior.
//! * [`regret`]: Bayesian regret by seeded replication, and the square-step
//!   counterexample.
//! * [`convergence`]: terminal posterior against the indicator of the true
//!   optimal action, and the log-count diagnostic for suboptimal arms.
//!
//! Limit statements cannot be checked at `T = ∞`; the replicated studies are
//! finite-horizon surrogates with explicit thresholds.

pub mod convergence;
pub mod enumerate;
pub mod regret;

pub use convergence::{
    log_count_ratio, log_count_study, posterior_convergence_report, LogCountPoint, LogCountStudy,
    PosteriorConvergenceReport, ReplicationConvergence,
};
pub use enumerate::{
    enumerate_exact, enumerate_exact_with, martingale_check, EnumerationLimits, EnumerationNode,
    EnumerationTree, MartingaleResidualReport, NodeResidual,
};
pub use regret::{
    bayes_regret_estimate, counterexample_report, CounterexampleCheckpoint, CounterexampleReport,
    RegretCheckpoint, RegretReport,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ModelSpec, Realized};
use crate::policies::{simulate, PolicyKind, PolicyState};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::trace::ActionTrace;
use crate::Result;

/// Horizon, replication count and master seed of a replicated study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
}

impl Plan {
    pub fn new(horizon: usize, replications: usize, seed: u64) -> Self {
        Self {
            horizon,
            replications,
            seed,
        }
    }
}

/// One finished replication.
pub struct Replication {
    pub index: usize,
    pub env: Realized,
    pub trace: ActionTrace,
    pub state: PolicyState,
}

/// Run replication `index` of `plan`: realize the environment from the truth
/// stream of the derived seed, then run the episode on the same seed.
pub fn run_replication(
    model: &ModelSpec,
    kind: &PolicyKind,
    plan: &Plan,
    index: usize,
    record_snapshots: bool,
) -> Result<Replication> {
    let seed = derive_seed(plan.seed, index as u64);
    let env = model.realize(&mut stream_rng(seed, Stream::Truth))?;
    let mut state = PolicyState::new(kind, &env.grid)?;
    let trace = simulate(&env.grid, env.truth, &mut state, plan.horizon, seed, record_snapshots)?;
    Ok(Replication {
        index,
        env,
        trace,
        state,
    })
}

/// Map every replication index in parallel and fold the results strictly in
/// index order, so the outcome does not depend on the thread count.
pub fn fold_replications<T, A, M, F>(replications: usize, map: M, init: A, mut fold: F) -> Result<A>
where
    T: Send,
    M: Fn(usize) -> Result<T> + Sync,
    F: FnMut(A, T) -> Result<A>,
{
    let chunk = (rayon::current_num_threads() * 2).max(1);
    let mut acc = init;
    let mut start = 0;
    while start < replications {
        let end = (start + chunk).min(replications);
        let batch: Vec<T> = (start..end).into_par_iter().map(&map).collect::<Result<_>>()?;
        for item in batch {
            acc = fold(acc, item)?;
        }
        start = end;
    }
    Ok(acc)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn fold_order_is_index_order() {
        let order = fold_replications(100, Ok, Vec::new(), |mut acc, i| {
            acc.push(i);
            Ok(acc)
        })
        .unwrap();
        assert_eq!(order, (0..100).collect::<Vec<_>>());
    }
}
