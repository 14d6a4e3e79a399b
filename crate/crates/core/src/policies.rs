//! Action-selection rules and the episode loop.
//!
//! Thompson sampling draws a parameter from the posterior and plays its
//! optimal action, so each action is selected with exactly its posterior
//! probability of being optimal. The square-step composite plays a fixed
//! action at `t = 1, 4, 9, ...` and delegates to an inner policy otherwise;
//! the two parts never see each other's observations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{BetaBelief, DiscreteBelief, OptimalActionDistribution};
use crate::model::{argmax_min_index, ParameterGrid, RewardFamily};
use crate::rng::{stream_rng, Stream};
use crate::trace::ActionTrace;
use crate::{Action, Error, ParamIndex, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Thompson sampling with the exact posterior over the grid rows.
    ThompsonDiscrete,
    /// Thompson sampling with independent Beta(1, 1) priors on Bernoulli arms.
    ThompsonBeta,
    /// Uniformly random actions; a linear-regret negative control.
    Uniform,
    SquareStep {
        fixed_action: Action,
        inner: Box<PolicyKind>,
    },
}

impl PolicyKind {
    pub fn square_step(fixed_action: Action, inner: PolicyKind) -> Self {
        PolicyKind::SquareStep {
            fixed_action,
            inner: Box::new(inner),
        }
    }

    /// True when the policy keeps an exact posterior over a parameter grid,
    /// so traces can carry optimal-action probability snapshots.
    pub fn has_exact_posterior(&self) -> bool {
        match self {
            PolicyKind::ThompsonDiscrete => true,
            PolicyKind::SquareStep { inner, .. } => inner.has_exact_posterior(),
            _ => false,
        }
    }

    pub fn validate(&self, num_actions: usize, family: RewardFamily) -> Result<()> {
        match self {
            PolicyKind::ThompsonDiscrete | PolicyKind::Uniform => Ok(()),
            PolicyKind::ThompsonBeta => match family {
                RewardFamily::Bernoulli => Ok(()),
                _ => Err(Error::invalid("thompson-beta requires Bernoulli rewards")),
            },
            PolicyKind::SquareStep {
                fixed_action,
                inner,
            } => {
                if *fixed_action >= num_actions {
                    return Err(Error::invalid(format!(
                        "fixed action {} out of range for {num_actions} actions",
                        fixed_action + 1
                    )));
                }
                if matches!(**inner, PolicyKind::SquareStep { .. }) {
                    return Err(Error::invalid("square-step policies cannot be nested"));
                }
                inner.validate(num_actions, family)
            }
        }
    }
}

pub fn is_perfect_square(t: usize) -> bool {
    let r = t.isqrt();
    r * r == t
}

/// A policy together with everything it has learned so far.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyState {
    ThompsonDiscrete(DiscreteBelief),
    ThompsonBeta(BetaBelief),
    Uniform { arms: usize },
    SquareStep {
        fixed_action: Action,
        inner: Box<PolicyState>,
    },
}

impl PolicyState {
    pub fn new(kind: &PolicyKind, grid: &ParameterGrid) -> Result<Self> {
        kind.validate(grid.num_actions(), grid.family())?;
        Ok(match kind {
            PolicyKind::ThompsonDiscrete => PolicyState::ThompsonDiscrete(DiscreteBelief::from_prior(grid)),
            PolicyKind::ThompsonBeta => PolicyState::ThompsonBeta(BetaBelief::uniform(grid.num_actions())),
            PolicyKind::Uniform => PolicyState::Uniform {
                arms: grid.num_actions(),
            },
            PolicyKind::SquareStep {
                fixed_action,
                inner,
            } => PolicyState::SquareStep {
                fixed_action: *fixed_action,
                inner: Box::new(PolicyState::new(inner, grid)?),
            },
        })
    }

    /// Thompson draw: sample from the posterior and return the optimal action
    /// of the sample.
    pub fn ts_select<R: Rng + ?Sized>(&self, grid: &ParameterGrid, rng: &mut R) -> Result<Action> {
        match self {
            PolicyState::ThompsonDiscrete(belief) => grid.optimal_action(belief.sample(rng)),
            PolicyState::ThompsonBeta(belief) => Ok(argmax_min_index(&belief.sample_means(rng))),
            _ => Err(Error::invalid("ts_select needs a Thompson policy")),
        }
    }

    /// Select the action for step `t` (one-based).
    pub fn select<R: Rng + ?Sized>(&self, t: usize, grid: &ParameterGrid, rng: &mut R) -> Result<Action> {
        match self {
            PolicyState::ThompsonDiscrete(_) | PolicyState::ThompsonBeta(_) => self.ts_select(grid, rng),
            PolicyState::Uniform { arms } => Ok(rng.random_range(0..*arms)),
            PolicyState::SquareStep { .. } => self.composite_select(t, grid, rng),
        }
    }

    /// Square steps return the fixed action without touching the inner
    /// policy or the rng.
    pub fn composite_select<R: Rng + ?Sized>(&self, t: usize, grid: &ParameterGrid, rng: &mut R) -> Result<Action> {
        match self {
            PolicyState::SquareStep {
                fixed_action,
                inner,
            } => {
                if is_perfect_square(t) {
                    Ok(*fixed_action)
                } else {
                    inner.select(t, grid, rng)
                }
            }
            _ => Err(Error::invalid("composite_select needs a square-step policy")),
        }
    }

    /// Learn from the step-`t` observation in place.
    pub fn observe(&mut self, t: usize, action: Action, reward: f64, grid: &ParameterGrid) -> Result<()> {
        grid.check_action(action)?;
        grid.family().check_reward(reward)?;
        match self {
            PolicyState::ThompsonDiscrete(belief) => {
                *belief = belief.update(grid, action, reward)?;
            }
            PolicyState::ThompsonBeta(belief) => belief.observe(action, reward)?,
            PolicyState::Uniform { .. } => {}
            PolicyState::SquareStep { inner, .. } => {
                if !is_perfect_square(t) {
                    inner.observe(t, action, reward, grid)?;
                }
            }
        }
        Ok(())
    }

    /// Value-returning form of [`observe`](Self::observe).
    pub fn update(&self, t: usize, action: Action, reward: f64, grid: &ParameterGrid) -> Result<Self> {
        let mut next = self.clone();
        next.observe(t, action, reward, grid)?;
        Ok(next)
    }

    /// The posterior whose optimal-action distribution drives selection, when
    /// it is an exact discrete one.
    pub fn discrete_belief(&self) -> Option<&DiscreteBelief> {
        match self {
            PolicyState::ThompsonDiscrete(b) => Some(b),
            PolicyState::SquareStep { inner, .. } => inner.discrete_belief(),
            _ => None,
        }
    }

    pub fn exact_optimal_action_distribution(&self, grid: &ParameterGrid) -> Option<OptimalActionDistribution> {
        self.discrete_belief()
            .map(|b| b.optimal_action_distribution(grid).expect("belief built from this grid"))
    }
}

/// Run one episode of `horizon` steps against the true row `truth`.
///
/// Rewards come from the environment stream of `seed` and action choices from
/// the policy stream, so the same seed reproduces the trace exactly. When the
/// policy holds an exact discrete posterior the trace also records the
/// optimal-action distribution after every update.
pub fn run_episode(
    grid: &ParameterGrid,
    truth: ParamIndex,
    kind: &PolicyKind,
    horizon: usize,
    seed: u64,
) -> Result<ActionTrace> {
    let mut state = PolicyState::new(kind, grid)?;
    let snapshots = state.discrete_belief().is_some();
    simulate(grid, truth, &mut state, horizon, seed, snapshots)
}

/// Episode loop over an explicit policy state, which is left in its final form.
pub fn simulate(
    grid: &ParameterGrid,
    truth: ParamIndex,
    state: &mut PolicyState,
    horizon: usize,
    seed: u64,
    record_snapshots: bool,
) -> Result<ActionTrace> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    grid.row(truth)?;
    if record_snapshots && state.discrete_belief().is_none() {
        return Err(Error::invalid("snapshots need a policy with an exact discrete posterior"));
    }
    let mut env_rng = stream_rng(seed, Stream::Environment);
    let mut policy_rng = stream_rng(seed, Stream::Policy);
    let mut trace = ActionTrace::with_capacity(horizon, record_snapshots);
    for t in 1..=horizon {
        let action = state.select(t, grid, &mut policy_rng)?;
        let reward = grid.sample_reward(truth, action, &mut env_rng)?;
        state.observe(t, action, reward, grid)?;
        let snapshot = record_snapshots.then(|| {
            state
                .exact_optimal_action_distribution(grid)
                .expect("checked above")
                .probs
        });
        trace.push(action, reward, snapshot)?;
    }
    Ok(trace)
}
