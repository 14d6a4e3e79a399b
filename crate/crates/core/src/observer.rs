//! External-observer estimator of the optimal action.
//!
//! Everything here takes action indices only. No reward, belief or parameter
//! crosses this boundary: the observer watches what the agent does and reads
//! off visit frequencies `N_{B,T} / T`. For a Thompson sampling agent with
//! sublinear Bayesian regret these converge almost surely to the indicator
//! `I_B(A*(θ*))`, and [`FrequencyEstimator::point_estimate`] converges to the
//! optimal action.

use serde::{Deserialize, Serialize};

use crate::model::argmax_min_index;
use crate::{Action, Error, Result};

/// Per-action visit counts. Counts are integers so the estimate is exact at any horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyEstimator {
    counts: Vec<u64>,
    total: u64,
}

impl FrequencyEstimator {
    pub fn new(num_actions: usize) -> Self {
        Self {
            counts: vec![0; num_actions],
            total: 0,
        }
    }

    pub fn from_actions(num_actions: usize, actions: impl IntoIterator<Item = Action>) -> Result<Self> {
        let mut est = Self::new(num_actions);
        for a in actions {
            est.record(a)?;
        }
        Ok(est)
    }

    pub fn record(&mut self, action: Action) -> Result<()> {
        let k = self.counts.len();
        let slot = self
            .counts
            .get_mut(action)
            .ok_or_else(|| Error::invalid(format!("action index {action} out of range for {k} actions")))?;
        *slot += 1;
        self.total += 1;
        Ok(())
    }

    /// Value-returning form of [`record`](Self::record).
    pub fn recorded(&self, action: Action) -> Result<Self> {
        let mut next = self.clone();
        next.record(action)?;
        Ok(next)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `N_{B,T} / T`. Repeated indices in `subset` are counted once.
    pub fn frequency(&self, subset: &[Action]) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyEstimator);
        }
        let mut members = vec![false; self.counts.len()];
        for &a in subset {
            *members
                .get_mut(a)
                .ok_or_else(|| Error::invalid(format!("action index {a} out of range")))? = true;
        }
        let hits: u64 = self
            .counts
            .iter()
            .zip(&members)
            .filter(|(_, &m)| m)
            .map(|(c, _)| c)
            .sum();
        Ok(hits as f64 / self.total as f64)
    }

    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::EmptyEstimator);
        }
        Ok(self.counts.iter().map(|&c| c as f64 / self.total as f64).collect())
    }

    /// Most visited action, ties to the smallest index.
    pub fn point_estimate(&self) -> Result<Action> {
        if self.total == 0 {
            return Err(Error::EmptyEstimator);
        }
        let as_f64: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        Ok(argmax_min_index(&as_f64))
    }

    /// Count-wise sum of two estimators over the same action set.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.counts.len() != other.counts.len() {
            return Err(Error::invalid("cannot merge estimators over different action sets"));
        }
        Ok(Self {
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            total: self.total + other.total,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub value: f64,
}

/// Trajectory of `N_{B,t} / t` at a list of checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub subset: Vec<Action>,
    pub points: Vec<CurvePoint>,
}

impl ConvergenceCurve {
    pub fn last(&self) -> Option<f64> {
        self.points.last().map(|p| p.value)
    }
}

/// Frequency of `subset` within the first `t` actions for each checkpoint `t`.
/// Checkpoints must be strictly increasing, at least 1 and at most the number of actions.
pub fn convergence_curve(
    actions: &[Action],
    num_actions: usize,
    subset: &[Action],
    checkpoints: &[usize],
) -> Result<ConvergenceCurve> {
    if let Some(&a) = subset.iter().find(|&&a| a >= num_actions) {
        return Err(Error::invalid(format!("action index {a} out of range")));
    }
    let mut members = vec![false; num_actions];
    for &a in subset {
        members[a] = true;
    }
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut hits = 0u64;
    let mut seen = 0usize;
    let mut prev = 0usize;
    for &t in checkpoints {
        if t == 0 || t <= prev {
            return Err(Error::invalid("checkpoints must be positive and strictly increasing"));
        }
        if t > actions.len() {
            return Err(Error::CheckpointOutOfRange {
                checkpoint: t,
                len: actions.len(),
            });
        }
        for &a in &actions[seen..t] {
            if a >= num_actions {
                return Err(Error::invalid(format!("action index {a} out of range")));
            }
            hits += u64::from(members[a]);
        }
        seen = t;
        prev = t;
        points.push(CurvePoint {
            t,
            value: hits as f64 / t as f64,
        });
    }
    Ok(ConvergenceCurve {
        subset: subset.to_vec(),
        points,
    })
}
