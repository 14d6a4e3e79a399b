//! Bandit environment: a finite parameter grid with prior weights and a
//! mean-reward table, reward sampling, and the min-index optimal-action map.

use std::fmt;

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Action, Error, ParamIndex, Result};

/// Tolerance on the sum of prior weights.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RewardFamily {
    Bernoulli,
    /// Normal rewards with known standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

impl RewardFamily {
    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match *self {
            RewardFamily::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardFamily::Gaussian { sigma } => {
                let normal = Normal::new(mean, sigma).expect("sigma validated positive");
                normal.sample(rng)
            }
        }
    }

    /// Likelihood of `reward` given the arm mean: a probability mass for
    /// Bernoulli rewards and a density for Gaussian ones.
    pub fn likelihood(&self, reward: f64, mean: f64) -> f64 {
        match *self {
            RewardFamily::Bernoulli => {
                if reward == 1.0 {
                    mean
                } else {
                    1.0 - mean
                }
            }
            RewardFamily::Gaussian { sigma } => {
                let z = (reward - mean) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    /// Natural log of [`likelihood`](Self::likelihood), computed without
    /// underflow for Gaussian rewards far in the tails.
    pub fn log_likelihood(&self, reward: f64, mean: f64) -> f64 {
        match *self {
            RewardFamily::Bernoulli => self.likelihood(reward, mean).ln(),
            RewardFamily::Gaussian { sigma } => {
                let z = (reward - mean) / sigma;
                -0.5 * z * z - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
            }
        }
    }

    pub fn check_reward(&self, reward: f64) -> Result<()> {
        match self {
            RewardFamily::Bernoulli if reward != 0.0 && reward != 1.0 => Err(Error::invalid(
                format!("Bernoulli reward must be 0 or 1, got {reward}"),
            )),
            _ if !reward.is_finite() => Err(Error::invalid(format!("non-finite reward {reward}"))),
            _ => Ok(()),
        }
    }
}

/// One problem found by [`ParameterGrid::violations`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelViolation {
    Shape { message: String },
    NegativePrior { param: ParamIndex, weight: f64 },
    PriorNotNormalized { sum: f64 },
    NonFinite { param: ParamIndex, action: Action },
    OutOfSupport { param: ParamIndex, action: Action, mean: f64 },
    BadSigma { sigma: f64 },
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelViolation::Shape { message } => write!(f, "{message}"),
            ModelViolation::NegativePrior { param, weight } => {
                write!(f, "prior weight of parameter {} is negative ({weight})", param + 1)
            }
            ModelViolation::PriorNotNormalized { sum } => {
                write!(f, "prior weights sum to {sum}, not 1")
            }
            ModelViolation::NonFinite { param, action } => write!(
                f,
                "mean of parameter {} action {} is not finite",
                param + 1,
                action + 1
            ),
            ModelViolation::OutOfSupport {
                param,
                action,
                mean,
            } => write!(
                f,
                "Bernoulli mean {mean} of parameter {} action {} is outside [0, 1]",
                param + 1,
                action + 1
            ),
            ModelViolation::BadSigma { sigma } => {
                write!(f, "Gaussian sigma must be positive and finite, got {sigma}")
            }
        }
    }
}

/// Finite parameter set with a prior and the mean-reward table `f(θ, a)`.
///
/// Rows are parameters, columns are actions. Construction through
/// [`ParameterGrid::new`] validates the table; [`ParameterGrid::unchecked`]
/// exists so that invalid grids can be inspected with
/// [`ParameterGrid::violations`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    prior: Vec<f64>,
    means: Vec<Vec<f64>>,
    family: RewardFamily,
}

impl ParameterGrid {
    pub fn new(prior: Vec<f64>, means: Vec<Vec<f64>>, family: RewardFamily) -> Result<Self> {
        let grid = Self::unchecked(prior, means, family);
        let violations = grid.violations();
        if violations.is_empty() {
            Ok(grid)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub fn unchecked(prior: Vec<f64>, means: Vec<Vec<f64>>, family: RewardFamily) -> Self {
        Self {
            prior,
            means,
            family,
        }
    }

    /// Two parameters, two Bernoulli arms, rows (0.9, 0.1) and (0.1, 0.9),
    /// uniform prior: the smallest instance with a nontrivial partition.
    pub fn default_instance() -> Self {
        Self::new(
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            RewardFamily::Bernoulli,
        )
        .expect("default instance is valid")
    }

    /// A one-row Bernoulli grid holding fixed true arm means.
    pub fn point(means: Vec<f64>) -> Result<Self> {
        Self::new(vec![1.0], vec![means], RewardFamily::Bernoulli)
    }

    pub fn num_params(&self) -> usize {
        self.means.len()
    }

    pub fn num_actions(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn family(&self) -> RewardFamily {
        self.family
    }

    pub fn row(&self, param: ParamIndex) -> Result<&[f64]> {
        self.means
            .get(param)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("parameter index {param} out of range")))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.means.iter().map(Vec::as_slice)
    }

    pub fn check_action(&self, action: Action) -> Result<()> {
        if action < self.num_actions() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "action index {action} out of range for {} actions",
                self.num_actions()
            )))
        }
    }

    pub fn mean_reward(&self, param: ParamIndex, action: Action) -> Result<f64> {
        let row = self.row(param)?;
        row.get(action).copied().ok_or_else(|| {
            Error::invalid(format!(
                "action index {action} out of range for {} actions",
                row.len()
            ))
        })
    }

    pub fn optimal_action(&self, param: ParamIndex) -> Result<Action> {
        Ok(argmax_min_index(self.row(param)?))
    }

    /// `Θ_i` for every action: entry `i` lists the parameters whose optimal
    /// action is `i`. Empty sets are kept so the result is indexed by action.
    pub fn optimal_partition(&self) -> Vec<Vec<ParamIndex>> {
        let mut cells = vec![Vec::new(); self.num_actions()];
        for (m, row) in self.rows().enumerate() {
            cells[argmax_min_index(row)].push(m);
        }
        cells
    }

    /// Optimal action of every parameter, in row order.
    pub fn optimal_actions(&self) -> Vec<Action> {
        self.rows().map(argmax_min_index).collect()
    }

    pub fn sample_reward<R: Rng + ?Sized>(
        &self,
        param: ParamIndex,
        action: Action,
        rng: &mut R,
    ) -> Result<f64> {
        let mean = self.mean_reward(param, action)?;
        Ok(self.family.sample(mean, rng))
    }

    /// All problems with this grid. Empty means valid.
    pub fn violations(&self) -> Vec<ModelViolation> {
        let mut out = Vec::new();
        let m = self.means.len();
        if m == 0 {
            out.push(ModelViolation::Shape {
                message: "grid has no parameters".into(),
            });
            return out;
        }
        let k = self.num_actions();
        if k == 0 {
            out.push(ModelViolation::Shape {
                message: "grid has no actions".into(),
            });
        }
        if let Some(bad) = self.means.iter().position(|row| row.len() != k) {
            out.push(ModelViolation::Shape {
                message: format!(
                    "row {} has {} actions, expected {k}",
                    bad + 1,
                    self.means[bad].len()
                ),
            });
        }
        if self.prior.len() != m {
            out.push(ModelViolation::Shape {
                message: format!("prior has {} weights for {m} parameters", self.prior.len()),
            });
        }
        for (param, &w) in self.prior.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                out.push(ModelViolation::NegativePrior { param, weight: w });
            }
        }
        let sum: f64 = self.prior.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            out.push(ModelViolation::PriorNotNormalized { sum });
        }
        if let RewardFamily::Gaussian { sigma } = self.family {
            if !(sigma > 0.0 && sigma.is_finite()) {
                out.push(ModelViolation::BadSigma { sigma });
            }
        }
        for (param, row) in self.means.iter().enumerate() {
            for (action, &mean) in row.iter().enumerate() {
                if !mean.is_finite() {
                    out.push(ModelViolation::NonFinite { param, action });
                } else if self.family == RewardFamily::Bernoulli && !(0.0..=1.0).contains(&mean) {
                    out.push(ModelViolation::OutOfSupport {
                        param,
                        action,
                        mean,
                    });
                }
            }
        }
        out
    }
}

/// Smallest index attaining the maximum. Ties are detected with exact equality.
pub fn argmax_min_index(values: &[f64]) -> Action {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// How the true parameter of a replication is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthMode {
    Fixed(ParamIndex),
    DrawnFromPrior,
}

/// Declarative environment for replicated experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSpec {
    Grid { grid: ParameterGrid, truth: TruthMode },
    /// Independent Bernoulli arms. `means: None` draws each arm mean from the
    /// uniform Beta(1, 1) prior in every replication.
    BetaBernoulli { arms: usize, means: Option<Vec<f64>> },
}

/// The environment of a single replication: a grid and the index of its true row.
#[derive(Debug, Clone, PartialEq)]
pub struct Realized {
    pub grid: ParameterGrid,
    pub truth: ParamIndex,
}

impl Realized {
    pub fn true_means(&self) -> &[f64] {
        self.grid.row(self.truth).expect("truth validated")
    }

    pub fn optimal_action(&self) -> Action {
        argmax_min_index(self.true_means())
    }
}

impl ModelSpec {
    pub fn num_actions(&self) -> usize {
        match self {
            ModelSpec::Grid { grid, .. } => grid.num_actions(),
            ModelSpec::BetaBernoulli { arms, .. } => *arms,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Grid { grid, truth } => {
                let v = grid.violations();
                if !v.is_empty() {
                    return Err(Error::InvalidModel(v));
                }
                if let TruthMode::Fixed(m) = truth {
                    grid.row(*m)?;
                }
                Ok(())
            }
            ModelSpec::BetaBernoulli { arms, means } => {
                if *arms == 0 {
                    return Err(Error::invalid("beta-bernoulli model needs at least one arm"));
                }
                if let Some(means) = means {
                    if means.len() != *arms {
                        return Err(Error::invalid(format!(
                            "{} true means given for {arms} arms",
                            means.len()
                        )));
                    }
                    ParameterGrid::point(means.clone())?;
                }
                Ok(())
            }
        }
    }

    /// Fix the environment of one replication. Consumes randomness only when
    /// the truth is drawn from the prior.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Realized> {
        match self {
            ModelSpec::Grid { grid, truth } => {
                let truth = match truth {
                    TruthMode::Fixed(m) => {
                        grid.row(*m)?;
                        *m
                    }
                    TruthMode::DrawnFromPrior => sample_categorical(grid.prior(), rng),
                };
                Ok(Realized {
                    grid: grid.clone(),
                    truth,
                })
            }
            ModelSpec::BetaBernoulli { arms, means } => {
                let means = match means {
                    Some(m) => m.clone(),
                    None => {
                        let uniform = Beta::new(1.0, 1.0).expect("valid Beta");
                        (0..*arms).map(|_| uniform.sample(rng)).collect()
                    }
                };
                Ok(Realized {
                    grid: ParameterGrid::point(means)?,
                    truth: 0,
                })
            }
        }
    }
}

/// Inverse-CDF draw from a probability vector. Zero-weight entries are never returned.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}
