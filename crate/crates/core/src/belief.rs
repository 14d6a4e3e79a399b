//! Posteriors over the unknown parameter and the optimal-action distribution
//! `P(A*(θ*) = a | H_t)`.
//!
//! Two representations are provided. [`DiscreteBelief`] is the exact posterior
//! over the rows of a [`ParameterGrid`]; its optimal-action distribution is an
//! exact sum over the partition cells. [`BetaBelief`] is the conjugate
//! posterior of independent Bernoulli arms; its optimal-action distribution is
//! estimated by Monte Carlo.
//!
//! Beliefs are values. Updates return a new belief and leave the input alone.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::model::{argmax_min_index, sample_categorical, ParameterGrid};
use crate::{Action, Error, ParamIndex, Result};

/// Default number of posterior draws for Monte Carlo optimal-action probabilities.
pub const DEFAULT_MC_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBelief {
    weights: Vec<f64>,
}

impl DiscreteBelief {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("belief needs at least one weight"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("belief weights must be finite and nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("belief weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn from_prior(grid: &ParameterGrid) -> Self {
        Self {
            weights: grid.prior().to_vec(),
        }
    }

    pub fn point_mass(num_params: usize, at: ParamIndex) -> Self {
        let mut weights = vec![0.0; num_params];
        weights[at] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_grid(&self, grid: &ParameterGrid) -> Result<()> {
        if grid.num_params() == self.weights.len() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "belief has {} weights but the grid has {} parameters",
                self.weights.len(),
                grid.num_params()
            )))
        }
    }

    /// Bayes rule for one observation of `reward` after playing `action`.
    ///
    /// Works in the log domain, shifted by the largest log-likelihood in the
    /// support, so Gaussian densities far in the tails do not underflow.
    pub fn update(&self, grid: &ParameterGrid, action: Action, reward: f64) -> Result<Self> {
        self.check_grid(grid)?;
        grid.check_action(action)?;
        let family = grid.family();
        family.check_reward(reward)?;

        let log_lik: Vec<f64> = grid
            .rows()
            .map(|row| family.log_likelihood(reward, row[action]))
            .collect();
        let shift = self
            .weights
            .iter()
            .zip(&log_lik)
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, l)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            return Err(Error::DegenerateEvidence);
        }

        let mut weights: Vec<f64> = self
            .weights
            .iter()
            .zip(&log_lik)
            .map(|(&w, &l)| if w > 0.0 { w * (l - shift).exp() } else { 0.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { weights })
    }

    /// Prior-predictive probability (or density) of `reward` when playing `action`.
    pub fn predictive(&self, grid: &ParameterGrid, action: Action, reward: f64) -> Result<f64> {
        self.check_grid(grid)?;
        grid.check_action(action)?;
        let family = grid.family();
        Ok(self
            .weights
            .iter()
            .zip(grid.rows())
            .map(|(w, row)| w * family.likelihood(reward, row[action]))
            .sum())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamIndex {
        sample_categorical(&self.weights, rng)
    }

    /// Exact `P(A*(θ*) = a_i | belief)`, summing weights over each partition cell.
    pub fn optimal_action_distribution(&self, grid: &ParameterGrid) -> Result<OptimalActionDistribution> {
        self.check_grid(grid)?;
        let mut probs = vec![0.0; grid.num_actions()];
        for (w, best) in self.weights.iter().zip(grid.optimal_actions()) {
            probs[best] += w;
        }
        Ok(OptimalActionDistribution {
            probs,
            estimation: Estimation::Exact,
        })
    }
}

/// Independent Beta posteriors, one `(alpha, beta)` pair per Bernoulli arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaBelief {
    params: Vec<(f64, f64)>,
}

impl BetaBelief {
    pub fn new(params: Vec<(f64, f64)>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("beta belief needs at least one arm"));
        }
        if params
            .iter()
            .any(|&(a, b)| !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()))
        {
            return Err(Error::invalid("beta parameters must be positive and finite"));
        }
        Ok(Self { params })
    }

    /// Beta(1, 1) on every arm.
    pub fn uniform(arms: usize) -> Self {
        Self {
            params: vec![(1.0, 1.0); arms],
        }
    }

    pub fn params(&self) -> &[(f64, f64)] {
        &self.params
    }

    pub fn num_arms(&self) -> usize {
        self.params.len()
    }

    pub fn update(&self, action: Action, reward: f64) -> Result<Self> {
        let mut next = self.clone();
        next.observe(action, reward)?;
        Ok(next)
    }

    /// In-place conjugate update.
    pub fn observe(&mut self, action: Action, reward: f64) -> Result<()> {
        if reward != 0.0 && reward != 1.0 {
            return Err(Error::invalid(format!(
                "beta-bernoulli reward must be 0 or 1, got {reward}"
            )));
        }
        let arms = self.params.len();
        let (a, b) = self
            .params
            .get_mut(action)
            .ok_or_else(|| Error::invalid(format!("action index {action} out of range for {arms} arms")))?;
        *a += reward;
        *b += 1.0 - reward;
        Ok(())
    }

    /// One joint posterior draw of the arm means.
    pub fn sample_means<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params.len());
        self.sample_means_into(rng, &mut out);
        out
    }

    pub(crate) fn sample_means_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.params.iter().map(|&(a, b)| {
            Beta::new(a, b)
                .expect("parameters validated positive")
                .sample(rng)
        }));
    }

    /// Monte Carlo estimate of `P(A*(θ*) = a_i | belief)` from `draws`
    /// posterior samples, using the min-index argmax of each sampled mean vector.
    pub fn optimal_action_distribution_mc<R: Rng + ?Sized>(
        &self,
        draws: usize,
        rng: &mut R,
    ) -> Result<OptimalActionDistribution> {
        if draws == 0 {
            return Err(Error::invalid("n_draws must be at least 1"));
        }
        let mut counts = vec![0usize; self.params.len()];
        let mut buf = Vec::with_capacity(self.params.len());
        for _ in 0..draws {
            self.sample_means_into(rng, &mut buf);
            counts[argmax_min_index(&buf)] += 1;
        }
        Ok(OptimalActionDistribution {
            probs: counts.iter().map(|&c| c as f64 / draws as f64).collect(),
            estimation: Estimation::MonteCarlo { draws },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Estimation {
    Exact,
    MonteCarlo { draws: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalActionDistribution {
    pub probs: Vec<f64>,
    pub estimation: Estimation,
}

impl OptimalActionDistribution {
    /// Probability that the optimal action lies in `subset`.
    pub fn mass(&self, subset: &[Action]) -> f64 {
        subset.iter().map(|&a| self.probs[a]).sum()
    }

    /// Largest per-entry standard error of a Monte Carlo estimate, bounded by
    /// `1 / (2 sqrt(n))`. Zero for exact distributions.
    pub fn standard_error_bound(&self) -> f64 {
        match self.estimation {
            Estimation::Exact => 0.0,
            Estimation::MonteCarlo { draws } => 0.5 / (draws as f64).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RewardFamily;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn discrete_update_by_hand() {
        let grid = ParameterGrid::default_instance();
        let prior = DiscreteBelief::from_prior(&grid);
        let post = prior.update(&grid, 0, 1.0).unwrap();
        // 0.5·0.9 / (0.5·0.9 + 0.5·0.1)
        assert_close(post.weights(), &[0.9, 0.1], 1e-15);
        assert_close(prior.weights(), &[0.5, 0.5], 0.0);
    }

    #[test]
    fn point_mass_is_absorbing() {
        let grid = ParameterGrid::default_instance();
        let b = DiscreteBelief::point_mass(2, 0);
        for (a, r) in [(0, 1.0), (1, 1.0), (0, 0.0), (1, 0.0)] {
            assert_eq!(b.update(&grid, a, r).unwrap().weights(), &[1.0, 0.0]);
        }
    }

    #[test]
    fn flat_likelihood_keeps_uniform() {
        let grid = ParameterGrid::new(
            vec![1.0 / 3.0; 3],
            vec![vec![0.4, 0.6]; 3],
            RewardFamily::Bernoulli,
        )
        .unwrap();
        let b = DiscreteBelief::from_prior(&grid).update(&grid, 1, 0.0).unwrap();
        assert_close(b.weights(), &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn zero_likelihood_everywhere_is_an_error() {
        let grid = ParameterGrid::new(
            vec![0.5, 0.5],
            vec![vec![0.0, 0.5], vec![0.0, 0.5]],
            RewardFamily::Bernoulli,
        )
        .unwrap();
        let b = DiscreteBelief::from_prior(&grid);
        assert!(matches!(b.update(&grid, 0, 1.0), Err(Error::DegenerateEvidence)));
        assert!(matches!(b.update(&grid, 0, 0.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gaussian_update_survives_far_tail() {
        let grid = ParameterGrid::new(
            vec![0.5, 0.5],
            vec![vec![0.0], vec![1.0]],
            RewardFamily::Gaussian { sigma: 0.1 },
        )
        .unwrap();
        let b = DiscreteBelief::from_prior(&grid).update(&grid, 0, 500.0).unwrap();
        assert_close(b.weights(), &[0.0, 1.0], 1e-12);
    }

    #[test]
    fn beta_conjugate_increments() {
        let b = BetaBelief::uniform(2);
        assert_eq!(b.update(0, 1.0).unwrap().params()[0], (2.0, 1.0));
        assert_eq!(b.update(0, 0.0).unwrap().params()[0], (1.0, 2.0));
        let b2 = b.update(1, 1.0).unwrap();
        assert_eq!(b2.params()[0], (1.0, 1.0));
        assert_eq!(b2.params()[1], (2.0, 1.0));
        assert!(b.update(0, 0.5).is_err());
        assert!(b.update(2, 1.0).is_err());
    }

    #[test]
    fn discrete_sampling() {
        let mut rng = rng_from_seed(8);
        let point = DiscreteBelief::new(vec![1.0, 0.0]).unwrap();
        assert!((0..1000).all(|_| point.sample(&mut rng) == 0));

        let half = DiscreteBelief::new(vec![0.5, 0.5]).unwrap();
        let n = 100_000;
        let ones = (0..n).filter(|_| half.sample(&mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn concentrated_beta_draws() {
        let mut rng = rng_from_seed(9);
        let b = BetaBelief::new(vec![(1e6, 1.0)]).unwrap();
        let high = (0..10_000).filter(|_| b.sample_means(&mut rng)[0] > 0.99).count();
        assert_eq!(high, 10_000);
    }

    #[test]
    fn exact_optimal_action_distribution() {
        let grid = ParameterGrid::default_instance();
        let p = DiscreteBelief::from_prior(&grid)
            .optimal_action_distribution(&grid)
            .unwrap();
        assert_eq!(p.probs, vec![0.5, 0.5]);
        assert_eq!(p.estimation, Estimation::Exact);

        let post = DiscreteBelief::from_prior(&grid).update(&grid, 0, 1.0).unwrap();
        assert_close(&post.optimal_action_distribution(&grid).unwrap().probs, &[0.9, 0.1], 1e-15);

        let ties = ParameterGrid::new(
            vec![0.2, 0.8],
            vec![vec![0.3, 0.3, 0.3], vec![0.6, 0.6, 0.6]],
            RewardFamily::Bernoulli,
        )
        .unwrap();
        let p = DiscreteBelief::from_prior(&ties).optimal_action_distribution(&ties).unwrap();
        assert_close(&p.probs, &[1.0, 0.0, 0.0], 1e-15);
    }

    #[test]
    fn mc_separated_posterior() {
        let mut rng = rng_from_seed(10);
        let b = BetaBelief::new(vec![(1e6, 1.0), (1.0, 1e6)]).unwrap();
        let p = b.optimal_action_distribution_mc(10_000, &mut rng).unwrap();
        assert!(p.probs[0] >= 0.999);
        assert_eq!(p.estimation, Estimation::MonteCarlo { draws: 10_000 });
    }

    #[test]
    fn mc_exchangeable_arms() {
        let mut rng = rng_from_seed(11);
        let n = 100_000;
        let p = BetaBelief::uniform(2).optimal_action_distribution_mc(n, &mut rng).unwrap();
        let se = 0.5 / (n as f64).sqrt();
        assert!((p.probs[0] - 0.5).abs() < 3.0 * se, "{:?}", p.probs);
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mc_single_draw_is_one_hot() {
        let mut rng = rng_from_seed(12);
        let p = BetaBelief::uniform(4).optimal_action_distribution_mc(1, &mut rng).unwrap();
        assert_eq!(p.probs.iter().filter(|&&x| x == 1.0).count(), 1);
        assert_eq!(p.probs.iter().sum::<f64>(), 1.0);
        assert!(BetaBelief::uniform(2).optimal_action_distribution_mc(0, &mut rng).is_err());
    }

    /// A Beta posterior on two arms approximated by a fine grid of midpoints
    /// weighted by the (unnormalized) Beta densities.
    #[test]
    fn mc_matches_fine_discrete_grid() {
        let arms = [(3.0, 5.0), (4.0, 4.0)];
        // 200 and 199 bins: no midpoint of one arm equals a midpoint of the
        // other, so no cell is a tie.
        let mids = |bins: usize| -> Vec<f64> { (0..bins).map(|i| (i as f64 + 0.5) / bins as f64).collect() };
        let (xs, ys) = (mids(200), mids(199));
        let dens = |x: f64, (a, b): (f64, f64)| x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0);
        let mut prior = Vec::new();
        let mut means = Vec::new();
        for &x in &xs {
            for &y in &ys {
                prior.push(dens(x, arms[0]) * dens(y, arms[1]));
                means.push(vec![x, y]);
            }
        }
        let total: f64 = prior.iter().sum();
        let prior: Vec<f64> = prior.iter().map(|w| w / total).collect();
        let fix: f64 = 1.0 - prior.iter().sum::<f64>();
        let mut prior = prior;
        prior[0] += fix;
        let grid = ParameterGrid::new(prior, means, RewardFamily::Bernoulli).unwrap();
        let exact = DiscreteBelief::from_prior(&grid)
            .optimal_action_distribution(&grid)
            .unwrap();

        let n = 100_000;
        let mut rng = rng_from_seed(13);
        let mc = BetaBelief::new(arms.to_vec())
            .unwrap()
            .optimal_action_distribution_mc(n, &mut rng)
            .unwrap();
        let se = (exact.probs[0] * (1.0 - exact.probs[0]) / n as f64).sqrt();
        // Midpoint discretization error is far below one standard error at 200 bins.
        assert!(
            (mc.probs[0] - exact.probs[0]).abs() < 3.0 * se + 1e-3,
            "mc {:?} exact {:?}",
            mc.probs,
            exact.probs
        );
    }

    fn arb_instance() -> impl Strategy<Value = (ParameterGrid, Vec<(usize, bool)>)> {
        (1usize..5, 1usize..4).prop_flat_map(|(m, k)| {
            (
                prop::collection::vec(0.01f64..1.0, m),
                prop::collection::vec(prop::collection::vec(0.05f64..0.95, k), m),
                prop::collection::vec((0..k, any::<bool>()), 0..40),
            )
                .prop_map(|(w, means, obs)| {
                    let s: f64 = w.iter().sum();
                    let mut prior: Vec<f64> = w.iter().map(|x| x / s).collect();
                    let fix = 1.0 - prior.iter().sum::<f64>();
                    prior[0] += fix;
                    (
                        ParameterGrid::new(prior, means, RewardFamily::Bernoulli).unwrap(),
                        obs,
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn update_chains_stay_normalized((grid, obs) in arb_instance()) {
            let mut b = DiscreteBelief::from_prior(&grid);
            for (a, r) in obs {
                b = b.update(&grid, a, if r { 1.0 } else { 0.0 }).unwrap();
                let s: f64 = b.weights().iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                prop_assert!(b.weights().iter().all(|w| *w >= 0.0));
            }
        }

        /// One-step tower identity: mixing the two possible posteriors by their
        /// predictive probabilities returns the current belief, and so the
        /// optimal-action distribution is conserved in expectation.
        #[test]
        fn prior_predictive_mixture_returns_belief((grid, obs) in arb_instance(), action_seed in 0usize..16) {
            let mut b = DiscreteBelief::from_prior(&grid);
            for (a, r) in obs {
                b = b.update(&grid, a, if r { 1.0 } else { 0.0 }).unwrap();
            }
            let a = action_seed % grid.num_actions();
            let mut mixed = vec![0.0; grid.num_params()];
            let mut mixed_p = vec![0.0; grid.num_actions()];
            for r in [0.0, 1.0] {
                let pr = b.predictive(&grid, a, r).unwrap();
                let post = b.update(&grid, a, r).unwrap();
                for (acc, w) in mixed.iter_mut().zip(post.weights()) {
                    *acc += pr * w;
                }
                let p = post.optimal_action_distribution(&grid).unwrap();
                for (acc, q) in mixed_p.iter_mut().zip(&p.probs) {
                    *acc += pr * q;
                }
            }
            for (x, y) in mixed.iter().zip(b.weights()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let p0 = b.optimal_action_distribution(&grid).unwrap();
            for (x, y) in mixed_p.iter().zip(&p0.probs) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
