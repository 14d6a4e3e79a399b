//! Exact enumeration of Thompson sampling histories on small Bernoulli
//! instances, and the tower-residual check built on it.
//!
//! At each node the tree branches first over actions, weighted by the exact
//! Thompson probabilities (the node's optimal-action distribution), then over
//! rewards `{0, 1}`, weighted by the prior predictive of the node belief.
//! Branches of probability zero are pruned.

use serde::Serialize;

use crate::belief::{DiscreteBelief, OptimalActionDistribution};
use crate::model::{ParameterGrid, RewardFamily};
use crate::policies::PolicyKind;
use crate::{Action, Error, Result};

/// Size guard for [`enumerate_exact_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Upper bound on `(2K)^T`, the number of leaves of the unpruned tree.
    pub max_leaves: u64,
}

impl Default for EnumerationLimits {
    /// `4^8`: two arms up to `T = 8`.
    fn default() -> Self {
        Self { max_leaves: 65_536 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationNode {
    /// `(action, reward)` pairs from the root.
    pub history: Vec<(Action, u8)>,
    /// Probability of the whole history.
    pub probability: f64,
    /// Probability of the last step given the parent history; 1 at the root.
    pub branch_probability: f64,
    pub belief: DiscreteBelief,
    pub p_vector: OptimalActionDistribution,
    pub children: Vec<EnumerationNode>,
}

impl EnumerationNode {
    pub fn depth(&self) -> usize {
        self.history.len()
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a EnumerationNode)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationTree {
    pub horizon: usize,
    pub num_actions: usize,
    pub root: EnumerationNode,
}

impl EnumerationTree {
    /// All nodes in depth-first order.
    pub fn nodes(&self) -> Vec<&EnumerationNode> {
        let mut out = Vec::new();
        self.root.visit(&mut |n| out.push(n));
        out
    }

    pub fn leaves(&self) -> Vec<&EnumerationNode> {
        self.nodes().into_iter().filter(|n| n.children.is_empty()).collect()
    }

    /// Total probability mass at each depth `0..=T`.
    pub fn depth_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.horizon + 1];
        self.root.visit(&mut |n| totals[n.depth()] += n.probability);
        totals
    }

    /// Exact probability of a history, zero when it was pruned.
    pub fn history_probability(&self, history: &[(Action, u8)]) -> f64 {
        let mut node = &self.root;
        for step in history {
            match node.children.iter().find(|c| c.history.last() == Some(step)) {
                Some(c) => node = c,
                None => return 0.0,
            }
        }
        node.probability
    }
}

pub fn enumerate_exact(grid: &ParameterGrid, kind: &PolicyKind, horizon: usize) -> Result<EnumerationTree> {
    enumerate_exact_with(grid, kind, horizon, EnumerationLimits::default())
}

pub fn enumerate_exact_with(
    grid: &ParameterGrid,
    kind: &PolicyKind,
    horizon: usize,
    limits: EnumerationLimits,
) -> Result<EnumerationTree> {
    if *kind != PolicyKind::ThompsonDiscrete {
        return Err(Error::UnsupportedInstance(
            "exact enumeration supports only thompson-discrete".into(),
        ));
    }
    if grid.family() != RewardFamily::Bernoulli {
        return Err(Error::UnsupportedInstance(
            "exact enumeration needs Bernoulli rewards".into(),
        ));
    }
    let violations = grid.violations();
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations));
    }
    let k = grid.num_actions() as u64;
    let leaves = u32::try_from(horizon)
        .ok()
        .and_then(|h| (2 * k).checked_pow(h))
        .filter(|&n| n <= limits.max_leaves);
    if leaves.is_none() {
        return Err(Error::UnsupportedInstance(format!(
            "(2·{k})^{horizon} histories exceeds the limit of {}",
            limits.max_leaves
        )));
    }

    let belief = DiscreteBelief::from_prior(grid);
    let root = expand(grid, horizon, Vec::new(), 1.0, 1.0, belief)?;
    Ok(EnumerationTree {
        horizon,
        num_actions: grid.num_actions(),
        root,
    })
}

fn expand(
    grid: &ParameterGrid,
    horizon: usize,
    history: Vec<(Action, u8)>,
    probability: f64,
    branch_probability: f64,
    belief: DiscreteBelief,
) -> Result<EnumerationNode> {
    let p_vector = belief.optimal_action_distribution(grid)?;
    let mut children = Vec::new();
    if history.len() < horizon {
        for (action, &p_action) in p_vector.probs.iter().enumerate() {
            if p_action == 0.0 {
                continue;
            }
            for reward in [0u8, 1] {
                let r = f64::from(reward);
                let p_reward = belief.predictive(grid, action, r)?;
                if p_reward == 0.0 {
                    continue;
                }
                let branch = p_action * p_reward;
                let mut h = history.clone();
                h.push((action, reward));
                let child_belief = belief.update(grid, action, r)?;
                children.push(expand(grid, horizon, h, probability * branch, branch, child_belief)?);
            }
        }
    }
    Ok(EnumerationNode {
        history,
        probability,
        branch_probability,
        belief,
        p_vector,
        children,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeResidual {
    pub history: Vec<(Action, u8)>,
    /// Largest residual over the checked subsets, mixing over the Thompson action choice.
    pub residual: f64,
    /// Largest residual over subsets and over each action taken on its own.
    pub action_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleResidualReport {
    pub horizon: usize,
    pub subsets_checked: usize,
    pub nodes: Vec<NodeResidual>,
    pub max_residual: f64,
    pub max_action_residual: f64,
    /// Largest deviation of a depth's total probability from 1.
    pub max_depth_mass_error: f64,
}

/// Action subsets checked by [`martingale_check`]: all `2^K` subsets when
/// `K ≤ 4`, singletons otherwise. Each subset is a bitmask over actions.
pub fn checked_subsets(num_actions: usize) -> Vec<Vec<Action>> {
    if num_actions <= 4 {
        (0u32..(1 << num_actions))
            .map(|mask| (0..num_actions).filter(|&a| mask & (1 << a) != 0).collect())
            .collect()
    } else {
        (0..num_actions).map(|a| vec![a]).collect()
    }
}

/// For every internal node and every checked subset `B`, the residual
/// `|Σ_children P(child | node) · p_B(child) − p_B(node)|`.
///
/// Also reports the same residual conditioned on each action separately
/// (children reached by that action, weighted by the reward predictive),
/// which holds because the posterior is a martingale whatever is played.
pub fn martingale_check(tree: &EnumerationTree) -> MartingaleResidualReport {
    let subsets = checked_subsets(tree.num_actions);
    let mut nodes = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut max_action_residual: f64 = 0.0;
    for node in tree.nodes() {
        if node.children.is_empty() {
            continue;
        }
        let mut residual: f64 = 0.0;
        let mut action_residual: f64 = 0.0;
        for subset in &subsets {
            let here = node.p_vector.mass(subset);
            let mixed: f64 = node
                .children
                .iter()
                .map(|c| c.branch_probability * c.p_vector.mass(subset))
                .sum();
            residual = residual.max((mixed - here).abs());

            for action in 0..tree.num_actions {
                let p_action = node.p_vector.probs[action];
                if p_action == 0.0 {
                    continue;
                }
                let conditional: f64 = node
                    .children
                    .iter()
                    .filter(|c| c.history.last().map(|s| s.0) == Some(action))
                    .map(|c| (c.branch_probability / p_action) * c.p_vector.mass(subset))
                    .sum();
                action_residual = action_residual.max((conditional - here).abs());
            }
        }
        max_residual = max_residual.max(residual);
        max_action_residual = max_action_residual.max(action_residual);
        nodes.push(NodeResidual {
            history: node.history.clone(),
            residual,
            action_residual,
        });
    }
    let max_depth_mass_error = tree
        .depth_totals()
        .iter()
        .map(|t| (t - 1.0).abs())
        .fold(0.0, f64::max);
    MartingaleResidualReport {
        horizon: tree.horizon,
        subsets_checked: subsets.len(),
        nodes,
        max_residual,
        max_action_residual,
        max_depth_mass_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn default_instance_root_and_first_branch() {
        let grid = ParameterGrid::default_instance();
        let tree = enumerate_exact(&grid, &PolicyKind::ThompsonDiscrete, 1).unwrap();
        assert_eq!(tree.root.p_vector.probs, vec![0.5, 0.5]);
        assert_eq!(tree.root.children.len(), 4);

        let played_first_saw_one = tree
            .root
            .children
            .iter()
            .find(|c| c.history == [(0, 1)])
            .unwrap();
        assert!(close(played_first_saw_one.belief.weights()[0], 0.9));
        assert!(close(played_first_saw_one.p_vector.probs[0], 0.9));
        // P(a_1 played) · P(r = 1 | a_1) = 0.5 · (0.5·0.9 + 0.5·0.1)
        assert!(close(played_first_saw_one.probability, 0.25));
        assert!(close(
            tree.root.belief.predictive(&grid, 0, 1.0).unwrap(),
            0.5
        ));
    }

    #[test]
    fn root_tower_identity_by_hand() {
        let tree = enumerate_exact(&ParameterGrid::default_instance(), &PolicyKind::ThompsonDiscrete, 1).unwrap();
        let after_first: f64 = tree
            .root
            .children
            .iter()
            .filter(|c| c.history[0].0 == 0)
            .map(|c| c.branch_probability / 0.5 * c.p_vector.probs[0])
            .sum();
        assert!(close(after_first, 0.5));
        let report = martingale_check(&tree);
        assert!(report.max_residual < 1e-15);
        assert!(report.max_action_residual < 1e-15);
    }

    #[test]
    fn point_mass_prior_has_constant_p() {
        let grid = ParameterGrid::new(
            vec![1.0, 0.0],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            RewardFamily::Bernoulli,
        )
        .unwrap();
        let tree = enumerate_exact(&grid, &PolicyKind::ThompsonDiscrete, 4).unwrap();
        for node in tree.nodes() {
            assert_eq!(node.p_vector.probs, vec![1.0, 0.0]);
        }
        let report = martingale_check(&tree);
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn depth_mass_and_residuals_default_t6() {
        let tree = enumerate_exact(&ParameterGrid::default_instance(), &PolicyKind::ThompsonDiscrete, 6).unwrap();
        for total in tree.depth_totals() {
            assert!((total - 1.0).abs() < 1e-10);
        }
        let report = martingale_check(&tree);
        assert!(report.max_residual < 1e-10);
        assert!(report.max_action_residual < 1e-10);
        assert_eq!(report.subsets_checked, 4);
    }

    #[test]
    fn unsupported_instances() {
        let grid = ParameterGrid::default_instance();
        assert!(matches!(
            enumerate_exact(&grid, &PolicyKind::Uniform, 2),
            Err(Error::UnsupportedInstance(_))
        ));
        assert!(matches!(
            enumerate_exact(&grid, &PolicyKind::ThompsonDiscrete, 9),
            Err(Error::UnsupportedInstance(_))
        ));
        let gaussian = ParameterGrid::new(vec![1.0], vec![vec![0.0, 1.0]], RewardFamily::Gaussian { sigma: 1.0 }).unwrap();
        assert!(matches!(
            enumerate_exact(&gaussian, &PolicyKind::ThompsonDiscrete, 2),
            Err(Error::UnsupportedInstance(_))
        ));
        assert!(enumerate_exact(&grid, &PolicyKind::ThompsonDiscrete, 8).is_ok());
    }

    #[test]
    fn subsets_enumerated() {
        assert_eq!(checked_subsets(2), vec![vec![], vec![0], vec![1], vec![0, 1]]);
        assert_eq!(checked_subsets(4).len(), 16);
        assert_eq!(checked_subsets(5).len(), 5);
    }
}
