//! Seed derivation and replication independence.

use ts_observer::diagnostics::{fold_replications, run_replication, Plan};
use ts_observer::model::{ModelSpec, ParameterGrid, TruthMode};
use ts_observer::policies::PolicyKind;

#[test]
fn replication_depends_only_on_master_seed_and_index() {
    let model = ModelSpec::BetaBernoulli { arms: 4, means: None };
    let small = Plan::new(200, 3, 17);
    let large = Plan::new(200, 50, 17);
    for i in 0..3 {
        let a = run_replication(&model, &PolicyKind::ThompsonBeta, &small, i, false).unwrap();
        let b = run_replication(&model, &PolicyKind::ThompsonBeta, &large, i, false).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.env, b.env);
    }
}

#[test]
fn different_indices_give_different_episodes() {
    let model = ModelSpec::Grid {
        grid: ParameterGrid::default_instance(),
        truth: TruthMode::DrawnFromPrior,
    };
    let plan = Plan::new(64, 20, 1);
    let traces = fold_replications(
        20,
        |i| Ok(run_replication(&model, &PolicyKind::Uniform, &plan, i, false)?.trace),
        Vec::new(),
        |mut acc, t| {
            acc.push(t);
            Ok(acc)
        },
    )
    .unwrap();
    for i in 0..traces.len() {
        for j in i + 1..traces.len() {
            assert_ne!(traces[i], traces[j]);
        }
    }
}

#[test]
fn truth_frequency_follows_prior() {
    let grid = ParameterGrid::new(
        vec![0.2, 0.8],
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        ts_observer::model::RewardFamily::Bernoulli,
    )
    .unwrap();
    let model = ModelSpec::Grid {
        grid,
        truth: TruthMode::DrawnFromPrior,
    };
    let n = 20_000;
    let plan = Plan::new(1, n, 3);
    let hits = fold_replications(
        n,
        |i| Ok(run_replication(&model, &PolicyKind::Uniform, &plan, i, false)?.env.truth == 0),
        0usize,
        |acc, hit| Ok(acc + usize::from(hit)),
    )
    .unwrap();
    let p = hits as f64 / n as f64;
    let se = (0.2f64 * 0.8 / n as f64).sqrt();
    assert!((p - 0.2).abs() < 4.0 * se, "{p}");
}
