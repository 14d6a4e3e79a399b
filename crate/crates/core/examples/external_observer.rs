//! The observer sees only actions. It still recovers the optimal arm.

use ts_observer::model::ParameterGrid;
use ts_observer::observer::{convergence_curve, FrequencyEstimator};
use ts_observer::policies::{run_episode, PolicyKind};

fn main() -> ts_observer::Result<()> {
    let means = vec![0.6, 0.75, 0.5, 0.4];
    let grid = ParameterGrid::point(means.clone())?;
    let trace = run_episode(&grid, 0, &PolicyKind::ThompsonBeta, 20_000, 9)?;

    let actions: Vec<usize> = trace.actions().collect();
    let est = FrequencyEstimator::from_actions(means.len(), actions.iter().copied())?;
    println!("counts {:?}", est.counts());
    println!("point estimate a_{} (true optimum a_2)", est.point_estimate()? + 1);

    let curve = convergence_curve(&actions, means.len(), &[1], &[10, 100, 1000, 10_000, 20_000])?;
    for p in &curve.points {
        println!("t = {:>6}  N(a_2)/t = {:.4}", p.t, p.value);
    }
    Ok(())
}
