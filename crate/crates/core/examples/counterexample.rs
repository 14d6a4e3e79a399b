//! Square-step composite: sublinear regret, yet the bad arm is played forever.

use ts_observer::diagnostics::{counterexample_report, Plan};
use ts_observer::model::{ModelSpec, ParameterGrid, TruthMode};
use ts_observer::policies::PolicyKind;

fn main() -> ts_observer::Result<()> {
    let model = ModelSpec::Grid {
        grid: ParameterGrid::default_instance(),
        truth: TruthMode::Fixed(0),
    };
    let plan = Plan::new(100_000, 8, 5);
    let report = counterexample_report(&model, &PolicyKind::ThompsonDiscrete, 1, &plan, &[100, 1000, 10_000])?;
    for c in &report.checkpoints {
        println!(
            "t = {:>6}  regret/t {:.5}  N(a_2) {:>6.1}  forced {:>4}",
            c.t, c.regret_per_t, c.mean_fixed_count, c.forced_plays
        );
    }
    println!("regret/t decreasing: {}", report.regret_per_t_decreasing);
    println!("a_2 count strictly increasing: {}", report.fixed_count_strictly_increasing);
    println!("observer still picks a_1: {:.2}", report.point_estimate_accuracy);
    Ok(())
}
