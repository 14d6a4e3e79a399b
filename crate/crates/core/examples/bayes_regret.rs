//! Bayesian regret of Thompson sampling against uniform play.

use ts_observer::diagnostics::{bayes_regret_estimate, Plan};
use ts_observer::model::ModelSpec;
use ts_observer::policies::PolicyKind;

fn main() -> ts_observer::Result<()> {
    let model = ModelSpec::BetaBernoulli { arms: 5, means: None };
    let plan = Plan::new(10_000, 64, 2024);
    for (name, kind) in [("thompson", PolicyKind::ThompsonBeta), ("uniform", PolicyKind::Uniform)] {
        let report = bayes_regret_estimate(&model, &kind, &plan)?;
        println!("{name}");
        for c in report.checkpoints(&[100, 1000, 10_000])? {
            println!(
                "  t = {:>6}  regret {:>9.2} ± {:<6.2}  /t {:.4}  /sqrt(t) {:.3}",
                c.t, c.cumulative, c.cumulative_se, c.per_t, c.per_sqrt_t
            );
        }
    }
    Ok(())
}
