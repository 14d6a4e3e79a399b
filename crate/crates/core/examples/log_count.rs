//! Suboptimal-arm counts grow like log T under Thompson sampling, linearly under uniform play.

use ts_observer::diagnostics::{log_count_study, Plan};
use ts_observer::policies::PolicyKind;

fn main() -> ts_observer::Result<()> {
    let means = [0.9, 0.7, 0.5, 0.3, 0.1];
    let plan = Plan::new(100_000, 16, 77);
    let checkpoints = [1000, 10_000, 100_000];
    for (name, kind) in [("thompson", PolicyKind::ThompsonBeta), ("uniform", PolicyKind::Uniform)] {
        let study = log_count_study(&means, &kind, &plan, &checkpoints)?;
        println!("{name}: max change factor {:.2} (bounded: {})", study.max_change_factor, study.bounded);
        for (t, row) in study.checkpoints.iter().zip(&study.medians) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:8.2}")).collect();
            println!("  t = {t:>6}  median N/ln t  {}", cells.join(" "));
        }
    }
    Ok(())
}
