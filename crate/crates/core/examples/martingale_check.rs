//! Enumerate every history of the two-arm instance and check the tower identity.

use ts_observer::diagnostics::{enumerate_exact, martingale_check};
use ts_observer::model::ParameterGrid;
use ts_observer::policies::PolicyKind;

fn main() -> ts_observer::Result<()> {
    let grid = ParameterGrid::default_instance();
    for horizon in 1..=6 {
        let tree = enumerate_exact(&grid, &PolicyKind::ThompsonDiscrete, horizon)?;
        let report = martingale_check(&tree);
        println!(
            "T = {horizon}: {:>5} nodes, leaves {:>4}, max residual {:.2e}, per-action {:.2e}",
            tree.nodes().len(),
            tree.leaves().len(),
            report.max_residual,
            report.max_action_residual
        );
    }
    Ok(())
}
