//! One Thompson sampling episode, written as a trace CSV to stdout.

use ts_observer::model::ParameterGrid;
use ts_observer::policies::{run_episode, PolicyKind};

fn main() -> ts_observer::Result<()> {
    let grid = ParameterGrid::default_instance();
    let trace = run_episode(&grid, 1, &PolicyKind::ThompsonDiscrete, 12, 42)?;
    print!("{}", trace.to_csv_string());
    Ok(())
}
