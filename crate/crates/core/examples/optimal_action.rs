//! Optimal actions and the partition of a small parameter grid.

use ts_observer::model::{ParameterGrid, RewardFamily};

fn main() -> ts_observer::Result<()> {
    let grid = ParameterGrid::new(
        vec![0.4, 0.3, 0.2, 0.1],
        vec![
            vec![0.9, 0.1, 0.5],
            vec![0.2, 0.8, 0.5],
            vec![0.5, 0.5, 0.1], // tie: the smaller index wins
            vec![0.1, 0.1, 0.1],
        ],
        RewardFamily::Bernoulli,
    )?;
    for m in 0..grid.num_params() {
        println!("theta_{} -> a_{}", m + 1, grid.optimal_action(m)? + 1);
    }
    for (a, cell) in grid.optimal_partition().iter().enumerate() {
        let members: Vec<String> = cell.iter().map(|m| format!("theta_{}", m + 1)).collect();
        println!("Theta_{} = {{{}}}", a + 1, members.join(", "));
    }
    Ok(())
}
