//! Exact Bayes updates on a grid and the conjugate Beta posterior.

use ts_observer::belief::{BetaBelief, DiscreteBelief};
use ts_observer::model::ParameterGrid;
use ts_observer::rng::rng_from_seed;

fn main() -> ts_observer::Result<()> {
    let grid = ParameterGrid::default_instance();
    let mut belief = DiscreteBelief::from_prior(&grid);
    for (action, reward) in [(0, 1.0), (0, 1.0), (1, 0.0)] {
        belief = belief.update(&grid, action, reward)?;
        let p = belief.optimal_action_distribution(&grid)?;
        println!(
            "a_{} r={reward}: weights {:?}  P(A* = a) {:?}",
            action + 1,
            belief.weights(),
            p.probs
        );
    }

    let mut beta = BetaBelief::uniform(3);
    for (a, r) in [(0, 1.0), (0, 1.0), (1, 0.0), (2, 1.0), (0, 0.0)] {
        beta.observe(a, r)?;
    }
    let mut rng = rng_from_seed(1);
    let p = beta.optimal_action_distribution_mc(50_000, &mut rng)?;
    println!("beta params {:?}", beta.params());
    println!("P(A* = a) ~ {:?} (se <= {:.4})", p.probs, p.standard_error_bound());
    Ok(())
}
