//! Run a config file end to end and write the output directory.
//!
//! `cargo run --example experiment -- configs/beta5.cfg /tmp/beta5`

use std::path::PathBuf;

use ts_observer::harness::{parse_config, run_experiment};

fn main() -> ts_observer::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.cfg").into());
    let text = std::fs::read_to_string(&path).map_err(|e| ts_observer::Error::io(&path, e))?;
    let mut config = parse_config(&text)?;
    if let Some(out) = args.next() {
        config.output.dir = PathBuf::from(out);
    }
    let outcome = run_experiment(&config)?;
    let s = &outcome.summary;
    println!("{} replications written to {}", s.replications, config.output.dir.display());
    println!("point-estimate accuracy {:.3}", s.accuracy);
    for (t, r) in s.checkpoints.iter().zip(&s.mean_cumulative_regret) {
        println!("t = {t:>6}  mean regret {r:.2}");
    }
    Ok(())
}
