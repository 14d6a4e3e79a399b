//! Running a configured experiment and writing its output directory.
//!
//! Output layout (all indices one-based):
//!
//! ```text
//! <out>/summary.csv | summary.json   per-replication rows and aggregates
//! <out>/regret.csv                   t,mean_gap,gap_se,cumulative,cumulative_se
//! <out>/curves.csv                   replication,t,optimal_frequency
//! <out>/traces/trace_00000.csv       one trace per replication (if enabled)
//! ```
//!
//! Files are first written to a staging directory next to `<out>` and moved in
//! only after every replication succeeded, so a failed run leaves no partial
//! results behind. Nothing in the output depends on the thread count.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, OutputFormat};
use crate::diagnostics::regret::{gap_series, RegretReport, SeriesStats};
use crate::diagnostics::{fold_replications, run_replication, Plan};
use crate::observer::{convergence_curve, FrequencyEstimator};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Outcome of one replication, as seen by the external observer. Indices are one-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub replication: usize,
    pub seed: u64,
    pub truth: usize,
    pub true_means: Vec<f64>,
    pub optimal_action: usize,
    pub point_estimate: usize,
    pub correct: bool,
    pub frequencies: Vec<f64>,
    pub optimal_frequency: f64,
    /// Cumulative regret at each configured checkpoint.
    pub cumulative_regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub num_actions: usize,
    pub checkpoints: Vec<usize>,
    pub rows: Vec<ReplicationRow>,
    /// Fraction of replications whose point estimate is the optimal action.
    pub accuracy: f64,
    pub mean_optimal_frequency: f64,
    /// Mean cumulative regret across replications at each checkpoint.
    pub mean_cumulative_regret: Vec<f64>,
}

impl RunSummary {
    /// Aggregate rows given in any order.
    pub fn from_rows(config: &ExperimentConfig, mut rows: Vec<ReplicationRow>) -> Self {
        rows.sort_by_key(|r| r.replication);
        let n = rows.len().max(1) as f64;
        let accuracy = rows.iter().filter(|r| r.correct).count() as f64 / n;
        let mean_optimal_frequency = rows.iter().map(|r| r.optimal_frequency).sum::<f64>() / n;
        let mean_cumulative_regret = (0..config.checkpoints.len())
            .map(|c| rows.iter().map(|r| r.cumulative_regret[c]).sum::<f64>() / n)
            .collect();
        Self {
            horizon: config.horizon,
            replications: rows.len(),
            seed: config.seed,
            num_actions: config.model.num_actions(),
            checkpoints: config.checkpoints.clone(),
            rows,
            accuracy,
            mean_optimal_frequency,
            mean_cumulative_regret,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// One line per replication; list columns are `;`-separated.
    pub fn to_csv(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        let mut out = String::from(
            "replication,seed,truth,optimal_action,point_estimate,correct,optimal_frequency,frequencies,cumulative_regret\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.replication,
                r.seed,
                r.truth,
                r.optimal_action,
                r.point_estimate,
                r.correct,
                r.optimal_frequency,
                join(&r.frequencies),
                join(&r.cumulative_regret),
            ));
        }
        out
    }
}

/// A finished experiment held in memory.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: RunSummary,
    pub regret: RegretReport,
    /// `(replication, t, optimal-action frequency)`, one-based replication.
    pub curves: Vec<(usize, usize, f64)>,
}

impl ExperimentOutcome {
    pub fn regret_csv(&self) -> String {
        let r = &self.regret;
        let mut out = String::from("t,mean_gap,gap_se,cumulative,cumulative_se\n");
        for t in 0..r.horizon {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t + 1,
                r.mean_gap[t],
                r.gap_se[t],
                r.cumulative[t],
                r.cumulative_se[t]
            ));
        }
        out
    }

    pub fn curves_csv(&self) -> String {
        let mut out = String::from("replication,t,optimal_frequency\n");
        for (rep, t, v) in &self.curves {
            out.push_str(&format!("{rep},{t},{v}\n"));
        }
        out
    }
}

struct Folded {
    rows: Vec<ReplicationRow>,
    curves: Vec<(usize, usize, f64)>,
    gaps: SeriesStats,
    cumulative: SeriesStats,
}

fn execute(config: &ExperimentConfig, trace_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    let plan = Plan::new(config.horizon, config.replications, config.seed);
    let checkpoints = &config.checkpoints;
    let snapshots = trace_dir.is_some() && config.policy.has_exact_posterior();
    let folded = fold_replications(
        config.replications,
        |i| {
            let rep = run_replication(&config.model, &config.policy, &plan, i, snapshots)?;
            let k = rep.env.grid.num_actions();
            let est = FrequencyEstimator::from_actions(k, rep.trace.actions())?;
            let best = rep.env.optimal_action();
            let estimate = est.point_estimate()?;
            let (gaps, cumulative) = gap_series(rep.env.true_means(), rep.trace.actions());
            let actions: Vec<usize> = rep.trace.actions().collect();
            let curve = convergence_curve(&actions, k, &[best], checkpoints)?;
            let trace_csv = trace_dir.map(|_| rep.trace.to_csv_string());
            let row = ReplicationRow {
                replication: i + 1,
                seed: derive_seed(plan.seed, i as u64),
                truth: rep.env.truth + 1,
                true_means: rep.env.true_means().to_vec(),
                optimal_action: best + 1,
                point_estimate: estimate + 1,
                correct: estimate == best,
                frequencies: est.frequencies()?,
                optimal_frequency: est.frequency(&[best])?,
                cumulative_regret: checkpoints.iter().map(|&t| cumulative[t - 1]).collect(),
            };
            Ok((row, curve, gaps, cumulative, trace_csv))
        },
        Folded {
            rows: Vec::with_capacity(config.replications),
            curves: Vec::new(),
            gaps: SeriesStats::new(config.horizon),
            cumulative: SeriesStats::new(config.horizon),
        },
        |mut acc, (row, curve, gaps, cumulative, trace_csv)| {
            if let (Some(dir), Some(csv)) = (trace_dir, trace_csv) {
                let path = dir.join(format!("trace_{:05}.csv", row.replication - 1));
                fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
            }
            acc.curves
                .extend(curve.points.iter().map(|p| (row.replication, p.t, p.value)));
            acc.gaps.push(&gaps);
            acc.cumulative.push(&cumulative);
            acc.rows.push(row);
            Ok(acc)
        },
    )?;
    Ok(ExperimentOutcome {
        summary: RunSummary::from_rows(config, folded.rows),
        regret: RegretReport::from_stats(config.horizon, &folded.gaps, &folded.cumulative),
        curves: folded.curves,
    })
}

/// Run the experiment without touching the filesystem.
pub fn summarize(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    execute(config, None)
}

/// Run the experiment and write its output directory (`config.output.dir`).
/// Returns the in-memory outcome as well.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let out = &config.output.dir;
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".ts-observer-staging-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(&parent, e))?;
    let trace_dir = staging.path().join("traces");
    if config.output.write_traces {
        fs::create_dir(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
    }
    let outcome = execute(config, config.output.write_traces.then_some(trace_dir.as_path()))?;

    let (summary_name, summary_body) = match config.output.format {
        OutputFormat::Csv => ("summary.csv", outcome.summary.to_csv()),
        OutputFormat::Json => ("summary.json", outcome.summary.to_json()),
    };
    for (name, body) in [
        (summary_name, summary_body),
        ("regret.csv", outcome.regret_csv()),
        ("curves.csv", outcome.curves_csv()),
    ] {
        let path = staging.path().join(name);
        let mut w = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
        w.write_all(body.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
    }

    // Move into place. Only entries this run produced are replaced.
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for stale in ["summary.csv", "summary.json"] {
        let p = out.join(stale);
        if p.is_file() {
            fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    let old_traces = out.join("traces");
    if old_traces.is_dir() {
        fs::remove_dir_all(&old_traces).map_err(|e| Error::io(&old_traces, e))?;
    }
    let entries = fs::read_dir(staging.path()).map_err(|e| Error::io(staging.path(), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(staging.path(), e))?;
        let dest = out.join(entry.file_name());
        fs::rename(entry.path(), &dest).map_err(|e| Error::io(&dest, e))?;
    }
    Ok(outcome)
}

/// Run `f` on a dedicated pool of `jobs` worker threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Err(Error::invalid("jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::parse_config;

    fn config(text: &str, dir: &Path) -> ExperimentConfig {
        let mut c = parse_config(text).unwrap();
        c.output.dir = dir.to_path_buf();
        c
    }

    #[test]
    fn summary_is_independent_of_thread_count() {
        let c = parse_config("horizon = 200\nreplications = 9\nseed = 5\n").unwrap();
        let one = with_jobs(1, || summarize(&c)).unwrap().unwrap();
        let four = with_jobs(4, || summarize(&c)).unwrap().unwrap();
        assert_eq!(one.summary, four.summary);
        assert_eq!(one.regret_csv(), four.regret_csv());
    }

    #[test]
    fn from_rows_ignores_input_order() {
        let c = parse_config("horizon = 50\nreplications = 5\n").unwrap();
        let s = summarize(&c).unwrap().summary;
        let mut rev = s.rows.clone();
        rev.reverse();
        assert_eq!(RunSummary::from_rows(&c, rev), s);
    }

    #[test]
    fn writes_expected_files() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let c = config("horizon = 30\nreplications = 2\ncheckpoints = 10 30\nformat = json\n", &out);
        let outcome = run_experiment(&c).unwrap();
        for f in ["summary.json", "regret.csv", "curves.csv", "traces/trace_00000.csv", "traces/trace_00001.csv"] {
            assert!(out.join(f).is_file(), "{f}");
        }
        let trace = fs::read_to_string(out.join("traces/trace_00000.csv")).unwrap();
        assert!(trace.starts_with("t,action,reward,p_1,p_2\n"));
        assert_eq!(trace.lines().count(), 31);
        let curves = fs::read_to_string(out.join("curves.csv")).unwrap();
        assert_eq!(curves.lines().count(), 1 + 2 * 2);
        assert_eq!(outcome.summary.rows.len(), 2);
        // Only the output directory is left behind.
        let leftovers: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn failed_run_leaves_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        // Gaussian rewards make a zero-likelihood event impossible, so force a
        // failure through an unsupported policy instead.
        let mut c = config("horizon = 5\n", &out);
        c.policy = crate::policies::PolicyKind::square_step(7, crate::policies::PolicyKind::ThompsonDiscrete);
        assert!(run_experiment(&c).is_err());
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
    }
}
