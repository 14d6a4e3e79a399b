//! CSV and JSON encodings of the diagnostic reports, one-based throughout.

use serde::Serialize;

use super::config::OutputFormat;
use crate::diagnostics::{CounterexampleReport, EnumerationTree, MartingaleResidualReport, RegretReport};
use crate::Action;

/// `"a:r a:r ..."` with one-based actions; empty for the root.
pub fn history_label(history: &[(Action, u8)]) -> String {
    history
        .iter()
        .map(|(a, r)| format!("{}:{}", a + 1, r))
        .collect::<Vec<_>>()
        .join(" ")
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn p_header(k: usize) -> String {
    (1..=k).map(|a| format!(",p_{a}")).collect()
}

#[derive(Serialize)]
struct HistoryRow {
    depth: usize,
    history: String,
    probability: f64,
    p: Vec<f64>,
}

pub fn render_enumeration(tree: &EnumerationTree, format: OutputFormat) -> String {
    let rows: Vec<HistoryRow> = tree
        .nodes()
        .into_iter()
        .map(|n| HistoryRow {
            depth: n.depth(),
            history: history_label(&n.history),
            probability: n.probability,
            p: n.p_vector.probs.clone(),
        })
        .collect();
    match format {
        OutputFormat::Json => json(&rows),
        OutputFormat::Csv => {
            let mut out = format!("depth,history,probability{}\n", p_header(tree.num_actions));
            for r in rows {
                out.push_str(&format!("{},{},{}", r.depth, r.history, r.probability));
                for p in r.p {
                    out.push_str(&format!(",{p}"));
                }
                out.push('\n');
            }
            out
        }
    }
}

pub fn render_martingale(report: &MartingaleResidualReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct View {
                horizon: usize,
                subsets_checked: usize,
                max_residual: f64,
                max_action_residual: f64,
                max_depth_mass_error: f64,
                nodes: Vec<(String, f64, f64)>,
            }
            json(&View {
                horizon: report.horizon,
                subsets_checked: report.subsets_checked,
                max_residual: report.max_residual,
                max_action_residual: report.max_action_residual,
                max_depth_mass_error: report.max_depth_mass_error,
                nodes: report
                    .nodes
                    .iter()
                    .map(|n| (history_label(&n.history), n.residual, n.action_residual))
                    .collect(),
            })
        }
        OutputFormat::Csv => {
            let mut out = String::from("history,residual,action_residual\n");
            for n in &report.nodes {
                out.push_str(&format!("{},{},{}\n", history_label(&n.history), n.residual, n.action_residual));
            }
            out
        }
    }
}

pub fn render_regret(report: &RegretReport, checkpoints: &[usize], format: OutputFormat) -> crate::Result<String> {
    let rows = report.checkpoints(checkpoints)?;
    Ok(match format {
        OutputFormat::Json => json(&rows),
        OutputFormat::Csv => {
            let mut out = String::from("t,cumulative,cumulative_se,per_t,per_sqrt_t\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.t, r.cumulative, r.cumulative_se, r.per_t, r.per_sqrt_t
                ));
            }
            out
        }
    })
}

pub fn render_counterexample(report: &CounterexampleReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut view = serde_json::to_value(report).expect("report serializes");
            view["fixed_action"] = (report.fixed_action + 1).into();
            json(&view)
        }
        OutputFormat::Csv => {
            let mut out =
                String::from("t,regret_per_t,regret_per_t_se,mean_fixed_count,fixed_frequency,forced_plays\n");
            for c in &report.checkpoints {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.t, c.regret_per_t, c.regret_per_t_se, c.mean_fixed_count, c.fixed_frequency, c.forced_plays
                ));
            }
            out
        }
    }
}
