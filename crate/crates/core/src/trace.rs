//! Action traces and their CSV encoding.
//!
//! The file format is a header `t,action,reward` optionally followed by
//! `p_1,...,p_K`, then one row per step. `t` runs 1..T, `action` is one-based,
//! and floats are written in Rust's shortest round-trip form, so a written
//! trace reads back to an identical value.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Action, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: usize,
    pub action: Action,
    pub reward: f64,
}

/// The history `H_T`: steps `t = 1..T` plus, when the policy holds an exact
/// posterior, the optimal-action distribution after each step's update.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionTrace {
    steps: Vec<Step>,
    snapshots: Option<Vec<Vec<f64>>>,
}

impl ActionTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_snapshots() -> Self {
        Self {
            steps: Vec::new(),
            snapshots: Some(Vec::new()),
        }
    }

    pub fn with_capacity(horizon: usize, snapshots: bool) -> Self {
        Self {
            steps: Vec::with_capacity(horizon),
            snapshots: snapshots.then(|| Vec::with_capacity(horizon)),
        }
    }

    /// Append the next step. `snapshot` must be given exactly when the trace
    /// records snapshots.
    pub fn push(&mut self, action: Action, reward: f64, snapshot: Option<Vec<f64>>) -> Result<()> {
        match (&mut self.snapshots, snapshot) {
            (Some(snaps), Some(p)) => snaps.push(p),
            (None, None) => {}
            _ => return Err(Error::invalid("snapshot presence does not match the trace")),
        }
        let t = self.steps.len() + 1;
        self.steps.push(Step { t, action, reward });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// The action sequence alone: everything an external observer sees.
    pub fn actions(&self) -> impl ExactSizeIterator<Item = Action> + '_ {
        self.steps.iter().map(|s| s.action)
    }

    pub fn snapshots(&self) -> Option<&[Vec<f64>]> {
        self.snapshots.as_deref()
    }

    /// Optimal-action distribution after the final step.
    pub fn terminal_snapshot(&self) -> Option<&[f64]> {
        self.snapshots.as_ref()?.last().map(Vec::as_slice)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let k = self
            .snapshots
            .as_ref()
            .and_then(|s| s.first())
            .map_or(0, Vec::len);
        let mut line = String::from("t,action,reward");
        for i in 1..=k {
            write!(line, ",p_{i}").unwrap();
        }
        writeln!(out, "{line}")?;
        for (i, step) in self.steps.iter().enumerate() {
            line.clear();
            write!(line, "{},{},{}", step.t, step.action + 1, step.reward).unwrap();
            if let Some(snaps) = &self.snapshots {
                for p in &snaps[i] {
                    write!(line, ",{p}").unwrap();
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let bad = |line: usize, message: String| Error::Trace {
            line: line + 1,
            message,
        };
        let io = |e: std::io::Error| Error::io("<trace>", e);

        let (_, header) = lines.next().ok_or_else(|| bad(0, "empty input".into()))?;
        let header = header.map_err(io)?;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.len() < 3 || cols[..3] != ["t", "action", "reward"] {
            return Err(bad(0, format!("unexpected header {header:?}")));
        }
        let k = cols.len() - 3;
        for (i, c) in cols[3..].iter().enumerate() {
            if *c != format!("p_{}", i + 1) {
                return Err(bad(0, format!("unexpected column {c:?}")));
            }
        }

        let mut trace = if k > 0 {
            ActionTrace::with_snapshots()
        } else {
            ActionTrace::new()
        };
        for (n, line) in lines {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != 3 + k {
                return Err(bad(n, format!("expected {} fields, found {}", 3 + k, fields.len())));
            }
            let t: usize = fields[0]
                .parse()
                .map_err(|e| bad(n, format!("bad t {:?}: {e}", fields[0])))?;
            if t != trace.len() + 1 {
                return Err(bad(n, format!("t = {t} but expected {}", trace.len() + 1)));
            }
            let action: usize = fields[1]
                .parse()
                .map_err(|e| bad(n, format!("bad action {:?}: {e}", fields[1])))?;
            if action == 0 {
                return Err(bad(n, "actions are one-based".into()));
            }
            let reward: f64 = fields[2]
                .parse()
                .map_err(|e| bad(n, format!("bad reward {:?}: {e}", fields[2])))?;
            let snapshot = if k > 0 {
                Some(
                    fields[3..]
                        .iter()
                        .map(|f| f.parse::<f64>().map_err(|e| bad(n, format!("bad probability {f:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?,
                )
            } else {
                None
            };
            trace.push(action - 1, reward, snapshot)?;
        }
        Ok(trace)
    }
}
