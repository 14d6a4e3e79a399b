//! Experiment configuration.
//!
//! The primary format is line oriented: one `key = value` per line, `#`
//! starts a comment, list values are whitespace separated. `means` is repeated
//! once per parameter row. A document whose first non-blank character is `{`
//! is read as JSON with the same keys (`means` as an array of arrays).
//!
//! ```text
//! model        = grid | beta-bernoulli              (default grid)
//! reward       = bernoulli | gaussian               (grid; default bernoulli)
//! sigma        = <positive real>                    (gaussian rewards)
//! prior        = w_1 ... w_M                        (grid; default uniform)
//! means        = f_1 ... f_K                        (grid; one line per parameter;
//!                                                    default: rows 0.9 0.1 / 0.1 0.9)
//! truth        = prior | <parameter, one-based>     (grid; default prior)
//! true_means   = m_1 ... m_K                        (beta-bernoulli; omit to draw
//!                                                    every arm from Beta(1, 1) per replication)
//! arms         = <K>                                (beta-bernoulli; needed without true_means)
//! policy       = thompson-discrete | thompson-beta | uniform | square-step
//!                                                   (default thompson-discrete on a grid,
//!                                                    thompson-beta on beta-bernoulli)
//! inner        = thompson-discrete | thompson-beta | uniform   (square-step)
//! fixed_action = <action, one-based>                (square-step)
//! horizon      = <T ≥ 1>                            (required)
//! replications = <N ≥ 1>                            (default 1)
//! seed         = <u64>                              (default 0)
//! checkpoints  = t_1 ... t_n                        (strictly increasing in 1..=T;
//!                                                    default: powers of ten below T, then T)
//! out          = <directory>                        (default out)
//! format       = csv | json                         (summary encoding; default csv)
//! traces       = true | false                       (write per-replication traces; default true)
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use crate::model::{ModelSpec, ParameterGrid, RewardFamily, TruthMode};
use crate::policies::PolicyKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    /// One-based line of the offending entry; `None` for JSON input or missing keys.
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "`{field}`: ")?;
        }
        write!(f, "{}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: OutputFormat,
    pub write_traces: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub policy: PolicyKind,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub checkpoints: Vec<usize>,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// Powers of ten below `horizon`, then `horizon`.
    pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
        let mut out: Vec<usize> = std::iter::successors(Some(1usize), |&t| t.checked_mul(10))
            .take_while(|&t| t < horizon)
            .collect();
        out.push(horizon);
        out
    }

    /// Re-check the invariants after fields were overridden (for example from
    /// command-line flags). Checkpoints beyond a reduced horizon are dropped.
    pub fn revalidate(&mut self) -> Result<()> {
        let mut errors = Vec::new();
        let err = |field: &str, message: String| ConfigError {
            line: None,
            field: Some(field.into()),
            message,
        };
        if self.horizon == 0 {
            errors.push(err("horizon", "must be at least 1".into()));
        }
        if self.replications == 0 {
            errors.push(err("replications", "must be at least 1".into()));
        }
        self.checkpoints.retain(|&t| t <= self.horizon);
        if self.checkpoints.last() != Some(&self.horizon) {
            self.checkpoints.push(self.horizon);
        }
        if let Err(e) = self.model.validate() {
            errors.push(err("model", e.to_string()));
        }
        let family = match &self.model {
            ModelSpec::Grid { grid, .. } => grid.family(),
            ModelSpec::BetaBernoulli { .. } => RewardFamily::Bernoulli,
        };
        if let Err(e) = self.policy.validate(self.model.num_actions(), family) {
            errors.push(err("policy", e.to_string()));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

struct Entry {
    line: Option<usize>,
    values: Vec<String>,
}

const KEYS: &[&str] = &[
    "model",
    "reward",
    "sigma",
    "prior",
    "means",
    "truth",
    "true_means",
    "arms",
    "policy",
    "inner",
    "fixed_action",
    "horizon",
    "replications",
    "seed",
    "checkpoints",
    "out",
    "format",
    "traces",
];

/// Parse and validate a configuration document. All problems found are
/// reported together.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let entries = if text.trim_start().starts_with('{') {
        tokenize_json(text)?
    } else {
        tokenize_lines(text)?
    };
    build(entries)
}

type Entries = BTreeMap<String, Vec<Entry>>;

fn tokenize_lines(text: &str) -> Result<Entries> {
    let mut entries: Entries = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError {
                line: Some(i + 1),
                field: None,
                message: format!("expected `key = value`, found {line:?}"),
            });
            continue;
        };
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            errors.push(ConfigError {
                line: Some(i + 1),
                field: Some(key),
                message: "unknown key".into(),
            });
            continue;
        }
        if key != "means" && entries.contains_key(&key) {
            errors.push(ConfigError {
                line: Some(i + 1),
                field: Some(key),
                message: "duplicate key".into(),
            });
            continue;
        }
        entries.entry(key).or_default().push(Entry {
            line: Some(i + 1),
            values: value.split_whitespace().map(String::from).collect(),
        });
    }
    if errors.is_empty() {
        Ok(entries)
    } else {
        Err(Error::Config(errors))
    }
}

fn tokenize_json(text: &str) -> Result<Entries> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        Error::Config(vec![ConfigError {
            line: Some(e.line()),
            field: None,
            message: format!("invalid JSON: {e}"),
        }])
    })?;
    let Value::Object(map) = doc else {
        return Err(Error::Config(vec![ConfigError {
            line: None,
            field: None,
            message: "JSON config must be an object".into(),
        }]));
    };
    let mut entries: Entries = BTreeMap::new();
    let mut errors = Vec::new();
    let scalar = |v: &Value| -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            Value::Bool(b) => Some(b.to_string()),
            _ => None,
        }
    };
    for (key, value) in map {
        if !KEYS.contains(&key.as_str()) {
            errors.push(ConfigError {
                line: None,
                field: Some(key),
                message: "unknown key".into(),
            });
            continue;
        }
        let rows: Vec<&Value> = match (&*key, &value) {
            ("means", Value::Array(rows)) => rows.iter().collect(),
            _ => vec![&value],
        };
        for row in rows {
            let values = match row {
                Value::Array(items) => items.iter().map(scalar).collect::<Option<Vec<_>>>(),
                other => scalar(other).map(|s| vec![s]),
            };
            match values {
                Some(values) => entries.entry(key.clone()).or_default().push(Entry { line: None, values }),
                None => errors.push(ConfigError {
                    line: None,
                    field: Some(key.clone()),
                    message: "expected a string, number, boolean or flat array".into(),
                }),
            }
        }
    }
    if errors.is_empty() {
        Ok(entries)
    } else {
        Err(Error::Config(errors))
    }
}

struct Builder {
    entries: Entries,
    errors: Vec<ConfigError>,
}

impl Builder {
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        let line = self.entries.get(key).and_then(|e| e.first()).and_then(|e| e.line);
        self.errors.push(ConfigError {
            line,
            field: Some(key.into()),
            message: message.into(),
        });
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn single(&mut self, key: &str) -> Option<String> {
        let values = self.entries.get(key)?.first()?.values.clone();
        match values.as_slice() {
            [v] => Some(v.clone()),
            _ => {
                self.fail(key, format!("expected exactly one value, found {}", values.len()));
                None
            }
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.single(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(key, format!("cannot parse {raw:?}: {e}"));
                None
            }
        }
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, values: &[String]) -> Option<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let mut out = Vec::with_capacity(values.len());
        for raw in values {
            match raw.parse() {
                Ok(v) => out.push(v),
                Err(e) => {
                    self.fail(key, format!("cannot parse {raw:?}: {e}"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn key_list<T: std::str::FromStr>(&mut self, key: &str) -> Option<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let values = self.entries.get(key)?.first()?.values.clone();
        self.list(key, &values)
    }

    fn one_based(&mut self, key: &str, bound: usize, what: &str) -> Option<usize> {
        let v: usize = self.parsed(key)?;
        if v == 0 || v > bound {
            self.fail(key, format!("{what} {v} out of range 1..={bound}"));
            None
        } else {
            Some(v - 1)
        }
    }

    fn policy_name(&mut self, key: &str, default: PolicyKind, allow_composite: bool) -> Option<PolicyKind> {
        let Some(name) = self.single(key) else {
            return Some(default);
        };
        match name.as_str() {
            "thompson-discrete" => Some(PolicyKind::ThompsonDiscrete),
            "thompson-beta" => Some(PolicyKind::ThompsonBeta),
            "uniform" => Some(PolicyKind::Uniform),
            "square-step" if allow_composite => Some(PolicyKind::SquareStep {
                fixed_action: 0,
                inner: Box::new(default),
            }),
            other => {
                self.fail(key, format!("unknown policy {other:?}"));
                None
            }
        }
    }

    fn model(&mut self) -> Option<ModelSpec> {
        let kind = self.single("model").unwrap_or_else(|| "grid".into());
        match kind.as_str() {
            "grid" => self.grid_model(),
            "beta-bernoulli" => self.beta_model(),
            other => {
                self.fail("model", format!("unknown model {other:?} (expected grid or beta-bernoulli)"));
                None
            }
        }
    }

    fn grid_model(&mut self) -> Option<ModelSpec> {
        for key in ["true_means", "arms"] {
            if self.has(key) {
                self.fail(key, "only valid with model = beta-bernoulli");
            }
        }
        let family = match self.single("reward").as_deref() {
            None | Some("bernoulli") => {
                if self.has("sigma") {
                    self.fail("sigma", "only valid with reward = gaussian");
                }
                RewardFamily::Bernoulli
            }
            Some("gaussian") => match self.parsed::<f64>("sigma") {
                Some(sigma) => RewardFamily::Gaussian { sigma },
                None => {
                    if !self.has("sigma") {
                        self.fail("sigma", "required with reward = gaussian");
                    }
                    return None;
                }
            },
            Some(other) => {
                self.fail("reward", format!("unknown reward family {other:?}"));
                return None;
            }
        };
        let means: Vec<Vec<f64>> = match self.entries.get("means") {
            None => ParameterGrid::default_instance().rows().map(<[f64]>::to_vec).collect(),
            Some(rows) => {
                let rows: Vec<Vec<String>> = rows.iter().map(|r| r.values.clone()).collect();
                let mut out = Vec::new();
                for r in &rows {
                    out.push(self.list("means", r)?);
                }
                out
            }
        };
        let m = means.len();
        let prior = if self.has("prior") {
            self.key_list("prior")?
        } else {
            vec![1.0 / m as f64; m]
        };
        let grid = ParameterGrid::unchecked(prior, means, family);
        let violations = grid.violations();
        if !violations.is_empty() {
            for v in violations {
                let key = match v {
                    crate::model::ModelViolation::NegativePrior { .. }
                    | crate::model::ModelViolation::PriorNotNormalized { .. } => "prior",
                    crate::model::ModelViolation::BadSigma { .. } => "sigma",
                    _ => "means",
                };
                self.fail(key, v.to_string());
            }
            return None;
        }
        let truth = match self.single("truth").as_deref() {
            None | Some("prior") => TruthMode::DrawnFromPrior,
            Some(_) => TruthMode::Fixed(self.one_based("truth", m, "parameter")?),
        };
        Some(ModelSpec::Grid { grid, truth })
    }

    fn beta_model(&mut self) -> Option<ModelSpec> {
        for key in ["reward", "sigma", "prior", "means", "truth"] {
            if self.has(key) {
                self.fail(key, "only valid with model = grid");
            }
        }
        let means: Option<Vec<f64>> = if self.has("true_means") {
            Some(self.key_list("true_means")?)
        } else {
            None
        };
        let arms = match (self.parsed::<usize>("arms"), &means) {
            (Some(k), Some(m)) if k != m.len() => {
                self.fail("arms", format!("{k} arms but {} true means", m.len()));
                return None;
            }
            (Some(k), _) => k,
            (None, Some(m)) => m.len(),
            (None, None) => {
                if !self.has("arms") {
                    self.fail("arms", "required when true_means is omitted");
                }
                return None;
            }
        };
        let spec = ModelSpec::BetaBernoulli { arms, means };
        if let Err(e) = spec.validate() {
            let key = if self.has("true_means") { "true_means" } else { "arms" };
            self.fail(key, e.to_string());
            return None;
        }
        Some(spec)
    }
}

fn build(entries: Entries) -> Result<ExperimentConfig> {
    let mut b = Builder {
        entries,
        errors: Vec::new(),
    };
    let model = b.model();

    let default_policy = match &model {
        Some(ModelSpec::BetaBernoulli { .. }) => PolicyKind::ThompsonBeta,
        _ => PolicyKind::ThompsonDiscrete,
    };
    let mut policy = b.policy_name("policy", default_policy.clone(), true);
    if let Some(PolicyKind::SquareStep { .. }) = policy {
        let inner = b.policy_name("inner", default_policy, false);
        let k = model.as_ref().map_or(usize::MAX, ModelSpec::num_actions);
        let fixed = if b.has("fixed_action") {
            b.one_based("fixed_action", k, "action")
        } else {
            b.fail("fixed_action", "required with policy = square-step");
            None
        };
        policy = match (inner, fixed) {
            (Some(inner), Some(fixed_action)) => Some(PolicyKind::square_step(fixed_action, inner)),
            _ => None,
        };
    } else {
        for key in ["inner", "fixed_action"] {
            if b.has(key) {
                b.fail(key, "only valid with policy = square-step");
            }
        }
    }
    if let (Some(m), Some(p)) = (&model, &policy) {
        let family = match m {
            ModelSpec::Grid { grid, .. } => grid.family(),
            ModelSpec::BetaBernoulli { .. } => RewardFamily::Bernoulli,
        };
        if let Err(e) = p.validate(m.num_actions(), family) {
            b.fail("policy", e.to_string());
        }
        if matches!(m, ModelSpec::BetaBernoulli { .. }) && p.has_exact_posterior() {
            b.fail("policy", "thompson-discrete needs model = grid");
        }
    }

    let horizon = if b.has("horizon") {
        b.parsed::<usize>("horizon")
    } else {
        b.errors.push(ConfigError {
            line: None,
            field: Some("horizon".into()),
            message: "required".into(),
        });
        None
    };
    if horizon == Some(0) {
        b.fail("horizon", "must be at least 1");
    }
    let replications = if b.has("replications") {
        b.parsed::<usize>("replications")
    } else {
        Some(1)
    };
    if replications == Some(0) {
        b.fail("replications", "must be at least 1");
    }
    let seed = if b.has("seed") { b.parsed::<u64>("seed") } else { Some(0) };

    let checkpoints = match (horizon, b.has("checkpoints")) {
        (Some(h), false) => Some(ExperimentConfig::default_checkpoints(h)),
        (h, true) => b.key_list::<usize>("checkpoints").and_then(|c| {
            let bound = h.unwrap_or(usize::MAX);
            if c.is_empty() {
                b.fail("checkpoints", "needs at least one value");
                None
            } else if c[0] == 0 || c.windows(2).any(|w| w[0] >= w[1]) {
                b.fail("checkpoints", "must be positive and strictly increasing");
                None
            } else if let Some(bad) = c.iter().find(|&&t| t > bound) {
                b.fail("checkpoints", format!("checkpoint {bad} exceeds horizon {bound}"));
                None
            } else {
                Some(c)
            }
        }),
        (None, false) => None,
    };

    let dir = b.single("out").map_or_else(|| PathBuf::from("out"), PathBuf::from);
    let format = if b.has("format") {
        b.parsed::<OutputFormat>("format")
    } else {
        Some(OutputFormat::Csv)
    };
    let write_traces = if b.has("traces") { b.parsed::<bool>("traces") } else { Some(true) };

    match (model, policy, horizon, replications, seed, checkpoints, format, write_traces) {
        (Some(model), Some(policy), Some(horizon), Some(replications), Some(seed), Some(checkpoints), Some(format), Some(write_traces))
            if b.errors.is_empty() =>
        {
            Ok(ExperimentConfig {
                model,
                policy,
                horizon,
                replications,
                seed,
                checkpoints,
                output: OutputSpec {
                    dir,
                    format,
                    write_traces,
                },
            })
        }
        _ => {
            if b.errors.is_empty() {
                b.errors.push(ConfigError {
                    line: None,
                    field: None,
                    message: "invalid configuration".into(),
                });
            }
            Err(Error::Config(b.errors))
        }
    }
}
