//! Figure and table sweeps over disorder ensembles.
//!
//! Every command starts from one or more preset panels. A user JSON document
//! is deep-merged into each preset, command-line overrides are applied on
//! top, and the resolved plan is echoed into the output header. Feeding that
//! header back as the config replays the same sweep.
//!
//! Config layout (lists expand into a Cartesian sweep over `L × J × t_a ×
//! steering`):
//!
//! ```json
//! {
//!   "model": {"L": [8, 10], "J": 0.1, "W": 1.0, "h0": 10.0, "boundary": "ring"},
//!   "protocol": {"t_a": [1, 10], "steering": ["none", "single"], "schedule": "cos-sin"},
//!   "ensemble": {"n_realizations": 10000, "master_seed": 0},
//!   "integrator": {"rtol": 1e-8, "atol": 1e-10, "max_step": null},
//!   "output": {"path": "fig2.csv", "format": "csv"}
//! }
//! ```

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ensemble::{run_ensemble, EnsembleResult, EnsembleSpec, RealizationRecord};
use crate::error::Error;
use crate::evolution::{IntegratorConfig, Method};
use crate::model::{Boundary, DEFAULT_H0, DEFAULT_W};
use crate::schedule::Schedule;
use crate::steering::SteeringMode;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Realization count used by `--quick`.
pub const QUICK_REALIZATIONS: usize = 200;
/// Largest chain used by `--quick`.
pub const QUICK_MAX_SPINS: usize = 8;
/// Largest chain for level-resolved output.
pub const MAX_LEVEL_SPINS: usize = 14;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("integration failed at {point}: {source}")]
    Integration { point: String, source: Error },
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, ExperimentError>;

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Fig1,
    Fig2,
    Fig3,
    Grid,
    Cluster,
    Run,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Fig1,
        Command::Fig2,
        Command::Fig3,
        Command::Grid,
        Command::Cluster,
        Command::Run,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Grid => "grid",
            Self::Cluster => "cluster",
            Self::Run => "run",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| config_err(format!("unknown command '{s}'")))
    }
}

/// A scalar or a list of sweep values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "L")]
    pub n_spins: OneOrMany<usize>,
    #[serde(rename = "J")]
    pub coupling: OneOrMany<f64>,
    #[serde(rename = "W", default = "default_w")]
    pub disorder_width: f64,
    #[serde(default = "default_h0")]
    pub h0: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_w() -> f64 {
    DEFAULT_W
}

fn default_h0() -> f64 {
    DEFAULT_H0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolBlock {
    pub t_a: OneOrMany<f64>,
    pub steering: OneOrMany<SteeringMode>,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub cap_steering: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_realizations() -> usize {
    10_000
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        Self {
            n_realizations: default_realizations(),
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Ndjson,
}

impl FromStr for OutputFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "ndjson" => Ok(Self::Ndjson),
            other => Err(config_err(format!("unknown output format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub protocol: ProtocolBlock,
    #[serde(default)]
    pub ensemble: EnsembleBlock,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub name: String,
    pub config: ExperimentConfig,
}

/// Fully resolved sweep: what the header records and what a replay reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub command: Command,
    pub panels: Vec<Panel>,
}

/// Command-line adjustments applied after the config merge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub steering: Option<Vec<SteeringMode>>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step: Option<f64>,
    pub method: Option<Method>,
    pub schedule: Option<Schedule>,
    pub cap_steering: Option<f64>,
    pub format: Option<OutputFormat>,
    pub quick: bool,
    pub panels: Option<Vec<String>>,
}

/// `10^lo .. 10^hi` with `per_decade` points per decade.
pub fn log_space(lo: i32, hi: i32, per_decade: u32) -> Vec<f64> {
    let steps = (hi - lo) * per_decade as i32;
    (0..=steps)
        .map(|k| {
            if k % per_decade as i32 == 0 {
                10f64.powi(lo + k / per_decade as i32)
            } else {
                10f64.powf(lo as f64 + k as f64 / per_decade as f64)
            }
        })
        .collect()
}

fn preset_panels(command: Command) -> Vec<(&'static str, Value)> {
    let ta_axis = log_space(-1, 3, 2);
    let j_axis = log_space(-2, 1, 3);
    let sizes = json!([8, 10, 12]);
    let base = |model: Value, protocol: Value| json!({"model": model, "protocol": protocol});
    match command {
        Command::Fig1 => vec![
            (
                "a",
                base(
                    json!({"L": 1, "J": 0.1, "boundary": "open-chain"}),
                    json!({"t_a": log_space(-1, 3, 3), "steering": ["none", "single"]}),
                ),
            ),
            (
                "b",
                base(
                    json!({"L": 3, "J": 0.1, "boundary": "open-chain"}),
                    json!({"t_a": log_space(-1, 3, 3), "steering": ["none", "single", "exact"]}),
                ),
            ),
        ],
        Command::Fig2 => vec![
            (
                "a",
                base(
                    json!({"L": sizes, "J": 0.1}),
                    json!({"t_a": ta_axis, "steering": ["none", "single"]}),
                ),
            ),
            (
                "b",
                base(json!({"L": sizes, "J": j_axis}), json!({"t_a": 1.0, "steering": ["none", "single"]})),
            ),
            (
                "c",
                base(json!({"L": sizes, "J": j_axis}), json!({"t_a": 100.0, "steering": ["none", "single"]})),
            ),
        ],
        Command::Fig3 => vec![(
            "a",
            base(json!({"L": sizes, "J": 0.3}), json!({"t_a": 1.0, "steering": ["none", "single"]})),
        )],
        Command::Grid => vec![(
            "a",
            base(
                json!({"L": 12, "J": log_space(-2, 1, 2)}),
                json!({"t_a": ta_axis, "steering": ["none", "single"]}),
            ),
        )],
        Command::Cluster => vec![(
            "a",
            base(
                json!({"L": 12, "J": j_axis}),
                json!({"t_a": 128.0, "steering": ["none", "single", "cluster"]}),
            ),
        )],
        Command::Run => vec![(
            "a",
            base(json!({"L": 8, "J": 0.1}), json!({"t_a": 1.0, "steering": ["single"]})),
        )],
    }
}

/// Objects merge key by key; everything else is replaced.
fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

fn decode<T: serde::de::DeserializeOwned>(value: Value, context: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        config_err(format!("{context}: field '{path}': {}", e.inner()))
    })
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        config_err(format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column()))
    })
}

const HEADER_CONFIG: &str = "# config: ";

/// Accepts a config document, a resolved plan, or a previous output file
/// whose header carries the plan.
pub fn parse_config_text(text: &str) -> Result<Value> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('#') {
        let line = trimmed
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix(HEADER_CONFIG))
            .ok_or_else(|| config_err("output header has no config line"))?;
        return parse_json(line);
    }
    // NDJSON output: the first line is a header object naming the program
    if let Some(first) = trimmed.lines().next() {
        if let Ok(Value::Object(head)) = serde_json::from_str::<Value>(first) {
            if head.contains_key("steerqaa") {
                return head
                    .get("config")
                    .cloned()
                    .ok_or_else(|| config_err("NDJSON header has no config"));
            }
        }
    }
    parse_json(text)
}

/// Resolves presets, the optional user document and the overrides into a
/// validated plan.
pub fn plan(command: Command, user: Option<&Value>, ov: &Overrides) -> Result<Plan> {
    let mut plan = match user {
        Some(doc) if doc.get("panels").is_some() => {
            let p: Plan = decode(doc.clone(), "plan")?;
            if p.command != command {
                return Err(config_err(format!(
                    "config was recorded for '{}', not '{command}'",
                    p.command
                )));
            }
            p
        }
        _ => {
            let panels = preset_panels(command)
                .into_iter()
                .map(|(name, mut value)| {
                    if let Some(doc) = user {
                        merge(&mut value, doc);
                    }
                    Ok(Panel {
                        name: name.to_string(),
                        config: decode(value, &format!("panel {name}"))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Plan { command, panels }
        }
    };

    if let Some(wanted) = &ov.panels {
        for w in wanted {
            if !plan.panels.iter().any(|p| &p.name == w) {
                let known: Vec<&str> = plan.panels.iter().map(|p| p.name.as_str()).collect();
                return Err(config_err(format!("unknown panel '{w}' (have {})", known.join(", "))));
            }
        }
        plan.panels.retain(|p| wanted.contains(&p.name));
    }
    for panel in &mut plan.panels {
        apply_overrides(&mut panel.config, ov);
    }
    validate_plan(&plan)?;
    Ok(plan)
}

fn apply_overrides(cfg: &mut ExperimentConfig, ov: &Overrides) {
    if let Some(s) = ov.seed {
        cfg.ensemble.master_seed = s;
    }
    if let Some(n) = ov.realizations {
        cfg.ensemble.n_realizations = n;
    }
    if let Some(modes) = &ov.steering {
        cfg.protocol.steering = OneOrMany::Many(modes.clone());
    }
    if let Some(v) = ov.rtol {
        cfg.integrator.rtol = v;
    }
    if let Some(v) = ov.atol {
        cfg.integrator.atol = v;
    }
    if let Some(v) = ov.max_step {
        cfg.integrator.max_step = Some(v);
    }
    if let Some(m) = ov.method {
        cfg.integrator.method = m;
    }
    if let Some(s) = ov.schedule {
        cfg.protocol.schedule = s;
    }
    if let Some(c) = ov.cap_steering {
        cfg.protocol.cap_steering = Some(c);
    }
    if let Some(f) = ov.format {
        cfg.output.format = f;
    }
    if ov.quick {
        cfg.ensemble.n_realizations = cfg.ensemble.n_realizations.min(QUICK_REALIZATIONS);
        let mut sizes: Vec<usize> = Vec::new();
        for l in cfg.model.n_spins.values() {
            let l = l.min(QUICK_MAX_SPINS);
            if !sizes.contains(&l) {
                sizes.push(l);
            }
        }
        cfg.model.n_spins = OneOrMany::Many(sizes);
    }
}

fn validate_plan(plan: &Plan) -> Result<()> {
    if plan.panels.is_empty() {
        return Err(config_err("no panels selected"));
    }
    let format = plan.panels[0].config.output.format;
    for panel in &plan.panels {
        let ctx = |m: String| config_err(format!("panel {}: {m}", panel.name));
        let cfg = &panel.config;
        if cfg.output.format != format {
            return Err(ctx("all panels must share one output format".into()));
        }
        cfg.integrator
            .validate()
            .map_err(|e| ctx(format!("integrator: {e}")))?;
        let (sizes, couplings, times, modes) = axes(cfg);
        for (name, empty) in [
            ("model.L", sizes.is_empty()),
            ("model.J", couplings.is_empty()),
            ("protocol.t_a", times.is_empty()),
            ("protocol.steering", modes.is_empty()),
        ] {
            if empty {
                return Err(ctx(format!("{name} is an empty list")));
            }
        }
        if plan.command == Command::Fig3 {
            if let Some(&l) = sizes.iter().find(|&&l| l > MAX_LEVEL_SPINS) {
                return Err(ctx(format!(
                    "model.L = {l} exceeds {MAX_LEVEL_SPINS} for level-resolved output"
                )));
            }
        }
        for point in sweep(cfg, plan.command) {
            point
                .spec
                .validate()
                .map_err(|e| ctx(format!("{}: {e}", point.label(&panel.name))))?;
        }
    }
    Ok(())
}

fn axes(cfg: &ExperimentConfig) -> (Vec<usize>, Vec<f64>, Vec<f64>, Vec<SteeringMode>) {
    (
        cfg.model.n_spins.values(),
        cfg.model.coupling.values(),
        cfg.protocol.t_a.values(),
        cfg.protocol.steering.values(),
    )
}

struct Point {
    spec: EnsembleSpec,
}

impl Point {
    fn label(&self, panel: &str) -> String {
        let s = &self.spec;
        format!(
            "panel {panel} L={} J={} t_a={} mode={}",
            s.n_spins, s.coupling, s.t_a, s.mode
        )
    }
}

/// Sweep points in `L, J, t_a, mode` nesting order.
fn sweep(cfg: &ExperimentConfig, command: Command) -> Vec<Point> {
    let (sizes, couplings, times, modes) = axes(cfg);
    let mut out = Vec::new();
    for &l in &sizes {
        for &j in &couplings {
            for &t_a in &times {
                for &mode in &modes {
                    out.push(Point {
                        spec: EnsembleSpec {
                            n_spins: l,
                            coupling: j,
                            disorder_width: cfg.model.disorder_width,
                            h0: cfg.model.h0,
                            boundary: cfg.model.boundary,
                            n_realizations: cfg.ensemble.n_realizations,
                            master_seed: cfg.ensemble.master_seed,
                            t_a,
                            mode,
                            schedule: cfg.protocol.schedule,
                            compute_levels: command == Command::Fig3,
                            steering_cap: cfg.protocol.cap_steering,
                            flip_fields: false,
                        },
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // shortest representation that parses back to the same value
            Cell::Float(v) => write!(f, "{v:?}"),
            Cell::Text(v) => f.write_str(v),
            Cell::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl From<&Cell> for Value {
    fn from(c: &Cell) -> Value {
        match c {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(v) => json!(v),
            Cell::Bool(v) => json!(v),
        }
    }
}

fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

/// Results of one command, ready to be written.
#[derive(Debug, Clone)]
pub struct Report {
    pub plan: Plan,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Per-realization records, one block per ensemble in sweep order.
    pub audit: Vec<RealizationRecord>,
}

impl Report {
    pub fn format(&self) -> OutputFormat {
        self.plan.panels[0].config.output.format
    }

    pub fn output_path(&self) -> Option<&PathBuf> {
        self.plan.panels[0].config.output.path.as_ref()
    }

    /// Writes the header and rows. `created_unix` is the only field that
    /// differs between replays.
    pub fn write<W: Write>(&self, mut out: W, created_unix: u64) -> std::io::Result<()> {
        let plan = serde_json::to_string(&self.plan).expect("plan serializes");
        match self.format() {
            OutputFormat::Csv => {
                writeln!(out, "# steerqaa {VERSION}")?;
                writeln!(out, "# command: {}", self.plan.command)?;
                writeln!(out, "# created_unix: {created_unix}")?;
                writeln!(out, "{HEADER_CONFIG}{plan}")?;
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                    writeln!(out, "{}", line.join(","))?;
                }
            }
            OutputFormat::Ndjson => {
                let header = json!({
                    "steerqaa": VERSION,
                    "command": self.plan.command,
                    "created_unix": created_unix,
                    "config": self.plan,
                });
                writeln!(out, "{header}")?;
                for row in &self.rows {
                    let obj: serde_json::Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.to_string(), Value::from(c)))
                        .collect();
                    writeln!(out, "{}", Value::Object(obj))?;
                }
            }
        }
        Ok(())
    }
}

fn columns(command: Command) -> Vec<&'static str> {
    match command {
        Command::Fig1 => vec!["panel", "t_a", "mode", "L", "J", "mean_P1", "stderr_P1", "n_realizations"],
        Command::Fig2 | Command::Cluster | Command::Run => vec![
            "panel",
            "t_a",
            "mode",
            "L",
            "J",
            "mean_P1",
            "stderr_P1",
            "mean_naive_success",
            "stderr_naive_success",
            "n_realizations",
        ],
        Command::Fig3 => vec!["panel", "L", "J", "t_a", "mode", "n", "mean_Pn", "S_N", "n_realizations"],
        Command::Grid => vec![
            "panel",
            "L",
            "J",
            "t_a",
            "mode",
            "mean_infidelity",
            "stderr_infidelity",
            "single_best",
            "n_realizations",
        ],
    }
}

/// Runs every sweep point of `plan` on the current rayon pool.
pub fn execute(plan: &Plan, progress: &mut dyn FnMut(&str)) -> Result<Report> {
    let command = plan.command;
    let mut rows = Vec::new();
    let mut audit = Vec::new();
    for panel in &plan.panels {
        let cfg = &panel.config;
        let n_modes = cfg.protocol.steering.values().len();
        let points = sweep(cfg, command);
        // consecutive groups share (L, J, t_a) and differ only in mode
        for group in points.chunks(n_modes) {
            let mut results = Vec::with_capacity(group.len());
            for point in group {
                let label = point.label(&panel.name);
                let r = run_ensemble(&point.spec, &cfg.integrator).map_err(|source| {
                    ExperimentError::Integration {
                        point: label.clone(),
                        source,
                    }
                })?;
                progress(&format!(
                    "[{command}] {label}: mean_P1 = {:.6} ± {:.6} (n = {})",
                    r.mean_p1, r.stderr_p1, r.n_realizations
                ));
                audit.extend(r.records.iter().cloned());
                results.push((point.spec.mode, r));
            }
            emit_rows(command, &panel.name, &group[0].spec, &results, &mut rows);
        }
    }
    Ok(Report {
        plan: plan.clone(),
        columns: columns(command),
        rows,
        audit,
    })
}

fn emit_rows(
    command: Command,
    panel: &str,
    spec: &EnsembleSpec,
    results: &[(SteeringMode, EnsembleResult)],
    rows: &mut Vec<Vec<Cell>>,
) {
    let l = Cell::Int(spec.n_spins as u64);
    let j = Cell::Float(spec.coupling);
    let t_a = Cell::Float(spec.t_a);
    let n = Cell::Int(spec.n_realizations as u64);
    match command {
        Command::Fig1 => {
            for (mode, r) in results {
                rows.push(vec![
                    text(panel),
                    t_a.clone(),
                    text(mode.name()),
                    l.clone(),
                    j.clone(),
                    Cell::Float(r.mean_p1),
                    Cell::Float(r.stderr_p1),
                    n.clone(),
                ]);
            }
        }
        Command::Fig2 | Command::Cluster | Command::Run => {
            for (mode, r) in results {
                rows.push(vec![
                    text(panel),
                    t_a.clone(),
                    text(mode.name()),
                    l.clone(),
                    j.clone(),
                    Cell::Float(r.mean_p1),
                    Cell::Float(r.stderr_p1),
                    Cell::Float(r.mean_naive_success),
                    Cell::Float(r.stderr_naive_success),
                    n.clone(),
                ]);
            }
        }
        Command::Fig3 => {
            let mut series: Vec<(&str, &[f64])> = results
                .iter()
                .filter_map(|(mode, r)| Some((mode.name(), r.mean_pn.as_deref()?)))
                .collect();
            // identical instances in every mode, so any run carries the naive levels
            let naive = results.first().and_then(|(_, r)| r.naive_pn.as_deref());
            if let Some(naive) = naive {
                series.push(("naive", naive));
            }
            for (name, pn) in series {
                let mut s = crate::ensemble::CompensatedSum::default();
                for (idx, &p) in pn.iter().enumerate() {
                    s.add(p);
                    rows.push(vec![
                        text(panel),
                        l.clone(),
                        j.clone(),
                        t_a.clone(),
                        text(name),
                        Cell::Int(idx as u64 + 1),
                        Cell::Float(p),
                        Cell::Float(s.value()),
                        n.clone(),
                    ]);
                }
            }
        }
        Command::Grid => {
            let mut entries: Vec<(&str, f64, f64)> = results
                .iter()
                .map(|(mode, r)| (mode.name(), 1.0 - r.mean_p1, r.stderr_p1))
                .collect();
            if let Some((_, r)) = results.first() {
                entries.push(("naive", 1.0 - r.mean_naive_success, r.stderr_naive_success));
            }
            let single_best = entries
                .iter()
                .find(|e| e.0 == "single")
                .is_some_and(|s| entries.iter().filter(|e| e.0 != "single").all(|e| s.1 < e.1));
            for (name, infidelity, se) in entries {
                rows.push(vec![
                    text(panel),
                    l.clone(),
                    j.clone(),
                    t_a.clone(),
                    text(name),
                    Cell::Float(infidelity),
                    Cell::Float(se),
                    Cell::Bool(single_best),
                    n.clone(),
                ]);
            }
        }
    }
}
