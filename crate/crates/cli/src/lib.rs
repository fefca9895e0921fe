//! Commands behind the `sevalue` binary. Each returns a [`Document`] that renders
//! to JSON or CSV; the binary only parses flags and writes the result.

use std::f64::consts::PI;
use std::path::Path;

use serde_json::{json, Map, Value};
use sevalue_core::io::{read_json, MatrixFile, StateFile};
use sevalue_core::solver::{
    brute_force_bound, solve_extremal, Observable, Partition, SEProblem, SweepOptions,
};
use sevalue_core::states::{
    detection_threshold, dephased_ghz, fig1_state_family, ghz_expectation, GhzFamily, Panel, DEFAULT_N_MAX,
};
use sevalue_core::witness::{
    build_witness, build_witness_for_k, detect, BoundOptions, BoundSource, Witness, WitnessForm, DEFAULT_MARGIN,
};
use sevalue_core::{Statistics, C64};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<sevalue_core::Error> for CliError {
    fn from(e: sevalue_core::Error) -> Self {
        match e {
            sevalue_core::Error::AllStartsFailed(_) => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub seed: u64,
    pub starts: usize,
    /// Residual tolerance of the sweep solver.
    pub tol: f64,
    pub verify: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: 0, starts: 64, tol: SweepOptions::default().tol_residual, verify: false }
    }
}

impl RunConfig {
    fn sweep(&self) -> SweepOptions {
        SweepOptions { tol_residual: self.tol, ..SweepOptions::default() }
    }

    fn bound_options(&self, samples: usize) -> BoundOptions {
        BoundOptions { starts: self.starts, seed: self.seed, samples, sweep: self.sweep() }
    }
}

/// `x` with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

fn round_sig(x: f64) -> Value {
    fmt_sig(x).parse::<f64>().map(Value::from).unwrap_or(Value::Null)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => fmt_sig(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) => round_sig(*x),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Command output: a JSON document and its CSV rendering.
#[derive(Debug, Clone)]
pub struct Document {
    pub json: Value,
    pub table: Table,
}

impl Document {
    fn from_table(kind: &str, table: Table, extra: Map<String, Value>) -> Self {
        let mut obj = Map::new();
        obj.insert("command".into(), Value::from(kind));
        obj.extend(extra);
        obj.insert("rows".into(), table.to_json_rows());
        Self { json: Value::Object(obj), table }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => self.table.to_csv(),
        }
    }
}

pub const FIG1_COLUMNS: [&str; 9] =
    ["d", "panel", "p_star", "g", "dim", "detectable", "bound_source", "g_numeric", "verify_ok"];

/// Noise thresholds of the balanced two-particle family for `d_min..=d_max`.
///
/// One row per `d` and panel (`SR>1`, `SR>2`, `boson`, `fermion`). With `verify`
/// the rank-one panels are re-solved numerically and `verify_ok` records agreement
/// within `1e-8`.
pub fn cmd_fig1(d_min: usize, d_max: usize, cfg: &RunConfig) -> Result<Document> {
    if !(2 <= d_min && d_min <= d_max && d_max <= 8) {
        return Err(CliError::Input(format!("need 2 ≤ d_min ≤ d_max ≤ 8, got {d_min}..{d_max}")));
    }
    let panels = [Panel::SchmidtRank(1), Panel::SchmidtRank(2), Panel::Boson, Panel::Fermion];
    let mut table = Table::new(&FIG1_COLUMNS);
    for d in d_min..=d_max {
        for panel in panels {
            let t = detection_threshold(d, panel)?;
            let numeric = match (cfg.verify, panel) {
                (true, Panel::SchmidtRank(r)) if r > 1 => None,
                (true, _) => {
                    let stats = panel.stats();
                    let psi = fig1_state_family(d, stats)?;
                    let problem = SEProblem::new(Observable::rank_one(&psi, stats), stats, Partition::full(2))?;
                    let res = solve_extremal(&problem, cfg.starts, cfg.seed, &cfg.sweep())?;
                    if res.unconverged {
                        return Err(CliError::Numerical(format!("d = {d}, {panel}: no start converged")));
                    }
                    Some(res.g)
                }
                (false, _) => None,
            };
            table.push(vec![
                d.into(),
                panel.to_string().into(),
                t.p_star.into(),
                t.g.into(),
                t.dim.into(),
                t.detectable().into(),
                "analytic".into(),
                numeric.into(),
                numeric.map(|g| (g - t.g).abs() <= 1e-8).into(),
            ]);
        }
    }
    let mut extra = Map::new();
    extra.insert("d_min".into(), json!(d_min));
    extra.insert("d_max".into(), json!(d_max));
    Ok(Document::from_table("fig1", table, extra))
}

/// Largest `δ ∈ [0, π]` with `2(1 − r²) r sinc δ > level`, by bisection.
pub fn crossing_delta(r: f64, level: f64) -> Result<Option<f64>> {
    let f = |delta: f64| ghz_expectation(r, delta).map(|v| v - level);
    if f(0.0)? <= 0.0 {
        return Ok(None);
    }
    if f(PI)? > 0.0 {
        return Ok(Some(PI));
    }
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(Some(lo))
}

/// Numeric `⟨L⟩` of the dephased GHZ state for each statistics at `N = min(n, 3)`.
fn fig2_numeric(n: usize, r: f64, delta: f64) -> Result<(f64, f64)> {
    let n = n.min(3);
    let mut worst_value = f64::NAN;
    let mut worst_dev: f64 = -1.0;
    let mut tail = 0.0;
    for stats in Statistics::ALL {
        let fam = GhzFamily::new(n, C64::new(r, 0.0), stats, DEFAULT_N_MAX)?;
        tail = fam.tail_bound();
        let obs = Observable::interference(fam.space(), stats)?;
        let value = sevalue_core::witness::expectation(&dephased_ghz(&fam, delta)?, &obs)?;
        let dev = (value - ghz_expectation(r, delta)?).abs();
        if dev > worst_dev {
            worst_dev = dev;
            worst_value = value;
        }
    }
    Ok((worst_value, tail))
}

/// `⟨L⟩(δ)` for the dephased GHZ family with per-`K` verdicts against `(1/2)^{K−1}`.
///
/// Columns: `delta, expectation, k2..k{k_max}, delta_star, bound_source`, then
/// `numeric_expectation, tail_bound` (filled with `verify`). `delta_star` is the
/// largest dephasing that still certifies `K = 2`.
pub fn cmd_fig2(n: usize, r: f64, k_max: usize, delta_steps: usize, cfg: &RunConfig) -> Result<Document> {
    if !(2..=6).contains(&n) {
        return Err(CliError::Input(format!("N = {n} outside 2..=6")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(CliError::Input(format!("r = {r} outside [0, 1)")));
    }
    if !(2..=n).contains(&k_max) {
        return Err(CliError::Input(format!("K_max = {k_max} outside 2..={n}")));
    }
    if delta_steps == 0 {
        return Err(CliError::Input("delta_steps must be positive".into()));
    }
    let mut columns: Vec<String> = vec!["delta".into(), "expectation".into()];
    columns.extend((2..=k_max).map(|k| format!("k{k}")));
    columns.extend(["delta_star", "bound_source", "numeric_expectation", "tail_bound"].map(String::from));
    let mut table = Table { columns, rows: Vec::new() };
    let delta_star = crossing_delta(r, 0.5)?;
    for i in 0..=delta_steps {
        let delta = PI * i as f64 / delta_steps as f64;
        let value = ghz_expectation(r, delta)?;
        let mut row: Vec<Cell> = vec![delta.into(), value.into()];
        for k in 2..=k_max {
            let bound = 0.5f64.powi(k as i32 - 1);
            row.push(if value > bound + DEFAULT_MARGIN { "entangled" } else { "inconclusive" }.into());
        }
        row.push(delta_star.into());
        row.push("analytic".into());
        if cfg.verify {
            let (numeric, tail) = fig2_numeric(n, r, delta)?;
            row.push(numeric.into());
            row.push(tail.into());
        } else {
            row.push(Cell::Empty);
            row.push(Cell::Empty);
        }
        table.push(row);
    }
    let mut extra = Map::new();
    extra.insert("N".into(), json!(n));
    extra.insert("r".into(), round_sig(r));
    extra.insert("k_max".into(), json!(k_max));
    extra.insert("delta_star".into(), delta_star.map_or(Value::Null, round_sig));
    extra.insert("bounds".into(), Value::Array((2..=k_max).map(|k| round_sig(0.5f64.powi(k as i32 - 1))).collect()));
    Ok(Document::from_table("fig2", table, extra))
}

fn resolve_stats(flag: Option<Statistics>, file: Option<Statistics>, what: &str) -> Result<Statistics> {
    match (flag, file) {
        (Some(a), Some(b)) if a != b => {
            Err(CliError::Input(format!("--stats {a} conflicts with statistics '{b}' in the {what} file")))
        }
        (Some(s), _) | (None, Some(s)) => Ok(s),
        (None, None) => Err(CliError::Input(format!("no statistics given (use --stats or set it in the {what} file)"))),
    }
}

fn load_observable(path: &Path) -> Result<(Observable, Option<Statistics>)> {
    let file: MatrixFile =
        read_json(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let obs = file.to_observable().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((obs, file.statistics))
}

/// Which partitions a `sevalue` or `witness` run covers.
#[derive(Debug, Clone)]
pub enum PartitionChoice {
    Fixed(Partition),
    Size(usize),
}

impl PartitionChoice {
    pub fn from_flags(partition: Option<Partition>, k: Option<usize>) -> Result<Self> {
        match (partition, k) {
            (Some(p), Some(k)) if p.k() != k => {
                Err(CliError::Input(format!("partition {p} has {} parts, not K = {k}", p.k())))
            }
            (Some(p), _) => Ok(PartitionChoice::Fixed(p)),
            (None, Some(k)) => Ok(PartitionChoice::Size(k)),
            (None, None) => Err(CliError::Input("give --partition or --k".into())),
        }
    }

    fn partitions(&self, n: usize) -> Result<Vec<Partition>> {
        let out = match self {
            PartitionChoice::Fixed(p) => {
                if p.total() != n {
                    return Err(CliError::Input(format!("partition {p} does not sum to N = {n}")));
                }
                vec![p.clone()]
            }
            PartitionChoice::Size(k) => Partition::all_of_size(n, *k),
        };
        if out.is_empty() {
            return Err(CliError::Input(format!("no partition of N = {n} matches the request")));
        }
        Ok(out)
    }
}

pub const SEVALUE_COLUMNS: [&str; 9] =
    ["partition", "g", "bound_source", "starts", "converged", "hit_fraction", "best_residual", "oracle_bound", "unconverged"];

/// Numeric `sup{g}` for the observable in `observable_file`, per partition.
///
/// The report lists every converged solution with its residual, the sampled
/// oracle bound and the fraction of starts reaching the maximum. `G` is the
/// largest value over the requested partitions.
pub fn cmd_sevalue(
    observable_file: &Path,
    stats: Option<Statistics>,
    choice: &PartitionChoice,
    oracle_samples: usize,
    cfg: &RunConfig,
) -> Result<Document> {
    let (obs, file_stats) = load_observable(observable_file)?;
    let stats = resolve_stats(stats, file_stats, "observable")?;
    let n = obs.space().n();
    let mut table = Table::new(&SEVALUE_COLUMNS);
    let mut details = Vec::new();
    let mut best: Option<f64> = None;
    for partition in choice.partitions(n)? {
        let problem = SEProblem::new(obs.clone(), stats, partition.clone())?;
        let res = solve_extremal(&problem, cfg.starts, cfg.seed, &cfg.sweep())?;
        if res.unconverged {
            return Err(CliError::Numerical(format!(
                "partition {partition}: none of {} starts converged (best g = {})",
                res.starts,
                fmt_sig(res.g)
            )));
        }
        let oracle = (oracle_samples > 0).then(|| brute_force_bound(&problem, oracle_samples, cfg.seed));
        best = Some(best.map_or(res.g, |b: f64| b.max(res.g)));
        table.push(vec![
            partition.to_string().into(),
            res.g.into(),
            "numeric".into(),
            res.starts.into(),
            res.converged.into(),
            res.hit_fraction.into(),
            res.best.residual.into(),
            oracle.into(),
            res.unconverged.into(),
        ]);
        let solutions: Vec<Value> = res
            .solutions
            .iter()
            .map(|s| {
                json!({
                    "g": round_sig(s.g),
                    "residual": round_sig(s.residual),
                    "chi_norm": round_sig(s.chi_norm),
                    "converged": s.converged,
                    "sweeps": s.sweeps,
                })
            })
            .collect();
        details.push(json!({ "partition": partition.to_string(), "solutions": solutions }));
    }
    let g = best.expect("at least one partition");
    let mut extra = Map::new();
    extra.insert("observable".into(), json!(observable_file.display().to_string()));
    extra.insert("statistics".into(), json!(stats.name()));
    extra.insert("d".into(), json!(obs.space().d()));
    extra.insert("N".into(), json!(n));
    extra.insert("G".into(), round_sig(g));
    extra.insert("bound_source".into(), json!("numeric"));
    extra.insert("seed".into(), json!(cfg.seed));
    extra.insert("partitions".into(), Value::Array(details));
    Ok(Document::from_table("sevalue", table, extra))
}

pub const WITNESS_COLUMNS: [&str; 9] =
    ["expectation", "bound", "verdict", "margin", "witness_value", "bound_source", "k", "partition", "statistics"];

fn make_witness(
    obs: &Observable,
    stats: Statistics,
    choice: &PartitionChoice,
    source: Option<BoundSource>,
    cfg: &RunConfig,
) -> Result<Witness> {
    let opts = cfg.bound_options(100_000);
    let build = |source: BoundSource| -> sevalue_core::Result<Witness> {
        match choice {
            PartitionChoice::Fixed(p) => {
                let problem = SEProblem::new(obs.clone(), stats, p.clone())?;
                build_witness(&problem, source, WitnessForm::Upper, &opts)
            }
            PartitionChoice::Size(k) => build_witness_for_k(obs, stats, *k, source, WitnessForm::Upper, &opts),
        }
    };
    match source {
        Some(s) => Ok(build(s)?),
        None => match build(BoundSource::Analytic) {
            Err(sevalue_core::Error::NoAnalyticBound) => Ok(build(BoundSource::Numeric)?),
            other => Ok(other?),
        },
    }
}

/// Evaluates `⟨L⟩` on a state and compares it with the witness bound.
///
/// The verdict is part of the payload; a completed run always succeeds. Without
/// an explicit `source`, the closed form is used where available and the
/// numeric solver otherwise.
pub fn cmd_witness(
    state_file: &Path,
    observable_file: &Path,
    stats: Option<Statistics>,
    choice: &PartitionChoice,
    source: Option<BoundSource>,
    cfg: &RunConfig,
) -> Result<Document> {
    let (obs, obs_stats) = load_observable(observable_file)?;
    let state: StateFile =
        read_json(state_file).map_err(|e| CliError::Input(format!("{}: {e}", state_file.display())))?;
    let file_stats = match (obs_stats, state.statistics()) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Input(format!("observable file says '{a}' but state file says '{b}'")));
        }
        (a, b) => a.or(b),
    };
    let stats = resolve_stats(stats, file_stats, "observable or state")?;
    let rho = state.to_density().map_err(|e| CliError::Input(format!("{}: {e}", state_file.display())))?;
    if rho.space() != obs.space() {
        return Err(CliError::Input(format!(
            "state lives on d = {}, N = {} but the observable on d = {}, N = {}",
            rho.space().d(),
            rho.space().n(),
            obs.space().d(),
            obs.space().n()
        )));
    }
    let n = obs.space().n();
    choice.partitions(n)?;
    let witness = make_witness(&obs, stats, choice, source, cfg)?;
    let verdict = detect(&rho, &witness)?;
    let (k, partition) = match choice {
        PartitionChoice::Fixed(p) => (p.k(), Some(p.to_string())),
        PartitionChoice::Size(k) => (*k, None),
    };
    let mut table = Table::new(&WITNESS_COLUMNS);
    let verdict_name = if verdict.is_entangled() { "entangled" } else { "inconclusive" };
    table.push(vec![
        verdict.expectation.into(),
        verdict.bound.into(),
        verdict_name.into(),
        verdict.margin.into(),
        verdict.witness_value.into(),
        witness.source().to_string().into(),
        k.into(),
        partition.clone().into(),
        stats.name().into(),
    ]);
    let mut extra = Map::new();
    extra.insert("state".into(), json!(state_file.display().to_string()));
    extra.insert("observable".into(), json!(observable_file.display().to_string()));
    extra.insert("verdict".into(), json!(verdict_name));
    extra.insert("expectation".into(), round_sig(verdict.expectation));
    extra.insert("G".into(), round_sig(verdict.bound));
    extra.insert("bound_source".into(), json!(witness.source().to_string()));
    Ok(Document::from_table("witness", table, extra))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.5), "0.500000000000");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(12.0), "12.0000000000");
        assert_eq!(fmt_sig(1e-7), "1.00000000000e-7");
        assert_eq!(fmt_sig(0.0), "0");
    }

    #[test]
    fn crossing_is_a_root() {
        let r = 1.0 / 3f64.sqrt();
        let d = crossing_delta(r, 0.5).unwrap().unwrap();
        assert!((ghz_expectation(r, d).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(crossing_delta(0.1, 0.5).unwrap(), None);
    }

    #[test]
    fn csv_quotes_partitions() {
        let mut t = Table::new(&["partition"]);
        t.push(vec!["(1,2)".into()]);
        assert_eq!(t.to_csv(), "partition\n\"(1,2)\"\n");
    }
}
