//! Configuration files, experiment grids, result persistence and analysis.
//!
//! Config files are JSON. A file with a top-level `base` key is a grid;
//! anything else is a single run. Unknown keys are rejected.
//!
//! Results CSV columns, in order:
//!
//! ```text
//! run,algorithm,aggregator,attack,m,delta,byzantine,batch_size,lr0,beta,seed,
//! rounds,budget,final_loss,best_accuracy,final_accuracy,mean_grad_norm,
//! tail_grad_norm,min_grad_norm,mean_agg_error_sq,skipped_rounds,error,wall_time_s
//! ```
//!
//! Reals are written with 17 significant digits; absent values are empty.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregators::AggregatorKind;
use crate::attacks::AttackKind;
use crate::engine::{self, Algorithm, RunConfig};
use crate::error::{Error, Result};

fn default_max_runs() -> usize {
    512
}

/// Axes swept over a base run. An empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub algorithm: Vec<Algorithm>,
    #[serde(default)]
    pub aggregator: Vec<AggregatorKind>,
    #[serde(default)]
    pub attack: Vec<AttackKind>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub batch_size: Vec<usize>,
    #[serde(default)]
    pub lr0: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub base: RunConfig,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default = "default_max_runs")]
    pub max_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigFile {
    Run(RunConfig),
    Grid(GridSpec),
}

/// Parses and validates a run or grid config from JSON text.
pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    let is_grid = value.get("base").is_some();
    // Re-parse from text so that error positions refer to the file.
    if is_grid {
        let grid: GridSpec = serde_json::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        grid.base.validate()?;
        for &d in &grid.sweep.delta {
            if !(0.0..0.5).contains(&d) {
                return Err(Error::Config("delta must be < 0.5".into()));
            }
        }
        let n = grid_size(&grid);
        if n > grid.max_runs {
            return Err(Error::Config(format!("grid has {n} runs, above max_runs = {}", grid.max_runs)));
        }
        Ok(ConfigFile::Grid(grid))
    } else {
        let run: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        run.validate()?;
        Ok(ConfigFile::Run(run))
    }
}

pub fn parse_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn axis_len(n: usize) -> usize {
    n.max(1)
}

pub fn grid_size(grid: &GridSpec) -> usize {
    let s = &grid.sweep;
    [
        s.algorithm.len(),
        s.aggregator.len(),
        s.attack.len(),
        s.delta.len(),
        s.batch_size.len(),
        s.lr0.len(),
        s.seeds.len(),
    ]
    .into_iter()
    .map(axis_len)
    .product()
}

fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

/// Runs of a grid, in a fixed nesting order: algorithm, aggregator, attack,
/// delta, batch size, learning rate, seed (innermost).
pub fn enumerate_runs(grid: &GridSpec) -> Result<Vec<RunConfig>> {
    let n = grid_size(grid);
    if n > grid.max_runs {
        return Err(Error::Config(format!("grid has {n} runs, above max_runs = {}", grid.max_runs)));
    }
    let b = &grid.base;
    let s = &grid.sweep;
    let mut out = Vec::with_capacity(n);
    for &alg in &or_base(&s.algorithm, b.algorithm) {
        for &agg in &or_base(&s.aggregator, b.aggregator.kind) {
            for &atk in &or_base(&s.attack, b.attack.kind) {
                for &delta in &or_base(&s.delta, b.delta) {
                    for &bs in &or_base(&s.batch_size, b.batch_size) {
                        for &lr in &or_base(&s.lr0, b.schedule.initial_lr()) {
                            for &seed in &or_base(&s.seeds, b.seed) {
                                let mut cfg = b.clone();
                                cfg.algorithm = alg;
                                cfg.aggregator.kind = agg;
                                cfg.attack.kind = atk;
                                cfg.delta = delta;
                                cfg.batch_size = bs;
                                cfg.schedule = cfg.schedule.with_initial_lr(lr);
                                cfg.seed = seed;
                                out.push(cfg);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One completed (or failed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run: usize,
    pub algorithm: Algorithm,
    pub aggregator: AggregatorKind,
    pub attack: AttackKind,
    pub m: usize,
    pub delta: f64,
    pub byzantine: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub beta: f64,
    pub seed: u64,
    pub rounds: usize,
    pub budget: f64,
    pub final_loss: Option<f64>,
    pub best_accuracy: Option<f64>,
    pub final_accuracy: Option<f64>,
    pub mean_grad_norm: Option<f64>,
    /// Mean `‖∇F‖` over the last 10% of rounds.
    pub tail_grad_norm: Option<f64>,
    pub min_grad_norm: Option<f64>,
    pub mean_agg_error_sq: Option<f64>,
    pub skipped_rounds: usize,
    pub error: Option<String>,
    pub wall_time_s: f64,
}

pub const CSV_HEADER: &str = "run,algorithm,aggregator,attack,m,delta,byzantine,batch_size,lr0,beta,seed,rounds,budget,final_loss,best_accuracy,final_accuracy,mean_grad_norm,tail_grad_norm,min_grad_norm,mean_agg_error_sq,skipped_rounds,error,wall_time_s";

/// Executes one config and summarizes it. Failures become an error row.
pub fn run_one(index: usize, cfg: &RunConfig) -> ResultRow {
    let start = Instant::now();
    let result = engine::run_training(cfg);
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut row = ResultRow {
        run: index,
        algorithm: cfg.algorithm,
        aggregator: cfg.aggregator.kind,
        attack: cfg.attack.kind,
        m: cfg.m,
        delta: cfg.delta,
        byzantine: cfg.byzantine_count().unwrap_or(0),
        batch_size: cfg.batch_size,
        lr0: cfg.schedule.initial_lr(),
        beta: cfg.beta,
        seed: cfg.seed,
        rounds: 0,
        budget: 0.0,
        final_loss: None,
        best_accuracy: None,
        final_accuracy: None,
        mean_grad_norm: None,
        tail_grad_norm: None,
        min_grad_norm: None,
        mean_agg_error_sq: None,
        skipped_rounds: 0,
        error: None,
        wall_time_s,
    };
    match result {
        Err(e) => row.error = Some(e.to_string()),
        Ok(out) => {
            let recs = &out.records;
            let n = recs.len().max(1);
            let tail = n.div_ceil(10);
            row.rounds = out.rounds;
            row.budget = out.budget;
            row.final_loss = Some(out.final_loss);
            row.best_accuracy = out.best_accuracy();
            row.final_accuracy = out.final_accuracy();
            row.mean_grad_norm = Some(out.mean_grad_norm());
            row.tail_grad_norm = Some(recs[recs.len() - tail.min(recs.len())..].iter().map(|r| r.grad_norm).sum::<f64>() / tail as f64);
            row.min_grad_norm = recs.iter().map(|r| r.grad_norm).reduce(f64::min);
            row.mean_agg_error_sq = Some(recs.iter().map(|r| r.agg_error_sq).sum::<f64>() / n as f64);
            row.skipped_rounds = out.skipped_rounds;
        }
    }
    row
}

/// Runs every grid point on up to `parallelism` threads. Rows come back in
/// enumeration order regardless of scheduling.
pub fn run_grid(grid: &GridSpec, parallelism: usize) -> Result<Vec<ResultRow>> {
    let configs = enumerate_runs(grid)?;
    run_configs(&configs, parallelism)
}

pub fn run_configs(configs: &[RunConfig], parallelism: usize) -> Result<Vec<ResultRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut rows: Vec<ResultRow> =
        pool.install(|| configs.par_iter().enumerate().map(|(i, c)| run_one(i, c)).collect());
    rows.sort_by_key(|r| r.run);
    Ok(rows)
}

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn row_fields(r: &ResultRow) -> Vec<String> {
    vec![
        r.run.to_string(),
        r.algorithm.as_str().to_string(),
        r.aggregator.as_str().to_string(),
        r.attack.as_str().to_string(),
        r.m.to_string(),
        fmt_real(r.delta),
        r.byzantine.to_string(),
        r.batch_size.to_string(),
        fmt_real(r.lr0),
        fmt_real(r.beta),
        r.seed.to_string(),
        r.rounds.to_string(),
        fmt_real(r.budget),
        fmt_opt(r.final_loss),
        fmt_opt(r.best_accuracy),
        fmt_opt(r.final_accuracy),
        fmt_opt(r.mean_grad_norm),
        fmt_opt(r.tail_grad_norm),
        fmt_opt(r.min_grad_norm),
        fmt_opt(r.mean_agg_error_sq),
        r.skipped_rounds.to_string(),
        r.error.clone().unwrap_or_default(),
        fmt_real(r.wall_time_s),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format '{s}' (csv or json)"))),
        }
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record(row_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .ok_or_else(|| Error::Io(format!("missing column {name}")))?
        .parse()
        .map_err(|_| Error::Io(format!("bad value in column {name}: '{}'", &rec[i])))
}

fn parse_opt(rec: &csv::StringRecord, i: usize, name: &str) -> Result<Option<f64>> {
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => parse_field(rec, i, name).map(Some),
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Io("results CSV header does not match the documented schema".into()));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let err = rec.get(21).unwrap_or("");
        rows.push(ResultRow {
            run: parse_field(&rec, 0, "run")?,
            algorithm: parse_field(&rec, 1, "algorithm")?,
            aggregator: parse_field(&rec, 2, "aggregator")?,
            attack: parse_field(&rec, 3, "attack")?,
            m: parse_field(&rec, 4, "m")?,
            delta: parse_field(&rec, 5, "delta")?,
            byzantine: parse_field(&rec, 6, "byzantine")?,
            batch_size: parse_field(&rec, 7, "batch_size")?,
            lr0: parse_field(&rec, 8, "lr0")?,
            beta: parse_field(&rec, 9, "beta")?,
            seed: parse_field(&rec, 10, "seed")?,
            rounds: parse_field(&rec, 11, "rounds")?,
            budget: parse_field(&rec, 12, "budget")?,
            final_loss: parse_opt(&rec, 13, "final_loss")?,
            best_accuracy: parse_opt(&rec, 14, "best_accuracy")?,
            final_accuracy: parse_opt(&rec, 15, "final_accuracy")?,
            mean_grad_norm: parse_opt(&rec, 16, "mean_grad_norm")?,
            tail_grad_norm: parse_opt(&rec, 17, "tail_grad_norm")?,
            min_grad_norm: parse_opt(&rec, 18, "min_grad_norm")?,
            mean_agg_error_sq: parse_opt(&rec, 19, "mean_agg_error_sq")?,
            skipped_rounds: parse_field(&rec, 20, "skipped_rounds")?,
            error: if err.is_empty() { None } else { Some(err.to_string()) },
            wall_time_s: parse_field(&rec, 22, "wall_time_s")?,
        });
    }
    Ok(rows)
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    serde_json::from_reader(input).map_err(|e| Error::Io(e.to_string()))
}

/// Writes `rows` to `path` (or stdout when `None`).
pub fn emit_results(rows: &[ResultRow], format: Format, path: Option<&Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Empty("result rows"));
    }
    match path {
        Some(p) => {
            let f = std::io::BufWriter::new(std::fs::File::create(p)?);
            match format {
                Format::Csv => write_csv(rows, f),
                Format::Json => write_json(rows, f),
            }
        }
        None => {
            let stdout = std::io::stdout();
            match format {
                Format::Csv => write_csv(rows, stdout.lock()),
                Format::Json => write_json(rows, stdout.lock()),
            }
        }
    }
}

/// Schema of the JSON results array, for external validation.
pub fn json_schema() -> serde_json::Value {
    let num = serde_json::json!({"type": "number"});
    let opt_num = serde_json::json!({"type": ["number", "null"]});
    let int = serde_json::json!({"type": "integer", "minimum": 0});
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "array",
        "items": {
            "type": "object",
            "additionalProperties": false,
            "required": CSV_HEADER.split(',').collect::<Vec<_>>(),
            "properties": {
                "run": int, "algorithm": {"enum": ["byzsgdm", "byzsgdnm"]},
                "aggregator": {"enum": ["mean", "krum", "geomed", "cm", "cc"]},
                "attack": {"enum": ["none", "bitflip", "alie", "foe", "gauss"]},
                "m": int, "delta": num, "byzantine": int, "batch_size": int, "lr0": num, "beta": num,
                "seed": int, "rounds": int, "budget": num, "final_loss": opt_num, "best_accuracy": opt_num,
                "final_accuracy": opt_num, "mean_grad_norm": opt_num, "tail_grad_norm": opt_num,
                "min_grad_norm": opt_num, "mean_agg_error_sq": opt_num, "skipped_rounds": int,
                "error": {"type": ["string", "null"]}, "wall_time_s": num
            }
        }
    })
}

fn score(r: &ResultRow) -> f64 {
    match (r.error.as_ref(), r.final_accuracy, r.final_loss) {
        (Some(_), _, _) => f64::NEG_INFINITY,
        (None, Some(a), _) => a,
        (None, None, Some(l)) => -l,
        _ => f64::NEG_INFINITY,
    }
}

/// Keeps, for each cell (every identifier except the learning rate), the
/// row with the best final accuracy; the first one wins ties. Without
/// accuracy the lowest final loss is used.
pub fn select_best(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut best: BTreeMap<(Algorithm, AggregatorKind, AttackKind, usize, u64, usize, u64, u64), ResultRow> = BTreeMap::new();
    for r in rows {
        let key = (r.algorithm, r.aggregator, r.attack, r.m, r.delta.to_bits(), r.batch_size, r.beta.to_bits(), r.seed);
        match best.get(&key) {
            Some(b) if score(b) >= score(r) => {}
            _ => {
                best.insert(key, r.clone());
            }
        }
    }
    let mut out: Vec<_> = best.into_values().collect();
    out.sort_by_key(|r| r.run);
    out
}

/// One `(δ, B)` observation for batch-size analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub delta: f64,
    pub batch_size: usize,
    pub accuracy: f64,
}

impl From<&ResultRow> for Option<Cell> {
    fn from(r: &ResultRow) -> Self {
        Some(Cell { delta: r.delta, batch_size: r.batch_size, accuracy: r.final_accuracy? })
    }
}

/// For each δ, the batch size with the highest accuracy (ties go to the
/// smaller batch). Several observations of one cell are reduced to their
/// maximum. Every δ must cover the same batch sizes.
pub fn best_batch_curve(cells: &[Cell]) -> Result<Vec<(f64, usize)>> {
    if cells.is_empty() {
        return Err(Error::Empty("cells"));
    }
    let mut grid: BTreeMap<u64, BTreeMap<usize, f64>> = BTreeMap::new();
    for c in cells {
        let e = grid.entry(c.delta.to_bits()).or_default().entry(c.batch_size).or_insert(f64::NEG_INFINITY);
        *e = e.max(c.accuracy);
    }
    let all_b: std::collections::BTreeSet<usize> = grid.values().flat_map(|m| m.keys().copied()).collect();
    let mut missing = Vec::new();
    for (d, row) in &grid {
        for b in &all_b {
            if !row.contains_key(b) {
                missing.push(format!("(delta={}, B={b})", f64::from_bits(*d)));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::invalid(format!("missing cells: {}", missing.join(", "))));
    }
    let mut out: Vec<(f64, usize)> = grid
        .iter()
        .map(|(d, row)| {
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for (&b, &a) in row {
                if a > best.1 {
                    best = (b, a);
                }
            }
            (f64::from_bits(*d), best.0)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// A transcribed accuracy table entry (reference data, not simulator output).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRow {
    pub table: String,
    pub algorithm: Algorithm,
    pub aggregator: AggregatorKind,
    pub attack: AttackKind,
    pub workers: usize,
    pub batch_size: usize,
    pub delta: f64,
    pub accuracy: f64,
}

pub const FIXTURE_HEADER: &str = "table,algorithm,aggregator,attack,workers,batch_size,delta,accuracy";

pub fn read_fixture<R: Read>(input: R) -> Result<Vec<FixtureRow>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Groups of rows sharing `(table, algorithm, aggregator, attack)`, each
/// reduced to its best-batch curve.
pub type CurveKey = (String, Algorithm, AggregatorKind, AttackKind);

pub fn fixture_curves(rows: &[FixtureRow]) -> Result<BTreeMap<CurveKey, Vec<(f64, usize)>>> {
    let mut groups: BTreeMap<CurveKey, Vec<Cell>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.table.clone(), r.algorithm, r.aggregator, r.attack))
            .or_default()
            .push(Cell { delta: r.delta, batch_size: r.batch_size, accuracy: r.accuracy });
    }
    groups.into_iter().map(|(k, cells)| Ok((k, best_batch_curve(&cells)?))).collect()
}

/// Per `(algorithm, aggregator, attack, seed)` curves over simulator rows,
/// after per-cell best selection over learning rates.
pub fn result_curves(rows: &[ResultRow]) -> Result<BTreeMap<(Algorithm, AggregatorKind, AttackKind, u64), Vec<(f64, usize)>>> {
    let mut groups: BTreeMap<_, Vec<Cell>> = BTreeMap::new();
    for r in select_best(rows) {
        if let Some(c) = Option::<Cell>::from(&r) {
            groups.entry((r.algorithm, r.aggregator, r.attack, r.seed)).or_default().push(c);
        }
    }
    groups.into_iter().map(|(k, cells)| Ok((k, best_batch_curve(&cells)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "task": {"kind": "quadratic", "dim": 3},
        "m": 4, "batch_size": 2, "iterations": 5
    }"#;

    #[test]
    fn minimal_config_gets_defaults_and_round_trips() {
        let cfg = match parse_config_str(MINIMAL).unwrap() {
            ConfigFile::Run(c) => c,
            _ => panic!("expected run"),
        };
        assert_eq!(cfg.beta, 0.9);
        assert_eq!(cfg.aggregator.cc_radius, 0.1);
        assert_eq!(cfg.schedule, engine::Schedule::Cosine { lr0: 0.1 });
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config_str(&text).unwrap(), ConfigFile::Run(cfg));
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = MINIMAL.replace("\"m\": 4", "\"m\": 4, \"delta\": 0.6");
        assert_eq!(parse_config_str(&bad), Err(Error::Config("delta must be < 0.5".into())));
        let unknown = MINIMAL.replace("\"m\": 4", "\"m\": 4, \"colour\": 1");
        let e = parse_config_str(&unknown).unwrap_err().to_string();
        assert!(e.contains("colour") && e.contains("line"), "{e}");
        let broken = "{\n \"task\": \n";
        assert!(parse_config_str(broken).unwrap_err().to_string().contains("line"));
    }

    #[test]
    fn grid_enumeration_order() {
        let text = format!(
            r#"{{"base": {MINIMAL}, "sweep": {{"batch_size": [8, 16, 32], "delta": [0, 0.125, 0.375], "attack": ["alie"]}}}}"#
        );
        let grid = match parse_config_str(&text).unwrap() {
            ConfigFile::Grid(g) => g,
            _ => panic!("expected grid"),
        };
        let runs = enumerate_runs(&grid).unwrap();
        assert_eq!(runs.len(), 9);
        let order: Vec<_> = runs.iter().map(|r| (r.delta, r.batch_size)).collect();
        assert_eq!(order[0], (0.0, 8));
        assert_eq!(order[1], (0.0, 16));
        assert_eq!(order[3], (0.125, 8));
        let empty = GridSpec { sweep: Sweep::default(), ..grid.clone() };
        assert_eq!(enumerate_runs(&empty).unwrap(), vec![grid.base.clone()]);
        let capped = GridSpec { max_runs: 4, ..grid };
        assert!(enumerate_runs(&capped).is_err());
    }

    fn row(delta: f64, b: usize, acc: f64) -> ResultRow {
        ResultRow {
            run: 0,
            algorithm: Algorithm::Byzsgdm,
            aggregator: AggregatorKind::Cc,
            attack: AttackKind::Alie,
            m: 8,
            delta,
            byzantine: 0,
            batch_size: b,
            lr0: 0.1,
            beta: 0.9,
            seed: 1,
            rounds: 10,
            budget: 1.0,
            final_loss: Some(0.25),
            best_accuracy: Some(acc),
            final_accuracy: Some(acc),
            mean_grad_norm: Some(1.0 / 3.0),
            tail_grad_norm: Some(0.1),
            min_grad_norm: Some(std::f64::consts::PI),
            mean_agg_error_sq: Some(1e-300),
            skipped_rounds: 0,
            error: Some("round 3: bad, \"quoted\"".into()),
            wall_time_s: 0.5,
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let rows = vec![row(0.0, 8, 0.9), row(0.375, 16, 0.123_456_789_012_345_67)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
        let mut js = Vec::new();
        write_json(&rows, &mut js).unwrap();
        assert_eq!(read_json(&js[..]).unwrap(), rows);
        let value: serde_json::Value = serde_json::from_slice(&js).unwrap();
        let schema = json_schema();
        let required: Vec<&str> = schema["items"]["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        for item in value.as_array().unwrap() {
            let obj = item.as_object().unwrap();
            assert_eq!(obj.len(), required.len());
            for key in &required {
                assert!(obj.contains_key(*key), "{key}");
            }
        }
    }

    #[test]
    fn curve_rules() {
        let cells = [
            Cell { delta: 0.0, batch_size: 8, accuracy: 0.9 },
            Cell { delta: 0.0, batch_size: 16, accuracy: 0.8 },
            Cell { delta: 0.375, batch_size: 8, accuracy: 0.5 },
            Cell { delta: 0.375, batch_size: 16, accuracy: 0.7 },
        ];
        assert_eq!(best_batch_curve(&cells).unwrap(), vec![(0.0, 8), (0.375, 16)]);
        let flat = [
            Cell { delta: 0.0, batch_size: 32, accuracy: 0.5 },
            Cell { delta: 0.0, batch_size: 8, accuracy: 0.5 },
        ];
        assert_eq!(best_batch_curve(&flat).unwrap(), vec![(0.0, 8)]);
        assert!(best_batch_curve(&cells[..3]).is_err());
    }

    #[test]
    fn best_selector_picks_max_accuracy_per_cell() {
        let mut a = row(0.0, 8, 0.7);
        a.best_accuracy = Some(0.95);
        a.lr0 = 0.1;
        a.error = None;
        let mut b = row(0.0, 8, 0.9);
        b.lr0 = 0.5;
        b.run = 1;
        b.error = None;
        let mut c = row(0.0, 16, 0.6);
        c.run = 2;
        c.error = None;
        let best = select_best(&[a, b.clone(), c.clone()]);
        assert_eq!(best, vec![b, c]);
    }
}
