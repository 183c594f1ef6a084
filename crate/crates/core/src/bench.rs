//! Repetition harness and the efficiency-ratio metric.
//!
//! `gamma = (f_ref / t_ref) / (f_base / t_base)` compares objective per
//! second of a reference solver against a baseline.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model_full::{build_full_model, FullModelParams};
use crate::model_simplified::{bit_count, build_simplified_model, SimplifiedModelParams};
use crate::postprocess::select_best_feasible;
use crate::qubo::{IsingModel, Qubo, VarRegistry};
use crate::solvers::{
    solve_cim_sim, solve_exact, solve_exact_elimination, solve_sa, solve_tabu, CimConfig, ExactConfig, SaConfig,
    SolutionPool, TabuConfig, DEFAULT_MAX_WIDTH, DEFAULT_POOL_SIZE, MAX_EXACT_SIZE,
};

pub fn efficiency_ratio(f_ref: f64, t_ref: f64, f_base: f64, t_base: f64) -> Result<f64> {
    if t_ref == 0.0 || t_base == 0.0 || f_base == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((f_ref / t_ref) / (f_base / t_base))
}

/// One line of a published-style comparison table. `time` is in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub instance: String,
    pub bits: usize,
    pub solver: String,
    pub time: f64,
    pub value: f64,
}

pub const TABLE_HEADER: &str = "instance,bits,solver,time,value";
const TABLE_FIELDS: [&str; 5] = ["instance", "bits", "solver", "time", "value"];

/// Reference measurements: a physical CIM against SA and Tabu for
/// m = 5..10 grids with five cells and five beams.
pub const PUBLISHED_TABLE: &str = include_str!("../data/table1.csv");

pub fn published_table() -> Vec<TableRow> {
    parse_table_csv(PUBLISHED_TABLE.as_bytes()).expect("embedded table is well formed")
}

pub fn parse_table_csv<R: Read>(source: R) -> Result<Vec<TableRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let header_ok = reader.headers().map(|h| h.iter().eq(TABLE_FIELDS)).unwrap_or(false);
    if !header_ok {
        return Err(Error::MissingHeader { expected: TABLE_HEADER });
    }
    let mut rows = Vec::new();
    for row in reader.deserialize::<TableRow>() {
        let row = row.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        if !row.time.is_finite() || !row.value.is_finite() {
            return Err(Error::MalformedRow { line: 0, reason: format!("non-finite time or value for {}", row.instance) });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_table_csv<W: Write>(rows: &[TableRow], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row)?;
    }
    if rows.is_empty() {
        writer.write_record(TABLE_FIELDS)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub instance: String,
    pub baseline: String,
    /// `None` when the baseline objective or a time is zero.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub reference: String,
    pub entries: Vec<RatioEntry>,
    /// Mean over the defined ratios of each baseline.
    pub means: BTreeMap<String, f64>,
}

/// Ratios of `reference` against every other solver on each instance.
pub fn ratio_summary(rows: &[TableRow], reference: &str) -> Result<RatioSummary> {
    let mut entries = Vec::new();
    let mut instances: Vec<&str> = Vec::new();
    for row in rows {
        if !instances.contains(&row.instance.as_str()) {
            instances.push(&row.instance);
        }
    }
    for inst in instances {
        let on = |solver: &str| rows.iter().find(|r| r.instance == inst && r.solver == solver);
        let Some(r) = on(reference) else {
            return Err(Error::InvalidParameter(format!("no `{reference}` row for instance {inst}")));
        };
        for base in rows.iter().filter(|b| b.instance == inst && b.solver != reference) {
            let gamma = match efficiency_ratio(r.value, r.time, base.value, base.time) {
                Ok(g) => Some(g),
                Err(Error::ZeroDenominator) => None,
                Err(e) => return Err(e),
            };
            entries.push(RatioEntry { instance: inst.to_string(), baseline: base.solver.clone(), gamma });
        }
    }
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for e in &entries {
        if let Some(g) = e.gamma {
            let s = sums.entry(e.baseline.clone()).or_default();
            s.0 += g;
            s.1 += 1;
        }
    }
    let means = sums.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect();
    Ok(RatioSummary { reference: reference.to_string(), entries, means })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Full,
    Simplified,
}

#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub name: String,
    pub instance: Instance,
    /// Thresholds used for post-selection; the simplified model reads
    /// `delta1`, `r` and `lambda` from here as well.
    pub params: FullModelParams,
    pub model: ModelKind,
}

/// A solver and its configuration template. Seeds inside the templates are
/// replaced per repetition.
#[derive(Debug, Clone)]
pub enum SolverSpec {
    Exact,
    Sa(Option<SaConfig>),
    Tabu(Option<TabuConfig>),
    Cim(CimConfig),
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Sa(_) => "sa",
            Self::Tabu(_) => "tabu",
            Self::Cim(_) => "cim",
        }
    }

    pub fn solve(&self, qubo: &Qubo, ising: &IsingModel, seed: u64) -> Result<SolutionPool> {
        match self {
            Self::Exact if qubo.size() <= MAX_EXACT_SIZE => solve_exact(qubo, &ExactConfig::default()),
            Self::Exact => solve_exact_elimination(qubo, DEFAULT_MAX_WIDTH),
            Self::Sa(cfg) => {
                let cfg = cfg.map_or_else(|| SaConfig::for_model(qubo, seed), |c| SaConfig { seed, ..c });
                solve_sa(qubo, &cfg)
            }
            Self::Tabu(cfg) => {
                let cfg = cfg.map_or_else(|| TabuConfig::for_model(qubo, seed), |c| TabuConfig { seed, ..c });
                solve_tabu(qubo, &cfg)
            }
            Self::Cim(cfg) => Ok(solve_cim_sim(ising, &CimConfig { seed, ..*cfg })?.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub solver: String,
    pub model: ModelKind,
    /// Variables in the model that was solved.
    pub bits: usize,
    /// Variable count predicted by the published formula (simplified model only).
    pub formula_bits: Option<usize>,
    pub repetitions: usize,
    pub mean_time_seconds: f64,
    pub mean_objective: f64,
    pub best_objective: usize,
    /// Post-selected objective of each repetition; zero when nothing was feasible.
    pub objectives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub master_seed: u64,
    pub rows: Vec<BenchRow>,
    pub ratios: Option<RatioSummary>,
    pub notes: Vec<String>,
}

impl BenchResult {
    pub fn table(&self) -> Vec<TableRow> {
        self.rows
            .iter()
            .map(|r| TableRow {
                instance: r.instance.clone(),
                bits: r.bits,
                solver: r.solver.clone(),
                time: r.mean_time_seconds,
                value: r.mean_objective,
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Seed of repetition `rep` under `master`.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    master.wrapping_add(rep as u64)
}

fn build(bench: &BenchInstance) -> Result<(Qubo, VarRegistry, Option<usize>)> {
    let p = &bench.params;
    match bench.model {
        ModelKind::Full => {
            let (qubo, reg) = build_full_model(&bench.instance, p)?.model.into_parts();
            Ok((qubo, reg, None))
        }
        ModelKind::Simplified => {
            let sp = SimplifiedModelParams { delta1: p.delta1, r: p.r, lambda: p.lambda };
            let (qubo, reg) = build_simplified_model(&bench.instance, &sp)?.model.into_parts();
            let i = &bench.instance;
            Ok((qubo, reg, Some(bit_count(i.grids(), i.beams(), i.cells(), p.r).formula)))
        }
    }
}

/// Runs every solver `repetitions` times on every instance.
///
/// Timing covers solving plus post-selection; model construction is excluded.
/// When `reference` names one of the solvers, efficiency ratios against the
/// others are attached.
pub fn run_benchmark(
    instances: &[BenchInstance],
    solvers: &[SolverSpec],
    repetitions: usize,
    master_seed: u64,
    reference: Option<&str>,
) -> Result<BenchResult> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for bench in instances {
        let (qubo, reg, formula_bits) = build(bench)?;
        let ising = IsingModel::from_qubo(&qubo);
        if let Some(formula) = formula_bits {
            notes.push(format!(
                "{}: published bit-count formula gives {formula}, the built model has {} variables",
                bench.name,
                reg.len()
            ));
        }
        for solver in solvers {
            let mut objectives = Vec::with_capacity(repetitions);
            let mut total_time = 0.0;
            for rep in 0..repetitions {
                let seed = repetition_seed(master_seed, rep);
                let start = Instant::now();
                let pool = solver.solve(&qubo, &ising, seed).map_err(|e| {
                    Error::InvalidParameter(format!("{} on {}: {e}", solver.name(), bench.name))
                })?;
                let best = select_best_feasible(&pool, &reg, &bench.instance, &bench.params, DEFAULT_POOL_SIZE)?;
                total_time += start.elapsed().as_secs_f64();
                objectives.push(best.map_or(0, |s| s.objective));
            }
            rows.push(BenchRow {
                instance: bench.name.clone(),
                solver: solver.name().to_string(),
                model: bench.model,
                bits: reg.len(),
                formula_bits,
                repetitions,
                mean_time_seconds: total_time / repetitions as f64,
                mean_objective: objectives.iter().sum::<usize>() as f64 / repetitions as f64,
                best_objective: objectives.iter().copied().max().unwrap_or(0),
                objectives,
            });
        }
    }
    if formula_bits_present(&rows) {
        notes.push(
            "the published table lists 61, 68, 75, 82, 89, 96 bits for m = 5..10, which no width choice in the \
             published formula reproduces; both the formula value and the true variable count are reported"
                .to_string(),
        );
    }
    let mut result = BenchResult { master_seed, rows, ratios: None, notes };
    if let Some(reference) = reference {
        if result.rows.iter().any(|r| r.solver == reference) {
            result.ratios = Some(ratio_summary(&result.table(), reference)?);
        }
    }
    Ok(result)
}

fn formula_bits_present(rows: &[BenchRow]) -> bool {
    rows.iter().any(|r| r.formula_bits.is_some())
}
