//! `mbs`: command line front end for the beam-selection toolkit.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 no feasible solution,
//! 3 internal error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbs_core::bench::{
    efficiency_ratio, parse_table_csv, published_table, ratio_summary, run_benchmark, write_table_csv, BenchInstance,
    BenchResult, ModelKind, SolverSpec,
};
use mbs_core::instance::{build_instance, generate_synthetic, parse_records, Instance, Scaling, ScalingParams, SyntheticSpec};
use mbs_core::model_full::{build_full_model, decode_full, FullModelParams};
use mbs_core::model_simplified::{build_simplified_model, decode_simplified, SimplifiedModelParams};
use mbs_core::postprocess::select_best_feasible;
use mbs_core::qubo::{Qubo, VarRegistry};
use mbs_core::solvers::{top_k, CimConfig, SolutionPool};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mbs", version, about = "MIMO beam selection as QUBO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic instance and write it as JSON.
    Generate(GenerateArgs),
    /// Read RSRP records (CSV) and write the instance as JSON.
    Import(ImportArgs),
    /// Build a QUBO and write it in the text format.
    Build(BuildArgs),
    /// Solve a model and post-select the best feasible beam set.
    Solve(SolveArgs),
    /// Repeat solvers over instances and report means and ratios.
    Bench(BenchArgs),
    /// Efficiency ratios from a report, a table or literal values.
    Ratio(RatioArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    grids: usize,
    #[arg(long)]
    cells: usize,
    #[arg(long)]
    beams: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scaled RSRP range as `lo,hi`.
    #[arg(long, value_parser = parse_pair, default_value = "0,100")]
    rsrp_range: (u32, u32),
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImportArgs {
    records: PathBuf,
    /// dBm added before scaling; derived from the data when omitted.
    #[arg(long, requires = "scale")]
    offset: Option<f64>,
    #[arg(long, requires = "offset")]
    scale: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Full,
    Simplified,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Simplified)]
    model: ModelArg,
    /// Coverage threshold in dBm.
    #[arg(long, allow_hyphen_values = true)]
    delta1_dbm: f64,
    /// Interference gap in dB.
    #[arg(long, default_value_t = 0.0)]
    delta2_dbm: f64,
    #[arg(long = "max-beams", default_value_t = 2)]
    r: usize,
    /// Penalty weight; `m + 1` when omitted.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Sa,
    Tabu,
    Cim,
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CimPreset {
    /// Error-corrected feedback with a constant pump.
    Controlled,
    /// Plain update with a linear pump ramp.
    Plain,
}

impl CimPreset {
    fn config(self) -> CimConfig {
        match self {
            Self::Controlled => CimConfig::amplitude_controlled(0),
            Self::Plain => CimConfig::default(),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON; decodes and post-selects the result.
    #[arg(long, required_unless_present = "qubo", conflicts_with = "qubo")]
    instance: Option<PathBuf>,
    /// Raw QUBO text; reports the pool without decoding.
    #[arg(long)]
    qubo: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    delta1_dbm: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    delta2_dbm: f64,
    #[arg(long, value_enum, default_value_t = ModelArg::Simplified)]
    model: ModelArg,
    #[arg(long = "max-beams", default_value_t = 2)]
    r: usize,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    solver: SolverArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pool entries considered by post-selection.
    #[arg(long, default_value_t = 100)]
    top_k: usize,
    #[arg(long, value_enum, default_value_t = CimPreset::Controlled)]
    cim_preset: CimPreset,
    /// Write the CIM trajectory CSV here.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long = "instance", required = true)]
    instances: Vec<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SolverArg::Cim, SolverArg::Sa, SolverArg::Tabu])]
    solvers: Vec<SolverArg>,
    #[arg(long, default_value_t = 100)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver the others are compared against.
    #[arg(long, default_value = "cim")]
    reference: String,
    #[arg(long, value_enum, default_value_t = CimPreset::Controlled)]
    cim_preset: CimPreset,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct RatioSource {
    /// Bench report JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// CSV table with columns instance,bits,solver,time,value.
    #[arg(long)]
    table: Option<PathBuf>,
    /// The bundled published table.
    #[arg(long)]
    published: bool,
    /// `f_ref t_ref f_base t_base`.
    #[arg(long, num_args = 4, value_names = ["F_REF", "T_REF", "F_BASE", "T_BASE"])]
    values: Option<Vec<f64>>,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    source: RatioSource,
    #[arg(long, default_value = "cim")]
    reference: String,
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

enum Failure {
    Usage(String),
    NoSolution(String),
    Internal(String),
}

impl From<mbs_core::Error> for Failure {
    fn from(e: mbs_core::Error) -> Self {
        use mbs_core::Error::*;
        match e {
            MissingHeader { .. } | MalformedRow { .. } | DuplicateRecord { .. } | EmptyInput | NegativeScaled { .. }
            | InvalidParameter(_) | InvalidInstance(_) | TooLarge(_) | Parse { .. } | ZeroDenominator | Json(_)
            | Csv(_) | Io(_) => Self::Usage(e.to_string()),
            other => Self::Internal(other.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Internal(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", text.trim_end()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Internal(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn load_instance(path: &Path) -> CliResult<Instance> {
    Instance::from_json(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn full_params(instance: &Instance, delta1_dbm: f64, delta2_db: f64, r: usize, lambda: Option<f64>) -> FullModelParams {
    let s = instance.scaling();
    let mut p = FullModelParams::new(
        instance,
        s.threshold_to_scaled(delta1_dbm).min(instance.big_m()),
        s.gap_to_scaled(delta2_db).min(instance.big_m()),
        r,
    );
    if let Some(l) = lambda {
        p.lambda = l;
    }
    p
}

fn model_kind(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::Full => ModelKind::Full,
        ModelArg::Simplified => ModelKind::Simplified,
    }
}

fn solver_spec(s: SolverArg, preset: CimPreset) -> SolverSpec {
    match s {
        SolverArg::Sa => SolverSpec::Sa(None),
        SolverArg::Tabu => SolverSpec::Tabu(None),
        SolverArg::Cim => SolverSpec::Cim(preset.config()),
        SolverArg::Exact => SolverSpec::Exact,
    }
}

fn build_qubo(instance: &Instance, kind: ModelArg, p: &FullModelParams) -> CliResult<(Qubo, VarRegistry)> {
    Ok(match kind {
        ModelArg::Full => build_full_model(instance, p)?.model.into_parts(),
        ModelArg::Simplified => {
            build_simplified_model(instance, &SimplifiedModelParams { delta1: p.delta1, r: p.r, lambda: p.lambda })?
                .model
                .into_parts()
        }
    })
}

fn generate(a: GenerateArgs) -> CliResult {
    let mut spec = SyntheticSpec::new(a.grids, a.cells, a.beams, a.seed);
    spec.rsrp_range = a.rsrp_range;
    emit(a.out.as_deref(), &generate_synthetic(&spec)?.to_json()?)
}

fn import(a: ImportArgs) -> CliResult {
    let file = fs::File::open(&a.records).map_err(|e| Failure::Usage(format!("{}: {e}", a.records.display())))?;
    let records = parse_records(file)?;
    let scaling = match (a.offset, a.scale) {
        (Some(offset), Some(scale)) => Scaling::Fixed(ScalingParams::new(offset, scale)?),
        _ => Scaling::Auto,
    };
    emit(a.out.as_deref(), &build_instance(&records, scaling)?.to_json()?)
}

fn build(a: BuildArgs) -> CliResult {
    let instance = load_instance(&a.instance)?;
    let m = &a.model;
    let p = full_params(&instance, m.delta1_dbm, m.delta2_dbm, m.r, m.lambda);
    let (qubo, reg) = build_qubo(&instance, m.model, &p)?;
    eprintln!("{} variables, {} terms", qubo.size(), qubo.num_terms());
    emit(a.out.as_deref(), &qubo.to_text(Some(&reg)))
}

fn pool_json(pool: &SolutionPool, k: usize) -> serde_json::Value {
    json!(top_k(pool, k)
        .entries
        .iter()
        .map(|e| json!({ "assignment": e.assignment.to_string(), "energy": e.energy }))
        .collect::<Vec<_>>())
}

fn solve(a: SolveArgs) -> CliResult {
    let preset = a.cim_preset.config();
    let run = |qubo: &Qubo| -> CliResult<SolutionPool> {
        let ising = qubo.to_ising();
        if a.solver == SolverArg::Cim {
            let (pool, trajectory) = mbs_core::solvers::solve_cim_sim(&ising, &CimConfig { seed: a.seed, ..preset })?;
            if let Some(path) = &a.trajectory {
                fs::write(path, trajectory.to_csv()).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))?;
            }
            return Ok(pool);
        }
        if a.trajectory.is_some() {
            return Err(Failure::Usage("--trajectory is only available with --solver cim".into()));
        }
        Ok(solver_spec(a.solver, a.cim_preset).solve(qubo, &ising, a.seed)?)
    };

    if let Some(path) = &a.qubo {
        let qubo = Qubo::from_text(&read(path)?)?;
        let pool = run(&qubo)?;
        let best = pool.best().ok_or_else(|| Failure::NoSolution("empty pool".into()))?;
        let out = json!({
            "solver": solver_spec(a.solver, a.cim_preset).name(),
            "seed": a.seed,
            "bits": qubo.size(),
            "best_energy": best.energy,
            "wall_time_seconds": pool.wall_time_seconds,
            "pool": pool_json(&pool, a.top_k),
        });
        return emit(a.out.as_deref(), &serde_json::to_string_pretty(&out).expect("json value"));
    }

    let instance = load_instance(a.instance.as_deref().expect("clap enforces one source"))?;
    let delta1 = a.delta1_dbm.ok_or_else(|| Failure::Usage("--delta1-dbm is required with --instance".into()))?;
    let p = full_params(&instance, delta1, a.delta2_dbm, a.r, a.lambda);
    let (qubo, reg) = build_qubo(&instance, a.model, &p)?;
    let pool = run(&qubo)?;
    let best = select_best_feasible(&pool, &reg, &instance, &p, a.top_k)?;
    let decoded = match (a.model, pool.best()) {
        (ModelArg::Full, Some(e)) => {
            let model = build_full_model(&instance, &p)?;
            serde_json::to_value(decode_full(&e.assignment, &model, &instance)?).expect("serializable")
        }
        (ModelArg::Simplified, Some(e)) => {
            let sp = SimplifiedModelParams { delta1: p.delta1, r: p.r, lambda: p.lambda };
            let model = build_simplified_model(&instance, &sp)?;
            serde_json::to_value(decode_simplified(&e.assignment, &model, &instance)?).expect("serializable")
        }
        (_, None) => serde_json::Value::Null,
    };
    let out = json!({
        "solver": solver_spec(a.solver, a.cim_preset).name(),
        "seed": a.seed,
        "params": p,
        "bits": qubo.size(),
        "best_energy": pool.best().map(|e| e.energy),
        "wall_time_seconds": pool.wall_time_seconds,
        "lowest_energy_decoded": decoded,
        "solution": best,
    });
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&out).expect("json value"))?;
    if best.is_none() {
        return Err(Failure::NoSolution(format!("no feasible entry among the top {}", a.top_k)));
    }
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult {
    let mut instances = Vec::new();
    for path in &a.instances {
        let instance = load_instance(path)?;
        let m = &a.model;
        let params = full_params(&instance, m.delta1_dbm, m.delta2_dbm, m.r, m.lambda);
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        instances.push(BenchInstance { name, instance, params, model: model_kind(m.model) });
    }
    let solvers: Vec<SolverSpec> = a.solvers.iter().map(|&s| solver_spec(s, a.cim_preset)).collect();
    let result = run_benchmark(&instances, &solvers, a.repetitions, a.seed, Some(&a.reference))?;
    for note in &result.notes {
        eprintln!("note: {note}");
    }
    let mut csv = Vec::new();
    write_table_csv(&result.table(), &mut csv)?;
    let csv = String::from_utf8(csv).expect("csv writer emits utf-8");
    if let Some(path) = &a.csv {
        fs::write(path, &csv).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))?;
    }
    let text = result.to_json()?;
    match &a.json {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))?;
            if a.csv.is_none() {
                return emit(None, &csv);
            }
            Ok(())
        }
        None => emit(None, &text),
    }
}

fn ratio(a: RatioArgs) -> CliResult {
    let s = a.source;
    let rows = if let Some(v) = s.values {
        let gamma = efficiency_ratio(v[0], v[1], v[2], v[3])?;
        return emit(None, &json!({ "gamma": gamma }).to_string());
    } else if let Some(path) = s.report {
        BenchResult::from_json(&read(&path)?)?.table()
    } else if let Some(path) = s.table {
        parse_table_csv(read(&path)?.as_bytes())?
    } else {
        published_table()
    };
    let summary = ratio_summary(&rows, &a.reference)?;
    emit(None, &serde_json::to_string_pretty(&summary).expect("serializable"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Import(a) => import(a),
        Command::Build(a) => build(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Ratio(a) => ratio(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::NoSolution(m)) => {
            eprintln!("no solution: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
