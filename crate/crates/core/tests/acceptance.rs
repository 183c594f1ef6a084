//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary so the
//! lines show up in `cargo test` output.

use std::time::Instant;

use mbs_core::bench::{efficiency_ratio, published_table, ratio_summary, run_benchmark, BenchInstance, ModelKind, SolverSpec};
use mbs_core::instance::{generate_synthetic, Instance, SyntheticSpec};
use mbs_core::model_full::{
    brute_force_selection, build_full_model, decode_full, selection_from_assignment, FullModel, FullModelParams,
};
use mbs_core::model_simplified::{bit_count, build_simplified_model, SimplifiedModelParams};
use mbs_core::postprocess::select_best_feasible;
use mbs_core::qubo::{ising_to_maxcut, Assignment, ConstraintId, IsingModel, Qubo, SpinConfig};
use mbs_core::solvers::{
    solve_cim_sim, solve_exact, solve_exact_elimination, CimConfig, ExactConfig, DEFAULT_MAX_WIDTH, MAX_EXACT_SIZE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn criterion_1() -> Outcome {
    let rows = published_table();
    let summary = match ratio_summary(&rows, "cim") {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let first = efficiency_ratio(5.0, 4.096e-3, 2.07, 134e-3).unwrap_or(f64::NAN);
    let sa = summary.means.get("sa").copied().unwrap_or(f64::NAN);
    let tabu = summary.means.get("tabu").copied().unwrap_or(f64::NAN);
    let within = |x: f64, target: f64| ((x - target) / target).abs() <= 0.01;
    outcome(
        within(sa, 261.23) && within(tabu, 20.66) && summary.entries.len() == 12,
        format!("mean sa {sa:.3} (261.23), mean tabu {tabu:.3} (20.66), first row {first:.2}"),
    )
}

/// Small instance from the oracle-checkable family.
fn small_instance(rng: &mut ChaCha8Rng, seed: u64) -> Instance {
    let grids = rng.random_range(1..=4);
    let cells = rng.random_range(1..=2);
    let beams = rng.random_range(1..=3);
    let mut spec = SyntheticSpec::new(grids, cells, beams, seed);
    spec.rsrp_range = (0, rng.random_range(5..=15));
    spec.cells_per_grid = (1, cells);
    spec.allow_single_cell = true;
    generate_synthetic(&spec).expect("valid synthetic spec")
}

fn minimize(q: &Qubo) -> mbs_core::Result<mbs_core::solvers::SolutionPool> {
    if q.size() <= MAX_EXACT_SIZE {
        solve_exact(q, &ExactConfig::default())
    } else {
        solve_exact_elimination(q, DEFAULT_MAX_WIDTH)
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let total = 60u64;
    let mut failures = Vec::new();
    let mut largest = 0;
    for idx in 0..total {
        let inst = small_instance(&mut rng, 20_000 + idx);
        let m = inst.big_m();
        let d1 = rng.random_range(0..=m);
        let d2 = rng.random_range(0..=m / 2);
        let r = rng.random_range(1..=2).min(inst.beams());
        let params = FullModelParams::new(&inst, d1, d2, r);
        let mut run = || -> mbs_core::Result<bool> {
            let (_, optimum) = brute_force_selection(&inst, &params)?;
            let model = build_full_model(&inst, &params)?;
            let pool = minimize(model.qubo())?;
            let best = pool.best().expect("non-empty pool");
            let decoded = decode_full(&best.assignment, &model, &inst)?;
            largest = largest.max(model.size());
            Ok(decoded.count == optimum
                && (best.energy + optimum as f64).abs() < 1e-9
                && decoded.penalty_residual.abs() < 1e-9
                && model.model.penalty(&best.assignment) == 0.0)
        };
        match run() {
            Ok(true) => {}
            Ok(false) => failures.push(format!("#{idx}")),
            Err(e) => failures.push(format!("#{idx}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!("{}/{total} instances agree, largest model {largest} variables {failures:?}", total as usize - failures.len()),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let total = 60u64;
    let mut matches = 0;
    let mut unexplained = Vec::new();
    for idx in 0..total {
        let inst = small_instance(&mut rng, 30_000 + idx);
        let d1 = rng.random_range(0..=inst.big_m());
        let r = rng.random_range(1..=2).min(inst.beams());
        let full = FullModelParams::new(&inst, d1, 0, r);
        let mut run = || -> mbs_core::Result<bool> {
            let (oracle_sel, optimum) = brute_force_selection(&inst, &full)?;
            let model = build_simplified_model(&inst, &SimplifiedModelParams::new(&inst, d1, r))?;
            let pool = minimize(model.qubo())?;
            let best = select_best_feasible(&pool, model.registry(), &inst, &full, 100)?;
            if best.is_some_and(|s| s.objective == optimum) {
                return Ok(true);
            }
            // A miss is only acceptable when the oracle selection never made the pool.
            for e in &pool.entries {
                if selection_from_assignment(model.registry(), &e.assignment, &inst)? == oracle_sel {
                    unexplained.push(idx);
                }
            }
            Ok(false)
        };
        match run() {
            Ok(true) => matches += 1,
            Ok(false) => {}
            Err(_) => unexplained.push(idx),
        }
    }
    let rate = matches as f64 / total as f64;
    outcome(
        rate >= 0.95 && unexplained.is_empty(),
        format!("{matches}/{total} match the oracle ({:.1}%), unexplained misses {unexplained:?}", 100.0 * rate),
    )
}

fn group_penalty(model: &FullModel, x: &Assignment, keep: impl Fn(&ConstraintId) -> bool) -> f64 {
    model.model.penalties.iter().filter(|p| p.constraint.as_ref().is_some_and(&keep)).map(|p| p.value(x)).sum()
}

fn write_value(x: &mut Assignment, bits: &[usize], value: u64) {
    for (t, &v) in bits.iter().enumerate() {
        x.set(v, value >> t & 1 == 1);
    }
}

fn read_value(x: &Assignment, bits: &[usize]) -> u64 {
    bits.iter().enumerate().map(|(t, &v)| (x.get(v) as u64) << t).sum()
}

/// Every (value, indicator) pair of one register group that zeroes the
/// group's penalties must carry the witness value.
fn unique_value(
    model: &FullModel,
    witness: &Assignment,
    value_bits: &[usize],
    indicators: &[usize],
    keep: impl Fn(&ConstraintId) -> bool + Copy,
) -> bool {
    let expected = read_value(witness, value_bits);
    let mut x = witness.clone();
    for value in 0..1u64 << value_bits.len() {
        for pattern in 0..1u64 << indicators.len() {
            write_value(&mut x, value_bits, value);
            write_value(&mut x, indicators, pattern);
            model.model.fill_slacks(&mut x);
            if group_penalty(model, &x, keep) == 0.0 && value != expected {
                return false;
            }
        }
    }
    true
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    let mut failures = Vec::new();
    for idx in 0..40u64 {
        let mut spec = SyntheticSpec::new(rng.random_range(1..=3), rng.random_range(1..=3), rng.random_range(1..=3), 40_000 + idx);
        spec.rsrp_range = (0, rng.random_range(3..=30));
        spec.cells_per_grid = (1, spec.cells);
        spec.allow_single_cell = true;
        let inst = generate_synthetic(&spec).expect("valid spec");
        let params = FullModelParams::new(&inst, rng.random_range(0..=inst.big_m()), rng.random_range(0..=inst.big_m()), inst.beams());
        let model = build_full_model(&inst, &params).expect("model builds");
        for _ in 0..3 {
            let cells = (0..inst.cells())
                .map(|_| (0..inst.beams()).filter(|_| rng.random_bool(0.5)).collect())
                .collect();
            let selection = mbs_core::model_full::BeamSelection::from_cells(cells);
            let witness = model.witness(&inst, &selection).expect("witness");
            checked += 1;
            let mut ok = model.model.penalty(&witness) == 0.0;
            for (g, layout) in model.layout.grids.iter().enumerate() {
                let flippable = layout.d.iter().flatten().flatten().chain(&layout.p).chain(&layout.q);
                for &v in flippable {
                    let mut x = witness.clone();
                    x.flip(v);
                    model.model.fill_slacks(&mut x);
                    ok &= model.model.penalty(&x) > 0.0;
                }
                for (slot, c_bits) in layout.c_bits.iter().enumerate() {
                    let d: Vec<usize> = layout.d[slot].iter().flatten().copied().collect();
                    ok &= unique_value(&model, &witness, c_bits, &d, |c| {
                        matches!(*c, ConstraintId::CLower { grid, .. } | ConstraintId::CUpper { grid, .. }
                            | ConstraintId::DOneHot { grid, .. } if grid == g)
                    });
                }
                ok &= unique_value(&model, &witness, &layout.a_bits, &layout.p, |c| {
                    matches!(*c, ConstraintId::ALower { grid, .. } | ConstraintId::AUpper { grid, .. }
                        | ConstraintId::POneHot { grid } if grid == g)
                });
                if !layout.q.is_empty() {
                    ok &= unique_value(&model, &witness, &layout.b_bits, &layout.q, |c| {
                        matches!(*c, ConstraintId::BLower { grid, .. } | ConstraintId::BUpper { grid, .. }
                            | ConstraintId::QTwoHot { grid } if grid == g)
                    });
                }
            }
            if !ok {
                failures.push(idx);
            }
        }
    }
    outcome(failures.is_empty(), format!("{checked} witnesses checked, failing instances {failures:?}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 12;
    let mut q = Qubo::new(n);
    for i in 0..n {
        for j in i..n {
            if rng.random_bool(0.6) {
                q.add_term(i, j, rng.random_range(-50.0..50.0)).unwrap();
            }
        }
    }
    q.add_offset(3.25);
    let ising = q.to_ising();
    let back = ising.to_qubo();
    let mut worst = 0.0f64;
    let mut qubo_ok = true;
    for index in 0..1u64 << n {
        let x = Assignment::from_index(index, n);
        let e = q.energy(&x).unwrap();
        let h = ising.energy(&SpinConfig::from_assignment(&x)).unwrap();
        let b = back.energy(&x).unwrap();
        worst = worst.max((e - h).abs() / e.abs().max(1.0));
        qubo_ok &= rel_close(e, h, 1e-9) && rel_close(e, b, 1e-9);
    }

    let mut model = IsingModel::new(n);
    for i in 0..n {
        model.add_field(i, rng.random_range(-5.0..5.0)).unwrap();
        for j in i + 1..n {
            if rng.random_bool(0.5) {
                model.add_coupling(i, j, rng.random_range(-5.0..5.0)).unwrap();
            }
        }
    }
    model.add_offset(-1.5);
    let graph = ising_to_maxcut(&model);
    let mut cut_ok = true;
    for index in 0..1u64 << n {
        let s = SpinConfig::from_assignment(&Assignment::from_index(index, n));
        let h = model.energy(&s).unwrap();
        let cut = graph.cut_of_spins(&s).unwrap();
        cut_ok &= rel_close(graph.energy_from_cut(cut), h, 1e-9) && rel_close(graph.cut_from_energy(h), cut, 1e-9);
    }
    outcome(
        qubo_ok && cut_ok,
        format!("4096 assignments each; qubo/ising worst relative gap {worst:.1e}, max-cut identity {}", if cut_ok { "holds" } else { "broken" }),
    )
}

const DELTA1: u32 = 85;
const R: usize = 2;

fn replica_instances() -> Vec<(BenchInstance, usize)> {
    (5..=10)
        .map(|m| {
            let instance = generate_synthetic(&SyntheticSpec::new(m, 5, 5, 1000 + m as u64)).expect("valid spec");
            let mut params = FullModelParams::new(&instance, DELTA1, 0, R);
            params.lambda = (m + 1) as f64 / 5.0;
            let optimum = brute_force_selection(&instance, &params).expect("oracle").1;
            (BenchInstance { name: format!("m{m}"), instance, params, model: ModelKind::Simplified }, optimum)
        })
        .collect()
}

fn criterion_6_and_7() -> (Outcome, Outcome) {
    let cases = replica_instances();
    let instances: Vec<BenchInstance> = cases.iter().map(|(b, _)| b.clone()).collect();
    let solvers = [SolverSpec::Cim(CimConfig::amplitude_controlled(0)), SolverSpec::Sa(None), SolverSpec::Tabu(None)];
    let result = match run_benchmark(&instances, &solvers, 100, 1, Some("cim")) {
        Ok(r) => r,
        Err(e) => return (outcome(false, e.to_string()), outcome(false, "benchmark failed")),
    };
    let mut hits_ok = true;
    let mut worst = 100;
    for row in &result.rows {
        let optimum = cases.iter().find(|(b, _)| b.name == row.instance).map(|c| c.1).unwrap_or(usize::MAX);
        let hits = row.objectives.iter().filter(|&&o| o == optimum).count();
        worst = worst.min(hits);
        hits_ok &= hits >= 90;
    }

    let mut bifurcation_ok = true;
    let mut crossings = Vec::new();
    for (bench, _) in &cases {
        let sp = SimplifiedModelParams { delta1: bench.params.delta1, r: R, lambda: bench.params.lambda };
        let model = build_simplified_model(&bench.instance, &sp).expect("model builds");
        let ising = model.qubo().to_ising();
        let (_, trajectory) = solve_cim_sim(&ising, &CimConfig::amplitude_controlled(7)).expect("cim runs");
        match trajectory.threshold_index() {
            Some(k) => {
                let at = trajectory.samples[k].best_energy;
                let end = trajectory.best_energy().unwrap_or(at);
                bifurcation_ok &= end < at;
                crossings.push(trajectory.samples[k].roundtrip);
            }
            None => bifurcation_ok = false,
        }
    }
    let six = outcome(
        hits_ok && bifurcation_ok,
        format!("worst solver/instance hit count {worst}/100; threshold crossed at roundtrips {crossings:?}, best energy falls afterwards: {bifurcation_ok}"),
    );

    let counts = bit_count(5, 5, 5, 2);
    let m5 = result.rows.iter().find(|r| r.instance == "m5");
    let registry_reported = m5.is_some_and(|r| r.bits > 0 && r.formula_bits == Some(60))
        && result.notes.iter().any(|n| n.contains("m5") && n.contains(&m5.unwrap().bits.to_string()));
    let discrepancy_noted = result.notes.iter().any(|n| n.contains("61, 68, 75, 82, 89, 96"));
    let seven = outcome(
        counts.formula == 60 && registry_reported && discrepancy_noted,
        format!(
            "formula {} for m=n=v=5 r=2, built registry {} variables, discrepancy note present: {discrepancy_noted}",
            counts.formula,
            m5.map_or(0, |r| r.bits)
        ),
    );
    (six, seven)
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, o: Outcome, started: Instant| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("criterion {n}: {status} ({:.1}s) {}", started.elapsed().as_secs_f64(), o.detail);
    };
    let t = Instant::now();
    report(1, criterion_1(), t);
    let t = Instant::now();
    report(2, criterion_2(), t);
    let t = Instant::now();
    report(3, criterion_3(), t);
    let t = Instant::now();
    report(4, criterion_4(), t);
    let t = Instant::now();
    report(5, criterion_5(), t);
    let t = Instant::now();
    let (six, seven) = criterion_6_and_7();
    report(6, six, t);
    report(7, seven, Instant::now());
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
