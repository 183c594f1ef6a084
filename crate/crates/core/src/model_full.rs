//! The complete beam-selection formulation.
//!
//! Per grid `i` the model linearizes
//!
//! - `c_ij = max_k s_ijk x_jk` with one-hot witnesses `d_ijk`,
//! - `a_i = max_j c_ij` with one-hot witnesses `p_ij`,
//! - `b_i` = second largest `c_ij` (with multiplicity) with two-hot `q_ij`,
//! - `z_i = [a_i >= delta1 and a_i - b_i >= delta2]`,
//!
//! and bounds every cell to at most `r` beams. Inequalities become
//! equalities with binary slack registers and everything is folded into
//! `-sum z_i + lambda * sum (violation)^2`.
//!
//! The same semantics are also implemented directly on a [`BeamSelection`]
//! ([`exact_objective`]); decoding always uses that path, never the encoded
//! integer bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::qubo::{bits_for, Assignment, BuiltModel, ConstraintId, LinearExpr, QuboBuilder, VarName, VarRegistry};

/// Largest search space [`brute_force_selection`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullModelParams {
    /// Coverage threshold in scaled RSRP units.
    pub delta1: u32,
    /// Interference gap threshold in scaled RSRP units.
    pub delta2: u32,
    /// Maximum beams per cell.
    pub r: usize,
    pub lambda: f64,
}

impl FullModelParams {
    /// Parameters with the default penalty weight `m + 1`.
    pub fn new(instance: &Instance, delta1: u32, delta2: u32, r: usize) -> Self {
        Self { delta1, delta2, r, lambda: default_lambda(instance) }
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        let big_m = instance.big_m();
        if self.delta1 > big_m || self.delta2 > big_m {
            return Err(Error::InvalidParameter(format!(
                "thresholds delta1={} delta2={} must not exceed M={big_m}",
                self.delta1, self.delta2
            )));
        }
        validate_r_lambda(instance, self.r, self.lambda)
    }
}

pub(crate) fn validate_r_lambda(instance: &Instance, r: usize, lambda: f64) -> Result<()> {
    if r == 0 || r > instance.beams() {
        return Err(Error::InvalidParameter(format!("r={r} must lie in 1..={}", instance.beams())));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda={lambda} must be positive")));
    }
    Ok(())
}

/// `m + 1`: one unit of violation always costs more than every grid is worth.
pub fn default_lambda(instance: &Instance) -> f64 {
    (instance.grids() + 1) as f64
}

/// Selected beams of every cell, each list sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeamSelection {
    cells: Vec<Vec<usize>>,
}

impl BeamSelection {
    pub fn empty(cells: usize) -> Self {
        Self { cells: vec![Vec::new(); cells] }
    }

    pub fn from_cells(mut cells: Vec<Vec<usize>>) -> Self {
        for beams in &mut cells {
            beams.sort_unstable();
            beams.dedup();
        }
        Self { cells }
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn beams(&self, cell: usize) -> &[usize] {
        &self.cells[cell]
    }

    pub fn is_selected(&self, cell: usize, beam: usize) -> bool {
        self.cells[cell].binary_search(&beam).is_ok()
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn respects_cardinality(&self, r: usize) -> bool {
        self.cells.iter().all(|b| b.len() <= r)
    }

    pub fn check_ranges(&self, instance: &Instance) -> Result<()> {
        if self.cells.len() != instance.cells() {
            return Err(Error::IndexOutOfRange(format!(
                "selection lists {} cells, instance has {}",
                self.cells.len(),
                instance.cells()
            )));
        }
        for (j, beams) in self.cells.iter().enumerate() {
            if let Some(&k) = beams.iter().find(|&&k| k >= instance.beams()) {
                return Err(Error::IndexOutOfRange(format!(
                    "beam {k} of cell {j} (instance has {} beams)",
                    instance.beams()
                )));
            }
        }
        Ok(())
    }
}

/// Which grid condition failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFailure {
    Threshold,
    Gap,
}

/// Recomputed quantities of one grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridReport {
    pub grid: usize,
    /// `c_ij` per covering cell, in coverage order.
    pub c: Vec<u32>,
    pub a: u32,
    /// `None` when the grid has a single covering cell.
    pub b: Option<u32>,
    pub z: bool,
    pub failure: Option<GridFailure>,
}

pub type GridDiagnostics = Vec<GridReport>;

fn grid_report(grid: usize, c: Vec<u32>, delta1: u32, delta2: u32) -> GridReport {
    let mut a = 0;
    let mut b = 0;
    for &v in &c {
        if v > a {
            b = a;
            a = v;
        } else if v > b {
            b = v;
        }
    }
    let b = (c.len() >= 2).then_some(b);
    let failure = if a < delta1 {
        Some(GridFailure::Threshold)
    } else if b.is_some_and(|b| a - b < delta2) {
        Some(GridFailure::Gap)
    } else {
        None
    };
    GridReport { grid, c, a, b, z: failure.is_none(), failure }
}

/// Satisfied-grid count of `selection` under the max/second-max semantics.
///
/// Cardinality is not checked here; any in-range selection has a value.
pub fn exact_objective(
    instance: &Instance,
    selection: &BeamSelection,
    delta1: u32,
    delta2: u32,
) -> Result<(usize, GridDiagnostics)> {
    selection.check_ranges(instance)?;
    let diags: GridDiagnostics = (0..instance.grids())
        .map(|i| {
            let c = instance
                .coverage(i)
                .iter()
                .enumerate()
                .map(|(slot, &j)| {
                    let row = instance.rsrp_row(i, slot);
                    selection.beams(j).iter().filter_map(|&k| row[k]).max().unwrap_or(0)
                })
                .collect();
            grid_report(i, c, delta1, delta2)
        })
        .collect();
    let count = diags.iter().filter(|d| d.z).count();
    Ok((count, diags))
}

/// Result of checking a decoded selection against the full model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Per cell: does it select at most `r` beams.
    pub cardinality_ok: Vec<bool>,
    pub feasible: bool,
    pub count: usize,
    pub grids: GridDiagnostics,
}

pub fn check_feasibility_full(
    instance: &Instance,
    selection: &BeamSelection,
    params: &FullModelParams,
) -> Result<FeasibilityReport> {
    let (count, grids) = exact_objective(instance, selection, params.delta1, params.delta2)?;
    let cardinality_ok: Vec<bool> = selection.cells().iter().map(|b| b.len() <= params.r).collect();
    let feasible = cardinality_ok.iter().all(|&ok| ok);
    Ok(FeasibilityReport { cardinality_ok, feasible, count, grids })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All beam subsets of size `<= r` in lexicographic order of their sorted lists.
fn subsets_lex(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn extend(n: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if cur.len() == r {
            return;
        }
        for k in start..n {
            cur.push(k);
            extend(n, r, k + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(n, r, 0, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive optimum over every selection with at most `r` beams per cell.
///
/// Ties resolve to the lexicographically smallest selection. Only
/// `delta1`, `delta2` and `r` are read from `params`.
pub fn brute_force_selection(instance: &Instance, params: &FullModelParams) -> Result<(BeamSelection, usize)> {
    let (v, n, r) = (instance.cells(), instance.beams(), params.r.min(instance.beams()));
    let per_cell: u128 = (0..=r).map(|t| binomial(n, t)).sum();
    let space = (0..v).try_fold(1u128, |acc, _| acc.checked_mul(per_cell).filter(|&s| s <= BRUTE_FORCE_LIMIT));
    let Some(_) = space else {
        return Err(Error::TooLarge(format!(
            "{per_cell}^{v} selections exceed the enumeration limit {BRUTE_FORCE_LIMIT}"
        )));
    };

    let subsets = subsets_lex(n, r);
    // c_table[i][slot][subset]
    let c_table: Vec<Vec<Vec<u32>>> = (0..instance.grids())
        .map(|i| {
            (0..instance.coverage(i).len())
                .map(|slot| {
                    let row = instance.rsrp_row(i, slot);
                    subsets.iter().map(|sub| sub.iter().filter_map(|&k| row[k]).max().unwrap_or(0)).collect()
                })
                .collect()
        })
        .collect();

    let score = |digits: &[usize]| -> usize {
        (0..instance.grids())
            .filter(|&i| {
                let (mut a, mut b) = (0, 0);
                for (slot, &j) in instance.coverage(i).iter().enumerate() {
                    let c = c_table[i][slot][digits[j]];
                    if c > a {
                        b = a;
                        a = c;
                    } else if c > b {
                        b = c;
                    }
                }
                a >= params.delta1 && (instance.coverage(i).len() < 2 || a - b >= params.delta2)
            })
            .count()
    };

    // Odometer with cell 0 most significant visits selections in lexicographic order.
    let mut digits = vec![0usize; v];
    let mut best = (score(&digits), digits.clone());
    'outer: loop {
        let mut pos = v;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < subsets.len() {
                break;
            }
            digits[pos] = 0;
        }
        let s = score(&digits);
        if s > best.0 {
            best = (s, digits.clone());
            if s == instance.grids() {
                break;
            }
        }
    }
    let selection = BeamSelection { cells: best.1.iter().map(|&d| subsets[d].clone()).collect() };
    Ok((selection, best.0))
}

/// Registry indices of one grid's auxiliary variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    /// `d[slot][k]`, `None` for beams with no measurement at this grid.
    pub d: Vec<Vec<Option<usize>>>,
    pub p: Vec<usize>,
    /// Empty when the grid has a single covering cell.
    pub q: Vec<usize>,
    pub a_bits: Vec<usize>,
    /// Empty when the grid has a single covering cell.
    pub b_bits: Vec<usize>,
    pub c_bits: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullVarLayout {
    /// `x[j][k]`
    pub x: Vec<Vec<usize>>,
    pub z: Vec<usize>,
    pub grids: Vec<GridLayout>,
    /// Width of the `a`, `b`, `c` registers.
    pub value_bits: usize,
}

/// A built full model: QUBO, registry, penalty structure and layout.
#[derive(Debug, Clone)]
pub struct FullModel {
    pub model: BuiltModel,
    pub layout: FullVarLayout,
    pub params: FullModelParams,
}

impl FullModel {
    pub fn qubo(&self) -> &crate::qubo::Qubo {
        &self.model.qubo
    }

    pub fn registry(&self) -> &VarRegistry {
        &self.model.registry
    }

    pub fn size(&self) -> usize {
        self.model.registry.len()
    }
}

fn binary(bits: &[usize]) -> LinearExpr {
    let mut e = LinearExpr::default();
    e.add_binary(bits, 1);
    e
}

/// Builds `-sum z_i + lambda * sum penalties` for the full formulation.
pub fn build_full_model(instance: &Instance, params: &FullModelParams) -> Result<FullModel> {
    params.validate(instance)?;
    let (m, v, n) = (instance.grids(), instance.cells(), instance.beams());
    let big_m = i64::from(instance.big_m());
    let value_bits = bits_for(instance.big_m() as u64);
    let lambda = params.lambda;
    let mut b = QuboBuilder::new();

    let x: Vec<Vec<usize>> =
        (0..v).map(|cell| b.vars(n, |beam| VarName::X { cell, beam })).collect::<Result<_>>()?;
    let z: Vec<usize> = (0..m).map(|grid| b.var(VarName::Z { grid })).collect::<Result<_>>()?;
    for &zi in &z {
        b.add_linear(zi, -1.0)?;
    }

    let mut grids = Vec::with_capacity(m);
    for i in 0..m {
        let cover = instance.coverage(i);
        let multi = cover.len() >= 2;
        let d: Vec<Vec<Option<usize>>> = cover
            .iter()
            .enumerate()
            .map(|(slot, &cell)| {
                instance
                    .rsrp_row(i, slot)
                    .iter()
                    .enumerate()
                    .map(|(beam, s)| s.map(|_| b.var(VarName::D { grid: i, cell, beam })).transpose())
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        let p: Vec<usize> = cover.iter().map(|&cell| b.var(VarName::P { grid: i, cell })).collect::<Result<_>>()?;
        let q: Vec<usize> = if multi {
            cover.iter().map(|&cell| b.var(VarName::Q { grid: i, cell })).collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let a_bits = b.vars(value_bits, |bit| VarName::ABit { grid: i, bit })?;
        let b_bits = if multi { b.vars(value_bits, |bit| VarName::BBit { grid: i, bit })? } else { Vec::new() };
        let c_bits: Vec<Vec<usize>> = cover
            .iter()
            .map(|&cell| b.vars(value_bits, |bit| VarName::CBit { grid: i, cell, bit }))
            .collect::<Result<_>>()?;

        let a_expr = binary(&a_bits);
        let b_expr = binary(&b_bits);
        for (slot, &cell) in cover.iter().enumerate() {
            let c_expr = binary(&c_bits[slot]);
            let mut one_hot = LinearExpr::constant(-1);
            for (beam, s) in instance.rsrp_row(i, slot).iter().enumerate() {
                let (Some(s), Some(d_var)) = (*s, d[slot][beam]) else { continue };
                let s = i64::from(s);
                let xk = x[cell][beam];
                // c_ij - s x_jk >= 0
                let mut lower = c_expr.clone();
                lower.add(xk, -s);
                b.add_nonnegative(ConstraintId::CLower { grid: i, cell, beam }, lower, lambda)?;
                // s x_jk + M - M d_ijk - c_ij >= 0
                let mut upper = LinearExpr::constant(big_m).with(xk, s).with(d_var, -big_m);
                upper.add_binary(&c_bits[slot], -1);
                b.add_nonnegative(ConstraintId::CUpper { grid: i, cell, beam }, upper, lambda)?;
                one_hot.add(d_var, 1);
            }
            b.add_equality(ConstraintId::DOneHot { grid: i, cell }, one_hot, lambda)?;

            // a_i - c_ij >= 0
            let mut a_lower = a_expr.clone();
            a_lower.add_binary(&c_bits[slot], -1);
            b.add_nonnegative(ConstraintId::ALower { grid: i, cell }, a_lower, lambda)?;
            // c_ij + M - M p_ij - a_i >= 0
            let mut a_upper = c_expr.clone();
            a_upper.add_constant(big_m);
            a_upper.add(p[slot], -big_m);
            a_upper.add_binary(&a_bits, -1);
            b.add_nonnegative(ConstraintId::AUpper { grid: i, cell }, a_upper, lambda)?;

            if multi {
                // b_i - c_ij + M p_ij >= 0
                let mut b_lower = b_expr.clone();
                b_lower.add_binary(&c_bits[slot], -1);
                b_lower.add(p[slot], big_m);
                b.add_nonnegative(ConstraintId::BLower { grid: i, cell }, b_lower, lambda)?;
                // c_ij + M - M q_ij - b_i >= 0
                let mut b_upper = c_expr.clone();
                b_upper.add_constant(big_m);
                b_upper.add(q[slot], -big_m);
                b_upper.add_binary(&b_bits, -1);
                b.add_nonnegative(ConstraintId::BUpper { grid: i, cell }, b_upper, lambda)?;
            }
        }
        let p_sum = p.iter().fold(LinearExpr::constant(-1), |e, &v| e.with(v, 1));
        b.add_equality(ConstraintId::POneHot { grid: i }, p_sum, lambda)?;
        if multi {
            let q_sum = q.iter().fold(LinearExpr::constant(-2), |e, &v| e.with(v, 1));
            b.add_equality(ConstraintId::QTwoHot { grid: i }, q_sum, lambda)?;
        }

        // M (1 - z_i) - delta1 + a_i >= 0
        let mut threshold = a_expr.clone();
        threshold.add_constant(big_m - i64::from(params.delta1));
        threshold.add(z[i], -big_m);
        b.add_nonnegative(ConstraintId::ZThreshold { grid: i }, threshold, lambda)?;
        if multi {
            // M (1 - z_i) - delta2 + a_i - b_i >= 0
            let mut gap = a_expr.clone();
            gap.add_binary(&b_bits, -1);
            gap.add_constant(big_m - i64::from(params.delta2));
            gap.add(z[i], -big_m);
            b.add_nonnegative(ConstraintId::ZGap { grid: i }, gap, lambda)?;
        }

        grids.push(GridLayout { d, p, q, a_bits, b_bits, c_bits });
    }

    for (cell, xs) in x.iter().enumerate() {
        // r - sum_k x_jk >= 0
        let budget = xs.iter().fold(LinearExpr::constant(params.r as i64), |e, &v| e.with(v, -1));
        b.add_nonnegative(ConstraintId::Cardinality { cell }, budget, lambda)?;
    }

    Ok(FullModel { model: b.build()?, layout: FullVarLayout { x, z, grids, value_bits }, params: *params })
}

fn set_binary(x: &mut Assignment, bits: &[usize], value: u32) {
    for (t, &var) in bits.iter().enumerate() {
        x.set(var, value >> t & 1 == 1);
    }
}

impl FullModel {
    /// The canonical zero-penalty assignment for `selection`: `c`, `a`, `b`,
    /// `z` from the exact semantics, `d`/`p`/`q` on the lowest-index maxima,
    /// slacks filled. Cardinality violations remain visible as penalty.
    pub fn witness(&self, instance: &Instance, selection: &BeamSelection) -> Result<Assignment> {
        let (_, diags) = exact_objective(instance, selection, self.params.delta1, self.params.delta2)?;
        let lay = &self.layout;
        let mut x = Assignment::zeros(self.size());
        for (j, beams) in selection.cells().iter().enumerate() {
            for &k in beams {
                x.set(lay.x[j][k], true);
            }
        }
        for (i, (g, diag)) in lay.grids.iter().zip(&diags).enumerate() {
            for (slot, &cell) in instance.coverage(i).iter().enumerate() {
                set_binary(&mut x, &g.c_bits[slot], diag.c[slot]);
                let row = instance.rsrp_row(i, slot);
                let (mut best_k, mut best) = (None, 0);
                for (k, s) in row.iter().enumerate() {
                    if let Some(s) = *s {
                        let prod = if selection.is_selected(cell, k) { s } else { 0 };
                        if best_k.is_none() || prod > best {
                            best_k = Some(k);
                            best = prod;
                        }
                    }
                }
                let k = best_k.expect("covering cells have a measured beam");
                x.set(g.d[slot][k].expect("measured beam has a d variable"), true);
            }
            let top = diag.c.iter().position(|&c| c == diag.a).expect("a is attained");
            x.set(g.p[top], true);
            set_binary(&mut x, &g.a_bits, diag.a);
            if let Some(b_val) = diag.b {
                let second = (0..diag.c.len())
                    .filter(|&s| s != top)
                    .max_by(|&s, &t| diag.c[s].cmp(&diag.c[t]).then(t.cmp(&s)))
                    .expect("at least two covering cells");
                x.set(g.q[top], true);
                x.set(g.q[second], true);
                set_binary(&mut x, &g.b_bits, b_val);
            }
            x.set(lay.z[i], diag.z);
        }
        self.model.fill_slacks(&mut x);
        Ok(x)
    }
}

/// Reads the `x(j, k)` bits of any registry into a selection.
pub fn selection_from_assignment(reg: &VarRegistry, x: &Assignment, instance: &Instance) -> Result<BeamSelection> {
    if x.len() != reg.len() {
        return Err(Error::LengthMismatch { expected: reg.len(), found: x.len() });
    }
    let mut cells = vec![Vec::new(); instance.cells()];
    for (idx, name) in reg.iter() {
        if let VarName::X { cell, beam } = *name {
            if cell >= instance.cells() || beam >= instance.beams() {
                return Err(Error::IndexOutOfRange(format!("registry variable {name} outside the instance")));
            }
            if x.get(idx) {
                cells[cell].push(beam);
            }
        }
    }
    Ok(BeamSelection::from_cells(cells))
}

/// Decoded view of a full-model assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedFull {
    pub selection: BeamSelection,
    pub count: usize,
    pub per_grid: GridDiagnostics,
    /// `energy(x) + count`: zero exactly when the encoding agrees with the
    /// recomputed objective and no constraint is violated.
    pub penalty_residual: f64,
}

pub fn decode_full(x: &Assignment, model: &FullModel, instance: &Instance) -> Result<DecodedFull> {
    let selection = selection_from_assignment(model.registry(), x, instance)?;
    let (count, per_grid) = exact_objective(instance, &selection, model.params.delta1, model.params.delta2)?;
    let energy = model.qubo().energy(x)?;
    Ok(DecodedFull { selection, count, per_grid, penalty_residual: energy + count as f64 })
}
