//! Coverage-only formulation.
//!
//! Drops the interference gap and the max/second-max machinery: grid `i`
//! counts when some selected beam reaches it at or above `delta1`.
//!
//! ```text
//! min -sum_i z_i + lambda * ( sum_i (z_i + slack1_i - sum_{j in V_i} sum_k x_jk s̄_ijk)^2
//!                          + sum_j (sum_k x_jk + slack2_j - r)^2 )
//! ```
//!
//! The gap condition is restored afterwards by [`crate::postprocess`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model_full::{selection_from_assignment, validate_r_lambda, BeamSelection};
use crate::qubo::{bits_for, Assignment, BuiltModel, ConstraintId, LinearExpr, QuboBuilder, VarName, VarRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedModelParams {
    pub delta1: u32,
    pub r: usize,
    pub lambda: f64,
}

impl SimplifiedModelParams {
    pub fn new(instance: &Instance, delta1: u32, r: usize) -> Self {
        Self { delta1, r, lambda: crate::model_full::default_lambda(instance) }
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.delta1 > instance.big_m() {
            return Err(Error::InvalidParameter(format!(
                "delta1={} must not exceed M={}",
                self.delta1,
                instance.big_m()
            )));
        }
        validate_r_lambda(instance, self.r, self.lambda)
    }
}

#[derive(Debug, Clone)]
pub struct SimplifiedModel {
    pub model: BuiltModel,
    /// `x[j][k]`
    pub x: Vec<Vec<usize>>,
    pub z: Vec<usize>,
    pub slack1: Vec<Vec<usize>>,
    pub slack2: Vec<Vec<usize>>,
    pub params: SimplifiedModelParams,
}

impl SimplifiedModel {
    pub fn qubo(&self) -> &crate::qubo::Qubo {
        &self.model.qubo
    }

    pub fn registry(&self) -> &VarRegistry {
        &self.model.registry
    }

    pub fn size(&self) -> usize {
        self.model.registry.len()
    }

    /// Zero-penalty assignment for `selection` (which must respect `r`)
    /// with every coverable grid switched on.
    pub fn witness(&self, instance: &Instance, selection: &BeamSelection) -> Result<Assignment> {
        selection.check_ranges(instance)?;
        let covered = instance.binarize(self.params.delta1);
        let mut x = Assignment::zeros(self.size());
        for (j, beams) in selection.cells().iter().enumerate() {
            for &k in beams {
                x.set(self.x[j][k], true);
            }
        }
        for i in 0..instance.grids() {
            let hit = instance
                .coverage(i)
                .iter()
                .enumerate()
                .any(|(slot, &j)| selection.beams(j).iter().any(|&k| covered.get(i, slot, k)));
            x.set(self.z[i], hit);
        }
        self.model.fill_slacks(&mut x);
        Ok(x)
    }
}

pub fn build_simplified_model(instance: &Instance, params: &SimplifiedModelParams) -> Result<SimplifiedModel> {
    params.validate(instance)?;
    let (m, v, n) = (instance.grids(), instance.cells(), instance.beams());
    let covered = instance.binarize(params.delta1);
    let lambda = params.lambda;
    let mut b = QuboBuilder::new();

    let x: Vec<Vec<usize>> =
        (0..v).map(|cell| b.vars(n, |beam| VarName::X { cell, beam })).collect::<Result<_>>()?;
    let z: Vec<usize> = (0..m).map(|grid| b.var(VarName::Z { grid })).collect::<Result<_>>()?;
    for &zi in &z {
        b.add_linear(zi, -1.0)?;
    }

    let mut slack1 = Vec::with_capacity(m);
    for i in 0..m {
        let constraint = ConstraintId::Coverage { grid: i };
        let width = bits_for((instance.coverage(i).len() * n) as u64);
        let bits = b.vars(width, |bit| VarName::Slack { constraint, bit })?;
        // z_i + slack1_i - sum x s̄ = 0, written as base - slack with base = sum x s̄ - z_i
        let mut base = LinearExpr::constant(0).with(z[i], -1);
        for (slot, &j) in instance.coverage(i).iter().enumerate() {
            for k in (0..n).filter(|&k| covered.get(i, slot, k)) {
                base.add(x[j][k], 1);
            }
        }
        b.add_slacked_equality(constraint, base, bits.clone(), lambda)?;
        slack1.push(bits);
    }

    let mut slack2 = Vec::with_capacity(v);
    for (cell, xs) in x.iter().enumerate() {
        let constraint = ConstraintId::Cardinality { cell };
        let bits = b.vars(bits_for(params.r as u64), |bit| VarName::Slack { constraint, bit })?;
        // sum x + slack2 - r = 0, written as base - slack with base = r - sum x
        let base = xs.iter().fold(LinearExpr::constant(params.r as i64), |e, &var| e.with(var, -1));
        b.add_slacked_equality(constraint, base, bits.clone(), lambda)?;
        slack2.push(bits);
    }

    Ok(SimplifiedModel { model: b.build()?, x, z, slack1, slack2, params: *params })
}

/// Variable counts for the coverage-only model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitCount {
    /// `m + n v + m ceil(log2(n v)) + v ceil(log2 r)`, as published.
    pub formula: usize,
    /// Size of the registry this crate builds when every grid is covered by every cell.
    pub registry: usize,
}

fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

pub fn bit_count(m: usize, n: usize, v: usize, r: usize) -> BitCount {
    let formula = m + n * v + m * ceil_log2(n * v) + v * ceil_log2(r);
    let registry = m + n * v + m * bits_for((v * n) as u64) + v * bits_for(r as u64);
    BitCount { formula, registry }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedSimplified {
    pub selection: BeamSelection,
    pub z: Vec<bool>,
    pub penalty_residual: f64,
}

pub fn decode_simplified(x: &Assignment, model: &SimplifiedModel, instance: &Instance) -> Result<DecodedSimplified> {
    let selection = selection_from_assignment(model.registry(), x, instance)?;
    let z = model.z.iter().map(|&v| x.get(v)).collect();
    Ok(DecodedSimplified { selection, z, penalty_residual: model.model.penalty(x) })
}
