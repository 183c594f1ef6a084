use std::collections::BTreeMap;

use super::{Assignment, ConstraintId, Qubo, VarName, VarRegistry};
use crate::error::{Error, Result};

/// Number of bits `w` such that `0..=max` fits in `w` binary digits.
pub fn bits_for(max: u64) -> usize {
    (u64::BITS - max.leading_zeros()) as usize
}

/// Integer-coefficient affine expression over registry indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearExpr {
    terms: Vec<(usize, i64)>,
    constant: i64,
}

impl LinearExpr {
    pub fn constant(value: i64) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn with(mut self, var: usize, coeff: i64) -> Self {
        self.add(var, coeff);
        self
    }

    pub fn add(&mut self, var: usize, coeff: i64) {
        if coeff != 0 {
            self.terms.push((var, coeff));
        }
    }

    pub fn add_constant(&mut self, value: i64) {
        self.constant += value;
    }

    /// Adds `sign * sum_t 2^t bit_t`.
    pub fn add_binary(&mut self, bits: &[usize], sign: i64) {
        for (t, &var) in bits.iter().enumerate() {
            self.add(var, sign << t);
        }
    }

    pub fn terms(&self) -> &[(usize, i64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> i64 {
        self.constant
    }

    /// Same expression with repeated variables merged and zeros removed.
    pub fn normalized(&self) -> Self {
        let mut merged: BTreeMap<usize, i64> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *merged.entry(v).or_default() += c;
        }
        Self { terms: merged.into_iter().filter(|&(_, c)| c != 0).collect(), constant: self.constant }
    }

    pub fn eval(&self, x: &Assignment) -> i64 {
        self.eval_bits(x.bits())
    }

    pub(crate) fn eval_bits(&self, bits: &[bool]) -> i64 {
        self.constant + self.terms.iter().filter(|&&(v, _)| bits[v]).map(|&(_, c)| c).sum::<i64>()
    }

    /// Minimum and maximum over all binary assignments.
    pub fn bounds(&self) -> (i64, i64) {
        let n = self.normalized();
        let lo = n.constant + n.terms.iter().map(|&(_, c)| c.min(0)).sum::<i64>();
        let hi = n.constant + n.terms.iter().map(|&(_, c)| c.max(0)).sum::<i64>();
        (lo, hi)
    }
}

/// One squared penalty `lambda * (base - sum_t 2^t slack_t)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTerm {
    pub constraint: Option<ConstraintId>,
    pub base: LinearExpr,
    pub slack: Vec<usize>,
    pub lambda: f64,
}

impl PenaltyTerm {
    /// Value of the penalized expression (zero when the constraint holds
    /// with these slack bits).
    pub fn residual(&self, x: &Assignment) -> i64 {
        let slack: i64 = self.slack.iter().enumerate().filter(|(_, &v)| x.get(v)).map(|(t, _)| 1i64 << t).sum();
        self.base.eval(x) - slack
    }

    pub fn value(&self, x: &Assignment) -> f64 {
        let r = self.residual(x) as f64;
        self.lambda * r * r
    }

    /// Largest value the slack register can hold.
    pub fn slack_capacity(&self) -> i64 {
        (1i64 << self.slack.len()) - 1
    }
}

#[derive(Debug, Clone, Default)]
struct PenaltyGroup {
    lambda: f64,
    terms: BTreeMap<(usize, usize), i128>,
    offset: i128,
}

/// Incrementally assembles a QUBO over named variables.
///
/// Penalty contributions are accumulated exactly in integers per distinct
/// `lambda` and scaled once in [`QuboBuilder::build`], so cancelling terms
/// vanish instead of leaving rounding residue.
#[derive(Debug, Clone, Default)]
pub struct QuboBuilder {
    registry: VarRegistry,
    objective: BTreeMap<(usize, usize), f64>,
    objective_offset: f64,
    groups: Vec<PenaltyGroup>,
    penalties: Vec<PenaltyTerm>,
}

impl QuboBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: VarName) -> Result<usize> {
        self.registry.register(name)
    }

    /// Registers `count` bits produced by `name(t)` and returns their indices.
    pub fn vars(&mut self, count: usize, name: impl Fn(usize) -> VarName) -> Result<Vec<usize>> {
        (0..count).map(|t| self.registry.register(name(t))).collect()
    }

    pub fn registry(&self) -> &VarRegistry {
        &self.registry
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if var < self.registry.len() {
            Ok(())
        } else {
            Err(Error::UnregisteredVariable(var))
        }
    }

    pub fn add_linear(&mut self, var: usize, coeff: f64) -> Result<()> {
        self.add_quadratic(var, var, coeff)
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, coeff: f64) -> Result<()> {
        self.check_var(i)?;
        self.check_var(j)?;
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.objective.entry(key).or_default() += coeff;
        Ok(())
    }

    pub fn add_constant(&mut self, value: f64) {
        self.objective_offset += value;
    }

    /// Adds `lambda * expr^2`, expanded with `x^2 = x`.
    pub fn add_squared_penalty(&mut self, expr: &LinearExpr, lambda: f64) -> Result<()> {
        self.push_penalty(None, expr.clone(), Vec::new(), lambda)
    }

    /// Penalizes `expr != 0`.
    pub fn add_equality(&mut self, constraint: ConstraintId, expr: LinearExpr, lambda: f64) -> Result<()> {
        self.push_penalty(Some(constraint), expr, Vec::new(), lambda)
    }

    /// Penalizes `expr < 0` through `(expr - slack)^2`, where the slack is a
    /// binary register wide enough for the largest value `expr` can take.
    /// Inequalities that hold for every assignment are skipped.
    pub fn add_nonnegative(&mut self, constraint: ConstraintId, expr: LinearExpr, lambda: f64) -> Result<()> {
        for &(v, _) in expr.terms() {
            self.check_var(v)?;
        }
        let (lo, hi) = expr.bounds();
        if lo >= 0 {
            return Ok(());
        }
        let width = bits_for(hi.max(0) as u64);
        let slack = self.vars(width, |bit| VarName::Slack { constraint, bit })?;
        self.push_penalty(Some(constraint), expr, slack, lambda)
    }

    /// Penalizes `base - sum_t 2^t slack_t != 0` over caller-registered slack bits.
    pub fn add_slacked_equality(
        &mut self,
        constraint: ConstraintId,
        base: LinearExpr,
        slack: Vec<usize>,
        lambda: f64,
    ) -> Result<()> {
        self.push_penalty(Some(constraint), base, slack, lambda)
    }

    fn push_penalty(
        &mut self,
        constraint: Option<ConstraintId>,
        base: LinearExpr,
        slack: Vec<usize>,
        lambda: f64,
    ) -> Result<()> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("penalty weight must be positive, got {lambda}")));
        }
        let mut full = base.clone();
        full.add_binary(&slack, -1);
        let full = full.normalized();
        for &(v, _) in full.terms() {
            self.check_var(v)?;
        }

        let group = match self.groups.iter().position(|g| g.lambda == lambda) {
            Some(idx) => &mut self.groups[idx],
            None => {
                self.groups.push(PenaltyGroup { lambda, ..Default::default() });
                self.groups.last_mut().unwrap()
            }
        };
        // (sum a_i x_i + c)^2 = sum a_i^2 x_i + 2 sum_{i<j} a_i a_j x_i x_j + 2c sum a_i x_i + c^2
        let c = full.constant_term() as i128;
        let terms = full.terms();
        for (idx, &(i, a)) in terms.iter().enumerate() {
            let a = a as i128;
            *group.terms.entry((i, i)).or_default() += a * a + 2 * c * a;
            for &(j, b) in &terms[idx + 1..] {
                let key = if i <= j { (i, j) } else { (j, i) };
                *group.terms.entry(key).or_default() += 2 * a * b as i128;
            }
        }
        group.offset += c * c;

        self.penalties.push(PenaltyTerm { constraint, base, slack, lambda });
        Ok(())
    }

    pub fn build(self) -> Result<BuiltModel> {
        let size = self.registry.len();
        let mut qubo = Qubo::new(size);
        let mut combined: BTreeMap<(usize, usize), f64> = self.objective;
        let mut offset = self.objective_offset;
        for g in &self.groups {
            for (&k, &c) in &g.terms {
                if c != 0 {
                    *combined.entry(k).or_default() += g.lambda * c as f64;
                }
            }
            offset += g.lambda * g.offset as f64;
        }
        for ((i, j), c) in combined {
            if c != 0.0 {
                qubo.add_term(i, j, c)?;
            }
        }
        qubo.add_offset(offset);
        Ok(BuiltModel { qubo, registry: self.registry, penalties: self.penalties })
    }
}

/// A QUBO together with the registry and penalty structure it came from.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub qubo: Qubo,
    pub registry: VarRegistry,
    pub penalties: Vec<PenaltyTerm>,
}

impl BuiltModel {
    pub fn into_parts(self) -> (Qubo, VarRegistry) {
        (self.qubo, self.registry)
    }

    /// Total penalty at `x`.
    pub fn penalty(&self, x: &Assignment) -> f64 {
        self.penalties.iter().map(|p| p.value(x)).sum()
    }

    /// Constraints whose penalty is non-zero at `x`, with their residuals.
    pub fn violations(&self, x: &Assignment) -> Vec<(Option<ConstraintId>, i64)> {
        self.penalties
            .iter()
            .map(|p| (p.constraint, p.residual(x)))
            .filter(|&(_, r)| r != 0)
            .collect()
    }

    /// Rewrites every slack register to the value that minimizes its
    /// penalty given the other bits (the base value clamped to capacity).
    pub fn fill_slacks(&self, x: &mut Assignment) {
        for p in self.penalties.iter().filter(|p| !p.slack.is_empty()) {
            for &v in &p.slack {
                x.set(v, false);
            }
            let target = p.base.eval(x).clamp(0, p.slack_capacity());
            for (t, &v) in p.slack.iter().enumerate() {
                x.set(v, target >> t & 1 == 1);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn builder_with(n: usize) -> QuboBuilder {
        let mut b = QuboBuilder::new();
        for grid in 0..n {
            b.var(VarName::Z { grid }).unwrap();
        }
        b
    }

    #[test]
    fn squared_penalty_expansion() {
        let mut b = builder_with(2);
        b.add_squared_penalty(&LinearExpr::constant(-1).with(0, 1).with(1, 1), 1.0).unwrap();
        let q = b.build().unwrap().qubo;
        assert_eq!(q.coefficient(0, 0), -1.0);
        assert_eq!(q.coefficient(1, 1), -1.0);
        assert_eq!(q.coefficient(0, 1), 2.0);
        assert_eq!(q.offset(), 1.0);
    }

    #[test]
    fn zero_expression_is_noop() {
        let mut b = builder_with(1);
        b.add_squared_penalty(&LinearExpr::constant(0), 2.0).unwrap();
        let q = b.build().unwrap().qubo;
        assert_eq!(q.num_terms(), 0);
        assert_eq!(q.offset(), 0.0);
    }

    #[test]
    fn scaled_single_variable() {
        let mut b = builder_with(1);
        b.add_squared_penalty(&LinearExpr::constant(-2).with(0, 2), 3.0).unwrap();
        let q = b.build().unwrap().qubo;
        assert_eq!(q.coefficient(0, 0), -12.0);
        assert_eq!(q.offset(), 12.0);
    }

    #[test]
    fn rejects_unregistered_and_bad_lambda() {
        let mut b = builder_with(1);
        let e = LinearExpr::constant(0).with(5, 1);
        assert!(matches!(b.add_squared_penalty(&e, 1.0), Err(Error::UnregisteredVariable(5))));
        assert!(b.add_squared_penalty(&LinearExpr::constant(1), 0.0).is_err());
    }

    #[test]
    fn slack_covers_the_expression_range() {
        let mut b = builder_with(3);
        // 5 - z0 - z1 - 2 z2 >= 0 always holds: skipped.
        let always = LinearExpr::constant(5).with(0, -1).with(1, -1).with(2, -2);
        b.add_nonnegative(ConstraintId::Coverage { grid: 0 }, always, 1.0).unwrap();
        assert_eq!(b.registry().len(), 3);
        // z0 + 2 z1 + 4 z2 - 1 >= 0 ranges -1..=6: three slack bits.
        let e = LinearExpr::constant(-1).with(0, 1).with(1, 2).with(2, 4);
        b.add_nonnegative(ConstraintId::Coverage { grid: 1 }, e, 1.0).unwrap();
        let model = b.build().unwrap();
        assert_eq!(model.registry.len(), 6);
        for value in 0..8u64 {
            let mut x = Assignment::from_index(value, 6);
            model.fill_slacks(&mut x);
            let expected = if value == 0 { 1.0 } else { 0.0 };
            assert_eq!(model.qubo.energy(&x).unwrap(), expected);
            assert_eq!(model.penalty(&x), expected);
        }
    }

    #[test]
    fn bits_for_values() {
        assert_eq!(bits_for(0), 0);
        assert_eq!(bits_for(1), 1);
        assert_eq!(bits_for(2), 2);
        assert_eq!(bits_for(7), 3);
        assert_eq!(bits_for(8), 4);
    }

    proptest! {
        #[test]
        fn penalty_equals_lambda_times_square(
            coeffs in proptest::collection::vec((0usize..6, -5i64..6), 0..8),
            constant in -10i64..10,
            lambda in 0.1f64..20.0,
            value in 0u64..64,
        ) {
            let mut b = builder_with(6);
            let mut expr = LinearExpr::constant(constant);
            for (v, c) in coeffs {
                expr.add(v, c);
            }
            b.add_squared_penalty(&expr, lambda).unwrap();
            let q = b.build().unwrap().qubo;
            let x = Assignment::from_index(value, 6);
            let r = expr.eval(&x) as f64;
            let expected = lambda * r * r;
            prop_assert!((q.energy(&x).unwrap() - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }
}
