//! Binary quadratic models.
//!
//! A [`Qubo`] stores an upper-triangular coefficient map: the diagonal
//! `(i, i)` carries linear terms (`x_i^2 = x_i`) and the constant lives in
//! `offset`, so `energy(x) = sum_{i<=j} Q_ij x_i x_j + offset`.

mod builder;
mod ising;
mod maxcut;
mod registry;
mod text;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use builder::{bits_for, BuiltModel, LinearExpr, PenaltyTerm, QuboBuilder};
pub use ising::{IsingModel, SpinConfig};
pub use maxcut::{ising_to_maxcut, MaxCutGraph};
pub use registry::{ConstraintId, VarName, VarRegistry};

/// A 0/1 vector. Serializes as a string of `0`/`1` characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Bits of `value` in little-endian order, `len` wide.
    pub fn from_index(value: u64, len: usize) -> Self {
        Self { bits: (0..len).map(|i| i < 64 && value >> i & 1 == 1).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bits.iter().try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

impl std::str::FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("assignment character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sparse upper-triangular QUBO with a constant offset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Qubo {
    size: usize,
    terms: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl Qubo {
    pub fn new(size: usize) -> Self {
        Self { size, terms: BTreeMap::new(), offset: 0.0 }
    }

    /// Accumulates `terms` (pairs in either order) into a model, dropping
    /// coefficients that sum to zero.
    pub fn from_terms(
        size: usize,
        terms: impl IntoIterator<Item = ((usize, usize), f64)>,
        offset: f64,
    ) -> Result<Self> {
        let mut q = Self::new(size);
        q.offset = offset;
        for ((i, j), c) in terms {
            q.add_term(i, j, c)?;
        }
        Ok(q)
    }

    pub fn add_term(&mut self, i: usize, j: usize, coeff: f64) -> Result<()> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if j >= self.size {
            return Err(Error::IndexOutOfRange(format!("term ({i},{j}) in model of size {}", self.size)));
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidParameter(format!("coefficient {coeff} at ({i},{j})")));
        }
        let entry = self.terms.entry((i, j)).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&(i, j));
        }
        Ok(())
    }

    pub fn add_offset(&mut self, value: f64) {
        self.offset += value;
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.terms.get(&key).copied().unwrap_or(0.0)
    }

    /// Non-zero terms in `(i, j)` order with `i <= j`.
    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    /// `sum_{i<=j} Q_ij x_i x_j + offset`.
    pub fn energy(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.size {
            return Err(Error::LengthMismatch { expected: self.size, found: x.len() });
        }
        Ok(self.energy_unchecked(x.bits()))
    }

    pub(crate) fn energy_unchecked(&self, bits: &[bool]) -> f64 {
        self.terms
            .iter()
            .filter(|(&(i, j), _)| bits[i] && bits[j])
            .map(|(_, &c)| c)
            .sum::<f64>()
            + self.offset
    }

    /// Largest absolute coefficient (0 for an empty model).
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Ising image under `x = (s + 1) / 2`.
    pub fn to_ising(&self) -> IsingModel {
        IsingModel::from_qubo(self)
    }

    pub fn to_text(&self, registry: Option<&VarRegistry>) -> String {
        text::write(self, registry)
    }

    pub fn from_text(source: &str) -> Result<Self> {
        text::parse(source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        let q = Qubo::from_terms(1, [((0, 0), -1.0)], 0.0).unwrap();
        assert_eq!(q.energy(&Assignment::from_bits(vec![true])).unwrap(), -1.0);

        let q = Qubo::from_terms(2, [((0, 1), 2.0)], 3.0).unwrap();
        assert_eq!(q.energy(&Assignment::from_bits(vec![true, true])).unwrap(), 5.0);
        assert_eq!(q.energy(&Assignment::zeros(2)).unwrap(), 3.0);
        assert!(matches!(
            q.energy(&Assignment::zeros(3)),
            Err(Error::LengthMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn terms_stay_upper_triangular_and_nonzero() {
        let q = Qubo::from_terms(3, [((2, 0), 1.5), ((0, 2), -1.5), ((1, 0), 2.0)], 0.0).unwrap();
        assert_eq!(q.terms().collect::<Vec<_>>(), vec![((0, 1), 2.0)]);
        assert!(Qubo::from_terms(2, [((0, 2), 1.0)], 0.0).is_err());
    }

    #[test]
    fn assignment_string_form() {
        let a: Assignment = "0110".parse().unwrap();
        assert_eq!(a.bits(), &[false, true, true, false]);
        assert_eq!(a.to_string(), "0110");
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"0110\"");
        assert!("012".parse::<Assignment>().is_err());
        assert_eq!(Assignment::from_index(0b101, 4).to_string(), "1010");
    }
}
