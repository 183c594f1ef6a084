use std::collections::BTreeMap;

use super::{Assignment, Qubo};
use crate::error::{Error, Result};

/// Spin vector over {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(s) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!("spin value {s}")));
        }
        Ok(Self { spins })
    }

    /// `s_i = 2 x_i - 1`.
    pub fn from_assignment(x: &Assignment) -> Self {
        Self { spins: x.bits().iter().map(|&b| if b { 1 } else { -1 }).collect() }
    }

    pub fn to_assignment(&self) -> Assignment {
        Assignment::from_bits(self.spins.iter().map(|&s| s > 0).collect())
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }
}

/// `H(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i + offset`.
///
/// Each unordered pair is stored once, strictly upper triangular.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsingModel {
    size: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    fields: Vec<f64>,
    offset: f64,
}

impl IsingModel {
    pub fn new(size: usize) -> Self {
        Self { size, couplings: BTreeMap::new(), fields: vec![0.0; size], offset: 0.0 }
    }

    pub fn add_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j {
            return Err(Error::InvalidParameter(format!("self coupling at spin {i}")));
        }
        let key = if i < j { (i, j) } else { (j, i) };
        if key.1 >= self.size {
            return Err(Error::IndexOutOfRange(format!("coupling ({i},{j}) for {} spins", self.size)));
        }
        let entry = self.couplings.entry(key).or_insert(0.0);
        *entry += value;
        if *entry == 0.0 {
            self.couplings.remove(&key);
        }
        Ok(())
    }

    pub fn add_field(&mut self, i: usize, value: f64) -> Result<()> {
        let size = self.size;
        let h = self
            .fields
            .get_mut(i)
            .ok_or_else(|| Error::IndexOutOfRange(format!("field {i} for {size} spins")))?;
        *h += value;
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

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.couplings.get(&key).copied().unwrap_or(0.0)
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&h| h != 0.0)
    }

    pub fn energy(&self, s: &SpinConfig) -> Result<f64> {
        if s.len() != self.size {
            return Err(Error::LengthMismatch { expected: self.size, found: s.len() });
        }
        Ok(self.energy_unchecked(s.spins()))
    }

    pub(crate) fn energy_unchecked(&self, s: &[i8]) -> f64 {
        let pair: f64 = self.couplings.iter().map(|(&(i, j), &v)| v * f64::from(s[i] * s[j])).sum();
        let field: f64 = self.fields.iter().zip(s).map(|(&h, &si)| h * f64::from(si)).sum();
        self.offset - pair - field
    }

    /// Substitutes `x = (s + 1) / 2` into `model`.
    pub fn from_qubo(model: &Qubo) -> Self {
        let mut ising = Self::new(model.size());
        ising.offset = model.offset();
        for ((i, j), q) in model.terms() {
            if i == j {
                // q x = q/2 s + q/2
                ising.fields[i] -= q / 2.0;
                ising.offset += q / 2.0;
            } else {
                // q x_i x_j = q/4 (s_i s_j + s_i + s_j + 1)
                let quarter = q / 4.0;
                ising.add_coupling(i, j, -quarter).expect("indices come from a valid model");
                ising.fields[i] -= quarter;
                ising.fields[j] -= quarter;
                ising.offset += quarter;
            }
        }
        ising
    }

    /// Substitutes `s = 2x - 1`.
    pub fn to_qubo(&self) -> Qubo {
        let mut q = Qubo::new(self.size);
        let mut offset = self.offset;
        for (&(i, j), &v) in &self.couplings {
            // -J (2x_i - 1)(2x_j - 1) = -4J x_i x_j + 2J x_i + 2J x_j - J
            q.add_term(i, j, -4.0 * v).expect("valid indices");
            q.add_term(i, i, 2.0 * v).expect("valid indices");
            q.add_term(j, j, 2.0 * v).expect("valid indices");
            offset -= v;
        }
        for (i, &h) in self.fields.iter().enumerate() {
            if h != 0.0 {
                q.add_term(i, i, -2.0 * h).expect("valid indices");
                offset += h;
            }
        }
        q.add_offset(offset);
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spins(v: &[i8]) -> SpinConfig {
        SpinConfig::new(v.to_vec()).unwrap()
    }

    #[test]
    fn linear_term_conversion() {
        let ising = Qubo::from_terms(1, [((0, 0), 1.0)], 0.0).unwrap().to_ising();
        assert_eq!(ising.fields(), &[-0.5]);
        assert_eq!(ising.offset(), 0.5);
        assert_eq!(ising.energy(&spins(&[-1])).unwrap(), 0.0);
        assert_eq!(ising.energy(&spins(&[1])).unwrap(), 1.0);
    }

    #[test]
    fn quadratic_term_conversion() {
        let ising = Qubo::from_terms(2, [((0, 1), 4.0)], 0.0).unwrap().to_ising();
        assert_eq!(ising.coupling(0, 1), -1.0);
        assert_eq!(ising.fields(), &[-1.0, -1.0]);
        assert_eq!(ising.offset(), 1.0);
    }

    #[test]
    fn empty_model_keeps_offset() {
        let ising = Qubo::from_terms(0, [], 2.5).unwrap().to_ising();
        assert_eq!(ising.size(), 0);
        assert_eq!(ising.couplings().count(), 0);
        assert_eq!(ising.offset(), 2.5);
    }

    #[test]
    fn hamiltonian_examples() {
        let mut m = IsingModel::new(2);
        m.add_coupling(0, 1, 1.0).unwrap();
        assert_eq!(m.energy(&spins(&[1, 1])).unwrap(), -1.0);
        assert_eq!(m.energy(&spins(&[1, -1])).unwrap(), 1.0);
        let mut h = IsingModel::new(1);
        h.add_field(0, 2.0).unwrap();
        assert_eq!(h.energy(&spins(&[-1])).unwrap(), 2.0);
        assert!(h.energy(&spins(&[1, 1])).is_err());
        assert!(SpinConfig::new(vec![0]).is_err());
        assert!(m.add_coupling(1, 1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn ising_to_qubo_round_trip(
            couplings in proptest::collection::vec((0usize..6, 0usize..6, -3.0f64..3.0), 0..10),
            fields in proptest::collection::vec(-3.0f64..3.0, 6),
            offset in -5.0f64..5.0,
            value in 0u64..64,
        ) {
            let mut m = IsingModel::new(6);
            for (i, j, v) in couplings {
                if i != j { m.add_coupling(i, j, v).unwrap(); }
            }
            for (i, h) in fields.into_iter().enumerate() { m.add_field(i, h).unwrap(); }
            m.add_offset(offset);
            let x = Assignment::from_index(value, 6);
            let e_ising = m.energy(&SpinConfig::from_assignment(&x)).unwrap();
            let e_qubo = m.to_qubo().energy(&x).unwrap();
            prop_assert!((e_ising - e_qubo).abs() <= 1e-9 * e_ising.abs().max(1.0));
        }
    }
}
