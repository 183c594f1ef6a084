use super::{IsingModel, SpinConfig};
use crate::error::{Error, Result};

/// Weighted graph whose maximum cut is the ground state of an Ising model.
///
/// Edge weights are `-J_ij`; with non-zero fields an ancilla node pinned to
/// spin +1 carries edges of weight `-h_i`. For every spin configuration
/// `H(s) = energy_offset - cut_scale * cut(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxCutGraph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub ancilla: Option<usize>,
    pub energy_offset: f64,
    pub cut_scale: f64,
}

/// Reformulates `model` as weighted Max-Cut.
pub fn ising_to_maxcut(model: &IsingModel) -> MaxCutGraph {
    let spins = model.size();
    let ancilla = model.has_fields().then_some(spins);
    let mut edges: Vec<(usize, usize, f64)> = model.couplings().map(|((i, j), v)| (i, j, -v)).collect();
    if let Some(a) = ancilla {
        edges.extend(
            model.fields().iter().enumerate().filter(|(_, &h)| h != 0.0).map(|(i, &h)| (i, a, -h)),
        );
    }
    // s_u s_v = 1 - 2 [u, v split], so H = offset - sum J - sum h + 2 sum_{cut} J
    //                                     = offset + sum w - 2 cut_w.
    let total: f64 = edges.iter().map(|e| e.2).sum();
    MaxCutGraph {
        nodes: spins + usize::from(ancilla.is_some()),
        edges,
        ancilla,
        energy_offset: model.offset() + total,
        cut_scale: 2.0,
    }
}

impl MaxCutGraph {
    /// Total weight of edges with exactly one endpoint in `side`.
    pub fn cut_value(&self, side: &[usize]) -> Result<f64> {
        let mut member = vec![false; self.nodes];
        for &u in side {
            *member.get_mut(u).ok_or(Error::UnknownNode(u))? = true;
        }
        Ok(self.cut_of_membership(&member))
    }

    fn cut_of_membership(&self, member: &[bool]) -> f64 {
        self.edges.iter().filter(|&&(u, v, _)| member[u] != member[v]).map(|e| e.2).sum()
    }

    /// Nodes on the +1 side for `spins` (the ancilla is always there).
    pub fn partition_of(&self, spins: &SpinConfig) -> Result<Vec<usize>> {
        let expected = self.nodes - usize::from(self.ancilla.is_some());
        if spins.len() != expected {
            return Err(Error::LengthMismatch { expected, found: spins.len() });
        }
        let mut side: Vec<usize> = (0..spins.len()).filter(|&i| spins.spins()[i] > 0).collect();
        side.extend(self.ancilla);
        Ok(side)
    }

    pub fn cut_of_spins(&self, spins: &SpinConfig) -> Result<f64> {
        self.cut_value(&self.partition_of(spins)?)
    }

    pub fn energy_from_cut(&self, cut: f64) -> f64 {
        self.energy_offset - self.cut_scale * cut
    }

    pub fn cut_from_energy(&self, energy: f64) -> f64 {
        (self.energy_offset - energy) / self.cut_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_graph(nodes: usize, edges: &[(usize, usize)]) -> MaxCutGraph {
        MaxCutGraph {
            nodes,
            edges: edges.iter().map(|&(u, v)| (u, v, 1.0)).collect(),
            ancilla: None,
            energy_offset: 0.0,
            cut_scale: 2.0,
        }
    }

    #[test]
    fn cut_value_examples() {
        let tri = unit_graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(tri.cut_value(&[0]).unwrap(), 2.0);
        assert_eq!(tri.cut_value(&[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(tri.cut_value(&[]).unwrap(), 0.0);
        assert!(matches!(tri.cut_value(&[3]), Err(Error::UnknownNode(3))));

        let k4 = unit_graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(k4.cut_value(&[0, 1]).unwrap(), 4.0);
    }

    #[test]
    fn ferromagnet_pair() {
        let mut m = IsingModel::new(2);
        m.add_coupling(0, 1, 1.0).unwrap();
        let g = ising_to_maxcut(&m);
        assert_eq!((g.nodes, g.edges.len(), g.ancilla), (2, 1, None));
        let aligned = SpinConfig::new(vec![1, 1]).unwrap();
        let split = SpinConfig::new(vec![1, -1]).unwrap();
        // Aligned spins are the ground state and the maximum cut (weight -1 edge left uncut).
        assert!(g.cut_of_spins(&aligned).unwrap() > g.cut_of_spins(&split).unwrap());
        for s in [aligned, split] {
            let cut = g.cut_of_spins(&s).unwrap();
            assert_eq!(g.energy_from_cut(cut), m.energy(&s).unwrap());
        }
    }

    #[test]
    fn field_adds_ancilla() {
        let mut m = IsingModel::new(1);
        m.add_field(0, 1.0).unwrap();
        let g = ising_to_maxcut(&m);
        assert_eq!((g.nodes, g.ancilla), (2, Some(1)));
        for s in [1i8, -1] {
            let s = SpinConfig::new(vec![s]).unwrap();
            assert_eq!(g.energy_from_cut(g.cut_of_spins(&s).unwrap()), m.energy(&s).unwrap());
        }
    }
}
