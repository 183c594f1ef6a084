//! Minimization backends.
//!
//! Every backend returns a [`SolutionPool`]: distinct assignments sorted by
//! ascending energy, with energies recomputed from the model rather than
//! carried over from incremental updates.

mod cim;
mod elimination;
mod exact;
mod sa;
mod tabu;

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::qubo::{Assignment, Qubo};

pub use cim::{solve_cim_sim, CimConfig, ErrorCorrection, PumpSchedule};
pub use elimination::{solve_exact_elimination, DEFAULT_MAX_WIDTH};
pub use exact::{solve_exact, ExactConfig, MAX_EXACT_SIZE};
pub use sa::{solve_sa, SaConfig};
pub use tabu::{solve_tabu, TabuConfig};

/// Default pool capacity; post-selection reads the best 100 entries.
pub const DEFAULT_POOL_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub assignment: Assignment,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolutionPool {
    pub entries: Vec<PoolEntry>,
    pub wall_time_seconds: f64,
    /// Objective or move evaluations performed by the solver.
    pub evaluations: u64,
}

impl SolutionPool {
    pub fn best(&self) -> Option<&PoolEntry> {
        self.entries.first()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The first `min(k, len)` entries, order preserved.
pub fn top_k(pool: &SolutionPool, k: usize) -> SolutionPool {
    SolutionPool {
        entries: pool.entries.iter().take(k).cloned().collect(),
        wall_time_seconds: pool.wall_time_seconds,
        evaluations: pool.evaluations,
    }
}

/// Bounded best-distinct collector ordered by `(energy, assignment)`.
#[derive(Debug, Clone)]
pub(crate) struct PoolCollector {
    capacity: usize,
    entries: Vec<(f64, Vec<bool>)>,
    seen: HashSet<Vec<bool>>,
}

impl PoolCollector {
    pub(crate) fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), entries: Vec::new(), seen: HashSet::new() }
    }

    /// Whether an entry at `energy` could currently enter the pool.
    pub(crate) fn admits(&self, energy: f64) -> bool {
        self.entries.len() < self.capacity || energy <= self.entries.last().map_or(f64::INFINITY, |e| e.0)
    }

    pub(crate) fn offer(&mut self, bits: &[bool], energy: f64) {
        if !self.admits(energy) || self.seen.contains(bits) {
            return;
        }
        let pos = self
            .entries
            .partition_point(|(e, b)| (*e, b.as_slice()) < (energy, bits));
        if pos >= self.capacity {
            return;
        }
        self.entries.insert(pos, (energy, bits.to_vec()));
        self.seen.insert(bits.to_vec());
        if self.entries.len() > self.capacity {
            let (_, dropped) = self.entries.pop().expect("over capacity");
            self.seen.remove(&dropped);
        }
    }

    /// Recomputes every energy from `energy_of` and returns the sorted pool.
    pub(crate) fn finish(
        self,
        energy_of: impl Fn(&[bool]) -> f64,
        wall_time_seconds: f64,
        evaluations: u64,
    ) -> SolutionPool {
        let mut entries: Vec<PoolEntry> = self
            .entries
            .into_iter()
            .map(|(_, bits)| {
                let energy = energy_of(&bits);
                PoolEntry { assignment: Assignment::from_bits(bits), energy }
            })
            .collect();
        entries.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.assignment.cmp(&b.assignment)));
        SolutionPool { entries, wall_time_seconds, evaluations }
    }
}

/// One sample of a CIM run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub roundtrip: usize,
    pub time_s: f64,
    pub energy: f64,
    pub cut_value: f64,
    pub best_energy: f64,
    /// Net linear gain of the leading collective mode, `p - 1 + beta * lambda`.
    /// The pump is above threshold once this turns non-negative. Not part of
    /// the CSV export.
    pub gain_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "roundtrip,time_s,energy,cut_value,best_energy";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(out, "{},{:?},{:?},{:?},{:?}", s.roundtrip, s.time_s, s.energy, s.cut_value, s.best_energy);
        }
        out
    }

    pub fn best_energy(&self) -> Option<f64> {
        self.samples.last().map(|s| s.best_energy)
    }

    /// Index of the first sample at or above threshold.
    pub fn threshold_index(&self) -> Option<usize> {
        self.samples.iter().position(|s| s.gain_margin >= 0.0)
    }
}

/// Symmetric adjacency view of a QUBO for single-flip local search.
#[derive(Debug, Clone)]
pub(crate) struct CompiledQubo {
    pub linear: Vec<f64>,
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl CompiledQubo {
    pub fn new(model: &Qubo) -> Self {
        let n = model.size();
        let mut linear = vec![0.0; n];
        let mut adjacency = vec![Vec::new(); n];
        for ((i, j), c) in model.terms() {
            if i == j {
                linear[i] += c;
            } else {
                adjacency[i].push((j, c));
                adjacency[j].push((i, c));
            }
        }
        Self { linear, adjacency }
    }

    pub fn size(&self) -> usize {
        self.linear.len()
    }

    /// `field[i] = sum_j Q_ij x_j` over off-diagonal neighbours.
    pub fn fields(&self, bits: &[bool]) -> Vec<f64> {
        self.adjacency
            .iter()
            .map(|row| row.iter().filter(|&&(j, _)| bits[j]).map(|&(_, c)| c).sum())
            .collect()
    }

    /// Energy change of flipping bit `i`.
    #[inline]
    pub fn delta(&self, bits: &[bool], fields: &[f64], i: usize) -> f64 {
        let gain = self.linear[i] + fields[i];
        if bits[i] {
            -gain
        } else {
            gain
        }
    }

    #[inline]
    pub fn flip(&self, bits: &mut [bool], fields: &mut [f64], i: usize) {
        bits[i] = !bits[i];
        let sign = if bits[i] { 1.0 } else { -1.0 };
        for &(j, c) in &self.adjacency[i] {
            fields[j] += sign * c;
        }
    }

    /// Largest possible single-flip energy change.
    pub fn max_flip_delta(&self) -> f64 {
        self.linear
            .iter()
            .zip(&self.adjacency)
            .map(|(l, row)| l.abs() + row.iter().map(|(_, c)| c.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Smallest non-zero coefficient magnitude.
    pub fn min_abs_coefficient(&self) -> f64 {
        self.linear
            .iter()
            .chain(self.adjacency.iter().flatten().map(|(_, c)| c))
            .map(|c| c.abs())
            .filter(|&c| c > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Independent stream for restart `index` of a run seeded with `seed`.
pub(crate) fn restart_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collector_keeps_best_distinct() {
        let mut c = PoolCollector::new(2);
        c.offer(&[true], 3.0);
        c.offer(&[false], 1.0);
        c.offer(&[false], 1.0);
        c.offer(&[true, true], 2.0);
        c.offer(&[false, false], 5.0);
        let pool = c.finish(|b| b.iter().filter(|&&x| x).count() as f64, 0.0, 0);
        let got: Vec<String> = pool.entries.iter().map(|e| e.assignment.to_string()).collect();
        assert_eq!(got, vec!["0", "11"]);
    }

    #[test]
    fn top_k_truncates() {
        let pool = SolutionPool {
            entries: (0..5).map(|i| PoolEntry { assignment: Assignment::from_index(i, 3), energy: i as f64 }).collect(),
            ..Default::default()
        };
        assert_eq!(top_k(&pool, 3).entries, pool.entries[..3].to_vec());
        assert_eq!(top_k(&pool, 100).entries, pool.entries);
    }

    #[test]
    fn trajectory_csv_header() {
        let t = Trajectory {
            samples: vec![TrajectorySample { roundtrip: 1, time_s: 2.11e-6, energy: -1.0, cut_value: 0.5, best_energy: -1.0, gain_margin: 0.0 }],
        };
        assert_eq!(t.to_csv(), "roundtrip,time_s,energy,cut_value,best_energy\n1,2.11e-6,-1.0,0.5,-1.0\n");
    }
}
