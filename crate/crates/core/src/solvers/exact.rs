use std::time::Instant;

use super::{CompiledQubo, PoolCollector, SolutionPool, DEFAULT_POOL_SIZE};
use crate::error::{Error, Result};
use crate::qubo::Qubo;

pub const MAX_EXACT_SIZE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactConfig {
    /// How many of the lowest-energy assignments to keep.
    pub pool_size: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { pool_size: DEFAULT_POOL_SIZE }
    }
}

/// Exhaustive Gray-code enumeration.
///
/// Among equal energies the lexicographically smallest assignment ranks first.
pub fn solve_exact(model: &Qubo, config: &ExactConfig) -> Result<SolutionPool> {
    let n = model.size();
    if n > MAX_EXACT_SIZE {
        return Err(Error::TooLarge(format!("exact enumeration supports at most {MAX_EXACT_SIZE} variables, got {n}")));
    }
    let start = Instant::now();
    let compiled = CompiledQubo::new(model);
    let mut bits = vec![false; n];
    let mut fields = vec![0.0; n];
    let mut energy = model.offset();
    let tol = 1e-9 * (1.0 + model.max_abs_coefficient() * n as f64);
    let mut pool = PoolCollector::new(config.pool_size);
    pool.offer(&bits, energy);

    let total: u64 = 1 << n;
    for g in 1..total {
        let i = g.trailing_zeros() as usize;
        energy += compiled.delta(&bits, &fields, i);
        compiled.flip(&mut bits, &mut fields, i);
        if pool.admits(energy - tol) {
            pool.offer(&bits, model.energy_unchecked(&bits));
        }
    }
    Ok(pool.finish(|b| model.energy_unchecked(b), start.elapsed().as_secs_f64(), total))
}
