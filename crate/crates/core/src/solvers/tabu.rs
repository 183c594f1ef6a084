use std::time::Instant;

use rand::Rng;

use super::{restart_rng, CompiledQubo, PoolCollector, SolutionPool, DEFAULT_POOL_SIZE};
use crate::error::{Error, Result};
use crate::qubo::Qubo;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabuConfig {
    /// Iterations a flipped variable stays tabu. Clamped to `size - 1` so at
    /// least one move is always admissible.
    pub tenure: usize,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub pool_size: usize,
}

impl Default for TabuConfig {
    fn default() -> Self {
        Self { tenure: 10, max_iterations: 2000, restarts: 10, seed: 0, pool_size: DEFAULT_POOL_SIZE }
    }
}

impl TabuConfig {
    pub fn for_model(model: &Qubo, seed: u64) -> Self {
        let n = model.size();
        Self { tenure: (n / 8).clamp(1, 20), max_iterations: (20 * n).max(100), seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tenure == 0 || self.max_iterations == 0 || self.restarts == 0 || self.pool_size == 0 {
            return Err(Error::InvalidParameter(
                "tenure, max_iterations, restarts and pool_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Steepest single-flip descent with a recency tabu list and aspiration.
///
/// Ties between equally good moves are broken uniformly at random.
pub fn solve_tabu(model: &Qubo, config: &TabuConfig) -> Result<SolutionPool> {
    config.validate()?;
    let start = Instant::now();
    let compiled = CompiledQubo::new(model);
    let n = compiled.size();
    let tenure = config.tenure.min(n.saturating_sub(1));
    let mut pool = PoolCollector::new(config.pool_size);
    let mut evaluations = 0u64;

    for restart in 0..config.restarts {
        let mut rng = restart_rng(config.seed, restart as u64);
        let mut bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let mut fields = compiled.fields(&bits);
        let mut energy = model.energy_unchecked(&bits);
        let mut best = energy;
        let mut tabu_until = vec![0usize; n];
        pool.offer(&bits, energy);
        if n == 0 {
            continue;
        }
        for iter in 1..=config.max_iterations {
            let mut chosen = None;
            let mut chosen_delta = f64::INFINITY;
            let mut ties = 0u32;
            for i in 0..n {
                let delta = compiled.delta(&bits, &fields, i);
                let admissible = tabu_until[i] < iter || energy + delta < best;
                if !admissible {
                    continue;
                }
                if delta < chosen_delta {
                    chosen = Some(i);
                    chosen_delta = delta;
                    ties = 1;
                } else if delta == chosen_delta {
                    ties += 1;
                    if rng.random_range(0..ties) == 0 {
                        chosen = Some(i);
                    }
                }
            }
            evaluations += n as u64;
            let i = chosen.expect("tenure below size leaves a move");
            compiled.flip(&mut bits, &mut fields, i);
            energy += chosen_delta;
            tabu_until[i] = iter + tenure;
            if energy < best {
                best = energy;
            }
            if pool.admits(energy) {
                pool.offer(&bits, model.energy_unchecked(&bits));
            }
        }
    }
    Ok(pool.finish(|b| model.energy_unchecked(b), start.elapsed().as_secs_f64(), evaluations))
}
