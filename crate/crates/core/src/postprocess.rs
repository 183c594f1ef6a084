//! Post-selection of solver pools against the full model.
//!
//! A relaxed model (or a heuristic) proposes assignments; each of the best `k`
//! is decoded to a beam selection and scored with the exact objective. Only
//! the per-cell beam budget gates feasibility, since the thresholds decide
//! which grids count rather than which selections are allowed.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::Instance;
use crate::model_full::{check_feasibility_full, selection_from_assignment, BeamSelection, FullModelParams, GridDiagnostics};
use crate::qubo::VarRegistry;
use crate::solvers::SolutionPool;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub selection: BeamSelection,
    /// Satisfied grids under the full semantics.
    pub objective: usize,
    /// Model energy of the source assignment.
    pub energy: f64,
    pub feasible: bool,
    pub diagnostics: GridDiagnostics,
    /// Position of the source assignment in the pool.
    pub source_rank: usize,
}

/// Best feasible decoded entry among the first `k` of `pool`.
///
/// Ties on the objective prefer lower energy, then earlier pool position.
pub fn select_best_feasible(
    pool: &SolutionPool,
    reg: &VarRegistry,
    instance: &Instance,
    params: &FullModelParams,
    k: usize,
) -> Result<Option<Solution>> {
    let mut best: Option<Solution> = None;
    for (rank, entry) in pool.entries.iter().take(k).enumerate() {
        let selection = selection_from_assignment(reg, &entry.assignment, instance)?;
        let report = check_feasibility_full(instance, &selection, params)?;
        if !report.feasible {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => report.count > b.objective || (report.count == b.objective && entry.energy < b.energy),
        };
        if better {
            best = Some(Solution {
                selection,
                objective: report.count,
                energy: entry.energy,
                feasible: true,
                diagnostics: report.grids,
                source_rank: rank,
            });
        }
    }
    Ok(best)
}
