use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constraint identity used to name slack variables and penalty terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintId {
    /// `c_ij >= s_ijk x_jk`
    CLower { grid: usize, cell: usize, beam: usize },
    /// `c_ij <= s_ijk x_jk + (1 - d_ijk) M`
    CUpper { grid: usize, cell: usize, beam: usize },
    /// `sum_k d_ijk = 1`
    DOneHot { grid: usize, cell: usize },
    /// `a_i >= c_ij`
    ALower { grid: usize, cell: usize },
    /// `a_i <= c_ij + (1 - p_ij) M`
    AUpper { grid: usize, cell: usize },
    /// `sum_j p_ij = 1`
    POneHot { grid: usize },
    /// `b_i >= c_ij - p_ij M`
    BLower { grid: usize, cell: usize },
    /// `b_i <= c_ij + (1 - q_ij) M`
    BUpper { grid: usize, cell: usize },
    /// `sum_j q_ij = 2`
    QTwoHot { grid: usize },
    /// `delta1 - a_i <= M (1 - z_i)`
    ZThreshold { grid: usize },
    /// `delta2 - (a_i - b_i) <= M (1 - z_i)`
    ZGap { grid: usize },
    /// `sum_k x_jk <= r`
    Cardinality { cell: usize },
    /// `z_i <= sum_j sum_k x_jk s̄_ijk`
    Coverage { grid: usize },
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ConstraintId::*;
        match *self {
            CLower { grid, cell, beam } => write!(f, "c_lower({grid},{cell},{beam})"),
            CUpper { grid, cell, beam } => write!(f, "c_upper({grid},{cell},{beam})"),
            DOneHot { grid, cell } => write!(f, "d_onehot({grid},{cell})"),
            ALower { grid, cell } => write!(f, "a_lower({grid},{cell})"),
            AUpper { grid, cell } => write!(f, "a_upper({grid},{cell})"),
            POneHot { grid } => write!(f, "p_onehot({grid})"),
            BLower { grid, cell } => write!(f, "b_lower({grid},{cell})"),
            BUpper { grid, cell } => write!(f, "b_upper({grid},{cell})"),
            QTwoHot { grid } => write!(f, "q_twohot({grid})"),
            ZThreshold { grid } => write!(f, "z_threshold({grid})"),
            ZGap { grid } => write!(f, "z_gap({grid})"),
            Cardinality { cell } => write!(f, "cardinality({cell})"),
            Coverage { grid } => write!(f, "coverage({grid})"),
        }
    }
}

/// Structured name of one binary model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarName {
    X { cell: usize, beam: usize },
    Z { grid: usize },
    D { grid: usize, cell: usize, beam: usize },
    P { grid: usize, cell: usize },
    Q { grid: usize, cell: usize },
    ABit { grid: usize, bit: usize },
    BBit { grid: usize, bit: usize },
    CBit { grid: usize, cell: usize, bit: usize },
    Slack { constraint: ConstraintId, bit: usize },
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use VarName::*;
        match *self {
            X { cell, beam } => write!(f, "x({cell},{beam})"),
            Z { grid } => write!(f, "z({grid})"),
            D { grid, cell, beam } => write!(f, "d({grid},{cell},{beam})"),
            P { grid, cell } => write!(f, "p({grid},{cell})"),
            Q { grid, cell } => write!(f, "q({grid},{cell})"),
            ABit { grid, bit } => write!(f, "abit({grid},{bit})"),
            BBit { grid, bit } => write!(f, "bbit({grid},{bit})"),
            CBit { grid, cell, bit } => write!(f, "cbit({grid},{cell},{bit})"),
            Slack { constraint, bit } => write!(f, "slack({constraint},{bit})"),
        }
    }
}

/// Bijection between [`VarName`]s and flat QUBO indices `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarRegistry {
    names: Vec<VarName>,
    index: HashMap<VarName, usize>,
}

impl VarRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `name` and returns its index; names must be unique.
    pub fn register(&mut self, name: VarName) -> Result<usize> {
        if self.index.contains_key(&name) {
            return Err(Error::InvalidParameter(format!("variable {name} registered twice")));
        }
        let idx = self.names.len();
        self.names.push(name);
        self.index.insert(name, idx);
        Ok(idx)
    }

    pub fn index_of(&self, name: &VarName) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> Option<&VarName> {
        self.names.get(index)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &VarName)> {
        self.names.iter().enumerate()
    }

    /// Number of registered variables whose name satisfies `pred`.
    pub fn count(&self, pred: impl Fn(&VarName) -> bool) -> usize {
        self.names.iter().filter(|n| pred(n)).count()
    }
}
