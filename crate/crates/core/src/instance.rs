//! RSRP measurement records and the beam-selection problem instance.
//!
//! Raw measurements are negative dBm readings. The linearized models need
//! non-negative integers, so every instance carries the affine
//! [`ScalingParams`] that produced its integer tensor; thresholds given in
//! dBm are converted through the same parameters.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "grid_id,cell_id,beam_id,rsrp_dbm";
const HEADER_FIELDS: [&str; 4] = ["grid_id", "cell_id", "beam_id", "rsrp_dbm"];

/// One raw measurement: RSRP of `beam_id` of `cell_id` observed at `grid_id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsrpRecord {
    pub grid_id: u64,
    pub cell_id: u64,
    pub beam_id: u64,
    pub rsrp_dbm: f64,
}

/// Affine map from dBm to the integer RSRP scale: `round((dbm + offset) * scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub offset: f64,
    pub scale: f64,
}

impl ScalingParams {
    /// Resolution used by [`Scaling::Auto`]: 0.1 dB per integer step.
    pub const AUTO_SCALE: f64 = 10.0;

    pub fn new(offset: f64, scale: f64) -> Result<Self> {
        if !offset.is_finite() || !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "scaling needs finite offset and positive scale, got offset={offset} scale={scale}"
            )));
        }
        Ok(Self { offset, scale })
    }

    /// Scaled value before the non-negativity check.
    pub fn scale_raw(&self, rsrp_dbm: f64) -> f64 {
        ((rsrp_dbm + self.offset) * self.scale).round()
    }

    pub fn to_scaled(&self, rsrp_dbm: f64) -> Result<u32> {
        let scaled = self.scale_raw(rsrp_dbm);
        if scaled < 0.0 || scaled.is_nan() {
            return Err(Error::NegativeScaled { rsrp_dbm, scaled });
        }
        if scaled > u32::MAX as f64 {
            return Err(Error::InvalidParameter(format!(
                "rsrp {rsrp_dbm} dBm scales beyond the integer range"
            )));
        }
        Ok(scaled as u32)
    }

    pub fn to_dbm(&self, scaled: u32) -> f64 {
        scaled as f64 / self.scale - self.offset
    }

    /// Absolute threshold in dBm to scaled units, clamped at zero.
    pub fn threshold_to_scaled(&self, dbm: f64) -> u32 {
        self.scale_raw(dbm).clamp(0.0, u32::MAX as f64) as u32
    }

    /// Relative gap in dB to scaled units (offset does not apply).
    pub fn gap_to_scaled(&self, db: f64) -> u32 {
        (db * self.scale).round().clamp(0.0, u32::MAX as f64) as u32
    }
}

/// How [`build_instance`] chooses its scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    /// `offset = -min(rsrp_dbm)`, `scale = 10`.
    Auto,
    Fixed(ScalingParams),
}

/// A beam-selection instance with dense 0-based grid, cell and beam indices.
///
/// `rsrp[i][slot][k]` holds the scaled RSRP of beam `k` of cell
/// `coverage[i][slot]` at grid `i`. `None` marks a beam that never reaches the
/// grid; it is excluded from every maximum rather than treated as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    m: usize,
    v: usize,
    n: usize,
    coverage: Vec<Vec<usize>>,
    rsrp: Vec<Vec<Vec<Option<u32>>>>,
    big_m: u32,
    scaling: ScalingParams,
}

impl Instance {
    /// Assembles an instance, checking every shape invariant and computing `M`.
    pub fn new(
        v: usize,
        n: usize,
        coverage: Vec<Vec<usize>>,
        rsrp: Vec<Vec<Vec<Option<u32>>>>,
        scaling: ScalingParams,
    ) -> Result<Self> {
        let m = coverage.len();
        if m == 0 || v == 0 || n == 0 {
            return Err(Error::InvalidInstance(format!(
                "grid, cell and beam counts must be positive (m={m}, v={v}, n={n})"
            )));
        }
        if rsrp.len() != m {
            return Err(Error::InvalidInstance(format!(
                "rsrp has {} grids, coverage has {m}",
                rsrp.len()
            )));
        }
        let mut big_m = 0;
        for (i, (cells, rows)) in coverage.iter().zip(&rsrp).enumerate() {
            if cells.is_empty() {
                return Err(Error::InvalidInstance(format!("grid {i} has no covering cell")));
            }
            if cells.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInstance(format!(
                    "coverage of grid {i} must be strictly increasing"
                )));
            }
            if let Some(&j) = cells.iter().find(|&&j| j >= v) {
                return Err(Error::InvalidInstance(format!("grid {i} references cell {j} >= {v}")));
            }
            if rows.len() != cells.len() {
                return Err(Error::InvalidInstance(format!(
                    "grid {i}: {} rsrp rows for {} cells",
                    rows.len(),
                    cells.len()
                )));
            }
            for (row, &j) in rows.iter().zip(cells) {
                if row.len() != n {
                    return Err(Error::InvalidInstance(format!(
                        "grid {i} cell {j}: {} beams, expected {n}",
                        row.len()
                    )));
                }
                if row.iter().all(Option::is_none) {
                    return Err(Error::InvalidInstance(format!(
                        "cell {j} covers grid {i} without any measured beam"
                    )));
                }
                big_m = row.iter().flatten().fold(big_m, |acc, &s| acc.max(s));
            }
        }
        Ok(Self { m, v, n, coverage, rsrp, big_m, scaling })
    }

    pub fn grids(&self) -> usize {
        self.m
    }

    pub fn cells(&self) -> usize {
        self.v
    }

    pub fn beams(&self) -> usize {
        self.n
    }

    /// The big-M constant: the largest defined scaled RSRP.
    pub fn big_m(&self) -> u32 {
        self.big_m
    }

    pub fn scaling(&self) -> ScalingParams {
        self.scaling
    }

    /// Sorted covering cells `V_i` of grid `i`.
    pub fn coverage(&self, grid: usize) -> &[usize] {
        &self.coverage[grid]
    }

    /// Per-beam RSRP of the `slot`-th covering cell of `grid`.
    pub fn rsrp_row(&self, grid: usize, slot: usize) -> &[Option<u32>] {
        &self.rsrp[grid][slot]
    }

    pub fn slot_of(&self, grid: usize, cell: usize) -> Option<usize> {
        self.coverage[grid].binary_search(&cell).ok()
    }

    /// `s_ijk` addressed by cell id; `None` when the cell does not cover the
    /// grid or the beam has no measurement there.
    pub fn rsrp(&self, grid: usize, cell: usize, beam: usize) -> Option<u32> {
        let slot = self.slot_of(grid, cell)?;
        self.rsrp[grid][slot].get(beam).copied().flatten()
    }

    /// Iterates `(grid, cell, beam, s)` over all defined entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, u32)> + '_ {
        self.coverage.iter().enumerate().flat_map(move |(i, cells)| {
            cells.iter().enumerate().flat_map(move |(slot, &j)| {
                self.rsrp[i][slot]
                    .iter()
                    .enumerate()
                    .filter_map(move |(k, s)| s.map(|s| (i, j, k, s)))
            })
        })
    }

    /// `s̄_ijk = [s_ijk >= delta1]`, laid out like [`Instance::rsrp_row`].
    pub fn binarize(&self, delta1: u32) -> BinaryRsrp {
        let bits = self
            .rsrp
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|row| row.iter().map(|s| s.is_some_and(|s| s >= delta1)).collect())
                    .collect()
            })
            .collect();
        BinaryRsrp { bits }
    }

    /// Records in dBm, one per defined entry, in grid/cell/beam order.
    pub fn to_records(&self) -> Vec<RsrpRecord> {
        self.entries()
            .map(|(i, j, k, s)| RsrpRecord {
                grid_id: i as u64,
                cell_id: j as u64,
                beam_id: k as u64,
                rsrp_dbm: self.scaling.to_dbm(s),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Thresholded coverage indicator `s̄_ijk`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryRsrp {
    bits: Vec<Vec<Vec<bool>>>,
}

impl BinaryRsrp {
    pub fn get(&self, grid: usize, slot: usize, beam: usize) -> bool {
        self.bits[grid][slot][beam]
    }

    pub fn row(&self, grid: usize, slot: usize) -> &[bool] {
        &self.bits[grid][slot]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().flatten().flatten().filter(|&&b| b).count()
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    m: usize,
    v: usize,
    n: usize,
    coverage: Vec<Vec<usize>>,
    /// `[grid, cell, beam, scaled_rsrp]`
    rsrp: Vec<(usize, usize, usize, u32)>,
    scaling: ScalingParams,
}

impl From<Instance> for InstanceDoc {
    fn from(inst: Instance) -> Self {
        let rsrp = inst.entries().collect();
        InstanceDoc { m: inst.m, v: inst.v, n: inst.n, coverage: inst.coverage, rsrp, scaling: inst.scaling }
    }
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        if doc.coverage.len() != doc.m {
            return Err(Error::InvalidInstance(format!(
                "m={} but coverage lists {} grids",
                doc.m,
                doc.coverage.len()
            )));
        }
        let scaling = ScalingParams::new(doc.scaling.offset, doc.scaling.scale)?;
        let mut rsrp: Vec<Vec<Vec<Option<u32>>>> =
            doc.coverage.iter().map(|cells| vec![vec![None; doc.n]; cells.len()]).collect();
        for (i, j, k, s) in doc.rsrp {
            let slot = doc
                .coverage
                .get(i)
                .and_then(|cells| cells.iter().position(|&c| c == j))
                .ok_or_else(|| {
                    Error::InvalidInstance(format!("rsrp entry ({i},{j},{k}) outside coverage"))
                })?;
            let cell = rsrp[i][slot].get_mut(k).ok_or_else(|| {
                Error::InvalidInstance(format!("rsrp entry ({i},{j},{k}) beam out of range"))
            })?;
            if cell.replace(s).is_some() {
                return Err(Error::InvalidInstance(format!("duplicate rsrp entry ({i},{j},{k})")));
            }
        }
        Instance::new(doc.v, doc.n, doc.coverage, rsrp, scaling)
    }
}

/// Parses `grid_id,cell_id,beam_id,rsrp_dbm` CSV text.
pub fn parse_records<R: Read>(source: R) -> Result<Vec<RsrpRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header_ok = match reader.headers() {
        Ok(h) => h.iter().eq(HEADER_FIELDS.iter().copied()),
        Err(_) => false,
    };
    if !header_ok {
        return Err(Error::MissingHeader { expected: CSV_HEADER });
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let malformed = |reason: String| Error::MalformedRow { line, reason };
        if row.len() != 4 {
            return Err(malformed(format!("expected 4 fields, found {}", row.len())));
        }
        let id = |idx: usize| {
            row[idx]
                .parse::<u64>()
                .map_err(|e| malformed(format!("{}: `{}`: {e}", HEADER_FIELDS[idx], &row[idx])))
        };
        let (grid_id, cell_id, beam_id) = (id(0)?, id(1)?, id(2)?);
        let rsrp_dbm: f64 = row[3]
            .parse()
            .map_err(|e| malformed(format!("rsrp_dbm: `{}`: {e}", &row[3])))?;
        if !rsrp_dbm.is_finite() {
            return Err(malformed(format!("rsrp_dbm must be finite, got `{}`", &row[3])));
        }
        if !seen.insert((grid_id, cell_id, beam_id)) {
            return Err(Error::DuplicateRecord { grid: grid_id, cell: cell_id, beam: beam_id });
        }
        records.push(RsrpRecord { grid_id, cell_id, beam_id, rsrp_dbm });
    }
    Ok(records)
}

pub fn write_records<W: Write>(records: &[RsrpRecord], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(HEADER_FIELDS)?;
    for r in records {
        writer.write_record([
            r.grid_id.to_string(),
            r.cell_id.to_string(),
            r.beam_id.to_string(),
            r.rsrp_dbm.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Builds an instance from raw records, re-indexing grid, cell and beam ids
/// densely in ascending id order.
pub fn build_instance(records: &[RsrpRecord], scaling: Scaling) -> Result<Instance> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scaling = match scaling {
        Scaling::Fixed(p) => ScalingParams::new(p.offset, p.scale)?,
        Scaling::Auto => {
            let min = records.iter().map(|r| r.rsrp_dbm).fold(f64::INFINITY, f64::min);
            ScalingParams::new(-min, ScalingParams::AUTO_SCALE)?
        }
    };

    let dense = |ids: BTreeSet<u64>| -> BTreeMap<u64, usize> {
        ids.into_iter().enumerate().map(|(i, id)| (id, i)).collect()
    };
    let grids = dense(records.iter().map(|r| r.grid_id).collect());
    let cells = dense(records.iter().map(|r| r.cell_id).collect());
    let beams = dense(records.iter().map(|r| r.beam_id).collect());
    let n = beams.len();

    let mut per_grid: Vec<BTreeMap<usize, Vec<Option<u32>>>> = vec![BTreeMap::new(); grids.len()];
    for r in records {
        let s = scaling.to_scaled(r.rsrp_dbm)?;
        let row = per_grid[grids[&r.grid_id]]
            .entry(cells[&r.cell_id])
            .or_insert_with(|| vec![None; n]);
        if row[beams[&r.beam_id]].replace(s).is_some() {
            return Err(Error::DuplicateRecord { grid: r.grid_id, cell: r.cell_id, beam: r.beam_id });
        }
    }

    let (coverage, rsrp) = per_grid
        .into_iter()
        .map(|by_cell| by_cell.into_iter().unzip::<_, _, Vec<_>, Vec<_>>())
        .unzip();
    Instance::new(cells.len(), n, coverage, rsrp, scaling)
}

/// Parameters of the synthetic instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub grids: usize,
    pub cells: usize,
    pub beams: usize,
    /// Inclusive range for `|V_i|`.
    pub cells_per_grid: (usize, usize),
    /// Inclusive range of scaled RSRP values.
    pub rsrp_range: (u32, u32),
    /// Permits `|V_i| = 1`.
    pub allow_single_cell: bool,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Scaling attached to generated instances: scaled 0 is -140 dBm at 0.1 dB steps.
    pub const SCALING: ScalingParams = ScalingParams { offset: 140.0, scale: 10.0 };

    pub fn new(grids: usize, cells: usize, beams: usize, seed: u64) -> Self {
        Self {
            grids,
            cells,
            beams,
            cells_per_grid: (cells.min(2), cells),
            rsrp_range: (0, 100),
            allow_single_cell: cells == 1,
            seed,
        }
    }
}

/// Draws a random instance: each grid picks `|V_i|` uniformly from the
/// configured range, then `V_i` uniformly, then every `s_ijk` uniformly.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Instance> {
    let &SyntheticSpec { grids, cells, beams, cells_per_grid: (lo, hi), rsrp_range, allow_single_cell, seed } =
        spec;
    if grids == 0 || cells == 0 || beams == 0 {
        return Err(Error::InvalidParameter("grid, cell and beam counts must be positive".into()));
    }
    let min_cells = if allow_single_cell { 1 } else { 2 };
    if lo > hi || hi > cells || lo < min_cells {
        return Err(Error::InvalidParameter(format!(
            "cells_per_grid {lo}..={hi} must lie within {min_cells}..={cells}"
        )));
    }
    if rsrp_range.0 > rsrp_range.1 {
        return Err(Error::InvalidParameter(format!(
            "empty rsrp range {}..={}",
            rsrp_range.0, rsrp_range.1
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coverage = Vec::with_capacity(grids);
    let mut rsrp = Vec::with_capacity(grids);
    for _ in 0..grids {
        let count = rng.random_range(lo..=hi);
        let mut covering = sample(&mut rng, cells, count).into_vec();
        covering.sort_unstable();
        let rows = covering
            .iter()
            .map(|_| (0..beams).map(|_| Some(rng.random_range(rsrp_range.0..=rsrp_range.1))).collect())
            .collect();
        coverage.push(covering);
        rsrp.push(rows);
    }
    Instance::new(cells, beams, coverage, rsrp, SyntheticSpec::SCALING)
}
