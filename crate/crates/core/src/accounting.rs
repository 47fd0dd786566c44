//! Gate/bit accounting for block state preparation.
//!
//! The total rate of a set of blocks is
//! `br = q_ones + s_state + s_bit + a_bit + b_e`, where
//!
//! * `q_ones` counts the set magnitude bits (one controlled-X each),
//! * `s_state` is the state-connection cost, `log2 S_X + log2 S_Y + 2` bits per
//!   non-zero coefficient for the reset-based circuit and
//!   `2 (log2 S_X + log2 S_Y + 1)` for the double-Toffoli baseline,
//! * `s_bit` is one sign bit per non-zero coefficient,
//! * `a_bit` is one auxiliary engagement per non-zero coefficient,
//! * `b_e` is the block-address overhead (see [`BlockAddressMode`]).
//!
//! All quantities are exact integers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::block::{popcount_ones, BlockError, BlockGrid, QuantumBlock, RegisterLayout};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AccountingError {
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error("block grid must be at least 1x1, got {0}x{1}")]
    EmptyGrid(usize, usize),
    #[error("block {bx},{by} does not match the register layout")]
    LayoutMismatch { bx: usize, by: usize },
    #[error("reports come from different inputs: {0}")]
    ProvenanceMismatch(String),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("unknown block-address mode `{0}`")]
    UnknownAddressMode(String),
    #[error("bad report record: {0}")]
    BadRecord(String),
}

/// Per-coefficient state-connection cost of a preparation scheme.
pub trait ConnectionCost {
    fn name(&self) -> String;
    fn per_coefficient_bits(&self, n_pos_x: u32, n_pos_y: u32) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Toffoli connect, then reset of the auxiliary qubit.
    Scmneqr,
    /// Toffoli connect, then the same Toffoli again to uncompute.
    Efrqi,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Scmneqr, Scheme::Efrqi];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Scmneqr => "SCMNEQR",
            Scheme::Efrqi => "EFRQI",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = AccountingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SCMNEQR" => Ok(Scheme::Scmneqr),
            "EFRQI" => Ok(Scheme::Efrqi),
            _ => Err(AccountingError::UnknownScheme(s.to_string())),
        }
    }
}

impl ConnectionCost for Scheme {
    fn name(&self) -> String {
        self.as_str().to_string()
    }

    fn per_coefficient_bits(&self, n_pos_x: u32, n_pos_y: u32) -> u64 {
        match self {
            Scheme::Scmneqr => (n_pos_x + n_pos_y) as u64 + 1 + 1,
            Scheme::Efrqi => EfrqiModel::default().per_coefficient_bits(n_pos_x, n_pos_y),
        }
    }
}

/// Double-Toffoli baseline with an adjustable number of Toffoli passes, for
/// sensitivity runs. Two passes is the standard baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EfrqiModel {
    pub toffoli_passes: u64,
}

impl Default for EfrqiModel {
    fn default() -> Self {
        Self { toffoli_passes: 2 }
    }
}

impl ConnectionCost for EfrqiModel {
    fn name(&self) -> String {
        if self.toffoli_passes == 2 {
            Scheme::Efrqi.name()
        } else {
            format!("EFRQI-x{}", self.toffoli_passes)
        }
    }

    fn per_coefficient_bits(&self, n_pos_x: u32, n_pos_y: u32) -> u64 {
        self.toffoli_passes * ((n_pos_x + n_pos_y) as u64 + 1)
    }
}

/// How the block-position overhead `b_e` is charged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum BlockAddressMode {
    /// Address bits of the block grid, once per non-empty block.
    #[default]
    PerBlockAddress,
    /// Address bits once per image, if any block is non-empty.
    Fixed,
    /// Address bits for every non-zero coefficient.
    PerCoefficient,
}

impl BlockAddressMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockAddressMode::PerBlockAddress => "per-block-address",
            BlockAddressMode::Fixed => "fixed",
            BlockAddressMode::PerCoefficient => "per-coefficient",
        }
    }
}

impl fmt::Display for BlockAddressMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockAddressMode {
    type Err = AccountingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-block-address" => Ok(Self::PerBlockAddress),
            "fixed" => Ok(Self::Fixed),
            "per-coefficient" => Ok(Self::PerCoefficient),
            _ => Err(AccountingError::UnknownAddressMode(s.to_string())),
        }
    }
}

fn block_log2s(block: &QuantumBlock) -> Result<(u32, u32), AccountingError> {
    let lx = block.s_x();
    let ly = block.s_y();
    if !lx.is_power_of_two() {
        return Err(BlockError::NotPowerOfTwo(lx).into());
    }
    if !ly.is_power_of_two() {
        return Err(BlockError::NotPowerOfTwo(ly).into());
    }
    Ok((lx.trailing_zeros(), ly.trailing_zeros()))
}

pub fn s_state_with(block: &QuantumBlock, cost: &dyn ConnectionCost) -> Result<u64, AccountingError> {
    let (nx, ny) = block_log2s(block)?;
    Ok(cost.per_coefficient_bits(nx, ny) * block.n_tcn() as u64)
}

/// `(log2 S_X + log2 S_Y + 1 + 1) * N_tcn`.
pub fn s_state_scmneqr(block: &QuantumBlock) -> Result<u64, AccountingError> {
    s_state_with(block, &Scheme::Scmneqr)
}

/// `2 (log2 S_X + log2 S_Y + 1) * N_tcn`.
pub fn s_state_efrqi(block: &QuantumBlock) -> Result<u64, AccountingError> {
    s_state_with(block, &Scheme::Efrqi)
}

#[inline]
fn ceil_log2(n: usize) -> u64 {
    n.next_power_of_two().trailing_zeros() as u64
}

/// Bits needed to name one block of the grid.
pub fn grid_address_bits(grid: BlockGrid) -> u64 {
    ceil_log2(grid.blocks_x) + ceil_log2(grid.blocks_y)
}

/// `ceil(log2 blocks_x) + ceil(log2 blocks_y)` for a non-empty block, else 0.
pub fn block_position_bits(
    block: &QuantumBlock,
    blocks_x: usize,
    blocks_y: usize,
) -> Result<u64, AccountingError> {
    if blocks_x == 0 || blocks_y == 0 {
        return Err(AccountingError::EmptyGrid(blocks_x, blocks_y));
    }
    Ok(if block.is_empty() {
        0
    } else {
        grid_address_bits(BlockGrid { blocks_x, blocks_y })
    })
}

/// Rate terms of one scheme over a set of blocks. `br` always equals the
/// sum of the five terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRateReport {
    scheme: String,
    q_ones: u64,
    s_state: u64,
    s_bit: u64,
    a_bit: u64,
    b_e: u64,
    br: u64,
    n_tcn: u64,
    clamped_count: u64,
    grid: BlockGrid,
    layout: RegisterLayout,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Terms {
    q_ones: u64,
    s_state: u64,
    s_bit: u64,
    a_bit: u64,
    b_e: u64,
    n_tcn: u64,
    clamped: u64,
}

impl std::ops::AddAssign for Terms {
    fn add_assign(&mut self, o: Self) {
        self.q_ones += o.q_ones;
        self.s_state += o.s_state;
        self.s_bit += o.s_bit;
        self.a_bit += o.a_bit;
        self.b_e += o.b_e;
        self.n_tcn += o.n_tcn;
        self.clamped += o.clamped;
    }
}

impl BitRateReport {
    fn from_terms(scheme: String, t: Terms, grid: BlockGrid, layout: RegisterLayout) -> Self {
        Self {
            scheme,
            q_ones: t.q_ones,
            s_state: t.s_state,
            s_bit: t.s_bit,
            a_bit: t.a_bit,
            b_e: t.b_e,
            br: t.q_ones + t.s_state + t.s_bit + t.a_bit + t.b_e,
            n_tcn: t.n_tcn,
            clamped_count: t.clamped,
            grid,
            layout,
        }
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }
    pub fn q_ones(&self) -> u64 {
        self.q_ones
    }
    pub fn s_state(&self) -> u64 {
        self.s_state
    }
    pub fn s_bit(&self) -> u64 {
        self.s_bit
    }
    pub fn a_bit(&self) -> u64 {
        self.a_bit
    }
    pub fn b_e(&self) -> u64 {
        self.b_e
    }
    pub fn br(&self) -> u64 {
        self.br
    }
    pub fn n_tcn(&self) -> u64 {
        self.n_tcn
    }
    pub fn clamped_count(&self) -> u64 {
        self.clamped_count
    }
    pub fn grid(&self) -> BlockGrid {
        self.grid
    }
    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    /// `br == q_ones + s_state + s_bit + a_bit + b_e`.
    pub fn identity_holds(&self) -> bool {
        self.q_ones
            .checked_add(self.s_state)
            .and_then(|v| v.checked_add(self.s_bit))
            .and_then(|v| v.checked_add(self.a_bit))
            .and_then(|v| v.checked_add(self.b_e))
            == Some(self.br)
    }

    /// `key=value` lines in a fixed order.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("scheme", self.scheme.clone()),
            ("n_tcn", self.n_tcn.to_string()),
            ("q_ones", self.q_ones.to_string()),
            ("s_state", self.s_state.to_string()),
            ("s_bit", self.s_bit.to_string()),
            ("a_bit", self.a_bit.to_string()),
            ("b_e", self.b_e.to_string()),
            ("br_bits", self.br.to_string()),
            ("clamped_count", self.clamped_count.to_string()),
            ("blocks_x", self.grid.blocks_x.to_string()),
            ("blocks_y", self.grid.blocks_y.to_string()),
            ("q", self.layout.q().to_string()),
            ("s_x", self.layout.s_x().to_string()),
            ("s_y", self.layout.s_y().to_string()),
        ]
    }

    /// Parses [`to_key_value`](Self::to_key_value) output. The `br_bits` line
    /// must agree with the sum of the terms.
    pub fn from_key_value(text: &str) -> Result<Self, AccountingError> {
        let map: BTreeMap<&str, &str> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| AccountingError::BadRecord(l.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let get = |k: &str| {
            map.get(k)
                .copied()
                .ok_or_else(|| AccountingError::BadRecord(format!("missing {k}")))
        };
        let num = |k: &str| -> Result<u64, AccountingError> {
            get(k)?
                .parse()
                .map_err(|_| AccountingError::BadRecord(format!("bad {k}")))
        };
        let layout = RegisterLayout::new(num("q")? as u32, num("s_x")? as usize, num("s_y")? as usize)?;
        let terms = Terms {
            q_ones: num("q_ones")?,
            s_state: num("s_state")?,
            s_bit: num("s_bit")?,
            a_bit: num("a_bit")?,
            b_e: num("b_e")?,
            n_tcn: num("n_tcn")?,
            clamped: num("clamped_count")?,
        };
        let grid = BlockGrid {
            blocks_x: num("blocks_x")? as usize,
            blocks_y: num("blocks_y")? as usize,
        };
        let report = Self::from_terms(get("scheme")?.to_string(), terms, grid, layout);
        if report.br != num("br_bits")? {
            return Err(AccountingError::BadRecord("br_bits disagrees with terms".into()));
        }
        Ok(report)
    }
}

fn block_terms(
    block: &QuantumBlock,
    cost: &dyn ConnectionCost,
    grid: BlockGrid,
    mode: BlockAddressMode,
) -> Result<Terms, AccountingError> {
    let n = block.n_tcn() as u64;
    let address = block_position_bits(block, grid.blocks_x, grid.blocks_y)?;
    Ok(Terms {
        q_ones: block.nonzeros().iter().map(|nz| popcount_ones(nz) as u64).sum(),
        s_state: s_state_with(block, cost)?,
        s_bit: n,
        a_bit: n,
        b_e: match mode {
            BlockAddressMode::PerBlockAddress => address,
            BlockAddressMode::Fixed => 0,
            BlockAddressMode::PerCoefficient => address * n,
        },
        n_tcn: n,
        clamped: block.clamped_count() as u64,
    })
}

/// Rate of the given blocks under the default per-block address charge.
pub fn bit_rate(
    blocks: &[QuantumBlock],
    scheme: Scheme,
    layout: &RegisterLayout,
    grid: BlockGrid,
) -> Result<BitRateReport, AccountingError> {
    bit_rate_with(blocks, &scheme, layout, grid, BlockAddressMode::default())
}

pub fn bit_rate_with(
    blocks: &[QuantumBlock],
    cost: &dyn ConnectionCost,
    layout: &RegisterLayout,
    grid: BlockGrid,
    mode: BlockAddressMode,
) -> Result<BitRateReport, AccountingError> {
    if grid.blocks_x == 0 || grid.blocks_y == 0 {
        return Err(AccountingError::EmptyGrid(grid.blocks_x, grid.blocks_y));
    }
    let mut total = Terms::default();
    for b in blocks {
        if !b.matches_layout(layout) {
            return Err(AccountingError::LayoutMismatch {
                bx: b.block_x(),
                by: b.block_y(),
            });
        }
        total += block_terms(b, cost, grid, mode)?;
    }
    if mode == BlockAddressMode::Fixed && total.n_tcn > 0 {
        total.b_e = grid_address_bits(grid);
    }
    let report = BitRateReport::from_terms(cost.name(), total, grid, *layout);
    debug_assert!(report.identity_holds());
    Ok(report)
}

/// Difference of one rate term between two reports.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDelta {
    pub term: &'static str,
    pub a: u64,
    pub b: u64,
    /// `a - b`
    pub delta: i64,
    /// `100 (a - b) / b`, absent when `b` is zero.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportComparison {
    pub a_scheme: String,
    pub b_scheme: String,
    pub terms: Vec<TermDelta>,
}

impl ReportComparison {
    pub fn term(&self, name: &str) -> Option<&TermDelta> {
        self.terms.iter().find(|t| t.term == name)
    }
}

/// Per-term deltas of `a` relative to `b`. Both reports must describe the
/// same coefficients on the same grid.
pub fn compare_report(a: &BitRateReport, b: &BitRateReport) -> Result<ReportComparison, AccountingError> {
    if a.grid != b.grid || a.layout != b.layout {
        return Err(AccountingError::ProvenanceMismatch("grid or layout differs".into()));
    }
    if a.n_tcn != b.n_tcn || a.q_ones != b.q_ones || a.clamped_count != b.clamped_count {
        return Err(AccountingError::ProvenanceMismatch(
            "coefficient statistics differ".into(),
        ));
    }
    let delta = |term: &'static str, x: u64, y: u64| TermDelta {
        term,
        a: x,
        b: y,
        delta: x as i64 - y as i64,
        percent: (y != 0).then(|| 100.0 * (x as f64 - y as f64) / y as f64),
    };
    Ok(ReportComparison {
        a_scheme: a.scheme.clone(),
        b_scheme: b.scheme.clone(),
        terms: vec![
            delta("q_ones", a.q_ones, b.q_ones),
            delta("s_state", a.s_state, b.s_state),
            delta("s_bit", a.s_bit, b.s_bit),
            delta("a_bit", a.a_bit, b.a_bit),
            delta("b_e", a.b_e, b.b_e),
            delta("br", a.br, b.br),
        ],
    })
}
