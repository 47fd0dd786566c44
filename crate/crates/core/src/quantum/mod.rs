//! Block state-preparation circuits and their simulation.
//!
//! Two circuits are built per block. Both start with a Hadamard on every
//! position qubit and, per non-zero coefficient, raise the auxiliary qubit with a
//! position-controlled X and copy the magnitude bits from it. The reset variant
//! then resets the auxiliary qubit; the baseline repeats the controlled X.
//!
//! Resets are simulated as the measure-and-reinitialize channel: every reset
//! splits each state in flight into its `|0>` and `|1>` outcomes, weighted by
//! their probabilities. Outcomes are enumerated exhaustively, so results are
//! exact and reproducible.

mod circuit;
mod state;

use num_complex::Complex;
use thiserror::Error;

use crate::block::{QuantumBlock, RegisterLayout};
use crate::scalar::Real;

pub use circuit::{
    build_efrqi_circuit, build_scmneqr_circuit, position_controls, Circuit, Control, Gate, GateKind,
    Polarity, CIRCUIT_HEADER,
};
pub use state::{Branch, QuantumState, StateVector, MAX_QUBITS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("{needed} qubits exceed the simulator budget of {max}")]
    QubitBudget { needed: usize, max: usize },
    #[error("circuit contains a reset and cannot be simulated as a unitary")]
    ResetInUnitaryMode,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("fidelity reference state must be pure")]
    NotPure,
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("coefficient position ({x}, {y}) lies outside the block")]
    PositionOutOfBlock { x: usize, y: usize },
    #[error("position ({x}, {y}) carries more than one value pattern")]
    AmbiguousReadout { x: usize, y: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("circuit parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimulationMode {
    /// Pure statevector evolution; resets are rejected.
    Unitary,
    /// Resets act as the measure-and-reinitialize channel.
    Channel,
}

/// Runs `circuit` on `|0...0>`.
pub fn simulate<T: Real>(circuit: &Circuit, mode: SimulationMode) -> Result<QuantumState<T>, SimError> {
    simulate_from(StateVector::zero(circuit.num_qubits())?, circuit, mode)
}

pub fn simulate_from<T: Real>(
    initial: StateVector<T>,
    circuit: &Circuit,
    mode: SimulationMode,
) -> Result<QuantumState<T>, SimError> {
    state::check_budget(circuit.num_qubits())?;
    if initial.num_qubits() != circuit.num_qubits() {
        return Err(SimError::DimensionMismatch(format!(
            "initial state has {} qubits, circuit {}",
            initial.num_qubits(),
            circuit.num_qubits()
        )));
    }
    match mode {
        SimulationMode::Unitary => {
            if !circuit.is_unitary() {
                return Err(SimError::ResetInUnitaryMode);
            }
            let mut s = initial;
            for g in circuit.gates() {
                s.apply(g);
            }
            Ok(QuantumState::Pure(s))
        }
        SimulationMode::Channel => {
            let mut branches = vec![Branch {
                weight: T::one(),
                state: initial,
            }];
            for g in circuit.gates() {
                if g.kind() == GateKind::Reset {
                    branches = branches
                        .into_iter()
                        .flat_map(|b| {
                            let w = b.weight;
                            b.state
                                .reset_split(g.target())
                                .into_iter()
                                .filter_map(move |(p, s)| s.map(|state| Branch { weight: w * p, state }))
                        })
                        .collect();
                } else {
                    for b in &mut branches {
                        b.state.apply(g);
                    }
                }
            }
            Ok(QuantumState::Mixture(branches))
        }
    }
}

/// Analytic target: uniform superposition over positions, each carrying its
/// encoded magnitude in the value register and the auxiliary qubit at `|0>`.
pub fn expected_state<T: Real>(block: &QuantumBlock, layout: &RegisterLayout) -> Result<QuantumState<T>, SimError> {
    if !block.matches_layout(layout) {
        return Err(SimError::LayoutMismatch(format!(
            "block {}x{} q={} vs layout {}x{} q={}",
            block.s_x(),
            block.s_y(),
            block.q(),
            layout.s_x(),
            layout.s_y(),
            layout.q()
        )));
    }
    let amp = Complex::new(T::one() / T::lit(layout.positions() as f64).sqrt(), T::zero());
    let mags = block.magnitudes();
    let (s_x, s_y) = (layout.s_x(), layout.s_y());
    let amps = (0..s_y).flat_map(|y| (0..s_x).map(move |x| (y, x))).map(|(y, x)| {
        (layout.basis_index(mags[y * s_x + x], y, x, false), amp)
    });
    Ok(QuantumState::Pure(StateVector::from_amplitudes(layout.total_qubits(), amps)?))
}

/// `sum_i w_i |<a|b_i>|^2`; `a` must be pure.
pub fn fidelity<T: Real>(a: &QuantumState<T>, b: &QuantumState<T>) -> Result<T, SimError> {
    let reference = a.as_pure().ok_or(SimError::NotPure)?;
    if reference.num_qubits() != b.num_qubits() {
        return Err(SimError::DimensionMismatch(format!(
            "{} vs {} qubits",
            reference.num_qubits(),
            b.num_qubits()
        )));
    }
    let f: T = b
        .branches()
        .into_iter()
        .map(|(w, s)| w * reference.inner(s).norm_sqr())
        .sum();
    Ok(f.max(T::zero()).min(T::one()))
}

/// Squared amplitudes at or below this are treated as absent during readout.
pub const READOUT_CUTOFF: f64 = 1e-12;

/// Per-position magnitudes read from the value register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockReadout {
    s_x: usize,
    s_y: usize,
    magnitudes: Vec<u32>,
    unrecoverable: Vec<bool>,
}

impl BlockReadout {
    #[inline]
    pub fn s_x(&self) -> usize {
        self.s_x
    }
    #[inline]
    pub fn s_y(&self) -> usize {
        self.s_y
    }
    /// Row-major magnitudes; 0 where nothing was read.
    #[inline]
    pub fn magnitudes(&self) -> &[u32] {
        &self.magnitudes
    }
    #[inline]
    pub fn magnitude(&self, x: usize, y: usize) -> u32 {
        self.magnitudes[y * self.s_x + x]
    }
    #[inline]
    pub fn is_recoverable(&self, x: usize, y: usize) -> bool {
        !self.unrecoverable[y * self.s_x + x]
    }
    pub fn unrecoverable_count(&self) -> usize {
        self.unrecoverable.iter().filter(|&&u| u).count()
    }
}

/// Reads the value pattern attached to every position.
///
/// A position is unrecoverable when some branch of the state (some reset
/// outcome) carries no amplitude on it; for a pure state this means the
/// position is absent altogether. Two different value patterns on one position,
/// within or across branches, make the readout ambiguous.
pub fn decode_block<T: Real>(state: &QuantumState<T>, layout: &RegisterLayout) -> Result<BlockReadout, SimError> {
    if state.num_qubits() != layout.total_qubits() {
        return Err(SimError::DimensionMismatch(format!(
            "state has {} qubits, layout {}",
            state.num_qubits(),
            layout.total_qubits()
        )));
    }
    let (s_x, s_y) = (layout.s_x(), layout.s_y());
    let cutoff = T::lit(READOUT_CUTOFF);
    let mut value: Vec<Option<u32>> = vec![None; s_x * s_y];
    let mut unrecoverable = vec![false; s_x * s_y];
    for (weight, branch) in state.branches() {
        if weight <= T::zero() {
            continue;
        }
        let mut covered = vec![false; s_x * s_y];
        for (idx, amp) in branch.iter() {
            if amp.norm_sqr() <= cutoff {
                continue;
            }
            let (v, y, x, _aux) = layout.split_index(idx);
            let pos = y * s_x + x;
            match value[pos] {
                Some(prev) if prev != v => return Err(SimError::AmbiguousReadout { x, y }),
                _ => value[pos] = Some(v),
            }
            covered[pos] = true;
        }
        for (u, c) in unrecoverable.iter_mut().zip(&covered) {
            *u |= !c;
        }
    }
    Ok(BlockReadout {
        s_x,
        s_y,
        magnitudes: value.into_iter().map(|v| v.unwrap_or(0)).collect(),
        unrecoverable,
    })
}

/// Per-basis-branch evaluation: the position Hadamards are replaced by each
/// fixed position pattern in turn, the remaining gates are run in channel mode
/// and the value register is read on that position.
pub fn idealized_readout<T: Real>(circuit: &Circuit) -> Result<BlockReadout, SimError> {
    let layout = *circuit.layout();
    let mut stripped = Circuit::new(layout);
    for g in circuit.gates().iter().filter(|g| g.kind() != GateKind::Hadamard) {
        stripped.push(g.clone())?;
    }
    let (s_x, s_y) = (layout.s_x(), layout.s_y());
    let mut magnitudes = vec![0u32; s_x * s_y];
    let mut unrecoverable = vec![false; s_x * s_y];
    for y in 0..s_y {
        for x in 0..s_x {
            let start = StateVector::<T>::basis(layout.total_qubits(), layout.basis_index(0, y, x, false))?;
            let out = simulate_from(start, &stripped, SimulationMode::Channel)?;
            let readout = decode_block(&out, &layout)?;
            magnitudes[y * s_x + x] = readout.magnitude(x, y);
            unrecoverable[y * s_x + x] = !readout.is_recoverable(x, y);
        }
    }
    Ok(BlockReadout {
        s_x,
        s_y,
        magnitudes,
        unrecoverable,
    })
}
