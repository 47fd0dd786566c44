//! Gate lists for block state preparation and their text dump format.

use std::fmt;

use crate::block::{NonzeroCoeff, QuantumBlock, RegisterLayout};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    PauliX,
    Hadamard,
    ControlledX,
    MultiControlledX,
    Reset,
}

impl GateKind {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            GateKind::PauliX => "X",
            GateKind::Hadamard => "H",
            GateKind::ControlledX => "CX",
            GateKind::MultiControlledX => "MCX",
            GateKind::Reset => "RESET",
        }
    }

    fn from_mnemonic(s: &str) -> Option<Self> {
        Some(match s {
            "X" => GateKind::PauliX,
            "H" => GateKind::Hadamard,
            "CX" => GateKind::ControlledX,
            "MCX" => GateKind::MultiControlledX,
            "RESET" => GateKind::Reset,
            _ => return None,
        })
    }
}

/// Basis value a control qubit must hold for the gate to act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    One,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    pub polarity: Polarity,
}

impl Control {
    pub fn on_one(qubit: usize) -> Self {
        Self {
            qubit,
            polarity: Polarity::One,
        }
    }

    pub fn on_zero(qubit: usize) -> Self {
        Self {
            qubit,
            polarity: Polarity::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    kind: GateKind,
    target: usize,
    controls: Vec<Control>,
}

impl Gate {
    pub fn new(kind: GateKind, target: usize, controls: Vec<Control>) -> Result<Self, SimError> {
        let bad = |why: &str| Err(SimError::InvalidGate(format!("{} on {target}: {why}", kind.mnemonic())));
        match kind {
            GateKind::PauliX | GateKind::Hadamard | GateKind::Reset if !controls.is_empty() => {
                return bad("takes no controls")
            }
            GateKind::ControlledX if controls.len() != 1 => return bad("needs exactly one control"),
            _ => {}
        }
        for (i, c) in controls.iter().enumerate() {
            if c.qubit == target {
                return bad("target is also a control");
            }
            if controls[..i].iter().any(|d| d.qubit == c.qubit) {
                return bad("repeated control qubit");
            }
        }
        Ok(Self {
            kind,
            target,
            controls,
        })
    }

    pub fn x(target: usize) -> Self {
        Self {
            kind: GateKind::PauliX,
            target,
            controls: Vec::new(),
        }
    }

    pub fn h(target: usize) -> Self {
        Self {
            kind: GateKind::Hadamard,
            target,
            controls: Vec::new(),
        }
    }

    pub fn reset(target: usize) -> Self {
        Self {
            kind: GateKind::Reset,
            target,
            controls: Vec::new(),
        }
    }

    pub fn cx(control: usize, target: usize) -> Result<Self, SimError> {
        Self::new(GateKind::ControlledX, target, vec![Control::on_one(control)])
    }

    pub fn mcx(controls: Vec<Control>, target: usize) -> Result<Self, SimError> {
        Self::new(GateKind::MultiControlledX, target, controls)
    }

    #[inline]
    pub fn kind(&self) -> GateKind {
        self.kind
    }
    #[inline]
    pub fn target(&self) -> usize {
        self.target
    }
    #[inline]
    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    /// A multi-controlled X with exactly two controls.
    pub fn is_toffoli(&self) -> bool {
        self.kind == GateKind::MultiControlledX && self.controls.len() == 2
    }

    fn max_qubit(&self) -> usize {
        self.controls
            .iter()
            .map(|c| c.qubit)
            .chain(std::iter::once(self.target))
            .max()
            .unwrap_or(0)
    }

    /// `(mask, pattern)` such that the controls are satisfied by basis index `i`
    /// iff `i & mask == pattern`.
    pub(crate) fn control_mask(&self) -> (usize, usize) {
        self.controls.iter().fold((0, 0), |(m, p), c| {
            let bit = 1usize << c.qubit;
            (m | bit, if c.polarity == Polarity::One { p | bit } else { p })
        })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.mnemonic(), self.target)?;
        for c in &self.controls {
            let p = match c.polarity {
                Polarity::One => '1',
                Polarity::Zero => '0',
            };
            write!(f, " {}:{}", c.qubit, p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    layout: RegisterLayout,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(layout: RegisterLayout) -> Self {
        Self {
            layout,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), SimError> {
        if gate.max_qubit() >= self.layout.total_qubits() {
            return Err(SimError::InvalidGate(format!(
                "`{gate}` addresses a qubit outside the {}-qubit register",
                self.layout.total_qubits()
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    #[inline]
    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }
    #[inline]
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }
    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.layout.total_qubits()
    }

    pub fn is_unitary(&self) -> bool {
        !self.gates.iter().any(|g| g.kind == GateKind::Reset)
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Versioned plain-text listing, one gate per line.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "{CIRCUIT_HEADER} qubits={} q={} s_x={} s_y={}\n",
            self.num_qubits(),
            self.layout.q(),
            self.layout.s_x(),
            self.layout.s_y()
        );
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let perr = |line: usize, msg: &str| SimError::Parse(format!("line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| perr(0, "empty input"))?;
        let rest = header
            .strip_prefix(CIRCUIT_HEADER)
            .ok_or_else(|| perr(0, "missing or unsupported header"))?;
        let mut q = None;
        let mut s_x = None;
        let mut s_y = None;
        for kv in rest.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| perr(0, "bad header field"))?;
            let v: usize = v.parse().map_err(|_| perr(0, "bad header number"))?;
            match k {
                "q" => q = Some(v as u32),
                "s_x" => s_x = Some(v),
                "s_y" => s_y = Some(v),
                _ => {}
            }
        }
        let (Some(q), Some(s_x), Some(s_y)) = (q, s_x, s_y) else {
            return Err(perr(0, "header needs q, s_x and s_y"));
        };
        let layout = RegisterLayout::new(q, s_x, s_y).map_err(|e| perr(0, &e.to_string()))?;
        let mut circuit = Circuit::new(layout);
        for (n, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let kind = toks
                .next()
                .and_then(GateKind::from_mnemonic)
                .ok_or_else(|| perr(n, "unknown gate"))?;
            let target: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| perr(n, "bad target"))?;
            let controls = toks
                .map(|t| {
                    let (qb, pol) = t.split_once(':').ok_or_else(|| perr(n, "bad control"))?;
                    let qubit = qb.parse().map_err(|_| perr(n, "bad control qubit"))?;
                    let polarity = match pol {
                        "1" => Polarity::One,
                        "0" => Polarity::Zero,
                        _ => return Err(perr(n, "bad polarity")),
                    };
                    Ok(Control { qubit, polarity })
                })
                .collect::<Result<Vec<_>, _>>()?;
            circuit.push(Gate::new(kind, target, controls)?)?;
        }
        Ok(circuit)
    }
}

pub const CIRCUIT_HEADER: &str = "# qbc-circuit v1";

fn check_block(block: &QuantumBlock, layout: &RegisterLayout) -> Result<(), SimError> {
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
    if let Some(nz) = block
        .nonzeros()
        .iter()
        .find(|nz| nz.x() >= layout.s_x() || nz.y() >= layout.s_y())
    {
        return Err(SimError::PositionOutOfBlock { x: nz.x(), y: nz.y() });
    }
    Ok(())
}

/// Controls selecting position `(y, x)`: on-one for set bits, on-zero for clear bits.
pub fn position_controls(layout: &RegisterLayout, y: usize, x: usize) -> Vec<Control> {
    let y_ctrl = (0..layout.n_pos_y() as usize).map(|i| (layout.y_qubit(i), (y >> i) & 1 == 1));
    let x_ctrl = (0..layout.n_pos_x() as usize).map(|i| (layout.x_qubit(i), (x >> i) & 1 == 1));
    y_ctrl
        .chain(x_ctrl)
        .map(|(qubit, one)| if one { Control::on_one(qubit) } else { Control::on_zero(qubit) })
        .collect()
}

fn hadamard_layer(circuit: &mut Circuit) -> Result<(), SimError> {
    let layout = *circuit.layout();
    for i in 0..layout.n_pos_y() as usize {
        circuit.push(Gate::h(layout.y_qubit(i)))?;
    }
    for i in 0..layout.n_pos_x() as usize {
        circuit.push(Gate::h(layout.x_qubit(i)))?;
    }
    Ok(())
}

fn connect_and_write(circuit: &mut Circuit, nz: &NonzeroCoeff) -> Result<Gate, SimError> {
    let layout = *circuit.layout();
    let aux = layout.aux_qubit();
    let connect = Gate::mcx(position_controls(&layout, nz.y(), nz.x()), aux)?;
    circuit.push(connect.clone())?;
    for bit in 0..layout.q() {
        if nz.magnitude().bit(bit) {
            circuit.push(Gate::cx(aux, layout.value_qubit(bit as usize))?)?;
        }
    }
    Ok(connect)
}

/// Hadamards on every position qubit, then for each non-zero coefficient:
/// position-controlled X onto the auxiliary qubit, a CX from the auxiliary
/// qubit onto each set magnitude bit, and a reset of the auxiliary qubit.
pub fn build_scmneqr_circuit(block: &QuantumBlock, layout: &RegisterLayout) -> Result<Circuit, SimError> {
    check_block(block, layout)?;
    let mut circuit = Circuit::new(*layout);
    hadamard_layer(&mut circuit)?;
    for nz in block.nonzeros() {
        connect_and_write(&mut circuit, nz)?;
        circuit.push(Gate::reset(layout.aux_qubit()))?;
    }
    Ok(circuit)
}

/// As [`build_scmneqr_circuit`], but the auxiliary qubit is uncomputed by
/// repeating the connecting gate instead of being reset.
pub fn build_efrqi_circuit(block: &QuantumBlock, layout: &RegisterLayout) -> Result<Circuit, SimError> {
    check_block(block, layout)?;
    let mut circuit = Circuit::new(*layout);
    hadamard_layer(&mut circuit)?;
    for nz in block.nonzeros() {
        let connect = connect_and_write(&mut circuit, nz)?;
        circuit.push(connect)?;
    }
    Ok(circuit)
}
