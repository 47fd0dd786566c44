//! Block-wise quantum representation of grayscale images.
//!
//! The image is transformed with an 8x8 DCT, quantized with a scalar factor and
//! cut into 16x16 quantum blocks. Each block is described by a state-preparation
//! circuit over `q` value qubits, `log2 S_X + log2 S_Y` position qubits and one
//! auxiliary qubit. The crate builds those circuits in a reset-based and a
//! double-Toffoli form, counts their cost in bits, simulates them, and measures
//! rate against distortion.
//!
//! Numeric kernels are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod accounting;
pub mod block;
pub mod dct;
pub mod image_io;
pub mod metrics;
pub mod pipeline;
pub mod quantum;
mod scalar;

pub use accounting::{
    bit_rate, bit_rate_with, block_position_bits, compare_report, s_state_efrqi, s_state_scmneqr, BitRateReport,
    BlockAddressMode, ConnectionCost, EfrqiModel, ReportComparison, Scheme,
};
pub use block::{
    encode_value, popcount_ones, tile_quantum_blocks, BlockGrid, CoeffPlane, NonzeroCoeff, QuantumBlock,
    RegisterLayout,
};
pub use image_io::{load_image, pad_to_block_multiple, save_pgm, synth_image, GrayImage, SynthKind, SynthSpec};
pub use metrics::{mse, psnr, rd_sweep, RdPoint, DEFAULT_QFS};
pub use pipeline::{PipelineConfig, PipelineError, QfRun};
pub use quantum::{
    build_efrqi_circuit, build_scmneqr_circuit, decode_block, expected_state, fidelity, idealized_readout,
    simulate, Circuit, Gate, GateKind, SimulationMode,
};
pub use scalar::Real;

pub type DctBlock = dct::DctBlock<f64>;
pub type Dct8 = dct::Dct8<f64>;
pub type ImageCodec = pipeline::ImageCodec<f64>;
pub type PreparedImage = pipeline::PreparedImage<f64>;
pub type QuantumState = quantum::QuantumState<f64>;
pub type StateVector = quantum::StateVector<f64>;

pub type DctBlockF32 = dct::DctBlock<f32>;
pub type ImageCodecF32 = pipeline::ImageCodec<f32>;
pub type QuantumStateF32 = quantum::QuantumState<f32>;
