//! Quantum blocks: tiling of the quantized coefficient plane, non-zero
//! extraction and sign + magnitude value encoding.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlockError {
    #[error("block dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("value register needs between 1 and 31 qubits, got {0}")]
    BadValueWidth(u32),
    #[error("plane {width}x{height} is not a multiple of the {s_x}x{s_y} block")]
    Misaligned {
        width: usize,
        height: usize,
        s_x: usize,
        s_y: usize,
    },
    #[error("coefficient buffer holds {len} values, expected {expected}")]
    LengthMismatch { len: usize, expected: usize },
    #[error("zero coefficients are never encoded")]
    ZeroValue,
}

/// Qubit budget of one block circuit: `q` value qubits, `log2 S_Y` + `log2 S_X`
/// position qubits and one auxiliary qubit.
///
/// Qubit `k` is bit `k` of a basis-state index. The register order is
/// value (LSB first), then Y (LSB first), then X (LSB first), then the
/// auxiliary qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterLayout {
    q: u32,
    n_pos_x: u32,
    n_pos_y: u32,
}

impl Default for RegisterLayout {
    /// Eight value qubits over a 16x16 block.
    fn default() -> Self {
        Self {
            q: 8,
            n_pos_x: 4,
            n_pos_y: 4,
        }
    }
}

fn log2_exact(s: usize) -> Result<u32, BlockError> {
    if s.is_power_of_two() {
        Ok(s.trailing_zeros())
    } else {
        Err(BlockError::NotPowerOfTwo(s))
    }
}

impl RegisterLayout {
    pub const AUX_QUBITS: usize = 1;

    pub fn new(q: u32, s_x: usize, s_y: usize) -> Result<Self, BlockError> {
        if !(1..=31).contains(&q) {
            return Err(BlockError::BadValueWidth(q));
        }
        Ok(Self {
            q,
            n_pos_x: log2_exact(s_x)?,
            n_pos_y: log2_exact(s_y)?,
        })
    }

    pub fn square(q: u32, side: usize) -> Result<Self, BlockError> {
        Self::new(q, side, side)
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }
    #[inline]
    pub fn n_pos_x(&self) -> u32 {
        self.n_pos_x
    }
    #[inline]
    pub fn n_pos_y(&self) -> u32 {
        self.n_pos_y
    }
    #[inline]
    pub fn s_x(&self) -> usize {
        1 << self.n_pos_x
    }
    #[inline]
    pub fn s_y(&self) -> usize {
        1 << self.n_pos_y
    }
    #[inline]
    pub fn positions(&self) -> usize {
        self.s_x() * self.s_y()
    }
    #[inline]
    pub fn position_qubits(&self) -> usize {
        (self.n_pos_x + self.n_pos_y) as usize
    }
    #[inline]
    pub fn total_qubits(&self) -> usize {
        self.q as usize + self.position_qubits() + Self::AUX_QUBITS
    }
    #[inline]
    pub fn value_qubit(&self, bit: usize) -> usize {
        bit
    }
    #[inline]
    pub fn y_qubit(&self, bit: usize) -> usize {
        self.q as usize + bit
    }
    #[inline]
    pub fn x_qubit(&self, bit: usize) -> usize {
        self.q as usize + self.n_pos_y as usize + bit
    }
    #[inline]
    pub fn aux_qubit(&self) -> usize {
        self.q as usize + self.position_qubits()
    }

    /// Basis-state index of `|value>|y>|x>|aux>`.
    pub fn basis_index(&self, value: u32, y: usize, x: usize, aux: bool) -> usize {
        let mut idx = value as usize & ((1usize << self.q) - 1);
        idx |= y << self.y_qubit(0);
        idx |= x << self.x_qubit(0);
        if aux {
            idx |= 1 << self.aux_qubit();
        }
        idx
    }

    /// Splits a basis index into `(value, y, x, aux)`.
    pub fn split_index(&self, idx: usize) -> (u32, usize, usize, bool) {
        let value = (idx & ((1usize << self.q) - 1)) as u32;
        let y = (idx >> self.y_qubit(0)) & (self.s_y() - 1);
        let x = (idx >> self.x_qubit(0)) & (self.s_x() - 1);
        let aux = (idx >> self.aux_qubit()) & 1 == 1;
        (value, y, x, aux)
    }
}

/// Fixed-width unsigned magnitude, read LSB first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MagnitudeBits {
    value: u32,
    width: u32,
}

impl MagnitudeBits {
    #[inline]
    pub fn value(&self) -> u32 {
        self.value
    }
    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }
    #[inline]
    pub fn bit(&self, i: u32) -> bool {
        (self.value >> i) & 1 == 1
    }
    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(|i| self.bit(i))
    }
    pub fn to_vec(&self) -> Vec<bool> {
        self.iter().collect()
    }
    #[inline]
    pub fn count_ones(&self) -> u32 {
        self.value.count_ones()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodedValue {
    /// `true` for negative values.
    pub sign: bool,
    pub magnitude: MagnitudeBits,
    pub clamped: bool,
}

#[inline]
pub fn max_magnitude(q: u32) -> u32 {
    ((1u64 << q) - 1) as u32
}

/// Sign plus `q`-bit magnitude saturated at `2^q - 1`.
pub fn encode_value(v: i32, q: u32) -> Result<EncodedValue, BlockError> {
    if v == 0 {
        return Err(BlockError::ZeroValue);
    }
    if !(1..=31).contains(&q) {
        return Err(BlockError::BadValueWidth(q));
    }
    let max = max_magnitude(q);
    let abs = v.unsigned_abs();
    Ok(EncodedValue {
        sign: v < 0,
        magnitude: MagnitudeBits {
            value: abs.min(max),
            width: q,
        },
        clamped: abs > max,
    })
}

pub fn decode_value(enc: &EncodedValue) -> i32 {
    let m = enc.magnitude.value as i32;
    if enc.sign {
        -m
    } else {
        m
    }
}

/// A non-zero quantized coefficient at local block position `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonzeroCoeff {
    value: i32,
    x: usize,
    y: usize,
    encoded: EncodedValue,
}

impl NonzeroCoeff {
    pub fn new(value: i32, x: usize, y: usize, q: u32) -> Result<Self, BlockError> {
        Ok(Self {
            value,
            x,
            y,
            encoded: encode_value(value, q)?,
        })
    }
    #[inline]
    pub fn value(&self) -> i32 {
        self.value
    }
    #[inline]
    pub fn x(&self) -> usize {
        self.x
    }
    #[inline]
    pub fn y(&self) -> usize {
        self.y
    }
    #[inline]
    pub fn sign(&self) -> bool {
        self.encoded.sign
    }
    #[inline]
    pub fn magnitude(&self) -> MagnitudeBits {
        self.encoded.magnitude
    }
    #[inline]
    pub fn clamped(&self) -> bool {
        self.encoded.clamped
    }
    #[inline]
    pub fn encoded(&self) -> &EncodedValue {
        &self.encoded
    }
}

/// Number of set magnitude bits of one coefficient.
#[inline]
pub fn popcount_ones(nz: &NonzeroCoeff) -> u32 {
    nz.magnitude().count_ones()
}

/// One `s_x` x `s_y` tile of quantized coefficients with its non-zero list in
/// row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumBlock {
    block_x: usize,
    block_y: usize,
    s_x: usize,
    s_y: usize,
    q: u32,
    coeffs: Vec<i32>,
    nonzeros: Vec<NonzeroCoeff>,
}

impl QuantumBlock {
    /// `coeffs` is row-major, `s_y` rows of `s_x` values.
    pub fn new(
        block_x: usize,
        block_y: usize,
        s_x: usize,
        s_y: usize,
        coeffs: Vec<i32>,
        q: u32,
    ) -> Result<Self, BlockError> {
        if coeffs.len() != s_x * s_y {
            return Err(BlockError::LengthMismatch {
                len: coeffs.len(),
                expected: s_x * s_y,
            });
        }
        let mut nonzeros = Vec::new();
        for (i, &v) in coeffs.iter().enumerate() {
            if v != 0 {
                nonzeros.push(NonzeroCoeff::new(v, i % s_x, i / s_x, q)?);
            }
        }
        Ok(Self {
            block_x,
            block_y,
            s_x,
            s_y,
            q,
            coeffs,
            nonzeros,
        })
    }

    /// Block sized by `layout` at the origin of a one-block grid.
    pub fn for_layout(layout: &RegisterLayout, coeffs: Vec<i32>) -> Result<Self, BlockError> {
        Self::new(0, 0, layout.s_x(), layout.s_y(), coeffs, layout.q())
    }

    #[inline]
    pub fn block_x(&self) -> usize {
        self.block_x
    }
    #[inline]
    pub fn block_y(&self) -> usize {
        self.block_y
    }
    #[inline]
    pub fn s_x(&self) -> usize {
        self.s_x
    }
    #[inline]
    pub fn s_y(&self) -> usize {
        self.s_y
    }
    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }
    #[inline]
    pub fn coeffs(&self) -> &[i32] {
        &self.coeffs
    }
    #[inline]
    pub fn coeff(&self, x: usize, y: usize) -> i32 {
        self.coeffs[y * self.s_x + x]
    }
    #[inline]
    pub fn nonzeros(&self) -> &[NonzeroCoeff] {
        &self.nonzeros
    }
    /// Number of non-zero coefficients.
    #[inline]
    pub fn n_tcn(&self) -> usize {
        self.nonzeros.len()
    }
    pub fn clamped_count(&self) -> usize {
        self.nonzeros.iter().filter(|nz| nz.clamped()).count()
    }
    pub fn is_empty(&self) -> bool {
        self.nonzeros.is_empty()
    }

    /// Encoded (possibly saturated) magnitudes, row-major.
    pub fn magnitudes(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.coeffs.len()];
        for nz in &self.nonzeros {
            out[nz.y * self.s_x + nz.x] = nz.magnitude().value();
        }
        out
    }

    pub fn matches_layout(&self, layout: &RegisterLayout) -> bool {
        self.s_x == layout.s_x() && self.s_y == layout.s_y() && self.q == layout.q()
    }
}

/// Quantized coefficients laid out at image coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffPlane {
    width: usize,
    height: usize,
    data: Vec<i32>,
}

impl CoeffPlane {
    pub fn new(width: usize, height: usize, data: Vec<i32>) -> Result<Self, BlockError> {
        if data.len() != width * height {
            return Err(BlockError::LengthMismatch {
                len: data.len(),
                expected: width * height,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }
    #[inline]
    pub fn data(&self) -> &[i32] {
        &self.data
    }
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.data[y * self.width + x]
    }
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: i32) {
        self.data[y * self.width + x] = v;
    }
    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }
}

/// Dimensions of the block grid covering a plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockGrid {
    pub blocks_x: usize,
    pub blocks_y: usize,
}

impl BlockGrid {
    pub fn for_plane(width: usize, height: usize, layout: &RegisterLayout) -> Self {
        Self {
            blocks_x: width / layout.s_x(),
            blocks_y: height / layout.s_y(),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cuts `plane` into blocks of the layout's size, emitted in row-major block order.
pub fn tile_quantum_blocks(
    plane: &CoeffPlane,
    layout: &RegisterLayout,
) -> Result<Vec<QuantumBlock>, BlockError> {
    let (s_x, s_y) = (layout.s_x(), layout.s_y());
    if !plane.width.is_multiple_of(s_x) || !plane.height.is_multiple_of(s_y) {
        return Err(BlockError::Misaligned {
            width: plane.width,
            height: plane.height,
            s_x,
            s_y,
        });
    }
    let grid = BlockGrid::for_plane(plane.width, plane.height, layout);
    let mut blocks = Vec::with_capacity(grid.len());
    for by in 0..grid.blocks_y {
        for bx in 0..grid.blocks_x {
            let mut coeffs = Vec::with_capacity(s_x * s_y);
            for y in 0..s_y {
                let row = (by * s_y + y) * plane.width + bx * s_x;
                coeffs.extend_from_slice(&plane.data[row..row + s_x]);
            }
            blocks.push(QuantumBlock::new(bx, by, s_x, s_y, coeffs, layout.q())?);
        }
    }
    Ok(blocks)
}

/// Reassembles tiled blocks into a `width` x `height` plane.
pub fn flatten_blocks(blocks: &[QuantumBlock], width: usize, height: usize) -> CoeffPlane {
    let mut plane = CoeffPlane::zeros(width, height);
    for b in blocks {
        for y in 0..b.s_y {
            for x in 0..b.s_x {
                plane.set(b.block_x * b.s_x + x, b.block_y * b.s_y + y, b.coeff(x, y));
            }
        }
    }
    plane
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_qubit_budget() {
        let l = RegisterLayout::default();
        assert_eq!(l.total_qubits(), 8 + 2 * 4 + 1);
        assert_eq!(l.aux_qubit(), 16);
        assert_eq!(l.x_qubit(0), 12);
        let l = RegisterLayout::new(3, 4, 2).unwrap();
        assert_eq!((l.n_pos_x(), l.n_pos_y(), l.total_qubits()), (2, 1, 7));
        assert_eq!(RegisterLayout::new(8, 12, 16), Err(BlockError::NotPowerOfTwo(12)));
        assert_eq!(RegisterLayout::new(0, 16, 16), Err(BlockError::BadValueWidth(0)));
    }

    #[test]
    fn basis_index_round_trip() {
        let l = RegisterLayout::new(4, 4, 8).unwrap();
        for idx in 0..(1usize << l.total_qubits()) {
            let (v, y, x, a) = l.split_index(idx);
            assert_eq!(l.basis_index(v, y, x, a), idx);
        }
    }

    #[test]
    fn empty_plane_gives_empty_block() {
        let blocks = tile_quantum_blocks(&CoeffPlane::zeros(16, 16), &RegisterLayout::default()).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].n_tcn(), 0);
    }

    #[test]
    fn local_coordinates() {
        let mut plane = CoeffPlane::zeros(32, 32);
        plane.set(17, 2, 9);
        let blocks = tile_quantum_blocks(&plane, &RegisterLayout::default()).unwrap();
        assert_eq!(blocks.len(), 4);
        let b = &blocks[1];
        assert_eq!((b.block_x(), b.block_y()), (1, 0));
        assert_eq!(b.n_tcn(), 1);
        assert_eq!((b.nonzeros()[0].x(), b.nonzeros()[0].y()), (1, 2));
        assert!(blocks.iter().enumerate().all(|(i, b)| i == 1 || b.is_empty()));
    }

    #[test]
    fn row_major_scan() {
        let mut plane = CoeffPlane::zeros(16, 16);
        plane.set(3, 1, -2);
        plane.set(0, 0, 5);
        let blocks = tile_quantum_blocks(&plane, &RegisterLayout::default()).unwrap();
        let nz: Vec<_> = blocks[0].nonzeros().iter().map(|n| (n.x(), n.y(), n.value())).collect();
        assert_eq!(nz, vec![(0, 0, 5), (3, 1, -2)]);
        assert!(blocks[0].nonzeros()[1].sign());
    }

    #[test]
    fn misaligned_plane_rejected() {
        let err = tile_quantum_blocks(&CoeffPlane::zeros(24, 16), &RegisterLayout::default());
        assert!(matches!(err, Err(BlockError::Misaligned { width: 24, .. })));
    }

    #[test]
    fn encode_examples() {
        let e = encode_value(5, 8).unwrap();
        assert!(!e.sign && !e.clamped);
        assert_eq!(
            e.magnitude.to_vec(),
            vec![true, false, true, false, false, false, false, false]
        );
        let e = encode_value(-1, 8).unwrap();
        assert!(e.sign);
        assert_eq!(e.magnitude.to_vec(), vec![true, false, false, false, false, false, false, false]);
        let e = encode_value(300, 8).unwrap();
        assert_eq!(e.magnitude.value(), 255);
        assert!(e.clamped);
        assert_eq!(encode_value(0, 8), Err(BlockError::ZeroValue));
    }

    #[test]
    fn popcount_examples() {
        for (v, ones) in [(5, 2), (1, 1), (255, 8), (-6, 2), (1000, 8)] {
            assert_eq!(popcount_ones(&NonzeroCoeff::new(v, 0, 0, 8).unwrap()), ones, "{v}");
        }
    }

    proptest! {
        #[test]
        fn sign_magnitude_round_trip(v in -((1i32 << 12) - 1)..(1i32 << 12), q in 12u32..20) {
            prop_assume!(v != 0);
            let enc = encode_value(v, q).unwrap();
            prop_assert!(!enc.clamped);
            prop_assert_eq!(decode_value(&enc), v);
        }

        #[test]
        fn tiling_partitions_the_plane(
            bw in 1usize..4, bh in 1usize..4, side_log in 1u32..5,
            seed in proptest::collection::vec(-3i32..4, 1024),
        ) {
            let side = 1usize << side_log;
            let (w, h) = (bw * side, bh * side);
            let data: Vec<i32> = (0..w * h).map(|i| seed[i % seed.len()] * ((i % 7) as i32 - 3)).collect();
            let plane = CoeffPlane::new(w, h, data).unwrap();
            let layout = RegisterLayout::square(8, side).unwrap();
            let blocks = tile_quantum_blocks(&plane, &layout).unwrap();
            prop_assert_eq!(blocks.len(), bw * bh);
            let total: usize = blocks.iter().map(QuantumBlock::n_tcn).sum();
            prop_assert_eq!(total, plane.nonzero_count());
            prop_assert_eq!(flatten_blocks(&blocks, w, h), plane);
        }
    }
}
