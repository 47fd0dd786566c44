//! 8x8 orthonormal DCT-II with JPEG level shift, and scalar quantization.
//!
//! Blocks are indexed `[i][j]` where `i` is the sample row and `j` the column;
//! coefficient `[u][v]` pairs frequency `u` with `i` and `v` with `j`.

use thiserror::Error;

use crate::scalar::Real;

pub const DCT_SIZE: usize = 8;
pub const LEVEL_SHIFT: f64 = 128.0;

pub type Block8<T> = [[T; DCT_SIZE]; DCT_SIZE];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DctError {
    #[error("expected 64 samples for an 8x8 block, got {0}")]
    NotEightByEight(usize),
    #[error("non-finite coefficient at ({u}, {v})")]
    NonFinite { u: usize, v: usize },
    #[error("quantization factor must be at least 1")]
    ZeroQf,
}

/// Transform-domain 8x8 block; every entry is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DctBlock<T> {
    coeffs: Block8<T>,
}

impl<T: Real> DctBlock<T> {
    pub fn new(coeffs: Block8<T>) -> Result<Self, DctError> {
        for (u, row) in coeffs.iter().enumerate() {
            if let Some(v) = row.iter().position(|c| !c.is_finite()) {
                return Err(DctError::NonFinite { u, v });
            }
        }
        Ok(Self { coeffs })
    }

    pub fn zeros() -> Self {
        Self {
            coeffs: [[T::zero(); DCT_SIZE]; DCT_SIZE],
        }
    }

    #[inline]
    pub fn coeffs(&self) -> &Block8<T> {
        &self.coeffs
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> T {
        self.coeffs[u][v]
    }
}

/// Precomputed cosine basis `C_u / 2 * cos((2x + 1) u pi / 16)`.
#[derive(Debug, Clone)]
pub struct Dct8<T> {
    basis: Block8<T>,
}

impl<T: Real> Default for Dct8<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Dct8<T> {
    pub fn new() -> Self {
        let mut basis = [[T::zero(); DCT_SIZE]; DCT_SIZE];
        for (u, row) in basis.iter_mut().enumerate() {
            let scale = if u == 0 { T::FRAC_1_SQRT_2() } else { T::one() } / T::lit(2.0);
            for (x, b) in row.iter_mut().enumerate() {
                let angle = T::lit(((2 * x + 1) * u) as f64) * T::PI() / T::lit(16.0);
                *b = scale * angle.cos();
            }
        }
        Self { basis }
    }

    /// Level-shifts by -128 and applies the 2-D DCT-II.
    pub fn forward(&self, samples: &Block8<T>) -> DctBlock<T> {
        let shift = T::lit(LEVEL_SHIFT);
        let mut tmp = [[T::zero(); DCT_SIZE]; DCT_SIZE];
        // rows of `tmp` hold sum_j basis[v][j] * g[i][j]
        for i in 0..DCT_SIZE {
            for v in 0..DCT_SIZE {
                tmp[i][v] = (0..DCT_SIZE)
                    .map(|j| self.basis[v][j] * (samples[i][j] - shift))
                    .sum();
            }
        }
        let mut coeffs = [[T::zero(); DCT_SIZE]; DCT_SIZE];
        for u in 0..DCT_SIZE {
            for v in 0..DCT_SIZE {
                coeffs[u][v] = (0..DCT_SIZE).map(|i| self.basis[u][i] * tmp[i][v]).sum();
            }
        }
        DctBlock { coeffs }
    }

    /// Inverse transform including the +128 level shift. The result is not clamped.
    pub fn inverse(&self, block: &DctBlock<T>) -> Block8<T> {
        let shift = T::lit(LEVEL_SHIFT);
        let c = &block.coeffs;
        let mut tmp = [[T::zero(); DCT_SIZE]; DCT_SIZE];
        for u in 0..DCT_SIZE {
            for j in 0..DCT_SIZE {
                tmp[u][j] = (0..DCT_SIZE).map(|v| self.basis[v][j] * c[u][v]).sum();
            }
        }
        let mut out = [[T::zero(); DCT_SIZE]; DCT_SIZE];
        for i in 0..DCT_SIZE {
            for j in 0..DCT_SIZE {
                out[i][j] = (0..DCT_SIZE).map(|u| self.basis[u][i] * tmp[u][j]).sum::<T>() + shift;
            }
        }
        out
    }
}

pub fn dct2_8x8<T: Real>(samples: &Block8<T>) -> DctBlock<T> {
    Dct8::new().forward(samples)
}

/// Row-major slice form of [`dct2_8x8`]; rejects anything but 64 samples.
pub fn dct2_from_slice<T: Real>(samples: &[T]) -> Result<DctBlock<T>, DctError> {
    if samples.len() != DCT_SIZE * DCT_SIZE {
        return Err(DctError::NotEightByEight(samples.len()));
    }
    let mut block = [[T::zero(); DCT_SIZE]; DCT_SIZE];
    for (i, row) in block.iter_mut().enumerate() {
        row.copy_from_slice(&samples[i * DCT_SIZE..(i + 1) * DCT_SIZE]);
    }
    Ok(dct2_8x8(&block))
}

pub fn idct2_8x8<T: Real>(block: &DctBlock<T>) -> Block8<T> {
    Dct8::new().inverse(block)
}

/// Step size applied to coefficient `(u, v)` at a given quantization factor.
pub trait Quantizer {
    fn step(&self, u: usize, v: usize, qf: u32) -> f64;
}

/// Every coefficient is divided by the quantization factor itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UniformQuantizer;

impl Quantizer for UniformQuantizer {
    #[inline]
    fn step(&self, _u: usize, _v: usize, qf: u32) -> f64 {
        qf as f64
    }
}

/// Integer coefficients together with the factor that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantizedBlock {
    q: [[i32; DCT_SIZE]; DCT_SIZE],
    qf: u32,
}

impl QuantizedBlock {
    pub fn new(q: [[i32; DCT_SIZE]; DCT_SIZE], qf: u32) -> Result<Self, DctError> {
        if qf == 0 {
            return Err(DctError::ZeroQf);
        }
        Ok(Self { q, qf })
    }

    #[inline]
    pub fn values(&self) -> &[[i32; DCT_SIZE]; DCT_SIZE] {
        &self.q
    }

    #[inline]
    pub fn qf(&self) -> u32 {
        self.qf
    }

    pub fn nonzero_count(&self) -> usize {
        self.q.iter().flatten().filter(|&&v| v != 0).count()
    }
}

pub fn quantize<T: Real>(block: &DctBlock<T>, qf: u32) -> Result<QuantizedBlock, DctError> {
    quantize_with(&UniformQuantizer, block, qf)
}

/// `round(coeff / step)` with ties away from zero.
pub fn quantize_with<T: Real>(
    quantizer: &impl Quantizer,
    block: &DctBlock<T>,
    qf: u32,
) -> Result<QuantizedBlock, DctError> {
    if qf == 0 {
        return Err(DctError::ZeroQf);
    }
    let mut q = [[0i32; DCT_SIZE]; DCT_SIZE];
    for u in 0..DCT_SIZE {
        for v in 0..DCT_SIZE {
            let step = T::lit(quantizer.step(u, v, qf));
            q[u][v] = (block.coeffs[u][v] / step)
                .round()
                .to_i32()
                .expect("quantized coefficient fits in i32");
        }
    }
    Ok(QuantizedBlock { q, qf })
}

pub fn dequantize<T: Real>(qb: &QuantizedBlock) -> DctBlock<T> {
    dequantize_with(&UniformQuantizer, qb)
}

pub fn dequantize_with<T: Real>(quantizer: &impl Quantizer, qb: &QuantizedBlock) -> DctBlock<T> {
    let mut coeffs = [[T::zero(); DCT_SIZE]; DCT_SIZE];
    for u in 0..DCT_SIZE {
        for v in 0..DCT_SIZE {
            coeffs[u][v] = T::lit(qb.q[u][v] as f64 * quantizer.step(u, v, qb.qf));
        }
    }
    DctBlock { coeffs }
}
