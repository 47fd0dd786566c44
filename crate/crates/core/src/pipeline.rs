//! End-to-end compression path: pad, 8x8 DCT, quantize, tile into quantum
//! blocks, account, then dequantize and invert for the reconstruction.

use thiserror::Error;

use crate::accounting::{bit_rate_with, AccountingError, BitRateReport, BlockAddressMode, ConnectionCost};
use crate::block::{tile_quantum_blocks, BlockError, BlockGrid, CoeffPlane, QuantumBlock, RegisterLayout};
use crate::dct::{dequantize, quantize, Block8, Dct8, DctBlock, DctError, QuantizedBlock, DCT_SIZE};
use crate::image_io::{pad_to_block_multiple, GrayImage, ImageError};
use crate::metrics::{mse, psnr_from_mse, MetricsError};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Dct(#[from] DctError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no quantization factors given")]
    NoQuantizationFactors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PipelineConfig {
    pub layout: RegisterLayout,
    pub b_e_mode: BlockAddressMode,
}

/// Image after padding and the forward transform; independent of the
/// quantization factor, so one of these serves a whole sweep.
#[derive(Debug, Clone)]
pub struct PreparedImage<T> {
    original: GrayImage,
    padded: GrayImage,
    blocks_x: usize,
    blocks_y: usize,
    coeffs: Vec<DctBlock<T>>,
}

impl<T> PreparedImage<T> {
    pub fn original(&self) -> &GrayImage {
        &self.original
    }
    pub fn padded(&self) -> &GrayImage {
        &self.padded
    }
    /// `(columns, rows)` of 8x8 transform blocks.
    pub fn dct_grid(&self) -> (usize, usize) {
        (self.blocks_x, self.blocks_y)
    }
    /// Forward-transformed 8x8 blocks, row-major over the padded image.
    pub fn dct_blocks(&self) -> &[DctBlock<T>] {
        &self.coeffs
    }
}

/// Result of one quantization factor.
#[derive(Debug, Clone)]
pub struct QfRun {
    pub qf: u32,
    pub plane: CoeffPlane,
    pub blocks: Vec<QuantumBlock>,
    pub grid: BlockGrid,
    /// One report per requested cost model, in request order.
    pub reports: Vec<BitRateReport>,
    /// Reconstruction cropped to the original size.
    pub reconstruction: GrayImage,
    pub mse: f64,
    /// `f64::INFINITY` for a lossless reconstruction.
    pub psnr_db: f64,
}

impl QfRun {
    pub fn n_tcn(&self) -> u64 {
        self.plane.nonzero_count() as u64
    }
}

#[derive(Debug, Clone)]
pub struct ImageCodec<T> {
    dct: Dct8<T>,
    config: PipelineConfig,
}

impl<T: Real> ImageCodec<T> {
    pub fn new(config: PipelineConfig) -> Self {
        Self {
            dct: Dct8::new(),
            config,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Padding unit: large enough for both the 8x8 transform and the quantum block.
    pub fn pad_unit(&self) -> usize {
        DCT_SIZE.max(self.config.layout.s_x()).max(self.config.layout.s_y())
    }

    pub fn prepare(&self, img: &GrayImage) -> PreparedImage<T> {
        let padded = pad_to_block_multiple(img, self.pad_unit());
        let blocks_x = padded.width() / DCT_SIZE;
        let blocks_y = padded.height() / DCT_SIZE;
        let mut coeffs = Vec::with_capacity(blocks_x * blocks_y);
        for by in 0..blocks_y {
            for bx in 0..blocks_x {
                let mut samples: Block8<T> = [[T::zero(); DCT_SIZE]; DCT_SIZE];
                for (i, row) in samples.iter_mut().enumerate() {
                    for (j, s) in row.iter_mut().enumerate() {
                        *s = T::lit(padded.get(bx * DCT_SIZE + j, by * DCT_SIZE + i) as f64);
                    }
                }
                coeffs.push(self.dct.forward(&samples));
            }
        }
        PreparedImage {
            original: img.clone(),
            padded,
            blocks_x,
            blocks_y,
            coeffs,
        }
    }

    pub fn quantize(&self, prepared: &PreparedImage<T>, qf: u32) -> Result<Vec<QuantizedBlock>, PipelineError> {
        prepared
            .coeffs
            .iter()
            .map(|b| quantize(b, qf).map_err(PipelineError::from))
            .collect()
    }

    /// Quantized 8x8 blocks placed back at their pixel coordinates.
    pub fn coefficient_plane(&self, prepared: &PreparedImage<T>, quantized: &[QuantizedBlock]) -> CoeffPlane {
        let mut plane = CoeffPlane::zeros(prepared.padded.width(), prepared.padded.height());
        for (n, qb) in quantized.iter().enumerate() {
            let (bx, by) = (n % prepared.blocks_x, n / prepared.blocks_x);
            for (u, row) in qb.values().iter().enumerate() {
                for (v, &q) in row.iter().enumerate() {
                    plane.set(bx * DCT_SIZE + v, by * DCT_SIZE + u, q);
                }
            }
        }
        plane
    }

    /// Dequantize, invert, round half away from zero, clamp, crop.
    pub fn reconstruct(
        &self,
        prepared: &PreparedImage<T>,
        quantized: &[QuantizedBlock],
    ) -> Result<GrayImage, PipelineError> {
        let (w, h) = (prepared.padded.width(), prepared.padded.height());
        let mut data = vec![0u8; w * h];
        for (n, qb) in quantized.iter().enumerate() {
            let (bx, by) = (n % prepared.blocks_x, n / prepared.blocks_x);
            let samples = self.dct.inverse(&dequantize::<T>(qb));
            for (i, row) in samples.iter().enumerate() {
                for (j, &s) in row.iter().enumerate() {
                    let px = s.to_f64_lossy().round().clamp(0.0, 255.0) as u8;
                    data[(by * DCT_SIZE + i) * w + bx * DCT_SIZE + j] = px;
                }
            }
        }
        let full = GrayImage::new(w, h, data)?;
        Ok(full.crop(prepared.original.width(), prepared.original.height())?)
    }

    pub fn run<C: ConnectionCost>(
        &self,
        prepared: &PreparedImage<T>,
        qf: u32,
        costs: &[C],
    ) -> Result<QfRun, PipelineError> {
        let layout = &self.config.layout;
        let quantized = self.quantize(prepared, qf)?;
        let plane = self.coefficient_plane(prepared, &quantized);
        let blocks = tile_quantum_blocks(&plane, layout)?;
        let grid = BlockGrid::for_plane(plane.width(), plane.height(), layout);
        let reports = costs
            .iter()
            .map(|c| bit_rate_with(&blocks, c, layout, grid, self.config.b_e_mode))
            .collect::<Result<Vec<_>, _>>()?;
        let reconstruction = self.reconstruct(prepared, &quantized)?;
        let mse = mse(&prepared.original, &reconstruction)?;
        Ok(QfRun {
            qf,
            plane,
            blocks,
            grid,
            reports,
            reconstruction,
            mse,
            psnr_db: psnr_from_mse(mse),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounting::Scheme;
    use crate::image_io::{synth_image, SynthKind};

    fn codec() -> ImageCodec<f64> {
        ImageCodec::new(PipelineConfig::default())
    }

    #[test]
    fn constant_image_costs_nothing() {
        let img = synth_image(SynthKind::Constant(128), 40, 24).unwrap();
        let c = codec();
        let prepared = c.prepare(&img);
        assert_eq!((prepared.padded().width(), prepared.padded().height()), (48, 32));
        let run = c.run(&prepared, 8, &Scheme::ALL).unwrap();
        assert_eq!(run.n_tcn(), 0);
        assert!(run.reports.iter().all(|r| r.br() == 0));
        assert_eq!(run.psnr_db, f64::INFINITY);
        assert_eq!(run.reconstruction, img);
    }

    #[test]
    fn non_mid_gray_constant_keeps_only_dc() {
        let img = synth_image(SynthKind::Constant(200), 16, 16).unwrap();
        let c = codec();
        let run = c.run(&c.prepare(&img), 1, &[Scheme::Scmneqr]).unwrap();
        // DC = 8 * (200 - 128) = 576 for each of the four 8x8 blocks
        assert_eq!(run.n_tcn(), 4);
        assert_eq!(run.plane.get(0, 0), 576);
        assert_eq!(run.plane.get(8, 8), 576);
        assert_eq!(run.reports[0].clamped_count(), 4);
        assert_eq!(run.reconstruction, img);
    }

    #[test]
    fn padding_excluded_from_distortion() {
        let img = synth_image(SynthKind::Gradient, 20, 13).unwrap();
        let c = codec();
        let run = c.run(&c.prepare(&img), 4, &[Scheme::Scmneqr]).unwrap();
        assert_eq!((run.reconstruction.width(), run.reconstruction.height()), (20, 13));
        assert!(run.psnr_db.is_finite() && run.psnr_db > 30.0);
    }

    #[test]
    fn smaller_blocks_pad_to_the_transform_size() {
        let layout = RegisterLayout::square(8, 4).unwrap();
        let c = ImageCodec::<f64>::new(PipelineConfig {
            layout,
            b_e_mode: BlockAddressMode::PerBlockAddress,
        });
        let img = synth_image(SynthKind::Checkerboard(2), 12, 12).unwrap();
        let run = c.run(&c.prepare(&img), 8, &Scheme::ALL).unwrap();
        assert_eq!(run.grid, BlockGrid { blocks_x: 4, blocks_y: 4 });
        assert!(run.reports[0].br() < run.reports[1].br());
    }

    #[test]
    fn f32_pipeline_agrees_on_rates() {
        let img = synth_image(SynthKind::Checkerboard(4), 32, 32).unwrap();
        let c64 = codec();
        let c32 = ImageCodec::<f32>::new(PipelineConfig::default());
        let a = c64.run(&c64.prepare(&img), 16, &[Scheme::Scmneqr]).unwrap();
        let b = c32.run(&c32.prepare(&img), 16, &[Scheme::Scmneqr]).unwrap();
        assert_eq!(a.reports[0].n_tcn(), b.reports[0].n_tcn());
    }
}
