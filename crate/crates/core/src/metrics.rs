//! Distortion metrics and rate-distortion sweeps.

use thiserror::Error;

use crate::accounting::ConnectionCost;
use crate::image_io::GrayImage;
use crate::pipeline::{ImageCodec, PipelineError};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

const PEAK: f64 = 255.0;

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<(), MetricsError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricsError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    Ok(())
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricsError> {
    check_dims(a, b)?;
    let sum: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.data().len() as f64)
}

/// `10 log10(255^2 / mse)`, infinite for a zero error.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricsError> {
    mse(a, b).map(psnr_from_mse)
}

/// One point of a rate-distortion curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub qf: u32,
    pub br_bits: u64,
    /// `f64::INFINITY` when the reconstruction is exact.
    pub psnr_db: f64,
    pub scheme: String,
}

/// Factors swept when none are given.
pub const DEFAULT_QFS: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];

/// Runs the full pipeline for every quantization factor and cost model.
///
/// Factors are visited in ascending order (duplicates dropped); within one
/// factor, points follow the order of `costs`.
pub fn rd_sweep<T: Real, C: ConnectionCost>(
    codec: &ImageCodec<T>,
    img: &GrayImage,
    qfs: &[u32],
    costs: &[C],
) -> Result<Vec<RdPoint>, PipelineError> {
    if qfs.is_empty() {
        return Err(PipelineError::NoQuantizationFactors);
    }
    let mut qfs = qfs.to_vec();
    qfs.sort_unstable();
    qfs.dedup();
    let prepared = codec.prepare(img);
    let mut points = Vec::with_capacity(qfs.len() * costs.len());
    for qf in qfs {
        let run = codec.run(&prepared, qf, costs)?;
        points.extend(run.reports.iter().map(|r| RdPoint {
            qf,
            br_bits: r.br(),
            psnr_db: run.psnr_db,
            scheme: r.scheme().to_string(),
        }));
    }
    Ok(points)
}
