//! Grayscale image container, PGM/PNG codecs, padding and synthetic test patterns.
//!
//! Only 8-bit data is handled. PGM files must use `maxval` 255; PNG files may be
//! 8-bit grayscale, RGB or palette (palette is expanded to RGB). Color input is
//! reduced to luma with the BT.601 weights `0.299 R + 0.587 G + 0.114 B`.

use std::fmt;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("truncated image data: expected {expected} bytes of pixels, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("malformed image header: {0}")]
    Malformed(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("image has a zero dimension ({width}x{height})")]
    ZeroDimension { width: usize, height: usize },
    #[error("pixel buffer holds {len} values but {width}x{height} needs {}", width * height)]
    LengthMismatch { width: usize, height: usize, len: usize },
    #[error("invalid synthetic image spec `{0}`")]
    InvalidSynth(String),
}

pub type Result<T, E = ImageError> = std::result::Result<T, E>;

/// Row-major 8-bit grayscale raster.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::LengthMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
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
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Pixel at column `x`, row `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Top-left `width` x `height` region of this image.
    pub fn crop(&self, width: usize, height: usize) -> Result<Self> {
        if width > self.width || height > self.height {
            return Err(ImageError::Malformed(format!(
                "crop {width}x{height} exceeds {}x{}",
                self.width, self.height
            )));
        }
        Self::from_fn(width, height, |x, y| self.get(x, y))
    }
}

/// Reads a PGM (P2 or P5) or PNG file, dispatching on the file's magic bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(ImageError::UnsupportedFormat(format!(
            "netpbm variant P{}",
            bytes[1] as char
        )))
    } else {
        Err(ImageError::UnsupportedFormat("unrecognized magic bytes".into()))
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| ImageError::Malformed(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                ImageError::Malformed(format!("bad {what} `{}`", String::from_utf8_lossy(tok)))
            })
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let magic = cur.token().unwrap_or_default();
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(ImageError::UnsupportedFormat(format!(
                "netpbm magic `{}`",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::ZeroDimension { width, height });
    }
    if maxval != 255 {
        return Err(ImageError::UnsupportedFormat(format!("PGM maxval {maxval} (only 255)")));
    }
    let expected = width * height;
    let data = if binary {
        // exactly one whitespace byte separates maxval from the raster
        let start = cur.pos + 1;
        let raster = bytes.get(start..).unwrap_or_default();
        if raster.len() < expected {
            return Err(ImageError::Truncated {
                expected,
                found: raster.len(),
            });
        }
        raster[..expected].to_vec()
    } else {
        let mut data = Vec::with_capacity(expected);
        while data.len() < expected {
            let Some(tok) = cur.token() else {
                return Err(ImageError::Truncated {
                    expected,
                    found: data.len(),
                });
            };
            let v: u32 = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    ImageError::Malformed(format!("bad sample `{}`", String::from_utf8_lossy(tok)))
                })?;
            if v > 255 {
                return Err(ImageError::Malformed(format!("sample {v} exceeds maxval 255")));
            }
            data.push(v as u8);
        }
        data
    };
    GrayImage::new(width, height, data)
}

/// BT.601 luma, rounded half up (all terms are non-negative).
#[inline]
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000) as u8
}

pub fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let malformed = |e: png::DecodingError| ImageError::Malformed(format!("png: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(malformed)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::Malformed("png: frame too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(malformed)?;
    let (width, height) = (info.width as usize, info.height as usize);
    if width == 0 || height == 0 {
        return Err(ImageError::ZeroDimension { width, height });
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageError::UnsupportedFormat(format!(
            "png bit depth {:?}",
            info.bit_depth
        )));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(ImageError::UnsupportedFormat(format!("png color type {other:?}")));
        }
    };
    let mut data = Vec::with_capacity(width * height);
    for row in buf.chunks(info.line_size).take(height) {
        let row = &row[..width * channels];
        if channels == 1 {
            data.extend_from_slice(row);
        } else {
            data.extend(row.chunks_exact(3).map(|p| luma_bt601(p[0], p[1], p[2])));
        }
    }
    GrayImage::new(width, height, data)
}

/// Binary (P5) PGM encoding.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

/// ASCII (P2) PGM encoding, one image row per line.
pub fn encode_pgm_ascii(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n255\n", img.width, img.height);
    for row in img.data.chunks(img.width) {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Rounds both dimensions up to a multiple of `block`, replicating the last
/// column and row into the new area.
///
/// # Panics
/// If `block` is zero.
pub fn pad_to_block_multiple(img: &GrayImage, block: usize) -> GrayImage {
    assert!(block >= 1, "block size must be positive");
    let width = img.width.div_ceil(block) * block;
    let height = img.height.div_ceil(block) * block;
    if width == img.width && height == img.height {
        return img.clone();
    }
    GrayImage::from_fn(width, height, |x, y| {
        img.get(x.min(img.width - 1), y.min(img.height - 1))
    })
    .expect("padded dimensions are non-zero")
}

/// Deterministic test patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Constant(u8),
    /// `round(255 (x + y) / (w + h - 2))`; a 1x1 image is black.
    Gradient,
    /// Alternating `period`-sized tiles of 0 and 255, black at the origin.
    Checkerboard(usize),
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthKind::Constant(c) => write!(f, "constant:{c}"),
            SynthKind::Gradient => f.write_str("gradient"),
            SynthKind::Checkerboard(p) => write!(f, "checkerboard:{p}"),
        }
    }
}

pub fn synth_image(kind: SynthKind, width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(ImageError::ZeroDimension { width, height });
    }
    match kind {
        SynthKind::Constant(c) => GrayImage::filled(width, height, c),
        SynthKind::Gradient => {
            let span = (width + height - 2) as u64;
            GrayImage::from_fn(width, height, |x, y| {
                if span == 0 {
                    0
                } else {
                    // round half up of 255 (x + y) / span, in integers
                    ((2 * 255 * (x + y) as u64 + span) / (2 * span)) as u8
                }
            })
        }
        SynthKind::Checkerboard(period) => {
            if period == 0 {
                return Err(ImageError::InvalidSynth("checkerboard period 0".into()));
            }
            GrayImage::from_fn(width, height, |x, y| {
                if (x / period + y / period) % 2 == 0 {
                    0
                } else {
                    255
                }
            })
        }
    }
}

/// Inline synthetic image reference such as `synth:checkerboard:8:512x512`,
/// `synth:gradient:64x64` or `synth:constant:128:16x16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub width: usize,
    pub height: usize,
}

impl SynthSpec {
    pub fn render(&self) -> Result<GrayImage> {
        synth_image(self.kind, self.width, self.height)
    }
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "synth:{}:{}x{}", self.kind, self.width, self.height)
    }
}

impl FromStr for SynthSpec {
    type Err = ImageError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || ImageError::InvalidSynth(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        if parts.first() != Some(&"synth") || parts.len() < 3 {
            return Err(bad());
        }
        let dims = parts.last().ok_or_else(bad)?;
        let (w, h) = dims.split_once('x').ok_or_else(bad)?;
        let width: usize = w.parse().map_err(|_| bad())?;
        let height: usize = h.parse().map_err(|_| bad())?;
        let kind = match &parts[1..parts.len() - 1] {
            ["gradient"] => SynthKind::Gradient,
            ["constant", c] => SynthKind::Constant(c.parse().map_err(|_| bad())?),
            ["checkerboard", p] => {
                let p: usize = p.parse().map_err(|_| bad())?;
                if p == 0 {
                    return Err(bad());
                }
                SynthKind::Checkerboard(p)
            }
            _ => return Err(bad()),
        };
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        Ok(SynthSpec {
            kind,
            width,
            height,
        })
    }
}
