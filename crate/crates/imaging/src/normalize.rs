use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read '{path}': {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image format for '{0}' (expected PNG, JPEG or TIFF)")]
    Unsupported(PathBuf),
    #[error("cannot decode '{path}': {message}")]
    Decode { path: PathBuf, message: String },
    #[error("image has zero width or height")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NormalizeOptions {
    pub contrast_stretch: bool,
}

/// Percentile window applied by the contrast stretch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stretch {
    pub low: u8,
    pub high: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub stretch: Option<Stretch>,
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    pub provenance: Provenance,
}

impl CanonicalImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, LoadError> {
        if width == 0 || height == 0 {
            return Err(LoadError::Empty);
        }
        assert_eq!(pixels.len(), width as usize * height as usize, "pixel buffer size");
        Ok(Self {
            width,
            height,
            pixels,
            provenance: Provenance::default(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn from_gray(img: GrayImage) -> Result<Self, LoadError> {
        let (w, h) = img.dimensions();
        Self::new(w, h, img.into_raw())
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.pixels.clone()).expect("buffer matches dimensions")
    }

    pub fn save_png(&self, path: &Path) -> Result<(), image::ImageError> {
        self.to_gray().save_with_format(path, ImageFormat::Png)
    }
}

/// Read a PNG, JPEG or TIFF file, convert to luminance and optionally stretch
/// contrast.
pub fn load_and_normalize(path: &Path, options: NormalizeOptions) -> Result<CanonicalImage, LoadError> {
    let reader = ImageReader::open(path)
        .map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Jpeg | ImageFormat::Tiff) => {}
        _ => return Err(LoadError::Unsupported(path.to_path_buf())),
    }
    let decoded = reader.decode().map_err(|e| LoadError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut img = normalize(&decoded, options)?;
    img.provenance.source = Some(path.to_path_buf());
    Ok(img)
}

pub fn normalize(img: &DynamicImage, options: NormalizeOptions) -> Result<CanonicalImage, LoadError> {
    let mut out = CanonicalImage::from_gray(img.to_luma8())?;
    if options.contrast_stretch {
        out.provenance.stretch = stretch_contrast(&mut out.pixels);
    }
    Ok(out)
}

/// Nearest-rank percentile of an 8-bit histogram; `p` in (0, 100].
pub fn percentile(hist: &[u64; 256], p: f64) -> u8 {
    let n: u64 = hist.iter().sum();
    let rank = ((p / 100.0) * n as f64).ceil().max(1.0) as u64;
    let mut seen = 0;
    for (v, &c) in hist.iter().enumerate() {
        seen += c;
        if seen >= rank {
            return v as u8;
        }
    }
    255
}

/// Map the 2nd..98th percentile window affinely onto 0..=255, clamping the
/// tails. Returns `None` and leaves pixels untouched on a flat window.
pub fn stretch_contrast(pixels: &mut [u8]) -> Option<Stretch> {
    if pixels.is_empty() {
        return None;
    }
    let mut hist = [0u64; 256];
    for &p in pixels.iter() {
        hist[p as usize] += 1;
    }
    let low = percentile(&hist, 2.0);
    let high = percentile(&hist, 98.0);
    if high <= low {
        return None;
    }
    let span = (high - low) as f64;
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        let t = (v as f64 - low as f64) / span;
        *slot = (t * 255.0).round().clamp(0.0, 255.0) as u8;
    }
    for p in pixels.iter_mut() {
        *p = lut[*p as usize];
    }
    Some(Stretch { low, high })
}
