//! Multi-channel image data model and color census.
//!
//! An [`ImageCube`] is a `width x height x channels` grid of finite,
//! non-negative reals stored row-major with the channel index fastest.
//! A pixel's "color" is its full spectral tuple, compared exactly.

mod io;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use io::{
    load_image, save_image, save_raw, Dtype, Endianness, ImageFormat, RawSidecar, RAW_LAYOUT,
};

/// Default census fraction above which an image is treated as fully colored.
pub const DEFAULT_FCI_THRESHOLD: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageCube {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<f64>,
    max_sample: f64,
    provenance: String,
}

impl ImageCube {
    /// Builds a cube from channel-last row-major samples.
    ///
    /// Derived levels (block reductions at large scales) may be as small as
    /// 1x1; ingestion and the generators enforce the 2x2 minimum separately.
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        samples: Vec<f64>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels,
                reason: "every dimension must be at least 1",
            });
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(Error::SampleCount {
                expected,
                actual: samples.len(),
            });
        }
        let mut samples = samples;
        let mut max_sample = 0.0f64;
        for (index, v) in samples.iter_mut().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidSample { index, value: *v });
            }
            // -0.0 passes the sign check but has a different bit pattern.
            if *v == 0.0 {
                *v = 0.0;
            }
            max_sample = max_sample.max(*v);
        }
        Ok(ImageCube {
            width,
            height,
            channels,
            samples,
            max_sample,
            provenance: provenance.into(),
        })
    }

    /// Builds a cube by evaluating `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        provenance: impl Into<String>,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    samples.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, samples, provenance)
    }

    /// Same as [`ImageCube::new`] but also enforces the 2x2 minimum that a
    /// top-level (ingested or generated) image must satisfy.
    pub fn new_top_level(
        width: usize,
        height: usize,
        channels: usize,
        samples: Vec<f64>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels,
                reason: "an image must be at least 2x2",
            });
        }
        Self::new(width, height, channels, samples, provenance)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn max_sample(&self) -> f64 {
        self.max_sample
    }

    /// Number of representable levels, `max(samples) + 1`.
    pub fn dynamics(&self) -> f64 {
        self.max_sample + 1.0
    }

    /// Largest meaningful dynamics divisor, `floor(max) + 1`; quantizing by
    /// it always yields the all-zero image.
    pub fn k_max(&self) -> u64 {
        self.max_sample.floor() as u64 + 1
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    /// The spectral tuple at `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.samples[start..start + self.channels]
    }

    pub fn color_key(&self, x: usize, y: usize) -> ColorKey {
        ColorKey::new(self.pixel(x, y))
    }

    pub fn pixels(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.channels)
    }

    pub fn is_integral(&self) -> bool {
        self.samples.iter().all(|v| v.fract() == 0.0)
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<ImageCube> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::CropOutOfBounds {
                x,
                y,
                w,
                h,
                width: self.width,
                height: self.height,
            });
        }
        let mut samples = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            samples.extend_from_slice(&self.samples[start..start + w * self.channels]);
        }
        let provenance = format!("{} | crop {x},{y} {w}x{h}", self.provenance);
        ImageCube::new(w, h, self.channels, samples, provenance)
    }

    /// Top-left square crop of side `min(width, height)`.
    pub fn crop_square(&self) -> Result<ImageCube> {
        if self.is_square() {
            return Ok(self.clone());
        }
        let side = self.width.min(self.height);
        self.crop(0, 0, side, side)
    }

    /// Dense color labels: pixels share a label iff their spectral tuples
    /// are exactly equal. Labels are assigned in first-occurrence order.
    pub fn color_labels(&self) -> ColorLabels {
        self.labels_with(|v| v)
    }

    /// Labels of `floor(v / k)` applied to every sample, identical to the
    /// labels of the quantized cube without materializing it.
    pub fn quantized_labels(&self, k: u64) -> ColorLabels {
        let k = k as f64;
        self.labels_with(|v| (v / k).floor())
    }

    fn labels_with(&self, f: impl Fn(f64) -> f64) -> ColorLabels {
        let n = self.pixel_count();
        let mut labels = Vec::with_capacity(n);
        let mut counts: Vec<usize> = Vec::new();
        let mut push = |label: u32, next: u32| {
            if label == next {
                counts.push(0);
            }
            counts[label as usize] += 1;
            labels.push(label);
        };
        if self.channels == 1 {
            let mut index: HashMap<u64, u32> = HashMap::with_capacity(n.min(1 << 16));
            for &v in &self.samples {
                let next = index.len() as u32;
                let label = *index.entry(f(v).to_bits()).or_insert(next);
                push(label, next);
            }
        } else {
            let bits: Vec<u64> = self.samples.iter().map(|&v| f(v).to_bits()).collect();
            let mut index: HashMap<&[u64], u32> = HashMap::with_capacity(n.min(1 << 16));
            for key in bits.chunks_exact(self.channels) {
                let next = index.len() as u32;
                let label = *index.entry(key).or_insert(next);
                push(label, next);
            }
        }
        ColorLabels {
            width: self.width,
            height: self.height,
            labels,
            counts,
        }
    }
}

/// Per-pixel color labels of one cube together with the label histogram.
#[derive(Debug, Clone)]
pub struct ColorLabels {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub counts: Vec<usize>,
}

impl ColorLabels {
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }
}

/// A pixel's full spectral tuple with exact (bitwise) equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColorKey(Box<[u64]>);

impl ColorKey {
    pub fn new(values: &[f64]) -> Self {
        ColorKey(
            values
                .iter()
                .map(|&v| {
                    if v == 0.0 {
                        0.0f64.to_bits()
                    } else {
                        v.to_bits()
                    }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from_bits(b)).collect()
    }

    /// Applies `floor(v / k)` to every channel value.
    pub fn binned(&self, k: u64) -> ColorKey {
        let k = k as f64;
        ColorKey::new(
            &self
                .values()
                .iter()
                .map(|v| (v / k).floor())
                .collect::<Vec<_>>(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct ColorCensus {
    pub total_pixels: usize,
    pub distinct_colors: usize,
    pub fraction: f64,
    pub histogram: HashMap<ColorKey, usize>,
}

impl ColorCensus {
    pub fn is_fully_colored(&self, threshold: f64) -> bool {
        self.fraction >= threshold
    }
}

pub fn color_census(cube: &ImageCube) -> ColorCensus {
    let mut histogram: HashMap<ColorKey, usize> = HashMap::new();
    for px in cube.pixels() {
        *histogram.entry(ColorKey::new(px)).or_insert(0) += 1;
    }
    let total_pixels = cube.pixel_count();
    let distinct_colors = histogram.len();
    ColorCensus {
        total_pixels,
        distinct_colors,
        fraction: distinct_colors as f64 / total_pixels as f64,
        histogram,
    }
}
