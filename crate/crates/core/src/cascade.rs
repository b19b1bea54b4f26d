//! The two-parameter cascade `C(k, s)`: box reduction to spatial scale `s`,
//! then euclidean division of every sample by the dynamics step `k`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecube::ImageCube;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CascadeParams {
    pub k: u64,
    pub s: usize,
}

impl CascadeParams {
    pub fn new(k: u64, s: usize) -> Self {
        CascadeParams { k, s }
    }

    pub fn validate(&self, cube: &ImageCube) -> Result<()> {
        check_scale(cube, self.s)?;
        let k_max = cube.k_max();
        if self.k == 0 || self.k > k_max {
            return Err(Error::DivisorOutOfRange {
                k: self.k,
                max: k_max,
            });
        }
        Ok(())
    }
}

pub(crate) fn check_scale(cube: &ImageCube, s: usize) -> Result<()> {
    let max = cube.width().min(cube.height());
    if s == 0 || s > max {
        return Err(Error::ScaleOutOfRange { s, max });
    }
    Ok(())
}

/// Mean over non-overlapping `s x s` blocks, per channel. Rows and columns
/// past `floor(W/s)*s` / `floor(H/s)*s` are dropped.
pub fn block_reduce(cube: &ImageCube, s: usize) -> Result<ImageCube> {
    check_scale(cube, s)?;
    if s == 1 {
        return Ok(cube.clone());
    }
    let (w, c) = (cube.width(), cube.channels());
    let (out_w, out_h) = (w / s, cube.height() / s);
    let src = cube.samples();
    let area = (s * s) as f64;
    let mut out = vec![0.0; out_w * out_h * c];
    let mut row_sums = vec![0.0; out_w * c];
    for oy in 0..out_h {
        row_sums.iter_mut().for_each(|v| *v = 0.0);
        for y in oy * s..(oy + 1) * s {
            let line = &src[y * w * c..(y * w + out_w * s) * c];
            for (ox, acc) in row_sums.chunks_exact_mut(c).enumerate() {
                for px in line[ox * s * c..(ox + 1) * s * c].chunks_exact(c) {
                    for (a, v) in acc.iter_mut().zip(px) {
                        *a += v;
                    }
                }
            }
        }
        let dst = &mut out[oy * out_w * c..(oy + 1) * out_w * c];
        for (d, sum) in dst.iter_mut().zip(&row_sums) {
            *d = sum / area;
        }
    }
    ImageCube::new(
        out_w,
        out_h,
        c,
        out,
        format!("{} | reduce s={s}", cube.provenance()),
    )
}

/// `floor(v / k)` on every sample.
pub fn quantize(cube: &ImageCube, k: u64) -> Result<ImageCube> {
    if k == 0 {
        return Err(Error::DivisorOutOfRange {
            k,
            max: cube.k_max(),
        });
    }
    if k == 1 && cube.is_integral() {
        return Ok(cube.clone());
    }
    let kf = k as f64;
    let samples = cube.samples().iter().map(|v| (v / kf).floor()).collect();
    ImageCube::new(
        cube.width(),
        cube.height(),
        cube.channels(),
        samples,
        format!("{} | quantize k={k}", cube.provenance()),
    )
}

/// `C(k, s)`: reduction first, quantization second.
pub fn cascade_level(cube: &ImageCube, p: CascadeParams) -> Result<ImageCube> {
    p.validate(cube)?;
    quantize(&block_reduce(cube, p.s)?, p.k)
}

/// Block reductions of one image at a set of scales, computed once and
/// shared read-only by every dynamics step.
#[derive(Debug, Clone)]
pub struct ScaleReductions {
    scales: Vec<usize>,
    levels: Vec<ImageCube>,
}

impl ScaleReductions {
    pub fn new(cube: &ImageCube, scales: &[usize]) -> Result<Self> {
        let mut scales = scales.to_vec();
        scales.sort_unstable();
        scales.dedup();
        for &s in &scales {
            check_scale(cube, s)?;
        }
        let levels = scales
            .par_iter()
            .map(|&s| block_reduce(cube, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScaleReductions { scales, levels })
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn get(&self, s: usize) -> Option<&ImageCube> {
        self.scales.binary_search(&s).ok().map(|i| &self.levels[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &ImageCube)> {
        self.scales.iter().copied().zip(&self.levels)
    }
}
