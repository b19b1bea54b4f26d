//! Shannon entropies of color and pattern distributions over the cascade,
//! and the log-scale fit of color entropy against spatial scale.
//!
//! All entropies are plug-in estimates in nats.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{check_scale, ScaleReductions};
use crate::error::{Error, Result};
use crate::imagecube::ImageCube;
use crate::necklace::{pattern_counts, PatternMap};

/// `-sum p ln p` over a histogram. Counts are summed in ascending order so
/// that two histograms with the same multiset of counts give bit-identical
/// entropies regardless of how they were built.
pub fn entropy_from_counts<I: IntoIterator<Item = usize>>(counts: I) -> f64 {
    let mut counts: Vec<usize> = counts.into_iter().filter(|&n| n > 0).collect();
    counts.sort_unstable();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let mut s = 0.0;
    for n in counts {
        let p = n as f64 / total;
        s -= p * p.ln();
    }
    s
}

pub fn shannon_entropy(cube: &ImageCube) -> f64 {
    entropy_from_counts(cube.color_labels().counts)
}

pub fn pattern_entropy(pm: &PatternMap) -> f64 {
    entropy_from_counts(pm.counts().iter().copied())
}

/// Color and pattern entropy of `C(k, s)` given the scale-`s` reduction.
pub(crate) fn level_entropies(reduced: &ImageCube, k: u64) -> (f64, f64) {
    let labels = reduced.quantized_labels(k);
    let pattern = entropy_from_counts(pattern_counts(&labels));
    (entropy_from_counts(labels.counts), pattern)
}

pub(crate) fn level_color_entropy(reduced: &ImageCube, k: u64) -> f64 {
    entropy_from_counts(reduced.quantized_labels(k).counts)
}

pub(crate) fn level_pattern_entropy(reduced: &ImageCube, k: u64) -> f64 {
    entropy_from_counts(pattern_counts(&reduced.quantized_labels(k)))
}

/// `S_C` and `S_H` over a `(k, s)` grid. Values are stored k-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySurface {
    k_grid: Vec<u64>,
    s_grid: Vec<usize>,
    color: Vec<f64>,
    pattern: Vec<f64>,
}

impl EntropySurface {
    pub fn k_grid(&self) -> &[u64] {
        &self.k_grid
    }

    pub fn s_grid(&self) -> &[usize] {
        &self.s_grid
    }

    fn cell(&self, k: u64, s: usize) -> Option<usize> {
        let ki = self.k_grid.binary_search(&k).ok()?;
        let si = self.s_grid.binary_search(&s).ok()?;
        Some(ki * self.s_grid.len() + si)
    }

    pub fn color(&self, k: u64, s: usize) -> Option<f64> {
        self.cell(k, s).map(|i| self.color[i])
    }

    pub fn pattern(&self, k: u64, s: usize) -> Option<f64> {
        self.cell(k, s).map(|i| self.pattern[i])
    }

    /// `(s, S_C)` along the scale axis at fixed `k`.
    pub fn color_vs_scale(&self, k: u64) -> Option<Vec<(usize, f64)>> {
        let ki = self.k_grid.binary_search(&k).ok()?;
        let n = self.s_grid.len();
        Some(
            self.s_grid
                .iter()
                .copied()
                .zip(self.color[ki * n..(ki + 1) * n].iter().copied())
                .collect(),
        )
    }

    /// `(s, S_H)` along the scale axis at fixed `k`.
    pub fn pattern_vs_scale(&self, k: u64) -> Option<Vec<(usize, f64)>> {
        let ki = self.k_grid.binary_search(&k).ok()?;
        let n = self.s_grid.len();
        Some(
            self.s_grid
                .iter()
                .copied()
                .zip(self.pattern[ki * n..(ki + 1) * n].iter().copied())
                .collect(),
        )
    }

    /// `(k, S_H)` along the dynamics axis at fixed `s`.
    pub fn pattern_vs_k(&self, s: usize) -> Option<Vec<(u64, f64)>> {
        let si = self.s_grid.binary_search(&s).ok()?;
        let n = self.s_grid.len();
        Some(
            self.k_grid
                .iter()
                .enumerate()
                .map(|(ki, &k)| (k, self.pattern[ki * n + si]))
                .collect(),
        )
    }

    /// CSV with columns `k,s,S_C,S_H`, one row per cell, k-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        self.write_csv_filtered(&mut out, |_, _| true)
    }

    pub fn write_csv_filtered<W: Write>(
        &self,
        mut out: W,
        keep: impl Fn(u64, usize) -> bool,
    ) -> io::Result<()> {
        writeln!(out, "k,s,S_C,S_H")?;
        let n = self.s_grid.len();
        for (ki, &k) in self.k_grid.iter().enumerate() {
            for (si, &s) in self.s_grid.iter().enumerate() {
                if keep(k, s) {
                    let i = ki * n + si;
                    writeln!(out, "{k},{s},{},{}", self.color[i], self.pattern[i])?;
                }
            }
        }
        Ok(())
    }
}

fn check_grid<T: Ord + Copy + std::fmt::Debug>(name: &str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid(format!(
            "{name} grid must be strictly ascending: {grid:?}"
        )));
    }
    Ok(())
}

pub(crate) fn check_k_grid(cube: &ImageCube, k_grid: &[u64]) -> Result<()> {
    check_grid("k", k_grid)?;
    let max = cube.k_max();
    match k_grid.iter().find(|&&k| k == 0 || k > max) {
        Some(&k) => Err(Error::DivisorOutOfRange { k, max }),
        None => Ok(()),
    }
}

/// Evaluates `S_C` and `S_H` at every `(k, s)` of the grids. Each scale is
/// reduced once; cells are independent, so the result does not depend on
/// the thread schedule.
pub fn entropy_surface(
    cube: &ImageCube,
    k_grid: &[u64],
    s_grid: &[usize],
) -> Result<EntropySurface> {
    check_k_grid(cube, k_grid)?;
    check_grid("s", s_grid)?;
    for &s in s_grid {
        check_scale(cube, s)?;
    }
    let reductions = ScaleReductions::new(cube, s_grid)?;
    let levels: Vec<&ImageCube> = s_grid
        .iter()
        .map(|&s| reductions.get(s).expect("every grid scale was reduced"))
        .collect();
    let ns = s_grid.len();
    let cells: Vec<(f64, f64)> = (0..k_grid.len() * ns)
        .into_par_iter()
        .map(|i| level_entropies(levels[i % ns], k_grid[i / ns]))
        .collect();
    let (color, pattern) = cells.into_iter().unzip();
    Ok(EntropySurface {
        k_grid: k_grid.to_vec(),
        s_grid: s_grid.to_vec(),
        color,
        pattern,
    })
}

/// Largest `S_H` over the dynamics axis at scale `s`; ties go to the
/// smallest `k`.
pub fn max_over_k(surface: &EntropySurface, s: usize) -> Result<(u64, f64)> {
    let column = surface.pattern_vs_k(s).ok_or(Error::ScaleAbsent(s))?;
    let mut best = column[0];
    for &(k, v) in &column[1..] {
        if v > best.1 {
            best = (k, v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    #[serde(rename = "a")]
    pub slope: f64,
    #[serde(rename = "b")]
    pub intercept: f64,
    #[serde(rename = "sigma_a")]
    pub sigma_slope: f64,
    #[serde(rename = "sigma_b")]
    pub sigma_intercept: f64,
    #[serde(rename = "rms")]
    pub rms_residual: f64,
    #[serde(rename = "n")]
    pub n_points: usize,
}

/// Which scale ratio the entropy is regressed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LogScaleAbscissa {
    /// `ln(s / N)`.
    Nominal,
    /// `ln(s / N_s)` with `N_s = s * floor(N / s)`, the side that survives
    /// the crop at scale `s`. Equal to `Nominal` whenever `s` divides `N`.
    #[default]
    Cropped,
}

impl LogScaleAbscissa {
    pub fn abscissa(self, s: usize, n: usize) -> f64 {
        match self {
            LogScaleAbscissa::Nominal => (s as f64 / n as f64).ln(),
            LogScaleAbscissa::Cropped => -((n / s) as f64).ln(),
        }
    }
}

/// Ordinary least squares of `S` against `ln(s / N)`.
pub fn fit_log_scale(points: &[(usize, f64)], n: usize) -> Result<FitResult> {
    fit_log_scale_with(points, n, LogScaleAbscissa::Nominal)
}

pub fn fit_log_scale_with(
    points: &[(usize, f64)],
    n: usize,
    abscissa: LogScaleAbscissa,
) -> Result<FitResult> {
    if let Some(&(s, _)) = points.iter().find(|(s, _)| *s == 0 || *s > n) {
        return Err(Error::ScaleOutOfRange { s, max: n });
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(s, v)| (abscissa.abscissa(s, n), v))
        .collect();
    fit_line(&xy)
}

/// Least-squares line `y = a x + b` with standard errors from the residual
/// variance.
pub fn fit_line(points: &[(f64, f64)]) -> Result<FitResult> {
    let n = points.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateAbscissa);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let residual_var = rss / (nf - 2.0);
    Ok(FitResult {
        slope,
        intercept,
        sigma_slope: (residual_var / sxx).sqrt(),
        sigma_intercept: (residual_var * (1.0 / nf + mean_x * mean_x / sxx)).sqrt(),
        rms_residual: (rss / nf).sqrt(),
        n_points: n,
    })
}
