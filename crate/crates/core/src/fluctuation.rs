//! Entropy production across spatial scale and the integral fluctuation
//! statistics `Omega+-` built from it.
//!
//! For a square image of side `N` and a dynamics step `k`, `S(s)` is the
//! entropy of `C(k, s)` and `dS(s) = S(s+1) - S(s)`. Then
//! `Omega+- = mean_s exp(+-dS(s))`, over `s = 1..N-1` for color entropy and
//! over `s = 1..N/2` for pattern entropy.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::ScaleReductions;
use crate::entropy::{check_k_grid, level_color_entropy, level_pattern_entropy, EntropySurface};
use crate::error::{Error, Result};
use crate::imagecube::ImageCube;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMode {
    Color,
    Pattern,
}

impl EntropyMode {
    fn min_side(self) -> usize {
        match self {
            EntropyMode::Color => 3,
            EntropyMode::Pattern => 6,
        }
    }

    /// Scales whose entropies enter the sum: `1..=N` or `1..=N/2 + 1`.
    fn scales(self, n: usize) -> Vec<usize> {
        match self {
            EntropyMode::Color => (1..=n).collect(),
            EntropyMode::Pattern => (1..=n / 2 + 1).collect(),
        }
    }

    /// Alternative prefactor: `N/2 - 1` for the `N/2` pattern-mode terms,
    /// equal to the term count in color mode.
    fn alt_normalization(self, n: usize) -> f64 {
        match self {
            EntropyMode::Color => (n - 1) as f64,
            EntropyMode::Pattern => (n / 2 - 1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaPair {
    pub k: u64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub omega_plus_alt_norm: f64,
    pub omega_minus_alt_norm: f64,
    pub n_terms: usize,
}

impl OmegaPair {
    /// Builds the pair from `S(s)` sampled at consecutive scales.
    pub fn from_entropies(k: u64, entropies: &[f64], alt_normalization: f64) -> Self {
        let deltas: Vec<f64> = entropies.windows(2).map(|w| w[1] - w[0]).collect();
        Self::from_deltas(k, &deltas, alt_normalization)
    }

    pub fn from_deltas(k: u64, deltas: &[f64], alt_normalization: f64) -> Self {
        let plus: f64 = deltas.iter().map(|d| d.exp()).sum();
        let minus: f64 = deltas.iter().map(|d| (-d).exp()).sum();
        let n = deltas.len() as f64;
        OmegaPair {
            k,
            omega_plus: plus / n,
            omega_minus: minus / n,
            omega_plus_alt_norm: plus / alt_normalization,
            omega_minus_alt_norm: minus / alt_normalization,
            n_terms: deltas.len(),
        }
    }

    /// `max(|Omega+ - 1|, |Omega- - 1|)`.
    pub fn deviation(&self) -> f64 {
        (self.omega_plus - 1.0)
            .abs()
            .max((self.omega_minus - 1.0).abs())
    }
}

fn check_square(cube: &ImageCube, mode: EntropyMode) -> Result<usize> {
    if !cube.is_square() {
        return Err(Error::NotSquare {
            width: cube.width(),
            height: cube.height(),
        });
    }
    let n = cube.width();
    if n < mode.min_side() {
        return Err(Error::TooSmall {
            side: n,
            min: mode.min_side(),
        });
    }
    Ok(n)
}

fn level_entropy(mode: EntropyMode, reduced: &ImageCube, k: u64) -> f64 {
    match mode {
        EntropyMode::Color => level_color_entropy(reduced, k),
        EntropyMode::Pattern => level_pattern_entropy(reduced, k),
    }
}

/// Entropy production of a square image across scales, sharing the block
/// reductions between every requested dynamics step.
#[derive(Debug, Clone)]
pub struct ScaleProduction {
    mode: EntropyMode,
    n: usize,
    reductions: ScaleReductions,
}

impl ScaleProduction {
    pub fn new(cube: &ImageCube, mode: EntropyMode) -> Result<Self> {
        let n = check_square(cube, mode)?;
        let reductions = ScaleReductions::new(cube, &mode.scales(n))?;
        Ok(ScaleProduction {
            mode,
            n,
            reductions,
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// `S(s)` at every scale of the sum.
    pub fn entropies(&self, k: u64) -> Vec<f64> {
        self.reductions
            .iter()
            .map(|(_, level)| level_entropy(self.mode, level, k))
            .collect()
    }

    pub fn deltas(&self, k: u64) -> Vec<(usize, f64)> {
        let s = self.entropies(k);
        s.windows(2)
            .enumerate()
            .map(|(i, w)| (i + 1, w[1] - w[0]))
            .collect()
    }

    pub fn omega(&self, k: u64) -> OmegaPair {
        OmegaPair::from_entropies(k, &self.entropies(k), self.mode.alt_normalization(self.n))
    }

    pub fn omega_all(&self, k_grid: &[u64]) -> Vec<OmegaPair> {
        k_grid.par_iter().map(|&k| self.omega(k)).collect()
    }
}

fn check_k(cube: &ImageCube, k: u64) -> Result<()> {
    check_k_grid(cube, &[k])
}

pub fn omega_image(cube: &ImageCube, k: u64) -> Result<OmegaPair> {
    check_k(cube, k)?;
    Ok(ScaleProduction::new(cube, EntropyMode::Color)?.omega(k))
}

pub fn omega_patterns(cube: &ImageCube, k: u64) -> Result<OmegaPair> {
    check_k(cube, k)?;
    Ok(ScaleProduction::new(cube, EntropyMode::Pattern)?.omega(k))
}

pub fn delta_entropy_series(
    cube: &ImageCube,
    k: u64,
    mode: EntropyMode,
) -> Result<Vec<(usize, f64)>> {
    check_k(cube, k)?;
    Ok(ScaleProduction::new(cube, mode)?.deltas(k))
}

/// Omega pairs read off an entropy surface that already covers every
/// scale the sum needs.
pub fn omega_from_surface(
    surface: &EntropySurface,
    k: u64,
    n: usize,
    mode: EntropyMode,
) -> Result<OmegaPair> {
    let series = match mode {
        EntropyMode::Color => surface.color_vs_scale(k),
        EntropyMode::Pattern => surface.pattern_vs_scale(k),
    }
    .ok_or_else(|| Error::InvalidGrid(format!("k={k} is not in the surface")))?;
    let entropies = mode
        .scales(n)
        .into_iter()
        .map(|s| {
            series
                .iter()
                .find(|(t, _)| *t == s)
                .map(|&(_, v)| v)
                .ok_or(Error::ScaleAbsent(s))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(OmegaPair::from_entropies(
        k,
        &entropies,
        mode.alt_normalization(n),
    ))
}

/// CSV with columns
/// `k,omega_plus,omega_minus,omega_plus_alt_norm,omega_minus_alt_norm,n_terms`.
pub fn write_omega_csv<W: Write>(pairs: &[OmegaPair], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "k,omega_plus,omega_minus,omega_plus_alt_norm,omega_minus_alt_norm,n_terms"
    )?;
    for p in pairs {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.k,
            p.omega_plus,
            p.omega_minus,
            p.omega_plus_alt_norm,
            p.omega_minus_alt_norm,
            p.n_terms
        )?;
    }
    Ok(())
}
