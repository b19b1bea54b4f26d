//! Full analysis of one image and the verdicts on the three scale laws:
//!
//! * L1: color entropy of `C(1, s)` is linear in `ln(s/N)` with slope -2;
//! * L2: the maximum over `k` of the pattern entropy is 1.74 at every scale;
//! * L3: pattern-entropy production across scale gives `Omega+- = 1`.
//!
//! Verdicts are data. A failing law never aborts the analysis, and every
//! pass flag can be recomputed from the numbers stored next to it.

use serde::Serialize;

use crate::cascade::{check_scale, ScaleReductions};
use crate::entropy::{
    entropy_surface, fit_log_scale_with, max_over_k, EntropySurface, FitResult, LogScaleAbscissa,
};
use crate::error::{Error, Result};
use crate::fluctuation::{omega_from_surface, EntropyMode, OmegaPair};
use crate::imagecube::{color_census, ImageCube, DEFAULT_FCI_THRESHOLD};
use crate::necklace::{pattern_counts, PatternClass};

pub const REPORT_SCHEMA_VERSION: &str = "scalelaws.law-report/1";
pub const ABUNDANCE_NORMALIZATION: &str = "sum-over-k-then-renormalize";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub l1_target_slope: f64,
    pub l1_slope: f64,
    pub l1_intercept: f64,
    pub l2_target: f64,
    pub l2_max: f64,
    pub l2_spread: f64,
    pub l3_omega: f64,
}

impl Tolerances {
    /// Bounds as measured on natural fully colored scenes.
    pub fn natural_scene() -> Self {
        Tolerances {
            l1_target_slope: -2.0,
            l1_slope: 0.01,
            l1_intercept: 0.05,
            l2_target: 1.74,
            l2_max: 0.013,
            l2_spread: 0.026,
            l3_omega: 0.01,
        }
    }

    /// Widened bounds for synthetic images.
    pub fn synthetic() -> Self {
        Tolerances {
            l1_slope: 0.05,
            l1_intercept: 0.1,
            l2_max: 0.05,
            l2_spread: 0.1,
            l3_omega: 0.02,
            ..Self::natural_scene()
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::natural_scene()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawConfig {
    /// Step of the dynamics grid `1, 1 + step, ...` (always capped at `k_max`).
    pub k_step: u64,
    /// Largest scale of the L1 fit; `None` means `N / 2`.
    pub s_max: Option<usize>,
    pub probe_scales: Vec<usize>,
    pub abundance_scale: usize,
    pub fci_threshold: f64,
    pub abscissa: LogScaleAbscissa,
    pub tolerances: Tolerances,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            k_step: 1,
            s_max: None,
            probe_scales: vec![1, 2, 4, 8, 16],
            abundance_scale: 1,
            fci_threshold: DEFAULT_FCI_THRESHOLD,
            abscissa: LogScaleAbscissa::Cropped,
            tolerances: Tolerances::natural_scene(),
        }
    }
}

/// `1, 1 + step, 1 + 2 step, ...` up to and including `k_max`.
pub fn k_grid(k_max: u64, step: u64) -> Result<Vec<u64>> {
    if step == 0 {
        return Err(Error::InvalidGrid("k step must be at least 1".into()));
    }
    let mut grid: Vec<u64> = (1..=k_max).step_by(step as usize).collect();
    if grid.last() != Some(&k_max) {
        grid.push(k_max);
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusSummary {
    pub total_pixels: usize,
    pub distinct_colors: usize,
    pub fraction: f64,
    pub fully_colored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerKFit {
    pub k: u64,
    pub a: f64,
    pub b: f64,
    pub sigma_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Report {
    pub abscissa: LogScaleAbscissa,
    pub scales: Vec<usize>,
    pub entropies: Vec<f64>,
    pub fit: FitResult,
    pub per_k: Vec<PerKFit>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleMaximum {
    pub s: usize,
    pub k_star: u64,
    pub s_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2Report {
    pub probes: Vec<ScaleMaximum>,
    pub mean: f64,
    pub spread: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L3Report {
    pub patterns: Vec<OmegaPair>,
    pub max_deviation: f64,
    pub worst_k: u64,
    pub pass: bool,
    /// Color-entropy production, for display only.
    pub image: Vec<OmegaPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbundanceReport {
    pub scale: usize,
    pub normalization: &'static str,
    pub patterns: [&'static str; 7],
    pub percent: [f64; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub schema_version: &'static str,
    pub provenance: String,
    pub side: usize,
    pub channels: usize,
    pub k_max: u64,
    pub config: LawConfig,
    pub census: CensusSummary,
    /// Set for non-FCI inputs, whose verdicts are informational only.
    pub informational: bool,
    pub l1: L1Report,
    pub l2: L2Report,
    pub l3: L3Report,
    pub abundance: AbundanceReport,
}

impl LawReport {
    /// Verdicts recomputed from the stored numbers and tolerances.
    pub fn recompute_verdicts(&self) -> [bool; 3] {
        let t = &self.config.tolerances;
        [
            l1_pass(&self.l1.fit, t),
            l2_pass(self.l2.mean, self.l2.spread, t),
            self.l3.max_deviation <= t.l3_omega,
        ]
    }

    pub fn verdicts(&self) -> [bool; 3] {
        [self.l1.pass, self.l2.pass, self.l3.pass]
    }
}

fn l1_pass(fit: &FitResult, t: &Tolerances) -> bool {
    (fit.slope - t.l1_target_slope).abs() <= t.l1_slope && fit.intercept.abs() <= t.l1_intercept
}

fn l2_pass(mean: f64, spread: f64, t: &Tolerances) -> bool {
    (mean - t.l2_target).abs() <= t.l2_max && spread <= t.l2_spread
}

/// Share of each pattern class at scale `s`, summed over every `k` in
/// `1..=k_max` and renormalized to percent.
pub fn abundance_profile(cube: &ImageCube, s: usize) -> Result<[f64; 7]> {
    check_scale(cube, s)?;
    let reductions = ScaleReductions::new(cube, &[s])?;
    let level = reductions.get(s).expect("reduced");
    if level.width() < 2 || level.height() < 2 {
        return Err(Error::TooSmall {
            side: level.width().min(level.height()),
            min: 2,
        });
    }
    use rayon::prelude::*;
    let per_k: Vec<[f64; 7]> = (1..=cube.k_max())
        .into_par_iter()
        .map(|k| {
            let counts = pattern_counts(&level.quantized_labels(k));
            let total: usize = counts.iter().sum();
            counts.map(|c| c as f64 / total as f64)
        })
        .collect();
    let mut sums = [0.0; 7];
    for fractions in &per_k {
        for (acc, f) in sums.iter_mut().zip(fractions) {
            *acc += f;
        }
    }
    let total: f64 = sums.iter().sum();
    Ok(sums.map(|v| 100.0 * v / total))
}

/// Runs the full pipeline. See [`verify_laws_with_surface`].
pub fn verify_laws(cube: &ImageCube, config: &LawConfig) -> Result<LawReport> {
    verify_laws_with_surface(cube, config).map(|(report, _)| report)
}

/// Runs census, the `(k, s)` entropy surface over every scale `1..=N`, the
/// L1 fit, the L2 maxima, the L3 production statistics and the abundance
/// profile. Also returns the surface for export.
pub fn verify_laws_with_surface(
    cube: &ImageCube,
    config: &LawConfig,
) -> Result<(LawReport, EntropySurface)> {
    if !cube.is_square() {
        return Err(Error::NotSquare {
            width: cube.width(),
            height: cube.height(),
        });
    }
    let n = cube.width();
    if n < 6 {
        return Err(Error::TooSmall { side: n, min: 6 });
    }
    let s_max = config.s_max.unwrap_or(n / 2);
    if s_max < 3 || s_max > n {
        return Err(Error::InvalidGrid(format!(
            "s_max must be in 3..={n}, got {s_max}"
        )));
    }
    if config.probe_scales.is_empty() {
        return Err(Error::InvalidGrid("no L2 probe scales".into()));
    }
    if let Some(&s) = config.probe_scales.iter().find(|&&s| s == 0 || s > n / 2) {
        return Err(Error::InvalidGrid(format!(
            "probe scale {s} outside 1..={}",
            n / 2
        )));
    }
    let ks = k_grid(cube.k_max(), config.k_step)?;
    let scales: Vec<usize> = (1..=n).collect();
    let surface = entropy_surface(cube, &ks, &scales)?;

    let census = color_census(cube);
    let census = CensusSummary {
        total_pixels: census.total_pixels,
        distinct_colors: census.distinct_colors,
        fraction: census.fraction,
        fully_colored: census.is_fully_colored(config.fci_threshold),
    };

    let t = config.tolerances;
    let fit_scales: Vec<usize> = (1..=s_max).collect();
    let fit_at = |k: u64| -> Result<(Vec<f64>, FitResult)> {
        let entropies: Vec<f64> = fit_scales
            .iter()
            .map(|&s| surface.color(k, s).expect("surface covers every scale"))
            .collect();
        let points: Vec<(usize, f64)> = fit_scales
            .iter()
            .copied()
            .zip(entropies.iter().copied())
            .collect();
        Ok((entropies, fit_log_scale_with(&points, n, config.abscissa)?))
    };
    let (entropies, fit) = fit_at(1)?;
    let per_k = ks
        .iter()
        .map(|&k| {
            fit_at(k).map(|(_, f)| PerKFit {
                k,
                a: f.slope,
                b: f.intercept,
                sigma_a: f.sigma_slope,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let l1 = L1Report {
        abscissa: config.abscissa,
        scales: fit_scales.clone(),
        entropies,
        pass: l1_pass(&fit, &t),
        fit,
        per_k,
    };

    let mut probes = config.probe_scales.clone();
    probes.sort_unstable();
    probes.dedup();
    let probes = probes
        .into_iter()
        .map(|s| max_over_k(&surface, s).map(|(k_star, s_star)| ScaleMaximum { s, k_star, s_star }))
        .collect::<Result<Vec<_>>>()?;
    let mean = probes.iter().map(|p| p.s_star).sum::<f64>() / probes.len() as f64;
    let spread = probes
        .iter()
        .map(|p| p.s_star)
        .fold(f64::NEG_INFINITY, f64::max)
        - probes
            .iter()
            .map(|p| p.s_star)
            .fold(f64::INFINITY, f64::min);
    let l2 = L2Report {
        pass: l2_pass(mean, spread, &t),
        probes,
        mean,
        spread,
    };

    let patterns = ks
        .iter()
        .map(|&k| omega_from_surface(&surface, k, n, EntropyMode::Pattern))
        .collect::<Result<Vec<_>>>()?;
    let image = ks
        .iter()
        .map(|&k| omega_from_surface(&surface, k, n, EntropyMode::Color))
        .collect::<Result<Vec<_>>>()?;
    let (worst_k, max_deviation) =
        patterns
            .iter()
            .map(|p| (p.k, p.deviation()))
            .fold(
                (ks[0], 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    let l3 = L3Report {
        pass: max_deviation <= t.l3_omega,
        patterns,
        max_deviation,
        worst_k,
        image,
    };

    let abundance = AbundanceReport {
        scale: config.abundance_scale,
        normalization: ABUNDANCE_NORMALIZATION,
        patterns: PatternClass::ALL.map(|c| c.as_str()),
        percent: abundance_profile(cube, config.abundance_scale)?,
    };

    let report = LawReport {
        schema_version: REPORT_SCHEMA_VERSION,
        provenance: cube.provenance().to_string(),
        side: n,
        channels: cube.channels(),
        k_max: cube.k_max(),
        config: config.clone(),
        informational: !census.fully_colored,
        census,
        l1,
        l2,
        l3,
        abundance,
    };
    Ok((report, surface))
}
