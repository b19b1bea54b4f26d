//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criterion 8 (natural scenes) lives in the separate `natural_scenes`
//! target because it needs user-supplied images.

use std::collections::HashSet;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scalelaws::cascade::{cascade_level, CascadeParams};
use scalelaws::entropy::{entropy_from_counts, entropy_surface, max_over_k, shannon_entropy};
use scalelaws::fluctuation::{omega_image, omega_patterns};
use scalelaws::imagecube::{color_census, ColorKey};
use scalelaws::laws::{verify_laws, LawConfig, LawReport, Tolerances};
use scalelaws::necklace::{classify_quad, pattern_map, PatternClass};
use scalelaws::synth::{
    gen_hilbert, gen_pavement, gen_plane, gen_random, PAVEMENT_ROW_A, PAVEMENT_ROW_B,
};
use scalelaws::ImageCube;

const N: usize = 256;

// Criterion 2.
const PLANE_SLOPE_TOL: f64 = 0.02;
const PLANE_SIGMA_MAX: f64 = 0.01;
const PLANE_SH_TARGET: f64 = 1.05;
const PLANE_SH_TOL: f64 = 0.02;
const PLANE_SH_SCALES: [usize; 3] = [1, 2, 4];
const OMEGA_TOL: f64 = 0.02;
const PLANE_RUNTIME_SECS: f64 = 120.0;
// Criterion 3.
const RANDOM_SH_TARGET: f64 = 1.70;
const RANDOM_SH_TOL: f64 = 0.02;
const RANDOM_SIGMA_RATIO: f64 = 5.0;
// Criterion 4.
const HILBERT_SEED: u64 = 7;
const HILBERT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const HILBERT_SLOPE_TOL: f64 = 0.05;
const HILBERT_SH_STABILITY: f64 = 0.02;
const DYADIC_TOL: f64 = 1e-9;
// Criterion 5.
const PAVEMENT_TOL: f64 = 0.01;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn full_report(cube: &ImageCube) -> LawReport {
    let config = LawConfig {
        tolerances: Tolerances::synthetic(),
        ..LawConfig::default()
    };
    verify_laws(cube, &config).expect("verify_laws")
}

/// Two quads are the same necklace iff some rotation of one maps onto the
/// other through a bijection of symbols. Tried against every canonical
/// representative.
fn necklace_oracle<T: PartialEq + Clone>(quad: &[T; 4]) -> PatternClass {
    fn equivalent<T: PartialEq>(a: &[T; 4], b: [u8; 4]) -> bool {
        (0..4).any(|r| {
            let rotated: Vec<&T> = (0..4).map(|i| &a[(i + r) % 4]).collect();
            (0..4).all(|i| (0..4).all(|j| (rotated[i] == rotated[j]) == (b[i] == b[j])))
        })
    }
    let matches: Vec<PatternClass> = PatternClass::ALL
        .into_iter()
        .filter(|c| equivalent(quad, c.canonical()))
        .collect();
    assert_eq!(matches.len(), 1, "oracle found {} classes", matches.len());
    matches[0]
}

/// Restricted growth strings of length 4: the 15 set partitions of the
/// four cyclic positions.
fn set_partitions() -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    for b in 0..=1u8 {
        for c in 0..=b + 1 {
            for d in 0..=b.max(c) + 1 {
                out.push([0, b, c, d]);
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let partitions = set_partitions();
    let mut multiplicity = [0usize; 7];
    let mut checked = 0usize;
    let mut disagreements = 0usize;
    for p in &partitions {
        multiplicity[necklace_oracle(p).index()] += 1;
        for _ in 0..200 {
            let mut palette: Vec<ColorKey> = Vec::new();
            while palette.len() < 4 {
                let key = ColorKey::new(&[
                    rng.random_range(0..50) as f64,
                    rng.random_range(0..50) as f64,
                ]);
                if !palette.contains(&key) {
                    palette.push(key);
                }
            }
            let quad: [ColorKey; 4] = p.map(|b| palette[b as usize].clone());
            for r in 0..4 {
                let rotated: [ColorKey; 4] = std::array::from_fn(|i| quad[(i + r) % 4].clone());
                checked += 1;
                if classify_quad(&rotated).expect("classify") != necklace_oracle(&rotated) {
                    disagreements += 1;
                }
            }
        }
    }
    let pass =
        partitions.len() == 15 && disagreements == 0 && multiplicity == [1, 4, 2, 4, 1, 2, 1];
    outcome(
        pass,
        format!(
            "{} partitions, {checked} quads, {disagreements} disagreements, multiplicities {multiplicity:?}",
            partitions.len()
        ),
    )
}

fn max_sh(report: &LawReport, cube: &ImageCube, s: usize) -> f64 {
    match report.l2.probes.iter().find(|p| p.s == s) {
        Some(p) => p.s_star,
        None => {
            let ks: Vec<u64> = (1..=cube.k_max()).collect();
            let surface = entropy_surface(cube, &ks, &[s]).expect("surface");
            max_over_k(&surface, s).expect("max").1
        }
    }
}

fn criterion_2() -> (Outcome, f64) {
    let start = Instant::now();
    let plane = gen_plane(N).expect("plane");
    let report = full_report(&plane);
    let elapsed = start.elapsed().as_secs_f64();
    let fit = report.l1.fit;
    let maxima: Vec<f64> = PLANE_SH_SCALES
        .iter()
        .map(|&s| max_sh(&report, &plane, s))
        .collect();
    let slope_ok = (fit.slope + 2.0).abs() <= PLANE_SLOPE_TOL && fit.sigma_slope <= PLANE_SIGMA_MAX;
    let sh_ok = maxima
        .iter()
        .all(|m| (m - PLANE_SH_TARGET).abs() <= PLANE_SH_TOL);
    let omega_ok = report.l3.max_deviation <= OMEGA_TOL;
    let time_ok = elapsed < PLANE_RUNTIME_SECS;
    (
        outcome(
            slope_ok && sh_ok && omega_ok && time_ok,
            format!(
                "slope {:.4} sigma_a {:.2e}; max_k S_H at s=1,2,4 {:.4?}; max|Omega(H)-1| {:.4} (k={}); {:.1}s",
                fit.slope, fit.sigma_slope, maxima, report.l3.max_deviation, report.l3.worst_k, elapsed
            ),
        ),
        fit.sigma_slope,
    )
}

fn criterion_3(plane_sigma: f64) -> Outcome {
    let random = gen_random(N, 1).expect("random");
    let report = full_report(&random);
    let sh = max_sh(&report, &random, 1);
    let sigma = report.l1.fit.sigma_slope;
    let pass =
        (sh - RANDOM_SH_TARGET).abs() <= RANDOM_SH_TOL && sigma >= RANDOM_SIGMA_RATIO * plane_sigma;
    outcome(
        pass,
        format!("max_k S_H at s=1 {sh:.4}; sigma_a {sigma:.4} vs plane {plane_sigma:.2e}"),
    )
}

/// Distinct C(1, s) colors counted from integer block sums.
fn distinct_block_colors(cube: &ImageCube, s: usize) -> usize {
    let side = cube.width() / s;
    let mut seen = HashSet::new();
    for by in 0..side {
        for bx in 0..side {
            let mut sums = vec![0u64; cube.channels()];
            for y in by * s..(by + 1) * s {
                for x in bx * s..(bx + 1) * s {
                    for (acc, v) in sums.iter_mut().zip(cube.pixel(x, y)) {
                        *acc += *v as u64;
                    }
                }
            }
            seen.insert(sums.iter().map(|t| t / (s * s) as u64).collect::<Vec<_>>());
        }
    }
    seen.len()
}

fn criterion_4() -> Outcome {
    let frac = gen_hilbert(8, HILBERT_SEED, true).expect("hilbert");
    let mut dyadic_ok = true;
    for j in 0..8 {
        let s = 1usize << j;
        let side = N / s;
        let level = cascade_level(&frac, CascadeParams::new(1, s)).expect("level");
        let expected = 2.0 * ((N / s) as f64).ln();
        dyadic_ok &= distinct_block_colors(&frac, s) == side * side
            && color_census(&level).distinct_colors == side * side
            && (shannon_entropy(&level) - expected).abs() <= DYADIC_TOL;
    }
    let report = full_report(&frac);
    let slope_ok = (report.l1.fit.slope + 2.0).abs() <= HILBERT_SLOPE_TOL;
    let omega_ok = report.l3.max_deviation <= OMEGA_TOL;

    let maxima: Vec<f64> = HILBERT_SEEDS
        .iter()
        .map(|&seed| {
            let cube = gen_hilbert(8, seed, true).expect("hilbert");
            let ks: Vec<u64> = (1..=cube.k_max()).collect();
            let surface = entropy_surface(&cube, &ks, &[1]).expect("surface");
            max_over_k(&surface, 1).expect("max").1
        })
        .collect();
    let mean = maxima.iter().sum::<f64>() / maxima.len() as f64;
    let stable = maxima
        .iter()
        .all(|m| (m - mean).abs() <= HILBERT_SH_STABILITY);
    outcome(
        dyadic_ok && slope_ok && omega_ok && stable,
        format!(
            "dyadic fully colored {dyadic_ok}; slope {:.4}; max|Omega(H)-1| {:.4} (k={}); max_k S_H(s=1) seeds 0-4 {:.4?}",
            report.l1.fit.slope, report.l3.max_deviation, report.l3.worst_k, maxima
        ),
    )
}

fn criterion_5() -> Outcome {
    let pavement = gen_pavement(N, N).expect("pavement");
    let pm = pattern_map(&pavement);
    let sh = entropy_from_counts(pm.counts().iter().copied());
    let ln7 = 7f64.ln();

    // One 2x8 period with periodic extension: 16 anchors.
    let motif = [PAVEMENT_ROW_A, PAVEMENT_ROW_B];
    let at = |x: usize, y: usize| motif[y % 2][x % 8];
    let mut tally = [0usize; 7];
    for y in 0..2 {
        for x in 0..8 {
            let quad = [at(x, y), at(x + 1, y), at(x + 1, y + 1), at(x, y + 1)];
            tally[necklace_oracle(&quad).index()] += 1;
        }
    }
    let equal = tally.iter().all(|&c| c == tally[0]);
    outcome(
        (sh - ln7).abs() <= PAVEMENT_TOL && equal,
        format!("S_H {sh:.4} vs ln 7 {ln7:.4}; periodic motif tally {tally:?}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cells = 0usize;
    let mut mismatches = 0usize;
    for _ in 0..50 {
        let cube = ImageCube::from_fn(32, 32, 2, "binning", |_, _, _| {
            rng.random_range(0..=255u32) as f64
        })
        .expect("cube");
        for s in 1..=8 {
            let base = cascade_level(&cube, CascadeParams::new(1, s)).expect("base");
            let fine = color_census(&base);
            for k in 1..=16u64 {
                let level = cascade_level(&cube, CascadeParams::new(k, s)).expect("level");
                let mut binned = std::collections::HashMap::new();
                for (key, count) in &fine.histogram {
                    *binned.entry(key.binned(k)).or_insert(0usize) += count;
                }
                cells += 1;
                if shannon_entropy(&level) != entropy_from_counts(binned.into_values()) {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{cells} (cube, k, s) cells, {mismatches} inexact"),
    )
}

fn criterion_7() -> Outcome {
    let flat = ImageCube::new(64, 64, 2, vec![9.0; 64 * 64 * 2], "constant").expect("flat");
    let mut exact = true;
    for k in 1..=flat.k_max() {
        for pair in [
            omega_image(&flat, k).expect("image"),
            omega_patterns(&flat, k).expect("patterns"),
        ] {
            exact &= pair.omega_plus == 1.0 && pair.omega_minus == 1.0;
        }
    }
    outcome(
        exact,
        format!("k = 1..={}, color and pattern modes", flat.k_max()),
    )
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_scalelaws"))
        .args(args)
        .current_dir(dir)
        .env("SCALELAWS_THREADS", threads)
        .output()
        .expect("spawn scalelaws")
        .status
        .code()
        .is_some_and(|c| c == 0)
}

type Tree = Vec<(String, Vec<u8>)>;

fn tree_bytes(dir: &Path) -> Tree {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("read_dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .expect("prefix")
                    .display()
                    .to_string();
                out.push((rel, std::fs::read(&path).expect("read")));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Outcome {
    let commands: [&[&str]; 7] = [
        &["generate", "plane", "--n", "64", "-o", "plane.bin"],
        &[
            "generate",
            "random",
            "--n",
            "64",
            "--seed",
            "3",
            "-o",
            "random.bin",
        ],
        &[
            "generate",
            "hilbert",
            "--m",
            "6",
            "--seed",
            "7",
            "--randomized",
            "-o",
            "frac.bin",
        ],
        &[
            "generate", "pavement", "--rows", "64", "--cols", "64", "-o", "pave.bin",
        ],
        &["analyze", "frac.bin", "-o", "analyze"],
        &[
            "verify",
            "frac.bin",
            "--tol-synthetic",
            "-o",
            "verify",
            "--format",
            "both",
        ],
        &[
            "verify",
            "random.bin",
            "--k-step",
            "5",
            "-o",
            "verify_random",
        ],
    ];
    let runs: Vec<(Tree, bool)> = ["1", "3"]
        .iter()
        .map(|threads| {
            let dir = tempfile::tempdir().expect("tempdir");
            let ok = commands
                .iter()
                .all(|args| run_cli(dir.path(), threads, args));
            (tree_bytes(dir.path()), ok)
        })
        .collect();
    let files = runs[0].0.len();
    let identical = runs[0].0 == runs[1].0;
    outcome(
        runs.iter().all(|r| r.1) && identical && files > 0,
        format!("{} commands, {files} files, byte-identical across reruns (1 vs 3 threads): {identical}", commands.len()),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut print = |id: u32, name: &str, o: Outcome| {
        if !o.pass {
            failures += 1;
        }
        println!("criterion {id} {}: {name}: {}", verdict(o.pass), o.detail);
    };
    print(1, "necklace oracle equivalence", criterion_1());
    let (plane, plane_sigma) = criterion_2();
    print(2, "plane", plane);
    print(3, "random", criterion_3(plane_sigma));
    print(4, "randomized Hilbert fractal", criterion_4());
    print(5, "pavement", criterion_5());
    print(6, "binning property", criterion_6());
    print(7, "constant image fluctuation", criterion_7());
    print(9, "CLI determinism", criterion_9());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
