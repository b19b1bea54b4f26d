//! Seeded generators for the synthetic image families: the plane, the
//! random fully colored image, the (randomized) Hilbert fractal and the
//! seven-pattern pavement.
//!
//! Every generator is a pure function of its dimensions and seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imagecube::ImageCube;

/// Description of the random source, recorded in provenance.
pub const RNG_DESCRIPTION: &str = "chacha8 (rand_chacha 0.9) with rand 0.9 Fisher-Yates shuffle";

/// Largest supported Hilbert level (N = 4096).
pub const MAX_HILBERT_LEVEL: u32 = 12;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_side(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Generator(format!(
            "side must be at least 2, got {n}"
        )));
    }
    Ok(())
}

/// Two-channel plane: channel 0 is `c + l`, channel 1 is `N + c - l` for
/// column `c` and line `l`. Fully colored with dynamics `2N`.
pub fn gen_plane(n: usize) -> Result<ImageCube> {
    check_side(n)?;
    ImageCube::from_fn(n, n, 2, format!("plane n={n}"), |c, l, ch| match ch {
        0 => (c + l) as f64,
        _ => (n + c - l) as f64,
    })
}

/// Every pair `(a, b)` with `0 <= a, b < N` placed exactly once at a random
/// position. Fully colored with dynamics `N`.
pub fn gen_random(n: usize, seed: u64) -> Result<ImageCube> {
    check_side(n)?;
    let mut order: Vec<usize> = (0..n * n).collect();
    order.shuffle(&mut rng_for(seed, 0));
    let samples = order
        .iter()
        .flat_map(|&v| [(v / n) as f64, (v % n) as f64])
        .collect();
    ImageCube::new_top_level(
        n,
        n,
        2,
        samples,
        format!("random n={n} seed={seed} rng={RNG_DESCRIPTION} stream=0"),
    )
}

/// How the sub-cell permutation is chosen at each refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HilbertVariant {
    /// Identity permutation everywhere.
    Fixed,
    /// A fresh random permutation for every cell.
    PerCell,
    /// One random permutation per refinement level, shared by its cells.
    PerLevel,
}

impl HilbertVariant {
    pub fn name(self) -> &'static str {
        match self {
            HilbertVariant::Fixed => "fixed",
            HilbertVariant::PerCell => "per-cell",
            HilbertVariant::PerLevel => "per-level",
        }
    }
}

/// Hilbert level `m` for a side `n = 2^m`.
pub fn hilbert_level_for_side(n: usize) -> Result<u32> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Generator(format!(
            "side {n} is not a power of two >= 2"
        )));
    }
    Ok(n.trailing_zeros())
}

/// The bijective value field `f` of side `2^m`, row-major.
///
/// Starting from a single cell valued 0, each refinement splits a cell of
/// value `v` into four children valued `4v + P[i]`, placed in perimeter
/// order top-left, top-right, bottom-right, bottom-left. After `m` levels
/// `f` holds every integer in `[0, 4^m)` exactly once.
pub fn hilbert_field(m: u32, seed: u64, variant: HilbertVariant) -> Result<Vec<u64>> {
    if m == 0 || m > MAX_HILBERT_LEVEL {
        return Err(Error::Generator(format!(
            "Hilbert level must be in 1..={MAX_HILBERT_LEVEL}, got {m}"
        )));
    }
    let mut side = 1usize;
    let mut field = vec![0u64];
    for level in 0..m {
        let mut rng = rng_for(seed, level as u64);
        let mut shared = [0u64, 1, 2, 3];
        if variant == HilbertVariant::PerLevel {
            shared.shuffle(&mut rng);
        }
        let next_side = side * 2;
        let mut next = vec![0u64; next_side * next_side];
        for y in 0..side {
            for x in 0..side {
                let base = 4 * field[y * side + x];
                let p = match variant {
                    HilbertVariant::PerCell => {
                        let mut p = [0u64, 1, 2, 3];
                        p.shuffle(&mut rng);
                        p
                    }
                    _ => shared,
                };
                let (cx, cy) = (2 * x, 2 * y);
                next[cy * next_side + cx] = base + p[0];
                next[cy * next_side + cx + 1] = base + p[1];
                next[(cy + 1) * next_side + cx + 1] = base + p[2];
                next[(cy + 1) * next_side + cx] = base + p[3];
            }
        }
        side = next_side;
        field = next;
    }
    Ok(field)
}

/// Hilbert fractal mapped onto two channels of dynamics `2N`:
/// `ch0 = f / N + f mod N`, `ch1 = N + f / N - f mod N` (integer quotient).
pub fn gen_hilbert(m: u32, seed: u64, randomized: bool) -> Result<ImageCube> {
    let variant = if randomized {
        HilbertVariant::PerCell
    } else {
        HilbertVariant::Fixed
    };
    gen_hilbert_variant(m, seed, variant)
}

pub fn gen_hilbert_variant(m: u32, seed: u64, variant: HilbertVariant) -> Result<ImageCube> {
    let field = hilbert_field(m, seed, variant)?;
    let n = 1u64 << m;
    let samples = field
        .iter()
        .flat_map(|&f| {
            let (q, r) = (f / n, f % n);
            [(q + r) as f64, (n + q - r) as f64]
        })
        .collect();
    let provenance = match variant {
        HilbertVariant::Fixed => format!("hilbert m={m} variant=fixed"),
        _ => format!(
            "hilbert m={m} seed={seed} variant={} rng={RNG_DESCRIPTION} stream=level order=row-major",
            variant.name()
        ),
    };
    ImageCube::new_top_level(n as usize, n as usize, 2, samples, provenance)
}

/// Motif rows of the seven-pattern pavement.
pub const PAVEMENT_ROW_A: [u8; 8] = [0, 0, 0, 1, 1, 0, 0, 2];
pub const PAVEMENT_ROW_B: [u8; 8] = [0, 0, 1, 0, 0, 2, 1, 3];

/// Tiles the 2x8 motif: rows alternate A, B, A, B... and repeat every 8
/// columns. Single channel.
pub fn gen_pavement(rows: usize, cols: usize) -> Result<ImageCube> {
    if rows < 2 || cols < 8 || !rows.is_multiple_of(2) || !cols.is_multiple_of(8) {
        return Err(Error::Generator(format!(
            "pavement needs rows a positive multiple of 2 and cols a positive multiple of 8, got {rows}x{cols}"
        )));
    }
    ImageCube::from_fn(
        cols,
        rows,
        1,
        format!("pavement {rows}x{cols}"),
        |x, y, _| {
            let row = if y % 2 == 0 {
                &PAVEMENT_ROW_A
            } else {
                &PAVEMENT_ROW_B
            };
            row[x % 8] as f64
        },
    )
}
