//! 2x2 local patterns as unlabeled necklaces of length 4.
//!
//! The four pixels of a 2x2 square are read as a cycle. Two squares carry
//! the same pattern when one can be turned into the other by rotating the
//! cycle and renaming colors. Exactly seven classes exist; each is named by
//! its lexicographically smallest representative.

use std::fmt;
use std::io::{self, Write};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imagecube::{ColorKey, ColorLabels, ImageCube};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PatternClass {
    #[serde(rename = "0000")]
    P0000,
    #[serde(rename = "0001")]
    P0001,
    #[serde(rename = "0011")]
    P0011,
    #[serde(rename = "0012")]
    P0012,
    #[serde(rename = "0101")]
    P0101,
    #[serde(rename = "0102")]
    P0102,
    #[serde(rename = "0123")]
    P0123,
}

impl PatternClass {
    pub const ALL: [PatternClass; 7] = [
        PatternClass::P0000,
        PatternClass::P0001,
        PatternClass::P0011,
        PatternClass::P0012,
        PatternClass::P0101,
        PatternClass::P0102,
        PatternClass::P0123,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn canonical(self) -> [u8; 4] {
        match self {
            PatternClass::P0000 => [0, 0, 0, 0],
            PatternClass::P0001 => [0, 0, 0, 1],
            PatternClass::P0011 => [0, 0, 1, 1],
            PatternClass::P0012 => [0, 0, 1, 2],
            PatternClass::P0101 => [0, 1, 0, 1],
            PatternClass::P0102 => [0, 1, 0, 2],
            PatternClass::P0123 => [0, 1, 2, 3],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PatternClass::P0000 => "0000",
            PatternClass::P0001 => "0001",
            PatternClass::P0011 => "0011",
            PatternClass::P0012 => "0012",
            PatternClass::P0101 => "0101",
            PatternClass::P0102 => "0102",
            PatternClass::P0123 => "0123",
        }
    }

    fn from_canonical(form: [u8; 4]) -> Self {
        Self::ALL
            .into_iter()
            .find(|c| c.canonical() == form)
            .expect("canonical necklace forms cover every 4-cycle")
    }

    /// Local Hamiltonian of the class: the sum over the six pixel pairs of
    /// the square of `delta(i, j) / d(i, j)`, with `d = 1` for sides and
    /// `sqrt 2` for diagonals.
    pub fn hamiltonian_weight(self) -> f64 {
        pair_sum(self.canonical(), |d| 1.0 / d)
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const SIDES: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (3, 0)];
const DIAGONALS: [(usize, usize); 2] = [(0, 2), (1, 3)];

fn pair_sum(labels: [u8; 4], weight: impl Fn(f64) -> f64) -> f64 {
    let side: f64 = SIDES
        .iter()
        .filter(|(i, j)| labels[*i] == labels[*j])
        .map(|_| weight(1.0))
        .sum();
    let diagonal: f64 = DIAGONALS
        .iter()
        .filter(|(i, j)| labels[*i] == labels[*j])
        .map(|_| weight(std::f64::consts::SQRT_2))
        .sum();
    side + diagonal
}

pub fn hamiltonian_value(c: PatternClass) -> f64 {
    c.hamiltonian_weight()
}

/// The same pair sum weighted by `d` instead of `1/d`; gives `4 + 2 sqrt 2`
/// for the uniform square. Kept for cross-reference with that convention.
pub fn hamiltonian_value_distance_weighted(c: PatternClass) -> f64 {
    pair_sum(c.canonical(), |d| d)
}

/// Classifies four values given in perimeter order.
///
/// Relabels each rotation by first occurrence and keeps the
/// lexicographically smallest result.
pub fn classify_labels<T: PartialEq>(quad: [T; 4]) -> PatternClass {
    let mut best = [u8::MAX; 4];
    for r in 0..4 {
        let mut form = [0u8; 4];
        let mut seen: [Option<&T>; 4] = [None; 4];
        let mut next = 0u8;
        for (i, slot) in form.iter_mut().enumerate() {
            let v = &quad[(r + i) % 4];
            let label = match seen[..next as usize].iter().position(|s| *s == Some(v)) {
                Some(p) => p as u8,
                None => {
                    seen[next as usize] = Some(v);
                    next += 1;
                    next - 1
                }
            };
            *slot = label;
        }
        best = best.min(form);
    }
    PatternClass::from_canonical(best)
}

/// Classifies a spectral loop given in perimeter order.
pub fn classify_quad(quad: &[ColorKey; 4]) -> Result<PatternClass> {
    let lens = [quad[0].len(), quad[1].len(), quad[2].len(), quad[3].len()];
    if lens.iter().any(|&l| l != lens[0]) {
        return Err(Error::ChannelMismatch(lens));
    }
    Ok(classify_labels([&quad[0], &quad[1], &quad[2], &quad[3]]))
}

/// Bitmask of the six pairwise equalities of a perimeter-ordered quad:
/// bits 0..4 are the sides (0,1) (1,2) (2,3) (3,0), bits 4 and 5 the
/// diagonals (0,2) and (1,3).
#[inline]
fn equality_code<T: PartialEq>(q: [T; 4]) -> usize {
    (q[0] == q[1]) as usize
        | ((q[1] == q[2]) as usize) << 1
        | ((q[2] == q[3]) as usize) << 2
        | ((q[3] == q[0]) as usize) << 3
        | ((q[0] == q[2]) as usize) << 4
        | ((q[1] == q[3]) as usize) << 5
}

fn code_table() -> &'static [u8; 64] {
    static TABLE: OnceLock<[u8; 64]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [u8::MAX; 64];
        for n in 0..256u32 {
            let q = [n & 3, (n >> 2) & 3, (n >> 4) & 3, (n >> 6) & 3];
            table[equality_code(q)] = classify_labels(q).index() as u8;
        }
        table
    })
}

/// Per-anchor classes over a `(W-1) x (H-1)` grid. Anchor `(x, y)` owns the
/// square `(x,y) -> (x+1,y) -> (x+1,y+1) -> (x,y+1)`; there is no
/// wrap-around.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMap {
    width: usize,
    height: usize,
    classes: Vec<PatternClass>,
    counts: [usize; 7],
}

impl PatternMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn classes(&self) -> &[PatternClass] {
        &self.classes
    }

    pub fn get(&self, x: usize, y: usize) -> PatternClass {
        self.classes[y * self.width + x]
    }

    pub fn counts(&self) -> &[usize; 7] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.classes.len()
    }

    pub fn write_counts_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "pattern,count")?;
        for c in PatternClass::ALL {
            writeln!(out, "{},{}", c, self.counts[c.index()])?;
        }
        Ok(())
    }

    /// Class indices scaled to 0..=252 as a single-channel cube, ready for
    /// PGM export.
    pub fn to_cube(&self) -> Result<ImageCube> {
        let samples = self
            .classes
            .iter()
            .map(|c| (c.index() * 42) as f64)
            .collect();
        ImageCube::new(self.width, self.height, 1, samples, "pattern map")
    }
}

fn anchor_dims(w: usize, h: usize) -> (usize, usize) {
    if w < 2 || h < 2 {
        (0, 0)
    } else {
        (w - 1, h - 1)
    }
}

pub fn pattern_map(cube: &ImageCube) -> PatternMap {
    pattern_map_from_labels(&cube.color_labels())
}

pub fn pattern_map_from_labels(labels: &ColorLabels) -> PatternMap {
    let (mw, mh) = anchor_dims(labels.width, labels.height);
    let table = code_table();
    let mut classes = Vec::with_capacity(mw * mh);
    let mut counts = [0usize; 7];
    for y in 0..mh {
        for x in 0..mw {
            let q = [
                labels.at(x, y),
                labels.at(x + 1, y),
                labels.at(x + 1, y + 1),
                labels.at(x, y + 1),
            ];
            let class = PatternClass::ALL[table[equality_code(q)] as usize];
            counts[class.index()] += 1;
            classes.push(class);
        }
    }
    PatternMap {
        width: mw,
        height: mh,
        classes,
        counts,
    }
}

/// Class tally only, for the dense sweeps where the grid itself is not
/// needed.
pub fn pattern_counts(labels: &ColorLabels) -> [usize; 7] {
    let (mw, mh) = anchor_dims(labels.width, labels.height);
    let table = code_table();
    let w = labels.width;
    let mut counts = [0usize; 7];
    for y in 0..mh {
        let top = &labels.labels[y * w..(y + 1) * w];
        let bottom = &labels.labels[(y + 1) * w..(y + 2) * w];
        for x in 0..mw {
            let q = [top[x], top[x + 1], bottom[x + 1], bottom[x]];
            counts[table[equality_code(q)] as usize] += 1;
        }
    }
    counts
}
