//! File ingestion and serialization.
//!
//! Two formats are understood:
//!
//! * binary PNM (`P5` grey, `P6` RGB), maxval up to 65535, 16-bit samples
//!   big-endian as the format requires;
//! * RAW: a `<name>.bin` payload next to a `<name>.json` sidecar describing
//!   its shape, dtype and byte order. The payload is row-major with the
//!   channel index fastest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ImageCube;
use crate::error::{Error, Result};

pub const RAW_LAYOUT: &str = "row-major-channel-last";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pnm,
    Raw,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" | "ppm" | "pnm" => Some(ImageFormat::Pnm),
            "bin" | "json" | "raw" => Some(ImageFormat::Raw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    U16,
    U32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
            Dtype::U32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::U8 => "u8",
            Dtype::U16 => "u16",
            Dtype::U32 => "u32",
            Dtype::F64 => "f64",
        }
    }

    fn max_integer(self) -> Option<f64> {
        match self {
            Dtype::U8 => Some(u8::MAX as f64),
            Dtype::U16 => Some(u16::MAX as f64),
            Dtype::U32 => Some(u32::MAX as f64),
            Dtype::F64 => None,
        }
    }

    /// Smallest dtype that stores every sample of `cube` exactly.
    pub fn narrowest_for(cube: &ImageCube) -> Dtype {
        if !cube.is_integral() {
            return Dtype::F64;
        }
        let max = cube.max_sample();
        [Dtype::U8, Dtype::U16, Dtype::U32]
            .into_iter()
            .find(|d| d.max_integer().is_some_and(|m| max <= m))
            .unwrap_or(Dtype::F64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub dtype: Dtype,
    pub endianness: Endianness,
    pub layout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// Loads a PNM or RAW+sidecar image. Without a hint the format is taken
/// from the file extension.
pub fn load_image(path: impl AsRef<Path>, hint: Option<ImageFormat>) -> Result<ImageCube> {
    let path = path.as_ref();
    let format = hint
        .or_else(|| ImageFormat::from_path(path))
        .ok_or_else(|| Error::UnknownFormat(path.to_path_buf()))?;
    match format {
        ImageFormat::Pnm => load_pnm(path),
        ImageFormat::Raw => load_raw(path),
    }
}

fn raw_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("bin"), path.with_extension("json"))
}

fn load_raw(path: &Path) -> Result<ImageCube> {
    let (bin_path, json_path) = raw_paths(path);
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let header: RawSidecar = serde_json::from_str(&text).map_err(|e| Error::MalformedHeader {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    if header.layout != RAW_LAYOUT {
        return Err(Error::MalformedHeader {
            path: json_path,
            reason: format!(
                "unsupported layout {:?}, expected {RAW_LAYOUT:?}",
                header.layout
            ),
        });
    }
    if header.channels == 0 {
        return Err(Error::MalformedHeader {
            path: json_path,
            reason: "channels must be at least 1".into(),
        });
    }
    let payload = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let count = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(header.channels))
        .ok_or_else(|| Error::MalformedHeader {
            path: json_path.clone(),
            reason: "declared size overflows".into(),
        })?;
    let expected = count * header.dtype.size();
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            path: bin_path,
            expected,
            actual: payload.len(),
        });
    }
    let samples = decode(&payload, header.dtype, header.endianness);
    let provenance = header
        .provenance
        .unwrap_or_else(|| bin_path.display().to_string());
    ImageCube::new_top_level(
        header.width,
        header.height,
        header.channels,
        samples,
        provenance,
    )
}

fn decode(payload: &[u8], dtype: Dtype, endianness: Endianness) -> Vec<f64> {
    let big = endianness == Endianness::Big;
    match dtype {
        Dtype::U8 => payload.iter().map(|&b| b as f64).collect(),
        Dtype::U16 => payload
            .chunks_exact(2)
            .map(|b| {
                let b = [b[0], b[1]];
                (if big {
                    u16::from_be_bytes(b)
                } else {
                    u16::from_le_bytes(b)
                }) as f64
            })
            .collect(),
        Dtype::U32 => payload
            .chunks_exact(4)
            .map(|b| {
                let b = [b[0], b[1], b[2], b[3]];
                (if big {
                    u32::from_be_bytes(b)
                } else {
                    u32::from_le_bytes(b)
                }) as f64
            })
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|b| {
                let b: [u8; 8] = b.try_into().expect("chunk of 8");
                if big {
                    f64::from_be_bytes(b)
                } else {
                    f64::from_le_bytes(b)
                }
            })
            .collect(),
    }
}

fn encode(cube: &ImageCube, dtype: Dtype, endianness: Endianness) -> Result<Vec<u8>> {
    let big = endianness == Endianness::Big;
    let mut out = Vec::with_capacity(cube.samples().len() * dtype.size());
    for (index, &v) in cube.samples().iter().enumerate() {
        if let Some(max) = dtype.max_integer() {
            if v.fract() != 0.0 || v > max {
                return Err(Error::NotRepresentable {
                    index,
                    value: v,
                    dtype: dtype.name(),
                });
            }
        }
        match dtype {
            Dtype::U8 => out.push(v as u8),
            Dtype::U16 => {
                let b = v as u16;
                out.extend_from_slice(&if big {
                    b.to_be_bytes()
                } else {
                    b.to_le_bytes()
                });
            }
            Dtype::U32 => {
                let b = v as u32;
                out.extend_from_slice(&if big {
                    b.to_be_bytes()
                } else {
                    b.to_le_bytes()
                });
            }
            Dtype::F64 => {
                out.extend_from_slice(&if big {
                    v.to_be_bytes()
                } else {
                    v.to_le_bytes()
                });
            }
        }
    }
    Ok(out)
}

/// Writes `cube` as RAW+sidecar with an explicit dtype. Integer dtypes
/// refuse samples they cannot hold exactly.
pub fn save_raw(
    cube: &ImageCube,
    path: impl AsRef<Path>,
    dtype: Dtype,
    endianness: Endianness,
) -> Result<()> {
    let (bin_path, json_path) = raw_paths(path.as_ref());
    let payload = encode(cube, dtype, endianness)?;
    let header = RawSidecar {
        width: cube.width(),
        height: cube.height(),
        channels: cube.channels(),
        dtype,
        endianness,
        layout: RAW_LAYOUT.to_string(),
        dynamics: Some(cube.dynamics()),
        provenance: Some(cube.provenance().to_string()),
    };
    let mut text = serde_json::to_string_pretty(&header).map_err(|e| Error::Json {
        path: json_path.clone(),
        source: e,
    })?;
    text.push('\n');
    fs::write(&bin_path, payload).map_err(|e| Error::io(&bin_path, e))?;
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}

/// Writes `cube` in the format implied by the extension. RAW output picks
/// the narrowest dtype holding every sample exactly (f64 for fractional
/// levels); PNM output needs 1 or 3 integral channels no larger than 65535.
pub fn save_image(cube: &ImageCube, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match ImageFormat::from_path(path) {
        Some(ImageFormat::Pnm) => save_pnm(cube, path),
        _ => save_raw(cube, path, Dtype::narrowest_for(cube), Endianness::Little),
    }
}

fn save_pnm(cube: &ImageCube, path: &Path) -> Result<()> {
    let magic = match cube.channels() {
        1 => "P5",
        3 => "P6",
        _ => {
            return Err(Error::InvalidDimensions {
                width: cube.width(),
                height: cube.height(),
                channels: cube.channels(),
                reason: "PNM holds 1 or 3 channels",
            })
        }
    };
    let dtype = if cube.max_sample() <= 255.0 {
        Dtype::U8
    } else {
        Dtype::U16
    };
    let maxval = if dtype == Dtype::U8 { 255 } else { 65535 };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", cube.width(), cube.height()).into_bytes();
    out.extend(encode(cube, dtype, Endianness::Big)?);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn load_pnm(path: &Path) -> Result<ImageCube> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(malformed("expected binary PNM magic P5 or P6")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Whitespace and '#' comments may separate header tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("expected a decimal header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("header field out of range"))?;
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(malformed("missing whitespace after maxval"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(malformed("maxval must be in 1..=65535"));
    }
    let dtype = if maxval < 256 { Dtype::U8 } else { Dtype::U16 };
    let expected = width * height * channels * dtype.size();
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            path: path.to_path_buf(),
            expected,
            actual: payload.len(),
        });
    }
    let samples = decode(payload, dtype, Endianness::Big);
    if samples.iter().any(|&v| v > maxval as f64) {
        return Err(malformed("sample exceeds maxval"));
    }
    ImageCube::new_top_level(width, height, channels, samples, path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_raw(dir: &Path, name: &str, header: &RawSidecar, payload: &[u8]) -> PathBuf {
        let bin = dir.join(format!("{name}.bin"));
        fs::write(&bin, payload).unwrap();
        fs::write(
            dir.join(format!("{name}.json")),
            serde_json::to_string(header).unwrap(),
        )
        .unwrap();
        bin
    }

    fn sidecar(w: usize, h: usize, c: usize, dtype: Dtype) -> RawSidecar {
        RawSidecar {
            width: w,
            height: h,
            channels: c,
            dtype,
            endianness: Endianness::Little,
            layout: RAW_LAYOUT.into(),
            dynamics: None,
            provenance: None,
        }
    }

    #[test]
    fn decodes_tiny_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        fs::write(&path, b"P5\n# comment\n2 2\n255\n\x00\x01\x02\x03").unwrap();
        let cube = load_image(&path, None).unwrap();
        assert_eq!((cube.width(), cube.height(), cube.channels()), (2, 2, 1));
        assert_eq!(cube.samples(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(cube.dynamics(), 4.0);
    }

    #[test]
    fn sixteen_bit_ppm_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ppm");
        let mut bytes = b"P6 2 2 65535\n".to_vec();
        for v in [0u16, 1, 255, 256, 1000, 40000, 65535, 7, 8, 9, 10, 11] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        fs::write(&path, &bytes).unwrap();
        let cube = load_image(&path, None).unwrap();
        assert_eq!(cube.channels(), 3);
        assert_eq!(cube.pixel(1, 0), &[256.0, 1000.0, 40000.0]);
        assert_eq!(cube.pixel(0, 1), &[65535.0, 7.0, 8.0]);
        assert_eq!(cube.pixel(1, 1), &[9.0, 10.0, 11.0]);
        assert_eq!(cube.max_sample(), 65535.0);
    }

    #[test]
    fn pnm_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pgm");
        fs::write(&p, b"P2\n2 2\n255\n0 1 2 3").unwrap();
        assert!(matches!(
            load_image(&p, None),
            Err(Error::MalformedHeader { .. })
        ));
        fs::write(&p, b"P5\n2 2\n255\n\x00\x01\x02").unwrap();
        assert!(matches!(
            load_image(&p, None),
            Err(Error::PayloadSize { .. })
        ));
        fs::write(&p, b"P5\n1 2\n255\n\x00\x01").unwrap();
        assert!(matches!(
            load_image(&p, None),
            Err(Error::InvalidDimensions { .. })
        ));
    }

    #[test]
    fn raw_multispectral_u16() {
        let dir = tempfile::tempdir().unwrap();
        let payload = vec![0u8; 256 * 256 * 32 * 2];
        let bin = write_raw(
            dir.path(),
            "ms",
            &sidecar(256, 256, 32, Dtype::U16),
            &payload,
        );
        let cube = load_image(&bin, None).unwrap();
        assert_eq!(cube.channels(), 32);
        assert_eq!(cube.pixel_count(), 65536);
    }

    #[test]
    fn raw_short_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let payload = vec![0u8; 256 * 256 * 3 - 1];
        let bin = write_raw(
            dir.path(),
            "rgb",
            &sidecar(256, 256, 3, Dtype::U8),
            &payload,
        );
        assert!(matches!(
            load_image(&bin, None),
            Err(Error::PayloadSize {
                expected: 196608,
                actual: 196607,
                ..
            })
        ));
    }

    #[test]
    fn raw_big_endian_and_layout_check() {
        let dir = tempfile::tempdir().unwrap();
        let mut h = sidecar(2, 2, 1, Dtype::U16);
        h.endianness = Endianness::Big;
        let bin = write_raw(dir.path(), "be", &h, &[0, 1, 1, 0, 0, 2, 255, 255]);
        let cube = load_image(&bin, None).unwrap();
        assert_eq!(cube.samples(), &[1.0, 256.0, 2.0, 65535.0]);

        h.layout = "planar".into();
        let bin = write_raw(dir.path(), "planar", &h, &[0; 8]);
        assert!(matches!(
            load_image(&bin, None),
            Err(Error::MalformedHeader { .. })
        ));
    }

    #[test]
    fn fractional_samples_need_f64() {
        let dir = tempfile::tempdir().unwrap();
        let cube = ImageCube::new(2, 2, 1, vec![0.25, 1.5, 2.0, 3.0], "frac").unwrap();
        let path = dir.path().join("frac.bin");
        assert!(matches!(
            save_raw(&cube, &path, Dtype::U16, Endianness::Little),
            Err(Error::NotRepresentable { index: 0, .. })
        ));
        save_image(&cube, &path).unwrap();
        let back = load_image(&path, None).unwrap();
        assert_eq!(back.samples(), cube.samples());
        let header: RawSidecar =
            serde_json::from_str(&fs::read_to_string(path.with_extension("json")).unwrap())
                .unwrap();
        assert_eq!(header.dtype, Dtype::F64);
        assert_eq!(header.provenance.as_deref(), Some("frac"));
    }

    #[test]
    fn narrowest_dtype() {
        let c = |v: f64| ImageCube::new(2, 1, 1, vec![0.0, v], "").unwrap();
        assert_eq!(Dtype::narrowest_for(&c(255.0)), Dtype::U8);
        assert_eq!(Dtype::narrowest_for(&c(256.0)), Dtype::U16);
        assert_eq!(Dtype::narrowest_for(&c(70000.0)), Dtype::U32);
        assert_eq!(Dtype::narrowest_for(&c(0.5)), Dtype::F64);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cube = ImageCube::from_fn(3, 2, 1, "p", |x, y, _| (x * 300 + y) as f64).unwrap();
        let path = dir.path().join("r.pgm");
        save_image(&cube, &path).unwrap();
        assert_eq!(load_image(&path, None).unwrap().samples(), cube.samples());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn raw_round_trip_is_bit_exact(
            w in 2usize..6,
            h in 2usize..6,
            c in 1usize..4,
            dtype_idx in 0usize..4,
            big in any::<bool>(),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let dtype = [Dtype::U8, Dtype::U16, Dtype::U32, Dtype::F64][dtype_idx];
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..w * h * c)
                .map(|_| match dtype {
                    Dtype::U8 => rng.random_range(0..=255u32) as f64,
                    Dtype::U16 => rng.random_range(0..=65535u32) as f64,
                    Dtype::U32 => rng.random::<u32>() as f64,
                    Dtype::F64 => rng.random::<f64>() * 1e6,
                })
                .collect();
            let cube = ImageCube::new(w, h, c, samples, "prop").unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("x.bin");
            let endianness = if big { Endianness::Big } else { Endianness::Little };
            save_raw(&cube, &path, dtype, endianness).unwrap();
            let back = load_image(&path, Some(ImageFormat::Raw)).unwrap();
            let a: Vec<u64> = cube.samples().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.samples().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
