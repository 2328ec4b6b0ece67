//! On-disk file set of a garment geometry image.
//!
//! ```text
//! <stem>.semantic.png   RGB8
//! <stem>.stitch.png     RGB8
//! <stem>.geom.f32       "GGI1", u32 side, X/Y/Z planes of side*side f32, u32 CRC32
//! <stem>.ggi.json       sidecar: format, side, norm, layout, stitch count, palette hashes
//! ```
//!
//! All integers and floats are little-endian. Invalid pixels are stored as
//! NaN in the geometry planes; the CRC covers every byte before it.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::PackedLayout;
use crate::palette::{self, Rgb};
use crate::raster::{GgiRaster, Norm};

pub const GGI_FORMAT: &str = "ggi/1";
const GEOM_MAGIC: &[u8; 4] = b"GGI1";

#[derive(Debug, Error)]
pub enum GgiIoError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("format mismatch: {0}")]
    FormatVersionMismatch(String),
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteHashes {
    pub semantic: String,
    pub stitch: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub side: u32,
    pub norm: Norm,
    pub stitch_count: u32,
    pub layout: PackedLayout,
    pub palette_hashes: PaletteHashes,
}

/// Strips a trailing `.ggi` or `.ggi.json` so `sample`, `sample.ggi` and
/// `sample.ggi.json` name the same file set.
pub fn normalize_stem(stem: &Path) -> PathBuf {
    let s = stem.to_string_lossy();
    let trimmed = s
        .strip_suffix(".ggi.json")
        .or_else(|| s.strip_suffix(".ggi"))
        .unwrap_or(&s);
    PathBuf::from(trimmed)
}

pub fn file_path(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = normalize_stem(stem).into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> GgiIoError + '_ {
    move |source| GgiIoError::Io { path: path.to_path_buf(), source }
}

fn write_png(path: &Path, side: u32, pixels: &[Rgb]) -> Result<(), GgiIoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), side, side);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let to_io = |e: png::EncodingError| GgiIoError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e),
    };
    let mut w = enc.write_header().map_err(to_io)?;
    let data: Vec<u8> = pixels.iter().flatten().copied().collect();
    w.write_image_data(&data).map_err(to_io)?;
    w.finish().map_err(to_io)
}

fn read_png(path: &Path, side: u32) -> Result<Vec<Rgb>, GgiIoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let dec = png::Decoder::new(io::BufReader::new(file));
    let bad = |m: String| GgiIoError::FormatVersionMismatch(format!("{}: {m}", path.display()));
    let mut reader = dec.read_info().map_err(|e| bad(e.to_string()))?;
    let info = reader.info();
    if info.width != side || info.height != side {
        return Err(bad(format!("image is {}x{}, sidecar says {side}", info.width, info.height)));
    }
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(bad("expected 8-bit RGB".into()));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    reader.next_frame(&mut buf).map_err(|e| bad(e.to_string()))?;
    Ok(buf.chunks_exact(3).take(side as usize * side as usize).map(|c| [c[0], c[1], c[2]]).collect())
}

fn geom_bytes(r: &GgiRaster) -> Vec<u8> {
    let n = r.side as usize * r.side as usize;
    let mut out = Vec::with_capacity(8 + 12 * n + 4);
    out.extend_from_slice(GEOM_MAGIC);
    out.extend_from_slice(&r.side.to_le_bytes());
    for axis in 0..3 {
        for i in 0..n {
            let v = if r.valid[i] { r.geometry[i][axis] } else { f32::NAN };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn sidecar_of(r: &GgiRaster) -> Sidecar {
    Sidecar {
        format: GGI_FORMAT.into(),
        side: r.side,
        norm: r.norm,
        stitch_count: r.stitch_count,
        layout: r.layout.clone(),
        palette_hashes: PaletteHashes {
            semantic: palette::semantic_palette_hash(),
            stitch: palette::stitch_palette_hash(),
        },
    }
}

/// Writes the four files of `raster` next to `stem`.
pub fn write_ggi(raster: &GgiRaster, stem: &Path) -> Result<(), GgiIoError> {
    write_png(&file_path(stem, ".semantic.png"), raster.side, &raster.semantic)?;
    write_png(&file_path(stem, ".stitch.png"), raster.side, &raster.stitching)?;
    let gp = file_path(stem, ".geom.f32");
    let mut f = BufWriter::new(File::create(&gp).map_err(io_err(&gp))?);
    f.write_all(&geom_bytes(raster)).map_err(io_err(&gp))?;
    f.flush().map_err(io_err(&gp))?;
    let sp = file_path(stem, ".ggi.json");
    let mut json = serde_json::to_string_pretty(&sidecar_of(raster)).expect("sidecar serializes");
    json.push('\n');
    fs::write(&sp, json).map_err(io_err(&sp))
}

pub fn read_sidecar(stem: &Path) -> Result<Sidecar, GgiIoError> {
    let sp = file_path(stem, ".ggi.json");
    let text = fs::read(&sp).map_err(io_err(&sp))?;
    let sc: Sidecar = serde_json::from_slice(&text)
        .map_err(|e| GgiIoError::FormatVersionMismatch(format!("{}: {e}", sp.display())))?;
    if sc.format != GGI_FORMAT {
        return Err(GgiIoError::FormatVersionMismatch(format!("sidecar format '{}', expected '{GGI_FORMAT}'", sc.format)));
    }
    if sc.palette_hashes.semantic != palette::semantic_palette_hash()
        || sc.palette_hashes.stitch != palette::stitch_palette_hash()
    {
        return Err(GgiIoError::FormatVersionMismatch("palette tables differ from this build".into()));
    }
    if sc.layout.side != sc.side {
        return Err(GgiIoError::FormatVersionMismatch(format!(
            "layout side {} differs from sidecar side {}",
            sc.layout.side, sc.side
        )));
    }
    Ok(sc)
}

/// Reads a file set written by [`write_ggi`]; the result equals the written
/// raster bit for bit.
pub fn read_ggi(stem: &Path) -> Result<GgiRaster, GgiIoError> {
    let sc = read_sidecar(stem)?;
    let side = sc.side;
    let n = side as usize * side as usize;

    let gp = file_path(stem, ".geom.f32");
    let mut bytes = Vec::new();
    File::open(&gp).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io_err(&gp))?;
    if bytes.len() < 12 || &bytes[..4] != GEOM_MAGIC {
        return Err(if bytes.len() >= 4 && &bytes[..4] != GEOM_MAGIC {
            GgiIoError::FormatVersionMismatch(format!("{}: bad magic", gp.display()))
        } else {
            GgiIoError::ChecksumMismatch(gp)
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(GgiIoError::ChecksumMismatch(gp));
    }
    let file_side = u32::from_le_bytes(body[4..8].try_into().unwrap());
    if file_side != side || body.len() != 8 + 12 * n {
        return Err(GgiIoError::FormatVersionMismatch(format!(
            "{}: geometry side {file_side}, sidecar side {side}",
            gp.display()
        )));
    }
    let planes = &body[8..];
    let at = |axis: usize, i: usize| {
        let o = (axis * n + i) * 4;
        f32::from_le_bytes(planes[o..o + 4].try_into().unwrap())
    };
    let mut geometry = vec![[0.0f32; 3]; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        let g = [at(0, i), at(1, i), at(2, i)];
        if g.iter().all(|v| v.is_finite()) {
            geometry[i] = g;
            valid[i] = true;
        }
    }

    let semantic = read_png(&file_path(stem, ".semantic.png"), side)?;
    let stitching = read_png(&file_path(stem, ".stitch.png"), side)?;
    Ok(GgiRaster { side, semantic, stitching, geometry, valid, norm: sc.norm, layout: sc.layout, stitch_count: sc.stitch_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use crate::layout::{Placement, LAYOUT_NORMAL};

    fn tiny() -> GgiRaster {
        let side = 4;
        let n = 16;
        let mut placements = BTreeMap::new();
        placements.insert("a".to_string(), Placement { origin: [1, 1], size: [2, 2], flipped: true });
        let mut valid = vec![false; n];
        let mut geometry = vec![[0.0f32; 3]; n];
        for (i, idx) in [5usize, 6, 9, 10].into_iter().enumerate() {
            valid[idx] = true;
            geometry[idx] = [i as f32 * 0.25, -0.0, 1.0 / 3.0];
        }
        GgiRaster {
            side,
            semantic: (0..n).map(|i| if valid[i] { [10, 20, 30] } else { [0, 0, 0] }).collect(),
            stitching: (0..n).map(|i| if i == 5 { [1, 2, 3] } else { [0, 0, 0] }).collect(),
            geometry,
            valid,
            norm: Norm { offset: [0.1, 0.2, 0.3], scale: 7.123456789 },
            layout: PackedLayout {
                side,
                resolution_scale: 0.3,
                layout_normal: LAYOUT_NORMAL,
                placements,
            },
            stitch_count: 1,
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("sample");
        let r = tiny();
        write_ggi(&r, &stem).unwrap();
        let back = read_ggi(&dir.path().join("sample.ggi")).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.geometry[6][1].to_bits(), (-0.0f32).to_bits());
    }

    #[test]
    fn truncated_geometry_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("s");
        write_ggi(&tiny(), &stem).unwrap();
        let gp = file_path(&stem, ".geom.f32");
        let bytes = fs::read(&gp).unwrap();
        fs::write(&gp, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(read_ggi(&stem), Err(GgiIoError::ChecksumMismatch(_))));
        fs::write(&gp, &bytes[..6]).unwrap();
        assert!(matches!(read_ggi(&stem), Err(GgiIoError::ChecksumMismatch(_))));
    }

    #[test]
    fn sidecar_side_mismatch_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("s");
        write_ggi(&tiny(), &stem).unwrap();
        let sp = file_path(&stem, ".ggi.json");
        let mut sc: Sidecar = serde_json::from_slice(&fs::read(&sp).unwrap()).unwrap();
        sc.side = 5;
        sc.layout.side = 5;
        fs::write(&sp, serde_json::to_string(&sc).unwrap()).unwrap();
        assert!(matches!(read_ggi(&stem), Err(GgiIoError::FormatVersionMismatch(_))));
    }

    #[test]
    fn missing_files_are_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_ggi(&dir.path().join("nothing")), Err(GgiIoError::Io { .. })));
    }
}
