//! Wavefront OBJ subset: `v`, `vt` and triangular `f` lines.
//!
//! Texture coordinates are per vertex (`vt` k belongs to `v` k). Header
//! comments carry the tool version, the geometry normalization and, for
//! decoded meshes, the raster side used to encode pixel UVs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geom::{Vec2, Vec3};
use crate::raster::Norm;
use crate::remesh::IndexedMesh;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("line {line}: index {index} out of range 1..={count}")]
    IndexOutOfRange { line: usize, index: i64, count: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjDocument {
    pub vertices: Vec<Vec3>,
    /// Empty or one per vertex.
    pub uvs: Vec<Vec2>,
    pub faces: Vec<[u32; 3]>,
    pub norm: Option<Norm>,
    /// Side of the raster whose pixel centers the UVs address.
    pub uv_side: Option<u32>,
}

fn fmt6(out: &mut String, v: f64) {
    let s = format!("{v:.6}");
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        out.push_str(s.trim_start_matches('-'));
    } else {
        out.push_str(&s);
    }
}

pub fn write_obj_string(doc: &ObjDocument) -> String {
    let mut out = String::with_capacity(doc.vertices.len() * 40 + doc.faces.len() * 24);
    let _ = writeln!(out, "# ggi-kit {TOOL_VERSION}");
    if let Some(n) = doc.norm {
        out.push_str("# norm");
        for v in [n.offset[0], n.offset[1], n.offset[2], n.scale] {
            out.push(' ');
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    if let Some(s) = doc.uv_side {
        let _ = writeln!(out, "# uvside {s}");
    }
    for v in &doc.vertices {
        out.push('v');
        for &c in v {
            out.push(' ');
            fmt6(&mut out, c);
        }
        out.push('\n');
    }
    for t in &doc.uvs {
        out.push_str("vt");
        for &c in t {
            out.push(' ');
            fmt6(&mut out, c);
        }
        out.push('\n');
    }
    let with_uv = !doc.uvs.is_empty();
    for f in &doc.faces {
        out.push('f');
        for &i in f {
            let k = i + 1;
            if with_uv {
                let _ = write!(out, " {k}/{k}");
            } else {
                let _ = write!(out, " {k}");
            }
        }
        out.push('\n');
    }
    out
}

fn parse_floats<const N: usize>(it: &mut std::str::SplitWhitespace, line: usize) -> Result<[f64; N], ObjError> {
    let mut out = [0.0; N];
    for o in out.iter_mut() {
        let tok = it.next().ok_or_else(|| ObjError::ParseError { line, reason: format!("expected {N} numbers") })?;
        *o = tok
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ObjError::ParseError { line, reason: format!("bad number '{tok}'") })?;
    }
    Ok(out)
}

pub fn parse_obj(text: &str) -> Result<ObjDocument, ObjError> {
    let mut doc = ObjDocument::default();
    // (line, raw face tokens) resolved after all vertices are known.
    let mut raw_faces: Vec<(usize, [(i64, Option<i64>); 3])> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            None => {}
            Some("#") => match it.next() {
                Some("norm") => {
                    let [ox, oy, oz, s] = parse_floats::<4>(&mut it, line)?;
                    doc.norm = Some(Norm { offset: [ox, oy, oz], scale: s });
                }
                Some("uvside") => {
                    let tok = it.next().unwrap_or("");
                    doc.uv_side = Some(tok.parse().map_err(|_| ObjError::ParseError {
                        line,
                        reason: format!("bad uvside '{tok}'"),
                    })?);
                }
                _ => {}
            },
            Some(c) if c.starts_with('#') => {}
            Some("v") => doc.vertices.push(parse_floats::<3>(&mut it, line)?),
            Some("vt") => doc.uvs.push(parse_floats::<2>(&mut it, line)?),
            Some("f") => {
                let toks: Vec<&str> = it.collect();
                if toks.len() != 3 {
                    return Err(ObjError::ParseError { line, reason: format!("face has {} corners, need 3", toks.len()) });
                }
                let mut corners = [(0i64, None); 3];
                for (c, tok) in corners.iter_mut().zip(&toks) {
                    let mut parts = tok.split('/');
                    let bad = || ObjError::ParseError { line, reason: format!("bad face corner '{tok}'") };
                    let v: i64 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
                    let t = match parts.next() {
                        None | Some("") => None,
                        Some(p) => Some(p.parse::<i64>().map_err(|_| bad())?),
                    };
                    *c = (v, t);
                }
                raw_faces.push((line, corners));
            }
            Some(other) => {
                return Err(ObjError::ParseError { line, reason: format!("unsupported statement '{other}'") });
            }
        }
    }
    let n = doc.vertices.len();
    if !doc.uvs.is_empty() && doc.uvs.len() != n {
        return Err(ObjError::ParseError {
            line: 0,
            reason: format!("{} texture coordinates for {n} vertices", doc.uvs.len()),
        });
    }
    for (line, corners) in raw_faces {
        let mut f = [0u32; 3];
        for (slot, (v, t)) in f.iter_mut().zip(corners) {
            if v < 1 || v as usize > n {
                return Err(ObjError::IndexOutOfRange { line, index: v, count: n });
            }
            if let Some(t) = t {
                if t != v {
                    return Err(ObjError::ParseError { line, reason: "texture index differs from vertex index".into() });
                }
            }
            *slot = (v - 1) as u32;
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(ObjError::ParseError { line, reason: "face repeats a vertex".into() });
        }
        doc.faces.push(f);
    }
    Ok(doc)
}

pub fn read_obj(path: &Path) -> Result<ObjDocument, ObjError> {
    let text = fs::read_to_string(path).map_err(|source| ObjError::Io { path: path.into(), source })?;
    parse_obj(&text)
}

pub fn write_obj(doc: &ObjDocument, path: &Path) -> Result<(), ObjError> {
    fs::write(path, write_obj_string(doc)).map_err(|source| ObjError::Io { path: path.into(), source })
}

/// Document for a decoded mesh; UVs address pixel centers of a `side` raster.
pub fn mesh_to_obj(mesh: &IndexedMesh, norm: Option<Norm>, side: Option<u32>) -> ObjDocument {
    let uvs = match side {
        Some(s) if mesh.uv_of_vertex.len() == mesh.vertices.len() => mesh
            .uv_of_vertex
            .iter()
            .map(|p| [(p[0] as f64 + 0.5) / s as f64, (p[1] as f64 + 0.5) / s as f64])
            .collect(),
        _ => Vec::new(),
    };
    ObjDocument {
        vertices: mesh.vertices.clone(),
        uv_side: side.filter(|_| !uvs.is_empty()),
        uvs,
        faces: mesh.faces.clone(),
        norm,
    }
}

/// Inverse of [`mesh_to_obj`]; pixel UVs are recovered when the side is known.
pub fn obj_to_mesh(doc: &ObjDocument) -> IndexedMesh {
    let uv_of_vertex = match doc.uv_side {
        Some(s) if !doc.uvs.is_empty() => doc
            .uvs
            .iter()
            .map(|t| t.map(|c| (c * s as f64 - 0.5).round().clamp(0.0, s as f64 - 1.0) as u32))
            .collect(),
        _ => Vec::new(),
    };
    IndexedMesh { vertices: doc.vertices.clone(), faces: doc.faces.clone(), uv_of_vertex, ..Default::default() }
}

pub fn export_obj(mesh: &IndexedMesh, norm: Option<Norm>, side: Option<u32>, path: &Path) -> Result<(), ObjError> {
    write_obj(&mesh_to_obj(mesh, norm, side), path)
}

pub fn import_obj(path: &Path) -> Result<IndexedMesh, ObjError> {
    Ok(obj_to_mesh(&read_obj(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> IndexedMesh {
        IndexedMesh {
            vertices: vec![[0.0, 0.0, -0.0], [1.25, 0.0, 0.0], [1.0, 1.0, 0.5], [0.0, 1.0, 1e-7]],
            faces: vec![[0, 1, 2], [0, 2, 3]],
            uv_of_vertex: vec![[3, 4], [4, 4], [4, 5], [3, 5]],
            ..Default::default()
        }
    }

    #[test]
    fn roundtrip_with_pixel_uvs() {
        let norm = Norm { offset: [0.1, -2.0, 3.0], scale: 0.7 };
        let text = write_obj_string(&mesh_to_obj(&quad(), Some(norm), Some(16)));
        assert!(text.starts_with("# ggi-kit "));
        assert!(text.contains("v 0.000000 0.000000 0.000000\n"));
        let doc = parse_obj(&text).unwrap();
        assert_eq!(doc.norm, Some(norm));
        let back = obj_to_mesh(&doc);
        assert_eq!(back.faces, quad().faces);
        assert_eq!(back.uv_of_vertex, quad().uv_of_vertex);
        assert_eq!(back.vertices[3], [0.0, 1.0, 0.0]);
        assert_eq!(write_obj_string(&mesh_to_obj(&back, Some(norm), Some(16))), text);
    }

    #[test]
    fn zero_index_is_out_of_range() {
        let e = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n").unwrap_err();
        assert!(matches!(e, ObjError::IndexOutOfRange { line: 4, index: 0, .. }));
        let e = parse_obj("v 0 0 0\nf 1 2 3\n").unwrap_err();
        assert!(matches!(e, ObjError::IndexOutOfRange { index: 2, .. }));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_obj("v 0 0\n"), Err(ObjError::ParseError { line: 1, .. })));
        assert!(matches!(parse_obj("v 0 0 0\nusemtl x\n"), Err(ObjError::ParseError { line: 2, .. })));
        assert!(matches!(
            parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n"),
            Err(ObjError::ParseError { line: 5, .. })
        ));
    }
}
