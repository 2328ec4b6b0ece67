//! Triangle mesh reconstruction from a geometry raster by 2x2 cell scanning.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{self, Vec3};
use crate::raster::GgiRaster;

#[derive(Debug, Error, PartialEq)]
pub enum RemeshError {
    #[error("raster has no valid pixels")]
    EmptyRaster,
    #[error("raster buffers do not match side {0}")]
    InconsistentRaster(u32),
}

/// Triangle mesh in world centimeters. `uv_of_vertex` and `panel_of_vertex`
/// are either empty or one entry per vertex.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexedMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    /// Source pixel of each vertex.
    pub uv_of_vertex: Vec<[u32; 2]>,
    /// Index into `panel_ids` of each vertex.
    pub panel_of_vertex: Vec<u32>,
    pub panel_ids: Vec<String>,
}

impl IndexedMesh {
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i as usize]);
        geom::cross3(geom::sub3(b, a), geom::sub3(c, a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * geom::norm3(self.face_normal(f))
    }

    /// Number of connected components over face adjacency (isolated
    /// vertices count as their own component).
    pub fn component_count(&self) -> usize {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for f in &self.faces {
            for k in 1..3 {
                let (a, b) = (find(&mut parent, f[0] as usize), find(&mut parent, f[k] as usize));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct MeshStats {
    pub vertex_count: usize,
    pub face_count: usize,
    pub boundary_edge_count: usize,
    pub non_manifold_edge_count: usize,
    pub degenerate_face_count: usize,
}

/// Edge incidence counts keyed by sorted vertex pair.
pub fn edge_incidence(faces: &[[u32; 3]]) -> HashMap<(u32, u32), usize> {
    let mut m = HashMap::with_capacity(faces.len() * 2);
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a != b {
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
    }
    m
}

pub fn mesh_stats(mesh: &IndexedMesh) -> MeshStats {
    let inc = edge_incidence(&mesh.faces);
    let degenerate = (0..mesh.faces.len())
        .filter(|&i| {
            let f = mesh.faces[i];
            f[0] == f[1] || f[1] == f[2] || f[0] == f[2] || mesh.face_area(i) <= 1e-14
        })
        .count();
    MeshStats {
        vertex_count: mesh.vertices.len(),
        face_count: mesh.faces.len(),
        boundary_edge_count: inc.values().filter(|&&c| c == 1).count(),
        non_manifold_edge_count: inc.values().filter(|&&c| c > 2).count(),
        degenerate_face_count: degenerate,
    }
}

/// Faces of one 2x2 cell as raster pixel indices. `pos` is indexed
/// 00, 10, 11, 01 (the cell circuit).
pub fn cell_faces(valid: [bool; 4], pos: [Vec3; 4], idx: [usize; 4]) -> Vec<[usize; 3]> {
    const P00: usize = 0;
    const P10: usize = 1;
    const P11: usize = 2;
    const P01: usize = 3;
    match valid.iter().filter(|&&v| v).count() {
        4 => {
            let d1 = geom::dist3(pos[P00], pos[P11]);
            let d2 = geom::dist3(pos[P10], pos[P01]);
            if d1 <= d2 {
                vec![[idx[P00], idx[P10], idx[P11]], [idx[P00], idx[P11], idx[P01]]]
            } else {
                vec![[idx[P00], idx[P10], idx[P01]], [idx[P10], idx[P11], idx[P01]]]
            }
        }
        3 => {
            let t: Vec<usize> = (0..4).filter(|&k| valid[k]).map(|k| idx[k]).collect();
            vec![[t[0], t[1], t[2]]]
        }
        _ => Vec::new(),
    }
}

/// Rebuilds the per-panel triangle mesh of `raster`. Vertices follow
/// row-major pixel order and only pixels used by a face become vertices.
pub fn remesh(raster: &GgiRaster) -> Result<IndexedMesh, RemeshError> {
    let side = raster.side as usize;
    let n = side * side;
    if raster.valid.len() != n || raster.geometry.len() != n {
        return Err(RemeshError::InconsistentRaster(raster.side));
    }
    if !raster.valid.iter().any(|&v| v) {
        return Err(RemeshError::EmptyRaster);
    }
    let panel = raster.panel_map();
    let world: Vec<Vec3> = (0..n)
        .into_par_iter()
        .map(|i| if raster.valid[i] { raster.world(i) } else { [0.0; 3] })
        .collect();

    let rows: Vec<Vec<[usize; 3]>> = (0..side.saturating_sub(1))
        .into_par_iter()
        .map(|y| {
            let mut out = Vec::new();
            for x in 0..side - 1 {
                let idx = [y * side + x, y * side + x + 1, (y + 1) * side + x + 1, (y + 1) * side + x];
                let pid = panel[idx[0]];
                if pid == u32::MAX || idx.iter().any(|&i| panel[i] != pid) {
                    continue;
                }
                let valid = idx.map(|i| raster.valid[i]);
                out.extend(cell_faces(valid, idx.map(|i| world[i]), idx));
            }
            out
        })
        .collect();

    let mut used = vec![false; n];
    for f in rows.iter().flatten() {
        for &i in f {
            used[i] = true;
        }
    }
    let mut remap = vec![u32::MAX; n];
    let mut mesh = IndexedMesh { panel_ids: raster.panel_ids(), ..Default::default() };
    for i in (0..n).filter(|&i| used[i]) {
        remap[i] = mesh.vertices.len() as u32;
        mesh.vertices.push(world[i]);
        mesh.uv_of_vertex.push([(i % side) as u32, (i / side) as u32]);
        mesh.panel_of_vertex.push(panel[i]);
    }
    mesh.faces = rows.into_iter().flatten().map(|f| f.map(|i| remap[i])).collect();
    Ok(mesh)
}
