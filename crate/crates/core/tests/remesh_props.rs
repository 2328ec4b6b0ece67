use std::collections::{BTreeMap, HashSet};

use ggi_core::layout::{PackedLayout, Placement, LAYOUT_NORMAL};
use ggi_core::palette::BACKGROUND;
use ggi_core::raster::{GgiRaster, Norm};
use ggi_core::remesh::{edge_incidence, mesh_stats, remesh};
use proptest::prelude::*;

/// Flat raster of `side` pixels split into `panels` vertical strips; pixel
/// (x, y) sits at world (x, y, 0).
fn flat_raster(side: u32, panels: u32, valid: Vec<bool>) -> GgiRaster {
    let n = (side * side) as usize;
    let width = side / panels;
    let placements: BTreeMap<String, Placement> = (0..panels)
        .map(|k| {
            let w = if k + 1 == panels { side - k * width } else { width };
            (format!("p{k}"), Placement { origin: [k * width, 0], size: [w, side], flipped: false })
        })
        .collect();
    let norm = Norm { offset: [0.0; 3], scale: side as f64 };
    let geometry = (0..n)
        .map(|i| {
            let p = [(i % side as usize) as f64, (i / side as usize) as f64, 0.0];
            if valid[i] { norm.normalize(p) } else { [0.0; 3] }
        })
        .collect();
    GgiRaster {
        side,
        semantic: valid.iter().map(|&v| if v { [255, 0, 0] } else { BACKGROUND }).collect(),
        stitching: vec![BACKGROUND; n],
        geometry,
        valid,
        norm,
        layout: PackedLayout { side, resolution_scale: 1.0, layout_normal: LAYOUT_NORMAL, placements },
        stitch_count: 0,
    }
}

/// Faces and used pixels by direct cell enumeration.
fn oracle_counts(r: &GgiRaster) -> (usize, usize) {
    let pm = r.panel_map();
    let s = r.side as usize;
    let mut faces = 0;
    let mut used = HashSet::new();
    for y in 0..s - 1 {
        for x in 0..s - 1 {
            let cell = [y * s + x, y * s + x + 1, (y + 1) * s + x + 1, (y + 1) * s + x];
            if cell.iter().any(|&i| pm[i] != pm[cell[0]]) {
                continue;
            }
            let on: Vec<usize> = cell.into_iter().filter(|&i| r.valid[i]).collect();
            faces += match on.len() {
                4 => 2,
                3 => 1,
                _ => 0,
            };
            if on.len() >= 3 {
                used.extend(on);
            }
        }
    }
    (faces, used.len())
}

#[test]
fn full_flat_raster_has_two_faces_per_cell_facing_up() {
    for side in [2u32, 3, 9, 32] {
        let r = flat_raster(side, 1, vec![true; (side * side) as usize]);
        let m = remesh(&r).unwrap();
        let n = side as usize;
        assert_eq!(m.faces.len(), 2 * (n - 1) * (n - 1));
        assert_eq!(m.vertices.len(), n * n);
        for f in 0..m.faces.len() {
            let nz = m.face_normal(f)[2];
            assert!(nz > 0.999, "face {f} normal {nz}");
        }
        let stats = mesh_stats(&m);
        assert_eq!(stats.boundary_edge_count, 4 * (n - 1));
        assert_eq!(stats.non_manifold_edge_count, 0);
        assert_eq!(stats.degenerate_face_count, 0);
    }
}

#[test]
fn checkerboard_yields_no_faces() {
    let side = 16u32;
    let valid = (0..side * side).map(|i| (i % side + i / side) % 2 == 0).collect();
    let r = flat_raster(side, 1, valid);
    assert_eq!(oracle_counts(&r), (0, 0));
    assert!(remesh(&r).unwrap().faces.is_empty());
}

#[test]
fn cells_spanning_two_panels_are_skipped() {
    let r = flat_raster(8, 2, vec![true; 64]);
    let m = remesh(&r).unwrap();
    assert_eq!(m.faces.len(), 2 * 2 * 3 * 7);
    assert_eq!(m.component_count(), 2);
    assert_eq!(m.panel_ids, vec!["p0".to_string(), "p1".to_string()]);
}

proptest! {
    #[test]
    fn random_masks_match_cell_enumeration(
        side in 2u32..14,
        panels in 1u32..3,
        bits in prop::collection::vec(prop::bool::weighted(0.7), 14 * 14),
    ) {
        let valid: Vec<bool> = bits[..(side * side) as usize].to_vec();
        prop_assume!(valid.iter().any(|&v| v));
        let r = flat_raster(side, panels.min(side), valid);
        let m = remesh(&r).unwrap();
        let (faces, used) = oracle_counts(&r);
        prop_assert_eq!(m.faces.len(), faces);
        prop_assert_eq!(m.vertices.len(), used);
        for f in 0..m.faces.len() {
            prop_assert!(m.face_normal(f)[2] > 0.999);
            let [a, b, c] = m.faces[f];
            prop_assert!(a != b && b != c && a != c);
            prop_assert!(m.panel_of_vertex[a as usize] == m.panel_of_vertex[b as usize]);
            prop_assert!(m.panel_of_vertex[a as usize] == m.panel_of_vertex[c as usize]);
        }
        // Consistent orientation: every directed edge occurs once.
        let mut directed = HashSet::new();
        for f in &m.faces {
            for k in 0..3 {
                prop_assert!(directed.insert((f[k], f[(k + 1) % 3])));
            }
        }
        prop_assert!(edge_incidence(&m.faces).values().all(|&c| c <= 2));
        // Vertices follow row-major pixel order.
        let keys: Vec<u64> = m.uv_of_vertex.iter().map(|p| (p[1] as u64) << 32 | p[0] as u64).collect();
        prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn remesh_is_independent_of_thread_count() {
    let side = 64u32;
    let valid = (0..side * side).map(|i| (i * 7919 % 13) != 0).collect();
    let r = flat_raster(side, 2, valid);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| remesh(&r).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(1));
}
