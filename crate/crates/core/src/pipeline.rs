//! End-to-end helpers: decode a raster and round-trip analytic fixtures.

use serde::Serialize;
use thiserror::Error;

use crate::fixtures::Fixture;
use crate::geom::Vec3;
use crate::layout::PanelMapping;
use crate::metrics::{self, MetricsError};
use crate::raster::{self, EncodeOptions, Encoded, RasterError};
use crate::remesh::{self, IndexedMesh, MeshStats};
use crate::stitcher::{self, Assembly, DtwCostSpace, SeamReport, StitchError};

/// Surface samples per side for the area-sampled Chamfer.
pub const SURFACE_SAMPLES: usize = 20_000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Stitch(#[from] StitchError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Remesh and stitch a raster into one garment mesh.
pub fn decode(raster: &raster::GgiRaster, space: DtwCostSpace) -> Result<Assembly, StitchError> {
    stitcher::assemble(raster, space)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub fixture: String,
    pub side: u32,
    pub pixel_footprint_cm: f64,
    pub valid_pixels: usize,
    pub uncovered_pixels: usize,
    /// Decoded vertices against the exact surface at every valid pixel's
    /// sample point; sum-of-means convention.
    pub chamfer: f64,
    pub chamfer_cm: f64,
    /// Area-sampled decoded surface against the fixture meshes.
    pub surface_chamfer: f64,
    pub max_pre_weld_gap_cm: f64,
    pub max_post_weld_gap_cm: f64,
    pub mesh: MeshStats,
    pub seams: Vec<SeamReport>,
}

/// All fixture panel meshes merged into one indexed mesh.
pub fn fixture_mesh(fx: &Fixture) -> IndexedMesh {
    let mut m = IndexedMesh::default();
    for pm in &fx.meshes {
        let base = m.vertices.len() as u32;
        m.vertices.extend_from_slice(&pm.vertices3d);
        m.faces.extend(pm.faces.iter().map(|f| f.map(|i| i + base)));
    }
    m
}

/// Exact surface points for every valid pixel of an encoding.
pub fn oracle_points(fx: &Fixture, enc: &Encoded) -> Vec<Vec3> {
    enc.provenance.iter().flatten().map(|s| fx.surface(s.panel as usize, s.uv)).collect()
}

pub fn roundtrip(
    fx: &Fixture,
    opts: &EncodeOptions,
    space: DtwCostSpace,
) -> Result<(Encoded, Assembly, RoundtripReport), PipelineError> {
    let enc = raster::encode(&fx.pattern, &fx.meshes, opts)?;
    let asm = decode(&enc.raster, space)?;
    let report = roundtrip_report(fx, &enc, &asm)?;
    Ok((enc, asm, report))
}

pub fn roundtrip_report(fx: &Fixture, enc: &Encoded, asm: &Assembly) -> Result<RoundtripReport, PipelineError> {
    roundtrip_report_seeded(fx, enc, asm, 1)
}

/// [`roundtrip_report`] with the surface samplers seeded by `seed` and `seed + 1`.
pub fn roundtrip_report_seeded(
    fx: &Fixture,
    enc: &Encoded,
    asm: &Assembly,
    seed: u64,
) -> Result<RoundtripReport, PipelineError> {
    let norm = enc.raster.norm;
    let truth = oracle_points(fx, enc);
    let chamfer_cm = metrics::chamfer_distance(&asm.mesh.vertices, &truth)?;
    let to_norm = |pts: &[Vec3]| -> Vec<Vec3> {
        pts.iter().map(|p| std::array::from_fn(|a| (p[a] - norm.offset[a]) / norm.scale)).collect()
    };
    let chamfer = metrics::chamfer_distance(&to_norm(&asm.mesh.vertices), &to_norm(&truth))?;
    let decoded_samples = metrics::sample_surface(&asm.mesh, SURFACE_SAMPLES, seed)?;
    let truth_samples = metrics::sample_surface(&fixture_mesh(fx), SURFACE_SAMPLES, seed.wrapping_add(1))?;
    let surface_chamfer = metrics::chamfer_distance(&to_norm(&decoded_samples), &to_norm(&truth_samples))?;
    Ok(RoundtripReport {
        fixture: fx.kind.as_str().into(),
        side: enc.raster.side,
        pixel_footprint_cm: 1.0 / enc.raster.layout.resolution_scale,
        valid_pixels: enc.raster.valid.iter().filter(|&&v| v).count(),
        uncovered_pixels: enc.uncovered,
        chamfer,
        chamfer_cm,
        surface_chamfer,
        max_pre_weld_gap_cm: asm.seams.iter().map(|s| s.max_pre_weld_gap_cm).fold(0.0, f64::max),
        max_post_weld_gap_cm: asm.seams.iter().map(|s| s.max_post_weld_gap_cm).fold(0.0, f64::max),
        mesh: remesh::mesh_stats(&asm.mesh),
        seams: asm.seams.clone(),
    })
}

/// Largest distance from the decoded boundary of a panel edge to the exact
/// 3D edge curve. For every dense sample of the edge, the valid pixel of
/// the panel nearest to it (by pixel center) is compared against dense
/// samples of the exact curve.
pub fn edge_deviation(fx: &Fixture, opts: &EncodeOptions, panel: usize, edge: usize) -> Result<f64, PipelineError> {
    const SAMPLES: usize = 4096;
    const SEARCH: i64 = 4;
    let enc = raster::encode(&fx.pattern, &fx.meshes, opts)?;
    let r = &enc.raster;
    let p = &fx.pattern.panels[panel];
    let mapping = PanelMapping::new(p, &r.layout).map_err(RasterError::from)?;
    let pmap = r.panel_map();
    let slot = r.layout.placements.keys().position(|k| *k == p.id).expect("panel is placed") as u32;
    let (a, b) = p.edge_points(edge);
    let curve: Vec<Vec3> = (0..=SAMPLES)
        .map(|i| {
            let t = i as f64 / SAMPLES as f64;
            fx.surface(panel, [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t])
        })
        .collect();
    let tree = metrics::KdTree::new(&curve);
    let side = r.side as i64;
    let mut nearest = std::collections::BTreeSet::new();
    for i in 0..=SAMPLES {
        let t = i as f64 / SAMPLES as f64;
        let u = mapping.to_px([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
        let (cx, cy) = (u[0].floor() as i64, u[1].floor() as i64);
        let mut best: Option<(f64, usize)> = None;
        for y in (cy - SEARCH).max(0)..=(cy + SEARCH).min(side - 1) {
            for x in (cx - SEARCH).max(0)..=(cx + SEARCH).min(side - 1) {
                let idx = (y * side + x) as usize;
                if !r.valid[idx] || pmap[idx] != slot {
                    continue;
                }
                let d = (x as f64 + 0.5 - u[0]).hypot(y as f64 + 0.5 - u[1]);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, idx));
                }
            }
        }
        if let Some((_, idx)) = best {
            nearest.insert(idx);
        }
    }
    Ok(nearest.into_iter().map(|idx| tree.nearest_distance(r.world(idx))).fold(0.0, f64::max))
}

/// [`edge_deviation`] along the top rim of the cylinder fixture.
pub fn rim_deviation(fx: &Fixture, opts: &EncodeOptions) -> Result<f64, PipelineError> {
    edge_deviation(fx, opts, 0, 2)
}
