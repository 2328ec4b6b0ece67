//! Rendering of the three aligned rasters of a garment geometry image.
//!
//! All three rasters share one pixel convention: pixel `(x, y)` covers
//! `[x, x+1) x [y, y+1)` of the packed layout and its center is
//! `(x + 0.5, y + 0.5)`. Rows grow with pattern-space `y`.
//!
//! Each pattern edge is digitized once into a thin 8-connected pixel line
//! (samples every half pixel, staircase corners removed). The same lines are
//! used for the stitching raster and for the boundary pass of the geometry
//! raster, so every stitched pixel carries interpolated boundary geometry.
//! A panel covers the pixels whose center lies inside its polygon plus the
//! pixels of its edge lines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Vec2, Vec3};
use crate::layout::{self, LayoutError, PackedLayout, PanelMapping};
use crate::palette::{self, Rgb, SemanticPalette, BACKGROUND};
use crate::pattern::{Panel, SewingPattern};

/// Spacing of boundary samples along an edge, in pixels.
pub const EDGE_SAMPLE_STEP: f64 = 0.5;

const INSIDE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("panel type '{0}' has no palette color")]
    UnknownPanelType(String),
    #[error("{0} stitches exceed the stitch palette")]
    TooManyStitches(usize),
    #[error("no mesh for panel '{0}'")]
    MissingMesh(String),
    #[error("mesh of panel '{panel}' is invalid: {reason}")]
    BadPanelMesh { panel: String, reason: String },
    #[error("vertex {vertex} of panel '{panel}' maps outside its placement")]
    UvOutsidePlacement { panel: String, vertex: usize },
    #[error("vertex {vertex} of panel '{panel}' is not finite")]
    NonFiniteVertex { panel: String, vertex: usize },
}

/// Maps normalized geometry values in `[-1, 1]` back to world centimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norm {
    pub offset: Vec3,
    pub scale: f64,
}

impl Norm {
    /// Bounding-box center and half the largest extent of `points`.
    pub fn fit<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Norm {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if !lo[0].is_finite() {
            return Norm { offset: [0.0; 3], scale: 1.0 };
        }
        let offset = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
        let half = (0..3).map(|a| 0.5 * (hi[a] - lo[a])).fold(0.0, f64::max);
        Norm { offset, scale: if half > 0.0 { half } else { 1.0 } }
    }

    pub fn normalize(&self, v: Vec3) -> [f32; 3] {
        let s = 1.0 / self.scale;
        [
            ((v[0] - self.offset[0]) * s) as f32,
            ((v[1] - self.offset[1]) * s) as f32,
            ((v[2] - self.offset[2]) * s) as f32,
        ]
    }

    pub fn denormalize(&self, g: [f32; 3]) -> Vec3 {
        [
            self.offset[0] + g[0] as f64 * self.scale,
            self.offset[1] + g[1] as f64 * self.scale,
            self.offset[2] + g[2] as f64 * self.scale,
        ]
    }
}

/// One garment geometry image: aligned semantic, stitching and geometry
/// rasters, the validity mask, and the metadata needed to decode them.
#[derive(Debug, Clone, PartialEq)]
pub struct GgiRaster {
    pub side: u32,
    pub semantic: Vec<Rgb>,
    pub stitching: Vec<Rgb>,
    /// Normalized XYZ; `[0, 0, 0]` where `valid` is false.
    pub geometry: Vec<[f32; 3]>,
    pub valid: Vec<bool>,
    pub norm: Norm,
    pub layout: PackedLayout,
    pub stitch_count: u32,
}

impl GgiRaster {
    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.side as usize + x as usize
    }

    pub fn world(&self, idx: usize) -> Vec3 {
        self.norm.denormalize(self.geometry[idx])
    }

    /// Panel index (into the layout's sorted placement ids) of every pixel,
    /// `u32::MAX` outside all placements.
    pub fn panel_map(&self) -> Vec<u32> {
        panel_index_map(&self.layout, self.side)
    }

    pub fn panel_ids(&self) -> Vec<String> {
        self.layout.placements.keys().cloned().collect()
    }
}

pub fn panel_index_map(layout: &PackedLayout, side: u32) -> Vec<u32> {
    let mut map = vec![u32::MAX; side as usize * side as usize];
    for (i, pl) in layout.placements.values().enumerate() {
        for y in pl.origin[1]..(pl.origin[1] + pl.size[1]).min(side) {
            let row = y as usize * side as usize;
            for x in pl.origin[0]..(pl.origin[0] + pl.size[0]).min(side) {
                map[row + x as usize] = i as u32;
            }
        }
    }
    map
}

/// Triangle mesh of one panel with its pattern-space parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelMesh {
    pub panel_id: String,
    /// World positions (cm).
    pub vertices3d: Vec<Vec3>,
    /// Pattern-space positions (cm), same frame as the panel's vertices.
    pub uv: Vec<Vec2>,
    pub faces: Vec<[u32; 3]>,
    /// For every pattern edge, the mesh vertices along it from the edge's
    /// start corner to its end corner.
    pub boundary_edges: Vec<Vec<u32>>,
}

impl PanelMesh {
    /// Builds a panel mesh, deriving boundary chains from vertices whose UV
    /// lies on each pattern edge.
    pub fn from_uv_mesh(
        panel: &Panel,
        vertices3d: Vec<Vec3>,
        uv: Vec<Vec2>,
        faces: Vec<[u32; 3]>,
    ) -> Result<PanelMesh, RasterError> {
        let (lo, hi) = panel.bbox();
        let tol = 1e-6 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
        let mut boundary_edges = Vec::with_capacity(panel.edges.len());
        for k in 0..panel.edges.len() {
            let (a, b) = panel.edge_points(k);
            let ab = geom::sub2(b, a);
            let len2 = geom::dot2(ab, ab);
            let mut on: Vec<(f64, u32)> = uv
                .iter()
                .enumerate()
                .filter(|(_, &p)| geom::point_segment_dist(p, a, b) <= tol)
                .map(|(i, &p)| (geom::dot2(geom::sub2(p, a), ab) / len2, i as u32))
                .collect();
            on.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            boundary_edges.push(on.into_iter().map(|(_, i)| i).collect());
        }
        let mesh = PanelMesh { panel_id: panel.id.clone(), vertices3d, uv, faces, boundary_edges };
        mesh.check(panel)?;
        Ok(mesh)
    }

    fn check(&self, panel: &Panel) -> Result<(), RasterError> {
        let bad = |reason: String| RasterError::BadPanelMesh { panel: panel.id.clone(), reason };
        let n = self.vertices3d.len();
        if self.uv.len() != n {
            return Err(bad(format!("{} positions but {} uvs", n, self.uv.len())));
        }
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(bad(format!("face {f:?} indexes past {n} vertices")));
        }
        if let Some(i) = self.vertices3d.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(RasterError::NonFiniteVertex { panel: panel.id.clone(), vertex: i });
        }
        if self.boundary_edges.len() != panel.edges.len() {
            return Err(bad(format!(
                "{} boundary chains for {} pattern edges",
                self.boundary_edges.len(),
                panel.edges.len()
            )));
        }
        let (lo, hi) = panel.bbox();
        let tol = 1e-6 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
        for (k, chain) in self.boundary_edges.iter().enumerate() {
            let (a, b) = panel.edge_points(k);
            if chain.len() < 2 || chain.iter().any(|&i| i as usize >= n) {
                return Err(bad(format!("boundary chain {k} is too short or out of range")));
            }
            let first = self.uv[chain[0] as usize];
            let last = self.uv[*chain.last().unwrap() as usize];
            if geom::dist2(first, a) > tol || geom::dist2(last, b) > tol {
                return Err(bad(format!("boundary chain {k} does not span its pattern edge")));
            }
        }
        Ok(())
    }
}

/// One pixel of a digitized edge line and the edge parameter of the sample
/// kept for it (the sample closest to the pixel center).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePixel {
    pub pixel: [u32; 2],
    pub t: f64,
    dist: f64,
}

fn center(p: [u32; 2]) -> Vec2 {
    [p[0] as f64 + 0.5, p[1] as f64 + 0.5]
}

fn chebyshev(a: [u32; 2], b: [u32; 2]) -> u32 {
    a[0].abs_diff(b[0]).max(a[1].abs_diff(b[1]))
}

/// Digitizes the pixel-space segment `a`-`b` into a thin 8-connected line.
pub fn edge_pixels(mapping: &PanelMapping, a: Vec2, b: Vec2) -> Vec<EdgePixel> {
    let len = geom::dist2(a, b);
    let n = ((len / EDGE_SAMPLE_STEP).ceil() as usize).max(1);
    let mut line: Vec<EdgePixel> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let u = [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
        let pixel = mapping.pixel_of(u);
        let d = geom::dist2(u, center(pixel));
        let sample = EdgePixel { pixel, t, dist: d };
        match line.last_mut() {
            Some(last) if last.pixel == pixel => {
                if d < last.dist {
                    *last = sample;
                }
            }
            _ => {
                while line.len() >= 2 && chebyshev(line[line.len() - 2].pixel, pixel) <= 1 {
                    line.pop();
                }
                match line.last_mut() {
                    Some(last) if last.pixel == pixel => {
                        if d < last.dist {
                            *last = sample;
                        }
                    }
                    _ => line.push(sample),
                }
            }
        }
    }
    line
}

/// Per-panel rasterization footprint shared by all three rasters.
pub struct PanelFootprint {
    pub mapping: PanelMapping,
    pub polygon_px: Vec<Vec2>,
    /// Digitized line of every pattern edge, in edge order.
    pub edge_lines: Vec<Vec<EdgePixel>>,
    /// Row-major over the placement rectangle: pixel center inside polygon.
    pub inside: Vec<bool>,
}

impl PanelFootprint {
    pub fn new(panel: &Panel, layout: &PackedLayout) -> Result<Self, LayoutError> {
        let mapping = PanelMapping::new(panel, layout)?;
        let polygon_px: Vec<Vec2> = panel.loop_points().into_iter().map(|p| mapping.to_px(p)).collect();
        let edge_lines = (0..panel.edges.len())
            .map(|k| {
                let (a, b) = panel.edge_points(k);
                edge_pixels(&mapping, mapping.to_px(a), mapping.to_px(b))
            })
            .collect();
        let [ox, oy] = mapping.placement.origin;
        let [w, h] = mapping.placement.size;
        let mut inside = vec![false; w as usize * h as usize];
        for j in 0..h {
            for i in 0..w {
                let c = center([ox + i, oy + j]);
                inside[(j * w + i) as usize] = geom::point_in_polygon(c, &polygon_px, INSIDE_TOL);
            }
        }
        Ok(Self { mapping, polygon_px, edge_lines, inside })
    }

    #[inline]
    fn local(&self, p: [u32; 2]) -> usize {
        let [ox, oy] = self.mapping.placement.origin;
        ((p[1] - oy) * self.mapping.placement.size[0] + (p[0] - ox)) as usize
    }

    pub fn is_inside(&self, p: [u32; 2]) -> bool {
        self.inside[self.local(p)]
    }

    /// Covered pixels: inside centers plus every edge-line pixel.
    pub fn coverage(&self) -> Vec<bool> {
        let mut cov = self.inside.clone();
        for line in &self.edge_lines {
            for ep in line {
                let l = self.local(ep.pixel);
                cov[l] = true;
            }
        }
        cov
    }

    fn for_each_covered(&self, mut f: impl FnMut([u32; 2])) {
        let [ox, oy] = self.mapping.placement.origin;
        let w = self.mapping.placement.size[0];
        for (l, &c) in self.coverage().iter().enumerate() {
            if c {
                f([ox + l as u32 % w, oy + l as u32 / w]);
            }
        }
    }
}

fn footprints(pattern: &SewingPattern, layout: &PackedLayout) -> Result<Vec<PanelFootprint>, LayoutError> {
    pattern.panels.par_iter().map(|p| PanelFootprint::new(p, layout)).collect()
}

/// Semantic raster: every covered pixel carries its panel type's color.
pub fn render_semantic(
    layout: &PackedLayout,
    pattern: &SewingPattern,
    strict: bool,
) -> Result<Vec<Rgb>, RasterError> {
    let palette = if strict {
        SemanticPalette::standard()
    } else {
        SemanticPalette::with_extra(pattern.panels.iter().map(|p| p.panel_type.as_str()))
    };
    let colors = pattern
        .panels
        .iter()
        .map(|p| palette.color(&p.panel_type).ok_or_else(|| RasterError::UnknownPanelType(p.panel_type.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let side = layout.side as usize;
    let mut out = vec![BACKGROUND; side * side];
    for (fp, color) in footprints(pattern, layout)?.iter().zip(colors) {
        fp.for_each_covered(|[x, y]| out[y as usize * side + x as usize] = color);
    }
    Ok(out)
}

/// Stitching raster: both edge lines of stitch `k` carry stitch color `k`.
/// Stitches are painted in id order, so a later stitch owns a shared corner.
pub fn render_stitching(layout: &PackedLayout, pattern: &SewingPattern) -> Result<Vec<Rgb>, RasterError> {
    if pattern.stitches.len() > palette::MAX_COLORS {
        return Err(RasterError::TooManyStitches(pattern.stitches.len()));
    }
    let side = layout.side as usize;
    let mut out = vec![BACKGROUND; side * side];
    let fps = footprints(pattern, layout)?;
    for s in pattern.stitches_by_id() {
        let color = palette::stitch_color(s.id).ok_or(RasterError::TooManyStitches(s.id as usize + 1))?;
        for r in [&s.a, &s.b] {
            let pi = pattern
                .panel_index(&r.panel)
                .ok_or_else(|| LayoutError::MissingPlacement(r.panel.clone()))?;
            for ep in &fps[pi].edge_lines[r.edge] {
                out[ep.pixel[1] as usize * side + ep.pixel[0] as usize] = color;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InterpolationMode {
    /// Linear along boundary edges, barycentric inside triangles.
    #[default]
    Hybrid,
    /// Vertex and barycentric passes only.
    BarycentricOnly,
}

/// Pattern-space point whose geometry a pixel stores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSample {
    pub panel: u32,
    pub uv: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryImage {
    pub side: u32,
    pub geometry: Vec<[f32; 3]>,
    pub valid: Vec<bool>,
    pub norm: Norm,
    /// Which panel point each valid pixel was sampled from (pattern index, cm).
    pub provenance: Vec<Option<PixelSample>>,
}

#[derive(Clone, Copy)]
struct Written {
    value: Vec3,
    uv_px: Vec2,
    dist: f64,
}

fn keep_closer(slot: &mut Option<Written>, w: Written) {
    match slot {
        Some(old) if old.dist <= w.dist => {}
        _ => *slot = Some(w),
    }
}

struct PanelGeometry {
    rect_origin: [u32; 2],
    rect_w: u32,
    pixels: Vec<Option<(Vec3, Vec2)>>,
}

fn render_panel_geometry(
    panel: &Panel,
    fp: &PanelFootprint,
    mesh: &PanelMesh,
    mode: InterpolationMode,
) -> Result<PanelGeometry, RasterError> {
    mesh.check(panel)?;
    let m = &fp.mapping;
    let [ox, oy] = m.placement.origin;
    let [w, h] = m.placement.size;
    let uv_px: Vec<Vec2> = mesh.uv.iter().map(|&p| m.to_px(p)).collect();
    if let Some(i) = uv_px.iter().position(|&u| m.outside_distance(u) > 1e-6) {
        return Err(RasterError::UvOutsidePlacement { panel: panel.id.clone(), vertex: i });
    }
    let n = (w * h) as usize;
    let mut bary: Vec<Option<Written>> = vec![None; n];
    let mut vert: Vec<Option<Written>> = vec![None; n];
    let mut bound: Vec<Option<Written>> = vec![None; n];

    for f in &mesh.faces {
        let [a, b, c] = f.map(|i| uv_px[i as usize]);
        let area = geom::cross2(geom::sub2(b, a), geom::sub2(c, a));
        if area == 0.0 {
            continue;
        }
        let x0 = a[0].min(b[0]).min(c[0]).floor().max(ox as f64) as u32;
        let y0 = a[1].min(b[1]).min(c[1]).floor().max(oy as f64) as u32;
        let x1 = (a[0].max(b[0]).max(c[0]).ceil() as u32).min(ox + w);
        let y1 = (a[1].max(b[1]).max(c[1]).ceil() as u32).min(oy + h);
        let [va, vb, vc] = f.map(|i| mesh.vertices3d[i as usize]);
        for y in y0..y1 {
            for x in x0..x1 {
                let l = fp.local([x, y]);
                if !fp.inside[l] {
                    continue;
                }
                let p = center([x, y]);
                let la = geom::cross2(geom::sub2(b, p), geom::sub2(c, p)) / area;
                let lb = geom::cross2(geom::sub2(c, p), geom::sub2(a, p)) / area;
                let lc = 1.0 - la - lb;
                if la < -1e-9 || lb < -1e-9 || lc < -1e-9 {
                    continue;
                }
                let value = [
                    la * va[0] + lb * vb[0] + lc * vc[0],
                    la * va[1] + lb * vb[1] + lc * vc[1],
                    la * va[2] + lb * vb[2] + lc * vc[2],
                ];
                bary[l] = Some(Written { value, uv_px: p, dist: 0.0 });
            }
        }
    }

    for (i, &u) in uv_px.iter().enumerate() {
        let px = m.pixel_of(u);
        let l = fp.local(px);
        if fp.inside[l] {
            let dist = geom::dist2(u, center(px));
            keep_closer(&mut vert[l], Written { value: mesh.vertices3d[i], uv_px: u, dist });
        }
    }

    if mode == InterpolationMode::Hybrid {
        for (k, line) in fp.edge_lines.iter().enumerate() {
            let chain = &mesh.boundary_edges[k];
            let (pa, pb) = panel.edge_points(k);
            let ab = geom::sub2(pb, pa);
            let len2 = geom::dot2(ab, ab);
            let params: Vec<f64> = chain
                .iter()
                .map(|&i| (geom::dot2(geom::sub2(mesh.uv[i as usize], pa), ab) / len2).clamp(0.0, 1.0))
                .collect();
            let (ua, ub) = (m.to_px(pa), m.to_px(pb));
            for ep in line {
                // Segment of the chain containing the sample parameter.
                let seg = params.partition_point(|&t| t <= ep.t).clamp(1, params.len() - 1) - 1;
                let (t0, t1) = (params[seg], params[seg + 1]);
                let alpha = if t1 > t0 { ((ep.t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
                let value = geom::lerp3(
                    mesh.vertices3d[chain[seg] as usize],
                    mesh.vertices3d[chain[seg + 1] as usize],
                    alpha,
                );
                let u = [ua[0] + (ub[0] - ua[0]) * ep.t, ua[1] + (ub[1] - ua[1]) * ep.t];
                let l = fp.local(ep.pixel);
                keep_closer(&mut bound[l], Written { value, uv_px: u, dist: ep.dist });
            }
        }
    }

    let pixels = (0..n)
        .map(|l| bound[l].or(vert[l]).or(bary[l]).map(|w| (w.value, w.uv_px)))
        .collect();
    Ok(PanelGeometry { rect_origin: [ox, oy], rect_w: w, pixels })
}

/// Geometry raster with per-pixel provenance. Precedence at a pixel:
/// boundary-linear, then vertex, then barycentric.
pub fn render_geometry(
    pattern: &SewingPattern,
    layout: &PackedLayout,
    meshes: &[PanelMesh],
    mode: InterpolationMode,
) -> Result<GeometryImage, RasterError> {
    let fps = footprints(pattern, layout)?;
    let ordered: Vec<&PanelMesh> = pattern
        .panels
        .iter()
        .map(|p| {
            meshes
                .iter()
                .find(|m| m.panel_id == p.id)
                .ok_or_else(|| RasterError::MissingMesh(p.id.clone()))
        })
        .collect::<Result<_, _>>()?;
    for (p, m) in pattern.panels.iter().zip(&ordered) {
        m.check(p)?;
    }
    let norm = Norm::fit(ordered.iter().flat_map(|m| m.vertices3d.iter()));
    let rendered: Vec<PanelGeometry> = pattern
        .panels
        .par_iter()
        .zip(fps.par_iter())
        .zip(ordered.par_iter())
        .map(|((p, fp), m)| render_panel_geometry(p, fp, m, mode))
        .collect::<Result<_, _>>()?;

    let side = layout.side as usize;
    let mut geometry = vec![[0.0f32; 3]; side * side];
    let mut valid = vec![false; side * side];
    let mut provenance = vec![None; side * side];
    for (pi, (pg, fp)) in rendered.iter().zip(&fps).enumerate() {
        for (l, px) in pg.pixels.iter().enumerate() {
            if let Some((value, uv_px)) = px {
                let x = pg.rect_origin[0] + l as u32 % pg.rect_w;
                let y = pg.rect_origin[1] + l as u32 / pg.rect_w;
                let idx = y as usize * side + x as usize;
                geometry[idx] = norm.normalize(*value);
                valid[idx] = true;
                provenance[idx] = Some(PixelSample { panel: pi as u32, uv: fp.mapping.from_px(*uv_px) });
            }
        }
    }
    Ok(GeometryImage { side: layout.side, geometry, valid, norm, provenance })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeOptions {
    pub resolution: u32,
    pub margin: u32,
    pub strict: bool,
    pub mode: InterpolationMode,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self { resolution: 512, margin: 2, strict: false, mode: InterpolationMode::Hybrid }
    }
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub raster: GgiRaster,
    pub provenance: Vec<Option<PixelSample>>,
    /// Covered pixels the meshes left without geometry (cleared to background).
    pub uncovered: usize,
}

/// Pattern plus panel meshes to a full raster triplet at `opts.resolution`.
pub fn encode(pattern: &SewingPattern, meshes: &[PanelMesh], opts: &EncodeOptions) -> Result<Encoded, RasterError> {
    let layout = layout::fit_layout(pattern, opts.resolution, opts.margin)?;
    encode_with_layout(pattern, meshes, &layout, opts)
}

pub fn encode_with_layout(
    pattern: &SewingPattern,
    meshes: &[PanelMesh],
    layout: &PackedLayout,
    opts: &EncodeOptions,
) -> Result<Encoded, RasterError> {
    let mut semantic = render_semantic(layout, pattern, opts.strict)?;
    let mut stitching = render_stitching(layout, pattern)?;
    let geo = render_geometry(pattern, layout, meshes, opts.mode)?;
    let mut uncovered = 0;
    for i in 0..semantic.len() {
        if semantic[i] != BACKGROUND && !geo.valid[i] {
            semantic[i] = BACKGROUND;
            stitching[i] = BACKGROUND;
            uncovered += 1;
        }
    }
    let raster = GgiRaster {
        side: layout.side,
        semantic,
        stitching,
        geometry: geo.geometry,
        valid: geo.valid,
        norm: geo.norm,
        layout: layout.clone(),
        stitch_count: pattern.stitches.len() as u32,
    };
    Ok(Encoded { raster, provenance: geo.provenance, uncovered })
}
