//! Analytic test garments: a pattern, dense panel meshes, and the exact
//! surface every mesh was sampled from.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Vec2, Vec3};
use crate::pattern::{EdgeRef, Panel, SewingPattern, Stitch};
use crate::raster::{PanelMesh, RasterError};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("bad fixture parameters: {0}")]
    BadParams(String),
    #[error("unknown fixture '{0}'")]
    UnknownKind(String),
    #[error(transparent)]
    Mesh(#[from] RasterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    FlatGrid,
    CylinderPanel,
    TwoSquareStitched,
    DartSquare,
    MultiPanelSkirt,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 5] = [
        FixtureKind::FlatGrid,
        FixtureKind::CylinderPanel,
        FixtureKind::TwoSquareStitched,
        FixtureKind::DartSquare,
        FixtureKind::MultiPanelSkirt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureKind::FlatGrid => "flat_grid",
            FixtureKind::CylinderPanel => "cylinder_panel",
            FixtureKind::TwoSquareStitched => "two_square_stitched",
            FixtureKind::DartSquare => "dart_square",
            FixtureKind::MultiPanelSkirt => "multi_panel_skirt",
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixtureKind {
    type Err = FixtureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| FixtureError::UnknownKind(s.into()))
    }
}

/// Shape parameters; lengths in centimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureParams {
    /// Mesh cells per panel side.
    pub n: usize,
    /// Mesh columns around a cylinder.
    pub segments: usize,
    pub size: f64,
    pub radius: f64,
    pub height: f64,
    /// Dart notch depth.
    pub depth: f64,
    /// Skirt panel count.
    pub panels: usize,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self { n: 16, segments: 64, size: 10.0, radius: 10.0, height: 20.0, depth: 2.5, panels: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub params: FixtureParams,
    pub pattern: SewingPattern,
    pub meshes: Vec<PanelMesh>,
}

const IDENTITY: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

fn polygon_panel(id: &str, panel_type: &str, vertices: Vec<Vec2>, rotation: [f64; 4], translation: Vec3) -> Panel {
    let n = vertices.len();
    Panel {
        id: id.into(),
        panel_type: panel_type.into(),
        vertices,
        edges: (0..n).map(|k| (k, (k + 1) % n)).collect(),
        rotation,
        translation,
    }
}

fn stitch(id: u32, pa: &str, ea: usize, pb: &str, eb: usize) -> Stitch {
    Stitch { id, a: EdgeRef { panel: pa.into(), edge: ea }, b: EdgeRef { panel: pb.into(), edge: eb } }
}

/// `nx` by `ny` vertex grid through `at(s, t)` with `s, t` in `[0, 1]`;
/// faces wind counter-clockwise in `(s, t)`.
fn grid_mesh(nx: usize, ny: usize, at: impl Fn(f64, f64) -> Vec2) -> (Vec<Vec2>, Vec<[u32; 3]>) {
    let mut uv = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            uv.push(at(i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64));
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v00 = (j * nx + i) as u32;
            let (v10, v01, v11) = (v00 + 1, v00 + nx as u32, v00 + nx as u32 + 1);
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    (uv, faces)
}

/// Concentric-ring mesh of a polygon that is star-shaped about `center`;
/// each edge is split into segments of length at most `step`.
fn ring_mesh(polygon: &[Vec2], center: Vec2, step: f64, rings: usize) -> (Vec<Vec2>, Vec<[u32; 3]>) {
    let mut boundary = Vec::new();
    for k in 0..polygon.len() {
        let (a, b) = (polygon[k], polygon[(k + 1) % polygon.len()]);
        let m = (geom::dist2(a, b) / step).ceil().max(1.0) as usize;
        for s in 0..m {
            let t = s as f64 / m as f64;
            boundary.push([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
        }
    }
    let m = boundary.len() as u32;
    let mut uv = vec![center];
    for r in 1..=rings {
        let f = r as f64 / rings as f64;
        if r == rings {
            uv.extend_from_slice(&boundary);
        } else {
            uv.extend(boundary.iter().map(|b| [center[0] + (b[0] - center[0]) * f, center[1] + (b[1] - center[1]) * f]));
        }
    }
    let ring = |r: usize, j: u32| 1 + (r as u32 - 1) * m + j % m;
    let mut faces = Vec::new();
    for j in 0..m {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for r in 1..rings {
        for j in 0..m {
            faces.push([ring(r, j), ring(r + 1, j), ring(r + 1, j + 1)]);
            faces.push([ring(r, j), ring(r + 1, j + 1), ring(r, j + 1)]);
        }
    }
    (uv, faces)
}

impl Fixture {
    /// Exact surface point of panel `panel` (pattern index) at pattern
    /// coordinate `uv`.
    pub fn surface(&self, panel: usize, uv: Vec2) -> Vec3 {
        let p = &self.params;
        let [x, y] = uv;
        match self.kind {
            FixtureKind::FlatGrid | FixtureKind::TwoSquareStitched => self.pattern.panels[panel].lift(uv),
            FixtureKind::CylinderPanel => {
                let a = x / p.radius;
                [p.radius * a.sin(), y, p.radius * a.cos()]
            }
            FixtureKind::DartSquare => {
                let tip = [0.5 * p.size, p.size - p.depth];
                let q = geom::sub2(uv, tip);
                let rho = geom::dot2(q, q).sqrt();
                // Material spans 270 degrees starting at the left notch edge.
                let mut phi = (q[1].atan2(q[0]).to_degrees() - 135.0).rem_euclid(360.0);
                if phi > 315.0 {
                    phi = 0.0;
                } else if phi > 270.0 {
                    phi = 270.0;
                }
                let psi = (phi * 4.0 / 3.0).to_radians();
                let (sa, ca) = (0.75f64, (1.0f64 - 0.5625).sqrt());
                [tip[0] + rho * sa * psi.cos(), tip[1] + rho * sa * psi.sin(), -rho * ca]
            }
            FixtureKind::MultiPanelSkirt => {
                let k = p.panels as f64;
                let (wb, wt) = (p.size, 0.5 * p.size);
                let w = wb + (wt - wb) * y / p.height;
                let f = x / w + 0.5;
                let theta = 2.0 * PI * (panel as f64 + f) / k;
                let r = k * w / (2.0 * PI);
                [r * theta.sin(), y, r * theta.cos()]
            }
        }
    }

    /// Surface points of both sides of stitch `id` at edge parameter `t` of
    /// side A. Side B runs opposite, so it is sampled at `1 - t`.
    pub fn seam_points(&self, id: u32, t: f64) -> (Vec3, Vec3) {
        let s = self.pattern.stitches.iter().find(|s| s.id == id).expect("stitch id exists");
        let at = |r: &EdgeRef, t: f64| {
            let pi = self.pattern.panel_index(&r.panel).unwrap();
            let (a, b) = self.pattern.panels[pi].edge_points(r.edge);
            self.surface(pi, [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t])
        };
        (at(&s.a, t), at(&s.b, 1.0 - t))
    }

    /// Largest pre-stitching gap between exact seam partners over `samples`
    /// evenly spaced parameters.
    pub fn max_seam_gap(&self, samples: usize) -> f64 {
        let mut gap: f64 = 0.0;
        for s in &self.pattern.stitches {
            for i in 0..=samples {
                let (a, b) = self.seam_points(s.id, i as f64 / samples as f64);
                gap = gap.max(geom::dist3(a, b));
            }
        }
        gap
    }

    fn mesh_from_uv(&self, panel: usize, uv: Vec<Vec2>, faces: Vec<[u32; 3]>) -> Result<PanelMesh, FixtureError> {
        let v3 = uv.iter().map(|&q| self.surface(panel, q)).collect();
        Ok(PanelMesh::from_uv_mesh(&self.pattern.panels[panel], v3, uv, faces)?)
    }
}

pub fn make_fixture(kind: FixtureKind, params: &FixtureParams) -> Result<Fixture, FixtureError> {
    let p = *params;
    let bad = |m: &str| Err(FixtureError::BadParams(m.into()));
    if p.n < 1 {
        return bad("n must be at least 1");
    }
    for (name, v) in [("size", p.size), ("radius", p.radius), ("height", p.height)] {
        if !(v.is_finite() && v > 0.0) {
            return bad(&format!("{name} must be positive"));
        }
    }
    let mut fx = Fixture { kind, params: p, pattern: SewingPattern { name: kind.as_str().into(), ..Default::default() }, meshes: vec![] };
    let s = p.size;
    let square = vec![[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]];
    match kind {
        FixtureKind::FlatGrid => {
            fx.pattern.panels.push(polygon_panel("grid", "torso_front", square, IDENTITY, [0.0; 3]));
            let (uv, faces) = grid_mesh(p.n + 1, p.n + 1, |a, b| [a * s, b * s]);
            fx.meshes.push(fx.mesh_from_uv(0, uv, faces)?);
        }
        FixtureKind::CylinderPanel => {
            if p.segments < 3 {
                return bad("segments must be at least 3");
            }
            let w = 2.0 * PI * p.radius;
            let rect = vec![[0.0, 0.0], [w, 0.0], [w, p.height], [0.0, p.height]];
            fx.pattern.panels.push(polygon_panel("tube", "sleeve", rect, IDENTITY, [0.0; 3]));
            fx.pattern.stitches.push(stitch(0, "tube", 3, "tube", 1));
            let (uv, faces) = grid_mesh(p.segments + 1, p.n + 1, |a, b| [a * w, b * p.height]);
            fx.meshes.push(fx.mesh_from_uv(0, uv, faces)?);
        }
        FixtureKind::TwoSquareStitched => {
            fx.pattern.panels.push(polygon_panel("left", "torso_front", square.clone(), IDENTITY, [0.0; 3]));
            fx.pattern.panels.push(polygon_panel("right", "torso_back", square, IDENTITY, [s, 0.0, 0.0]));
            fx.pattern.stitches.push(stitch(0, "left", 1, "right", 3));
            for i in 0..2 {
                let (uv, faces) = grid_mesh(p.n + 1, p.n + 1, |a, b| [a * s, b * s]);
                let m = fx.mesh_from_uv(i, uv, faces)?;
                fx.meshes.push(m);
            }
        }
        FixtureKind::DartSquare => {
            let d = p.depth;
            if !(d > 0.0 && d < 0.5 * s) {
                return bad("depth must lie in (0, size/2)");
            }
            let poly = vec![
                [0.0, 0.0],
                [s, 0.0],
                [s, s],
                [0.5 * s + d, s],
                [0.5 * s, s - d],
                [0.5 * s - d, s],
                [0.0, s],
            ];
            fx.pattern.panels.push(polygon_panel("front", "bodice_front", poly.clone(), IDENTITY, [0.0; 3]));
            fx.pattern.stitches.push(stitch(0, "front", 3, "front", 4));
            let (uv, faces) = ring_mesh(&poly, [0.5 * s, 0.25 * s], s / p.n as f64, p.n);
            fx.meshes.push(fx.mesh_from_uv(0, uv, faces)?);
        }
        FixtureKind::MultiPanelSkirt => {
            let k = p.panels;
            if k < 3 {
                return bad("a skirt needs at least 3 panels");
            }
            let (wb, wt, h) = (s, 0.5 * s, p.height);
            for i in 0..k {
                let c = 2.0 * PI * (i as f64 + 0.5) / k as f64;
                let rot = [(0.5 * c).cos(), 0.0, (0.5 * c).sin(), 0.0];
                let rmid = k as f64 * 0.5 * (wb + wt) / (2.0 * PI);
                let ty = if c.cos() >= 0.0 { "skirt_front" } else { "skirt_back" };
                let poly = vec![[-0.5 * wb, 0.0], [0.5 * wb, 0.0], [0.5 * wt, h], [-0.5 * wt, h]];
                let id = format!("skirt{i}");
                fx.pattern.panels.push(polygon_panel(&id, ty, poly, rot, [rmid * c.sin(), 0.0, rmid * c.cos()]));
                let next = format!("skirt{}", (i + 1) % k);
                fx.pattern.stitches.push(stitch(i as u32, &id, 1, &next, 3));
            }
            for i in 0..k {
                let (uv, faces) = grid_mesh(p.n + 1, p.n + 1, |a, b| {
                    let y = b * h;
                    let w = wb + (wt - wb) * b;
                    [(a - 0.5) * w, y]
                });
                let m = fx.mesh_from_uv(i, uv, faces)?;
                fx.meshes.push(m);
            }
        }
    }
    Ok(fx)
}
