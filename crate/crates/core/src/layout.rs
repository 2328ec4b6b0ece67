//! Square UV layout packing with per-panel orientation correction.
//!
//! Panel bounding boxes (scaled to pixels and inflated by a margin) are packed
//! with a row-wise shelf heuristic. Because shelf feasibility is monotone in
//! the square side, a binary search finds the smallest side the heuristic
//! accepts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Vec2, Vec3};
use crate::pattern::{Panel, SewingPattern};

pub const LAYOUT_NORMAL: Vec3 = [0.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub origin: [u32; 2],
    pub size: [u32; 2],
    pub flipped: bool,
}

impl Placement {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.origin[0]
            && y >= self.origin[1]
            && x < self.origin[0] + self.size[0]
            && y < self.origin[1] + self.size[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedLayout {
    pub side: u32,
    pub resolution_scale: f64,
    pub layout_normal: Vec3,
    pub placements: BTreeMap<String, Placement>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("pattern has no panels")]
    EmptyPattern,
    #[error("panel '{0}' has a zero-area bounding box after scaling")]
    DegeneratePanel(String),
    #[error("panel '{0}' has a degenerate normal")]
    ZeroNormal(String),
    #[error("layout has no placement for panel '{0}'")]
    MissingPlacement(String),
    #[error("invalid layout parameter: {0}")]
    BadParameter(String),
    #[error("panels cannot be packed into a {0}px square")]
    ResolutionTooSmall(u32),
}

/// Pixel extent of a panel bounding box at `scale` pixels per cm.
pub fn panel_pixel_size(panel: &Panel, scale: f64) -> [u32; 2] {
    let (lo, hi) = panel.bbox();
    // Absorb floating noise so a 10cm panel at 1px/cm stays 10px wide.
    let px = |extent: f64| (extent * scale - 1e-9).ceil().max(0.0) as u32;
    [px(hi[0] - lo[0]), px(hi[1] - lo[1])]
}

/// Places `rects` (already sorted) left-to-right in shelves from the bottom
/// up. Returns lower-left corners, or `None` if the square is too small.
pub fn shelf_pack(rects: &[[u32; 2]], side: u32) -> Option<Vec<[u32; 2]>> {
    let (mut x, mut y, mut shelf_h) = (0u64, 0u64, 0u64);
    let side = side as u64;
    let mut out = Vec::with_capacity(rects.len());
    for &[w, h] in rects {
        let (w, h) = (w as u64, h as u64);
        if w > side || h > side {
            return None;
        }
        if x + w > side {
            y += shelf_h;
            x = 0;
            shelf_h = 0;
        }
        if y + h > side {
            return None;
        }
        out.push([x as u32, y as u32]);
        x += w;
        shelf_h = shelf_h.max(h);
    }
    Some(out)
}

/// Packs all panels into the smallest square the shelf heuristic accepts.
/// Every placement is `flipped = false`; see [`correct_orientation`].
pub fn pack_layout(pattern: &SewingPattern, resolution_scale: f64, margin: u32) -> Result<PackedLayout, LayoutError> {
    if pattern.panels.is_empty() {
        return Err(LayoutError::EmptyPattern);
    }
    if !(resolution_scale > 0.0 && resolution_scale.is_finite()) {
        return Err(LayoutError::BadParameter(format!("resolution_scale {resolution_scale}")));
    }
    let mut items: Vec<(&str, [u32; 2])> = Vec::with_capacity(pattern.panels.len());
    for p in &pattern.panels {
        let [w, h] = panel_pixel_size(p, resolution_scale);
        if w == 0 || h == 0 {
            return Err(LayoutError::DegeneratePanel(p.id.clone()));
        }
        items.push((&p.id, [w + 2 * margin, h + 2 * margin]));
    }
    // Decreasing height, then decreasing width, then id.
    items.sort_by(|a, b| b.1[1].cmp(&a.1[1]).then(b.1[0].cmp(&a.1[0])).then(a.0.cmp(b.0)));
    let rects: Vec<[u32; 2]> = items.iter().map(|i| i.1).collect();

    let max_dim = rects.iter().map(|r| r[0].max(r[1])).max().unwrap_or(0);
    let mut lo = max_dim;
    let mut hi = rects.iter().map(|r| r[1]).sum::<u32>().max(max_dim);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if shelf_pack(&rects, mid).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let corners = shelf_pack(&rects, lo).expect("upper bound is always feasible");
    let placements = items
        .iter()
        .zip(corners)
        .map(|((id, [w, h]), [x, y])| {
            (
                id.to_string(),
                Placement {
                    origin: [x + margin, y + margin],
                    size: [w - 2 * margin, h - 2 * margin],
                    flipped: false,
                },
            )
        })
        .collect();
    Ok(PackedLayout { side: lo, resolution_scale, layout_normal: LAYOUT_NORMAL, placements })
}

/// Outward normal of a panel: the rigid rotation applied to the loop's
/// winding normal (+Z for counter-clockwise loops).
pub fn panel_normal(panel: &Panel) -> Result<Vec3, LayoutError> {
    let area2 = geom::signed_area2(&panel.loop_points());
    if area2.abs() < 1e-12 || !area2.is_finite() {
        return Err(LayoutError::ZeroNormal(panel.id.clone()));
    }
    Ok(geom::quat_rotate(panel.rotation, [0.0, 0.0, area2.signum()]))
}

/// Sets each placement's `flipped` bit so the panel's outward normal, as seen
/// through its UV winding, agrees with the layout normal.
pub fn correct_orientation(pattern: &SewingPattern, layout: &PackedLayout) -> Result<PackedLayout, LayoutError> {
    let mut out = layout.clone();
    for p in &pattern.panels {
        let placement = out
            .placements
            .get_mut(&p.id)
            .ok_or_else(|| LayoutError::MissingPlacement(p.id.clone()))?;
        let n = panel_normal(p)?;
        placement.flipped = geom::dot3(n, layout.layout_normal) < 0.0;
    }
    Ok(out)
}

/// Picks the largest pixels-per-cm scale whose packing fits in `resolution`,
/// corrects orientation and pads the square to exactly `resolution`.
pub fn fit_layout(pattern: &SewingPattern, resolution: u32, margin: u32) -> Result<PackedLayout, LayoutError> {
    if pattern.panels.is_empty() {
        return Err(LayoutError::EmptyPattern);
    }
    let max_extent = pattern
        .panels
        .iter()
        .map(|p| {
            let (lo, hi) = p.bbox();
            (hi[0] - lo[0]).max(hi[1] - lo[1])
        })
        .fold(0.0, f64::max);
    if !(max_extent > 0.0) {
        return Err(LayoutError::DegeneratePanel(pattern.panels[0].id.clone()));
    }
    let fits = |s: f64| match pack_layout(pattern, s, margin) {
        Ok(l) => Ok(l.side <= resolution),
        Err(LayoutError::DegeneratePanel(_)) => Ok(false),
        Err(e) => Err(e),
    };
    let mut lo = 1e-6;
    if !fits(lo)? {
        return Err(LayoutError::ResolutionTooSmall(resolution));
    }
    let mut hi = resolution as f64 / max_extent + 1.0;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut layout = correct_orientation(pattern, &pack_layout(pattern, lo, margin)?)?;
    layout.side = resolution;
    Ok(layout)
}

/// Affine map from a panel's pattern space (cm) into continuous pixel
/// coordinates of its placement. Pixel `(x, y)` covers `[x, x+1) x [y, y+1)`.
#[derive(Debug, Clone, Copy)]
pub struct PanelMapping {
    pub placement: Placement,
    pub scale: f64,
    min: Vec2,
    max: Vec2,
}

impl PanelMapping {
    pub fn new(panel: &Panel, layout: &PackedLayout) -> Result<Self, LayoutError> {
        let placement = *layout
            .placements
            .get(&panel.id)
            .ok_or_else(|| LayoutError::MissingPlacement(panel.id.clone()))?;
        let (min, max) = panel.bbox();
        Ok(Self { placement, scale: layout.resolution_scale, min, max })
    }

    pub fn to_px(&self, p: Vec2) -> Vec2 {
        let local_x = if self.placement.flipped { self.max[0] - p[0] } else { p[0] - self.min[0] };
        [
            self.placement.origin[0] as f64 + local_x * self.scale,
            self.placement.origin[1] as f64 + (p[1] - self.min[1]) * self.scale,
        ]
    }

    pub fn from_px(&self, u: Vec2) -> Vec2 {
        let lx = (u[0] - self.placement.origin[0] as f64) / self.scale;
        let ly = (u[1] - self.placement.origin[1] as f64) / self.scale;
        let x = if self.placement.flipped { self.max[0] - lx } else { self.min[0] + lx };
        [x, self.min[1] + ly]
    }

    /// Pixel containing `u`, clamped into the placement rectangle so points on
    /// the far boundary belong to the last row/column.
    pub fn pixel_of(&self, u: Vec2) -> [u32; 2] {
        let o = self.placement.origin;
        let s = self.placement.size;
        let clamp = |v: f64, lo: u32, n: u32| {
            let f = v.floor();
            if f <= lo as f64 {
                lo
            } else {
                (f as u32).min(lo + n - 1)
            }
        };
        [clamp(u[0], o[0], s[0]), clamp(u[1], o[1], s[1])]
    }

    /// Distance (in pixels) by which `u` lies outside the placement rectangle.
    pub fn outside_distance(&self, u: Vec2) -> f64 {
        let o = self.placement.origin;
        let s = self.placement.size;
        let dx = (o[0] as f64 - u[0]).max(u[0] - (o[0] + s[0]) as f64).max(0.0);
        let dy = (o[1] as f64 - u[1]).max(u[1] - (o[1] + s[1]) as f64).max(0.0);
        dx.max(dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::Panel;

    fn rect(id: &str, w: f64, h: f64) -> Panel {
        Panel {
            id: id.into(),
            panel_type: "torso_front".into(),
            vertices: vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]],
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: [0.0; 3],
        }
    }

    fn pattern(panels: Vec<Panel>) -> SewingPattern {
        SewingPattern { name: "t".into(), panels, stitches: vec![] }
    }

    #[test]
    fn single_panel_lower_bound() {
        let l = pack_layout(&pattern(vec![rect("a", 10.0, 10.0)]), 1.0, 1).unwrap();
        assert_eq!(l.side, 12);
        assert_eq!(l.placements["a"].origin, [1, 1]);
        assert_eq!(l.placements["a"].size, [10, 10]);
    }

    #[test]
    fn three_squares_match_linear_scan() {
        let p = pattern(vec![rect("a", 4.0, 4.0), rect("b", 3.0, 3.0), rect("c", 2.0, 2.0)]);
        let l = pack_layout(&p, 1.0, 0).unwrap();
        // Linear scan over candidate sides with the same sorted rectangles.
        let rects = [[4, 4], [3, 3], [2, 2]];
        let oracle = (4..=9).find(|&s| shelf_pack(&rects, s).is_some()).unwrap();
        assert_eq!(l.side, oracle);
        assert_eq!(l.side, 7);
    }

    #[test]
    fn empty_and_degenerate_inputs() {
        assert_eq!(pack_layout(&pattern(vec![]), 1.0, 1), Err(LayoutError::EmptyPattern));
        let flat = rect("flat", 5.0, 0.0);
        assert_eq!(
            pack_layout(&pattern(vec![flat]), 1.0, 1),
            Err(LayoutError::DegeneratePanel("flat".into()))
        );
    }

    #[test]
    fn ties_break_by_width_then_id() {
        let p = pattern(vec![rect("b", 3.0, 5.0), rect("a", 3.0, 5.0), rect("c", 4.0, 5.0)]);
        let l = pack_layout(&p, 1.0, 0).unwrap();
        let mut order: Vec<_> = l.placements.iter().map(|(id, pl)| (pl.origin[1], pl.origin[0], id.clone())).collect();
        order.sort();
        let ids: Vec<_> = order.into_iter().map(|o| o.2).collect();
        assert_eq!(ids[0], "c");
    }

    #[test]
    fn back_panel_is_flipped() {
        let front = rect("front", 4.0, 4.0);
        let mut back = rect("back", 4.0, 4.0);
        back.rotation = [0.0, 0.0, 1.0, 0.0]; // half turn about +Y
        let p = pattern(vec![front, back]);
        let l = correct_orientation(&p, &pack_layout(&p, 1.0, 1).unwrap()).unwrap();
        assert!(!l.placements["front"].flipped);
        assert!(l.placements["back"].flipped);
    }

    #[test]
    fn mirrored_sleeves_flip_exactly_one() {
        let left = Panel {
            id: "sleeve_l".into(),
            panel_type: "sleeve".into(),
            vertices: vec![[0.0, 0.0], [6.0, 0.0], [5.0, 8.0], [1.0, 7.0]],
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: [0.0; 3],
        };
        let mut right = left.clone();
        right.id = "sleeve_r".into();
        for v in &mut right.vertices {
            v[0] = -v[0];
        }
        let p = pattern(vec![left.clone(), right.clone()]);
        let l = correct_orientation(&p, &pack_layout(&p, 1.0, 1).unwrap()).unwrap();
        // Signed-area oracle: the mirrored loop winds the other way.
        let sl = geom::signed_area2(&left.loop_points()).signum();
        let sr = geom::signed_area2(&right.loop_points()).signum();
        assert_eq!(sl, -sr);
        assert_eq!(l.placements["sleeve_l"].flipped, sl < 0.0);
        assert_eq!(l.placements["sleeve_r"].flipped, sr < 0.0);
        assert!(l.placements["sleeve_l"].flipped ^ l.placements["sleeve_r"].flipped);
    }

    #[test]
    fn zero_area_loop_has_no_normal() {
        let mut p = rect("line", 4.0, 4.0);
        p.vertices = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        assert!(matches!(panel_normal(&p), Err(LayoutError::ZeroNormal(_))));
    }

    #[test]
    fn fit_layout_pads_to_resolution() {
        let p = pattern(vec![rect("a", 10.0, 20.0), rect("b", 7.0, 7.0)]);
        let l = fit_layout(&p, 128, 2).unwrap();
        assert_eq!(l.side, 128);
        let packed = pack_layout(&p, l.resolution_scale, 2).unwrap();
        assert!(packed.side <= 128);
        assert!(packed.side > 120, "scale should use most of the square, got {}", packed.side);
    }

    #[test]
    fn mapping_round_trips_and_clamps() {
        let mut p = rect("a", 10.0, 10.0);
        p.vertices.iter_mut().for_each(|v| v[0] += 3.0);
        let pat = pattern(vec![p.clone()]);
        let mut l = pack_layout(&pat, 1.0, 1).unwrap();
        l.placements.get_mut("a").unwrap().flipped = true;
        let m = PanelMapping::new(&p, &l).unwrap();
        let u = m.to_px([3.0, 0.0]);
        assert_eq!(u, [11.0, 1.0]);
        assert_eq!(m.pixel_of(u), [10, 1]);
        let back = m.from_px(m.to_px([7.5, 2.25]));
        assert!((back[0] - 7.5).abs() < 1e-12 && (back[1] - 2.25).abs() < 1e-12);
    }
}
