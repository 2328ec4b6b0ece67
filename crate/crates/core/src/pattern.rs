//! Sewing-pattern data model, `ggi-pattern/1` JSON codec and validator.
//!
//! A pattern is a set of panels (closed 2D vertex loops with a rigid 3D
//! placement) plus a global list of stitches, each joining two panel edges.
//! Coordinates are centimeters.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::Deserialize;
use thiserror::Error;

use crate::geom::{self, Vec2, Vec3};

pub const PATTERN_FORMAT: &str = "ggi-pattern/1";

/// Maximum deviation of the rotation quaternion norm from 1 that is still
/// accepted (and renormalized).
pub const QUAT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub id: String,
    pub panel_type: String,
    pub vertices: Vec<Vec2>,
    /// `(start, end)` vertex indices; edge `k` ends where edge `k + 1` starts.
    pub edges: Vec<(usize, usize)>,
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub translation: Vec3,
}

impl Panel {
    /// Vertex positions in loop order (the start point of every edge).
    pub fn loop_points(&self) -> Vec<Vec2> {
        self.edges.iter().map(|&(s, _)| self.vertices[s]).collect()
    }

    /// Start and end point of edge `k`.
    pub fn edge_points(&self, k: usize) -> (Vec2, Vec2) {
        let (s, e) = self.edges[k];
        (self.vertices[s], self.vertices[e])
    }

    /// Axis-aligned bounding box `(min, max)` of the vertex loop.
    pub fn bbox(&self) -> (Vec2, Vec2) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for a in 0..2 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    /// Maps a pattern-space point to 3D through the rigid placement.
    pub fn lift(&self, p: Vec2) -> Vec3 {
        geom::add3(geom::quat_rotate(self.rotation, [p[0], p[1], 0.0]), self.translation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef {
    pub panel: String,
    pub edge: usize,
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.edge{}", self.panel, self.edge)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stitch {
    pub id: u32,
    pub a: EdgeRef,
    pub b: EdgeRef,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SewingPattern {
    pub name: String,
    pub panels: Vec<Panel>,
    pub stitches: Vec<Stitch>,
}

impl SewingPattern {
    pub fn panel(&self, id: &str) -> Option<&Panel> {
        self.panels.iter().find(|p| p.id == id)
    }

    pub fn panel_index(&self, id: &str) -> Option<usize> {
        self.panels.iter().position(|p| p.id == id)
    }

    /// Stitches sorted by id.
    pub fn stitches_by_id(&self) -> Vec<&Stitch> {
        let mut s: Vec<&Stitch> = self.stitches.iter().collect();
        s.sort_by_key(|s| s.id);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationCode {
    TooFewVertices,
    VertexEdgeCountMismatch,
    BrokenLoop,
    NonFiniteValue,
    NonUnitRotation,
    SelfIntersection,
    DuplicatePanelId,
    StitchIdsNotDense,
    DanglingStitchRef,
    SelfStitch,
    DuplicateEdgeUse,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::TooFewVertices => "TooFewVertices",
            ViolationCode::VertexEdgeCountMismatch => "VertexEdgeCountMismatch",
            ViolationCode::BrokenLoop => "BrokenLoop",
            ViolationCode::NonFiniteValue => "NonFiniteValue",
            ViolationCode::NonUnitRotation => "NonUnitRotation",
            ViolationCode::SelfIntersection => "SelfIntersection",
            ViolationCode::DuplicatePanelId => "DuplicatePanelId",
            ViolationCode::StitchIdsNotDense => "StitchIdsNotDense",
            ViolationCode::DanglingStitchRef => "DanglingStitchRef",
            ViolationCode::SelfStitch => "SelfStitch",
            ViolationCode::DuplicateEdgeUse => "DuplicateEdgeUse",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Pattern,
    Panel(String),
    Stitch(u32),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Pattern => f.write_str("pattern"),
            Location::Panel(id) => write!(f, "panel '{id}'"),
            Location::Stitch(id) => write!(f, "stitch {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub location: Location,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.location, self.message)
    }
}

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(Violation),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPattern {
    format: String,
    name: String,
    panels: Vec<RawPanel>,
    stitches: Vec<RawStitch>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPanel {
    id: String,
    #[serde(rename = "type")]
    panel_type: String,
    vertices: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
    rotation: [f64; 4],
    translation: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStitch {
    id: u32,
    a: (String, usize),
    b: (String, usize),
}

/// Decodes a `ggi-pattern/1` document without enforcing invariants.
///
/// Used by validation tooling that wants the full violation list rather than
/// the first failure.
pub fn parse_pattern_unchecked(bytes: &[u8]) -> Result<SewingPattern, PatternError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| PatternError::MalformedJson(e.to_string()))?;
    let raw: RawPattern =
        serde_json::from_value(value).map_err(|e| PatternError::SchemaViolation(e.to_string()))?;
    if raw.format != PATTERN_FORMAT {
        return Err(PatternError::SchemaViolation(format!(
            "unsupported format '{}', expected '{PATTERN_FORMAT}'",
            raw.format
        )));
    }
    Ok(SewingPattern {
        name: raw.name,
        panels: raw
            .panels
            .into_iter()
            .map(|p| Panel {
                id: p.id,
                panel_type: p.panel_type,
                vertices: p.vertices,
                edges: p.edges.into_iter().map(|[s, e]| (s, e)).collect(),
                rotation: p.rotation,
                translation: p.translation,
            })
            .collect(),
        stitches: raw
            .stitches
            .into_iter()
            .map(|s| Stitch {
                id: s.id,
                a: EdgeRef { panel: s.a.0, edge: s.a.1 },
                b: EdgeRef { panel: s.b.0, edge: s.b.1 },
            })
            .collect(),
    })
}

/// Parses and validates a pattern. Rotations within [`QUAT_TOLERANCE`] of unit
/// norm are renormalized.
pub fn parse_pattern(bytes: &[u8]) -> Result<SewingPattern, PatternError> {
    let mut pattern = parse_pattern_unchecked(bytes)?;
    if let Some(v) = validate_pattern(&pattern).into_iter().next() {
        return Err(PatternError::InvariantViolation(v));
    }
    for p in &mut pattern.panels {
        let n = p.rotation.iter().map(|c| c * c).sum::<f64>().sqrt();
        for c in &mut p.rotation {
            *c /= n;
        }
    }
    Ok(pattern)
}

fn fmt_f(out: &mut String, x: f64) {
    let s = format!("{x:.6}");
    // Normalize negative zero so equal values print identically.
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        out.push_str("0.000000");
    } else {
        out.push_str(&s);
    }
}

fn fmt_arr(out: &mut String, xs: &[f64]) {
    out.push('[');
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        fmt_f(out, x);
    }
    out.push(']');
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

/// Canonical `ggi-pattern/1` document: fixed key order, floats with six
/// decimals, two-space indentation, trailing newline.
pub fn serialize_pattern(pattern: &SewingPattern) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"format\": {},", json_str(PATTERN_FORMAT));
    let _ = writeln!(out, "  \"name\": {},", json_str(&pattern.name));
    if pattern.panels.is_empty() {
        out.push_str("  \"panels\": [],\n");
    } else {
        out.push_str("  \"panels\": [\n");
        for (i, p) in pattern.panels.iter().enumerate() {
            out.push_str("    {\n");
            let _ = writeln!(out, "      \"id\": {},", json_str(&p.id));
            let _ = writeln!(out, "      \"type\": {},", json_str(&p.panel_type));
            out.push_str("      \"vertices\": [");
            for (k, v) in p.vertices.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                fmt_arr(&mut out, v);
            }
            out.push_str("],\n");
            out.push_str("      \"edges\": [");
            for (k, (s, e)) in p.edges.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "[{s}, {e}]");
            }
            out.push_str("],\n");
            out.push_str("      \"rotation\": ");
            fmt_arr(&mut out, &p.rotation);
            out.push_str(",\n      \"translation\": ");
            fmt_arr(&mut out, &p.translation);
            out.push_str("\n    }");
            out.push_str(if i + 1 < pattern.panels.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ],\n");
    }
    if pattern.stitches.is_empty() {
        out.push_str("  \"stitches\": []\n");
    } else {
        out.push_str("  \"stitches\": [\n");
        for (i, s) in pattern.stitches.iter().enumerate() {
            let _ = write!(
                out,
                "    {{\"id\": {}, \"a\": [{}, {}], \"b\": [{}, {}]}}",
                s.id,
                json_str(&s.a.panel),
                s.a.edge,
                json_str(&s.b.panel),
                s.b.edge
            );
            out.push_str(if i + 1 < pattern.stitches.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ]\n");
    }
    out.push_str("}\n");
    out
}

fn violation(code: ViolationCode, location: Location, message: impl Into<String>) -> Violation {
    Violation { code, location, message: message.into() }
}

fn loop_is_closed(panel: &Panel) -> Result<(), String> {
    let n = panel.vertices.len();
    let mut seen = vec![false; n];
    for (k, &(s, e)) in panel.edges.iter().enumerate() {
        if s >= n || e >= n {
            return Err(format!("edge {k} references vertex outside 0..{n}"));
        }
        if seen[s] {
            return Err(format!("vertex {s} starts more than one edge"));
        }
        seen[s] = true;
        let next = panel.edges[(k + 1) % panel.edges.len()].0;
        if e != next {
            return Err(format!("edge {k} ends at vertex {e} but edge {} starts at {next}", (k + 1) % panel.edges.len()));
        }
    }
    Ok(())
}

fn find_self_intersection(panel: &Panel) -> Option<String> {
    let pts = panel.loop_points();
    let n = pts.len();
    let seg = |k: usize| (pts[k], pts[(k + 1) % n]);
    for i in 0..n {
        let (a, b) = seg(i);
        if a == b {
            return Some(format!("edge {i} has zero length"));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared endpoint is expected; only a collinear fold-back overlaps.
                let (shared, pa, pb) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let u = geom::sub2(pa, shared);
                let v = geom::sub2(pb, shared);
                if geom::cross2(u, v) == 0.0 && geom::dot2(u, v) > 0.0 {
                    return Some(format!("edges {i} and {j} overlap"));
                }
            } else if geom::segments_intersect(a, b, c, d) {
                return Some(format!("edges {i} and {j} intersect"));
            }
        }
    }
    None
}

/// Lists every invariant violation; empty iff the pattern is valid.
pub fn validate_pattern(pattern: &SewingPattern) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Vec::new();

    let mut ids = BTreeSet::new();
    for p in &pattern.panels {
        if !ids.insert(p.id.as_str()) {
            out.push(violation(DuplicatePanelId, Location::Panel(p.id.clone()), "panel id is not unique"));
        }
    }

    for p in &pattern.panels {
        let loc = || Location::Panel(p.id.clone());
        let finite = p.vertices.iter().flatten().all(|x| x.is_finite())
            && p.rotation.iter().all(|x| x.is_finite())
            && p.translation.iter().all(|x| x.is_finite());
        if !finite {
            out.push(violation(NonFiniteValue, loc(), "non-finite coordinate"));
        } else {
            let qn = p.rotation.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (qn - 1.0).abs() > QUAT_TOLERANCE {
                out.push(violation(NonUnitRotation, loc(), format!("rotation norm {qn} is not 1 within {QUAT_TOLERANCE}")));
            }
        }
        if p.vertices.len() < 3 {
            out.push(violation(TooFewVertices, loc(), format!("{} vertices, need at least 3", p.vertices.len())));
            continue;
        }
        if p.vertices.len() != p.edges.len() {
            out.push(violation(
                VertexEdgeCountMismatch,
                loc(),
                format!("|V|=|E| violated: {} vertices, {} edges", p.vertices.len(), p.edges.len()),
            ));
            continue;
        }
        if let Err(msg) = loop_is_closed(p) {
            out.push(violation(BrokenLoop, loc(), msg));
            continue;
        }
        if finite {
            if let Some(msg) = find_self_intersection(p) {
                out.push(violation(SelfIntersection, loc(), msg));
            }
        }
    }

    let m = pattern.stitches.len();
    let stitch_ids: BTreeSet<u32> = pattern.stitches.iter().map(|s| s.id).collect();
    let dense = stitch_ids.len() == m && stitch_ids.iter().enumerate().all(|(i, &id)| id as usize == i);
    if !dense {
        out.push(violation(StitchIdsNotDense, Location::Pattern, format!("stitch ids must be exactly 0..{m}")));
    }

    let edge_counts: HashMap<&str, usize> =
        pattern.panels.iter().map(|p| (p.id.as_str(), p.edges.len())).collect();
    let mut uses: BTreeMap<EdgeRef, u32> = BTreeMap::new();
    for s in &pattern.stitches {
        let loc = || Location::Stitch(s.id);
        let mut dangling = false;
        for r in [&s.a, &s.b] {
            match edge_counts.get(r.panel.as_str()) {
                Some(&n) if r.edge < n => {}
                Some(&n) => {
                    dangling = true;
                    out.push(violation(DanglingStitchRef, loc(), format!("{r} out of range for {n}-edge panel")));
                }
                None => {
                    dangling = true;
                    out.push(violation(DanglingStitchRef, loc(), format!("{r} names an unknown panel")));
                }
            }
        }
        if s.a == s.b {
            out.push(violation(SelfStitch, loc(), format!("{} is stitched to itself", s.a)));
            continue;
        }
        if dangling {
            continue;
        }
        for r in [&s.a, &s.b] {
            if let Some(prev) = uses.insert(r.clone(), s.id) {
                out.push(violation(DuplicateEdgeUse, loc(), format!("{r} already used by stitch {prev}")));
            }
        }
    }
    out
}
