//! Deterministic color tables for the semantic and stitching rasters.
//!
//! Both tables draw colors from a golden-ratio hue walk so that consecutive
//! indices are far apart on the hue circle. Index 0 of neither table is black;
//! black is reserved for background.

use std::collections::HashMap;

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [0, 0, 0];

/// Largest number of distinct colors either table provides.
pub const MAX_COLORS: usize = 255;

/// Panel-type vocabulary with reserved palette slots, in slot order.
pub const PANEL_TYPES: &[&str] = &[
    "torso_front",
    "torso_back",
    "bodice_front",
    "bodice_back",
    "sleeve",
    "sleeve_front",
    "sleeve_back",
    "cuff",
    "collar",
    "hood",
    "skirt",
    "skirt_front",
    "skirt_back",
    "waistband",
    "pant_front",
    "pant_back",
    "yoke",
    "strap",
    "lapel",
    "pocket",
    "belt",
    "godet",
    "peplum",
    "other",
];

fn hsv(h: f64, s: f64, v: f64) -> Rgb {
    let h6 = (h.fract() * 6.0).min(5.999_999);
    let sector = h6.floor() as u32;
    let f = h6 - sector as f64;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    let (r, g, b) = match sector {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    let q8 = |x: f64| (x * 255.0).round() as u8;
    [q8(r), q8(g), q8(b)]
}

const GOLDEN: f64 = 0.618_033_988_749_895;

fn walk_color(i: usize, hue_offset: f64) -> Rgb {
    let h = hue_offset + i as f64 * GOLDEN;
    let s = [0.85, 0.6, 0.95][(i / 7) % 3];
    let v = [0.95, 0.75, 0.55][(i / 21) % 3];
    hsv(h, s, v)
}

/// Color of stitch `id`; `None` past [`MAX_COLORS`].
pub fn stitch_color(id: u32) -> Option<Rgb> {
    ((id as usize) < MAX_COLORS).then(|| walk_color(id as usize, 0.0))
}

/// Semantic color of palette slot `slot`.
pub fn semantic_slot_color(slot: usize) -> Option<Rgb> {
    (slot < MAX_COLORS).then(|| walk_color(slot, 0.33))
}

/// Inverse of [`stitch_color`].
#[derive(Debug, Clone)]
pub struct StitchColorIndex(HashMap<Rgb, u32>);

impl StitchColorIndex {
    pub fn new() -> Self {
        Self((0..MAX_COLORS as u32).map(|i| (stitch_color(i).unwrap(), i)).collect())
    }

    pub fn id_of(&self, c: Rgb) -> Option<u32> {
        self.0.get(&c).copied()
    }
}

impl Default for StitchColorIndex {
    fn default() -> Self {
        Self::new()
    }
}

/// Panel-type palette: the fixed vocabulary followed by any extra types, in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticPalette {
    types: Vec<String>,
}

impl SemanticPalette {
    pub fn standard() -> Self {
        Self { types: PANEL_TYPES.iter().map(|s| s.to_string()).collect() }
    }

    /// Standard palette extended with `extra` types not in the vocabulary.
    pub fn with_extra<'a>(extra: impl IntoIterator<Item = &'a str>) -> Self {
        let mut p = Self::standard();
        let mut add: Vec<&str> = extra.into_iter().filter(|t| !PANEL_TYPES.contains(t)).collect();
        add.sort_unstable();
        add.dedup();
        p.types.extend(add.into_iter().map(String::from));
        p
    }

    pub fn color(&self, panel_type: &str) -> Option<Rgb> {
        self.types.iter().position(|t| t == panel_type).and_then(semantic_slot_color)
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }
}

/// CRC32 over the standard semantic table (names and colors).
pub fn semantic_palette_hash() -> String {
    let mut h = crc32fast::Hasher::new();
    for (i, t) in PANEL_TYPES.iter().enumerate() {
        h.update(t.as_bytes());
        h.update(&semantic_slot_color(i).unwrap());
    }
    for i in PANEL_TYPES.len()..MAX_COLORS {
        h.update(&semantic_slot_color(i).unwrap());
    }
    format!("{:08x}", h.finalize())
}

/// CRC32 over the stitch color table.
pub fn stitch_palette_hash() -> String {
    let mut h = crc32fast::Hasher::new();
    for i in 0..MAX_COLORS as u32 {
        h.update(&stitch_color(i).unwrap());
    }
    format!("{:08x}", h.finalize())
}
