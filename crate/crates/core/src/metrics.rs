//! Offline evaluation metrics: edge-aware L1 over geometry rasters, seam
//! Chamfer over stitched boundaries, and point-set Chamfer distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{self, Vec3};
use crate::raster::{GgiRaster, Norm};
use crate::remesh::IndexedMesh;
use crate::stitcher::{self, StitchError};

pub const ALPHA: f64 = 100.0;
pub const BAND_WIDTH: u32 = 10;
pub const LAMBDA_REG: f64 = 1.0;
pub const LAMBDA_STITCH: f64 = 1000.0;
pub const LAMBDA_NORM: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("raster shapes differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("rasters use different normalizations")]
    NormMismatch,
    #[error("point set is empty")]
    EmptySet,
    #[error("mesh has no non-degenerate face")]
    EmptyMesh,
    #[error(transparent)]
    Stitch(#[from] StitchError),
}

/// Borrowed geometry raster.
#[derive(Debug, Clone, Copy)]
pub struct GeometryView<'a> {
    pub side: u32,
    pub geometry: &'a [[f32; 3]],
    pub valid: &'a [bool],
    pub norm: Norm,
}

impl<'a> From<&'a GgiRaster> for GeometryView<'a> {
    fn from(r: &'a GgiRaster) -> Self {
        Self { side: r.side, geometry: &r.geometry, valid: &r.valid, norm: r.norm }
    }
}

/// Valid pixels with a 4-neighbor that is invalid or outside the raster.
pub fn boundary_mask(side: u32, valid: &[bool]) -> Vec<bool> {
    let s = side as i64;
    let ok = |x: i64, y: i64| x >= 0 && y >= 0 && x < s && y < s && valid[(y * s + x) as usize];
    (0..s * s)
        .map(|i| {
            let (x, y) = (i % s, i / s);
            valid[i as usize] && !(ok(x - 1, y) && ok(x + 1, y) && ok(x, y - 1) && ok(x, y + 1))
        })
        .collect()
}

/// Valid pixels within Chebyshev distance `w` of a boundary pixel.
pub fn edge_band(side: u32, valid: &[bool], w: u32) -> Vec<bool> {
    let s = side as usize;
    let w = w as usize;
    let boundary = boundary_mask(side, valid);
    let dilate_rows = |m: &[bool]| -> Vec<bool> {
        let mut out = vec![false; s * s];
        for y in 0..s {
            // Distance to the most recent set pixel on the left and right.
            let mut last: Option<usize> = None;
            for x in 0..s {
                if m[y * s + x] {
                    last = Some(x);
                }
                out[y * s + x] |= last.is_some_and(|l| x - l <= w);
            }
            last = None;
            for x in (0..s).rev() {
                if m[y * s + x] {
                    last = Some(x);
                }
                out[y * s + x] |= last.is_some_and(|l| l - x <= w);
            }
        }
        out
    };
    let transpose = |m: &[bool]| -> Vec<bool> { (0..s * s).map(|i| m[(i % s) * s + i / s]).collect() };
    let rows = dilate_rows(&boundary);
    let both = transpose(&dilate_rows(&transpose(&rows)));
    both.iter().zip(valid).map(|(&b, &v)| b && v).collect()
}

fn check_pair(gt: &GeometryView, pred: &GeometryView) -> Result<(), MetricsError> {
    let (n, m) = (gt.geometry.len(), pred.geometry.len());
    if gt.side != pred.side || n != m || gt.valid.len() != n || pred.valid.len() != m {
        return Err(MetricsError::ShapeMismatch(n, m));
    }
    if gt.norm != pred.norm {
        return Err(MetricsError::NormMismatch);
    }
    Ok(())
}

/// Mean absolute difference over ground-truth valid pixels outside the edge
/// band, plus `alpha` times the mean over band pixels. Means run over
/// pixels and channels in normalized units; an empty set contributes 0.
pub fn edge_aware_l1(gt: GeometryView, pred: GeometryView, alpha: f64, w: u32) -> Result<f64, MetricsError> {
    check_pair(&gt, &pred)?;
    let band = edge_band(gt.side, gt.valid, w);
    let (mut interior, mut ni, mut edge, mut nb) = (0.0f64, 0usize, 0.0f64, 0usize);
    for i in 0..gt.geometry.len() {
        if !gt.valid[i] {
            continue;
        }
        let d: f64 = (0..3).map(|c| (gt.geometry[i][c] as f64 - pred.geometry[i][c] as f64).abs()).sum();
        if band[i] {
            edge += d;
            nb += 3;
        } else {
            interior += d;
            ni += 3;
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    Ok(mean(interior, ni) + alpha * mean(edge, nb))
}

/// Mean over stitches of the two-sided average nearest-neighbor distance
/// between the predicted boundary points of both sides, in normalized units.
/// Chains come from `stitching`; pixels invalid in `pred` are skipped.
pub fn stitch_chamfer(pred: GeometryView, stitching: &GgiRaster) -> Result<f64, MetricsError> {
    if stitching.side != pred.side {
        return Err(MetricsError::ShapeMismatch(stitching.geometry.len(), pred.geometry.len()));
    }
    let chains = stitcher::extract_pixel_chains(stitching)?;
    if chains.is_empty() {
        return Ok(0.0);
    }
    let side = pred.side;
    let points = |px: &[[u32; 2]]| -> Vec<Vec3> {
        px.iter()
            .map(|p| (p[1] * side + p[0]) as usize)
            .filter(|&i| pred.valid[i])
            .map(|i| pred.geometry[i].map(f64::from))
            .collect()
    };
    let per: Vec<f64> = chains
        .par_iter()
        .map(|c| {
            let (a, b) = (points(&c.sides[0].1), points(&c.sides[1].1));
            if a.is_empty() || b.is_empty() {
                return Err(MetricsError::Stitch(StitchError::EmptyChain { id: c.stitch_id }));
            }
            Ok(0.5 * (mean_nn(&a, &b) + mean_nn(&b, &a)))
        })
        .collect::<Result<_, _>>()?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Static 3D kd-tree for nearest-neighbor queries.
pub struct KdTree {
    points: Vec<Vec3>,
    // Implicit balanced tree over `points`: node = median of its range.
    axis: Vec<u8>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut pts = points.to_vec();
        let mut axis = vec![0u8; pts.len()];
        Self::build(&mut pts, &mut axis);
        Self { points: pts, axis }
    }

    fn build(pts: &mut [Vec3], axis: &mut [u8]) {
        if pts.len() <= 1 {
            return;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in pts.iter() {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let ax = (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
        let mid = pts.len() / 2;
        pts.select_nth_unstable_by(mid, |p, q| p[ax].total_cmp(&q[ax]));
        axis[mid] = ax as u8;
        let (l, r) = pts.split_at_mut(mid);
        let (al, ar) = axis.split_at_mut(mid);
        Self::build(l, al);
        Self::build(&mut r[1..], &mut ar[1..]);
    }

    /// Distance from `q` to its nearest point; infinite for an empty tree.
    pub fn nearest_distance(&self, q: Vec3) -> f64 {
        let mut best = f64::INFINITY;
        self.search(0, self.points.len(), q, &mut best);
        best.sqrt()
    }

    fn search(&self, lo: usize, hi: usize, q: Vec3, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = self.points[mid];
        let d = geom::sub3(q, p);
        let d2 = geom::dot3(d, d);
        if d2 < *best {
            *best = d2;
        }
        if hi - lo == 1 {
            return;
        }
        let ax = self.axis[mid] as usize;
        let delta = q[ax] - p[ax];
        let (near, far) = if delta < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(near.0, near.1, q, best);
        if delta * delta < *best {
            self.search(far.0, far.1, q, best);
        }
    }
}

/// Mean over `a` of the distance to the nearest point of `b`.
pub fn mean_nn(a: &[Vec3], b: &[Vec3]) -> f64 {
    let tree = KdTree::new(b);
    let sum: f64 = a.par_iter().map(|&p| tree.nearest_distance(p)).collect::<Vec<_>>().iter().sum();
    sum / a.len() as f64
}

/// Symmetric sum convention: `mean_a min_b + mean_b min_a`.
pub fn chamfer_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    Ok(mean_nn(a, b) + mean_nn(b, a))
}

/// `n` area-weighted uniform samples on the mesh surface.
pub fn sample_surface(mesh: &IndexedMesh, n: usize, seed: u64) -> Result<Vec<Vec3>, MetricsError> {
    let mut cdf = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(MetricsError::EmptyMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let r = rng.gen::<f64>() * total;
            let f = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
            let [a, b, c] = mesh.faces[f].map(|i| mesh.vertices[i as usize]);
            let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
            let s = r1.sqrt();
            let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
            [
                wa * a[0] + wb * b[0] + wc * c[0],
                wa * a[1] + wb * b[1] + wc * c[1],
                wa * a[2] + wb * b[2] + wc * c[2],
            ]
        })
        .collect())
}

/// Weighted sum of the reconstruction and seam terms.
pub fn combined_score(edge_l1: f64, stitch_cd: f64) -> f64 {
    LAMBDA_REG * edge_l1 + LAMBDA_STITCH * stitch_cd
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_of_full_square() {
        let side = 30;
        let valid = vec![true; 900];
        let band = edge_band(side, &valid, 3);
        // Interior 22x22 square is out of the band.
        assert_eq!(band.iter().filter(|&&b| !b).count(), 22 * 22);
        assert_eq!(boundary_mask(side, &valid).iter().filter(|&&b| b).count(), 4 * 29);
    }

    #[test]
    fn constant_offset_scales_by_one_plus_alpha() {
        let side = 40;
        let valid = vec![true; 1600];
        let gt = vec![[0.25f32, -0.5, 0.0]; 1600];
        let pred: Vec<[f32; 3]> = gt.iter().map(|g| g.map(|v| v + 0.125)).collect();
        let norm = Norm { offset: [0.0; 3], scale: 1.0 };
        let g = GeometryView { side, geometry: &gt, valid: &valid, norm };
        let p = GeometryView { geometry: &pred, ..g };
        let l = edge_aware_l1(g, p, ALPHA, BAND_WIDTH).unwrap();
        assert!((l - 101.0 * 0.125).abs() < 1e-12);
        assert_eq!(edge_aware_l1(g, g, ALPHA, BAND_WIDTH).unwrap(), 0.0);
    }

    #[test]
    fn chamfer_of_singletons_is_twice_distance() {
        let d = chamfer_distance(&[[0.0; 3]], &[[3.0, 4.0, 0.0]]).unwrap();
        assert_eq!(d, 10.0);
        assert_eq!(chamfer_distance(&[], &[[0.0; 3]]), Err(MetricsError::EmptySet));
    }

    #[test]
    fn samples_are_deterministic_and_on_plane() {
        let m = IndexedMesh {
            vertices: vec![[0.0, 0.0, 1.0], [2.0, 0.0, 1.0], [0.0, 2.0, 1.0]],
            faces: vec![[0, 1, 2]],
            ..Default::default()
        };
        let a = sample_surface(&m, 1000, 7).unwrap();
        assert_eq!(a, sample_surface(&m, 1000, 7).unwrap());
        for p in a {
            assert!((p[2] - 1.0).abs() < 1e-6 && p[0] >= -1e-12 && p[1] >= -1e-12 && p[0] + p[1] <= 2.0 + 1e-12);
        }
    }
}
