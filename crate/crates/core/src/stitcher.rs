//! Seam closing: boundary chain extraction, dynamic time warping and
//! vertex welding.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Vec3};
use crate::palette::{StitchColorIndex, BACKGROUND};
use crate::raster::GgiRaster;
use crate::remesh::{self, IndexedMesh, RemeshError};

/// Half-window, in chain pixels, used to measure turning angles.
pub const TURN_WINDOW: usize = 3;
/// Smallest turning angle (degrees) accepted as a split corner.
pub const MIN_SPLIT_TURN_DEG: f64 = 30.0;

#[derive(Debug, Error, PartialEq)]
pub enum StitchError {
    #[error(transparent)]
    Remesh(#[from] RemeshError),
    #[error("stitch {id}: expected 2 chains, found {found}")]
    ChainCountMismatch { id: u32, found: usize },
    #[error("stitch {id}: pixels form {components} disconnected pieces")]
    BrokenChain { id: u32, components: usize },
    #[error("stitch {id}: chain is a closed loop without split corners")]
    ClosedLoopChain { id: u32 },
    #[error("pixel ({x}, {y}) has a color outside the stitch palette")]
    UnknownStitchColor { x: u32, y: u32 },
    #[error("stitch {id}: chain has no mesh vertices")]
    EmptyChain { id: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryChain {
    pub stitch_id: u32,
    pub side: Side,
    pub panel: u32,
    pub pixels: Vec<[u32; 2]>,
    pub vertex_indices: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtwCostSpace {
    /// World-space distance of chain vertices.
    #[default]
    #[serde(rename = "3d")]
    World,
    /// Pixel-space distance of chain pixels.
    Uv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StitchCorrespondence {
    pub stitch_id: u32,
    /// Index pairs into chain A and chain B (B in its original order).
    pub pairs: Vec<(usize, usize)>,
    pub cost: f64,
    pub reversed: bool,
}

/// Pixel chains of one stitch before mesh lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelChains {
    pub stitch_id: u32,
    /// Sides A and B: (panel index, pixels).
    pub sides: [(u32, Vec<[u32; 2]>); 2],
}

fn neighbors8(p: [u32; 2], side: u32) -> impl Iterator<Item = [u32; 2]> {
    const D: [(i32, i32); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
    D.iter().filter_map(move |&(dx, dy)| {
        let x = p[0] as i64 + dx as i64;
        let y = p[1] as i64 + dy as i64;
        (x >= 0 && y >= 0 && x < side as i64 && y < side as i64).then_some([x as u32, y as u32])
    })
}

fn key(p: [u32; 2]) -> (u32, u32) {
    (p[1], p[0])
}

/// Pixel-set graph over 8-adjacency with row-major node order.
struct PixelGraph {
    nodes: Vec<[u32; 2]>,
    adj: Vec<Vec<usize>>,
}

impl PixelGraph {
    fn new(mut nodes: Vec<[u32; 2]>, side: u32) -> Self {
        nodes.sort_by_key(|&p| key(p));
        let index: BTreeMap<(u32, u32), usize> = nodes.iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
        let adj = nodes
            .iter()
            .map(|&p| neighbors8(p, side).filter_map(|q| index.get(&key(q)).copied()).collect())
            .collect();
        Self { nodes, adj }
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        for s in 0..self.nodes.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        q.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// BFS distances and parents from `s`, restricted to `comp`.
    fn bfs(&self, s: usize) -> (Vec<usize>, Vec<usize>) {
        let mut dist = vec![usize::MAX; self.nodes.len()];
        let mut parent = vec![usize::MAX; self.nodes.len()];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    q.push_back(v);
                }
            }
        }
        (dist, parent)
    }

    fn farthest(comp: &[usize], dist: &[usize]) -> usize {
        // `comp` is sorted row-major, so the first maximum is the smallest pixel.
        let mut best = comp[0];
        for &u in comp {
            if dist[u] > dist[best] {
                best = u;
            }
        }
        best
    }

    /// Longest shortest path of a component, starting at its row-major
    /// smaller endpoint. Pixels off that path are dropped.
    fn trace(&self, comp: &[usize]) -> Vec<[u32; 2]> {
        let (d0, _) = self.bfs(comp[0]);
        let a = Self::farthest(comp, &d0);
        let (da, parent) = self.bfs(a);
        let b = Self::farthest(comp, &da);
        let mut path = vec![b];
        while *path.last().unwrap() != a {
            path.push(parent[*path.last().unwrap()]);
        }
        let mut pixels: Vec<[u32; 2]> = path.into_iter().map(|i| self.nodes[i]).collect();
        if key(pixels[0]) > key(*pixels.last().unwrap()) {
            pixels.reverse();
        }
        pixels
    }

    fn is_ring(&self, comp: &[usize]) -> bool {
        comp.len() >= 4 && comp.iter().all(|&u| self.adj[u].len() == 2)
    }

    /// Ring order starting at the smallest pixel.
    fn ring_order(&self, comp: &[usize]) -> Vec<[u32; 2]> {
        let start = comp[0];
        let mut order = vec![start];
        let mut prev = start;
        let mut cur = *self.adj[start].iter().min_by_key(|&&v| key(self.nodes[v])).unwrap();
        while cur != start {
            order.push(cur);
            let next = if self.adj[cur][0] == prev { self.adj[cur][1] } else { self.adj[cur][0] };
            prev = cur;
            cur = next;
        }
        order.into_iter().map(|i| self.nodes[i]).collect()
    }
}

/// Turning angle in degrees at every pixel of `path`, measured between the
/// chords to the pixels `TURN_WINDOW` steps away (cyclic for rings).
fn turn_angles(path: &[[u32; 2]], cyclic: bool) -> Vec<f64> {
    let n = path.len();
    let k = TURN_WINDOW;
    let f = |p: [u32; 2]| [p[0] as f64, p[1] as f64];
    (0..n)
        .map(|i| {
            let (prev, next) = if cyclic {
                ((i + n - k % n) % n, (i + k) % n)
            } else if i >= k && i + k < n {
                (i - k, i + k)
            } else {
                return 0.0;
            };
            let u = geom::sub2(f(path[i]), f(path[prev]));
            let v = geom::sub2(f(path[next]), f(path[i]));
            let c = geom::dot2(u, v) / (geom::dot2(u, u).sqrt() * geom::dot2(v, v).sqrt());
            c.clamp(-1.0, 1.0).acos().to_degrees()
        })
        .collect()
}

/// Index of the sharpest turn (first on ties), if it reaches the threshold.
fn sharpest(angles: &[f64], skip: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &a) in angles.iter().enumerate() {
        if skip(i) || a < MIN_SPLIT_TURN_DEG {
            continue;
        }
        if best.is_none_or(|b| a > angles[b]) {
            best = Some(i);
        }
    }
    best
}

/// Groups stitching pixels by stitch id and splits them into two ordered
/// chains per stitch. Adjacency never crosses panel placements.
pub fn extract_pixel_chains(raster: &GgiRaster) -> Result<Vec<PixelChains>, StitchError> {
    let side = raster.side;
    let colors = StitchColorIndex::new();
    let panel = raster.panel_map();
    let mut by_stitch: BTreeMap<(u32, u32), Vec<[u32; 2]>> = BTreeMap::new();
    for y in 0..side {
        for x in 0..side {
            let i = raster.index(x, y);
            let c = raster.stitching[i];
            if c == BACKGROUND {
                continue;
            }
            let id = colors.id_of(c).ok_or(StitchError::UnknownStitchColor { x, y })?;
            if id >= raster.stitch_count {
                return Err(StitchError::UnknownStitchColor { x, y });
            }
            by_stitch.entry((id, panel[i])).or_default().push([x, y]);
        }
    }

    (0..raster.stitch_count)
        .into_par_iter()
        .map(|id| {
            let mut pieces: Vec<(u32, Vec<[u32; 2]>)> = Vec::new();
            let mut rings: Vec<(u32, Vec<[u32; 2]>)> = Vec::new();
            for ((_, pid), pixels) in by_stitch.range((id, 0)..=(id, u32::MAX)) {
                let g = PixelGraph::new(pixels.clone(), side);
                for comp in g.components() {
                    if g.is_ring(&comp) {
                        rings.push((*pid, g.ring_order(&comp)));
                    } else {
                        pieces.push((*pid, g.trace(&comp)));
                    }
                }
            }
            let found = pieces.len() + rings.len();
            let mut sides: Vec<(u32, Vec<[u32; 2]>)> = match (pieces.len(), rings.len()) {
                (2, 0) => pieces,
                (1, 0) => {
                    let (pid, path) = pieces.pop().unwrap();
                    let angles = turn_angles(&path, false);
                    let cut = sharpest(&angles, |_| false).ok_or(StitchError::ChainCountMismatch { id, found: 1 })?;
                    vec![(pid, path[..=cut].to_vec()), (pid, path[cut..].to_vec())]
                }
                (0, 1) => {
                    let (pid, ring) = rings.pop().unwrap();
                    let n = ring.len();
                    let angles = turn_angles(&ring, true);
                    let c1 = sharpest(&angles, |_| false).ok_or(StitchError::ClosedLoopChain { id })?;
                    let near = |i: usize| {
                        let d = i.abs_diff(c1);
                        d.min(n - d) <= TURN_WINDOW
                    };
                    let c2 = sharpest(&angles, near).ok_or(StitchError::ClosedLoopChain { id })?;
                    let (lo, hi) = (c1.min(c2), c1.max(c2));
                    let first = ring[lo..=hi].to_vec();
                    let mut second = ring[hi..].to_vec();
                    second.extend_from_slice(&ring[..=lo]);
                    vec![(pid, first), (pid, second)]
                }
                (0, 0) => return Err(StitchError::ChainCountMismatch { id, found: 0 }),
                _ if found > 2 => return Err(StitchError::BrokenChain { id, components: found }),
                _ => return Err(StitchError::ChainCountMismatch { id, found }),
            };
            sides.sort_by_key(|(pid, px)| (*pid, key(px[0])));
            let b = sides.pop().unwrap();
            let a = sides.pop().unwrap();
            Ok(PixelChains { stitch_id: id, sides: [a, b] })
        })
        .collect()
}

/// Chains with mesh vertex indices. Pixels the mesh has no vertex for are
/// dropped from the chain.
pub fn extract_chains(raster: &GgiRaster, mesh: &IndexedMesh) -> Result<Vec<[BoundaryChain; 2]>, StitchError> {
    let side = raster.side as usize;
    let mut vertex_at = vec![u32::MAX; side * side];
    for (v, p) in mesh.uv_of_vertex.iter().enumerate() {
        vertex_at[p[1] as usize * side + p[0] as usize] = v as u32;
    }
    extract_pixel_chains(raster)?
        .into_iter()
        .map(|pc| {
            let make = |(panel, pixels): &(u32, Vec<[u32; 2]>), s: Side| {
                let (pixels, vertex_indices): (Vec<_>, Vec<_>) = pixels
                    .iter()
                    .filter_map(|&p| {
                        let v = vertex_at[p[1] as usize * side + p[0] as usize];
                        (v != u32::MAX).then_some((p, v))
                    })
                    .unzip();
                if pixels.is_empty() {
                    return Err(StitchError::EmptyChain { id: pc.stitch_id });
                }
                Ok(BoundaryChain { stitch_id: pc.stitch_id, side: s, panel: *panel, pixels, vertex_indices })
            };
            Ok([make(&pc.sides[0], Side::A)?, make(&pc.sides[1], Side::B)?])
        })
        .collect()
}

/// Optimal monotone alignment of two cost sequences given by `cost(i, j)`.
/// Returns the path from `(0, 0)` to `(n-1, m-1)` and its summed cost.
/// Backtracking prefers the diagonal, then `(i-1, j)`, then `(i, j-1)`.
pub fn dtw(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> (Vec<(usize, usize)>, f64) {
    assert!(n > 0 && m > 0, "dtw needs non-empty sequences");
    let mut d = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            let c = cost(i, j);
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(d[(i - 1) * m + j - 1]);
                }
                if i > 0 {
                    best = best.min(d[(i - 1) * m + j]);
                }
                if j > 0 {
                    best = best.min(d[i * m + j - 1]);
                }
                best
            };
            d[i * m + j] = prev + c;
        }
    }
    let (mut i, mut j) = (n - 1, m - 1);
    let mut path = vec![(i, j)];
    while i > 0 || j > 0 {
        let diag = if i > 0 && j > 0 { d[(i - 1) * m + j - 1] } else { f64::INFINITY };
        let up = if i > 0 { d[(i - 1) * m + j] } else { f64::INFINITY };
        let left = if j > 0 { d[i * m + j - 1] } else { f64::INFINITY };
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i, j));
    }
    path.reverse();
    (path, d[n * m - 1])
}

/// Aligns chain B to chain A, trying B in both directions; the forward
/// direction wins ties.
pub fn dtw_align(
    a: &BoundaryChain,
    b: &BoundaryChain,
    positions: &[Vec3],
    space: DtwCostSpace,
) -> StitchCorrespondence {
    let pa = chain_points(a, positions, space);
    let pb = chain_points(b, positions, space);
    let (n, m) = (pa.len(), pb.len());
    let (fwd, fc) = dtw(n, m, |i, j| geom::dist3(pa[i], pb[j]));
    let (rev, rc) = dtw(n, m, |i, j| geom::dist3(pa[i], pb[m - 1 - j]));
    if rc < fc {
        StitchCorrespondence {
            stitch_id: a.stitch_id,
            pairs: rev.into_iter().map(|(i, j)| (i, m - 1 - j)).collect(),
            cost: rc,
            reversed: true,
        }
    } else {
        StitchCorrespondence { stitch_id: a.stitch_id, pairs: fwd, cost: fc, reversed: false }
    }
}

fn chain_points(c: &BoundaryChain, positions: &[Vec3], space: DtwCostSpace) -> Vec<Vec3> {
    match space {
        DtwCostSpace::World => c.vertex_indices.iter().map(|&v| positions[v as usize]).collect(),
        DtwCostSpace::Uv => c.pixels.iter().map(|p| [p[0] as f64, p[1] as f64, 0.0]).collect(),
    }
}

/// Union-find with the smallest index as class representative.
#[derive(Debug, Clone)]
pub struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect() }
    }

    pub fn find(&mut self, mut i: u32) -> u32 {
        let mut root = i;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[i as usize] != root {
            let next = self.parent[i as usize];
            self.parent[i as usize] = root;
            i = next;
        }
        root
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb) as usize] = ra.min(rb);
        true
    }
}

#[derive(Debug, Clone)]
pub struct Welded {
    pub mesh: IndexedMesh,
    /// New index of every input vertex, `u32::MAX` if it was compacted out.
    pub remap: Vec<u32>,
    pub degenerate_removed: usize,
    pub merged: usize,
}

/// Merges every vertex pair, moving each class to the mean of its members.
pub fn weld(mesh: &IndexedMesh, pairs: impl IntoIterator<Item = (u32, u32)>) -> Welded {
    let n = mesh.vertices.len();
    let mut dsu = Dsu::new(n);
    let mut merged = 0;
    for (a, b) in pairs {
        if dsu.union(a, b) {
            merged += 1;
        }
    }
    let root: Vec<u32> = (0..n as u32).map(|i| dsu.find(i)).collect();
    let mut sum = vec![[0.0f64; 3]; n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        let r = root[i] as usize;
        sum[r] = geom::add3(sum[r], mesh.vertices[i]);
        count[r] += 1;
    }

    let mut faces = Vec::with_capacity(mesh.faces.len());
    let mut degenerate_removed = 0;
    for f in &mesh.faces {
        let g = f.map(|i| root[i as usize]);
        if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
            degenerate_removed += 1;
        } else {
            faces.push(g);
        }
    }
    let mut used = vec![false; n];
    for f in &faces {
        for &i in f {
            used[i as usize] = true;
        }
    }
    let mut new_index = vec![u32::MAX; n];
    let mut out = IndexedMesh { panel_ids: mesh.panel_ids.clone(), ..Default::default() };
    let keep_uv = mesh.uv_of_vertex.len() == n;
    let keep_panel = mesh.panel_of_vertex.len() == n;
    for r in (0..n).filter(|&i| used[i]) {
        new_index[r] = out.vertices.len() as u32;
        out.vertices.push(if count[r] == 1 { mesh.vertices[r] } else { geom::scale3(sum[r], 1.0 / count[r] as f64) });
        if keep_uv {
            out.uv_of_vertex.push(mesh.uv_of_vertex[r]);
        }
        if keep_panel {
            out.panel_of_vertex.push(mesh.panel_of_vertex[r]);
        }
    }
    out.faces = faces.into_iter().map(|f| f.map(|i| new_index[i as usize])).collect();
    let remap = root.iter().map(|&r| new_index[r as usize]).collect();
    Welded { mesh: out, remap, degenerate_removed, merged }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamReport {
    pub id: u32,
    pub chain_lengths: [usize; 2],
    pub dtw_cost_cm: f64,
    pub reversed: bool,
    pub max_pre_weld_gap_cm: f64,
    pub max_post_weld_gap_cm: f64,
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub remeshed: IndexedMesh,
    pub mesh: IndexedMesh,
    pub chains: Vec<[BoundaryChain; 2]>,
    pub correspondences: Vec<StitchCorrespondence>,
    pub seams: Vec<SeamReport>,
    pub degenerate_removed: usize,
}

/// Remesh, extract chains, align and weld.
pub fn assemble(raster: &GgiRaster, space: DtwCostSpace) -> Result<Assembly, StitchError> {
    let remeshed = remesh::remesh(raster)?;
    let chains = extract_chains(raster, &remeshed)?;
    let correspondences: Vec<StitchCorrespondence> =
        chains.par_iter().map(|[a, b]| dtw_align(a, b, &remeshed.vertices, space)).collect();
    let vertex_pairs = |k: usize| {
        let [a, b] = &chains[k];
        correspondences[k].pairs.iter().map(move |&(i, j)| (a.vertex_indices[i], b.vertex_indices[j]))
    };
    let welded = weld(&remeshed, (0..chains.len()).flat_map(vertex_pairs));
    let seams = (0..chains.len())
        .map(|k| {
            let mut pre: f64 = 0.0;
            let mut post: f64 = 0.0;
            for (va, vb) in vertex_pairs(k) {
                pre = pre.max(geom::dist3(remeshed.vertices[va as usize], remeshed.vertices[vb as usize]));
                let (na, nb) = (welded.remap[va as usize], welded.remap[vb as usize]);
                if na != u32::MAX && nb != u32::MAX {
                    post = post.max(geom::dist3(welded.mesh.vertices[na as usize], welded.mesh.vertices[nb as usize]));
                }
            }
            SeamReport {
                id: chains[k][0].stitch_id,
                chain_lengths: [chains[k][0].pixels.len(), chains[k][1].pixels.len()],
                dtw_cost_cm: correspondences[k].cost,
                reversed: correspondences[k].reversed,
                max_pre_weld_gap_cm: pre,
                max_post_weld_gap_cm: post,
            }
        })
        .collect();
    Ok(Assembly {
        remeshed,
        mesh: welded.mesh,
        chains,
        correspondences,
        seams,
        degenerate_removed: welded.degenerate_removed,
    })
}
