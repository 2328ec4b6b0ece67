use ggi_core::geom;
use ggi_core::layout::{correct_orientation, pack_layout, shelf_pack, PanelMapping};
use ggi_core::pattern::{Panel, SewingPattern};
use proptest::prelude::*;

fn rect(id: String, w: f64, h: f64, rotation: [f64; 4]) -> Panel {
    Panel {
        id,
        panel_type: "torso_front".into(),
        vertices: vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]],
        edges: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
        rotation,
        translation: [0.0; 3],
    }
}

fn pattern_of(sizes: &[(u32, u32)]) -> SewingPattern {
    SewingPattern {
        name: "rects".into(),
        panels: sizes
            .iter()
            .enumerate()
            .map(|(i, &(w, h))| rect(format!("r{i}"), w as f64, h as f64, [1.0, 0.0, 0.0, 0.0]))
            .collect(),
        stitches: vec![],
    }
}

/// Independent next-fit shelf placement: decreasing height, then width,
/// then id; shelves fill left to right from the bottom.
fn oracle_fits(sizes: &[(u32, u32)], side: u32) -> bool {
    let mut items: Vec<(String, u32, u32)> =
        sizes.iter().enumerate().map(|(i, &(w, h))| (format!("r{i}"), w, h)).collect();
    items.sort_by(|a, b| (b.2, b.1).cmp(&(a.2, a.1)).then(a.0.cmp(&b.0)));
    let mut x = 0;
    let mut floor = 0;
    let mut shelf = 0;
    for (_, w, h) in items {
        if w > side {
            return false;
        }
        if x + w > side {
            floor += shelf;
            x = 0;
            shelf = 0;
        }
        if floor + h > side {
            return false;
        }
        x += w;
        shelf = shelf.max(h);
    }
    true
}

/// Smallest side accepted by the oracle, by linear scan over every candidate.
fn oracle_min_side(sizes: &[(u32, u32)]) -> u32 {
    let upper: u32 = sizes.iter().map(|s| s.1).sum::<u32>() + sizes.iter().map(|s| s.0).max().unwrap();
    (1..=upper).find(|&s| oracle_fits(sizes, s)).unwrap()
}

fn sizes() -> impl Strategy<Value = Vec<(u32, u32)>> {
    prop::collection::vec((1u32..=16, 1u32..=16), 1..=6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn side_matches_exhaustive_oracle(s in sizes()) {
        let layout = pack_layout(&pattern_of(&s), 1.0, 0).unwrap();
        prop_assert_eq!(layout.side, oracle_min_side(&s));
    }

    #[test]
    fn feasibility_is_monotone_in_side(s in sizes()) {
        let mut rects: Vec<[u32; 2]> = s.iter().map(|&(w, h)| [w, h]).collect();
        rects.sort_by(|a, b| (b[1], b[0]).cmp(&(a[1], a[0])));
        let first = (1..200).find(|&side| shelf_pack(&rects, side).is_some()).unwrap();
        for side in first..first + 40 {
            prop_assert!(shelf_pack(&rects, side).is_some(), "fails at {side} after succeeding at {first}");
        }
    }

    #[test]
    fn placements_are_disjoint_contained_and_minimal(
        s in sizes(),
        margin in 0u32..4,
        scale in 0.3f64..3.0,
    ) {
        let pattern = pattern_of(&s);
        let layout = pack_layout(&pattern, scale, margin).unwrap();
        let rects: Vec<_> = layout.placements.values().collect();
        for (i, a) in rects.iter().enumerate() {
            prop_assert!(a.origin[0] + a.size[0] <= layout.side && a.origin[1] + a.size[1] <= layout.side);
            for b in &rects[i + 1..] {
                let apart = a.origin[0] + a.size[0] <= b.origin[0]
                    || b.origin[0] + b.size[0] <= a.origin[0]
                    || a.origin[1] + a.size[1] <= b.origin[1]
                    || b.origin[1] + b.size[1] <= a.origin[1];
                prop_assert!(apart);
            }
        }
        let again = pack_layout(&pattern, scale, margin).unwrap();
        prop_assert_eq!(serde_json::to_string(&layout).unwrap(), serde_json::to_string(&again).unwrap());
        let mut inflated: Vec<[u32; 2]> =
            rects.iter().map(|p| [p.size[0] + 2 * margin, p.size[1] + 2 * margin]).collect();
        inflated.sort_by(|a, b| (b[1], b[0]).cmp(&(a[1], a[0])));
        prop_assert!(shelf_pack(&inflated, layout.side - 1).is_none());
    }

    #[test]
    fn corrected_orientation_agrees_with_layout_normal(
        angles in prop::collection::vec((-3.1f64..3.1, 0usize..3), 1..5),
        mirror in prop::collection::vec(any::<bool>(), 5),
    ) {
        let panels: Vec<Panel> = angles
            .iter()
            .enumerate()
            .map(|(i, &(a, axis))| {
                let mut q = [(0.5 * a).cos(), 0.0, 0.0, 0.0];
                q[1 + axis] = (0.5 * a).sin();
                let mut p = rect(format!("p{i}"), 5.0 + i as f64, 4.0, q);
                if mirror[i] {
                    p.vertices.reverse();
                }
                p
            })
            .collect();
        let pattern = SewingPattern { name: "o".into(), panels, stitches: vec![] };
        let layout = correct_orientation(&pattern, &pack_layout(&pattern, 2.0, 1).unwrap()).unwrap();
        for p in &pattern.panels {
            let facing = geom::quat_rotate(p.rotation, [0.0, 0.0, 1.0])[2];
            if facing.abs() < 1e-9 {
                continue;
            }
            let m = PanelMapping::new(p, &layout).unwrap();
            let uv: Vec<_> = p.loop_points().into_iter().map(|q| m.to_px(q)).collect();
            let area = geom::signed_area2(&uv);
            prop_assert!(area * facing > 0.0, "panel {} area {area} facing {facing}", p.id);
        }
    }
}
