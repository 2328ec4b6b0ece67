//! Small fixed-size vector helpers shared by the codec.

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];

#[inline]
pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub fn dist3(a: Vec3, b: Vec3) -> f64 {
    norm3(sub3(a, b))
}

#[inline]
pub fn lerp3(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

#[inline]
pub fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dist2(a: Vec2, b: Vec2) -> f64 {
    let d = sub2(a, b);
    dot2(d, d).sqrt()
}

/// Twice the signed area of a closed polygon; positive for counter-clockwise loops.
pub fn signed_area2(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| cross2(poly[i], poly[(i + 1) % n]))
        .sum()
}

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = sub2(b, a);
    let len2 = dot2(ab, ab);
    if len2 == 0.0 {
        return dist2(p, a);
    }
    let t = (dot2(sub2(p, a), ab) / len2).clamp(0.0, 1.0);
    dist2(p, [a[0] + ab[0] * t, a[1] + ab[1] * t])
}

/// Closed point-in-polygon test: points within `tol` of the boundary count as inside.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2], tol: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if point_segment_dist(p, a, b) <= tol {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross2(sub2(b, a), sub2(c, a))
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Whether closed segments `p1`-`p2` and `q1`-`q2` share at least one point.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Rotates `v` by the unit quaternion `q = [w, x, y, z]`.
pub fn quat_rotate(q: [f64; 4], v: Vec3) -> Vec3 {
    let [w, x, y, z] = q;
    let u = [x, y, z];
    let t = scale3(cross3(u, v), 2.0);
    add3(add3(v, scale3(t, w)), cross3(u, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_half_turn_about_y_flips_z() {
        let q = [0.0, 0.0, 1.0, 0.0];
        let r = quat_rotate(q, [0.0, 0.0, 1.0]);
        assert!((r[2] + 1.0).abs() < 1e-12);
        assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
    }

    #[test]
    fn polygon_membership_is_closed() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon([0.5, 0.5], &sq, 1e-9));
        assert!(point_in_polygon([1.0, 0.5], &sq, 1e-9));
        assert!(!point_in_polygon([1.1, 0.5], &sq, 1e-9));
        assert_eq!(signed_area2(&sq), 2.0);
    }

    #[test]
    fn crossing_and_touching_segments() {
        assert!(segments_intersect([0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0]));
        assert!(segments_intersect([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 3.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
    }
}
