//! Convex hulls and outward polygon offsets for the mesh buffer ring.

use super::point::{cross, Point};

/// Convex hull by Andrew's monotone chain, counterclockwise, collinear
/// points dropped. Returns an empty vector for degenerate input (fewer than
/// three distinct non-collinear points).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    let n = pts.len();
    if n < 3 {
        return Vec::new();
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * n);
    // lower chain
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    // upper chain
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop(); // closing point repeats the start
    if hull.len() < 3 {
        return Vec::new();
    }
    hull
}

/// Area of a counterclockwise polygon by the shoelace formula.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Whether `p` lies inside or on the boundary of a counterclockwise convex
/// polygon, with an absolute slack on each half-plane test.
pub fn inside_convex(poly: &[Point], p: Point, slack: f64) -> bool {
    let n = poly.len();
    for i in 0..n {
        if cross(poly[i], poly[(i + 1) % n], p) < -slack {
            return false;
        }
    }
    true
}

/// Offset a counterclockwise convex polygon outward by `dist`, mitering at
/// the vertices. Miter spikes are capped at twice the offset distance,
/// which cannot occur for hulls with vertex angles above 60° but keeps
/// needle-sharp vertices bounded.
pub fn offset_convex(poly: &[Point], dist: f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = poly[(i + n - 1) % n];
        let cur = poly[i];
        let next = poly[(i + 1) % n];
        let n1 = outward_normal(prev, cur);
        let n2 = outward_normal(cur, next);
        let mut mx = n1.0 + n2.0;
        let mut my = n1.1 + n2.1;
        let norm = (mx * mx + my * my).sqrt();
        if norm < 1e-12 {
            mx = n1.0;
            my = n1.1;
        } else {
            mx /= norm;
            my /= norm;
        }
        let cos_half = (mx * n1.0 + my * n1.1).max(0.5);
        let len = dist / cos_half;
        out.push(Point::new(cur.x + mx * len, cur.y + my * len));
    }
    out
}

/// Unit normal pointing to the right of the directed edge a → b, which is
/// outward for a counterclockwise polygon.
fn outward_normal(a: Point, b: Point) -> (f64, f64) {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len = (dx * dx + dy * dy).sqrt().max(1e-300);
    (dy / len, -dx / len)
}

/// Resample the closed polygon boundary so no segment exceeds `max_len`,
/// keeping all original vertices.
pub fn densify_ring(poly: &[Point], max_len: f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        out.push(a);
        let d = a.dist(b);
        if d > max_len {
            let k = (d / max_len).ceil() as usize;
            for j in 1..k {
                let t = j as f64 / k as f64;
                out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let mut pts = square();
        pts.push(Point::new(0.5, 0.5));
        pts.push(Point::new(0.25, 0.75));
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!((polygon_area(&h) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hull_drops_collinear_edge_points() {
        let mut pts = square();
        pts.push(Point::new(0.5, 0.0));
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn collinear_input_has_no_hull() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
        ];
        assert!(convex_hull(&pts).is_empty());
    }

    #[test]
    fn square_offset_miters_to_diagonal_corners() {
        let h = convex_hull(&square());
        let off = offset_convex(&h, 1.0);
        // 90° corners miter along the diagonal by √2.
        let expect_area = 9.0; // [-1,2]² square
        assert!((polygon_area(&off) - expect_area).abs() < 1e-10);
        assert!(off
            .iter()
            .any(|p| (p.x + 1.0).abs() < 1e-12 && (p.y + 1.0).abs() < 1e-12));
    }

    #[test]
    fn inside_convex_classification() {
        let h = convex_hull(&square());
        assert!(inside_convex(&h, Point::new(0.5, 0.5), 0.0));
        assert!(inside_convex(&h, Point::new(0.0, 0.5), 1e-12));
        assert!(!inside_convex(&h, Point::new(1.5, 0.5), 1e-12));
    }

    #[test]
    fn densify_respects_max_length() {
        let h = convex_hull(&square());
        let ring = densify_ring(&h, 0.3);
        assert_eq!(ring.len(), 16); // 4 segments per unit edge
        for i in 0..ring.len() {
            let d = ring[i].dist(ring[(i + 1) % ring.len()]);
            assert!(d <= 0.3 + 1e-12);
        }
    }
}
