//! Incremental Bowyer–Watson Delaunay triangulation with a super-triangle.
//!
//! Points are inserted one at a time: locate the triangle containing the
//! point by walking neighbor pointers, grow the cavity of triangles whose
//! circumcircle strictly contains the point, and re-triangulate the cavity
//! boundary as a fan around the new vertex. Strictness with a relative
//! epsilon makes cocircular configurations (regular grids) deterministic:
//! on-circle points are treated as outside the circle, so the first valid
//! diagonal encountered wins and stays.

use super::point::{cross, Point};
use std::collections::HashMap;

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    /// `nbr[k]` is the triangle across the edge opposite `v[k]`.
    nbr: [usize; 3],
}

pub(crate) struct Triangulator {
    pts: Vec<Point>,
    tris: Vec<Tri>,
    alive: Vec<bool>,
    stamp: Vec<u64>,
    stamp_gen: u64,
    last: usize,
    /// Tolerance for orientation tests, scaled to the squared domain size.
    eps_orient: f64,
    /// Points closer than this (squared) to an existing vertex are merged.
    dedup_tol2: f64,
}

impl Triangulator {
    /// Start a triangulation whose super-triangle comfortably encloses the
    /// bounding box `[min, max]`.
    pub fn new(min: Point, max: Point) -> Self {
        let cx = 0.5 * (min.x + max.x);
        let cy = 0.5 * (min.y + max.y);
        let s = (max.x - min.x).max(max.y - min.y).max(1e-6);
        let r = 64.0 * s;
        let pts = vec![
            Point::new(cx, cy + r),
            Point::new(cx - r * 0.866_025_403_784_438_6, cy - 0.5 * r),
            Point::new(cx + r * 0.866_025_403_784_438_6, cy - 0.5 * r),
        ];
        let tris = vec![Tri {
            v: [0, 1, 2],
            nbr: [NONE, NONE, NONE],
        }];
        Triangulator {
            pts,
            tris,
            alive: vec![true],
            stamp: vec![0],
            stamp_gen: 0,
            last: 0,
            eps_orient: 1e-12 * (130.0 * s) * (130.0 * s),
            dedup_tol2: (1e-9 * s) * (1e-9 * s),
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.pts
    }

    /// Indices of the three super-triangle vertices.
    pub fn is_super_vertex(&self, v: usize) -> bool {
        v < 3
    }

    /// Vertex triples of all live triangles that touch no super vertex.
    pub fn real_triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.tris
            .iter()
            .zip(&self.alive)
            .filter(|(_, &a)| a)
            .map(|(t, _)| t.v)
            .filter(|v| !v.iter().any(|&i| self.is_super_vertex(i)))
    }

    fn walk(&self, p: Point) -> usize {
        let mut t = if self.alive[self.last] {
            self.last
        } else {
            self.alive.iter().position(|&a| a).expect("no live triangle")
        };
        let mut budget = 4 * self.tris.len() + 64;
        loop {
            let tri = self.tris[t];
            let mut worst = 0usize;
            let mut worst_val = -self.eps_orient;
            for k in 0..3 {
                let a = self.pts[tri.v[(k + 1) % 3]];
                let b = self.pts[tri.v[(k + 2) % 3]];
                let c = cross(a, b, p);
                if c < worst_val {
                    worst_val = c;
                    worst = k + 1;
                }
            }
            if worst == 0 {
                return t;
            }
            let next = tri.nbr[worst - 1];
            budget -= 1;
            if next == NONE || budget == 0 {
                return self.scan(p);
            }
            t = next;
        }
    }

    /// Deterministic fallback: first live triangle containing `p`.
    fn scan(&self, p: Point) -> usize {
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            let ok = (0..3).all(|k| {
                let a = self.pts[tri.v[(k + 1) % 3]];
                let b = self.pts[tri.v[(k + 2) % 3]];
                cross(a, b, p) >= -self.eps_orient
            });
            if ok {
                return t;
            }
        }
        panic!("point ({}, {}) escaped the super-triangle", p.x, p.y);
    }

    /// Strict in-circumcircle test with a relative epsilon; boundary cases
    /// count as outside.
    fn in_circumcircle(&self, t: usize, p: Point) -> bool {
        let [ia, ib, ic] = self.tris[t].v;
        let a = self.pts[ia];
        let b = self.pts[ib];
        let c = self.pts[ic];
        let ax = a.x - p.x;
        let ay = a.y - p.y;
        let bx = b.x - p.x;
        let by = b.y - p.y;
        let cx = c.x - p.x;
        let cy = c.y - p.y;
        let az = ax * ax + ay * ay;
        let bz = bx * bx + by * by;
        let cz = cx * cx + cy * cy;
        let det = ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx);
        let m = ax
            .abs()
            .max(ay.abs())
            .max(bx.abs())
            .max(by.abs())
            .max(cx.abs())
            .max(cy.abs());
        det > 1e-11 * m * m * m * m
    }

    /// Insert a point, returning its vertex index. A point within the merge
    /// tolerance of an existing vertex returns that vertex unchanged.
    pub fn insert(&mut self, p: Point) -> usize {
        let t0 = self.walk(p);
        for &v in &self.tris[t0].v {
            if self.pts[v].dist2(p) <= self.dedup_tol2 {
                return v;
            }
        }

        // Grow the cavity of circumcircle violations outward from t0.
        self.stamp_gen += 1;
        let gen = self.stamp_gen;
        let mut bad = vec![t0];
        self.stamp[t0] = gen;
        let mut head = 0;
        while head < bad.len() {
            let t = bad[head];
            head += 1;
            for k in 0..3 {
                let n = self.tris[t].nbr[k];
                if n != NONE && self.stamp[n] != gen && self.in_circumcircle(n, p) {
                    self.stamp[n] = gen;
                    bad.push(n);
                }
            }
        }

        // Boundary edges of the cavity, directed counterclockwise.
        let mut edges: Vec<(usize, usize, usize)> = Vec::new(); // (a, b, outside tri)
        for &t in &bad {
            let tri = self.tris[t];
            for k in 0..3 {
                let n = tri.nbr[k];
                if n == NONE || self.stamp[n] != gen {
                    edges.push((tri.v[(k + 1) % 3], tri.v[(k + 2) % 3], n));
                }
            }
        }

        let pi = self.pts.len();
        self.pts.push(p);
        let mut starts: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
        let mut ends: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
        let mut created = Vec::with_capacity(edges.len());
        for &(a, b, out) in &edges {
            let ti = self.alloc(Tri {
                v: [pi, a, b],
                nbr: [out, NONE, NONE],
            });
            starts.insert(a, ti);
            ends.insert(b, ti);
            created.push((ti, a, b, out));
        }
        for &(ti, a, b, out) in &created {
            self.tris[ti].nbr[1] = starts[&b]; // across a: edge (b, p)
            self.tris[ti].nbr[2] = ends[&a]; // across b: edge (p, a)
            if out != NONE {
                let slot = (0..3)
                    .find(|&k| {
                        let v = self.tris[out].v[k];
                        v != a && v != b
                    })
                    .expect("cavity edge not shared with outside triangle");
                self.tris[out].nbr[slot] = ti;
            }
        }
        for &t in &bad {
            self.alive[t] = false;
        }
        self.last = created[0].0;
        pi
    }

    fn alloc(&mut self, tri: Tri) -> usize {
        self.tris.push(tri);
        self.alive.push(true);
        self.stamp.push(0);
        self.tris.len() - 1
    }

    /// Drop the super-triangle and everything attached to it; reindex the
    /// remaining vertices. Returns (vertices, counterclockwise triangles).
    pub fn finish(self) -> (Vec<Point>, Vec<[usize; 3]>) {
        let vertices: Vec<Point> = self.pts[3..].to_vec();
        let mut triangles = Vec::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.alive[t] || tri.v.iter().any(|&v| v < 3) {
                continue;
            }
            let mut v = [tri.v[0] - 3, tri.v[1] - 3, tri.v[2] - 3];
            if cross(vertices[v[0]], vertices[v[1]], vertices[v[2]]) < 0.0 {
                v.swap(1, 2);
            }
            triangles.push(v);
        }
        (vertices, triangles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangulate(pts: &[Point]) -> (Vec<Point>, Vec<[usize; 3]>) {
        let (min, max) = bbox(pts);
        let mut t = Triangulator::new(min, max);
        for &p in pts {
            t.insert(p);
        }
        t.finish()
    }

    fn bbox(pts: &[Point]) -> (Point, Point) {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        (min, max)
    }

    fn total_area(vs: &[Point], ts: &[[usize; 3]]) -> f64 {
        ts.iter()
            .map(|t| 0.5 * cross(vs[t[0]], vs[t[1]], vs[t[2]]))
            .sum()
    }

    #[test]
    fn square_gives_two_triangles() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let (vs, ts) = triangulate(&pts);
        assert_eq!(vs.len(), 4);
        assert_eq!(ts.len(), 2);
        assert!((total_area(&vs, &ts) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_triangulation_covers_area() {
        let mut pts = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                pts.push(Point::new(i as f64, j as f64));
            }
        }
        let (vs, ts) = triangulate(&pts);
        assert_eq!(vs.len(), 36);
        assert_eq!(ts.len(), 50); // 2·(6-1)² for a convex grid
        assert!((total_area(&vs, &ts) - 25.0).abs() < 1e-10);
        for t in &ts {
            assert!(cross(vs[t[0]], vs[t[1]], vs[t[2]]) > 0.0);
        }
    }

    #[test]
    fn duplicate_points_merge() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, 0.0),
        ];
        let (vs, ts) = triangulate(&pts);
        assert_eq!(vs.len(), 3);
        assert_eq!(ts.len(), 1);
    }

    #[test]
    fn insertion_order_does_not_break_coverage() {
        let pts = [
            Point::new(0.3, 0.1),
            Point::new(2.0, 0.2),
            Point::new(1.1, 1.7),
            Point::new(0.2, 1.9),
            Point::new(1.0, 0.9),
            Point::new(1.8, 1.8),
        ];
        let (vs, ts) = triangulate(&pts);
        assert_eq!(vs.len(), 6);
        // Euler: for a triangulated convex polygon with h hull vertices and
        // i interior points: triangles = 2i + h − 2. Here h=4, i=2 → 6.
        assert_eq!(ts.len(), 6);
        let hull = crate::geometry::hull::convex_hull(&pts);
        assert!(
            (total_area(&vs, &ts) - crate::geometry::hull::polygon_area(&hull)).abs() < 1e-12
        );
    }

    #[test]
    fn edge_midpoint_insertion_stays_valid() {
        // Chord midpoints of regular-grid edges are the refinement workload;
        // they land exactly on existing edges.
        let mut pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        pts.push(Point::new(0.5, 0.5)); // on the diagonal of either triangulation
        let (vs, ts) = triangulate(&pts);
        assert_eq!(vs.len(), 5);
        assert_eq!(ts.len(), 4);
        assert!((total_area(&vs, &ts) - 1.0).abs() < 1e-12);
    }
}
