//! Mesh construction: triangulate data locations inside a buffered convex
//! hull, refine until edge-length targets hold, and serialize.

use super::delaunay::Triangulator;
use super::hull::{convex_hull, densify_ring, inside_convex, offset_convex, polygon_area};
use super::point::{cross, Point};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

/// Hard cap on mesh vertices; we refuse to refine past this rather than eat
/// the machine.
const MAX_VERTICES: usize = 200_000;

/// A conforming triangulation of a convex planar region.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    triangles: Vec<[usize; 3]>,
    /// True for vertices on the outer boundary.
    boundary: Vec<bool>,
}

/// Mesh construction settings, all in km.
#[derive(Debug, Clone, Copy)]
pub struct MeshSettings {
    /// Edge-length target inside the convex hull of the data.
    pub max_edge_inner: f64,
    /// Edge-length target in the buffer ring outside the hull.
    pub max_edge_outer: f64,
    /// Outward extension of the hull; mitigates boundary-variance
    /// inflation of the SPDE field. Zero disables the ring.
    pub buffer: f64,
    /// Locations closer than this to an already-kept location are dropped
    /// before triangulating; zero keeps every distinct location as a
    /// vertex. This is what separates a coarse mesh from a fine one when
    /// the data sit on a dense grid.
    pub cutoff: f64,
}

impl Default for MeshSettings {
    fn default() -> Self {
        MeshSettings {
            max_edge_inner: 100.0,
            max_edge_outer: 300.0,
            buffer: 300.0,
            cutoff: 0.0,
        }
    }
}

/// Build a mesh from data locations with an explicit edge/buffer
/// configuration and no location thinning.
pub fn build_mesh(
    locations: &[Point],
    max_edge_inner: f64,
    max_edge_outer: f64,
    buffer: f64,
) -> Result<Mesh> {
    build_mesh_with(
        locations,
        &MeshSettings {
            max_edge_inner,
            max_edge_outer,
            buffer,
            cutoff: 0.0,
        },
    )
}

/// Build a mesh from data locations.
///
/// The covered region is the convex hull of *all* locations, offset outward
/// by `buffer` (so even locations dropped by the cutoff stay strictly
/// inside coverage). Edges are split at their midpoints until every edge
/// inside the hull is at most `max_edge_inner` and every buffer edge at
/// most `max_edge_outer`. Deterministic given inputs.
pub fn build_mesh_with(locations: &[Point], settings: &MeshSettings) -> Result<Mesh> {
    if !(settings.max_edge_inner > 0.0)
        || !(settings.max_edge_outer >= settings.max_edge_inner)
        || !(settings.buffer >= 0.0)
        || !(settings.cutoff >= 0.0)
    {
        return Err(Error::ParameterRange(format!(
            "mesh settings require 0 < max_edge_inner ≤ max_edge_outer, buffer ≥ 0, cutoff ≥ 0 \
             (got inner {}, outer {}, buffer {}, cutoff {})",
            settings.max_edge_inner, settings.max_edge_outer, settings.buffer, settings.cutoff
        )));
    }
    if locations.len() < 3 {
        return Err(Error::DegenerateDomain(format!(
            "need at least 3 locations, got {}",
            locations.len()
        )));
    }
    for (i, p) in locations.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::InvalidCoordinate(format!(
                "location {i} has non-finite coordinates ({}, {})",
                p.x, p.y
            )));
        }
    }
    let hull = convex_hull(locations);
    if hull.is_empty() {
        return Err(Error::DegenerateDomain(
            "locations are collinear; the domain has no area".into(),
        ));
    }

    let kept = thin_locations(locations, settings.cutoff);
    let ring = if settings.buffer > 0.0 {
        densify_ring(
            &offset_convex(&hull, settings.buffer),
            settings.max_edge_outer,
        )
    } else {
        Vec::new()
    };

    let (min, max) = bounding_box(ring.iter().chain(kept.iter()));
    let scale = (max.x - min.x).max(max.y - min.y).max(1e-6);
    let mut tr = Triangulator::new(min, max);
    for &p in &ring {
        tr.insert(p);
    }
    for &p in &kept {
        tr.insert(p);
    }

    // Midpoint refinement, longest edges first within each pass.
    let hull_slack = 1e-9 * scale * scale;
    loop {
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut queue: Vec<(f64, Point)> = Vec::new();
        for t in tr.real_triangles() {
            for k in 0..3 {
                let (u, v) = ordered(t[k], t[(k + 1) % 3]);
                if !seen.insert((u, v)) {
                    continue;
                }
                let a = tr.points()[u];
                let b = tr.points()[v];
                let len = a.dist(b);
                let mid = a.midpoint(b);
                let limit = if inside_convex(&hull, mid, hull_slack) {
                    settings.max_edge_inner
                } else {
                    settings.max_edge_outer
                };
                if len > limit * (1.0 + 1e-9) {
                    queue.push((len, mid));
                }
            }
        }
        if queue.is_empty() {
            break;
        }
        queue.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.x.partial_cmp(&b.1.x).unwrap())
                .then(a.1.y.partial_cmp(&b.1.y).unwrap())
        });
        let before = tr.points().len();
        if before + queue.len() > MAX_VERTICES {
            return Err(Error::SizeGuard(before + queue.len(), MAX_VERTICES));
        }
        for &(_, mid) in &queue {
            tr.insert(mid);
        }
        if tr.points().len() == before {
            // Every candidate merged into an existing vertex; nothing can
            // improve further.
            break;
        }
    }

    let (vertices, triangles) = tr.finish();
    Mesh::from_parts(vertices, triangles)
}

/// Greedy thinning: keep a location when it is at least `cutoff` away from
/// every location kept so far, scanning in input order.
fn thin_locations(locations: &[Point], cutoff: f64) -> Vec<Point> {
    let tol2 = cutoff.max(1e-9) * cutoff.max(1e-9);
    let mut kept: Vec<Point> = Vec::new();
    for &p in locations {
        if kept.iter().all(|q| q.dist2(p) >= tol2) {
            kept.push(p);
        }
    }
    kept
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn bounding_box<'a>(points: impl Iterator<Item = &'a Point>) -> (Point, Point) {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    (min, max)
}

impl Mesh {
    /// Assemble a mesh from raw parts, checking the structural invariants
    /// and deriving boundary flags.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        for (i, p) in vertices.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidCoordinate(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        let n = vertices.len();
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(Error::Inconsistency(format!(
                        "triangle {t} references vertex {v} of {n}"
                    )));
                }
            }
            if cross(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) <= 0.0 {
                return Err(Error::DegenerateDomain(format!(
                    "triangle {t} has non-positive area"
                )));
            }
            for k in 0..3 {
                *edge_count
                    .entry(ordered(tri[k], tri[(k + 1) % 3]))
                    .or_insert(0) += 1;
            }
        }
        let mut boundary = vec![false; n];
        for (&(u, v), &count) in &edge_count {
            if count == 1 {
                boundary[u] = true;
                boundary[v] = true;
            } else if count > 2 {
                return Err(Error::Inconsistency(format!(
                    "edge ({u}, {v}) is shared by {count} triangles"
                )));
            }
        }
        Ok(Mesh {
            vertices,
            triangles,
            boundary,
        })
    }

    /// Regular grid over `[0, width] × [0, height]` with `nx × ny` vertices,
    /// each cell split along its up-right diagonal. Handy for tests and
    /// synthetic studies where mesh construction is not the point.
    pub fn structured(nx: usize, ny: usize, width: f64, height: f64) -> Result<Mesh> {
        if nx < 2 || ny < 2 || !(width > 0.0) || !(height > 0.0) {
            return Err(Error::ParameterRange(format!(
                "structured mesh needs nx, ny ≥ 2 and positive extent (got {nx}×{ny}, {width}×{height})"
            )));
        }
        let mut vertices = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                vertices.push(Point::new(
                    width * i as f64 / (nx - 1) as f64,
                    height * j as f64 / (ny - 1) as f64,
                ));
            }
        }
        let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let a = j * nx + i;
                let b = a + 1;
                let c = a + 1 + nx;
                let d = a + nx;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Mesh::from_parts(vertices, triangles)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * cross(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Undirected edge list, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                set.insert(ordered(tri[k], tri[(k + 1) % 3]));
            }
        }
        set.into_iter().collect()
    }

    /// Diameter of the covered region: the largest vertex-to-vertex
    /// distance, computed over hull vertices.
    pub fn diameter(&self) -> f64 {
        let hull = convex_hull(&self.vertices);
        let pts: &[Point] = if hull.is_empty() { &self.vertices } else { &hull };
        let mut best: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(pts[i].dist2(pts[j]));
            }
        }
        best.sqrt()
    }

    /// Area of the convex region covered by the triangulation.
    pub fn hull_area(&self) -> f64 {
        polygon_area(&convex_hull(&self.vertices))
    }

    /// Plain-text serialization: `n_vertices n_triangles` header, then one
    /// `x y boundary_flag` line per vertex, then one `i j k` line per
    /// triangle (0-based).
    pub fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vertices.len(), self.triangles.len())?;
        for (p, &b) in self.vertices.iter().zip(&self.boundary) {
            writeln!(w, "{:.17e} {:.17e} {}", p.x, p.y, u8::from(b))?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("mesh text is ASCII")
    }

    pub fn read_text(r: &mut impl BufRead) -> Result<Mesh> {
        let mut lines = r.lines().enumerate();
        let (n_v, n_t) = {
            let (ln, line) = next_line(&mut lines)?;
            let mut it = line.split_whitespace();
            let n_v = parse_field(&mut it, ln, "vertex count")?;
            let n_t = parse_field(&mut it, ln, "triangle count")?;
            (n_v, n_t)
        };
        let mut vertices = Vec::with_capacity(n_v);
        let mut flags = Vec::with_capacity(n_v);
        for _ in 0..n_v {
            let (ln, line) = next_line(&mut lines)?;
            let mut it = line.split_whitespace();
            let x: f64 = parse_field(&mut it, ln, "x")?;
            let y: f64 = parse_field(&mut it, ln, "y")?;
            let flag: u8 = parse_field(&mut it, ln, "boundary flag")?;
            vertices.push(Point::new(x, y));
            flags.push(flag != 0);
        }
        let mut triangles = Vec::with_capacity(n_t);
        for _ in 0..n_t {
            let (ln, line) = next_line(&mut lines)?;
            let mut it = line.split_whitespace();
            let i: usize = parse_field(&mut it, ln, "i")?;
            let j: usize = parse_field(&mut it, ln, "j")?;
            let k: usize = parse_field(&mut it, ln, "k")?;
            triangles.push([i, j, k]);
        }
        let mesh = Mesh::from_parts(vertices, triangles)?;
        // Recomputed flags are authoritative; reject files that disagree.
        if mesh.boundary != flags {
            return Err(Error::Inconsistency(
                "stored boundary flags disagree with the triangulation".into(),
            ));
        }
        Ok(mesh)
    }

    pub fn parse_text(text: &str) -> Result<Mesh> {
        Mesh::read_text(&mut text.as_bytes())
    }
}

fn next_line(
    lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>,
) -> Result<(usize, String)> {
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io("<mesh text>", e))?;
        if !line.trim().is_empty() {
            return Ok((idx + 1, line));
        }
    }
    Err(Error::Parse {
        line: 0,
        message: "unexpected end of mesh text".into(),
    })
}

fn parse_field<T: std::str::FromStr>(
    it: &mut std::str::SplitWhitespace,
    line: usize,
    what: &str,
) -> Result<T> {
    it.next()
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("missing {what}"),
        })?
        .parse()
        .map_err(|_| Error::Parse {
            line,
            message: format!("unreadable {what}"),
        })
}
