//! Planar points and the lon/lat → km projection.

use crate::error::{Error, Result};

/// Kilometers per degree of latitude (and of longitude at the equator).
pub const KM_PER_DEGREE: f64 = 111.32;

/// A point in planar kilometer coordinates (east, north).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

/// Twice the signed area of triangle (a, b, c); positive when
/// counterclockwise.
pub(crate) fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Equirectangular projection of geographic coordinates onto the plane:
/// `x = 111.32·cos(ref_lat)·lon`, `y = 111.32·lat`, both in km. Adequate at
/// continental scale for the mid-latitudes this engine targets; the
/// reference latitude should sit near the domain center.
pub fn project_lonlat(lon: f64, lat: f64, ref_lat: f64) -> Result<Point> {
    if !lon.is_finite() || !lat.is_finite() || !ref_lat.is_finite() {
        return Err(Error::InvalidCoordinate(format!(
            "non-finite lon/lat ({lon}, {lat}, ref {ref_lat})"
        )));
    }
    if lat.abs() >= 90.0 {
        return Err(Error::InvalidCoordinate(format!(
            "latitude {lat} out of (-90, 90)"
        )));
    }
    let x = KM_PER_DEGREE * ref_lat.to_radians().cos() * lon;
    let y = KM_PER_DEGREE * lat;
    Ok(Point::new(x, y))
}
