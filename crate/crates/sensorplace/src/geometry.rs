//! Planar geometry primitives shared by the spatial modules.
//!
//! All coordinates are in a projected planar system with meters as the
//! unit; no geodesic math happens anywhere in this crate.

use serde::{Deserialize, Serialize};

/// A point in projected planar coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut bb = BoundingBox {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for p in it {
            bb.min_x = bb.min_x.min(p.x);
            bb.min_y = bb.min_y.min(p.y);
            bb.max_x = bb.max_x.max(p.x);
            bb.max_y = bb.max_y.max(p.y);
        }
        Some(bb)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// Expands every side outward by `fraction` of the box diagonal extent
    /// (per axis). Degenerate boxes (zero width or height) gain a small
    /// absolute margin so the result encloses a positive area.
    pub fn expanded(&self, fraction: f64) -> Self {
        let dx = (self.width() * fraction).max(1e-9);
        let dy = (self.height() * fraction).max(1e-9);
        BoundingBox {
            min_x: self.min_x - dx,
            min_y: self.min_y - dy,
            max_x: self.max_x + dx,
            max_y: self.max_y + dy,
        }
    }
}

/// A simple (non-self-intersecting) polygon stored as an open ring; the
/// closing edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolygonError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertex {0} has non-finite coordinates")]
    NonFiniteVertex(usize),
    #[error("polygon has zero area")]
    ZeroArea,
}

impl Polygon {
    /// Builds a polygon from a coordinate ring. A ring that repeats its
    /// first vertex at the end is accepted and the duplicate is dropped.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, PolygonError> {
        if vertices.len() >= 2 {
            let first = vertices[0];
            let last = vertices[vertices.len() - 1];
            if first == last {
                vertices.pop();
            }
        }
        if vertices.len() < 3 {
            return Err(PolygonError::TooFewVertices(vertices.len()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(PolygonError::NonFiniteVertex(i));
            }
        }
        let poly = Polygon { vertices };
        if poly.area() <= 0.0 {
            return Err(PolygonError::ZeroArea);
        }
        Ok(poly)
    }

    pub fn rectangle(bb: BoundingBox) -> Self {
        Polygon {
            vertices: vec![
                Point::new(bb.min_x, bb.min_y),
                Point::new(bb.max_x, bb.min_y),
                Point::new(bb.max_x, bb.max_y),
                Point::new(bb.min_x, bb.max_y),
            ],
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Unsigned area by the shoelace formula.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        (acc / 2.0).abs()
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of_points(&self.vertices).expect("polygon has vertices")
    }

    /// Point-in-polygon by ray casting. Points within `1e-9` meters of an
    /// edge count as inside, so boundary midpoints are never rejected by
    /// floating-point accident.
    pub fn contains(&self, p: &Point) -> bool {
        if self.distance_to_boundary_sq(p) < 1e-18 {
            return true;
        }
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[j];
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    fn distance_to_boundary_sq(&self, p: &Point) -> f64 {
        let n = self.vertices.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            best = best.min(segment_distance_sq(&a, &b, p));
        }
        best
    }
}

fn segment_distance_sq(a: &Point, b: &Point, p: &Point) -> f64 {
    let len_sq = a.distance_sq(b);
    if len_sq == 0.0 {
        return a.distance_sq(p);
    }
    let t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len_sq;
    let t = t.clamp(0.0, 1.0);
    let proj = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
    proj.distance_sq(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> Polygon {
        Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn square_area() {
        assert_relative_eq!(unit_square().area(), 1.0);
    }

    #[test]
    fn closed_ring_accepted() {
        let p = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert_relative_eq!(p.area(), 4.0);
    }

    #[test]
    fn contains_interior_and_boundary() {
        let sq = unit_square();
        assert!(sq.contains(&Point::new(0.5, 0.5)));
        assert!(sq.contains(&Point::new(0.0, 0.5)), "on-edge point");
        assert!(sq.contains(&Point::new(0.5, 0.0)), "on-edge midpoint");
        assert!(!sq.contains(&Point::new(1.5, 0.5)));
        assert!(!sq.contains(&Point::new(-0.1, -0.1)));
    }

    #[test]
    fn degenerate_polygons_rejected() {
        assert_eq!(
            Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]),
            Err(PolygonError::TooFewVertices(2))
        );
        let collinear = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
        ]);
        assert_eq!(collinear, Err(PolygonError::ZeroArea));
    }

    #[test]
    fn triangle_area() {
        let t = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(0.0, 3.0),
        ])
        .unwrap();
        assert_relative_eq!(t.area(), 6.0);
    }
}
