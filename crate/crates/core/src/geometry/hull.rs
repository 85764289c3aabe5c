//! Planar convex hull and point containment.

use nalgebra::Vector2;

use super::GeometryError;

pub type Point2 = Vector2<f64>;

/// Distance tolerance (mm) under which a point on or just outside a hull
/// edge counts as inside.
pub const CONTAINMENT_TOLERANCE: f64 = 1e-9;

/// Convex polygon with counter-clockwise vertices and no collinear runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Boundary-inclusive containment within [`CONTAINMENT_TOLERANCE`].
    pub fn contains(&self, q: &Point2) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let edge = b - a;
            // signed distance of q to the edge's supporting line, positive inside
            cross(&edge, &(q - a)) / edge.norm() >= -CONTAINMENT_TOLERANCE
        })
    }
}

fn cross(a: &Point2, b: &Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Andrew's monotone chain.
pub fn convex_hull_2d(points: &[Point2]) -> Result<ConvexPolygon, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegenerateHull);
    }
    let mut sorted: Vec<Point2> = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    sorted.dedup();

    let mut hull: Vec<Point2> = Vec::with_capacity(sorted.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(sorted.iter())
        } else {
            Box::new(sorted.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if cross(&(b - a), &(p - a)) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(*p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(GeometryError::DegenerateHull);
    }
    Ok(ConvexPolygon { vertices: hull })
}
