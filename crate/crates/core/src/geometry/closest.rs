//! Exact closest-point queries against a triangle mesh.

use super::{KdTree, Point3, TriMesh, Vec3};

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub point: Point3,
    pub face: usize,
    pub distance: f64,
    /// Distance along the surface normal at the hit; positive on the side the
    /// face winding points to.
    pub signed_distance: f64,
}

/// Closest-point locator over a mesh, indexed by triangle centroids.
#[derive(Debug)]
pub struct SurfaceLocator<'a> {
    mesh: &'a TriMesh,
    centroids: KdTree,
    max_reach: f64,
}

impl<'a> SurfaceLocator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let mut reach: f64 = 0.0;
        let centroids: Vec<Point3> = (0..mesh.faces().len())
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                let g = (a + b + c) / 3.0;
                reach = reach.max((a - g).norm()).max((b - g).norm()).max((c - g).norm());
                g
            })
            .collect();
        SurfaceLocator {
            mesh,
            centroids: KdTree::new(&centroids),
            max_reach: reach,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    pub fn closest(&self, p: &Point3) -> SurfaceHit {
        let seed = self.centroids.nearest(p, 1)[0].0;
        let mut best = self.hit_on(seed, p);
        // any triangle closer than `best` has its centroid within best + reach
        let radius = best.distance + self.max_reach;
        for (f, _) in self.centroids.within_radius(p, radius) {
            let hit = self.hit_on(f, p);
            if hit.distance < best.distance - 1e-12
                || (hit.distance <= best.distance + 1e-12 && f < best.face)
            {
                best = hit;
            }
        }
        best.signed_distance = self.side(p, &best);
        best
    }

    fn hit_on(&self, face: usize, p: &Point3) -> SurfaceHit {
        let [a, b, c] = self.mesh.triangle(face);
        let q = closest_point_on_triangle(p, &a, &b, &c);
        SurfaceHit {
            point: q,
            face,
            distance: (p - q).norm(),
            signed_distance: 0.0,
        }
    }

    /// Sign from the normals of every face that attains the minimum distance,
    /// so points facing an edge or vertex get a consistent answer.
    fn side(&self, p: &Point3, best: &SurfaceHit) -> f64 {
        let mut normal = Vec3::zeros();
        for (f, _) in self.centroids.within_radius(p, best.distance + self.max_reach) {
            let hit = self.hit_on(f, p);
            if hit.distance <= best.distance + 1e-9 {
                normal += self.mesh.face_normal(f) * self.mesh.face_area(f);
            }
        }
        let d = p - best.point;
        let s = d.dot(&normal);
        if s < 0.0 {
            -best.distance
        } else {
            best.distance
        }
    }
}
