//! Cone-point graphs for flat surfaces with conic singularities.
//!
//! A surface is modeled as a set of cone points (each carrying a circle
//! link whose circumference is the cone angle) joined by straight geodesic
//! segments. Two builders are provided: the double of a simple planar
//! polygon, and the double of the exterior of a set of polygonal obstacles.
//!
//! Link-coordinate convention (shared by both builders): at each vertex the
//! coordinate 0 points along the lower-indexed incident edge, away from the
//! vertex; copy-1 directions fill the arc [0, beta] (beta = the copy-1
//! angular sector at the vertex) and copy-2 directions are the mirror
//! images alpha - theta.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Absolute tolerance (radians) for classifying a transition as geometric.
pub const GEOMETRIC_TOL: f64 = 1e-9;

/// Angular tolerance below which consecutive polygon vertices count as collinear.
const COLLINEAR_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not counterclockwise (signed area {0})")]
    NotCounterclockwise(f64),
    #[error("polygon is not simple: edges {0} and {1} intersect")]
    NonSimplePolygon(usize, usize),
    #[error("vertex {0} is collinear with its neighbours (interior angle pi would give a fake cone point)")]
    CollinearVertex(usize),
    #[error("obstacles {0} and {1} intersect or overlap")]
    IntersectingObstacles(usize, usize),
    #[error("degenerate vertex: {0}")]
    DegenerateVertex(String),
    #[error("link circumference must be positive, got {0}")]
    NonPositiveCircumference(f64),
    #[error("segment length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("segment endpoint references unknown cone point {0}")]
    UnknownConePoint(u32),
    #[error("duplicate cone point id {0}")]
    DuplicateConePoint(u32),
    #[error("duplicate segment id {0}")]
    DuplicateSegment(u32),
}

/// Circle link of a cone point; the circumference is the cone angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkCircle {
    circumference: f64,
}

impl LinkCircle {
    pub fn new(circumference: f64) -> Result<Self, GeometryError> {
        if !(circumference > 0.0) || !circumference.is_finite() {
            return Err(GeometryError::NonPositiveCircumference(circumference));
        }
        Ok(Self { circumference })
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    /// Reduce a coordinate into [0, circumference).
    pub fn reduce(&self, theta: f64) -> f64 {
        let r = theta.rem_euclid(self.circumference);
        // rem_euclid can return the modulus itself when theta is a tiny
        // negative number
        if r >= self.circumference {
            0.0
        } else {
            r
        }
    }

    /// Arc distance between two coordinates; always in [0, circumference/2].
    pub fn distance(&self, theta1: f64, theta2: f64) -> f64 {
        let d = (self.reduce(theta1) - self.reduce(theta2)).abs();
        d.min(self.circumference - d)
    }
}

/// Arc distance on a circle of the given circumference.
pub fn link_distance(link: &LinkCircle, theta1: f64, theta2: f64) -> f64 {
    link.distance(theta1, theta2)
}

/// Classification of a single passage through a cone point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionClass {
    /// Entry/exit link points are exactly arc distance pi apart: the limit
    /// of geodesics missing the cone point.
    Geometric,
    /// Diffractive but not geometric; carries the weaker singularity.
    StrictlyDiffractive,
}

/// Classify a transition by the arc distance between entry and exit points.
pub fn classify_transition(
    link: &LinkCircle,
    theta_in: f64,
    theta_out: f64,
    tol: f64,
) -> TransitionClass {
    if (link.distance(theta_in, theta_out) - PI).abs() <= tol {
        TransitionClass::Geometric
    } else {
        TransitionClass::StrictlyDiffractive
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConePoint {
    pub id: u32,
    pub link: LinkCircle,
    /// Planar position; present for graphs produced by the planar builders.
    pub position: Option<[f64; 2]>,
}

/// One end of a segment: which cone point it touches and where on its link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentEnd {
    pub cone_point: u32,
    pub theta: f64,
}

/// Undirected geodesic segment joining two cone points (possibly the same one).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicSegment {
    pub id: u32,
    pub a: SegmentEnd,
    pub b: SegmentEnd,
    pub length: f64,
}

impl GeodesicSegment {
    /// The end touching the given cone point when arriving with the given
    /// direction flag: `forward` means the a->b traversal.
    pub fn end(&self, forward: bool) -> (&SegmentEnd, &SegmentEnd) {
        if forward {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeGraph {
    cone_points: Vec<ConePoint>,
    segments: Vec<GeodesicSegment>,
    dimension: u32,
}

impl ConeGraph {
    pub fn new(
        mut cone_points: Vec<ConePoint>,
        mut segments: Vec<GeodesicSegment>,
    ) -> Result<Self, GeometryError> {
        cone_points.sort_by_key(|p| p.id);
        segments.sort_by_key(|s| s.id);
        let mut ids = HashMap::new();
        for p in &cone_points {
            if ids.insert(p.id, ()).is_some() {
                return Err(GeometryError::DuplicateConePoint(p.id));
            }
        }
        let mut seg_ids = HashMap::new();
        for s in &mut segments {
            if seg_ids.insert(s.id, ()).is_some() {
                return Err(GeometryError::DuplicateSegment(s.id));
            }
            if !(s.length > 0.0) || !s.length.is_finite() {
                return Err(GeometryError::NonPositiveLength(s.length));
            }
            for end in [s.a.cone_point, s.b.cone_point] {
                if !ids.contains_key(&end) {
                    return Err(GeometryError::UnknownConePoint(end));
                }
            }
        }
        // Reduce end coordinates into the link's fundamental interval.
        let links: HashMap<u32, LinkCircle> =
            cone_points.iter().map(|p| (p.id, p.link)).collect();
        for s in &mut segments {
            s.a.theta = links[&s.a.cone_point].reduce(s.a.theta);
            s.b.theta = links[&s.b.cone_point].reduce(s.b.theta);
        }
        Ok(Self {
            cone_points,
            segments,
            dimension: 2,
        })
    }

    pub fn cone_points(&self) -> &[ConePoint] {
        &self.cone_points
    }

    pub fn segments(&self) -> &[GeodesicSegment] {
        &self.segments
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn cone_point(&self, id: u32) -> Option<&ConePoint> {
        self.cone_points.iter().find(|p| p.id == id)
    }

    pub fn segment(&self, id: u32) -> Option<&GeodesicSegment> {
        self.segments.iter().find(|s| s.id == id)
    }

    /// Content hash of the canonical JSON form; used as a cache key.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("graph serialization cannot fail");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// JSON surface description accepted by every CLI entry point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SurfaceSpec {
    DoubledPolygon {
        vertices: Vec<[f64; 2]>,
    },
    Exterior {
        obstacles: Vec<Vec<[f64; 2]>>,
    },
    ConeGraph {
        cone_points: Vec<ConePointSpec>,
        segments: Vec<SegmentSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConePointSpec {
    pub id: u32,
    pub circumference: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub a: u32,
    pub theta_a: f64,
    pub b: u32,
    pub theta_b: f64,
    pub length: f64,
}

impl SurfaceSpec {
    pub fn to_graph(&self) -> Result<ConeGraph, GeometryError> {
        match self {
            SurfaceSpec::DoubledPolygon { vertices } => build_doubled_polygon(vertices),
            SurfaceSpec::Exterior { obstacles } => build_planar_exterior(obstacles),
            SurfaceSpec::ConeGraph {
                cone_points,
                segments,
            } => {
                let points = cone_points
                    .iter()
                    .map(|p| {
                        Ok(ConePoint {
                            id: p.id,
                            link: LinkCircle::new(p.circumference)?,
                            position: p.position,
                        })
                    })
                    .collect::<Result<Vec<_>, GeometryError>>()?;
                let segs = segments
                    .iter()
                    .enumerate()
                    .map(|(i, s)| GeodesicSegment {
                        id: i as u32,
                        a: SegmentEnd {
                            cone_point: s.a,
                            theta: s.theta_a,
                        },
                        b: SegmentEnd {
                            cone_point: s.b,
                            theta: s.theta_b,
                        },
                        length: s.length,
                    })
                    .collect();
                ConeGraph::new(points, segs)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Planar helpers
// ---------------------------------------------------------------------------

fn sub(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [p[0] - q[0], p[1] - q[1]]
}

fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn norm(u: [f64; 2]) -> f64 {
    u[0].hypot(u[1])
}

fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        a += cross(p, q);
    }
    0.5 * a
}

/// Proper crossing of open segments (shared endpoints do not count).
fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(sub(p2, p1), sub(q1, p1));
    let d2 = cross(sub(p2, p1), sub(q2, p1));
    let d3 = cross(sub(q2, q1), sub(p1, q1));
    let d4 = cross(sub(q2, q1), sub(p2, q1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    // Collinear overlap counts as a crossing for simplicity checks.
    let scale = norm(sub(p2, p1)).max(norm(sub(q2, q1)));
    let tol = 1e-12 * scale * scale;
    if d1.abs() <= tol && d2.abs() <= tol {
        // All four points collinear: overlap iff the projections overlap.
        let dir = sub(p2, p1);
        let (a0, a1) = (0.0, dot(dir, dir));
        let b0 = dot(sub(q1, p1), dir);
        let b1 = dot(sub(q2, p1), dir);
        let (lo, hi) = if b0 < b1 { (b0, b1) } else { (b1, b0) };
        return hi > a0 + tol && lo < a1 - tol;
    }
    false
}

fn point_on_open_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return false;
    }
    let t = dot(sub(p, a), ab) / len2;
    if t <= 1e-12 || t >= 1.0 - 1e-12 {
        return false;
    }
    let perp = cross(ab, sub(p, a)).abs() / len2.sqrt();
    perp <= 1e-9 * len2.sqrt()
}

fn point_in_polygon(p: [f64; 2], vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn check_simple(vertices: &[[f64; 2]]) -> Result<(), GeometryError> {
    let n = vertices.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // Skip adjacent edges (they share a vertex).
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (p1, p2) = (vertices[i], vertices[(i + 1) % n]);
            let (q1, q2) = (vertices[j], vertices[(j + 1) % n]);
            if segments_cross(p1, p2, q1, q2) {
                return Err(GeometryError::NonSimplePolygon(i, j));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || (i + 1) % n == j {
                continue;
            }
            if point_on_open_segment(vertices[j], vertices[i], vertices[(i + 1) % n]) {
                return Err(GeometryError::NonSimplePolygon(i, j));
            }
        }
    }
    Ok(())
}

/// Interior angle at vertex `i` of a counterclockwise simple polygon,
/// together with the direction angles toward the next and previous vertex.
fn interior_angle(vertices: &[[f64; 2]], i: usize) -> (f64, f64, f64) {
    let n = vertices.len();
    let v = vertices[i];
    let to_next = sub(vertices[(i + 1) % n], v);
    let to_prev = sub(vertices[(i + n - 1) % n], v);
    let phi_next = to_next[1].atan2(to_next[0]);
    let phi_prev = to_prev[1].atan2(to_prev[0]);
    let beta = (phi_prev - phi_next).rem_euclid(2.0 * PI);
    (beta, phi_next, phi_prev)
}

// ---------------------------------------------------------------------------
// Doubled polygon builder
// ---------------------------------------------------------------------------

/// Build the double of a simple counterclockwise polygon: a flat closed
/// surface with one cone point of angle `2 * interior angle` per vertex.
///
/// Segments are the polygon edges (shared by both copies) and, for every
/// vertex pair whose open chord lies strictly inside the polygon, two chord
/// segments (one per copy). Copy-1 link coordinates fill [0, interior
/// angle] measured from the lower-indexed incident edge; copy-2
/// coordinates are the mirror images alpha - theta.
pub fn build_doubled_polygon(vertices: &[[f64; 2]]) -> Result<ConeGraph, GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices(n));
    }
    let area = signed_area(vertices);
    if area <= 0.0 {
        return Err(GeometryError::NotCounterclockwise(area));
    }
    check_simple(vertices)?;

    let mut angles = Vec::with_capacity(n);
    for i in 0..n {
        let (beta, phi_next, phi_prev) = interior_angle(vertices, i);
        if (beta - PI).abs() <= COLLINEAR_TOL {
            return Err(GeometryError::CollinearVertex(i));
        }
        angles.push((beta, phi_next, phi_prev));
    }

    let mut cone_points = Vec::with_capacity(n);
    for (i, &(beta, _, _)) in angles.iter().enumerate() {
        cone_points.push(ConePoint {
            id: i as u32,
            link: LinkCircle::new(2.0 * beta)?,
            position: Some(vertices[i]),
        });
    }

    // Copy-1 coordinate of the direction `d` at vertex `i`; in [0, beta].
    let coord = |i: usize, d: [f64; 2]| -> f64 {
        let (beta, phi_next, _) = angles[i];
        let phi = d[1].atan2(d[0]);
        let raw = (phi - phi_next).rem_euclid(2.0 * PI);
        // Snap values that wrapped to just below 2*pi back to 0.
        let raw = if raw > beta + PI { raw - 2.0 * PI } else { raw };
        let tilde = raw.clamp(0.0, beta);
        if i == 0 {
            // Reference edge is edge 0 (toward the next vertex).
            tilde
        } else {
            // Reference edge is edge i-1 (toward the previous vertex).
            beta - tilde
        }
    };

    let mut segments = Vec::new();
    let mut next_id = 0u32;
    for i in 0..n {
        let j = (i + 1) % n;
        let d_ij = sub(vertices[j], vertices[i]);
        let len = norm(d_ij);
        if len == 0.0 {
            return Err(GeometryError::DegenerateVertex(format!(
                "vertices {i} and {j} coincide"
            )));
        }
        segments.push(GeodesicSegment {
            id: next_id,
            a: SegmentEnd {
                cone_point: i as u32,
                theta: coord(i, d_ij),
            },
            b: SegmentEnd {
                cone_point: j as u32,
                theta: coord(j, sub(vertices[i], vertices[j])),
            },
            length: len,
        });
        next_id += 1;
    }

    // Interior chords: strictly inside, no grazing through edges or vertices.
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue; // cyclically adjacent
            }
            if !chord_strictly_inside(vertices, &angles, i, j) {
                continue;
            }
            let d_ij = sub(vertices[j], vertices[i]);
            let len = norm(d_ij);
            let th_i = coord(i, d_ij);
            let th_j = coord(j, sub(vertices[i], vertices[j]));
            let (alpha_i, alpha_j) = (2.0 * angles[i].0, 2.0 * angles[j].0);
            // Copy 1 then copy 2.
            segments.push(GeodesicSegment {
                id: next_id,
                a: SegmentEnd {
                    cone_point: i as u32,
                    theta: th_i,
                },
                b: SegmentEnd {
                    cone_point: j as u32,
                    theta: th_j,
                },
                length: len,
            });
            segments.push(GeodesicSegment {
                id: next_id + 1,
                a: SegmentEnd {
                    cone_point: i as u32,
                    theta: alpha_i - th_i,
                },
                b: SegmentEnd {
                    cone_point: j as u32,
                    theta: alpha_j - th_j,
                },
                length: len,
            });
            next_id += 2;
        }
    }

    ConeGraph::new(cone_points, segments)
}

/// A chord counts only if its open interior lies strictly inside the
/// polygon; grazing chords hit a third cone point and are rejected.
fn chord_strictly_inside(
    vertices: &[[f64; 2]],
    angles: &[(f64, f64, f64)],
    i: usize,
    j: usize,
) -> bool {
    let n = vertices.len();
    let (p, q) = (vertices[i], vertices[j]);
    // Local test: the chord must leave each endpoint strictly into the
    // interior sector.
    for (from, to) in [(i, j), (j, i)] {
        let d = sub(vertices[to], vertices[from]);
        let (beta, phi_next, _) = angles[from];
        let phi = d[1].atan2(d[0]);
        let raw = (phi - phi_next).rem_euclid(2.0 * PI);
        if raw <= 1e-12 || raw >= beta - 1e-12 {
            return false;
        }
    }
    for k in 0..n {
        let l = (k + 1) % n;
        if k == i || k == j || l == i || l == j {
            // Edges incident to an endpoint: only a collinear overlap could
            // hurt, and that is excluded by the sector test above.
            continue;
        }
        if segments_cross(p, q, vertices[k], vertices[l]) {
            return false;
        }
    }
    for (k, &v) in vertices.iter().enumerate() {
        if k != i && k != j && point_on_open_segment(v, p, q) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Planar exterior builder
// ---------------------------------------------------------------------------

/// Build the double of the region exterior to one or more disjoint simple
/// polygonal obstacles. Cone angles are twice the exterior angles; segments
/// join mutually visible vertices (two copies each, except obstacle edges
/// which are shared by both copies).
pub fn build_planar_exterior(obstacles: &[Vec<[f64; 2]>]) -> Result<ConeGraph, GeometryError> {
    if obstacles.is_empty() {
        return Err(GeometryError::DegenerateVertex(
            "no obstacles given".to_string(),
        ));
    }
    // Normalize to counterclockwise and validate each obstacle.
    let mut polys: Vec<Vec<[f64; 2]>> = Vec::with_capacity(obstacles.len());
    for obs in obstacles {
        if obs.len() < 3 {
            return Err(GeometryError::TooFewVertices(obs.len()));
        }
        let mut poly = obs.clone();
        if signed_area(&poly) < 0.0 {
            poly.reverse();
        }
        check_simple(&poly)?;
        polys.push(poly);
    }
    // Disjointness: no edge crossings between obstacles and no containment.
    for a in 0..polys.len() {
        for b in (a + 1)..polys.len() {
            let (pa, pb) = (&polys[a], &polys[b]);
            for i in 0..pa.len() {
                for j in 0..pb.len() {
                    if segments_cross(
                        pa[i],
                        pa[(i + 1) % pa.len()],
                        pb[j],
                        pb[(j + 1) % pb.len()],
                    ) {
                        return Err(GeometryError::IntersectingObstacles(a, b));
                    }
                }
            }
            if point_in_polygon(pb[0], pa) || point_in_polygon(pa[0], pb) {
                return Err(GeometryError::IntersectingObstacles(a, b));
            }
        }
    }

    // Per-vertex data: global id, exterior angle e, direction angles.
    struct VertexInfo {
        poly: usize,
        index: usize,
        position: [f64; 2],
        ext_angle: f64,
        phi_prev: f64,
    }
    let mut verts: Vec<VertexInfo> = Vec::new();
    for (pi, poly) in polys.iter().enumerate() {
        for i in 0..poly.len() {
            let (beta, _, phi_prev) = interior_angle(poly, i);
            if (beta - PI).abs() <= COLLINEAR_TOL {
                return Err(GeometryError::DegenerateVertex(format!(
                    "obstacle {pi} vertex {i} is collinear with its neighbours"
                )));
            }
            verts.push(VertexInfo {
                poly: pi,
                index: i,
                position: poly[i],
                ext_angle: 2.0 * PI - beta,
                phi_prev,
            });
        }
    }

    let mut cone_points = Vec::with_capacity(verts.len());
    for (gid, v) in verts.iter().enumerate() {
        cone_points.push(ConePoint {
            id: gid as u32,
            link: LinkCircle::new(2.0 * v.ext_angle)?,
            position: Some(v.position),
        });
    }

    // Exterior-sector coordinate of direction `d` at global vertex `g`,
    // measured so that coordinate 0 follows the lower-indexed incident edge.
    let ext_coord = |g: usize, d: [f64; 2]| -> Option<f64> {
        let v = &verts[g];
        let phi = d[1].atan2(d[0]);
        // Exterior sweep runs counterclockwise from the ray toward the
        // previous vertex.
        let raw = (phi - v.phi_prev).rem_euclid(2.0 * PI);
        let e = v.ext_angle;
        let raw = if raw > e + PI { raw - 2.0 * PI } else { raw };
        if !(-1e-9..=e + 1e-9).contains(&raw) {
            return None; // direction points into the obstacle
        }
        let tilde = raw.clamp(0.0, e);
        if v.index == 0 {
            // Reference edge is edge 0 (toward the next vertex).
            Some(e - tilde)
        } else {
            Some(tilde)
        }
    };

    let mut segments: Vec<GeodesicSegment> = Vec::new();
    let mut next_id = 0u32;
    for gi in 0..verts.len() {
        for gj in (gi + 1)..verts.len() {
            let (vi, vj) = (&verts[gi], &verts[gj]);
            let (p, q) = (vi.position, vj.position);
            let d_ij = sub(q, p);
            let len = norm(d_ij);
            let same_poly = vi.poly == vj.poly;
            let np = polys[vi.poly].len();
            let adjacent = same_poly
                && ((vj.index == (vi.index + 1) % np) || (vi.index == (vj.index + 1) % np));

            let th_i = ext_coord(gi, d_ij);
            let th_j = ext_coord(gj, sub(p, q));
            let (th_i, th_j) = match (th_i, th_j) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };

            if !adjacent {
                // Strict interior of the exterior sector at both ends.
                let strict = |g: usize, th_raw: f64| -> bool {
                    let e = verts[g].ext_angle;
                    let t = if verts[g].index == 0 { e - th_raw } else { th_raw };
                    t > 1e-12 && t < e - 1e-12
                };
                if !strict(gi, th_i) || !strict(gj, th_j) {
                    continue;
                }
                // Occlusion: no obstacle edge crossed, no vertex grazed.
                let mut blocked = false;
                'outer: for (pk, poly) in polys.iter().enumerate() {
                    for k in 0..poly.len() {
                        let l = (k + 1) % poly.len();
                        let shares = |pv: usize, idx: usize| pv == pk && idx < poly.len();
                        let incident = (shares(vi.poly, vi.index)
                            && vi.poly == pk
                            && (k == vi.index || l == vi.index))
                            || (shares(vj.poly, vj.index)
                                && vj.poly == pk
                                && (k == vj.index || l == vj.index));
                        if !incident && segments_cross(p, q, poly[k], poly[l]) {
                            blocked = true;
                            break 'outer;
                        }
                    }
                }
                if !blocked {
                    for (g, v) in verts.iter().enumerate() {
                        if g != gi && g != gj && point_on_open_segment(v.position, p, q) {
                            blocked = true;
                            break;
                        }
                    }
                }
                if blocked {
                    continue;
                }
            }

            let alpha_i = 2.0 * verts[gi].ext_angle;
            let alpha_j = 2.0 * verts[gj].ext_angle;
            segments.push(GeodesicSegment {
                id: next_id,
                a: SegmentEnd {
                    cone_point: gi as u32,
                    theta: th_i,
                },
                b: SegmentEnd {
                    cone_point: gj as u32,
                    theta: th_j,
                },
                length: len,
            });
            next_id += 1;
            if !adjacent {
                // Second copy with mirrored coordinates.
                segments.push(GeodesicSegment {
                    id: next_id,
                    a: SegmentEnd {
                        cone_point: gi as u32,
                        theta: alpha_i - th_i,
                    },
                    b: SegmentEnd {
                        cone_point: gj as u32,
                        theta: alpha_j - th_j,
                    },
                    length: len,
                });
                next_id += 1;
            }
        }
    }

    ConeGraph::new(cone_points, segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    #[test]
    fn link_distance_basic() {
        let l = LinkCircle::new(2.0 * PI).unwrap();
        assert_relative_eq!(l.distance(0.0, PI), PI);
        let l = LinkCircle::new(PI).unwrap();
        assert_relative_eq!(l.distance(0.0, 0.9 * PI), 0.1 * PI, max_relative = 1e-12);
        let l = LinkCircle::new(4.0 * PI).unwrap();
        assert_relative_eq!(l.distance(0.0, 3.0 * PI), PI);
    }

    #[test]
    fn classify_basic() {
        let l = LinkCircle::new(4.0 * PI).unwrap();
        assert_eq!(
            classify_transition(&l, 0.0, PI, GEOMETRIC_TOL),
            TransitionClass::Geometric
        );
        assert_eq!(
            classify_transition(&l, 1.3, 1.3, GEOMETRIC_TOL),
            TransitionClass::StrictlyDiffractive
        );
        // alpha < 2*pi: max link distance alpha/2 < pi.
        let l = LinkCircle::new(1.7 * PI).unwrap();
        for k in 0..20 {
            let th = 1.7 * PI * k as f64 / 20.0;
            assert_eq!(
                classify_transition(&l, 0.0, th, GEOMETRIC_TOL),
                TransitionClass::StrictlyDiffractive
            );
        }
    }

    #[test]
    fn doubled_unit_square() {
        let g = build_doubled_polygon(&unit_square()).unwrap();
        assert_eq!(g.cone_points().len(), 4);
        for p in g.cone_points() {
            assert_relative_eq!(p.link.circumference(), PI, max_relative = 1e-12);
        }
        // 4 edges + 2 diagonals * 2 copies
        assert_eq!(g.segments().len(), 8);
        let mut edge_count = 0;
        let mut chord_count = 0;
        for s in g.segments() {
            if (s.length - 1.0).abs() < 1e-12 {
                edge_count += 1;
            } else if (s.length - 2f64.sqrt()).abs() < 1e-12 {
                chord_count += 1;
            } else {
                panic!("unexpected segment length {}", s.length);
            }
        }
        assert_eq!(edge_count, 4);
        assert_eq!(chord_count, 4);
    }

    #[test]
    fn doubled_triangle_angles() {
        // angles (0.4, 0.35, 0.25) * pi
        let a = 0.4 * PI;
        let b = 0.35 * PI;
        // Place the triangle: vertex A at origin, B at (1, 0); angle at A is
        // `a`, angle at B is `b`.
        let c_dir = [a.cos(), a.sin()];
        // Side length from the law of sines.
        let gamma = PI - a - b;
        let ac = b.sin() / gamma.sin();
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [ac * c_dir[0], ac * c_dir[1]]];
        let g = build_doubled_polygon(&verts).unwrap();
        let mut alphas: Vec<f64> = g
            .cone_points()
            .iter()
            .map(|p| p.link.circumference())
            .collect();
        alphas.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_relative_eq!(alphas[0], 0.5 * PI, max_relative = 1e-9);
        assert_relative_eq!(alphas[1], 0.7 * PI, max_relative = 1e-9);
        assert_relative_eq!(alphas[2], 0.8 * PI, max_relative = 1e-9);
    }

    #[test]
    fn straight_vertex_rejected() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 2.0]];
        assert!(matches!(
            build_doubled_polygon(&verts),
            Err(GeometryError::CollinearVertex(_))
        ));
    }

    #[test]
    fn non_simple_rejected() {
        let verts = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let res = build_doubled_polygon(&verts);
        assert!(matches!(
            res,
            Err(GeometryError::NonSimplePolygon(_, _)) | Err(GeometryError::NotCounterclockwise(_))
        ));
    }

    #[test]
    fn gauss_bonnet_deficit() {
        for verts in [
            unit_square(),
            vec![[0.0, 0.0], [2.0, 0.0], [1.3, 1.7]],
            // Non-convex hexagon
            vec![
                [0.0, 0.0],
                [3.0, 0.0],
                [3.0, 2.0],
                [1.5, 0.8],
                [1.0, 2.0],
                [0.0, 2.0],
            ],
        ] {
            let g = build_doubled_polygon(&verts).unwrap();
            let deficit: f64 = g
                .cone_points()
                .iter()
                .map(|p| 2.0 * PI - p.link.circumference())
                .sum();
            assert_relative_eq!(deficit, 4.0 * PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn exterior_unit_square() {
        let g = build_planar_exterior(&[unit_square()]).unwrap();
        assert_eq!(g.cone_points().len(), 4);
        for p in g.cone_points() {
            assert_relative_eq!(p.link.circumference(), 3.0 * PI, max_relative = 1e-12);
        }
        // 4 edges only: diagonals pass through the obstacle interior.
        assert_eq!(g.segments().len(), 4);
    }

    #[test]
    fn exterior_two_squares() {
        let far: Vec<[f64; 2]> = unit_square()
            .iter()
            .map(|p| [p[0] + 5.0, p[1]])
            .collect();
        let g = build_planar_exterior(&[unit_square(), far]).unwrap();
        assert_eq!(g.cone_points().len(), 8);
        // Edges: 8 (one copy each). Inter-obstacle visible pairs exist and
        // come in two copies.
        let inter: Vec<_> = g
            .segments()
            .iter()
            .filter(|s| (s.a.cone_point < 4) != (s.b.cone_point < 4))
            .collect();
        assert!(!inter.is_empty());
        assert_eq!(inter.len() % 2, 0);
        // The facing-side vertex pair at distance 4 must be visible.
        assert!(inter.iter().any(|s| (s.length - 4.0).abs() < 1e-12));
    }

    #[test]
    fn exterior_triangle_edges() {
        let g = build_planar_exterior(&[vec![[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]]]).unwrap();
        assert_eq!(g.segments().len(), 3);
    }

    #[test]
    fn intersecting_obstacles_rejected() {
        let a = unit_square();
        let b: Vec<[f64; 2]> = unit_square().iter().map(|p| [p[0] + 0.5, p[1] + 0.5]).collect();
        assert!(matches!(
            build_planar_exterior(&[a, b]),
            Err(GeometryError::IntersectingObstacles(_, _))
        ));
    }

    #[test]
    fn builders_deterministic() {
        let g1 = build_doubled_polygon(&unit_square()).unwrap();
        let g2 = build_doubled_polygon(&unit_square()).unwrap();
        assert_eq!(
            serde_json::to_string(&g1).unwrap(),
            serde_json::to_string(&g2).unwrap()
        );
        assert_eq!(g1.content_hash(), g2.content_hash());
    }

    #[test]
    fn surface_spec_roundtrip() {
        let json = r#"{"type":"doubled_polygon","vertices":[[0,0],[1,0],[1,1],[0,1]]}"#;
        let spec: SurfaceSpec = serde_json::from_str(json).unwrap();
        let g = spec.to_graph().unwrap();
        assert_eq!(g.cone_points().len(), 4);

        let json = r#"{"type":"cone_graph",
            "cone_points":[{"id":0,"circumference":12.566370614359172},
                           {"id":1,"circumference":12.566370614359172}],
            "segments":[{"a":0,"theta_a":0.0,"b":1,"theta_b":0.0,"length":1.0}]}"#;
        let spec: SurfaceSpec = serde_json::from_str(json).unwrap();
        let g = spec.to_graph().unwrap();
        assert_eq!(g.segments().len(), 1);
    }
}
