//! Drum polygons, structured meshes and largest inscribed circles.
//!
//! The two Gordon–Webb–Wolpert drums are unions of seven congruent right
//! isosceles triangles. Their coordinates live in `data/drum{1,2}.json` and
//! are refined by exact 4-way midpoint splitting, so every mesh tiles its
//! polygon exactly.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Tolerance for classifying a point as lying on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

const DRUM1_JSON: &str = include_str!("../data/drum1.json");
const DRUM2_JSON: &str = include_str!("../data/drum2.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrumId {
    Drum1,
    Drum2,
}

impl DrumId {
    pub const BOTH: [DrumId; 2] = [DrumId::Drum1, DrumId::Drum2];

    pub fn as_str(self) -> &'static str {
        match self {
            DrumId::Drum1 => "drum1",
            DrumId::Drum2 => "drum2",
        }
    }
}

impl fmt::Display for DrumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DrumId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "drum1" | "1" => Ok(DrumId::Drum1),
            "drum2" | "2" => Ok(DrumId::Drum2),
            _ => Err(Error::UnknownDrum(s.to_string())),
        }
    }
}

/// On-disk drum geometry: all tile corners plus the base triangles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolygonFile {
    pub id: String,
    pub leg: f64,
    pub vertices: Vec<Point>,
    pub base_triangles: Vec<[usize; 3]>,
}

/// Where a point sits relative to a polygon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

/// Simple polygon with counter-clockwise boundary and a base triangulation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Polygon {
    pub id: String,
    /// Boundary loop, counter-clockwise.
    pub vertices: Vec<Point>,
    pub base_points: Vec<Point>,
    pub base_triangles: Vec<[usize; 3]>,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn signed_area(loop_: &[Point]) -> f64 {
    let n = loop_.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = loop_[i];
        let b = loop_[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(a, b, c)
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let qx = a[0] + t * dx - p[0];
    let qy = a[1] + t * dy - p[1];
    (qx * qx + qy * qy).sqrt()
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, d: f64| {
        d.abs() <= 1e-14
            && p[0] >= a[0].min(b[0]) - 1e-14
            && p[0] <= a[0].max(b[0]) + 1e-14
            && p[1] >= a[1].min(b[1]) - 1e-14
            && p[1] <= a[1].max(b[1]) + 1e-14
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Boundary loop of a triangulated region: edges used by exactly one triangle,
/// chained into a single counter-clockwise cycle.
fn boundary_loop(points: &[Point], triangles: &[[usize; 3]]) -> Result<Vec<usize>> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    if count.values().any(|&c| c > 2) {
        return Err(Error::DegenerateGeometry(
            "an edge is shared by more than two triangles".into(),
        ));
    }
    // Directed boundary edges, oriented as in their (counter-clockwise) triangle.
    let mut next: HashMap<usize, usize> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 && next.insert(a, b).is_some() {
                return Err(Error::DegenerateGeometry(
                    "boundary touches itself at a vertex".into(),
                ));
            }
        }
    }
    let start = *next
        .keys()
        .min_by(|&&a, &&b| {
            points[a][0]
                .total_cmp(&points[b][0])
                .then(points[a][1].total_cmp(&points[b][1]))
        })
        .ok_or_else(|| Error::DegenerateGeometry("no boundary edges".into()))?;
    let mut cycle = vec![start];
    let mut cur = next[&start];
    while cur != start {
        if cycle.len() > next.len() {
            return Err(Error::DegenerateGeometry("boundary is not a cycle".into()));
        }
        cycle.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| Error::DegenerateGeometry("open boundary chain".into()))?;
    }
    if cycle.len() != next.len() {
        return Err(Error::DegenerateGeometry(
            "boundary has more than one component".into(),
        ));
    }
    Ok(cycle)
}

impl Polygon {
    /// Builds a polygon from a base triangulation. Triangles are reoriented
    /// counter-clockwise and the boundary loop is derived from unshared edges.
    pub fn from_triangulation(
        id: impl Into<String>,
        points: Vec<Point>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Polygon> {
        if triangles.is_empty() {
            return Err(Error::DegenerateGeometry("empty triangulation".into()));
        }
        let mut tris = Vec::with_capacity(triangles.len());
        for t in triangles {
            if t.iter().any(|&i| i >= points.len()) {
                return Err(Error::Format("triangle index out of range".into()));
            }
            let a = triangle_area(points[t[0]], points[t[1]], points[t[2]]);
            if a.abs() <= 1e-14 {
                return Err(Error::DegenerateGeometry("zero-area base triangle".into()));
            }
            tris.push(if a > 0.0 { t } else { [t[0], t[2], t[1]] });
        }
        let cycle = boundary_loop(&points, &tris)?;
        let vertices: Vec<Point> = cycle.iter().map(|&i| points[i]).collect();
        let poly = Polygon {
            id: id.into(),
            vertices,
            base_points: points,
            base_triangles: tris,
        };
        if !poly.is_simple() {
            return Err(Error::DegenerateGeometry("polygon is not simple".into()));
        }
        let tiled: f64 = poly
            .base_triangles
            .iter()
            .map(|t| triangle_area(poly.base_points[t[0]], poly.base_points[t[1]], poly.base_points[t[2]]))
            .sum();
        if (tiled - poly.area()).abs() > 1e-9 * poly.area().max(1.0) {
            return Err(Error::DegenerateGeometry(
                "base triangles overlap or do not tile the polygon".into(),
            ));
        }
        Ok(poly)
    }

    pub fn from_file(file: PolygonFile) -> Result<Polygon> {
        Polygon::from_triangulation(file.id, file.vertices, file.base_triangles)
    }

    pub fn read_json(path: &Path) -> Result<Polygon> {
        let file: PolygonFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Polygon::from_file(file)
    }

    /// Unit square `[0,1]²` split along its diagonal.
    pub fn unit_square() -> Polygon {
        Polygon::from_triangulation(
            "unit_square",
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .expect("unit square is valid")
    }

    /// Right isosceles triangle with the right angle at the origin.
    pub fn right_triangle(leg: f64) -> Polygon {
        Polygon::from_triangulation(
            "right_triangle",
            vec![[0.0, 0.0], [leg, 0.0], [0.0, leg]],
            vec![[0, 1, 2]],
        )
        .expect("triangle is valid")
    }

    pub fn to_file(&self, leg: f64) -> PolygonFile {
        PolygonFile {
            id: self.id.clone(),
            leg,
            vertices: self.base_points.clone(),
            base_triangles: self.base_triangles.clone(),
        }
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 || signed_area(&self.vertices) <= 0.0 {
            return false;
        }
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Distance from `p` to the nearest boundary segment.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.segments()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding-number classification; points within [`BOUNDARY_TOL`] of an
    /// edge count as boundary.
    pub fn locate(&self, p: Point) -> Location {
        let mut winding = 0i32;
        for (a, b) in self.segments() {
            if segment_distance(p, a, b) <= BOUNDARY_TOL {
                return Location::Boundary;
            }
            if a[1] <= p[1] {
                if b[1] > p[1] && cross(a, b, p) > 0.0 {
                    winding += 1;
                }
            } else if b[1] <= p[1] && cross(a, b, p) < 0.0 {
                winding -= 1;
            }
        }
        if winding != 0 {
            Location::Interior
        } else {
            Location::Exterior
        }
    }

    pub fn is_interior(&self, p: Point) -> bool {
        self.locate(p) == Location::Interior
    }

    /// Signed clearance: boundary distance inside, minus it outside.
    pub fn clearance(&self, p: Point) -> f64 {
        let d = self.boundary_distance(p);
        match self.locate(p) {
            Location::Interior => d,
            Location::Boundary => 0.0,
            Location::Exterior => -d,
        }
    }

    /// Uniform scaling about the origin.
    pub fn scaled(&self, s: f64) -> Polygon {
        let sc = |v: &Point| [v[0] * s, v[1] * s];
        Polygon {
            id: self.id.clone(),
            vertices: self.vertices.iter().map(sc).collect(),
            base_points: self.base_points.iter().map(sc).collect(),
            base_triangles: self.base_triangles.clone(),
        }
    }

    /// True when the open segment `[p, q]` stays inside the polygon.
    pub fn sees(&self, p: Point, q: Point) -> bool {
        if !self.is_interior(p) || !self.is_interior(q) {
            return false;
        }
        if self.segments().any(|(a, b)| segments_intersect(p, q, a, b)) {
            return false;
        }
        self.is_interior([(p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5])
    }
}

/// Loads one of the two drums with the given leg length.
pub fn load_drum(id: DrumId, leg: f64) -> Result<Polygon> {
    if !(leg > 0.0 && leg.is_finite()) {
        return Err(Error::InvalidArgument(format!("leg must be positive, got {leg}")));
    }
    let raw = match id {
        DrumId::Drum1 => DRUM1_JSON,
        DrumId::Drum2 => DRUM2_JSON,
    };
    let file: PolygonFile = serde_json::from_str(raw)?;
    let scale = leg / file.leg;
    Ok(Polygon::from_file(file)?.scaled(scale))
}

/// Parses a drum label and loads it.
pub fn load_drum_by_name(name: &str, leg: f64) -> Result<Polygon> {
    load_drum(name.parse()?, leg)
}

/// Conforming triangle mesh obtained by recursive 4-way refinement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    #[serde(rename = "boundary_flags")]
    pub boundary: Vec<bool>,
    pub depth: u32,
}

/// Edge census used to audit conformity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeAudit {
    pub interior: usize,
    pub boundary: usize,
    /// Edges claimed by three or more triangles (must be zero).
    pub overused: usize,
}

fn edge_counts(triangles: &[[usize; 3]]) -> HashMap<(usize, usize), usize> {
    let mut count = HashMap::with_capacity(triangles.len() * 2);
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    count
}

/// Splits every base triangle `depth` times through its edge midpoints.
///
/// Vertex indices are stable under refinement: the vertices of depth `k`
/// are a prefix of the vertices of depth `k + 1`.
pub fn triangulate(polygon: &Polygon, depth: u32) -> Result<TriangleMesh> {
    if polygon.base_triangles.is_empty() {
        return Err(Error::DegenerateGeometry("polygon has no base triangulation".into()));
    }
    if !polygon.is_simple() {
        return Err(Error::DegenerateGeometry("polygon is not simple".into()));
    }
    let mut vertices = polygon.base_points.clone();
    let mut triangles = polygon.base_triangles.clone();
    for _ in 0..depth {
        let mut mids: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut refined = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[k] = *mids.entry(key).or_insert_with(|| {
                    let pa = vertices[a];
                    let pb = vertices[b];
                    vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    vertices.len() - 1
                });
            }
            let [a, b, c] = *t;
            let [ab, bc, ca] = m;
            refined.push([a, ab, ca]);
            refined.push([ab, b, bc]);
            refined.push([ca, bc, c]);
            refined.push([ab, bc, ca]);
        }
        triangles = refined;
    }
    let mut boundary = vec![false; vertices.len()];
    for ((a, b), c) in edge_counts(&triangles) {
        if c == 1 {
            boundary[a] = true;
            boundary[b] = true;
        }
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
        boundary,
        depth,
    })
}

impl TriangleMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        triangle_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn edge_audit(&self) -> EdgeAudit {
        let mut audit = EdgeAudit {
            interior: 0,
            boundary: 0,
            overused: 0,
        };
        for c in edge_counts(&self.triangles).into_values() {
            match c {
                1 => audit.boundary += 1,
                2 => audit.interior += 1,
                _ => audit.overused += 1,
            }
        }
        audit
    }

    /// Triangles with at least one boundary vertex.
    pub fn touches_boundary(&self, t: usize) -> bool {
        self.triangles[t].iter().any(|&v| self.boundary[v])
    }

    /// Longest edge length.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Bucket grid for point location in a [`TriangleMesh`].
#[derive(Clone, Debug)]
pub struct MeshLocator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

/// Barycentric coordinates below this are treated as zero.
const BARY_TOL: f64 = 1e-12;

impl MeshLocator {
    pub fn new(mesh: &TriangleMesh) -> MeshLocator {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
        let target = (mesh.n_triangles() as f64).sqrt().ceil().max(1.0);
        let cell = span / target;
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let xs = tri.map(|v| mesh.vertices[v][0]);
            let ys = tri.map(|v| mesh.vertices[v][1]);
            let cx = |x: f64| (((x - lo[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
            let cy = |y: f64| (((y - lo[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
            let (x0, x1) = (cx(xs.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-12), cx(xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-12));
            let (y0, y1) = (cy(ys.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-12), cy(ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-12));
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    buckets[iy * nx + ix].push(t as u32);
                }
            }
        }
        MeshLocator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    /// Containing triangle and barycentric coordinates of `p`, if any.
    pub fn locate(&self, mesh: &TriangleMesh, p: Point) -> Option<(usize, [f64; 3])> {
        let fx = (p[0] - self.origin[0]) / self.cell;
        let fy = (p[1] - self.origin[1]) / self.cell;
        if fx < -1e-9 || fy < -1e-9 {
            return None;
        }
        let ix = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        if fx > self.nx as f64 + 1e-9 || fy > self.ny as f64 + 1e-9 {
            return None;
        }
        for &t in &self.buckets[iy * self.nx + ix] {
            let [a, b, c] = mesh.triangles[t as usize];
            let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let area = cross(pa, pb, pc);
            let l0 = cross(p, pb, pc) / area;
            let l1 = cross(pa, p, pc) / area;
            let l2 = 1.0 - l0 - l1;
            if l0 >= -BARY_TOL && l1 >= -BARY_TOL && l2 >= -BARY_TOL {
                return Some((t as usize, [l0, l1, l2]));
            }
        }
        None
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InscribedCircle {
    pub center: Point,
    pub radius: f64,
}

/// Grid resolution and stopping rule for [`inscribed_circle_with`].
#[derive(Clone, Copy, Debug)]
pub struct InscribedOptions {
    /// Grid points along the longer bounding-box side.
    pub grid: usize,
    /// Number of separated grid maxima refined by pattern search.
    pub candidates: usize,
    /// Final pattern-search step relative to the bounding-box size.
    pub rel_tol: f64,
}

impl Default for InscribedOptions {
    fn default() -> Self {
        InscribedOptions {
            grid: 600,
            candidates: 12,
            rel_tol: 1e-12,
        }
    }
}

/// Largest inscribed circle by a grid scan followed by pattern search.
pub fn inscribed_circle(polygon: &Polygon) -> Result<InscribedCircle> {
    inscribed_circle_with(polygon, InscribedOptions::default())
}

pub fn inscribed_circle_with(polygon: &Polygon, opts: InscribedOptions) -> Result<InscribedCircle> {
    let (lo, hi) = polygon.bbox();
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if !(polygon.area() > 1e-12 * span * span) || span <= 0.0 {
        return Err(Error::DegenerateGeometry("polygon area below tolerance".into()));
    }
    let step = span / opts.grid as f64;
    let nx = ((hi[0] - lo[0]) / step).ceil() as usize + 1;
    let ny = ((hi[1] - lo[1]) / step).ceil() as usize + 1;

    // Row-parallel scan; rows are reduced in index order.
    let rows: Vec<Vec<(f64, Point)>> = (0..ny)
        .into_par_iter()
        .map(|iy| {
            let y = lo[1] + (iy as f64 + 0.5) * step;
            (0..nx)
                .filter_map(|ix| {
                    let p = [lo[0] + (ix as f64 + 0.5) * step, y];
                    polygon
                        .is_interior(p)
                        .then(|| (polygon.boundary_distance(p), p))
                })
                .collect()
        })
        .collect();
    let mut samples: Vec<(f64, Point)> = rows.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(Error::DegenerateGeometry("no interior grid points".into()));
    }
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut seeds: Vec<Point> = Vec::new();
    for (_, p) in &samples {
        if seeds.len() >= opts.candidates {
            break;
        }
        if seeds
            .iter()
            .all(|s| ((s[0] - p[0]).powi(2) + (s[1] - p[1]).powi(2)).sqrt() > 4.0 * step)
        {
            seeds.push(*p);
        }
    }

    let best = seeds
        .iter()
        .map(|&s| pattern_search(polygon, s, step, opts.rel_tol * span))
        .fold(None::<InscribedCircle>, |acc, c| match acc {
            Some(a) if a.radius >= c.radius => Some(a),
            _ => Some(c),
        })
        .expect("at least one seed");
    Ok(best)
}

/// Compass search on the clearance with 32 directions and step halving.
fn pattern_search(polygon: &Polygon, start: Point, step0: f64, min_step: f64) -> InscribedCircle {
    const DIRS: usize = 32;
    let dirs: Vec<Point> = (0..DIRS)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / DIRS as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    let mut p = start;
    let mut f = polygon.clearance(p);
    let mut step = step0;
    while step > min_step {
        let mut improved = false;
        for d in &dirs {
            let q = [p[0] + step * d[0], p[1] + step * d[1]];
            let fq = polygon.clearance(q);
            if fq > f {
                p = q;
                f = fq;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    InscribedCircle { center: p, radius: f }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn drums_have_area_seven_halves() {
        for id in DrumId::BOTH {
            let p = load_drum(id, 1.0).unwrap();
            assert!((p.area() - 3.5).abs() < 1e-12, "{id}: {}", p.area());
            assert!(p.is_simple());
            assert_eq!(p.base_triangles.len(), 7);
            let p2 = load_drum(id, 2.0).unwrap();
            assert!((p2.area() - 14.0).abs() < 1e-12);
        }
    }

    #[test]
    fn base_tiles_are_right_isosceles_with_unit_legs() {
        for id in DrumId::BOTH {
            let p = load_drum(id, 1.0).unwrap();
            for t in &p.base_triangles {
                let mut l: Vec<f64> = (0..3)
                    .map(|k| {
                        let (a, b) = (p.base_points[t[k]], p.base_points[t[(k + 1) % 3]]);
                        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                    })
                    .collect();
                l.sort_by(f64::total_cmp);
                assert!((l[0] - 1.0).abs() < 1e-12 && (l[1] - 1.0).abs() < 1e-12);
                assert!((l[2] - 2f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(load_drum_by_name("drum3", 1.0), Err(Error::UnknownDrum(_))));
        assert!(matches!(load_drum(DrumId::Drum1, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(load_drum(DrumId::Drum1, -1.0), Err(Error::InvalidArgument(_))));
        // Bow-tie: two triangles touching at one vertex.
        let bowtie = Polygon::from_triangulation(
            "bowtie",
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [1.0, 1.0]],
            vec![[0, 1, 2], [2, 4, 3]],
        );
        assert!(bowtie.is_err());
    }

    #[test]
    fn refinement_counts_and_area() {
        let p = load_drum(DrumId::Drum1, 1.0).unwrap();
        for depth in 0..4 {
            let m = triangulate(&p, depth).unwrap();
            assert_eq!(m.n_triangles(), 7 * 4usize.pow(depth));
            assert!((m.area() - 3.5).abs() < 1e-12);
            for t in 0..m.n_triangles() {
                assert!(m.triangle_area(t) > 0.0);
            }
            let audit = m.edge_audit();
            assert_eq!(audit.overused, 0);
            // Euler: V - E + F = 1 for a disk.
            let e = audit.interior + audit.boundary;
            assert_eq!(m.n_vertices() + m.n_triangles(), e + 1);
        }
        let m2 = triangulate(&p, 2).unwrap();
        assert_eq!(m2.n_triangles(), 112);
    }

    #[test]
    fn refinement_keeps_vertex_prefix() {
        let p = load_drum(DrumId::Drum2, 1.0).unwrap();
        let a = triangulate(&p, 2).unwrap();
        let b = triangulate(&p, 3).unwrap();
        assert_eq!(&b.vertices[..a.n_vertices()], &a.vertices[..]);
        for (i, &f) in a.boundary.iter().enumerate() {
            assert_eq!(f, b.boundary[i]);
        }
    }

    #[test]
    fn boundary_flags_match_polygon() {
        let p = load_drum(DrumId::Drum1, 1.0).unwrap();
        let m = triangulate(&p, 3).unwrap();
        for (v, &flag) in m.vertices.iter().zip(&m.boundary) {
            assert_eq!(flag, p.boundary_distance(*v) < 1e-12);
        }
    }

    #[test]
    fn winding_number_agrees_with_triangle_membership() {
        let mut rng = crate::rng::stream(11, 0);
        for id in DrumId::BOTH {
            let p = load_drum(id, 1.0).unwrap();
            let m = triangulate(&p, 2).unwrap();
            let loc = MeshLocator::new(&m);
            let (lo, hi) = p.bbox();
            for _ in 0..10_000 {
                let q = [
                    rng.random_range(lo[0] - 0.2..hi[0] + 0.2),
                    rng.random_range(lo[1] - 0.2..hi[1] + 0.2),
                ];
                let inside = p.locate(q) != Location::Exterior;
                assert_eq!(inside, loc.locate(&m, q).is_some(), "{q:?}");
            }
        }
    }

    #[test]
    fn boundary_points_classify_as_boundary() {
        let sq = Polygon::unit_square();
        assert_eq!(sq.locate([0.5, 0.0]), Location::Boundary);
        assert_eq!(sq.locate([1.0, 1.0]), Location::Boundary);
        assert_eq!(sq.locate([0.5, 0.5]), Location::Interior);
        assert_eq!(sq.locate([1.5, 0.5]), Location::Exterior);
    }

    #[test]
    fn inscribed_circle_of_simple_shapes() {
        let c = inscribed_circle(&Polygon::unit_square()).unwrap();
        assert!((c.radius - 0.5).abs() < 1e-9);
        assert!((c.center[0] - 0.5).abs() < 1e-6 && (c.center[1] - 0.5).abs() < 1e-6);

        let c = inscribed_circle(&Polygon::right_triangle(1.0)).unwrap();
        let r = (2.0 - 2f64.sqrt()) / 2.0;
        assert!((c.radius - r).abs() < 1e-9, "{} vs {r}", c.radius);
    }

    #[test]
    fn inscribed_circle_scales_linearly() {
        let p = load_drum(DrumId::Drum1, 1.0).unwrap();
        let a = inscribed_circle(&p).unwrap();
        let b = inscribed_circle(&p.scaled(2.5)).unwrap();
        assert!((b.radius - 2.5 * a.radius).abs() < 1e-6);
    }

    #[test]
    fn visibility() {
        let sq = Polygon::unit_square();
        assert!(sq.sees([0.1, 0.1], [0.9, 0.9]));
        assert!(!sq.sees([0.1, 0.1], [1.5, 0.9]));
    }
}
