//! Triangulations of planar domains that contain the origin.
//!
//! Every mesh carries the origin as a distinguished interior vertex so that
//! the `|x|^-gamma` weight is singular at a node and never inside an element.
//! Disks are meshed with concentric rings of vertices; polygons are fanned
//! from the origin when they are star-shaped with respect to it and ear-clipped
//! otherwise. Both are then refined by midpoint subdivision.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Relative tolerance used for geometric predicates.
const GEOM_EPS: f64 = 1e-12;

/// Relative radius match for ring edges on disk meshes.
const RING_TOL: f64 = 1e-9;

/// A bounded planar domain containing the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Disk of the given radius centered at the origin.
    Disk { radius: f64 },
    /// Simple polygon, vertices listed counterclockwise.
    Polygon { vertices: Vec<Point> },
}

impl DomainSpec {
    pub fn disk(radius: f64) -> Self {
        DomainSpec::Disk { radius }
    }

    pub fn polygon(vertices: Vec<Point>) -> Self {
        DomainSpec::Polygon { vertices }
    }

    /// The square `[-half, half]^2`.
    pub fn square(half: f64) -> Self {
        DomainSpec::Polygon {
            vertices: vec![[-half, -half], [half, -half], [half, half], [-half, half]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Disk { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
            DomainSpec::Polygon { vertices } => validate_polygon(vertices),
        }
    }

    /// Radius of the largest open ball centered at the origin inside the domain.
    pub fn inradius(&self) -> f64 {
        match self {
            DomainSpec::Disk { radius } => *radius,
            DomainSpec::Polygon { vertices } => polygon_edges(vertices)
                .map(|(a, b)| point_segment_distance([0.0, 0.0], a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn polygon_edges(vertices: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = vertices.len();
    (0..n).map(move |i| (vertices[i], vertices[(i + 1) % n]))
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let s = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + s * ab[0], a[1] + s * ab[1]])
}

fn polygon_area(vertices: &[Point]) -> f64 {
    0.5 * polygon_edges(vertices)
        .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
        .sum::<f64>()
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
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn point_in_polygon(p: Point, vertices: &[Point]) -> bool {
    let mut inside = false;
    for (a, b) in polygon_edges(vertices) {
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn validate_polygon(vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
    }
    if vertices.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
        return Err(Error::InvalidDomain("polygon vertex is not finite".into()));
    }
    let scale = vertices
        .iter()
        .map(|v| v[0].abs().max(v[1].abs()))
        .fold(0.0, f64::max);
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(vertices[i], vertices[j]) <= GEOM_EPS * scale {
                return Err(Error::InvalidDomain(format!("repeated vertex {i} and {j}")));
            }
        }
    }
    let area = polygon_area(vertices);
    if area <= GEOM_EPS * scale * scale {
        return Err(Error::InvalidDomain(format!(
            "polygon must be counterclockwise with positive area (signed area {area})"
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::InvalidDomain(format!(
                    "polygon is not simple: edges {i} and {j} intersect"
                )));
            }
        }
    }
    let d = polygon_edges(vertices)
        .map(|(a, b)| point_segment_distance([0.0, 0.0], a, b))
        .fold(f64::INFINITY, f64::min);
    if d <= GEOM_EPS * scale {
        return Err(Error::InvalidDomain("origin lies on the polygon boundary".into()));
    }
    if !point_in_polygon([0.0, 0.0], vertices) {
        return Err(Error::InvalidDomain("origin lies outside the polygon".into()));
    }
    Ok(())
}

/// Conforming triangulation with the origin as an interior vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    origin_vertex: usize,
    inradius: f64,
    refinement_level: usize,
    /// Boundary midpoints created by refinement are projected onto this circle.
    snap_radius: Option<f64>,
}

/// The constants `d` and `kappa = (2 - gamma)^2 / (2 d^(2 - gamma))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub d: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl GeometryConstants {
    pub fn new(d: f64, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!("inradius must be positive, got {d}")));
        }
        let kappa = (2.0 - gamma).powi(2) / (2.0 * d.powf(2.0 - gamma));
        Ok(GeometryConstants { d, kappa, gamma })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && (0.0..2.0).contains(&gamma)) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 2), got {gamma}"
        )));
    }
    Ok(())
}

/// Evaluates `d` and `kappa` for a mesh.
pub fn geometry_constants(mesh: &Mesh, gamma: f64) -> Result<GeometryConstants> {
    GeometryConstants::new(mesh.inradius(), gamma)
}

/// Builds a mesh whose longest edge does not exceed `2 * target_h`.
pub fn build_mesh(spec: &DomainSpec, target_h: f64) -> Result<Mesh> {
    if !(target_h.is_finite() && target_h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target_h must be positive, got {target_h}"
        )));
    }
    spec.validate()?;
    match spec {
        DomainSpec::Disk { radius } => Ok(ring_disk(*radius, (radius / target_h).ceil() as usize)),
        DomainSpec::Polygon { vertices } => {
            let mut mesh = polygon_mesh(vertices, spec.inradius())?;
            while mesh.max_edge_length() > 2.0 * target_h {
                mesh = refine(&mesh);
            }
            mesh.refinement_level = 0;
            Ok(mesh)
        }
    }
}

/// Concentric-ring disk mesh: `rings` rings at radii `R k / rings` with `6k`
/// vertices each, so that there are `6 rings^2` triangles.
pub fn ring_disk(radius: f64, rings: usize) -> Mesh {
    let rings = rings.max(1);
    let mut vertices = vec![[0.0, 0.0]];
    let mut boundary = vec![false];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(vertices.len());
        let r = radius * k as f64 / rings as f64;
        let count = 6 * k;
        for m in 0..count {
            let theta = std::f64::consts::TAU * m as f64 / count as f64;
            let (s, c) = theta.sin_cos();
            // the last ring sits exactly on the circle
            vertices.push(if k == rings { [radius * c, radius * s] } else { [r * c, r * s] });
            boundary.push(k == rings);
        }
    }
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for m in 0..6 {
        triangles.push([0, 1 + m, 1 + (m + 1) % 6]);
    }
    for k in 2..=rings {
        let inner = ring_start[k - 1];
        let outer = ring_start[k];
        let n_in = 6 * (k - 1);
        let n_out = 6 * k;
        let (mut i, mut j) = (0usize, 0usize);
        while i < n_in || j < n_out {
            let next_in = (i + 1) as f64 / n_in as f64;
            let next_out = (j + 1) as f64 / n_out as f64;
            let a = inner + i % n_in;
            let b = outer + j % n_out;
            if j < n_out && (i == n_in || next_out <= next_in) {
                triangles.push([a, b, outer + (j + 1) % n_out]);
                j += 1;
            } else {
                triangles.push([a, b, inner + (i + 1) % n_in]);
                i += 1;
            }
        }
    }
    orient_ccw(&vertices, &mut triangles);
    Mesh {
        vertices,
        triangles,
        boundary,
        origin_vertex: 0,
        inradius: radius,
        refinement_level: 0,
        snap_radius: Some(radius),
    }
}

fn orient_ccw(vertices: &[Point], triangles: &mut [[usize; 3]]) {
    for t in triangles.iter_mut() {
        if cross(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
}

fn polygon_mesh(poly: &[Point], inradius: f64) -> Result<Mesh> {
    let n = poly.len();
    let origin = [0.0, 0.0];
    let star = polygon_edges(poly).all(|(a, b)| cross(a, b, origin) > 0.0);
    let mut vertices: Vec<Point> = poly.to_vec();
    let mut boundary = vec![true; n];
    let mut triangles = Vec::new();
    let origin_vertex = n;
    vertices.push(origin);
    boundary.push(false);
    if star {
        for i in 0..n {
            triangles.push([origin_vertex, i, (i + 1) % n]);
        }
    } else {
        let ears = ear_clip(poly)?;
        let mut hit = None;
        for (ti, t) in ears.iter().enumerate() {
            let (a, b, c) = (poly[t[0]], poly[t[1]], poly[t[2]]);
            let area = cross(a, b, c);
            let w = [cross(b, c, origin) / area, cross(c, a, origin) / area, cross(a, b, origin) / area];
            if w.iter().all(|&x| x >= -GEOM_EPS) {
                hit = Some((ti, w));
                break;
            }
        }
        let (ti, w) = hit.ok_or_else(|| Error::InvalidDomain("origin not covered by triangulation".into()))?;
        let on_edge = w.iter().position(|&x| x.abs() <= GEOM_EPS);
        for (k, t) in ears.iter().enumerate() {
            if k != ti {
                triangles.push(*t);
            }
        }
        let t = ears[ti];
        match on_edge {
            None => {
                triangles.push([t[0], t[1], origin_vertex]);
                triangles.push([t[1], t[2], origin_vertex]);
                triangles.push([t[2], t[0], origin_vertex]);
            }
            Some(e) => {
                // the origin is on the edge opposite to corner e; split both neighbors
                let (p, q) = (t[(e + 1) % 3], t[(e + 2) % 3]);
                triangles.push([t[e], p, origin_vertex]);
                triangles.push([q, t[e], origin_vertex]);
                let other = triangles
                    .iter()
                    .position(|s| s.contains(&p) && s.contains(&q) && !s.contains(&origin_vertex))
                    .ok_or_else(|| Error::InvalidDomain("origin lies on the boundary".into()))?;
                let s = triangles.swap_remove(other);
                let apex = *s.iter().find(|&&v| v != p && v != q).unwrap();
                triangles.push([apex, q, origin_vertex]);
                triangles.push([p, apex, origin_vertex]);
            }
        }
    }
    orient_ccw(&vertices, &mut triangles);
    let mesh = Mesh {
        vertices,
        triangles,
        boundary,
        origin_vertex,
        inradius,
        refinement_level: 0,
        snap_radius: None,
    };
    mesh.check_areas()?;
    Ok(mesh)
}

/// Ear clipping for a counterclockwise simple polygon.
fn ear_clip(poly: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len() - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for i in 0..m {
            let (ia, ib, ic) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            if cross(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&k| {
                k != ia
                    && k != ib
                    && k != ic
                    && cross(a, b, poly[k]) >= 0.0
                    && cross(b, c, poly[k]) >= 0.0
                    && cross(c, a, poly[k]) >= 0.0
            });
            if !blocked {
                out.push([ia, ib, ic]);
                idx.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::InvalidDomain("ear clipping failed; polygon not simple".into()));
        }
    }
    out.push([idx[0], idx[1], idx[2]]);
    Ok(out)
}

/// Splits every triangle into four by edge midpoints. Existing vertices keep
/// their indices and positions. On disk meshes a midpoint of an edge whose ends
/// share a radius is moved onto that circle, so concentric rings stay circles.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &mesh.triangles {
        for e in 0..3 {
            *edge_count.entry(edge_key(t[e], t[(e + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut vertices = mesh.vertices.clone();
    let mut boundary = mesh.boundary.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(edge_count.len());
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for t in &mesh.triangles {
        let mut mid = [0usize; 3];
        for e in 0..3 {
            let key = edge_key(t[e], t[(e + 1) % 3]);
            mid[e] = *midpoint.entry(key).or_insert_with(|| {
                let (a, b) = (mesh.vertices[key.0], mesh.vertices[key.1]);
                let mut p = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let on_boundary = edge_count[&key] == 1;
                if let Some(rb) = mesh.snap_radius {
                    // Chords of the boundary or of an interior ring go back onto their circle.
                    let (ra, rc) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
                    let ring = ra > GEOM_EPS * rb && (ra - rc).abs() <= RING_TOL * rb;
                    if on_boundary || ring {
                        let r = if on_boundary { rb } else { 0.5 * (ra + rc) };
                        let s = r / p[0].hypot(p[1]);
                        p = [p[0] * s, p[1] * s];
                    }
                }
                vertices.push(p);
                boundary.push(on_boundary);
                vertices.len() - 1
            });
        }
        // mid[0] on (t0,t1), mid[1] on (t1,t2), mid[2] on (t2,t0)
        triangles.push([t[0], mid[0], mid[2]]);
        triangles.push([mid[0], t[1], mid[1]]);
        triangles.push([mid[2], mid[1], t[2]]);
        triangles.push([mid[0], mid[1], mid[2]]);
    }
    Mesh {
        vertices,
        triangles,
        boundary,
        origin_vertex: mesh.origin_vertex,
        inradius: mesh.inradius,
        refinement_level: mesh.refinement_level + 1,
        snap_radius: mesh.snap_radius,
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn origin_vertex(&self) -> usize {
        self.origin_vertex
    }

    /// Distance from the origin to the boundary of the domain.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn refinement_level(&self) -> usize {
        self.refinement_level
    }

    pub fn snap_radius(&self) -> Option<f64> {
        self.snap_radius
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_free(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    /// Corner coordinates of triangle `t`.
    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * cross(a, b, c)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |e| (t[e], t[(e + 1) % 3])))
            .map(|(a, b)| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub(crate) fn check_areas(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }
        Ok(())
    }

    /// Plain-text form: `#` metadata lines, the vertex count, one
    /// `x y boundary_flag` line per vertex, then one `i j k` line per triangle.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tm-mesh");
        let _ = writeln!(s, "# inradius {:.17e}", self.inradius);
        let _ = writeln!(s, "# refinement_level {}", self.refinement_level);
        if let Some(r) = self.snap_radius {
            let _ = writeln!(s, "# snap_radius {r:.17e}");
        }
        let _ = writeln!(s, "{}", self.vertices.len());
        for (p, b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(s, "{:.17e} {:.17e} {}", p[0], p[1], u8::from(*b));
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut inradius = None;
        let mut level = 0;
        let mut snap_radius = None;
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut body = Vec::new();
        for line in lines.by_ref() {
            if let Some(meta) = line.strip_prefix('#') {
                let mut it = meta.split_whitespace();
                match (it.next(), it.next()) {
                    (Some("inradius"), Some(v)) => inradius = Some(parse_f64(v)?),
                    (Some("refinement_level"), Some(v)) => {
                        level = v.parse().map_err(|_| Error::Parse(format!("bad level {v}")))?
                    }
                    (Some("snap_radius"), Some(v)) => snap_radius = Some(parse_f64(v)?),
                    _ => {}
                }
            } else {
                body.push(line);
            }
        }
        let mut body = body.into_iter();
        let nv: usize = body
            .next()
            .ok_or_else(|| Error::Parse("empty mesh file".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad vertex count".into()))?;
        let mut vertices = Vec::with_capacity(nv);
        let mut boundary = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = body.next().ok_or_else(|| Error::Parse("truncated vertex list".into()))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("bad vertex line '{line}'")));
            }
            vertices.push([parse_f64(f[0])?, parse_f64(f[1])?]);
            boundary.push(match f[2] {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse(format!("bad boundary flag '{other}'"))),
            });
        }
        let mut triangles = Vec::new();
        for line in body {
            let f: Vec<usize> = line
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad triangle line '{line}'"))))
                .collect::<Result<_>>()?;
            if f.len() != 3 || f.iter().any(|&i| i >= nv) {
                return Err(Error::Parse(format!("bad triangle line '{line}'")));
            }
            triangles.push([f[0], f[1], f[2]]);
        }
        let origin_vertex = vertices
            .iter()
            .position(|p| p[0] == 0.0 && p[1] == 0.0)
            .ok_or_else(|| Error::InvalidDomain("mesh has no vertex at the origin".into()))?;
        if boundary[origin_vertex] {
            return Err(Error::InvalidDomain("origin vertex is on the boundary".into()));
        }
        let mut mesh = Mesh {
            vertices,
            triangles,
            boundary,
            origin_vertex,
            inradius: 0.0,
            refinement_level: level,
            snap_radius,
        };
        mesh.inradius = match inradius {
            Some(d) => d,
            None => mesh.boundary_distance(),
        };
        mesh.check_areas()?;
        Ok(mesh)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Mesh> {
        Mesh::from_text(&std::fs::read_to_string(path)?)
    }

    /// Minimum distance from the origin to a boundary edge of the triangulation.
    pub fn boundary_distance(&self) -> f64 {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                *count.entry(edge_key(t[e], t[(e + 1) % 3])).or_insert(0) += 1;
            }
        }
        count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&(a, b), _)| point_segment_distance([0.0, 0.0], self.vertices[a], self.vertices[b]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
}
