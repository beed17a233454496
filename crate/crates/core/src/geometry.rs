//! Planar geometry kernel: vectors, simple polygons, overlap and distance
//! queries, segment sweeps and grid rasterization.
//!
//! Object footprints and the gripper footprint are polygons in workspace
//! meters. Every module that needs to know whether two bodies touch or
//! interpenetrate goes through the predicates here, so the planner and the
//! simulator agree on what counts as contact.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Intersection area (m²) below which two polygons are considered touching
/// rather than overlapping.
pub const OVERLAP_AREA_EPS: f64 = 1e-10;

const ORIENT_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from +x.
    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn from_points(points: &[Vec2]) -> Self {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    pub fn intersects(&self, other: &Aabb, margin: f64) -> bool {
        self.min.x <= other.max.x + margin
            && other.min.x <= self.max.x + margin
            && self.min.y <= other.max.y + margin
            && other.min.y <= self.max.y + margin
    }

    pub fn contains_aabb(&self, other: &Aabb) -> bool {
        other.min.x >= self.min.x
            && other.max.x <= self.max.x
            && other.min.y >= self.min.y
            && other.max.y <= self.max.y
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has non-finite coordinates")]
    NonFinite,
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
}

/// A simple polygon with counter-clockwise vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
    aabb: Aabb,
    convex: bool,
}

impl Polygon {
    /// Validates and normalizes to counter-clockwise order.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area = signed_area(&vertices);
        if area.abs() <= 1e-14 {
            return Err(GeometryError::ZeroArea);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // adjacent edges share a vertex by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(Self::from_ccw_unchecked(vertices))
    }

    fn from_ccw_unchecked(vertices: Vec<Vec2>) -> Self {
        let aabb = Aabb::from_points(&vertices);
        let convex = is_convex_ccw(&vertices);
        Self {
            vertices,
            aabb,
            convex,
        }
    }

    /// Axis-aligned rectangle `[min, max]`.
    pub fn rectangle(min: Vec2, max: Vec2) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    /// Oriented rectangle from a center, half extents and a rotation angle.
    pub fn oriented_rect(center: Vec2, half_x: f64, half_y: f64, angle: f64) -> Self {
        let ax = Vec2::from_angle(angle) * half_x;
        let ay = Vec2::from_angle(angle).perp() * half_y;
        Self::from_ccw_unchecked(vec![
            center - ax - ay,
            center + ax - ay,
            center + ax + ay,
            center - ax + ay,
        ])
    }

    /// Regular `n`-gon inscribed in a circle.
    pub fn regular(center: Vec2, radius: f64, n: usize) -> Result<Self, GeometryError> {
        let verts = (0..n)
            .map(|k| center + Vec2::from_angle(std::f64::consts::TAU * k as f64 / n as f64) * radius)
            .collect();
        Self::new(verts)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn aabb(&self) -> Aabb {
        self.aabb
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::ZERO;
        let mut a2 = 0.0;
        // shift to the first vertex for conditioning
        let o = self.vertices[0];
        for (p, q) in self.edges() {
            let (p, q) = (p - o, q - o);
            let w = p.cross(q);
            a2 += w;
            c += (p + q) * w;
        }
        o + c * (1.0 / (3.0 * a2))
    }

    pub fn translated(&self, offset: Vec2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|v| *v + offset).collect(),
            aabb: Aabb {
                min: self.aabb.min + offset,
                max: self.aabb.max + offset,
            },
            convex: self.convex,
        }
    }

    /// Crossing-number point test. Points exactly on an edge may land on
    /// either side, but the result is deterministic.
    pub fn contains(&self, p: Vec2) -> bool {
        if p.x < self.aabb.min.x || p.x > self.aabb.max.x || p.y < self.aabb.min.y || p.y > self.aabb.max.y {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the polygon boundary, zero if `p` is inside.
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.boundary_distance(p)
    }

    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let mut a2 = 0.0;
    for i in 0..n {
        a2 += (vertices[i] - o).cross(vertices[(i + 1) % n] - o);
    }
    0.5 * a2
}

fn is_convex_ccw(vertices: &[Vec2]) -> bool {
    let n = vertices.len();
    (0..n).all(|i| {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        (b - a).cross(c - b) >= -1e-15
    })
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) - 1e-15
        && p.x <= a.x.max(b.x) + 1e-15
        && p.y >= a.y.min(b.y) - 1e-15
        && p.y <= a.y.max(b.y) + 1e-15
}

/// Closed segment intersection, touching included.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > ORIENT_EPS && d2 < -ORIENT_EPS) || (d1 < -ORIENT_EPS && d2 > ORIENT_EPS))
        && ((d3 > ORIENT_EPS && d4 < -ORIENT_EPS) || (d3 < -ORIENT_EPS && d4 > ORIENT_EPS))
    {
        return true;
    }
    (d1.abs() <= ORIENT_EPS && on_segment(c, d, a))
        || (d2.abs() <= ORIENT_EPS && on_segment(c, d, b))
        || (d3.abs() <= ORIENT_EPS && on_segment(a, b, c))
        || (d4.abs() <= ORIENT_EPS && on_segment(a, b, d))
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    point_segment_distance_sq(p, a, b).sqrt()
}

fn point_segment_distance_sq(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return (p - a).norm_sq();
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm_sq()
}

pub fn segment_segment_distance(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Clips `subject` against the convex polygon `clip` (Sutherland-Hodgman).
fn clip_to_convex(subject: &[Vec2], clip: &Polygon) -> Vec<Vec2> {
    let mut output = subject.to_vec();
    for (a, b) in clip.edges() {
        if output.is_empty() {
            break;
        }
        let input = std::mem::take(&mut output);
        let inside = |p: Vec2| orient(a, b, p) >= 0.0;
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci {
                if !pi {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if pi {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

fn line_intersection(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let r = q - p;
    let s = b - a;
    let denom = r.cross(s);
    if denom.abs() < 1e-300 {
        return p;
    }
    let t = (a - p).cross(s) / denom;
    p + r * t
}

/// Area of `a ∩ b` when at least one of them is convex.
pub fn intersection_area(a: &Polygon, b: &Polygon) -> Option<f64> {
    if !a.aabb.intersects(&b.aabb, 0.0) {
        return Some(0.0);
    }
    let clipped = if b.convex {
        clip_to_convex(&a.vertices, b)
    } else if a.convex {
        clip_to_convex(&b.vertices, a)
    } else {
        return None;
    };
    Some(signed_area(&clipped).abs())
}

/// True when the interiors of `a` and `b` overlap with positive area.
/// Touching boundaries do not count.
pub fn polygons_overlap(a: &Polygon, b: &Polygon) -> bool {
    if !a.aabb.intersects(&b.aabb, 0.0) {
        return false;
    }
    if let Some(area) = intersection_area(a, b) {
        return area > OVERLAP_AREA_EPS;
    }
    // Both non-convex: proper edge crossings or strictly interior witnesses.
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            let d1 = orient(r, s, p);
            let d2 = orient(r, s, q);
            let d3 = orient(p, q, r);
            let d4 = orient(p, q, s);
            if d1 * d2 < -ORIENT_EPS && d3 * d4 < -ORIENT_EPS {
                return true;
            }
        }
    }
    let strictly_inside = |poly: &Polygon, p: Vec2| poly.contains(p) && poly.boundary_distance(p) > 1e-9;
    let witnesses = |poly: &Polygon| {
        let mut pts: Vec<Vec2> = poly.vertices.clone();
        pts.extend(poly.edges().map(|(p, q)| (p + q) * 0.5));
        pts.push(poly.centroid());
        pts
    };
    witnesses(a).into_iter().any(|p| strictly_inside(b, p))
        || witnesses(b).into_iter().any(|p| strictly_inside(a, p))
}

/// Minimum distance between two polygons, zero when they touch or overlap.
pub fn polygon_distance(a: &Polygon, b: &Polygon) -> f64 {
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            if segments_intersect(p, q, r, s) {
                return 0.0;
            }
        }
    }
    // boundaries are disjoint, so either one contains the other or the
    // closest pair is a vertex against an edge
    if a.contains(b.vertices()[0]) || b.contains(a.vertices()[0]) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for &v in a.vertices() {
        for (r, s) in b.edges() {
            best = best.min(point_segment_distance_sq(v, r, s));
        }
    }
    for &v in b.vertices() {
        for (p, q) in a.edges() {
            best = best.min(point_segment_distance_sq(v, p, q));
        }
    }
    best.sqrt()
}

/// Lower bound on [`polygon_distance`] from bounding boxes; cheap broadphase.
pub fn aabb_gap(a: &Aabb, b: &Aabb) -> f64 {
    let dx = (b.min.x - a.max.x).max(a.min.x - b.max.x).max(0.0);
    let dy = (b.min.y - a.max.y).max(a.min.y - b.max.y).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

/// Convex hull (counter-clockwise, no collinear points).
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Region covered by translating the convex polygon `poly` by `motion`.
pub fn swept_translation(poly: &Polygon, motion: Vec2) -> Polygon {
    let mut pts = poly.vertices.clone();
    pts.extend(poly.vertices.iter().map(|v| *v + motion));
    let hull = convex_hull(&pts);
    if hull.len() < 3 {
        return poly.clone();
    }
    Polygon::from_ccw_unchecked(hull)
}

fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let s = b - a;
    let denom = dir.cross(s);
    if denom.abs() < 1e-15 {
        // parallel: only collinear overlap matters
        if (a - origin).cross(dir).abs() > 1e-12 {
            return None;
        }
        let ta = (a - origin).dot(dir);
        let tb = (b - origin).dot(dir);
        let (lo, hi) = (ta.min(tb), ta.max(tb));
        if hi < 0.0 {
            return None;
        }
        return Some(lo.max(0.0));
    }
    let t = (a - origin).cross(s) / denom;
    let u = (a - origin).cross(dir) / denom;
    (t >= -1e-12 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t.max(0.0))
}

/// First contact when the segment `[a, b]` is translated along the unit
/// vector `dir` towards `poly`. Returns the travel distance and the contact
/// point on the polygon, or `None` if the sweep never touches it. A flat
/// contact reports the midpoint of the touching span.
pub fn sweep_segment(a: Vec2, b: Vec2, dir: Vec2, poly: &Polygon) -> Option<(f64, Vec2)> {
    let mut hits: Vec<(f64, Vec2)> = Vec::new();
    for (e0, e1) in poly.edges() {
        for q in [a, b] {
            if let Some(t) = ray_segment(q, dir, e0, e1) {
                hits.push((t, q + dir * t));
            }
        }
    }
    for &v in poly.vertices() {
        if let Some(t) = ray_segment(v, -dir, a, b) {
            hits.push((t, v));
        }
    }
    let t = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    if !t.is_finite() {
        return None;
    }
    let along = b - a;
    let (mut lo, mut hi) = (None::<(f64, Vec2)>, None::<(f64, Vec2)>);
    for &(ht, p) in &hits {
        if ht > t + 1e-9 {
            continue;
        }
        let s = (p - a).dot(along);
        if lo.is_none_or(|(ls, _)| s < ls) {
            lo = Some((s, p));
        }
        if hi.is_none_or(|(hs, _)| s > hs) {
            hi = Some((s, p));
        }
    }
    let (lo, hi) = (lo?.1, hi?.1);
    Some((t, (lo + hi) * 0.5))
}

/// Evenly spaced interpolation parameters in `(0, 1]` so that consecutive
/// samples along a path of `length` are at most `max_step` apart.
pub fn segment_samples(length: f64, max_step: f64) -> impl Iterator<Item = f64> {
    let n = if length <= 0.0 {
        1
    } else {
        ((length / max_step).ceil() as usize).max(1)
    };
    (1..=n).map(move |k| k as f64 / n as f64)
}

/// Wraps an angle in degrees to `[0, 360)`.
pub fn wrap_deg(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Uniform grid over an axis-aligned workspace anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub resolution: f64,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn in_bounds(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new((i as f64 + 0.5) * self.resolution, (j as f64 + 0.5) * self.resolution)
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let i = (p.x / self.resolution).floor();
        let j = (p.y / self.resolution).floor();
        self.in_bounds(i as i64, j as i64).then_some((i as usize, j as usize))
    }

    /// Cells whose centers fall inside `poly`, in row-major order.
    pub fn rasterize(&self, poly: &Polygon) -> Vec<(usize, usize)> {
        let bb = poly.aabb();
        let r = self.resolution;
        let i0 = ((bb.min.x / r - 0.5).floor().max(0.0)) as usize;
        let j0 = ((bb.min.y / r - 0.5).floor().max(0.0)) as usize;
        let i1 = ((bb.max.x / r - 0.5).ceil().max(0.0) as usize).min(self.nx.saturating_sub(1));
        let j1 = ((bb.max.y / r - 0.5).ceil().max(0.0) as usize).min(self.ny.saturating_sub(1));
        let mut cells = Vec::new();
        if self.nx == 0 || self.ny == 0 {
            return cells;
        }
        for j in j0..=j1 {
            for i in i0..=i1 {
                if poly.contains(self.cell_center(i, j)) {
                    cells.push((i, j));
                }
            }
        }
        cells
    }
}
