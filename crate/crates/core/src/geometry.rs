//! Planar polygonal environments and the collision/visibility predicates
//! every oracle and planner is built on.
//!
//! Obstacles are closed sets: a point on an obstacle edge is not free.
//! Segments may graze obstacle edges and corners, but a segment squeezed
//! between two blocked regions (two touching obstacles, or an obstacle
//! flush against the workspace boundary) is not visible.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to classify degenerate contact.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Builds a point from the first two components of a configuration.
    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned box, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Point2,
    pub hi: Point2,
}

impl Aabb {
    pub fn new(lo: Point2, hi: Point2) -> Self {
        Self { lo, hi }
    }

    fn around(points: &[Point2]) -> Self {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        Self { lo, hi }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.lo.x - EPS
            && p.x <= self.hi.x + EPS
            && p.y >= self.lo.y - EPS
            && p.y <= self.hi.y + EPS
    }

    fn contains_strictly(&self, p: Point2) -> bool {
        p.x > self.lo.x && p.x < self.hi.x && p.y > self.lo.y && p.y < self.hi.y
    }

    fn overlaps(&self, o: &Aabb) -> bool {
        self.lo.x <= o.hi.x + EPS
            && o.lo.x <= self.hi.x + EPS
            && self.lo.y <= o.hi.y + EPS
            && o.lo.y <= self.hi.y + EPS
    }

    pub fn diameter(&self) -> f64 {
        self.lo.dist(self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Simple polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
    bbox: Aabb,
}

impl Polygon {
    /// Validates and stores a polygon. Clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Input(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::Input("polygon vertex is not finite".into()));
        }
        let area = signed_area(&vertices);
        if area.abs() <= EPS {
            return Err(Error::Input("polygon has zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if a.dist(b) <= EPS {
                return Err(Error::Input(format!(
                    "polygon has a repeated vertex at index {i}"
                )));
            }
            for j in (i + 1)..n {
                // adjacent edges share exactly one endpoint
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_touch(a, b, c, d) {
                    return Err(Error::Input(format!(
                        "polygon is self-intersecting (edges {i} and {j})"
                    )));
                }
            }
        }
        let bbox = Aabb::around(&vertices);
        Ok(Self { vertices, bbox })
    }

    /// Axis-aligned rectangle `[lo, hi]`.
    pub fn rect(lo: Point2, hi: Point2) -> Result<Self> {
        Self::new(vec![
            lo,
            Point2::new(hi.x, lo.y),
            hi,
            Point2::new(lo.x, hi.y),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn locate(&self, p: Point2) -> Location {
        if !self.bbox.contains(p) {
            return Location::Outside;
        }
        if self
            .edges()
            .any(|(a, b)| point_segment_dist(p, a, b) <= EPS)
        {
            return Location::Boundary;
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
        if inside {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    fn dist_to_boundary(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_dist(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

pub fn point_segment_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    let v = (b - a).cross(c - a);
    let scale = (b - a).norm() * (c - a).norm();
    if v.abs() <= EPS * scale.max(1.0) {
        0.0
    } else {
        v
    }
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    point_segment_dist(p, a, b) <= EPS
}

/// Closed segment intersection (touching counts).
pub fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d)
}

#[derive(Debug, Serialize, Deserialize)]
struct EnvironmentFile {
    bounds: [[f64; 2]; 2],
    obstacles: Vec<Vec<[f64; 2]>>,
}

/// Workspace bounds plus polygonal obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    bounds: Aabb,
    obstacles: Vec<Polygon>,
    seam_offset: f64,
}

impl Environment {
    pub fn new(bounds: Aabb, obstacles: Vec<Polygon>) -> Result<Self> {
        if !bounds.lo.is_finite()
            || !bounds.hi.is_finite()
            || bounds.lo.x >= bounds.hi.x
            || bounds.lo.y >= bounds.hi.y
        {
            return Err(Error::Input(format!(
                "bounds must satisfy lo < hi, got {:?}",
                bounds
            )));
        }
        for (i, o) in obstacles.iter().enumerate() {
            if let Some(v) = o.vertices().iter().find(|v| !bounds.contains(**v)) {
                return Err(Error::Input(format!(
                    "obstacle {i} vertex {v:?} lies outside the bounds"
                )));
            }
        }
        Ok(Self {
            seam_offset: 1e-9 * bounds.diameter().max(1.0),
            bounds,
            obstacles,
        })
    }

    /// Obstacle-free workspace.
    pub fn empty(bounds: Aabb) -> Result<Self> {
        Self::new(bounds, Vec::new())
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.diameter()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: EnvironmentFile = serde_json::from_str(text)?;
        let obstacles = raw
            .obstacles
            .into_iter()
            .enumerate()
            .map(|(i, poly)| {
                Polygon::new(poly.into_iter().map(Point2::from).collect())
                    .map_err(|e| Error::Input(format!("obstacle {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            Aabb::new(raw.bounds[0].into(), raw.bounds[1].into()),
            obstacles,
        )
    }

    pub fn to_json(&self) -> String {
        let raw = EnvironmentFile {
            bounds: [self.bounds.lo.into(), self.bounds.hi.into()],
            obstacles: self
                .obstacles
                .iter()
                .map(|o| o.vertices().iter().map(|&p| p.into()).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("environment serializes")
    }

    /// True iff `p` lies inside the bounds and strictly outside every obstacle.
    pub fn point_in_free_space(&self, p: Point2) -> bool {
        p.is_finite()
            && self.bounds.contains(p)
            && self
                .obstacles
                .iter()
                .all(|o| o.locate(p) == Location::Outside)
    }

    fn blocked_open(&self, p: Point2) -> bool {
        !self.bounds.contains_strictly(p)
            || self
                .obstacles
                .iter()
                .any(|o| o.locate(p) == Location::Inside)
    }

    /// True iff the open segment `(a, b)` avoids every obstacle interior and
    /// stays within the bounds.
    pub fn segment_visible(&self, a: Point2, b: Point2) -> bool {
        if !a.is_finite() || !b.is_finite() || !self.bounds.contains(a) || !self.bounds.contains(b)
        {
            return false;
        }
        let d = b - a;
        let len = d.norm();
        if len <= EPS {
            return self
                .obstacles
                .iter()
                .all(|o| o.locate(a) != Location::Inside);
        }
        let seg_box = Aabb::around(&[a, b]);
        let normal = Point2::new(-d.y / len, d.x / len) * self.seam_offset;
        let mut ts: Vec<f64> = Vec::with_capacity(8);
        for obstacle in &self.obstacles {
            if !seg_box.overlaps(&obstacle.bbox) {
                continue;
            }
            ts.clear();
            ts.push(0.0);
            ts.push(1.0);
            for (p, q) in obstacle.edges() {
                crossing_params(a, d, p, q, &mut ts);
            }
            ts.sort_by(f64::total_cmp);
            for w in ts.windows(2) {
                if w[1] - w[0] <= EPS {
                    continue;
                }
                let m = a + d * (0.5 * (w[0] + w[1]));
                match obstacle.locate(m) {
                    Location::Inside => return false,
                    Location::Boundary => {
                        if self.blocked_open(m + normal) && self.blocked_open(m - normal) {
                            return false;
                        }
                    }
                    Location::Outside => {}
                }
            }
        }
        true
    }

    /// Fixed-resolution check that every sampled point on `[a, b]` is free.
    pub fn segment_free_sampled(&self, a: Point2, b: Point2, resolution: f64) -> bool {
        let len = a.dist(b);
        let steps = (len / resolution).ceil().max(1.0) as usize;
        let seg_box = Aabb::around(&[a, b]);
        if !self.bounds.contains(a) || !self.bounds.contains(b) {
            return false;
        }
        let near: Vec<&Polygon> = self
            .obstacles
            .iter()
            .filter(|o| seg_box.overlaps(&o.bbox))
            .collect();
        (0..=steps).all(|i| {
            let p = a + (b - a) * (i as f64 / steps as f64);
            near.iter().all(|o| o.locate(p) == Location::Outside)
        })
    }

    /// Whether `shape` placed at `pose` overlaps an obstacle or leaves the bounds.
    pub fn shape_in_collision(&self, shape: &RobotShape, pose: &[f64]) -> Result<bool> {
        if pose.len() != shape.dim() {
            return Err(Error::Contract(format!(
                "pose has dimension {}, shape expects {}",
                pose.len(),
                shape.dim()
            )));
        }
        let c = Point2::from_slice(pose);
        if !c.is_finite() {
            return Ok(true);
        }
        Ok(match *shape {
            RobotShape::Disc { radius } => {
                let b = self.bounds;
                if c.x - radius < b.lo.x - EPS
                    || c.x + radius > b.hi.x + EPS
                    || c.y - radius < b.lo.y - EPS
                    || c.y + radius > b.hi.y + EPS
                {
                    return Ok(true);
                }
                let reach = Aabb::new(
                    c - Point2::new(radius, radius),
                    c + Point2::new(radius, radius),
                );
                self.obstacles
                    .iter()
                    .filter(|o| o.bbox.overlaps(&reach))
                    .any(|o| {
                        o.locate(c) != Location::Outside
                            || (radius > 0.0 && o.dist_to_boundary(c) <= radius)
                    })
            }
            RobotShape::Rectangle { .. } => {
                let corners = shape.rect_corners(pose);
                if corners.iter().any(|&p| !self.bounds.contains(p)) {
                    return Ok(true);
                }
                let reach = Aabb::around(&corners);
                self.obstacles
                    .iter()
                    .filter(|o| o.bbox.overlaps(&reach))
                    .any(|o| rect_hits_polygon(&corners, o))
            }
        })
    }
}

fn crossing_params(a: Point2, d: Point2, p: Point2, q: Point2, ts: &mut Vec<f64>) {
    let e = q - p;
    let denom = d.cross(e);
    let scale = d.norm() * e.norm();
    let ap = p - a;
    if denom.abs() > EPS * scale {
        let t = ap.cross(e) / denom;
        let u = ap.cross(d) / denom;
        let tol_u = EPS / e.norm().max(EPS);
        if (0.0..=1.0).contains(&t) && u >= -tol_u && u <= 1.0 + tol_u {
            ts.push(t);
        }
    } else if ap.cross(d).abs() <= EPS * d.norm().max(1.0) * ap.norm().max(1.0) {
        let len2 = d.dot(d);
        for v in [p, q] {
            let t = (v - a).dot(d) / len2;
            if (0.0..=1.0).contains(&t) {
                ts.push(t);
            }
        }
    }
}

fn rect_hits_polygon(corners: &[Point2; 4], poly: &Polygon) -> bool {
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        if poly.edges().any(|(p, q)| segments_touch(a, b, p, q)) {
            return true;
        }
    }
    // no edge contact: either one contains the other or they are disjoint
    poly.locate(corners[0]) != Location::Outside || point_in_convex(poly.vertices()[0], corners)
}

fn point_in_convex(p: Point2, ccw: &[Point2]) -> bool {
    let n = ccw.len();
    (0..n).all(|i| (ccw[(i + 1) % n] - ccw[i]).cross(p - ccw[i]) >= -EPS)
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Shortest signed angular difference `b - a`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(b - a)
}

/// Robot footprint. Discs are posed as `(x, y)`, rectangles as `(x, y, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RobotShape {
    Disc { radius: f64 },
    Rectangle { width: f64, height: f64 },
}

impl RobotShape {
    pub fn dim(&self) -> usize {
        match self {
            RobotShape::Disc { .. } => 2,
            RobotShape::Rectangle { .. } => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RobotShape::Disc { radius } => radius > 0.0 && radius.is_finite(),
            RobotShape::Rectangle { width, height } => {
                width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "robot dimensions must be positive: {self:?}"
            )))
        }
    }

    /// Half-diagonal for rectangles, radius for discs.
    pub fn effective_radius(&self) -> f64 {
        match *self {
            RobotShape::Disc { radius } => radius,
            RobotShape::Rectangle { width, height } => 0.5 * width.hypot(height),
        }
    }

    /// Corners of a posed rectangle in counter-clockwise order.
    pub fn rect_corners(&self, pose: &[f64]) -> [Point2; 4] {
        let (w, h) = match *self {
            RobotShape::Rectangle { width, height } => (width, height),
            RobotShape::Disc { radius } => (2.0 * radius, 2.0 * radius),
        };
        let c = Point2::from_slice(pose);
        let theta = pose.get(2).copied().unwrap_or(0.0);
        let (s, co) = theta.sin_cos();
        let ux = Point2::new(co, s) * (w / 2.0);
        let uy = Point2::new(-s, co) * (h / 2.0);
        [c - ux - uy, c + ux - uy, c + ux + uy, c - ux + uy]
    }
}

/// Closed-set overlap between two posed robots.
pub fn shapes_overlap(sa: &RobotShape, pa: &[f64], sb: &RobotShape, pb: &[f64]) -> bool {
    let ca = Point2::from_slice(pa);
    let cb = Point2::from_slice(pb);
    if ca.dist(cb) > sa.effective_radius() + sb.effective_radius() + EPS {
        return false;
    }
    match (*sa, *sb) {
        (RobotShape::Disc { radius: ra }, RobotShape::Disc { radius: rb }) => {
            ca.dist(cb) <= ra + rb
        }
        (RobotShape::Disc { radius }, RobotShape::Rectangle { .. }) => {
            disc_hits_rect(ca, radius, &sb.rect_corners(pb))
        }
        (RobotShape::Rectangle { .. }, RobotShape::Disc { radius }) => {
            disc_hits_rect(cb, radius, &sa.rect_corners(pa))
        }
        (RobotShape::Rectangle { .. }, RobotShape::Rectangle { .. }) => {
            convex_overlap_sat(&sa.rect_corners(pa), &sb.rect_corners(pb))
        }
    }
}

fn disc_hits_rect(c: Point2, r: f64, corners: &[Point2; 4]) -> bool {
    if point_in_convex(c, corners) {
        return true;
    }
    (0..4).any(|i| point_segment_dist(c, corners[i], corners[(i + 1) % 4]) <= r)
}

/// Separating-axis test for two convex polygons; touching counts as overlap.
pub fn convex_overlap_sat(a: &[Point2], b: &[Point2]) -> bool {
    for poly in [a, b] {
        let n = poly.len();
        for i in 0..n {
            let e = poly[(i + 1) % n] - poly[i];
            let axis = Point2::new(-e.y, e.x);
            let project = |ps: &[Point2]| {
                ps.iter()
                    .map(|p| p.dot(axis))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            };
            let (alo, ahi) = project(a);
            let (blo, bhi) = project(b);
            let tol = EPS * axis.norm();
            if ahi < blo - tol || bhi < alo - tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Aabb {
        Aabb::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
    }

    fn square_env() -> Environment {
        let sq = Polygon::rect(Point2::new(0.4, 0.4), Point2::new(0.6, 0.6)).unwrap();
        Environment::new(unit(), vec![sq]).unwrap()
    }

    #[test]
    fn free_space_examples() {
        let empty = Environment::empty(unit()).unwrap();
        assert!(empty.point_in_free_space(Point2::new(0.5, 0.5)));
        assert!(!square_env().point_in_free_space(Point2::new(0.5, 0.5)));
        assert!(!empty.point_in_free_space(Point2::new(2.0, 2.0)));
        // closed obstacles
        assert!(!square_env().point_in_free_space(Point2::new(0.4, 0.5)));
        assert!(!square_env().point_in_free_space(Point2::new(0.6, 0.6)));
    }

    #[test]
    fn visibility_examples() {
        let empty = Environment::empty(unit()).unwrap();
        let env = square_env();
        assert!(empty.segment_visible(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)));
        assert!(!env.segment_visible(Point2::new(0.0, 0.5), Point2::new(1.0, 0.5)));
        assert!(env.segment_visible(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)));
    }

    #[test]
    fn grazing_edges_and_corners_are_visible() {
        let env = square_env();
        // along an edge
        assert!(env.segment_visible(Point2::new(0.4, 0.4), Point2::new(0.6, 0.4)));
        assert!(env.segment_visible(Point2::new(0.2, 0.4), Point2::new(0.8, 0.4)));
        // through a single corner
        assert!(env.segment_visible(Point2::new(0.3, 0.5), Point2::new(0.5, 0.7)));
        // diagonal through the interior
        assert!(!env.segment_visible(Point2::new(0.4, 0.4), Point2::new(0.6, 0.6)));
        // just clipping the interior
        assert!(!env.segment_visible(Point2::new(0.3, 0.5), Point2::new(0.5, 0.69)));
    }

    #[test]
    fn seams_against_bounds_or_other_obstacles_are_blocked() {
        let wall = Polygon::rect(Point2::new(0.4, 0.0), Point2::new(0.5, 0.6)).unwrap();
        let env = Environment::new(unit(), vec![wall]).unwrap();
        assert!(!env.segment_visible(Point2::new(0.3, 0.0), Point2::new(0.6, 0.0)));
        assert!(!env.segment_visible(Point2::new(0.4, 0.0), Point2::new(0.5, 0.0)));
        // the top edge faces free space
        assert!(env.segment_visible(Point2::new(0.4, 0.6), Point2::new(0.5, 0.6)));

        let a = Polygon::rect(Point2::new(0.2, 0.2), Point2::new(0.5, 0.4)).unwrap();
        let b = Polygon::rect(Point2::new(0.5, 0.2), Point2::new(0.8, 0.4)).unwrap();
        let env = Environment::new(unit(), vec![a, b]).unwrap();
        assert!(!env.segment_visible(Point2::new(0.5, 0.2), Point2::new(0.5, 0.4)));
    }

    #[test]
    fn concave_polygon_visibility() {
        // U shape opening upward
        let u = Polygon::new(
            [
                (0.2, 0.2),
                (0.8, 0.2),
                (0.8, 0.8),
                (0.7, 0.8),
                (0.7, 0.3),
                (0.3, 0.3),
                (0.3, 0.8),
                (0.2, 0.8),
            ]
            .into_iter()
            .map(|(x, y)| Point2::new(x, y))
            .collect(),
        )
        .unwrap();
        let env = Environment::new(unit(), vec![u]).unwrap();
        assert!(env.segment_visible(Point2::new(0.5, 0.9), Point2::new(0.5, 0.31)));
        assert!(!env.segment_visible(Point2::new(0.5, 0.9), Point2::new(0.5, 0.1)));
        assert!(env.segment_visible(Point2::new(0.3, 0.8), Point2::new(0.7, 0.8)));
        assert!(env.point_in_free_space(Point2::new(0.5, 0.5)));
    }

    #[test]
    fn self_intersecting_polygon_rejected() {
        let bow = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(Polygon::new(bow).is_err());
        assert!(Polygon::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]).is_err());
        assert!(Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0)
        ])
        .is_err());
    }

    #[test]
    fn clockwise_input_is_normalized() {
        let cw = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(cw.area() > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"bounds": [[0,0],[1,1]], "obstacles": [[[0.4,0.4],[0.6,0.4],[0.6,0.6],[0.4,0.6]]]}"#;
        let env = Environment::from_json(text).unwrap();
        assert_eq!(env, square_env());
        assert_eq!(Environment::from_json(&env.to_json()).unwrap(), env);
        let bad = r#"{"bounds": [[0,0],[1,1]], "obstacles": [[[0,0],[1,1],[1,0],[0,1]]]}"#;
        assert!(Environment::from_json(bad).is_err());
        let outside = r#"{"bounds": [[0,0],[1,1]], "obstacles": [[[0,0],[2,0],[2,2]]]}"#;
        assert!(Environment::from_json(outside).is_err());
    }

    #[test]
    fn shape_collision_examples() {
        let empty = Environment::empty(unit()).unwrap();
        let disc = |r| RobotShape::Disc { radius: r };
        assert!(!empty.shape_in_collision(&disc(0.05), &[0.5, 0.5]).unwrap());
        assert!(square_env()
            .shape_in_collision(&disc(0.2), &[0.5, 0.5])
            .unwrap());
        assert!(empty.shape_in_collision(&disc(0.05), &[0.02, 0.5]).unwrap());
        assert!(empty.shape_in_collision(&disc(0.05), &[0.5]).is_err());

        // corridor of width 0.2 along x
        let lower = Polygon::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 0.4)).unwrap();
        let upper = Polygon::rect(Point2::new(0.0, 0.6), Point2::new(1.0, 1.0)).unwrap();
        let corridor = Environment::new(unit(), vec![lower, upper]).unwrap();
        let rect = RobotShape::Rectangle {
            width: 0.4,
            height: 0.1,
        };
        assert!(corridor
            .shape_in_collision(&rect, &[0.5, 0.5, std::f64::consts::FRAC_PI_2])
            .unwrap());
        assert!(!corridor
            .shape_in_collision(&rect, &[0.5, 0.5, 0.0])
            .unwrap());

        // SAT oracle agrees on the rotated placement against each wall
        let corners = rect.rect_corners(&[0.5, 0.5, std::f64::consts::FRAC_PI_2]);
        assert!(convex_overlap_sat(
            &corners,
            corridor.obstacles()[0].vertices()
        ));
    }

    #[test]
    fn rectangle_inside_or_around_obstacle() {
        let env = square_env();
        let tiny = RobotShape::Rectangle {
            width: 0.05,
            height: 0.05,
        };
        assert!(env.shape_in_collision(&tiny, &[0.5, 0.5, 0.3]).unwrap());
        let big = RobotShape::Rectangle {
            width: 0.5,
            height: 0.5,
        };
        assert!(env.shape_in_collision(&big, &[0.5, 0.5, 0.0]).unwrap());
        assert!(!env.shape_in_collision(&tiny, &[0.2, 0.2, 0.3]).unwrap());
    }

    #[test]
    fn robot_robot_overlap() {
        let d = RobotShape::Disc { radius: 0.1 };
        assert!(shapes_overlap(&d, &[0.0, 0.0], &d, &[0.19, 0.0]));
        assert!(!shapes_overlap(&d, &[0.0, 0.0], &d, &[0.21, 0.0]));
        let r = RobotShape::Rectangle {
            width: 0.4,
            height: 0.1,
        };
        assert!(shapes_overlap(&r, &[0.0, 0.0, 0.0], &d, &[0.25, 0.0]));
        assert!(!shapes_overlap(&r, &[0.0, 0.0, 0.0], &d, &[0.0, 0.2]));
        assert!(shapes_overlap(&r, &[0.0, 0.0, 0.0], &r, &[0.0, 0.0, 1.0]));
        assert!(!shapes_overlap(&r, &[0.0, 0.0, 0.0], &r, &[0.0, 0.11, 0.0]));
    }

    #[test]
    fn angle_wrapping() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((angle_diff(PI - 0.1, -PI + 0.1) - 0.2).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pt() -> impl Strategy<Value = Point2> {
            (0.0f64..1.0, 0.0f64..1.0).prop_map(|(x, y)| Point2::new(x, y))
        }

        proptest! {
            #[test]
            fn visibility_is_symmetric(a in pt(), b in pt()) {
                let env = square_env();
                prop_assert_eq!(env.segment_visible(a, b), env.segment_visible(b, a));
            }

            #[test]
            fn zero_radius_disc_matches_free_space(p in pt()) {
                let env = square_env();
                let hit = env.shape_in_collision(&RobotShape::Disc { radius: 0.0 }, &[p.x, p.y]).unwrap();
                prop_assert_eq!(hit, !env.point_in_free_space(p));
            }
        }
    }
}
