//! Distance-to-goal oracles that supervise tree construction.
//!
//! [`VisibilityGraph`] is exact for a point robot among polygons;
//! [`Roadmap`] is a seeded k-nearest PRM* whose cost-to-goal is solved once
//! by a backward Dijkstra pass. [`Euclidean`] and [`Affine`] are analytic
//! oracles for obstacle-free checks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Environment, Point2};

/// A cost-to-goal function `d_g(x) >= 0`, `+inf` when unreachable.
pub trait DistanceOracle {
    fn dim(&self) -> usize;

    fn goal(&self) -> &[f64];

    fn evaluate(&self, x: &[f64]) -> f64;

    /// Whether the straight segment between two configurations is collision-free.
    fn segment_free(&self, a: &[f64], b: &[f64]) -> bool {
        let _ = (a, b);
        true
    }
}

impl<T: DistanceOracle + ?Sized> DistanceOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn goal(&self) -> &[f64] {
        (**self).goal()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
    fn segment_free(&self, a: &[f64], b: &[f64]) -> bool {
        (**self).segment_free(a, b)
    }
}

/// Straight-line distance to the goal, in any dimension.
#[derive(Debug, Clone)]
pub struct Euclidean {
    goal: Vec<f64>,
}

impl Euclidean {
    pub fn new(goal: Vec<f64>) -> Self {
        Self { goal }
    }
}

impl DistanceOracle for Euclidean {
    fn dim(&self) -> usize {
        self.goal.len()
    }
    fn goal(&self) -> &[f64] {
        &self.goal
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.goal)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// `d(x) = bias + weights . x`. Not a true distance; used to probe exactness.
#[derive(Debug, Clone)]
pub struct Affine {
    pub bias: f64,
    pub weights: Vec<f64>,
    goal: Vec<f64>,
}

impl Affine {
    pub fn new(bias: f64, weights: Vec<f64>) -> Self {
        let goal = vec![0.0; weights.len()];
        Self {
            bias,
            weights,
            goal,
        }
    }
}

impl DistanceOracle for Affine {
    fn dim(&self) -> usize {
        self.weights.len()
    }
    fn goal(&self) -> &[f64] {
        &self.goal
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.bias + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Frontier {
    cost: f64,
    vertex: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over an undirected weighted adjacency list.
pub(crate) fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier {
        cost: 0.0,
        vertex: source,
    });
    while let Some(Frontier { cost, vertex }) = heap.pop() {
        if cost > dist[vertex] {
            continue;
        }
        for &(next, w) in &adjacency[vertex] {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                heap.push(Frontier {
                    cost: c,
                    vertex: next,
                });
            }
        }
    }
    dist
}

/// Visibility graph over obstacle corners plus the goal, with exact
/// shortest-path costs to the goal.
#[derive(Debug, Clone)]
pub struct VisibilityGraph {
    env: Environment,
    goal: Vec<f64>,
    vertices: Vec<Point2>,
    adjacency: Vec<Vec<(usize, f64)>>,
    cost_to_goal: Vec<f64>,
}

impl VisibilityGraph {
    /// The goal is vertex 0; obstacle corners follow in obstacle order.
    pub fn build(env: &Environment, goal: Point2) -> Result<Self> {
        if !env.point_in_free_space(goal) {
            return Err(Error::Construction(format!(
                "goal {goal:?} is not in free space"
            )));
        }
        let mut vertices = vec![goal];
        vertices.extend(
            env.obstacles()
                .iter()
                .flat_map(|o| o.vertices().iter().copied()),
        );
        let n = vertices.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if env.segment_visible(vertices[i], vertices[j]) {
                    let w = vertices[i].dist(vertices[j]);
                    adjacency[i].push((j, w));
                    adjacency[j].push((i, w));
                }
            }
        }
        let cost_to_goal = dijkstra(&adjacency, 0);
        Ok(Self {
            env: env.clone(),
            goal: vec![goal.x, goal.y],
            vertices,
            adjacency,
            cost_to_goal,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    pub fn cost_to_goal(&self) -> &[f64] {
        &self.cost_to_goal
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    /// Exact geodesic distance from `x` to the goal.
    pub fn distance(&self, x: Point2) -> f64 {
        if !self.env.point_in_free_space(x) {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for (v, &c) in self.vertices.iter().zip(&self.cost_to_goal) {
            if !c.is_finite() {
                continue;
            }
            let candidate = x.dist(*v) + c;
            if candidate < best && self.env.segment_visible(x, *v) {
                best = candidate;
            }
        }
        best
    }
}

impl DistanceOracle for VisibilityGraph {
    fn dim(&self) -> usize {
        2
    }
    fn goal(&self) -> &[f64] {
        &self.goal
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.distance(Point2::from_slice(x))
    }
    fn segment_free(&self, a: &[f64], b: &[f64]) -> bool {
        self.env
            .segment_visible(Point2::from_slice(a), Point2::from_slice(b))
    }
}

/// Neighbour count `ceil(2e ln n)` for a roadmap of `n` vertices, at least 1.
pub fn prm_star_k(n: usize) -> usize {
    let k = (2.0 * std::f64::consts::E * (n as f64).ln()).ceil();
    (k as usize).max(1)
}

/// Seeded k-nearest PRM* roadmap with cached cost-to-goal.
pub struct Roadmap {
    env: Environment,
    goal: Vec<f64>,
    samples: Vec<Point2>,
    adjacency: Vec<Vec<(usize, f64)>>,
    goal_index: usize,
    cost_to_goal: Vec<f64>,
    edge_count: usize,
    resolution: f64,
    index: ImmutableKdTree<f64, 2>,
}

impl std::fmt::Debug for Roadmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Roadmap")
            .field("vertices", &self.samples.len())
            .field("edges", &self.edge_count)
            .field("goal_index", &self.goal_index)
            .finish()
    }
}

impl Roadmap {
    /// Samples `n_samples` free configurations, appends the goal, and links
    /// each vertex to its `prm_star_k` nearest neighbours where the segment
    /// is collision-free at a resolution of 1e-3 of the workspace diameter.
    pub fn build(env: &Environment, goal: Point2, n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::Contract(
                "a roadmap needs at least one sample".into(),
            ));
        }
        if !env.point_in_free_space(goal) {
            return Err(Error::Construction(format!(
                "goal {goal:?} is not in free space"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = env.bounds();
        let mut samples = Vec::with_capacity(n_samples + 1);
        let max_rejections = 1000 * n_samples;
        let mut rejections = 0usize;
        while samples.len() < n_samples {
            let p = Point2::new(
                rng.random_range(b.lo.x..=b.hi.x),
                rng.random_range(b.lo.y..=b.hi.y),
            );
            if env.point_in_free_space(p) {
                samples.push(p);
            } else {
                rejections += 1;
                if rejections >= max_rejections {
                    return Err(Error::Construction(format!(
                        "free-space sampling failed after {rejections} rejections"
                    )));
                }
            }
        }
        let goal_index = samples.len();
        samples.push(goal);

        let points: Vec<[f64; 2]> = samples.iter().map(|p| [p.x, p.y]).collect();
        let index = ImmutableKdTree::new_from_slice(&points);
        let n = samples.len();
        let k = prm_star_k(n).min(n - 1);
        let resolution = 1e-3 * env.diameter();

        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut edge_count = 0;
        for i in 0..n {
            let found =
                index.nearest_n::<SquaredEuclidean>(&points[i], NonZero::new(k + 1).unwrap());
            for nb in found {
                let j = nb.item as usize;
                if j == i {
                    continue;
                }
                let (lo, hi) = (i.min(j), i.max(j));
                if adjacency[lo].iter().any(|&(v, _)| v == hi) {
                    continue;
                }
                if env.segment_free_sampled(samples[lo], samples[hi], resolution) {
                    let w = samples[lo].dist(samples[hi]);
                    adjacency[lo].push((hi, w));
                    adjacency[hi].push((lo, w));
                    edge_count += 1;
                }
            }
        }
        let cost_to_goal = dijkstra(&adjacency, goal_index);
        Ok(Self {
            env: env.clone(),
            goal: vec![goal.x, goal.y],
            samples,
            adjacency,
            goal_index,
            cost_to_goal,
            edge_count,
            resolution,
            index,
        })
    }

    pub fn samples(&self) -> &[Point2] {
        &self.samples
    }

    pub fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    pub fn goal_index(&self) -> usize {
        self.goal_index
    }

    pub fn cost_to_goal(&self) -> &[f64] {
        &self.cost_to_goal
    }

    pub fn vertex_count(&self) -> usize {
        self.samples.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Plain storage estimate: 16 bytes per vertex, 24 per edge.
    pub fn estimated_bytes(&self) -> usize {
        self.vertex_count() * 16 + self.edge_count * 24
    }

    /// `|x - v*| + cost(v*)` for the nearest roadmap vertex `v*` that `x` can
    /// reach by a collision-free straight segment and that has finite cost.
    pub fn distance(&self, x: Point2) -> f64 {
        if !self.env.point_in_free_space(x) {
            return f64::INFINITY;
        }
        let n = self.samples.len();
        let query = [x.x, x.y];
        let mut checked = 0;
        let mut batch = 16.min(n);
        loop {
            let found = self
                .index
                .nearest_n::<SquaredEuclidean>(&query, NonZero::new(batch).unwrap());
            for nb in found.iter().skip(checked) {
                let v = nb.item as usize;
                if self.cost_to_goal[v].is_finite()
                    && self
                        .env
                        .segment_free_sampled(x, self.samples[v], self.resolution)
                {
                    return nb.distance.sqrt() + self.cost_to_goal[v];
                }
            }
            checked = found.len();
            if batch >= n {
                return f64::INFINITY;
            }
            batch = (batch * 4).min(n);
        }
    }
}

impl DistanceOracle for Roadmap {
    fn dim(&self) -> usize {
        2
    }
    fn goal(&self) -> &[f64] {
        &self.goal
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.distance(Point2::from_slice(x))
    }
    fn segment_free(&self, a: &[f64], b: &[f64]) -> bool {
        self.env
            .segment_visible(Point2::from_slice(a), Point2::from_slice(b))
    }
}
