//! Barraquand-Latombe style grid planner over the composite configuration
//! space of one or more robots.
//!
//! Every robot lives on its own lattice anchored at its start: translations
//! move by `translation` units, rectangle headings by `rotation` radians.
//! One step moves a single robot along a single axis. The search is
//! best-first on `f = g + h` with each lattice cell expanded at most once;
//! ties go to lower `f`, then lower `g`, then the lexicographically smaller
//! cell. With no heuristic this is a uniform-cost sweep of the grid.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::{Error, Result};
pub use crate::geometry::RobotShape;
use crate::geometry::{angle_diff, shapes_overlap, wrap_angle, Environment};
use crate::plr::PlrTree;

/// Expansion and wall-clock limits for one search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_expansions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_seconds: Option<f64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_expansions: 1_000_000,
            max_seconds: None,
        }
    }
}

/// Lattice spacing shared by all robots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridResolution {
    pub translation: f64,
    pub rotation: f64,
}

impl GridResolution {
    /// Half the smallest robot extent, and pi/16 heading bins.
    pub fn default_for(robots: &[RobotShape]) -> Self {
        let translation = robots
            .iter()
            .map(|r| match *r {
                RobotShape::Disc { radius } => radius / 2.0,
                RobotShape::Rectangle { width, height } => width.min(height) / 2.0,
            })
            .fold(f64::INFINITY, f64::min);
        Self {
            translation,
            rotation: PI / 16.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanProblem {
    pub env: Environment,
    pub robots: Vec<RobotShape>,
    pub starts: Vec<Vec<f64>>,
    pub goals: Vec<Vec<f64>>,
    pub grid: GridResolution,
    pub budget: Budget,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum EnvSource {
    Path(String),
    Inline(serde_json::Value),
}

#[derive(Debug, Deserialize, Serialize)]
struct ProblemFile {
    environment: EnvSource,
    robots: Vec<RobotShape>,
    starts: Vec<Vec<f64>>,
    goals: Vec<Vec<f64>>,
    #[serde(default)]
    grid: Option<GridResolution>,
    #[serde(default)]
    budget: Option<Budget>,
}

impl PlanProblem {
    pub fn new(
        env: Environment,
        robots: Vec<RobotShape>,
        starts: Vec<Vec<f64>>,
        goals: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let grid = GridResolution::default_for(&robots);
        let problem = Self {
            env,
            robots,
            starts,
            goals,
            grid,
            budget: Budget::default(),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_grid(mut self, grid: GridResolution) -> Result<Self> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    /// Reads a problem file. `environment` is either an inline environment
    /// object or a path resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: ProblemFile = serde_json::from_str(text)?;
        let env = match raw.environment {
            EnvSource::Inline(v) => Environment::from_json(&v.to_string())?,
            EnvSource::Path(p) => {
                let path = base_dir.map_or_else(|| Path::new(&p).to_path_buf(), |d| d.join(&p));
                Environment::from_json(&std::fs::read_to_string(&path)?)?
            }
        };
        let grid = raw
            .grid
            .unwrap_or_else(|| GridResolution::default_for(&raw.robots));
        let problem = Self {
            env,
            robots: raw.robots,
            starts: raw.starts,
            goals: raw.goals,
            grid,
            budget: raw.budget.unwrap_or_default(),
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Problem file with the environment inlined.
    pub fn to_json(&self) -> String {
        let env: serde_json::Value = serde_json::from_str(&self.env.to_json()).expect("env json");
        let raw = ProblemFile {
            environment: EnvSource::Inline(env),
            robots: self.robots.clone(),
            starts: self.starts.clone(),
            goals: self.goals.clone(),
            grid: Some(self.grid),
            budget: Some(self.budget),
        };
        serde_json::to_string_pretty(&raw).expect("problem serializes")
    }

    pub fn robot_count(&self) -> usize {
        self.robots.len()
    }

    /// Offsets of each robot's slice in the composite state.
    pub fn layout(&self) -> Vec<std::ops::Range<usize>> {
        let mut at = 0;
        self.robots
            .iter()
            .map(|r| {
                let range = at..at + r.dim();
                at += r.dim();
                range
            })
            .collect()
    }

    pub fn composite_dim(&self) -> usize {
        self.robots.iter().map(RobotShape::dim).sum()
    }

    fn rotation_bins(&self) -> i64 {
        (TAU / self.grid.rotation).round().max(1.0) as i64
    }

    fn rotation_step(&self) -> f64 {
        TAU / self.rotation_bins() as f64
    }

    /// Per-robot step size along `axis` of its configuration.
    fn step(&self, axis: usize) -> f64 {
        if axis < 2 {
            self.grid.translation
        } else {
            self.rotation_step()
        }
    }

    fn validate(&self) -> Result<()> {
        let r = self.robots.len();
        if r == 0 {
            return Err(Error::Input("problem has no robots".into()));
        }
        if self.starts.len() != r || self.goals.len() != r {
            return Err(Error::Input(format!(
                "{} robots but {} starts and {} goals",
                r,
                self.starts.len(),
                self.goals.len()
            )));
        }
        if !(self.grid.translation > 0.0 && self.grid.rotation > 0.0) {
            return Err(Error::Input("grid resolution must be positive".into()));
        }
        for (i, shape) in self.robots.iter().enumerate() {
            shape.validate()?;
            for (what, pose) in [("start", &self.starts[i]), ("goal", &self.goals[i])] {
                if pose.len() != shape.dim() {
                    return Err(Error::Input(format!(
                        "robot {i} {what} has {} components, expected {}",
                        pose.len(),
                        shape.dim()
                    )));
                }
            }
        }
        for (what, poses) in [("start", &self.starts), ("goal", &self.goals)] {
            if let Some(v) = first_collision(&self.env, &self.robots, poses) {
                return Err(Error::Input(format!(
                    "{what} configuration is in collision: {v}"
                )));
            }
        }
        Ok(())
    }

    fn start_cell(&self) -> Vec<i64> {
        vec![0; self.composite_dim()]
    }

    fn goal_cell(&self) -> Vec<i64> {
        let bins = self.rotation_bins();
        let mut cell = Vec::with_capacity(self.composite_dim());
        for (i, shape) in self.robots.iter().enumerate() {
            let (s, g) = (&self.starts[i], &self.goals[i]);
            for axis in 0..shape.dim() {
                if axis < 2 {
                    cell.push(((g[axis] - s[axis]) / self.grid.translation).round() as i64);
                } else {
                    let k = (angle_diff(s[axis], g[axis]) / self.rotation_step()).round() as i64;
                    cell.push(k.rem_euclid(bins));
                }
            }
        }
        cell
    }

    /// Continuous composite state for a lattice cell.
    pub fn cell_to_state(&self, cell: &[i64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(cell.len());
        let mut k = 0;
        for (i, shape) in self.robots.iter().enumerate() {
            for axis in 0..shape.dim() {
                let v = self.starts[i][axis] + cell[k] as f64 * self.step(axis);
                out.push(if axis < 2 { v } else { wrap_angle(v) });
                k += 1;
            }
        }
        out
    }
}

fn describe(kind: &str, robots: &[usize]) -> String {
    format!("{kind} (robots {robots:?})")
}

/// First obstacle or robot-robot collision among posed robots, if any.
fn first_collision(env: &Environment, robots: &[RobotShape], poses: &[Vec<f64>]) -> Option<String> {
    for (i, (shape, pose)) in robots.iter().zip(poses).enumerate() {
        if env.shape_in_collision(shape, pose).unwrap_or(true) {
            return Some(describe("obstacle", &[i]));
        }
    }
    for i in 0..robots.len() {
        for j in (i + 1)..robots.len() {
            if shapes_overlap(&robots[i], &poses[i], &robots[j], &poses[j]) {
                return Some(describe("robot overlap", &[i, j]));
            }
        }
    }
    None
}

/// Estimated cost-to-go for a composite state.
pub trait Heuristic {
    fn estimate(&self, state: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Heuristic for F {
    fn estimate(&self, state: &[f64]) -> f64 {
        self(state)
    }
}

/// Sum of per-robot PLR estimates, each clamped at zero. Rectangles query
/// their tree at the center and ignore heading.
pub struct CompositeHeuristic {
    trees: Vec<PlrTree>,
    offsets: Vec<usize>,
}

impl CompositeHeuristic {
    pub fn new(trees: Vec<PlrTree>, robots: &[RobotShape]) -> Result<Self> {
        if trees.len() != robots.len() {
            return Err(Error::Input(format!(
                "{} trees for {} robots",
                trees.len(),
                robots.len()
            )));
        }
        if let Some(t) = trees.iter().find(|t| t.dim() != 2) {
            return Err(Error::Input(format!(
                "heuristic trees must be 2-D, got {}",
                t.dim()
            )));
        }
        let mut offsets = Vec::with_capacity(robots.len());
        let mut at = 0;
        for r in robots {
            offsets.push(at);
            at += r.dim();
        }
        Ok(Self { trees, offsets })
    }

    pub fn trees(&self) -> &[PlrTree] {
        &self.trees
    }

    /// Errors if any robot's translation lies outside its tree.
    pub fn evaluate(&self, state: &[f64]) -> Result<f64> {
        let mut sum = 0.0;
        for (tree, &o) in self.trees.iter().zip(&self.offsets) {
            sum += tree.query(&state[o..o + 2])?.max(0.0);
        }
        Ok(sum)
    }
}

impl Heuristic for CompositeHeuristic {
    fn estimate(&self, state: &[f64]) -> f64 {
        self.evaluate(state).unwrap_or(f64::INFINITY)
    }
}

/// `sum_i max(0, query(tree_i, slice_i))` where slice `i` is the translation
/// of robot `i`. States are laid out robot after robot with `dims[i]`
/// components each.
pub fn composite_heuristic(trees: &[PlrTree], dims: &[usize], state: &[f64]) -> Result<f64> {
    let mut at = 0;
    let mut sum = 0.0;
    for (tree, d) in trees.iter().zip(dims) {
        sum += tree.query(&state[at..at + 2])?.max(0.0);
        at += d;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Solved,
    Exhausted,
    BudgetExceeded,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub path: Vec<Vec<f64>>,
    pub cost: f64,
    /// Distinct lattice cells expanded.
    pub samples_placed: usize,
    pub elapsed: Duration,
    /// Expanded states in expansion order, when requested.
    pub trace: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ResultFile<'a> {
    status: PlanStatus,
    cost: Option<f64>,
    samples_placed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_seconds: Option<f64>,
    path: &'a [Vec<f64>],
}

impl PlanResult {
    /// Result file. Wall-clock time is left out unless asked for so that
    /// identical runs produce identical bytes.
    pub fn to_json(&self, include_elapsed: bool) -> String {
        let file = ResultFile {
            status: self.status,
            cost: self.cost.is_finite().then_some(self.cost),
            samples_placed: self.samples_placed,
            elapsed_seconds: include_elapsed.then(|| self.elapsed.as_secs_f64()),
            path: &self.path,
        };
        serde_json::to_string_pretty(&file).expect("result serializes")
    }

    /// Expansion trace as CSV, one composite state per line.
    pub fn trace_csv(&self) -> String {
        let mut out = String::new();
        for s in &self.trace {
            let line: Vec<String> = s.iter().map(|v| format!("{v:.9e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

struct Entry_ {
    f: f64,
    g: f64,
    cell: Box<[i64]>,
    node: usize,
}

impl PartialEq for Entry_ {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry_ {}

impl Ord for Entry_ {
    // BinaryHeap is a max-heap: invert so the best entry is greatest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.g.total_cmp(&self.g))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry_ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct SearchNode {
    g: f64,
    parent: Option<usize>,
    closed: bool,
}

/// Options beyond the problem itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanOptions {
    pub record_trace: bool,
}

pub fn bl_plan(problem: &PlanProblem, heuristic: Option<&dyn Heuristic>) -> Result<PlanResult> {
    bl_plan_with(problem, heuristic, PlanOptions::default())
}

pub fn bl_plan_with(
    problem: &PlanProblem,
    heuristic: Option<&dyn Heuristic>,
    options: PlanOptions,
) -> Result<PlanResult> {
    problem.validate()?;
    let started = Instant::now();
    let bins = problem.rotation_bins();
    let goal_cell = problem.goal_cell();
    let goal_state = problem.cell_to_state(&goal_cell);
    let goal_poses = split_state(problem, &goal_state);
    if let Some(v) = first_collision(&problem.env, &problem.robots, &goal_poses) {
        return Err(Error::Input(format!(
            "goal configuration snapped to the grid is in collision: {v}"
        )));
    }
    let layout = problem.layout();
    let h = |state: &[f64]| heuristic.map_or(0.0, |h| h.estimate(state));

    // per-axis move cost
    let mut move_cost = Vec::with_capacity(problem.composite_dim());
    for shape in &problem.robots {
        for axis in 0..shape.dim() {
            move_cost.push(if axis < 2 {
                problem.grid.translation
            } else {
                shape.effective_radius() * problem.rotation_step()
            });
        }
    }

    let mut index: HashMap<Box<[i64]>, usize> = HashMap::new();
    let mut nodes: Vec<SearchNode> = Vec::new();
    let mut cells: Vec<Box<[i64]>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut trace = Vec::new();

    let start: Box<[i64]> = problem.start_cell().into();
    let start_state = problem.cell_to_state(&start);
    index.insert(start.clone(), 0);
    nodes.push(SearchNode {
        g: 0.0,
        parent: None,
        closed: false,
    });
    cells.push(start.clone());
    heap.push(Entry_ {
        f: h(&start_state),
        g: 0.0,
        cell: start,
        node: 0,
    });

    let mut expanded = 0usize;
    let finish = |status, path: Vec<Vec<f64>>, expanded, trace| {
        let cost = if path.is_empty() {
            f64::INFINITY
        } else {
            path_cost(&path, &problem.robots)
        };
        PlanResult {
            status,
            path,
            cost,
            samples_placed: expanded,
            elapsed: started.elapsed(),
            trace,
        }
    };

    while let Some(Entry_ { g, cell, node, .. }) = heap.pop() {
        if nodes[node].closed || g > nodes[node].g {
            continue;
        }
        if *cell == *goal_cell {
            let mut path = Vec::new();
            let mut at = Some(node);
            while let Some(i) = at {
                path.push(problem.cell_to_state(&cells[i]));
                at = nodes[i].parent;
            }
            path.reverse();
            return Ok(finish(PlanStatus::Solved, path, expanded, trace));
        }
        if expanded >= problem.budget.max_expansions {
            return Ok(finish(
                PlanStatus::BudgetExceeded,
                Vec::new(),
                expanded,
                trace,
            ));
        }
        if let Some(limit) = problem.budget.max_seconds {
            if expanded % 1024 == 0 && started.elapsed().as_secs_f64() > limit {
                return Ok(finish(
                    PlanStatus::BudgetExceeded,
                    Vec::new(),
                    expanded,
                    trace,
                ));
            }
        }
        nodes[node].closed = true;
        expanded += 1;
        let state = problem.cell_to_state(&cell);
        if options.record_trace {
            trace.push(state.clone());
        }

        for (robot, range) in layout.iter().enumerate() {
            for k in range.clone() {
                let axis = k - range.start;
                for delta in [-1i64, 1] {
                    let mut next = cell.clone();
                    next[k] += delta;
                    if axis >= 2 {
                        next[k] = next[k].rem_euclid(bins);
                    }
                    let ng = g + move_cost[k];
                    if let Some(&id) = index.get(&next) {
                        if nodes[id].closed || nodes[id].g <= ng {
                            continue;
                        }
                    }
                    let mut next_state = state.clone();
                    let v = problem.starts[robot][axis] + next[k] as f64 * problem.step(axis);
                    next_state[k] = if axis >= 2 { wrap_angle(v) } else { v };
                    if robot_blocked(problem, &layout, robot, &next_state) {
                        continue;
                    }
                    let id = match index.entry(next.clone()) {
                        Entry::Occupied(e) => {
                            let id = *e.get();
                            nodes[id].g = ng;
                            nodes[id].parent = Some(node);
                            id
                        }
                        Entry::Vacant(e) => {
                            let id = nodes.len();
                            e.insert(id);
                            nodes.push(SearchNode {
                                g: ng,
                                parent: Some(node),
                                closed: false,
                            });
                            cells.push(next.clone());
                            id
                        }
                    };
                    heap.push(Entry_ {
                        f: ng + h(&next_state),
                        g: ng,
                        cell: next,
                        node: id,
                    });
                }
            }
        }
    }
    Ok(finish(PlanStatus::Exhausted, Vec::new(), expanded, trace))
}

/// Whether the robot that just moved hits an obstacle or another robot.
fn robot_blocked(
    problem: &PlanProblem,
    layout: &[std::ops::Range<usize>],
    robot: usize,
    state: &[f64],
) -> bool {
    let shape = &problem.robots[robot];
    let pose = &state[layout[robot].clone()];
    if problem.env.shape_in_collision(shape, pose).unwrap_or(true) {
        return true;
    }
    layout
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != robot)
        .any(|(j, r)| shapes_overlap(shape, pose, &problem.robots[j], &state[r.clone()]))
}

fn split_state(problem: &PlanProblem, state: &[f64]) -> Vec<Vec<f64>> {
    problem
        .layout()
        .into_iter()
        .map(|r| state[r].to_vec())
        .collect()
}

/// Sum over robots of translational arc length plus `r_eff * |dtheta|` for
/// rectangles, where `r_eff` is the half-diagonal.
pub fn path_cost(path: &[Vec<f64>], shapes: &[RobotShape]) -> f64 {
    let mut total = 0.0;
    for w in path.windows(2) {
        let mut at = 0;
        for shape in shapes {
            let (a, b) = (&w[0][at..at + shape.dim()], &w[1][at..at + shape.dim()]);
            total += (b[0] - a[0]).hypot(b[1] - a[1]);
            if let RobotShape::Rectangle { .. } = shape {
                total += shape.effective_radius() * angle_diff(a[2], b[2]).abs();
            }
            at += shape.dim();
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    WrongDimension {
        state: usize,
    },
    Start,
    Goal,
    Obstacle {
        state: usize,
        robot: usize,
    },
    RobotOverlap {
        state: usize,
        robots: (usize, usize),
    },
    Step {
        transition: usize,
    },
}

/// Re-checks a path from scratch: endpoints, per-state obstacle and
/// robot-robot collisions, and that each transition moves one robot one
/// lattice step along one axis.
pub fn validate_path(
    problem: &PlanProblem,
    path: &[Vec<f64>],
) -> std::result::Result<(), Violation> {
    const TOL: f64 = 1e-9;
    let dim = problem.composite_dim();
    if path.is_empty() {
        return Err(Violation::Empty);
    }
    if let Some(i) = path.iter().position(|s| s.len() != dim) {
        return Err(Violation::WrongDimension { state: i });
    }
    let layout = problem.layout();
    let start: Vec<f64> = problem.starts.concat();
    if !same_pose(&problem.robots, &path[0], &start, TOL) {
        return Err(Violation::Start);
    }
    let last = path.last().unwrap();
    for (i, shape) in problem.robots.iter().enumerate() {
        let r = layout[i].clone();
        let (p, g) = (&last[r.clone()], &problem.goals[i]);
        if (p[0] - g[0]).abs() > problem.grid.translation / 2.0 + TOL
            || (p[1] - g[1]).abs() > problem.grid.translation / 2.0 + TOL
            || (shape.dim() == 3
                && angle_diff(p[2], g[2]).abs() > problem.rotation_step() / 2.0 + TOL)
        {
            return Err(Violation::Goal);
        }
    }
    for (k, state) in path.iter().enumerate() {
        for (i, shape) in problem.robots.iter().enumerate() {
            if problem
                .env
                .shape_in_collision(shape, &state[layout[i].clone()])
                .unwrap_or(true)
            {
                return Err(Violation::Obstacle { state: k, robot: i });
            }
        }
        for i in 0..problem.robots.len() {
            for j in (i + 1)..problem.robots.len() {
                if shapes_overlap(
                    &problem.robots[i],
                    &state[layout[i].clone()],
                    &problem.robots[j],
                    &state[layout[j].clone()],
                ) {
                    return Err(Violation::RobotOverlap {
                        state: k,
                        robots: (i, j),
                    });
                }
            }
        }
    }
    for (t, w) in path.windows(2).enumerate() {
        let mut moved = 0;
        let mut ok = true;
        for (i, shape) in problem.robots.iter().enumerate() {
            for axis in 0..shape.dim() {
                let k = layout[i].start + axis;
                let d = if axis < 2 {
                    w[1][k] - w[0][k]
                } else {
                    angle_diff(w[0][k], w[1][k])
                };
                if d.abs() <= TOL {
                    continue;
                }
                moved += 1;
                if (d.abs() - problem.step(axis)).abs() > TOL {
                    ok = false;
                }
            }
        }
        if moved != 1 || !ok {
            return Err(Violation::Step { transition: t });
        }
    }
    Ok(())
}

fn same_pose(robots: &[RobotShape], a: &[f64], b: &[f64], tol: f64) -> bool {
    let mut at = 0;
    for shape in robots {
        for axis in 0..shape.dim() {
            let d = if axis < 2 {
                a[at + axis] - b[at + axis]
            } else {
                angle_diff(a[at + axis], b[at + axis])
            };
            if d.abs() > tol {
                return false;
            }
        }
        at += shape.dim();
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Point2, Polygon};
    use crate::oracles::{Euclidean, VisibilityGraph};
    use crate::plr::{build_plr, compute_coefficients, BuildParams, Cell, LeafPayload};

    fn unit() -> Aabb {
        Aabb::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
    }

    fn disc(r: f64) -> RobotShape {
        RobotShape::Disc { radius: r }
    }

    fn toy_tree() -> PlrTree {
        let s = vec![
            (vec![0.0, 0.0], 0.0),
            (vec![1.0, 0.0], 1.0),
            (vec![1.0, 1.0], std::f64::consts::SQRT_2),
        ];
        PlrTree::single_leaf(
            &Cell::unit(2),
            LeafPayload::Fitted(compute_coefficients(&s).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn composite_heuristic_examples() {
        let trees = vec![toy_tree(), toy_tree()];
        let h = composite_heuristic(&trees, &[2, 2], &[1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((h - (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-12);
        let blocked = PlrTree::single_leaf(&Cell::unit(2), LeafPayload::Blocked).unwrap();
        let h =
            composite_heuristic(&[toy_tree(), blocked], &[2, 2], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(h, f64::INFINITY);
        assert!(composite_heuristic(&trees, &[2, 2], &[2.0, 0.0, 0.5, 0.5]).is_err());
        // clamped at zero
        let neg = PlrTree::single_leaf(
            &Cell::unit(2),
            LeafPayload::Fitted(crate::plr::Coefficients(vec![-1.0, 0.0, 0.0])),
        )
        .unwrap();
        assert_eq!(composite_heuristic(&[neg], &[2], &[0.3, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn path_cost_examples() {
        let d = [disc(0.1)];
        assert_eq!(path_cost(&[vec![0.0, 0.0]], &d), 0.0);
        let steps: Vec<Vec<f64>> = (0..=10).map(|i| vec![0.0, i as f64 / 10.0]).collect();
        assert!((path_cost(&steps, &d) - 1.0).abs() < 1e-12);
        let two: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 2.0],
        ];
        assert!((path_cost(&two, &[disc(0.1), disc(0.1)]) - 2.0).abs() < 1e-12);
        let rect = [RobotShape::Rectangle {
            width: 0.6,
            height: 0.8,
        }];
        let spin = vec![vec![0.0, 0.0, 3.0], vec![0.0, 0.0, -3.0]];
        // wraps the short way round
        assert!((path_cost(&spin, &rect) - 0.5 * (TAU - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_environment_straight_line() {
        let env = Environment::empty(unit()).unwrap();
        let problem = PlanProblem::new(
            env.clone(),
            vec![disc(0.05)],
            vec![vec![0.1, 0.5]],
            vec![vec![0.9, 0.5]],
        )
        .unwrap()
        .with_grid(GridResolution {
            translation: 0.025,
            rotation: PI / 16.0,
        })
        .unwrap();
        let tree = build_plr(
            &Euclidean::new(vec![0.9, 0.5]),
            &Cell::unit(2),
            &BuildParams::new(10, 1e-4),
        )
        .unwrap();
        let h = CompositeHeuristic::new(vec![tree], &problem.robots).unwrap();
        let res = bl_plan(&problem, Some(&h)).unwrap();
        assert_eq!(res.status, PlanStatus::Solved);
        // brute force: the 4-connected lattice optimum between axis-aligned cells is the offset length
        assert!((res.cost - 0.8).abs() < 1e-9, "{}", res.cost);
        assert_eq!(validate_path(&problem, &res.path), Ok(()));
        let steps = (0.8f64 / 0.025).round() as usize;
        assert!(res.samples_placed <= 2 * steps, "{}", res.samples_placed);

        let blind = bl_plan(&problem, None).unwrap();
        assert!((blind.cost - 0.8).abs() < 1e-9);
        assert!(blind.samples_placed > res.samples_placed);
    }

    #[test]
    fn uniform_cost_expands_in_g_order() {
        let env = Environment::empty(unit()).unwrap();
        let problem = PlanProblem::new(
            env,
            vec![disc(0.05)],
            vec![vec![0.5, 0.5]],
            vec![vec![0.9, 0.9]],
        )
        .unwrap();
        let res = bl_plan_with(&problem, None, PlanOptions { record_trace: true }).unwrap();
        let g: Vec<f64> = res
            .trace
            .iter()
            .map(|s| (s[0] - 0.5).abs() + (s[1] - 0.5).abs())
            .collect();
        assert!(g.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn sealed_goal_is_exhausted() {
        let walls = vec![
            Polygon::rect(Point2::new(0.6, 0.0), Point2::new(0.65, 0.4)).unwrap(),
            Polygon::rect(Point2::new(0.65, 0.35), Point2::new(1.0, 0.4)).unwrap(),
        ];
        let env = Environment::new(unit(), walls).unwrap();
        let problem = PlanProblem::new(
            env,
            vec![disc(0.05)],
            vec![vec![0.2, 0.8]],
            vec![vec![0.8, 0.15]],
        )
        .unwrap()
        .with_grid(GridResolution {
            translation: 0.05,
            rotation: PI / 16.0,
        })
        .unwrap();
        let res = bl_plan(&problem, None).unwrap();
        assert_eq!(res.status, PlanStatus::Exhausted);
        assert!(res.path.is_empty());
    }

    #[test]
    fn budget_and_input_errors() {
        let env = Environment::empty(unit()).unwrap();
        let problem = PlanProblem::new(
            env.clone(),
            vec![disc(0.05)],
            vec![vec![0.1, 0.1]],
            vec![vec![0.9, 0.9]],
        )
        .unwrap()
        .with_budget(Budget {
            max_expansions: 1,
            max_seconds: None,
        });
        assert_eq!(
            bl_plan(&problem, None).unwrap().status,
            PlanStatus::BudgetExceeded
        );
        assert!(PlanProblem::new(
            env.clone(),
            vec![disc(0.05)],
            vec![vec![0.01, 0.1]],
            vec![vec![0.9, 0.9]]
        )
        .is_err());
        assert!(PlanProblem::new(
            env.clone(),
            vec![disc(0.05), disc(0.05)],
            vec![vec![0.1, 0.1], vec![0.15, 0.1]],
            vec![vec![0.9, 0.9], vec![0.5, 0.5]]
        )
        .is_err());
        assert!(PlanProblem::new(env, vec![disc(0.05)], vec![vec![0.1, 0.1]], vec![]).is_err());
    }

    #[test]
    fn validation_catches_bad_paths() {
        let env = Environment::empty(unit()).unwrap();
        let problem = PlanProblem::new(
            env,
            vec![disc(0.05), disc(0.05)],
            vec![vec![0.2, 0.5], vec![0.5, 0.5]],
            vec![vec![0.2, 0.6], vec![0.5, 0.5]],
        )
        .unwrap()
        .with_grid(GridResolution {
            translation: 0.05,
            rotation: PI / 16.0,
        })
        .unwrap();
        let ok = vec![
            vec![0.2, 0.5, 0.5, 0.5],
            vec![0.2, 0.55, 0.5, 0.5],
            vec![0.2, 0.6, 0.5, 0.5],
        ];
        assert_eq!(validate_path(&problem, &ok), Ok(()));
        let teleport = vec![vec![0.2, 0.5, 0.5, 0.5], vec![0.2, 0.6, 0.5, 0.5]];
        assert_eq!(
            validate_path(&problem, &teleport),
            Err(Violation::Step { transition: 0 })
        );
        // robot 1 steps left past robot 0 and back
        let mut overlap = vec![vec![0.2, 0.5, 0.5, 0.5], vec![0.2, 0.55, 0.5, 0.5]];
        for k in (5..10).rev().chain(6..=10) {
            overlap.push(vec![0.2, 0.55, k as f64 * 0.05, 0.5]);
        }
        overlap.push(vec![0.2, 0.6, 0.5, 0.5]);
        assert_eq!(
            validate_path(&problem, &overlap),
            Err(Violation::RobotOverlap {
                state: 6,
                robots: (0, 1)
            })
        );
    }

    #[test]
    fn rectangle_rotates_through_a_gap() {
        // a wall with a gap narrower than the rectangle's length
        let walls = vec![
            Polygon::rect(Point2::new(0.45, 0.0), Point2::new(0.55, 0.4)).unwrap(),
            Polygon::rect(Point2::new(0.45, 0.6), Point2::new(0.55, 1.0)).unwrap(),
        ];
        let env = Environment::new(unit(), walls).unwrap();
        let rect = RobotShape::Rectangle {
            width: 0.1,
            height: 0.3,
        };
        let problem = PlanProblem::new(
            env.clone(),
            vec![rect],
            vec![vec![0.2, 0.5, 0.0]],
            vec![vec![0.8, 0.5, 0.0]],
        )
        .unwrap()
        .with_grid(GridResolution {
            translation: 0.05,
            rotation: PI / 8.0,
        })
        .unwrap();
        let vg = VisibilityGraph::build(&env, Point2::new(0.8, 0.5)).unwrap();
        let tree = build_plr(&vg, &Cell::unit(2), &BuildParams::new(8, 0.01)).unwrap();
        let h = CompositeHeuristic::new(vec![tree], &problem.robots).unwrap();
        let res = bl_plan(&problem, Some(&h)).unwrap();
        assert_eq!(res.status, PlanStatus::Solved);
        assert_eq!(validate_path(&problem, &res.path), Ok(()));
        assert!(
            res.path.iter().any(|s| s[2].abs() > 1.0),
            "the rectangle has to turn"
        );
    }

    #[test]
    fn problem_json_round_trip() {
        let env = Environment::empty(unit()).unwrap();
        let problem = PlanProblem::new(
            env,
            vec![disc(0.05)],
            vec![vec![0.1, 0.1]],
            vec![vec![0.9, 0.9]],
        )
        .unwrap();
        let back = PlanProblem::from_json(&problem.to_json(), None).unwrap();
        assert_eq!(back.robots, problem.robots);
        assert_eq!(back.grid, problem.grid);
        assert_eq!(back.budget, problem.budget);
        let bad = problem.to_json().replace("0.9", "0.99");
        assert!(PlanProblem::from_json(&bad, None).is_err());
    }
}
