//! WebAssembly bindings behind `www/index.html`.
//!
//! A [`Demo`] holds one fixture environment and the tree last built for a
//! goal. The page builds a tree by clicking, reads the estimate under the
//! cursor, and plans a disc robot with and without the tree as heuristic.

use plr::fixtures;
use plr::geometry::{Environment, Point2, RobotShape};
use plr::oracles::{DistanceOracle, VisibilityGraph};
use plr::planner::{bl_plan, Budget, CompositeHeuristic, GridResolution, Heuristic, PlanProblem};
use plr::plr::{build_plr, BuildParams, Cell, PlrTree};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Fixture names accepted by [`Demo::new`].
pub const FIXTURES: [&str; 4] = ["maze", "single_door", "four_rooms", "crossing_corridors"];

fn environment(name: &str) -> Option<Environment> {
    Some(match name {
        "maze" => fixtures::maze(),
        "single_door" => fixtures::single_door_env(),
        "four_rooms" => fixtures::four_rooms_env(),
        "crossing_corridors" => fixtures::crossing_corridors_env(),
        _ => return None,
    })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[wasm_bindgen]
pub struct Demo {
    env: Environment,
    root: Cell,
    goal: Option<Point2>,
    tree: Option<PlrTree>,
    exact: Option<VisibilityGraph>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(fixture: &str) -> Result<Demo, String> {
        let env = environment(fixture).ok_or_else(|| format!("unknown fixture {fixture:?}"))?;
        let b = env.bounds();
        let root = Cell::new(vec![b.lo.x, b.lo.y], vec![b.hi.x, b.hi.y]).map_err(err)?;
        Ok(Demo {
            env,
            root,
            goal: None,
            tree: None,
            exact: None,
        })
    }

    /// Obstacles as a JSON array of vertex lists.
    pub fn obstacles(&self) -> String {
        let polys: Vec<Vec<[f64; 2]>> = self
            .env
            .obstacles()
            .iter()
            .map(|p| p.vertices().iter().map(|v| [v.x, v.y]).collect())
            .collect();
        json!(polys).to_string()
    }

    /// Build a tree for `goal` from the exact visibility-graph distance.
    /// Returns node, leaf and byte counts as JSON.
    pub fn build(&mut self, gx: f64, gy: f64, max_depth: usize) -> Result<String, String> {
        let goal = Point2::new(gx, gy);
        let vg = VisibilityGraph::build(&self.env, goal).map_err(err)?;
        let mut params = BuildParams::default_for(&self.root);
        params.max_depth = max_depth.min(12);
        let tree = build_plr(&vg, &self.root, &params).map_err(err)?;
        let stats = json!({
            "nodes": tree.node_count(),
            "leaves": tree.leaf_count(),
            "blocked": tree.blocked_count(),
            "bytes": tree.encoded_len(),
        });
        self.goal = Some(goal);
        self.tree = Some(tree);
        self.exact = Some(vg);
        Ok(stats.to_string())
    }

    /// Row-major `res * res` grid of tree estimates at cell centers,
    /// bottom row first. Blocked cells are infinite.
    pub fn heatmap(&self, res: usize) -> Vec<f64> {
        let Some(tree) = &self.tree else {
            return Vec::new();
        };
        let (lo, hi) = (&self.root.lo, &self.root.hi);
        let mut out = Vec::with_capacity(res * res);
        for j in 0..res {
            let y = lo[1] + (j as f64 + 0.5) / res as f64 * (hi[1] - lo[1]);
            for i in 0..res {
                let x = lo[0] + (i as f64 + 0.5) / res as f64 * (hi[0] - lo[0]);
                out.push(tree.query_unchecked(&[x, y]));
            }
        }
        out
    }

    /// Leaf rectangles as flat `[x0, y0, x1, y1, ...]`.
    pub fn leaf_rects(&self) -> Vec<f64> {
        let Some(tree) = &self.tree else {
            return Vec::new();
        };
        tree.leaves()
            .iter()
            .flat_map(|(c, _)| [c.lo[0], c.lo[1], c.hi[0], c.hi[1]])
            .collect()
    }

    /// `[tree estimate, exact distance]` at a point; NaN before a build.
    pub fn query(&self, x: f64, y: f64) -> Vec<f64> {
        match (&self.tree, &self.exact) {
            (Some(t), Some(e)) => vec![t.query(&[x, y]).unwrap_or(f64::NAN), e.evaluate(&[x, y])],
            _ => vec![f64::NAN, f64::NAN],
        }
    }

    /// Plan a disc of `radius` from `(sx, sy)` to the current goal, once
    /// without a heuristic and once guided by the tree. Returns JSON with the
    /// status, cost, samples placed and path of each run.
    pub fn plan(&self, sx: f64, sy: f64, radius: f64, step: f64) -> Result<String, String> {
        let (Some(goal), Some(tree)) = (self.goal, &self.tree) else {
            return Err("build a tree first".into());
        };
        let robots = vec![RobotShape::Disc { radius }];
        let problem = PlanProblem::new(
            self.env.clone(),
            robots.clone(),
            vec![vec![sx, sy]],
            vec![vec![goal.x, goal.y]],
        )
        .and_then(|p| {
            p.with_grid(GridResolution {
                translation: step,
                rotation: std::f64::consts::PI / 16.0,
            })
        })
        .map_err(err)?
        .with_budget(Budget {
            max_expansions: 200_000,
            max_seconds: None,
        });
        let h = CompositeHeuristic::new(vec![tree.clone()], &robots).map_err(err)?;
        let run = |h: Option<&dyn Heuristic>| -> Result<serde_json::Value, String> {
            let r = bl_plan(&problem, h).map_err(err)?;
            Ok(json!({
                "status": format!("{:?}", r.status),
                "cost": if r.cost.is_finite() { json!(r.cost) } else { json!(null) },
                "samples": r.samples_placed,
                "path": r.path,
            }))
        };
        Ok(json!({
            "blind": run(None)?,
            "guided": run(Some(&h))?,
        })
        .to_string())
    }
}
