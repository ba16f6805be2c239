//! Benchmark environments and planning problems on the unit square.
//!
//! The same fixtures ship as JSON under `fixtures/` at the workspace root;
//! a test keeps the two in sync.

use std::f64::consts::PI;

use crate::geometry::{Aabb, Environment, Point2, Polygon, RobotShape};
use crate::planner::{GridResolution, PlanProblem};

fn unit() -> Aabb {
    Aabb::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
    Polygon::rect(Point2::new(x0, y0), Point2::new(x1, y1)).expect("fixture rectangle")
}

fn disc(radius: f64) -> RobotShape {
    RobotShape::Disc { radius }
}

fn grid(translation: f64) -> GridResolution {
    GridResolution {
        translation,
        rotation: PI / 16.0,
    }
}

/// Serpentine maze: three thin walls, alternately open at the top and
/// bottom. Wall faces sit between the 1/16 lines so that no corner of a
/// depth-8 cell lands inside a wall.
pub fn maze() -> Environment {
    Environment::new(
        unit(),
        vec![
            rect(0.27, 0.0, 0.30, 0.72),
            rect(0.52, 0.28, 0.55, 1.0),
            rect(0.77, 0.0, 0.80, 0.72),
        ],
    )
    .expect("maze fixture")
}

/// Goal for the maze, in the first corridor.
pub fn maze_goal() -> Point2 {
    Point2::new(0.1, 0.1)
}

/// Vertical wall with a single door in the middle.
pub fn single_door_env() -> Environment {
    Environment::new(
        unit(),
        vec![rect(0.48, 0.0, 0.52, 0.44), rect(0.48, 0.56, 0.52, 1.0)],
    )
    .expect("door fixture")
}

pub fn single_door() -> PlanProblem {
    PlanProblem::new(
        single_door_env(),
        vec![disc(0.03)],
        vec![vec![0.1, 0.45]],
        vec![vec![0.9, 0.55]],
    )
    .and_then(|p| p.with_grid(grid(0.02)))
    .expect("door problem")
}

/// Plus-shaped walls splitting the square into four rooms that meet in an
/// open hub.
pub fn four_rooms_env() -> Environment {
    Environment::new(
        unit(),
        vec![
            rect(0.47, 0.0, 0.53, 0.35),
            rect(0.47, 0.65, 0.53, 1.0),
            rect(0.0, 0.47, 0.35, 0.53),
            rect(0.65, 0.47, 1.0, 0.53),
        ],
    )
    .expect("four rooms fixture")
}

/// Two discs crossing diagonally through the hub.
pub fn four_rooms() -> PlanProblem {
    PlanProblem::new(
        four_rooms_env(),
        vec![disc(0.04), disc(0.04)],
        vec![vec![0.2, 0.2], vec![0.8, 0.2]],
        vec![vec![0.8, 0.8], vec![0.2, 0.8]],
    )
    .and_then(|p| p.with_grid(grid(0.04)))
    .expect("four rooms problem")
}

/// Two hallways of width 0.1 crossing in the middle.
pub fn crossing_corridors_env() -> Environment {
    Environment::new(
        unit(),
        vec![
            rect(0.0, 0.0, 0.45, 0.45),
            rect(0.55, 0.0, 1.0, 0.45),
            rect(0.0, 0.55, 0.45, 1.0),
            rect(0.55, 0.55, 1.0, 1.0),
        ],
    )
    .expect("corridor fixture")
}

/// Two discs swapping ends of a hallway too narrow to pass in; one has to
/// step aside into the crossing hallway.
pub fn crossing_corridors() -> PlanProblem {
    PlanProblem::new(
        crossing_corridors_env(),
        vec![disc(0.03), disc(0.03)],
        vec![vec![0.05, 0.5], vec![0.95, 0.5]],
        vec![vec![0.95, 0.5], vec![0.05, 0.5]],
    )
    .and_then(|p| p.with_grid(grid(0.015)))
    .expect("corridor problem")
}

/// `(file name, contents)` for every fixture file.
pub fn files() -> Vec<(&'static str, String)> {
    vec![
        ("maze.env.json", maze().to_json()),
        ("single_door.env.json", single_door_env().to_json()),
        ("four_rooms.env.json", four_rooms_env().to_json()),
        (
            "crossing_corridors.env.json",
            crossing_corridors_env().to_json(),
        ),
        ("single_door.problem.json", single_door().to_json()),
        ("four_rooms.problem.json", four_rooms().to_json()),
        (
            "crossing_corridors.problem.json",
            crossing_corridors().to_json(),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        let env = maze();
        assert_eq!(env.obstacles().len(), 3);
        assert!(env.point_in_free_space(maze_goal()));
        // the wall flush with the bottom bound does not leak
        assert!(!env.segment_visible(Point2::new(0.2, 0.0), Point2::new(0.4, 0.0)));
        for (_, text) in files() {
            assert!(!text.is_empty());
        }
        assert_eq!(four_rooms().robot_count(), 2);
        assert_eq!(crossing_corridors().robot_count(), 2);
    }
}
