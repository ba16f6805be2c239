use plr::analysis::{error_map, memory_footprint};
use plr::fixtures;
use plr::geometry::Point2;
use plr::oracles::VisibilityGraph;
use plr::planner::{bl_plan, validate_path, CompositeHeuristic, PlanStatus};
use plr::plr::{build_plr, BuildParams, Cell, PlrTree};

#[test]
fn maze_tree_round_trips_and_stays_small() {
    let env = fixtures::maze();
    let vg = VisibilityGraph::build(&env, fixtures::maze_goal()).unwrap();
    let tree = build_plr(&vg, &Cell::unit(2), &BuildParams::new(9, 0.0)).unwrap();
    let bytes = tree.serialize();
    assert!(bytes.len() <= 64 * 1024, "{}", bytes.len());
    assert_eq!(memory_footprint(&tree), bytes.len());
    let back = PlrTree::deserialize(&bytes).unwrap();
    let (a, b) = (error_map(&tree, &vg, 64), error_map(&back, &vg, 64));
    assert_eq!(a.max_error.to_bits(), b.max_error.to_bits());
    // close to the goal the estimate is close to the truth
    let g = fixtures::maze_goal();
    assert!(tree.query(&[g.x, g.y]).unwrap().abs() < 0.05);
    // points inside walls are blocked or skipped, never finite garbage
    assert!(a.skipped_points > 0);
}

#[test]
fn door_fixture_with_and_without_heuristic() {
    let problem = fixtures::single_door();
    let goal = &problem.goals[0];
    let vg = VisibilityGraph::build(&problem.env, Point2::new(goal[0], goal[1])).unwrap();
    let tree = build_plr(
        &vg,
        &Cell::unit(2),
        &BuildParams::default_for(&Cell::unit(2)),
    )
    .unwrap();
    let h = CompositeHeuristic::new(vec![tree], &problem.robots).unwrap();
    let with = bl_plan(&problem, Some(&h)).unwrap();
    let without = bl_plan(&problem, None).unwrap();
    for r in [&with, &without] {
        assert_eq!(r.status, PlanStatus::Solved);
        assert_eq!(validate_path(&problem, &r.path), Ok(()));
    }
    assert!(with.samples_placed < without.samples_placed);
}
