//! Frozen values for the two-obstacle fixture maze.

use mazetree::io::{emit_maze, maze_digest, parse_maze};
use mazetree::runtime::{run_episode, MacroAction};
use mazetree::tree::LeafAction;
use mazetree::{compile, BuildOptions, Cost, Direction, Maze, Obstacle, Point};

fn two_boxes() -> Maze {
    Maze::new(
        2,
        [0, 0],
        vec![
            Obstacle::new([3, -1], [6, 1]),
            Obstacle::new([1, 3], [3, 6]),
        ],
    )
    .unwrap()
}

#[test]
fn corner_values() {
    let c = compile(&two_boxes(), &[], &BuildOptions::default()).unwrap();
    let expected = [
        ([0, -1], 1),
        ([0, 0], 0),
        ([0, 1], 1),
        ([0, 3], 3),
        ([0, 6], 6),
        ([1, -1], 2),
        ([1, 0], 1),
        ([1, 1], 2),
        ([1, 3], 4),
        ([1, 6], 7),
        ([3, -1], 4),
        ([3, 0], 3),
        ([3, 1], 4),
        ([3, 3], 6),
        ([3, 6], 9),
        ([6, -1], 7),
        ([6, 0], 8),
        ([6, 1], 7),
        ([6, 3], 9),
        ([6, 6], 12),
    ];
    assert_eq!(c.grid.len(), expected.len());
    for (p, v) in expected {
        let k = c.grid.index_of(&p).unwrap();
        assert_eq!(c.solution.values[k], Cost::Finite(v), "corner {p:?}");
    }
    assert_eq!(c.grid.excluded(), 0);
}

#[test]
fn episodes_from_fixed_states() {
    let m = two_boxes();
    let c = compile(&m, &[], &BuildOptions::default()).unwrap();
    type Case = ([i64; 2], u64, &'static [[i64; 2]]);
    let cases: [Case; 4] = [
        (
            [7, 0],
            9,
            &[[6, 0], [6, -1], [3, -1], [1, -1], [0, -1], [0, 0]],
        ),
        ([2, -2], 4, &[[1, -1], [0, -1], [0, 0]]),
        ([4, 4], 8, &[[3, 3], [1, 3], [0, 3], [0, 1], [0, 0]]),
        ([2, 7], 9, &[[1, 6], [0, 6], [0, 3], [0, 1], [0, 0]]),
    ];
    for (s, cost, waypoints) in cases {
        let t = run_episode(&m, &c.tree, &Point::from(s), 1000).unwrap();
        assert_eq!(t.total_cost, cost, "from {s:?}");
        assert_eq!(t.states.len() as u64, cost + 1);
        let w: Vec<Point> = waypoints.iter().map(|&p| Point::from(p)).collect();
        assert_eq!(t.corner_waypoints, w, "from {s:?}");
    }
}

#[test]
fn leaf_for_state_below_the_fixture_obstacle() {
    let c = compile(&two_boxes(), &[], &BuildOptions::default()).unwrap();
    let (leaf, _) = c.tree.evaluate(&[2, -2]);
    let target = c.grid.index_of(&[1, -1]).unwrap();
    assert_eq!(leaf.action, LeafAction::GoToCorner { target });
    assert_eq!(
        leaf.macros,
        vec![
            MacroAction {
                feature: 0,
                direction: Direction::Minus,
                stop: 1
            },
            MacroAction {
                feature: 1,
                direction: Direction::Plus,
                stop: -1
            },
        ]
    );
}

#[test]
fn tree_shape() {
    let c = compile(&two_boxes(), &[], &BuildOptions::default()).unwrap();
    let d = c.tree.depth();
    assert_eq!((d.grid, d.direction, d.total), (7, 3, 10));
    assert!(d.grid <= c.tree.grid_depth_bound());
    let dag = compile(
        &two_boxes(),
        &[],
        &BuildOptions {
            dag_direction_tree: true,
        },
    )
    .unwrap();
    assert!(dag.tree.nodes().len() <= c.tree.nodes().len());
}

#[test]
fn canonical_document_and_digest() {
    let m = two_boxes();
    let text = emit_maze(&m, &[]);
    assert_eq!(
        text,
        r#"{"dimension":2,"goal":[0,0],"obstacles":[{"a":[1,3],"b":[3,6]},{"a":[3,-1],"b":[6,1]}],"schema_version":1}"#
    );
    assert_eq!(
        parse_maze(&text).unwrap(),
        Maze::new(
            2,
            [0, 0],
            vec![m.obstacles()[1].clone(), m.obstacles()[0].clone()]
        )
        .unwrap()
    );
    assert_eq!(
        maze_digest(&m),
        "165b264076208b0c048769137079acda1396d38b2a204d7839a28d6654e3c940"
    );
}
