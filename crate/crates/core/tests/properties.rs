//! Randomised invariants checked against the brute-force oracle.

use mazetree::io::{emit_maze, emit_policy, load_policy, parse_maze_document, PolicyDocument};
use mazetree::oracle::{bfs_values, bounding_box};
use mazetree::runtime::{default_max_steps, episode_cost, run_episode, EpisodeError};
use mazetree::verify::{verify, VerifyOptions};
use mazetree::{compile, BuildOptions, Cost, Maze, Obstacle, Point};
use proptest::prelude::*;

fn obstacle(d: usize) -> impl Strategy<Value = Obstacle> {
    (
        prop::collection::vec(-6i64..6, d),
        prop::collection::vec(1i64..6, d),
    )
        .prop_map(|(a, ext)| {
            let b: Vec<i64> = a.iter().zip(&ext).map(|(x, e)| x + e).collect();
            Obstacle::new(a, b)
        })
}

fn maze() -> impl Strategy<Value = Maze> {
    (1usize..=3).prop_flat_map(|d| {
        (
            prop::collection::vec(obstacle(d), 0..5),
            prop::collection::vec(-7i64..7, d),
        )
            .prop_filter_map("goal inside an obstacle", move |(obs, goal)| {
                Maze::new(d, goal, obs).ok()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn policy_is_optimal_everywhere(m in maze(), dag in any::<bool>()) {
        let c = compile(&m, &[], &BuildOptions { dag_direction_tree: dag }).unwrap();
        let field = bfs_values(&m, &bounding_box(&m, &[], 1).unwrap());
        for (s, v) in field.free_states() {
            match (episode_cost(&m, &c.tree, &s, default_max_steps(&m, &s)), v) {
                (Ok(sum), Cost::Finite(v)) => prop_assert_eq!(sum.total_cost, v),
                (Err(EpisodeError::Unreachable(_)), Cost::Unreachable) => {}
                (got, v) => prop_assert!(false, "{}: {:?} vs {}", s, got, v),
            }
        }
    }

    #[test]
    fn full_suite_passes(m in maze()) {
        let c = compile(&m, &[], &BuildOptions::default()).unwrap();
        let r = verify(&m, &c, &VerifyOptions::default()).unwrap();
        prop_assert!(r.passed(), "{}", r);
    }

    #[test]
    fn dag_mode_makes_the_same_decisions(m in maze()) {
        let tree = compile(&m, &[], &BuildOptions::default()).unwrap().tree;
        let dag = compile(&m, &[], &BuildOptions { dag_direction_tree: true }).unwrap().tree;
        prop_assert!(dag.nodes().len() <= tree.nodes().len());
        let field = bfs_values(&m, &bounding_box(&m, &[], 1).unwrap());
        for (s, _) in field.free_states() {
            prop_assert_eq!(&tree.evaluate(&s).0.action, &dag.evaluate(&s).0.action);
        }
    }

    #[test]
    fn traces_are_walks(m in maze(), seed in 0usize..1000) {
        let c = compile(&m, &[], &BuildOptions::default()).unwrap();
        let field = bfs_values(&m, &bounding_box(&m, &[], 1).unwrap());
        let reachable: Vec<Point> = field.free_states().filter(|(_, v)| v.is_finite()).map(|(p, _)| p).collect();
        let s = &reachable[seed % reachable.len()];
        let t = run_episode(&m, &c.tree, s, default_max_steps(&m, s)).unwrap();
        prop_assert_eq!(t.states.len(), t.actions.len() + 1);
        prop_assert_eq!(t.states.last().unwrap(), m.goal());
        for (w, a) in t.states.windows(2).zip(&t.actions) {
            prop_assert_eq!(&m.transition(&w[0], *a).unwrap(), &w[1]);
        }
    }

    #[test]
    fn documents_round_trip(m in maze(), anchors in prop::collection::vec(prop::collection::vec(-9i64..9, 3), 0..3)) {
        let anchors: Vec<Point> = anchors.into_iter().map(|a| Point(a[..m.dimension()].to_vec())).collect();
        let text = emit_maze(&m, &anchors);
        let (back, back_anchors) = parse_maze_document(&text).unwrap();
        prop_assert_eq!(emit_maze(&back, &back_anchors), text);

        let c = compile(&back, &back_anchors, &BuildOptions::default()).unwrap();
        let policy = emit_policy(&PolicyDocument::new(&back, &back_anchors, c.tree));
        let loaded = load_policy(&policy, Some(&m)).unwrap();
        prop_assert_eq!(emit_policy(&loaded), policy);
    }
}
