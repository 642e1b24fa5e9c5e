//! The reduced MDP over valid corners and its exact solution.
//!
//! Actions move between adjacent corners and cost the Manhattan length of
//! the move. Adjacency and costs are symmetric, so a single Dijkstra run from
//! the goal yields the optimal cost-to-goal of every corner.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{segment_blocked, CornerGrid};
use crate::maze::Maze;

/// Cost-to-goal. `Unreachable` compares greater than every finite cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cost {
    Finite(u64),
    Unreachable,
}

impl Cost {
    pub fn finite(self) -> Option<u64> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Unreachable => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    /// Saturating addition: overflow becomes `Unreachable`.
    pub fn plus(self, w: u64) -> Cost {
        match self {
            Cost::Finite(v) => v.checked_add(w).map_or(Cost::Unreachable, Cost::Finite),
            Cost::Unreachable => Cost::Unreachable,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Unreachable => f.write_str("unreachable"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub to: usize,
    pub cost: u64,
}

#[derive(Clone, Debug)]
pub struct CornerMdp {
    edges: Vec<Vec<Edge>>,
    goal_index: usize,
}

impl CornerMdp {
    /// One edge per adjacent corner pair direction.
    pub fn build(maze: &Maze, grid: &CornerGrid) -> Self {
        let edges = (0..grid.len())
            .map(|c| {
                let p = grid.corner(c);
                grid.lattice_neighbours(c)
                    .into_iter()
                    .filter_map(|(n, i)| {
                        let q = grid.corner(n);
                        (!segment_blocked(maze, p, i, q[i])).then(|| Edge {
                            to: n,
                            cost: p[i].abs_diff(q[i]),
                        })
                    })
                    .collect()
            })
            .collect();
        CornerMdp {
            edges,
            goal_index: grid.goal_index(),
        }
    }

    pub fn edges(&self, c: usize) -> &[Edge] {
        &self.edges[c]
    }

    pub fn edge_cost(&self, from: usize, to: usize) -> Option<u64> {
        self.edges[from].iter().find(|e| e.to == to).map(|e| e.cost)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn goal_index(&self) -> usize {
        self.goal_index
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Exact shortest paths to the goal. The successor of each corner is
    /// the lexicographically smallest neighbour on some shortest path.
    pub fn solve(&self) -> CornerMdpSolution {
        let n = self.edges.len();
        let mut values = vec![Cost::Unreachable; n];
        let mut heap = BinaryHeap::new();
        values[self.goal_index] = Cost::Finite(0);
        heap.push(Reverse((0u64, self.goal_index)));
        while let Some(Reverse((dist, c))) = heap.pop() {
            if values[c] != Cost::Finite(dist) {
                continue;
            }
            for e in &self.edges[c] {
                let cand = Cost::Finite(dist).plus(e.cost);
                if cand < values[e.to] {
                    values[e.to] = cand;
                    if let Cost::Finite(v) = cand {
                        heap.push(Reverse((v, e.to)));
                    }
                }
            }
        }
        let successors = (0..n)
            .map(|c| {
                if c == self.goal_index || !values[c].is_finite() {
                    return None;
                }
                // corner indices follow lexicographic order
                self.edges[c]
                    .iter()
                    .filter(|e| values[e.to].plus(e.cost) == values[c])
                    .map(|e| e.to)
                    .min()
            })
            .collect();
        CornerMdpSolution { values, successors }
    }
}

/// Optimal values and successor corners, indexed like the grid's corners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CornerMdpSolution {
    pub values: Vec<Cost>,
    pub successors: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BellmanViolation {
    GoalValueNonzero,
    GoalHasSuccessor,
    MissingSuccessor {
        corner: usize,
    },
    UnexpectedSuccessor {
        corner: usize,
    },
    SuccessorNotAdjacent {
        corner: usize,
        successor: usize,
    },
    Inconsistent {
        corner: usize,
    },
    /// A neighbour offers a cheaper route than the recorded value.
    NotOptimal {
        corner: usize,
        via: usize,
    },
}

impl fmt::Display for BellmanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BellmanViolation::GoalValueNonzero => f.write_str("goal value nonzero"),
            BellmanViolation::GoalHasSuccessor => f.write_str("goal has a successor"),
            BellmanViolation::MissingSuccessor { corner } => {
                write!(f, "corner {corner}: missing successor")
            }
            BellmanViolation::UnexpectedSuccessor { corner } => {
                write!(f, "corner {corner}: unreachable corner has a successor")
            }
            BellmanViolation::SuccessorNotAdjacent { corner, successor } => {
                write!(f, "corner {corner}: successor not adjacent ({successor})")
            }
            BellmanViolation::Inconsistent { corner } => {
                write!(
                    f,
                    "corner {corner}: value differs from edge cost plus successor value"
                )
            }
            BellmanViolation::NotOptimal { corner, via } => {
                write!(f, "corner {corner}: cheaper route via {via}")
            }
        }
    }
}

/// Checks every solution invariant. Successor chains are acyclic whenever
/// this passes, since each hop strictly lowers the value.
pub fn bellman_check(
    mdp: &CornerMdp,
    sol: &CornerMdpSolution,
) -> Result<(), Vec<BellmanViolation>> {
    let mut out = Vec::new();
    let g = mdp.goal_index();
    if sol.values[g] != Cost::Finite(0) {
        out.push(BellmanViolation::GoalValueNonzero);
    }
    if sol.successors[g].is_some() {
        out.push(BellmanViolation::GoalHasSuccessor);
    }
    for c in 0..mdp.len() {
        for e in mdp.edges(c) {
            if sol.values[e.to].plus(e.cost) < sol.values[c] {
                out.push(BellmanViolation::NotOptimal {
                    corner: c,
                    via: e.to,
                });
            }
        }
        if c == g {
            continue;
        }
        match (sol.values[c], sol.successors[c]) {
            (Cost::Finite(_), None) => out.push(BellmanViolation::MissingSuccessor { corner: c }),
            (Cost::Unreachable, Some(_)) => {
                out.push(BellmanViolation::UnexpectedSuccessor { corner: c })
            }
            (Cost::Finite(v), Some(s)) => match mdp.edge_cost(c, s) {
                None => out.push(BellmanViolation::SuccessorNotAdjacent {
                    corner: c,
                    successor: s,
                }),
                Some(w) => {
                    if sol.values[s].plus(w) != Cost::Finite(v) {
                        out.push(BellmanViolation::Inconsistent { corner: c });
                    }
                }
            },
            (Cost::Unreachable, None) => {}
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_lists, enumerate_valid_corners};
    use crate::maze::fixtures::two_boxes;
    use crate::maze::{Obstacle, Point};

    fn two_boxes_solved() -> (CornerGrid, CornerMdp, CornerMdpSolution) {
        let m = two_boxes();
        let grid = enumerate_valid_corners(&m, build_lists(&m, &[]));
        let mdp = CornerMdp::build(&m, &grid);
        let sol = mdp.solve();
        (grid, mdp, sol)
    }

    #[test]
    fn fixture_edges() {
        let (grid, mdp, _) = two_boxes_solved();
        let i = |x: i64, y: i64| grid.index_of(&[x, y]).unwrap();
        let mut e: Vec<(usize, u64)> = mdp.edges(i(6, 0)).iter().map(|e| (e.to, e.cost)).collect();
        e.sort();
        let mut want = vec![(i(6, -1), 1), (i(6, 1), 1)];
        want.sort();
        assert_eq!(e, want);
        assert_eq!(mdp.edge_cost(i(3, -1), i(6, -1)), Some(3));
        for c in 0..mdp.len() {
            assert!(mdp.edges(c).len() <= 4);
            for e in mdp.edges(c) {
                assert!(e.cost > 0);
                assert_eq!(mdp.edge_cost(e.to, c), Some(e.cost));
            }
        }
    }

    #[test]
    fn single_corner() {
        let m = Maze::new(1, [5], vec![]).unwrap();
        let grid = enumerate_valid_corners(&m, build_lists(&m, &[]));
        let mdp = CornerMdp::build(&m, &grid);
        assert_eq!(mdp.edge_count(), 0);
        let sol = mdp.solve();
        assert_eq!(sol.values, vec![Cost::Finite(0)]);
        assert_eq!(sol.successors, vec![None]);
    }

    #[test]
    fn fixture_values() {
        let (grid, mdp, sol) = two_boxes_solved();
        let v = |x: i64, y: i64| sol.values[grid.index_of(&[x, y]).unwrap()];
        assert_eq!(v(0, 0), Cost::Finite(0));
        assert_eq!(v(3, -1), Cost::Finite(4));
        assert_eq!(v(6, 1), Cost::Finite(7));
        assert_eq!(v(6, 0), Cost::Finite(8));
        assert_eq!(v(1, -1), Cost::Finite(2));
        // tie between (1,-1) and (3,0); lexicographic order picks (1,-1)
        let s = sol.successors[grid.index_of(&[3, -1]).unwrap()].unwrap();
        assert_eq!(grid.corner(s), &Point::from([1, -1]));
        assert!(bellman_check(&mdp, &sol).is_ok());
    }

    #[test]
    fn bellman_check_catches_corruption() {
        let (grid, mdp, sol) = two_boxes_solved();
        let mut bad = sol.clone();
        bad.values[grid.goal_index()] = Cost::Finite(1);
        assert!(bellman_check(&mdp, &bad)
            .unwrap_err()
            .contains(&BellmanViolation::GoalValueNonzero));

        let mut bad = sol.clone();
        let c = grid.index_of(&[6, 6]).unwrap();
        let far = grid.index_of(&[0, -1]).unwrap();
        bad.successors[c] = Some(far);
        assert!(bellman_check(&mdp, &bad).unwrap_err().contains(
            &BellmanViolation::SuccessorNotAdjacent {
                corner: c,
                successor: far
            }
        ));
    }

    #[test]
    fn walled_goal_is_isolated() {
        let m = Maze::new(
            2,
            [0, 0],
            vec![
                Obstacle::new([-3, 1], [3, 3]),
                Obstacle::new([-3, -3], [3, -1]),
                Obstacle::new([-3, -3], [-1, 3]),
                Obstacle::new([1, -3], [3, 3]),
            ],
        )
        .unwrap();
        let grid = enumerate_valid_corners(&m, build_lists(&m, &[]));
        let mdp = CornerMdp::build(&m, &grid);
        let sol = mdp.solve();
        assert!(bellman_check(&mdp, &sol).is_ok());
        let outside = grid.index_of(&[3, 3]).unwrap();
        assert_eq!(sol.values[outside], Cost::Unreachable);
        assert_eq!(sol.values[grid.index_of(&[1, 1]).unwrap()], Cost::Finite(2));
    }

    #[test]
    fn extra_obstacle_never_lowers_values() {
        let base = two_boxes();
        let mut obs = base.obstacles().to_vec();
        obs.push(Obstacle::new([-2, -3], [2, -1]));
        // same lists: keep only corners present in both grids
        let more = Maze::new(2, [0, 0], obs).unwrap();
        let g1 = enumerate_valid_corners(&base, build_lists(&more, &[]));
        let g2 = enumerate_valid_corners(&more, build_lists(&more, &[]));
        let s1 = CornerMdp::build(&base, &g1).solve();
        let s2 = CornerMdp::build(&more, &g2).solve();
        for (j, c) in g2.corners().iter().enumerate() {
            let i = g1.index_of(c).unwrap();
            assert!(s2.values[j] >= s1.values[i]);
        }
    }
}
