//! Compiles the corner-MDP solution into a decision tree.
//!
//! The tree has two phases. Ternary grid nodes (`x_i ? pivot`) binary-search
//! each coordinate list in turn until the branch pins down a single cell,
//! i.e. a set of points sharing one surface. If the cell is a corner, the
//! leaf follows the corner successor; otherwise a chain of direction nodes
//! picks the surface corner minimising `d(x,c) + V(c)`. Inside a fixed cell
//! every such comparison is a linear threshold on `x`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corner_mdp::{CornerMdpSolution, Cost};
use crate::grid::{Cell, CoordinateList, CornerGrid, ExtendedCoord, Segment};
use crate::maze::{Direction, Point};
use crate::runtime::{direct_go_to, MacroAction};

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error(
        "feature {feature}: candidates differ on a segment that is not a finite open interval"
    )]
    NotLinearizable { feature: usize },
    #[error("value {0} does not fit a signed 64-bit integer")]
    ValueOverflow(u64),
}

#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    /// Share identical direction subtrees within a cell instead of
    /// duplicating the candidate suffix.
    pub dag_direction_tree: bool,
}

/// `weights · x <= threshold`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearForm {
    pub weights: Vec<i64>,
    #[serde(with = "decimal")]
    pub threshold: i128,
}

/// `i128` as a decimal string; JSON numbers inside tagged enums cannot
/// carry it.
mod decimal {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &i128, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i128, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl LinearForm {
    #[inline]
    pub fn holds(&self, x: &[i64]) -> bool {
        let lhs: i128 = self
            .weights
            .iter()
            .zip(x)
            .map(|(&w, &v)| i128::from(w) * i128::from(v))
            .sum();
        lhs <= self.threshold
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = String::new();
        for (i, &w) in self.weights.iter().enumerate().filter(|(_, &w)| w != 0) {
            match (terms.is_empty(), w < 0) {
                (true, true) => terms.push('-'),
                (true, false) => {}
                (false, true) => terms.push_str(" - "),
                (false, false) => terms.push_str(" + "),
            }
            terms.push_str(&format!("{}x{}", w.unsigned_abs(), i + 1));
        }
        if terms.is_empty() {
            terms.push('0');
        }
        write!(f, "{terms} <= {}", self.threshold)
    }
}

/// Rewrites `d(x,c1) + v1 <= d(x,c2) + v2` as a linear threshold valid for
/// every `x` in `cell`.
///
/// On features where the candidates agree the distance terms cancel. Where
/// they differ they must be the two finite ends `lo < hi` of an open
/// segment, and for `lo < x_i < hi` we have
/// `|x_i - lo| - |x_i - hi| = 2 x_i - lo - hi`.
pub fn linearize(
    cell: &Cell,
    c1: &[i64],
    v1: u64,
    c2: &[i64],
    v2: u64,
) -> Result<LinearForm, TreeError> {
    let to_i128 = |v: u64| {
        i64::try_from(v)
            .map(i128::from)
            .map_err(|_| TreeError::ValueOverflow(v))
    };
    let mut threshold = to_i128(v2)? - to_i128(v1)?;
    let mut weights = vec![0i64; cell.dimension()];
    for (i, seg) in cell.segments.iter().enumerate() {
        if c1[i] == c2[i] {
            continue;
        }
        let Segment::Open(ExtendedCoord::Finite(lo), ExtendedCoord::Finite(hi)) = *seg else {
            return Err(TreeError::NotLinearizable { feature: i });
        };
        let sign = if (c1[i], c2[i]) == (lo, hi) {
            1
        } else if (c1[i], c2[i]) == (hi, lo) {
            -1
        } else {
            return Err(TreeError::NotLinearizable { feature: i });
        };
        weights[i] = 2 * sign;
        threshold += i128::from(sign) * (i128::from(lo) + i128::from(hi));
    }
    Ok(LinearForm { weights, threshold })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeafAction {
    AtGoal,
    /// The cell is the single corner `corner`; move to its successor.
    CornerStep {
        corner: usize,
        next: usize,
    },
    GoToCorner {
        target: usize,
    },
    Unreachable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub cell: Cell,
    pub action: LeafAction,
    /// `(i, b, while x_i != stop)` per differing feature, feature order.
    pub macros: Vec<MacroAction>,
}

impl Leaf {
    /// The corner this leaf heads for, if any.
    pub fn target(&self) -> Option<usize> {
        match self.action {
            LeafAction::CornerStep { next, .. } => Some(next),
            LeafAction::GoToCorner { target } => Some(target),
            LeafAction::AtGoal | LeafAction::Unreachable => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridNode {
    pub feature: usize,
    pub pivot: i64,
    pub less: NodeId,
    pub eq: NodeId,
    pub greater: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirNode {
    pub c1: usize,
    pub c2: usize,
    pub v1: u64,
    pub v2: u64,
    pub cell: Cell,
    pub form: LinearForm,
    /// Taken when `c1` wins (ties included).
    pub left: NodeId,
    pub right: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Grid(GridNode),
    Dir(DirNode),
    Leaf(Leaf),
}

/// Longest root-to-leaf counts of internal nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthStats {
    pub grid: usize,
    pub direction: usize,
    pub total: usize,
}

fn ceil_log2(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

/// `sum_i 2 * ceil(log2(n_i + 1))`.
pub fn grid_depth_bound(lists: &[CoordinateList]) -> usize {
    lists
        .iter()
        .map(|l| 2 * ceil_log2(l.len() as u64 + 1) as usize)
        .sum()
}

/// `2^d - 1`.
pub fn direction_depth_bound(dimension: usize) -> usize {
    (1usize << dimension) - 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTree {
    dimension: usize,
    lists: Vec<CoordinateList>,
    corners: Vec<Point>,
    values: Vec<Cost>,
    successors: Vec<Option<usize>>,
    goal_index: usize,
    nodes: Vec<Node>,
    root: NodeId,
    depth: DepthStats,
}

impl PolicyTree {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lists(&self) -> &[CoordinateList] {
        &self.lists
    }

    pub fn corners(&self) -> &[Point] {
        &self.corners
    }

    pub fn corner(&self, i: usize) -> &Point {
        &self.corners[i]
    }

    pub fn value(&self, i: usize) -> Cost {
        self.values[i]
    }

    pub fn values(&self) -> &[Cost] {
        &self.values
    }

    pub fn successor(&self, i: usize) -> Option<usize> {
        self.successors[i]
    }

    pub fn successors(&self) -> &[Option<usize>] {
        &self.successors
    }

    pub fn goal_index(&self) -> usize {
        self.goal_index
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn depth(&self) -> DepthStats {
        self.depth
    }

    pub fn grid_depth_bound(&self) -> usize {
        grid_depth_bound(&self.lists)
    }

    pub fn direction_depth_bound(&self) -> usize {
        direction_depth_bound(self.dimension)
    }

    pub fn within_depth_bounds(&self) -> bool {
        self.depth.grid <= self.grid_depth_bound()
            && self.depth.direction <= self.direction_depth_bound()
    }

    /// Single descent from the root. Returns the leaf and the number of
    /// internal nodes visited.
    pub fn evaluate(&self, s: &[i64]) -> (&Leaf, usize) {
        let mut id = self.root;
        let mut visited = 0;
        loop {
            match &self.nodes[id] {
                Node::Grid(g) => {
                    visited += 1;
                    id = match s[g.feature].cmp(&g.pivot) {
                        std::cmp::Ordering::Less => g.less,
                        std::cmp::Ordering::Equal => g.eq,
                        std::cmp::Ordering::Greater => g.greater,
                    };
                }
                Node::Dir(n) => {
                    visited += 1;
                    id = if n.form.holds(s) { n.left } else { n.right };
                }
                Node::Leaf(leaf) => return (leaf, visited),
            }
        }
    }

    /// The root-to-leaf node sequence for `s`.
    pub fn path(&self, s: &[i64]) -> Vec<NodeId> {
        let mut id = self.root;
        let mut out = vec![id];
        loop {
            id = match &self.nodes[id] {
                Node::Grid(g) => match s[g.feature].cmp(&g.pivot) {
                    std::cmp::Ordering::Less => g.less,
                    std::cmp::Ordering::Equal => g.eq,
                    std::cmp::Ordering::Greater => g.greater,
                },
                Node::Dir(n) => {
                    if n.form.holds(s) {
                        n.left
                    } else {
                        n.right
                    }
                }
                Node::Leaf(_) => return out,
            };
            out.push(id);
        }
    }

    /// First primitive action the policy takes at `s`, or `None` at the goal
    /// and at unreachable leaves.
    pub fn first_action(&self, s: &[i64]) -> Option<crate::maze::Action> {
        self.evaluate(s).0.macros.first().map(|m| m.action())
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(l) => Some(l),
            _ => None,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        dimension: usize,
        lists: Vec<CoordinateList>,
        corners: Vec<Point>,
        values: Vec<Cost>,
        successors: Vec<Option<usize>>,
        goal_index: usize,
        nodes: Vec<Node>,
        root: NodeId,
    ) -> Self {
        let depth = measure_depth(&nodes, root);
        PolicyTree {
            dimension,
            lists,
            corners,
            values,
            successors,
            goal_index,
            nodes,
            root,
            depth,
        }
    }
}

pub(crate) fn measure_depth(nodes: &[Node], root: NodeId) -> DepthStats {
    // (grid, direction, total) per node, children before parents
    let mut memo: Vec<Option<DepthStats>> = vec![None; nodes.len()];
    let mut stack = vec![(root, false)];
    while let Some((id, expanded)) = stack.pop() {
        if memo[id].is_some() {
            continue;
        }
        let children: Vec<NodeId> = match &nodes[id] {
            Node::Grid(g) => vec![g.less, g.eq, g.greater],
            Node::Dir(n) => vec![n.left, n.right],
            Node::Leaf(_) => vec![],
        };
        if !expanded && children.iter().any(|&c| memo[c].is_none()) {
            stack.push((id, true));
            stack.extend(
                children
                    .iter()
                    .filter(|&&c| memo[c].is_none())
                    .map(|&c| (c, false)),
            );
            continue;
        }
        let mut s = DepthStats::default();
        for c in &children {
            let cs = memo[*c].expect("child measured");
            s.grid = s.grid.max(cs.grid);
            s.direction = s.direction.max(cs.direction);
            s.total = s.total.max(cs.total);
        }
        match &nodes[id] {
            Node::Grid(_) => s.grid += 1,
            Node::Dir(_) => s.direction += 1,
            Node::Leaf(_) => {}
        }
        if !children.is_empty() {
            s.total += 1;
        }
        memo[id] = Some(s);
    }
    memo[root].expect("root measured")
}

struct Builder<'a> {
    grid: &'a CornerGrid,
    solution: &'a CornerMdpSolution,
    options: &'a BuildOptions,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn grid_tree(
        &mut self,
        i: usize,
        lo: ExtendedCoord,
        hi: ExtendedCoord,
        prefix: &mut Vec<Segment>,
    ) -> NodeId {
        let d = self.grid.dimension();
        if i == d {
            let cell = Cell {
                segments: prefix.clone(),
            };
            return self.cell_node(cell);
        }
        let inside = self.grid.lists()[i].strictly_between(lo, hi);
        if inside.is_empty() {
            prefix.push(Segment::Open(lo, hi));
            let n = self.grid_tree(i + 1, ExtendedCoord::NegInf, ExtendedCoord::PosInf, prefix);
            prefix.pop();
            return n;
        }
        // lower median: position floor(m/2) counted from one, at least the first
        let pivot = inside[(inside.len() / 2).max(1) - 1];
        let less = self.grid_tree(i, lo, ExtendedCoord::Finite(pivot), prefix);
        prefix.push(Segment::Singleton(pivot));
        let eq = self.grid_tree(i + 1, ExtendedCoord::NegInf, ExtendedCoord::PosInf, prefix);
        prefix.pop();
        let greater = self.grid_tree(i, ExtendedCoord::Finite(pivot), hi, prefix);
        self.push(Node::Grid(GridNode {
            feature: i,
            pivot,
            less,
            eq,
            greater,
        }))
    }

    fn cell_node(&mut self, cell: Cell) -> NodeId {
        if cell.is_corner() {
            let p: Vec<i64> = cell
                .segments
                .iter()
                .map(|s| match s {
                    Segment::Singleton(v) => *v,
                    Segment::Open(..) => unreachable!(),
                })
                .collect();
            let (action, macros) = match self.grid.index_of(&p) {
                Some(c) if c == self.grid.goal_index() => (LeafAction::AtGoal, vec![]),
                Some(c) => match self.solution.successors[c] {
                    Some(next) => (
                        LeafAction::CornerStep { corner: c, next },
                        direct_go_to(&p, self.grid.corner(next)),
                    ),
                    None => (LeafAction::Unreachable, vec![]),
                },
                // corner strictly inside an obstacle
                None => (LeafAction::Unreachable, vec![]),
            };
            return self.push(Node::Leaf(Leaf {
                cell,
                action,
                macros,
            }));
        }
        let candidates: Vec<usize> = cell
            .finite_corners()
            .iter()
            .filter_map(|c| self.grid.index_of(c))
            .filter(|&c| self.solution.values[c].is_finite())
            .collect();
        if candidates.is_empty() {
            return self.push(Node::Leaf(Leaf {
                cell,
                action: LeafAction::Unreachable,
                macros: vec![],
            }));
        }
        let mut memo = HashMap::new();
        self.direction_tree(&cell, &candidates, &mut memo)
    }

    fn direction_tree(
        &mut self,
        cell: &Cell,
        cands: &[usize],
        memo: &mut HashMap<Vec<usize>, NodeId>,
    ) -> NodeId {
        if self.options.dag_direction_tree {
            if let Some(&id) = memo.get(cands) {
                return id;
            }
        }
        let id = if let [target] = *cands {
            let macros = cell_macros(cell, self.grid.corner(target));
            self.push(Node::Leaf(Leaf {
                cell: cell.clone(),
                action: LeafAction::GoToCorner { target },
                macros,
            }))
        } else {
            let (c1, c2) = (cands[0], cands[1]);
            let mut left_c = vec![c1];
            left_c.extend_from_slice(&cands[2..]);
            let mut right_c = vec![c2];
            right_c.extend_from_slice(&cands[2..]);
            let left = self.direction_tree(cell, &left_c, memo);
            let right = self.direction_tree(cell, &right_c, memo);
            let v1 = self.solution.values[c1].finite().expect("filtered");
            let v2 = self.solution.values[c2].finite().expect("filtered");
            let form = linearize(cell, self.grid.corner(c1), v1, self.grid.corner(c2), v2)
                .expect("surface corners differ only on finite open segments");
            self.push(Node::Dir(DirNode {
                c1,
                c2,
                v1,
                v2,
                cell: cell.clone(),
                form,
                left,
                right,
            }))
        };
        if self.options.dag_direction_tree {
            memo.insert(cands.to_vec(), id);
        }
        id
    }
}

/// Macros from anywhere in `cell` to `target`, one of its corners.
fn cell_macros(cell: &Cell, target: &Point) -> Vec<MacroAction> {
    cell.segments
        .iter()
        .enumerate()
        .filter_map(|(i, seg)| match *seg {
            Segment::Singleton(_) => None,
            Segment::Open(lo, _) => {
                let direction = if ExtendedCoord::Finite(target[i]) == lo {
                    Direction::Minus
                } else {
                    Direction::Plus
                };
                Some(MacroAction {
                    feature: i,
                    direction,
                    stop: target[i],
                })
            }
        })
        .collect()
}

/// Compiles the policy tree for a solved corner grid.
pub fn build_policy_tree(
    grid: &CornerGrid,
    solution: &CornerMdpSolution,
    options: &BuildOptions,
) -> PolicyTree {
    let mut b = Builder {
        grid,
        solution,
        options,
        nodes: Vec::new(),
    };
    let root = b.grid_tree(
        0,
        ExtendedCoord::NegInf,
        ExtendedCoord::PosInf,
        &mut Vec::new(),
    );
    let nodes = b.nodes;
    PolicyTree::from_parts(
        grid.dimension(),
        grid.lists().to_vec(),
        grid.corners().to_vec(),
        solution.values.clone(),
        solution.successors.clone(),
        grid.goal_index(),
        nodes,
        root,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corner_mdp::CornerMdp;
    use crate::grid::{build_lists, enumerate_valid_corners};
    use crate::maze::fixtures::two_boxes;
    use crate::maze::{Maze, Obstacle};
    use rand::{Rng, SeedableRng};
    use ExtendedCoord::*;

    fn compile(m: &Maze, options: &BuildOptions) -> PolicyTree {
        let grid = enumerate_valid_corners(m, build_lists(m, &[]));
        let sol = CornerMdp::build(m, &grid).solve();
        build_policy_tree(&grid, &sol, options)
    }

    #[test]
    fn fixture_tree() {
        let t = compile(&two_boxes(), &BuildOptions::default());
        let (leaf, visited) = t.evaluate(&[2, -2]);
        assert_eq!(t.corner(leaf.target().unwrap()), &Point::from([1, -1]));
        assert!(matches!(leaf.action, LeafAction::GoToCorner { .. }));
        assert!(visited <= t.depth().total);
        assert_eq!(
            leaf.cell.segments,
            vec![
                Segment::Open(Finite(1), Finite(3)),
                Segment::Open(NegInf, Finite(-1))
            ]
        );
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
        // the cell's direction node compares its two corners
        let path = t.path(&[2, -2]);
        let Node::Dir(dir) = t.node(path[path.len() - 2]) else {
            panic!("expected a direction node")
        };
        assert_eq!(
            (t.corner(dir.c1), t.corner(dir.c2)),
            (&Point::from([1, -1]), &Point::from([3, -1]))
        );
        assert_eq!((dir.v1, dir.v2), (2, 4));

        assert_eq!(t.evaluate(&[0, 0]).0.action, LeafAction::AtGoal);
        let leaf = t.evaluate(&[3, -1]).0;
        assert!(matches!(leaf.action, LeafAction::CornerStep { .. }));
        let next = leaf.target().unwrap();
        assert_eq!(t.corner(next), &Point::from([1, -1]));
        assert!(t.within_depth_bounds());
        // root pivot: lower median of {0,1,3,6}
        let Node::Grid(root) = t.node(t.root()) else {
            panic!()
        };
        assert_eq!((root.feature, root.pivot), (0, 1));
    }

    #[test]
    fn one_dimensional_single_corner() {
        let m = Maze::new(1, [5], vec![]).unwrap();
        let t = compile(&m, &BuildOptions::default());
        let Node::Grid(root) = t.node(t.root()) else {
            panic!()
        };
        assert_eq!(root.pivot, 5);
        let leaf = |id: NodeId| match t.node(id) {
            Node::Leaf(l) => l.clone(),
            _ => panic!(),
        };
        assert_eq!(leaf(root.eq).action, LeafAction::AtGoal);
        assert_eq!(leaf(root.eq).cell.segments, vec![Segment::Singleton(5)]);
        assert_eq!(leaf(root.less).action, LeafAction::GoToCorner { target: 0 });
        assert_eq!(
            leaf(root.less).cell.segments,
            vec![Segment::Open(NegInf, Finite(5))]
        );
        assert_eq!(
            leaf(root.greater).action,
            LeafAction::GoToCorner { target: 0 }
        );
        assert_eq!(
            leaf(root.greater).cell.segments,
            vec![Segment::Open(Finite(5), PosInf)]
        );
    }

    #[test]
    fn pivot_sequence() {
        // bounds (3, +inf) over {0,1,3,6} leave only 6
        let m = Maze::new(
            1,
            [0],
            vec![Obstacle::new([1], [3]), Obstacle::new([3], [6])],
        )
        .unwrap();
        let t = compile(&m, &BuildOptions::default());
        let Node::Grid(root) = t.node(t.root()) else {
            panic!()
        };
        assert_eq!(root.pivot, 1);
        let Node::Grid(g) = t.node(root.greater) else {
            panic!()
        };
        assert_eq!(g.pivot, 3);
        let Node::Grid(g) = t.node(g.greater) else {
            panic!()
        };
        assert_eq!(g.pivot, 6);
        assert!(matches!(t.node(g.greater), Node::Leaf(_)));
        assert!(matches!(t.node(g.less), Node::Leaf(_)));
    }

    #[test]
    fn enclosed_goal_gives_unreachable_outside() {
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
        let t = compile(&m, &BuildOptions::default());
        for x in -8..=8 {
            for y in -8..=8 {
                if m.in_obstacle(&[x, y]) {
                    continue;
                }
                let inside = x.abs() <= 1 && y.abs() <= 1;
                let unreachable = t.evaluate(&[x, y]).0.action == LeafAction::Unreachable;
                assert_eq!(unreachable, !inside, "({x},{y})");
            }
        }
    }

    #[test]
    fn linear_forms() {
        let cell = Cell {
            segments: vec![
                Segment::Open(Finite(1), Finite(3)),
                Segment::Open(NegInf, Finite(-1)),
            ],
        };
        let f = linearize(&cell, &[1, -1], 2, &[3, -1], 4).unwrap();
        assert_eq!(f.weights, vec![2, 0]);
        assert_eq!(f.threshold, 6);
        assert!(f.holds(&[2, -2]));

        let f = linearize(&cell, &[1, -1], 5, &[1, -1], 7).unwrap();
        assert_eq!(
            f,
            LinearForm {
                weights: vec![0, 0],
                threshold: 2
            }
        );

        let cell = Cell {
            segments: vec![Segment::Open(Finite(0), Finite(10))],
        };
        let f = linearize(&cell, &[0], 3, &[10], 3).unwrap();
        assert_eq!(
            f,
            LinearForm {
                weights: vec![2],
                threshold: 10
            }
        );

        let cell = Cell {
            segments: vec![Segment::Open(Finite(0), PosInf)],
        };
        assert_eq!(
            linearize(&cell, &[0], 0, &[10], 0),
            Err(TreeError::NotLinearizable { feature: 0 })
        );
    }

    #[test]
    fn tournament_shape() {
        // a 2-d cell with four finite corners
        let m = Maze::new(2, [0, 0], vec![Obstacle::new([10, 10], [20, 20])]).unwrap();
        let t = compile(&m, &BuildOptions::default());
        let (leaf, _) = t.evaluate(&[5, 5]);
        assert_eq!(leaf.cell.finite_corners().len(), 4);
        let path = t.path(&[5, 5]);
        // walk up to the first direction node of this cell
        let first_dir = *path
            .iter()
            .find(|&&id| matches!(t.node(id), Node::Dir(_)))
            .unwrap();
        let mut leaves = 0;
        let mut max_depth = 0;
        let mut stack = vec![(first_dir, 0)];
        while let Some((id, depth)) = stack.pop() {
            match t.node(id) {
                Node::Dir(n) => {
                    stack.push((n.left, depth + 1));
                    stack.push((n.right, depth + 1));
                }
                Node::Leaf(_) => {
                    leaves += 1;
                    max_depth = max_depth.max(depth);
                }
                Node::Grid(_) => unreachable!(),
            }
        }
        assert_eq!((max_depth, leaves), (3, 8));

        let dag = compile(
            &m,
            &BuildOptions {
                dag_direction_tree: true,
            },
        );
        assert!(dag.nodes().len() < t.nodes().len());
        assert_eq!(dag.depth(), t.depth());
    }

    #[test]
    fn linear_forms_agree_with_explicit_comparison() {
        let m = Maze::new(
            3,
            [0, 0, 0],
            vec![
                Obstacle::new([2, -3, 1], [6, 4, 5]),
                Obstacle::new([-5, 2, -4], [-1, 7, 0]),
            ],
        )
        .unwrap();
        let t = compile(&m, &BuildOptions::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for node in t.nodes() {
            let Node::Dir(n) = node else { continue };
            let (c1, c2) = (t.corner(n.c1), t.corner(n.c2));
            for _ in 0..1000 {
                let x: Vec<i64> = n
                    .cell
                    .segments
                    .iter()
                    .map(|s| match *s {
                        Segment::Singleton(v) => v,
                        Segment::Open(lo, hi) => {
                            let lo = lo.finite().unwrap_or(-1_000_000);
                            let hi = hi.finite().unwrap_or(1_000_000);
                            if hi - lo < 2 {
                                // no integers: sample the real midpoint region via scaled check below
                                lo
                            } else {
                                rng.gen_range(lo + 1..hi)
                            }
                        }
                    })
                    .collect();
                if !n.cell.contains(&x) {
                    continue;
                }
                let lhs = x
                    .iter()
                    .zip(c1.iter())
                    .map(|(a, b)| a.abs_diff(*b))
                    .sum::<u64>()
                    + n.v1;
                let rhs = x
                    .iter()
                    .zip(c2.iter())
                    .map(|(a, b)| a.abs_diff(*b))
                    .sum::<u64>()
                    + n.v2;
                assert_eq!(n.form.holds(&x), lhs <= rhs);
            }
        }
    }

    #[test]
    fn depth_bound_helpers() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(direction_depth_bound(2), 3);
        let lists = vec![CoordinateList::from_values(vec![0, 1, 3, 6])];
        assert_eq!(grid_depth_bound(&lists), 6);
    }
}
