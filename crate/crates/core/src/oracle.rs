//! Brute-force ground truth on a finite window of the lattice.
//!
//! Nothing here uses the corner machinery: values come from breadth-first
//! search over every in-box state, and noisy values from plain value
//! iteration in exact rational arithmetic.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::corner_mdp::Cost;
use crate::maze::{Action, Maze, Point};
use crate::runtime::Alpha;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("padding must be at least 1")]
    Padding,
    #[error("box bounds must satisfy lo <= hi on every feature")]
    EmptyBox,
    #[error(
        "value iteration did not converge after {iterations} iterations (residual {residual})"
    )]
    NoConvergence {
        iterations: usize,
        residual: BigRational,
    },
}

/// Inclusive integer bounds per feature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
    strides: Vec<usize>,
}

impl OracleBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self, OracleError> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(OracleError::EmptyBox);
        }
        let d = lo.len();
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (hi[i + 1] - lo[i + 1] + 1) as usize;
        }
        Ok(OracleBox { lo, hi, strides })
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a + 1) as usize)
            .product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Manhattan distance between opposite box corners.
    pub fn diameter(&self) -> u64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs_diff(*b))
            .sum()
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.len() == self.lo.len()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a <= x && x <= b)
    }

    pub fn expand(&self, by: i64) -> OracleBox {
        OracleBox::new(
            self.lo.iter().map(|v| v - by).collect(),
            self.hi.iter().map(|v| v + by).collect(),
        )
        .expect("expanding keeps lo <= hi")
    }

    pub fn index(&self, p: &[i64]) -> Option<usize> {
        self.contains(p).then(|| {
            p.iter()
                .zip(&self.lo)
                .zip(&self.strides)
                .map(|((x, lo), s)| (x - lo) as usize * s)
                .sum()
        })
    }

    pub fn point(&self, mut index: usize) -> Point {
        let p = self
            .lo
            .iter()
            .zip(&self.strides)
            .map(|(lo, s)| {
                let v = lo + (index / s) as i64;
                index %= s;
                v
            })
            .collect();
        Point(p)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// In-box neighbour index for each action, `None` when it leaves the box.
    fn neighbour(&self, index: usize, p: &[i64], a: Action) -> Option<usize> {
        let v = p[a.feature] + a.direction.delta();
        if v < self.lo[a.feature] || v > self.hi[a.feature] {
            return None;
        }
        let s = self.strides[a.feature];
        Some(if a.direction.delta() > 0 {
            index + s
        } else {
            index - s
        })
    }
}

/// Componentwise hull of obstacle corners, goal and `extra` states,
/// expanded by `padding >= 1`.
pub fn bounding_box(maze: &Maze, extra: &[Point], padding: i64) -> Result<OracleBox, OracleError> {
    if padding < 1 {
        return Err(OracleError::Padding);
    }
    let mut lo = maze.goal().0.clone();
    let mut hi = lo.clone();
    let points = maze
        .obstacles()
        .iter()
        .flat_map(|o| [&o.a, &o.b])
        .chain(extra);
    for p in points {
        for i in 0..lo.len() {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    OracleBox::new(
        lo.iter().map(|v| v - padding).collect(),
        hi.iter().map(|v| v + padding).collect(),
    )
}

/// Exact cost-to-goal for every in-box state.
#[derive(Clone, Debug)]
pub struct ValueField {
    bbox: OracleBox,
    free: Vec<bool>,
    values: Vec<Cost>,
}

impl ValueField {
    pub fn bbox(&self) -> &OracleBox {
        &self.bbox
    }

    /// `None` outside the box or inside an obstacle.
    pub fn get(&self, p: &[i64]) -> Option<Cost> {
        let i = self.bbox.index(p)?;
        self.free[i].then_some(self.values[i])
    }

    pub fn is_free(&self, p: &[i64]) -> bool {
        self.bbox.index(p).is_some_and(|i| self.free[i])
    }

    /// Free in-box states with their values, in box order.
    pub fn free_states(&self) -> impl Iterator<Item = (Point, Cost)> + '_ {
        (0..self.values.len())
            .filter(|&i| self.free[i])
            .map(|i| (self.bbox.point(i), self.values[i]))
    }

    /// Goal has value 0 and every other finite value `v` has a move to a
    /// state of value `v - 1`. Returns the violating states.
    pub fn bellman_violations(&self, maze: &Maze) -> Vec<Point> {
        let mut out = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            if !self.free[i] {
                continue;
            }
            let p = self.bbox.point(i);
            let ok = match v {
                Cost::Unreachable => true,
                Cost::Finite(0) => maze.is_goal(&p),
                Cost::Finite(v) => Action::all(maze.dimension()).any(|a| {
                    let mut q = p.0.clone();
                    maze.step_in_place(&mut q, a) && self.get(&q) == Some(Cost::Finite(v - 1))
                }),
            };
            if !ok {
                out.push(p);
            }
        }
        out
    }
}

fn free_mask(maze: &Maze, bbox: &OracleBox) -> Vec<bool> {
    (0..bbox.len())
        .map(|i| !maze.in_obstacle(&bbox.point(i)))
        .collect()
}

/// Breadth-first search from the goal over the reversed transition
/// relation, restricted to the box.
pub fn bfs_values(maze: &Maze, bbox: &OracleBox) -> ValueField {
    let free = free_mask(maze, bbox);
    let mut values = vec![Cost::Unreachable; bbox.len()];
    let mut queue = VecDeque::new();
    if let Some(g) = bbox.index(maze.goal()) {
        values[g] = Cost::Finite(0);
        queue.push_back(g);
    }
    while let Some(t) = queue.pop_front() {
        let Cost::Finite(v) = values[t] else {
            unreachable!()
        };
        let tp = bbox.point(t);
        // s moves onto t iff s is a free non-goal neighbour of t
        for a in Action::all(maze.dimension()) {
            let Some(s) = bbox.neighbour(t, &tp, a) else {
                continue;
            };
            if free[s] && values[s] == Cost::Unreachable {
                values[s] = Cost::Finite(v + 1);
                queue.push_back(s);
            }
        }
    }
    ValueField {
        bbox: bbox.clone(),
        free,
        values,
    }
}

/// Bracketed noisy values and the greedy actions at each state.
#[derive(Clone, Debug)]
pub struct NoisyField {
    bbox: OracleBox,
    /// Lower bracket; `None` for obstacle states and states that cannot
    /// reach the goal.
    values: Vec<Option<BigRational>>,
    greedy: Vec<Vec<Action>>,
    pub iterations: usize,
    /// Largest gap between the upper and lower brackets.
    pub residual: BigRational,
}

impl NoisyField {
    /// A value within the tolerance of the true noisy value, from below.
    pub fn value(&self, p: &[i64]) -> Option<&BigRational> {
        self.bbox.index(p).and_then(|i| self.values[i].as_ref())
    }

    /// Actions whose one-step lookahead is within twice the tolerance of
    /// the minimum.
    pub fn greedy_actions(&self, p: &[i64]) -> &[Action] {
        self.bbox.index(p).map_or(&[], |i| &self.greedy[i])
    }

    pub fn bbox(&self) -> &OracleBox {
        &self.bbox
    }
}

/// In-box moves of one state as `(action, next state)`; blocked moves stay.
type Moves = Vec<Vec<(Action, usize)>>;

struct NoisyProblem {
    active: Vec<bool>,
    goal: Option<usize>,
    moves: Moves,
    p: BigInt,
    q: BigInt,
    qp: BigInt,
}

impl NoisyProblem {
    /// Numerators of `T V` over `scale * q`, given `V` over `scale`.
    fn apply(&self, cur: &[BigInt], next_scale: &BigInt) -> Vec<BigInt> {
        (0..cur.len())
            .map(|i| {
                if !self.active[i] || Some(i) == self.goal {
                    return BigInt::zero();
                }
                self.moves[i]
                    .iter()
                    .map(|&(_, j)| next_scale + &self.p * &cur[i] + &self.qp * &cur[j])
                    .min()
                    .expect("a state that reaches the goal has a move")
            })
            .collect()
    }
}

/// Value iteration for the noisy Bellman equation
/// `V(s) = min_a 1 + alpha V(s) + (1 - alpha) V(T(s,a))`.
///
/// Two iterates bracket the solution: one rises from `V = 0`, the other
/// falls from `C = (#states) * ceil(1/(1-alpha))`, which bounds the cost
/// of any shortest-path walk under noise. Both stay on their side of the
/// fixed point, so once they are within `tolerance` everywhere the lower
/// one is within `tolerance` of the true value. With `alpha = p/q`, iterate
/// `n` is stored as integer numerators over `q^n`, so every update is
/// exact. Only states that can reach the goal inside the box take part;
/// moves leaving the box are not available.
pub fn noisy_values(
    maze: &Maze,
    bbox: &OracleBox,
    alpha: Alpha,
    tolerance: &BigRational,
    max_iterations: usize,
) -> Result<NoisyField, OracleError> {
    let det = bfs_values(maze, bbox);
    let n = bbox.len();
    let active: Vec<bool> = det
        .values
        .iter()
        .zip(&det.free)
        .map(|(v, f)| *f && v.is_finite())
        .collect();
    let goal = bbox.index(maze.goal());
    let actions: Vec<Action> = Action::all(maze.dimension()).collect();
    let moves: Moves = (0..n)
        .map(|i| {
            if !active[i] {
                return vec![];
            }
            let p = bbox.point(i);
            actions
                .iter()
                .filter_map(|&a| {
                    let j = bbox.neighbour(i, &p, a)?;
                    let j = if det.free[j] && Some(i) != goal { j } else { i };
                    active[j].then_some((a, j))
                })
                .collect()
        })
        .collect();
    let p = BigInt::from(alpha.numer());
    let q = BigInt::from(alpha.denom());
    let problem = NoisyProblem {
        active,
        goal,
        moves,
        qp: &q - &p,
        p,
        q,
    };

    let ceiling =
        BigInt::from(problem.active.iter().filter(|&&a| a).count() as u64 * alpha.stall_factor());
    let mut lower = vec![BigInt::zero(); n];
    let mut upper: Vec<BigInt> = (0..n)
        .map(|i| {
            if problem.active[i] && Some(i) != goal {
                ceiling.clone()
            } else {
                BigInt::zero()
            }
        })
        .collect();
    let tol_num = tolerance.numer().clone();
    let tol_den = tolerance.denom().clone();
    let mut scale = BigInt::one();
    let mut iterations = 0;
    loop {
        scale = &scale * &problem.q;
        lower = problem.apply(&lower, &scale);
        upper = problem.apply(&upper, &scale);
        iterations += 1;
        let gap = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| u - l)
            .max()
            .unwrap_or_default();
        if gap.is_zero() || &gap * &tol_den <= &tol_num * &scale {
            let residual = BigRational::new(gap, scale.clone());
            let greedy = greedy_sets(&problem, &lower, &scale, tolerance, &actions);
            let values = (0..n)
                .map(|i| {
                    problem.active[i].then(|| BigRational::new(lower[i].clone(), scale.clone()))
                })
                .collect();
            return Ok(NoisyField {
                bbox: bbox.clone(),
                values,
                greedy,
                iterations,
                residual,
            });
        }
        if iterations >= max_iterations {
            return Err(OracleError::NoConvergence {
                iterations,
                residual: BigRational::new(gap, scale),
            });
        }
    }
}

/// Each lookahead `Q(s,a) = 1 + alpha V(s) + (1-alpha) V(s')` computed from
/// the lower bracket is off by at most the tolerance, so actions within
/// twice the tolerance of the best are kept.
fn greedy_sets(
    problem: &NoisyProblem,
    num: &[BigInt],
    scale: &BigInt,
    tolerance: &BigRational,
    all: &[Action],
) -> Vec<Vec<Action>> {
    let NoisyProblem {
        active,
        goal,
        moves,
        p,
        q,
        qp,
    } = problem;
    // Q(s,a) * q * scale = q * scale + p N(s) + (q - p) N(s')
    let q_scale = scale * q;
    let slack = BigInt::from(2) * tolerance.numer() * &q_scale;
    (0..moves.len())
        .map(|i| {
            if !active[i] {
                return vec![];
            }
            if Some(i) == *goal {
                return all.to_vec();
            }
            let qs: Vec<(Action, BigInt)> = moves[i]
                .iter()
                .map(|&(a, j)| (a, &q_scale + p * &num[i] + qp * &num[j]))
                .collect();
            let min = qs.iter().map(|(_, v)| v).min().expect("nonempty").clone();
            qs.into_iter()
                .filter(|(_, v)| (v - &min) * tolerance.denom() <= slack)
                .map(|(a, _)| a)
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Soundness {
    Ok,
    /// Largest disagreement between the box and the box grown by 2.
    Suspect {
        state: Point,
        inner: Cost,
        outer: Cost,
    },
}

/// Recomputes values on the box grown by two and compares them on the
/// original box.
pub fn box_soundness_check(maze: &Maze, inner: &ValueField) -> Soundness {
    let outer = bfs_values(maze, &inner.bbox().expand(2));
    let mut worst: Option<(u64, Point, Cost, Cost)> = None;
    for (p, v) in inner.free_states() {
        let w = outer.get(&p).expect("outer box contains the inner box");
        if v == w {
            continue;
        }
        let gap = match (v, w) {
            (Cost::Finite(a), Cost::Finite(b)) => a.abs_diff(b),
            _ => u64::MAX,
        };
        if worst.as_ref().is_none_or(|(g, ..)| gap > *g) {
            worst = Some((gap, p, v, w));
        }
    }
    match worst {
        None => Soundness::Ok,
        Some((_, state, inner, outer)) => Soundness::Suspect {
            state,
            inner,
            outer,
        },
    }
}
