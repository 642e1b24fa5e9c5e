//! Executing compiled policies on the maze.
//!
//! An episode descends the tree once, at the start state. The leaf's macro
//! actions carry the agent to a corner; from there the corner successor
//! table drives it from corner to corner until the goal, with no further
//! tree traversal.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corner_mdp::{CornerMdpSolution, Cost};
use crate::error::MazeError;
use crate::grid::CornerGrid;
use crate::maze::{Action, Direction, Maze, Point};
use crate::oracle::bounding_box;
use crate::tree::{LeafAction, PolicyTree};

/// `(feature, direction, while x_feature != stop)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MacroAction {
    pub feature: usize,
    pub direction: Direction,
    pub stop: i64,
}

impl MacroAction {
    pub fn action(&self) -> Action {
        Action::new(self.feature, self.direction)
    }

    /// Primitive steps needed from `s` when nothing stalls.
    pub fn steps_from(&self, s: &[i64]) -> u64 {
        s[self.feature].abs_diff(self.stop)
    }
}

impl fmt::Display for MacroAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.direction {
            Direction::Minus => '-',
            Direction::Plus => '+',
        };
        write!(
            f,
            "({}, {}1, while x{} != {})",
            self.feature + 1,
            sign,
            self.feature + 1,
            self.stop
        )
    }
}

/// Coordinate-wise walk from `s` to `t`, feature 1 first.
pub fn direct_go_to(s: &[i64], t: &[i64]) -> Vec<MacroAction> {
    s.iter()
        .zip(t)
        .enumerate()
        .filter_map(|(i, (&a, &b))| {
            Direction::towards(a, b).map(|direction| MacroAction {
                feature: i,
                direction,
                stop: b,
            })
        })
        .collect()
}

/// Decision of the reference policy at one state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceDecision {
    AtGoal,
    /// Head for this corner (grid index).
    Corner(usize),
    Unreachable,
}

/// The reference policy evaluated directly, without a tree: a corner
/// follows its successor; any other state heads for the surface corner
/// minimising `d(s,c) + V(c)`, earliest corner on ties.
pub fn reference_decision(
    maze: &Maze,
    grid: &CornerGrid,
    solution: &CornerMdpSolution,
    s: &Point,
) -> Result<ReferenceDecision, MazeError> {
    if maze.contains_obstacle(s)? {
        return Err(MazeError::InsideObstacle(s.clone()));
    }
    if let Some(c) = grid.index_of(s) {
        if c == grid.goal_index() {
            return Ok(ReferenceDecision::AtGoal);
        }
        return Ok(solution.successors[c]
            .map_or(ReferenceDecision::Unreachable, ReferenceDecision::Corner));
    }
    let mut best: Option<(u64, usize)> = None;
    for corner in grid.surface(s).finite_corners() {
        let Some(c) = grid.index_of(&corner) else {
            continue;
        };
        let Cost::Finite(v) = solution.values[c] else {
            continue;
        };
        let total = s.manhattan(&corner) + v;
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, c));
        }
    }
    Ok(best.map_or(ReferenceDecision::Unreachable, |(_, c)| {
        ReferenceDecision::Corner(c)
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub states: Vec<Point>,
    pub actions: Vec<Action>,
    pub total_cost: u64,
    pub tree_node_visits: usize,
    pub corner_waypoints: Vec<Point>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EpisodeError {
    #[error("no path to the goal from {0}")]
    Unreachable(Point),
    #[error("episode exceeded {max_steps} steps")]
    Runaway { max_steps: u64 },
    #[error("move {action} blocked at {state}")]
    Blocked { state: Point, action: Action },
    #[error("start {0} lies inside an obstacle")]
    StartInObstacle(Point),
    #[error("start has dimension {found}, maze has {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Probability of staying in place, as an exact fraction `< 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alpha {
    num: u64,
    den: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphaError {
    #[error("alpha must lie in [0, 1)")]
    OutOfRange,
    #[error("cannot parse alpha from {0:?}")]
    Parse(String),
}

impl Alpha {
    pub const ZERO: Alpha = Alpha { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, AlphaError> {
        if den == 0 || num >= den {
            return Err(AlphaError::OutOfRange);
        }
        let g = num_integer::gcd(num, den);
        Ok(Alpha {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn ratio(&self) -> Ratio<i128> {
        Ratio::new(i128::from(self.num), i128::from(self.den))
    }

    /// `ceil(1 / (1 - alpha))`.
    pub fn stall_factor(&self) -> u64 {
        self.den.div_ceil(self.den - self.num)
    }
}

impl FromStr for Alpha {
    type Err = AlphaError;

    /// Accepts `p/q` or a decimal such as `0.25`.
    fn from_str(s: &str) -> Result<Self, AlphaError> {
        let bad = || AlphaError::Parse(s.to_string());
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse().map_err(|_| bad())?;
            let q = q.trim().parse().map_err(|_| bad())?;
            return Alpha::new(p, q);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac.len() as u32);
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Alpha::new(num, den)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseConfig {
    pub alpha: Alpha,
    pub seed: u64,
}

/// Expected cost under uniform stay-in-place noise, exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NoisyCost {
    Finite(Ratio<i128>),
    Unreachable,
}

/// `v / (1 - alpha)`.
pub fn noisy_value(v: Cost, alpha: Alpha) -> NoisyCost {
    match v {
        Cost::Finite(v) => {
            let one = Ratio::from_integer(1);
            NoisyCost::Finite(Ratio::from_integer(i128::from(v)) / (one - alpha.ratio()))
        }
        Cost::Unreachable => NoisyCost::Unreachable,
    }
}

/// Step budget for a deterministic run from `s0`: ten times the padded
/// bounding-box diameter plus one.
pub fn default_max_steps(maze: &Maze, s0: &Point) -> u64 {
    let b = bounding_box(maze, std::slice::from_ref(s0), 1).expect("padding 1 is valid");
    10 * (b.diameter() + 1)
}

/// Deterministic budget scaled by `ceil(1/(1-alpha)) * 10`.
pub fn default_noisy_max_steps(maze: &Maze, s0: &Point, alpha: Alpha) -> u64 {
    default_max_steps(maze, s0).saturating_mul(alpha.stall_factor() * 10)
}

/// Result of an episode when only the totals are needed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpisodeSummary {
    pub total_cost: u64,
    pub tree_node_visits: usize,
    /// First corner headed for, `None` when starting at the goal.
    pub first_waypoint: Option<usize>,
}

struct Executor<'a> {
    maze: &'a Maze,
    tree: &'a PolicyTree,
    max_steps: u64,
    noise: Option<(Alpha, ChaCha8Rng)>,
    trace: Option<&'a mut Trace>,
    state: Vec<i64>,
    cost: u64,
}

impl Executor<'_> {
    fn run_macro(&mut self, m: &MacroAction) -> Result<(), EpisodeError> {
        let action = m.action();
        while self.state[m.feature] != m.stop {
            if self.cost >= self.max_steps {
                return Err(EpisodeError::Runaway {
                    max_steps: self.max_steps,
                });
            }
            self.cost += 1;
            let stalled = match &mut self.noise {
                Some((alpha, rng)) => !alpha.is_zero() && rng.gen_range(0..alpha.den) < alpha.num,
                None => false,
            };
            if !stalled && !self.maze.step_in_place(&mut self.state, action) {
                return Err(EpisodeError::Blocked {
                    state: Point(self.state.clone()),
                    action,
                });
            }
            if let Some(t) = self.trace.as_deref_mut() {
                t.actions.push(action);
                t.states.push(Point(self.state.clone()));
            }
        }
        Ok(())
    }

    fn arrive(&mut self, corner: usize) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.corner_waypoints.push(self.tree.corner(corner).clone());
        }
    }

    fn run(&mut self) -> Result<EpisodeSummary, EpisodeError> {
        let (leaf, visits) = self.tree.evaluate(&self.state);
        if let Some(t) = self.trace.as_deref_mut() {
            t.tree_node_visits = visits;
        }
        match leaf.action {
            LeafAction::AtGoal => {
                return Ok(EpisodeSummary {
                    total_cost: 0,
                    tree_node_visits: visits,
                    first_waypoint: None,
                })
            }
            LeafAction::Unreachable => {
                return Err(EpisodeError::Unreachable(Point(self.state.clone())))
            }
            LeafAction::CornerStep { corner, .. } => self.arrive(corner),
            LeafAction::GoToCorner { .. } => {}
        }
        let first = leaf.target().expect("leaf with a target");
        for m in &leaf.macros {
            self.run_macro(m)?;
        }
        self.arrive(first);
        let mut current = first;
        while current != self.tree.goal_index() {
            let next = self
                .tree
                .successor(current)
                .ok_or_else(|| EpisodeError::Unreachable(Point(self.state.clone())))?;
            for m in direct_go_to(self.tree.corner(current), self.tree.corner(next)) {
                self.run_macro(&m)?;
            }
            self.arrive(next);
            current = next;
        }
        Ok(EpisodeSummary {
            total_cost: self.cost,
            tree_node_visits: visits,
            first_waypoint: Some(first),
        })
    }
}

fn check_start(maze: &Maze, s0: &Point) -> Result<(), EpisodeError> {
    if s0.dimension() != maze.dimension() {
        return Err(EpisodeError::Dimension {
            expected: maze.dimension(),
            found: s0.dimension(),
        });
    }
    if maze.in_obstacle(s0) {
        return Err(EpisodeError::StartInObstacle(s0.clone()));
    }
    Ok(())
}

fn execute(
    maze: &Maze,
    tree: &PolicyTree,
    s0: &Point,
    max_steps: u64,
    noise: Option<NoiseConfig>,
    trace: Option<&mut Trace>,
) -> Result<EpisodeSummary, EpisodeError> {
    check_start(maze, s0)?;
    let mut ex = Executor {
        maze,
        tree,
        max_steps,
        noise: noise.map(|n| (n.alpha, ChaCha8Rng::seed_from_u64(n.seed))),
        trace,
        state: s0.0.clone(),
        cost: 0,
    };
    ex.run()
}

fn empty_trace(s0: &Point) -> Trace {
    Trace {
        states: vec![s0.clone()],
        actions: vec![],
        total_cost: 0,
        tree_node_visits: 0,
        corner_waypoints: vec![],
    }
}

/// Runs the compiled policy from `s0` to the goal, validating every step.
pub fn run_episode(
    maze: &Maze,
    tree: &PolicyTree,
    s0: &Point,
    max_steps: u64,
) -> Result<Trace, EpisodeError> {
    let mut trace = empty_trace(s0);
    let summary = execute(maze, tree, s0, max_steps, None, Some(&mut trace))?;
    trace.total_cost = summary.total_cost;
    Ok(trace)
}

/// As [`run_episode`] without recording states.
pub fn episode_cost(
    maze: &Maze,
    tree: &PolicyTree,
    s0: &Point,
    max_steps: u64,
) -> Result<EpisodeSummary, EpisodeError> {
    execute(maze, tree, s0, max_steps, None, None)
}

/// Same decisions as [`run_episode`]; each attempted primitive step stays
/// in place with probability `alpha`. Stalls cost one like any step.
///
/// The stall draws come from ChaCha8 seeded with `seed` through
/// `SeedableRng::seed_from_u64`, one `gen_range(0..den) < num` draw per
/// attempted step, so traces are reproducible bit for bit.
pub fn run_noisy_episode(
    maze: &Maze,
    tree: &PolicyTree,
    s0: &Point,
    noise: NoiseConfig,
    max_steps: u64,
) -> Result<Trace, EpisodeError> {
    let mut trace = empty_trace(s0);
    let summary = execute(maze, tree, s0, max_steps, Some(noise), Some(&mut trace))?;
    trace.total_cost = summary.total_cost;
    Ok(trace)
}

pub fn noisy_episode_cost(
    maze: &Maze,
    tree: &PolicyTree,
    s0: &Point,
    noise: NoiseConfig,
    max_steps: u64,
) -> Result<EpisodeSummary, EpisodeError> {
    execute(maze, tree, s0, max_steps, Some(noise), None)
}

/// Executes `macros` from `s` on the deterministic maze. Returns the final
/// state and the number of primitive steps, or the first blocked move.
pub fn apply_macros(
    maze: &Maze,
    s: &Point,
    macros: &[MacroAction],
) -> Result<(Point, u64), EpisodeError> {
    let mut state = s.0.clone();
    let mut steps = 0;
    for m in macros {
        while state[m.feature] != m.stop {
            if !maze.step_in_place(&mut state, m.action()) {
                return Err(EpisodeError::Blocked {
                    state: Point(state),
                    action: m.action(),
                });
            }
            steps += 1;
        }
    }
    Ok((Point(state), steps))
}
