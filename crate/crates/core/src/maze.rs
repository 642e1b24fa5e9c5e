//! The maze MDP: integer lattice states, `2d` unit moves, open box obstacles
//! and one absorbing goal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MazeError;

/// A lattice point in `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<i64>);

impl Point {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Point(coords.into())
    }

    pub fn origin(dimension: usize) -> Self {
        Point(vec![0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Manhattan distance.
    pub fn manhattan(&self, other: &Point) -> u64 {
        manhattan(&self.0, &other.0)
    }
}

pub(crate) fn manhattan(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum()
}

impl std::ops::Deref for Point {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for Point {
    fn from(v: Vec<i64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[i64; N]> for Point {
    fn from(v: [i64; N]) -> Self {
        Point(v.to_vec())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Open hyperrectangle `{x : a_i < x_i < b_i for all i}`. Its boundary is
/// free space.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Obstacle {
    pub a: Point,
    pub b: Point,
}

impl Obstacle {
    pub fn new(a: impl Into<Point>, b: impl Into<Point>) -> Self {
        Obstacle {
            a: a.into(),
            b: b.into(),
        }
    }

    /// Strict-interior membership.
    #[inline]
    pub fn contains(&self, p: &[i64]) -> bool {
        self.a
            .iter()
            .zip(self.b.iter())
            .zip(p)
            .all(|((lo, hi), x)| lo < x && x < hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "+1")]
    Plus,
}

impl Direction {
    pub fn delta(self) -> i64 {
        match self {
            Direction::Minus => -1,
            Direction::Plus => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Minus => Direction::Plus,
            Direction::Plus => Direction::Minus,
        }
    }

    pub fn towards(from: i64, to: i64) -> Option<Self> {
        match from.cmp(&to) {
            std::cmp::Ordering::Less => Some(Direction::Plus),
            std::cmp::Ordering::Greater => Some(Direction::Minus),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// A primitive move. `feature` is zero-based; external formats print it
/// one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub feature: usize,
    pub direction: Direction,
}

impl Action {
    pub fn new(feature: usize, direction: Direction) -> Self {
        Action { feature, direction }
    }

    pub fn flipped(self) -> Self {
        Action {
            feature: self.feature,
            direction: self.direction.flipped(),
        }
    }

    /// All `2d` actions in a fixed order: feature-major, minus before plus.
    pub fn all(dimension: usize) -> impl Iterator<Item = Action> {
        (0..dimension).flat_map(|i| {
            [Direction::Minus, Direction::Plus]
                .into_iter()
                .map(move |d| Action::new(i, d))
        })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.direction {
            Direction::Minus => '-',
            Direction::Plus => '+',
        };
        write!(f, "({},{}1)", self.feature + 1, sign)
    }
}

/// A reason a maze fails validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ZeroDimension,
    GoalDimension {
        found: usize,
    },
    ObstacleDimension {
        obstacle: usize,
    },
    /// `a_i >= b_i`; `feature` is zero-based.
    EmptyObstacle {
        obstacle: usize,
        feature: usize,
    },
    GoalInsideObstacle {
        obstacle: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDimension => write!(f, "dimension must be at least 1"),
            Violation::GoalDimension { found } => write!(f, "goal has {found} coordinates"),
            Violation::ObstacleDimension { obstacle } => {
                write!(f, "obstacle {obstacle}: length mismatch")
            }
            Violation::EmptyObstacle { obstacle, feature } => {
                write!(
                    f,
                    "obstacle {obstacle}: empty obstacle, feature {}",
                    feature + 1
                )
            }
            Violation::GoalInsideObstacle { obstacle } => {
                write!(f, "goal inside obstacle {obstacle}")
            }
        }
    }
}

/// A `(k,d)`-maze. Immutable once constructed through [`Maze::new`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Maze {
    dimension: usize,
    goal: Point,
    obstacles: Vec<Obstacle>,
}

impl Maze {
    /// Builds and validates a maze.
    pub fn new(
        dimension: usize,
        goal: impl Into<Point>,
        obstacles: Vec<Obstacle>,
    ) -> Result<Self, MazeError> {
        let maze = Maze::new_unchecked(dimension, goal, obstacles);
        maze.validate().map_err(MazeError::Invalid)?;
        Ok(maze)
    }

    /// Builds a maze without validation. Everything downstream assumes a
    /// maze that passes [`Maze::validate`].
    pub fn new_unchecked(
        dimension: usize,
        goal: impl Into<Point>,
        obstacles: Vec<Obstacle>,
    ) -> Self {
        Maze {
            dimension,
            goal: goal.into(),
            obstacles,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn goal(&self) -> &Point {
        &self.goal
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    /// Reports every violation, each tagged with the offending index.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let d = self.dimension;
        if d == 0 {
            out.push(Violation::ZeroDimension);
        }
        if self.goal.dimension() != d {
            out.push(Violation::GoalDimension {
                found: self.goal.dimension(),
            });
        }
        for (j, ob) in self.obstacles.iter().enumerate() {
            if ob.a.dimension() != d || ob.b.dimension() != d {
                out.push(Violation::ObstacleDimension { obstacle: j });
                continue;
            }
            for i in 0..d {
                if ob.a[i] >= ob.b[i] {
                    out.push(Violation::EmptyObstacle {
                        obstacle: j,
                        feature: i,
                    });
                }
            }
        }
        if out.is_empty() {
            for (j, ob) in self.obstacles.iter().enumerate() {
                if ob.contains(&self.goal) {
                    out.push(Violation::GoalInsideObstacle { obstacle: j });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    fn check_dim(&self, p: &[i64]) -> Result<(), MazeError> {
        if p.len() == self.dimension {
            Ok(())
        } else {
            Err(MazeError::DimensionMismatch {
                expected: self.dimension,
                found: p.len(),
            })
        }
    }

    /// True iff `p` lies strictly inside some obstacle.
    pub fn contains_obstacle(&self, p: &Point) -> Result<bool, MazeError> {
        self.check_dim(p)?;
        Ok(self.in_obstacle(p))
    }

    /// Unchecked variant of [`Maze::contains_obstacle`].
    #[inline]
    pub fn in_obstacle(&self, p: &[i64]) -> bool {
        debug_assert_eq!(p.len(), self.dimension);
        self.obstacles.iter().any(|ob| ob.contains(p))
    }

    pub fn is_goal(&self, p: &[i64]) -> bool {
        p == &self.goal[..]
    }

    pub fn transition(&self, s: &Point, a: Action) -> Result<Point, MazeError> {
        self.check_dim(s)?;
        if a.feature >= self.dimension {
            return Err(MazeError::FeatureOutOfRange {
                feature: a.feature,
                dimension: self.dimension,
            });
        }
        let mut next = s.clone();
        self.step_in_place(&mut next.0, a);
        Ok(next)
    }

    /// Applies `a` to `s` in place. Returns false when the move was blocked
    /// (by an obstacle or because `s` is the goal) and `s` is unchanged.
    #[inline]
    pub fn step_in_place(&self, s: &mut [i64], a: Action) -> bool {
        if self.is_goal(s) {
            return false;
        }
        s[a.feature] += a.direction.delta();
        if self.in_obstacle(s) {
            s[a.feature] -= a.direction.delta();
            false
        } else {
            true
        }
    }

    /// Unit cost everywhere except the goal.
    pub fn step_cost(&self, s: &Point) -> u64 {
        u64::from(!self.is_goal(s))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Goal at the origin, obstacles `R_{(3,-1),(6,1)}` and `R_{(1,3),(3,6)}`.
    pub fn two_boxes() -> Maze {
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
}

#[cfg(test)]
mod tests {
    use super::fixtures::two_boxes;
    use super::*;
    use proptest::prelude::*;

    fn act(feature: usize, delta: i64) -> Action {
        Action::new(
            feature,
            if delta > 0 {
                Direction::Plus
            } else {
                Direction::Minus
            },
        )
    }

    #[test]
    fn obstacle_membership_is_strict() {
        let m = two_boxes();
        assert!(m.contains_obstacle(&Point::from([4, 0])).unwrap());
        assert!(!m.contains_obstacle(&Point::from([3, 0])).unwrap());
        assert!(!m.contains_obstacle(&Point::from([0, 0])).unwrap());
        assert!(matches!(
            m.contains_obstacle(&Point::from([1, 2, 3])),
            Err(MazeError::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn transitions() {
        let m = two_boxes();
        assert_eq!(
            m.transition(&Point::from([0, 0]), act(0, 1)).unwrap(),
            Point::from([0, 0])
        );
        assert_eq!(
            m.transition(&Point::from([2, 0]), act(0, 1)).unwrap(),
            Point::from([3, 0])
        );
        assert_eq!(
            m.transition(&Point::from([3, 0]), act(0, 1)).unwrap(),
            Point::from([3, 0])
        );
        assert!(m.transition(&Point::from([3, 0]), act(2, 1)).is_err());
    }

    #[test]
    fn costs() {
        let m = two_boxes();
        assert_eq!(m.step_cost(&Point::from([0, 0])), 0);
        assert_eq!(m.step_cost(&Point::from([7, 0])), 1);
        assert_eq!(m.step_cost(&Point::from([4, 0])), 1);
    }

    #[test]
    fn validation() {
        assert!(two_boxes().validate().is_ok());
        let bad = Maze::new_unchecked(2, [9, 9], vec![Obstacle::new([0, 0], [0, 5])]);
        let v = bad.validate().unwrap_err();
        assert_eq!(
            v,
            vec![Violation::EmptyObstacle {
                obstacle: 0,
                feature: 0
            }]
        );
        assert_eq!(v[0].to_string(), "obstacle 0: empty obstacle, feature 1");

        let inside = Maze::new_unchecked(2, [4, 0], two_boxes().obstacles().to_vec());
        let v = inside.validate().unwrap_err();
        assert_eq!(v, vec![Violation::GoalInsideObstacle { obstacle: 0 }]);

        let zero = Maze::new_unchecked(0, Vec::<i64>::new(), vec![]);
        assert!(zero
            .validate()
            .unwrap_err()
            .contains(&Violation::ZeroDimension));

        let mismatch = Maze::new_unchecked(2, [0, 0], vec![Obstacle::new([3], [6, 1])]);
        assert_eq!(
            mismatch.validate().unwrap_err(),
            vec![Violation::ObstacleDimension { obstacle: 0 }]
        );
    }

    #[test]
    fn overlapping_obstacles_are_a_union() {
        let m = Maze::new(
            2,
            [0, 0],
            vec![Obstacle::new([1, 1], [5, 5]), Obstacle::new([3, 3], [8, 8])],
        )
        .unwrap();
        assert!(m.in_obstacle(&[2, 2]));
        assert!(m.in_obstacle(&[6, 6]));
        assert!(m.in_obstacle(&[4, 4]));
        assert!(!m.in_obstacle(&[5, 2]));
    }

    fn small_maze() -> impl Strategy<Value = Maze> {
        let ob = (-4i64..4, -4i64..4, 1i64..5, 1i64..5)
            .prop_map(|(x, y, w, h)| Obstacle::new([x, y], [x + w, y + h]));
        (proptest::collection::vec(ob, 0..4), -5i64..5, -5i64..5)
            .prop_filter_map("goal in obstacle", |(obs, gx, gy)| {
                Maze::new(2, [gx, gy], obs).ok()
            })
    }

    proptest! {
        #[test]
        fn move_laws(m in small_maze(), x in -6i64..6, y in -6i64..6, f in 0usize..2, up in any::<bool>()) {
            let s = Point::from([x, y]);
            prop_assume!(!m.in_obstacle(&s));
            let a = act(f, if up { 1 } else { -1 });
            let t = m.transition(&s, a).unwrap();
            prop_assert!(!m.in_obstacle(&t));
            if t == s {
                prop_assert_eq!(m.transition(&t, a).unwrap(), s.clone());
            } else if !m.is_goal(&t) {
                // the goal is absorbing, so a move into it cannot be undone
                prop_assert_eq!(m.transition(&t, a.flipped()).unwrap(), s.clone());
            }
            let union = m.obstacles().iter().any(|o| o.contains(&s));
            prop_assert_eq!(m.contains_obstacle(&s).unwrap(), union);
        }
    }
}
