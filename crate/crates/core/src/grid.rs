//! Coordinate compression of a maze: the per-feature coordinate lists, the
//! corner lattice they span, surfaces of arbitrary points and corner
//! adjacency.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MazeError;
use crate::maze::{Maze, Point};

/// An integer extended by the two infinite sentinels. Only comparisons are
/// ever performed on the sentinels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedCoord {
    NegInf,
    Finite(i64),
    PosInf,
}

impl ExtendedCoord {
    pub fn finite(self) -> Option<i64> {
        match self {
            ExtendedCoord::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for ExtendedCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedCoord::NegInf => f.write_str("-inf"),
            ExtendedCoord::Finite(v) => write!(f, "{v}"),
            ExtendedCoord::PosInf => f.write_str("+inf"),
        }
    }
}

/// Sorted, deduplicated finite coordinates of one feature. The `±inf`
/// sentinels are implicit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordinateList {
    values: Vec<i64>,
}

impl CoordinateList {
    pub fn from_values(mut values: Vec<i64>) -> Self {
        values.sort_unstable();
        values.dedup();
        CoordinateList { values }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, v: i64) -> Option<usize> {
        self.values.binary_search(&v).ok()
    }

    /// The segment of the sentinel-extended list containing `x`.
    pub fn segment_of(&self, x: i64) -> Segment {
        match self.values.binary_search(&x) {
            Ok(_) => Segment::Singleton(x),
            Err(pos) => {
                let lo = if pos == 0 {
                    ExtendedCoord::NegInf
                } else {
                    ExtendedCoord::Finite(self.values[pos - 1])
                };
                let hi = self
                    .values
                    .get(pos)
                    .map_or(ExtendedCoord::PosInf, |&v| ExtendedCoord::Finite(v));
                Segment::Open(lo, hi)
            }
        }
    }

    /// Finite values strictly between `lo` and `hi`.
    pub fn strictly_between(&self, lo: ExtendedCoord, hi: ExtendedCoord) -> &[i64] {
        let start = match lo {
            ExtendedCoord::NegInf => 0,
            ExtendedCoord::Finite(v) => self.values.partition_point(|&x| x <= v),
            ExtendedCoord::PosInf => self.values.len(),
        };
        let end = match hi {
            ExtendedCoord::NegInf => 0,
            ExtendedCoord::Finite(v) => self.values.partition_point(|&x| x < v),
            ExtendedCoord::PosInf => self.values.len(),
        };
        if start >= end {
            &[]
        } else {
            &self.values[start..end]
        }
    }
}

/// Per-feature lists from obstacle coordinates, the goal, and any anchors.
pub fn build_lists(maze: &Maze, anchors: &[Point]) -> Vec<CoordinateList> {
    (0..maze.dimension())
        .map(|i| {
            let mut vals = Vec::with_capacity(2 * maze.obstacles().len() + 1 + anchors.len());
            vals.push(maze.goal()[i]);
            for ob in maze.obstacles() {
                vals.push(ob.a[i]);
                vals.push(ob.b[i]);
            }
            vals.extend(anchors.iter().map(|p| p[i]));
            CoordinateList::from_values(vals)
        })
        .collect()
}

/// One feature of a surface (or cell).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Singleton(i64),
    /// Open interval between consecutive entries of the extended list.
    Open(ExtendedCoord, ExtendedCoord),
}

impl Segment {
    pub fn contains(&self, x: i64) -> bool {
        match *self {
            Segment::Singleton(v) => x == v,
            Segment::Open(lo, hi) => lo < ExtendedCoord::Finite(x) && ExtendedCoord::Finite(x) < hi,
        }
    }

    /// Closed-segment membership: the endpoints count.
    pub fn closure_contains(&self, x: i64) -> bool {
        match *self {
            Segment::Singleton(v) => x == v,
            Segment::Open(lo, hi) => {
                lo <= ExtendedCoord::Finite(x) && ExtendedCoord::Finite(x) <= hi
            }
        }
    }

    fn candidates(&self) -> impl Iterator<Item = i64> {
        let (a, b) = match *self {
            Segment::Singleton(v) => (Some(v), None),
            Segment::Open(lo, hi) => (lo.finite(), hi.finite()),
        };
        a.into_iter().chain(b)
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Singleton(v) => write!(f, "{{{v}}}"),
            Segment::Open(lo, hi) => write!(f, "({lo},{hi})"),
        }
    }
}

/// Product of per-feature segments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Surface {
    pub segments: Vec<Segment>,
}

/// Decision-tree leaf regions share the shape of a surface.
pub type Cell = Surface;

impl Surface {
    pub fn dimension(&self) -> usize {
        self.segments.len()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.segments.iter().zip(x).all(|(s, &v)| s.contains(v))
    }

    pub fn closure_contains(&self, x: &[i64]) -> bool {
        self.segments
            .iter()
            .zip(x)
            .all(|(s, &v)| s.closure_contains(v))
    }

    pub fn is_corner(&self) -> bool {
        self.segments
            .iter()
            .all(|s| matches!(s, Segment::Singleton(_)))
    }

    /// Finite corners of the surface in lexicographic order: between 1 and
    /// `2^d` points.
    pub fn finite_corners(&self) -> Vec<Point> {
        let mut out: Vec<Vec<i64>> = vec![Vec::with_capacity(self.dimension())];
        for seg in &self.segments {
            let cands: Vec<i64> = seg.candidates().collect();
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    cands.iter().map(move |&c| {
                        let mut p = prefix.clone();
                        p.push(c);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(Point).collect()
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// The surface of `x`.
pub fn surface(lists: &[CoordinateList], x: &[i64]) -> Surface {
    debug_assert_eq!(lists.len(), x.len());
    Surface {
        segments: lists.iter().zip(x).map(|(l, &v)| l.segment_of(v)).collect(),
    }
}

/// Valid (obstacle-free) finite corners, indexed in lexicographic order.
#[derive(Clone, Debug)]
pub struct CornerGrid {
    lists: Vec<CoordinateList>,
    corners: Vec<Point>,
    /// Mixed-radix lookup from list positions to corner index.
    lookup: Vec<Option<u32>>,
    strides: Vec<usize>,
    goal_index: usize,
    excluded: usize,
}

impl CornerGrid {
    pub fn lists(&self) -> &[CoordinateList] {
        &self.lists
    }

    pub fn dimension(&self) -> usize {
        self.lists.len()
    }

    pub fn corners(&self) -> &[Point] {
        &self.corners
    }

    pub fn corner(&self, index: usize) -> &Point {
        &self.corners[index]
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn goal_index(&self) -> usize {
        self.goal_index
    }

    /// Product of the finite list lengths.
    pub fn total_finite(&self) -> usize {
        self.lookup.len()
    }

    /// Product of the list lengths with both sentinels counted.
    pub fn total_with_sentinels(&self) -> u128 {
        self.lists.iter().map(|l| l.len() as u128 + 2).product()
    }

    /// Finite corners dropped because they lie inside an obstacle.
    pub fn excluded(&self) -> usize {
        self.excluded
    }

    fn slot(&self, p: &[i64]) -> Option<usize> {
        if p.len() != self.lists.len() {
            return None;
        }
        let mut slot = 0;
        for ((l, &v), &stride) in self.lists.iter().zip(p).zip(&self.strides) {
            slot += l.position(v)? * stride;
        }
        Some(slot)
    }

    /// Index of `p` when it is a valid corner.
    pub fn index_of(&self, p: &[i64]) -> Option<usize> {
        self.slot(p)
            .and_then(|s| self.lookup[s])
            .map(|i| i as usize)
    }

    pub fn surface(&self, x: &[i64]) -> Surface {
        surface(&self.lists, x)
    }

    /// Corners of `c` whose coordinate on one feature is the next list value
    /// up or down, with the feature they differ on. Validity only; blocking
    /// is checked by [`CornerGrid::is_adjacent`].
    pub(crate) fn lattice_neighbours(&self, c: usize) -> Vec<(usize, usize)> {
        let p = &self.corners[c];
        let mut out = Vec::with_capacity(2 * p.len());
        let mut q = p.0.clone();
        for (i, l) in self.lists.iter().enumerate() {
            let pos = l.position(p[i]).expect("corner coordinate in list");
            let around = [pos.checked_sub(1), Some(pos + 1).filter(|&n| n < l.len())];
            for n in around.into_iter().flatten() {
                q[i] = l.values()[n];
                if let Some(j) = self.index_of(&q) {
                    out.push((j, i));
                }
            }
            q[i] = p[i];
        }
        out
    }

    /// True iff the valid corners `c1` and `c2` differ on exactly one
    /// feature, by consecutive list values, with no obstacle-interior
    /// integer point strictly between them.
    pub fn is_adjacent(&self, maze: &Maze, c1: &Point, c2: &Point) -> Result<bool, MazeError> {
        for c in [c1, c2] {
            if maze.contains_obstacle(c)? {
                return Err(MazeError::InsideObstacle(c.clone()));
            }
        }
        let mut differing = (0..c1.len()).filter(|&i| c1[i] != c2[i]);
        let (Some(i), None) = (differing.next(), differing.next()) else {
            return Ok(false);
        };
        let l = &self.lists[i];
        let (Some(p1), Some(p2)) = (l.position(c1[i]), l.position(c2[i])) else {
            return Ok(false);
        };
        if p1.abs_diff(p2) != 1 {
            return Ok(false);
        }
        Ok(!segment_blocked(maze, c1, i, c2[i]))
    }
}

/// Whether some obstacle interior contains an integer point on the open
/// segment from `from` to `from` with feature `i` replaced by `to_i`.
/// Interval test per obstacle, no enumeration.
pub(crate) fn segment_blocked(maze: &Maze, from: &[i64], i: usize, to_i: i64) -> bool {
    let (m1, m2) = (from[i].min(to_i), from[i].max(to_i));
    maze.obstacles().iter().any(|ob| {
        let others = (0..from.len())
            .filter(|&j| j != i)
            .all(|j| ob.a[j] < from[j] && from[j] < ob.b[j]);
        if !others {
            return false;
        }
        let lo = ob.a[i].max(m1);
        let hi = ob.b[i].min(m2);
        // some integer x with lo < x < hi
        hi.checked_sub(lo).is_some_and(|gap| gap >= 2)
    })
}

/// Enumerates the finite corners of `lists` that lie outside every
/// obstacle.
pub fn enumerate_valid_corners(maze: &Maze, lists: Vec<CoordinateList>) -> CornerGrid {
    let d = lists.len();
    let mut strides = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * lists[i + 1].len();
    }
    let total: usize = lists.iter().map(CoordinateList::len).product();
    let mut lookup = vec![None; total];
    let mut corners = Vec::new();
    let mut excluded = 0;
    let mut digits = vec![0usize; d];
    let mut p = vec![0i64; d];
    // slot order with feature 0 most significant is lexicographic order
    for (slot, entry) in lookup.iter_mut().enumerate() {
        let mut rem = slot;
        for i in 0..d {
            digits[i] = rem / strides[i];
            rem %= strides[i];
            p[i] = lists[i].values()[digits[i]];
        }
        if maze.in_obstacle(&p) {
            excluded += 1;
        } else {
            *entry = Some(u32::try_from(corners.len()).expect("corner count fits u32"));
            corners.push(Point(p.clone()));
        }
    }
    let mut grid = CornerGrid {
        lists,
        corners,
        lookup,
        strides,
        goal_index: 0,
        excluded,
    };
    grid.goal_index = grid.index_of(maze.goal()).expect("goal is a valid corner");
    grid
}
