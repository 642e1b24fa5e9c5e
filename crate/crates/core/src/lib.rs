//! Compile axis-aligned obstacle mazes into optimal decision-tree policies.
//!
//! The pipeline: [`grid::build_lists`] compresses coordinates,
//! [`grid::enumerate_valid_corners`] and [`corner_mdp::CornerMdp`] give a
//! small shortest-path problem on corners, and [`tree::build_policy_tree`]
//! turns its solution into a tree that [`runtime`] executes. [`oracle`]
//! supplies brute-force ground truth on a finite window.

pub mod corner_mdp;
pub mod error;
pub mod grid;
pub mod io;
pub mod maze;
pub mod oracle;
pub mod runtime;
pub mod sweep;
pub mod tree;
pub mod verify;

pub use corner_mdp::{CornerMdp, CornerMdpSolution, Cost};
pub use error::MazeError;
pub use grid::{
    build_lists, enumerate_valid_corners, Cell, CoordinateList, CornerGrid, ExtendedCoord, Segment,
    Surface,
};
pub use maze::{Action, Direction, Maze, Obstacle, Point, Violation};
pub use oracle::{bfs_values, bounding_box, noisy_values, OracleBox, ValueField};
pub use runtime::{run_episode, Alpha, MacroAction, Trace};
pub use tree::{build_policy_tree, BuildOptions, LeafAction, PolicyTree};

/// All intermediate products of a compilation.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub grid: CornerGrid,
    pub mdp: CornerMdp,
    pub solution: CornerMdpSolution,
    pub tree: PolicyTree,
}

/// Builds lists (with `anchors`), corners, the corner MDP, its solution and
/// the policy tree.
pub fn compile(
    maze: &Maze,
    anchors: &[Point],
    options: &BuildOptions,
) -> Result<Compiled, MazeError> {
    if let Some(p) = anchors.iter().find(|p| p.dimension() != maze.dimension()) {
        return Err(MazeError::DimensionMismatch {
            expected: maze.dimension(),
            found: p.dimension(),
        });
    }
    let grid = enumerate_valid_corners(maze, build_lists(maze, anchors));
    let mdp = CornerMdp::build(maze, &grid);
    let solution = mdp.solve();
    let tree = build_policy_tree(&grid, &solution, options);
    Ok(Compiled {
        grid,
        mdp,
        solution,
        tree,
    })
}
