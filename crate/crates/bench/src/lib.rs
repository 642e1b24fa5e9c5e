//! Shared fixtures for the criterion benches.

use mazetree::io::{generate_maze, GeneratorConfig};
use mazetree::Maze;

/// Seeded maze with coordinates in [-100, 100].
pub fn bench_maze(dimension: usize, k: usize) -> Maze {
    let cfg = GeneratorConfig {
        seed: 7,
        dimension,
        k,
        lo: -100,
        hi: 100,
        max_extent: 30,
    };
    generate_maze(&cfg).expect("bench mazes generate")
}
