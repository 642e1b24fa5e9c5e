use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maze::{Maze, Obstacle, Point};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub dimension: usize,
    pub k: usize,
    /// Inclusive coordinate range for obstacle corners and the goal.
    pub lo: i64,
    pub hi: i64,
    /// Largest `b_i - a_i`.
    pub max_extent: i64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("dimension must be at least 1")]
    Dimension,
    #[error("coordinate range [{lo}, {hi}] must contain at least two values")]
    Range { lo: i64, hi: i64 },
    #[error("max extent must be at least 1")]
    Extent,
    #[error("no free goal position found after {0} attempts")]
    GoalPlacement(usize),
}

const GOAL_ATTEMPTS: usize = 10_000;

/// Samples `k` obstacles (overlaps allowed) and a goal in free space.
/// Deterministic in `config`.
pub fn generate_maze(config: &GeneratorConfig) -> Result<Maze, GenerateError> {
    let GeneratorConfig {
        seed,
        dimension,
        k,
        lo,
        hi,
        max_extent,
    } = *config;
    if dimension == 0 {
        return Err(GenerateError::Dimension);
    }
    if lo >= hi {
        return Err(GenerateError::Range { lo, hi });
    }
    if max_extent < 1 {
        return Err(GenerateError::Extent);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obstacles: Vec<Obstacle> = (0..k)
        .map(|_| {
            let (a, b): (Vec<i64>, Vec<i64>) = (0..dimension)
                .map(|_| {
                    let a = rng.gen_range(lo..hi);
                    let extent = rng.gen_range(1..=max_extent.min(hi - a));
                    (a, a + extent)
                })
                .unzip();
            Obstacle::new(a, b)
        })
        .collect();
    for _ in 0..GOAL_ATTEMPTS {
        let goal = Point((0..dimension).map(|_| rng.gen_range(lo..=hi)).collect());
        if !obstacles.iter().any(|o| o.contains(&goal)) {
            return Ok(Maze::new(dimension, goal, obstacles).expect("generated mazes are valid"));
        }
    }
    Err(GenerateError::GoalPlacement(GOAL_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64, dimension: usize, k: usize) -> GeneratorConfig {
        GeneratorConfig {
            seed,
            dimension,
            k,
            lo: -10,
            hi: 10,
            max_extent: 8,
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_maze(&cfg(1, 2, 3)), generate_maze(&cfg(1, 2, 3)));
        assert_ne!(generate_maze(&cfg(1, 2, 3)), generate_maze(&cfg(2, 2, 3)));
    }

    #[test]
    fn zero_obstacles() {
        let m = generate_maze(&cfg(5, 3, 0)).unwrap();
        assert!(m.obstacles().is_empty());
    }

    #[test]
    fn unit_extents_are_legal() {
        let m = generate_maze(&GeneratorConfig {
            max_extent: 1,
            ..cfg(9, 2, 6)
        })
        .unwrap();
        for o in m.obstacles() {
            assert!(o.a.iter().zip(o.b.iter()).all(|(a, b)| b - a == 1));
        }
    }

    #[test]
    fn invalid_configs() {
        assert_eq!(generate_maze(&cfg(0, 0, 1)), Err(GenerateError::Dimension));
        assert_eq!(
            generate_maze(&GeneratorConfig {
                lo: 3,
                hi: 3,
                ..cfg(0, 2, 1)
            }),
            Err(GenerateError::Range { lo: 3, hi: 3 })
        );
        assert_eq!(
            generate_maze(&GeneratorConfig {
                max_extent: 0,
                ..cfg(0, 2, 1)
            }),
            Err(GenerateError::Extent)
        );
    }

    #[test]
    fn generated_mazes_validate() {
        for seed in 0..200 {
            let m = generate_maze(&cfg(seed, 1 + seed as usize % 3, seed as usize % 7)).unwrap();
            assert!(m.validate().is_ok());
            assert!(m.obstacles().iter().all(|o| o
                .a
                .iter()
                .chain(o.b.iter())
                .all(|v| (-10..=10).contains(v))));
        }
    }
}
