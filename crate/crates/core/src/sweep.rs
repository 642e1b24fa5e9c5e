//! Maze-family sweeps producing one CSV row per `(seed, d, k)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::io::{generate_maze, GenerateError, GeneratorConfig};
use crate::maze::Point;
use crate::oracle::{bfs_values, bounding_box};
use crate::runtime::{default_max_steps, episode_cost};
use crate::{compile, BuildOptions};

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub seeds: Vec<u64>,
    pub dimensions: Vec<usize>,
    pub ks: Vec<usize>,
    pub lo: i64,
    pub hi: i64,
    pub max_extent: i64,
    pub options: BuildOptions,
    /// Fill the timing columns. Without timing the output is a pure
    /// function of the config.
    pub timing: bool,
    /// Start states sampled per maze for the step-time column.
    pub episodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub d: usize,
    pub k: usize,
    pub valid_corners: usize,
    pub finite_corners: usize,
    pub corners_with_sentinels: u128,
    pub excluded_corners: usize,
    pub tree_nodes: usize,
    pub leaves: usize,
    pub grid_depth: usize,
    pub direction_depth: usize,
    pub total_depth: usize,
    pub grid_depth_bound: usize,
    pub direction_depth_bound: usize,
    pub compile_us: Option<u128>,
    pub mean_step_ns: Option<f64>,
}

pub fn sweep_row(
    config: &SweepConfig,
    seed: u64,
    d: usize,
    k: usize,
) -> Result<SweepRow, GenerateError> {
    let gen = GeneratorConfig {
        seed,
        dimension: d,
        k,
        lo: config.lo,
        hi: config.hi,
        max_extent: config.max_extent,
    };
    let maze = generate_maze(&gen)?;
    let started = Instant::now();
    let c = compile(&maze, &[], &config.options).expect("generated mazes compile");
    let compile_us = started.elapsed().as_micros();
    let depth = c.tree.depth();

    let mean_step_ns = config.timing.then(|| {
        let bbox = bounding_box(&maze, &[], 1).expect("padding 1 is valid");
        let field = bfs_values(&maze, &bbox);
        let starts: Vec<Point> = field
            .free_states()
            .filter(|(_, v)| v.is_finite())
            .map(|(p, _)| p)
            .collect();
        let stride = (starts.len() / config.episodes.max(1)).max(1);
        let (mut steps, mut elapsed) = (0u64, 0u128);
        for s in starts.iter().step_by(stride) {
            let budget = default_max_steps(&maze, s);
            let t = Instant::now();
            let sum = episode_cost(&maze, &c.tree, s, budget).expect("reachable start");
            elapsed += t.elapsed().as_nanos();
            steps += sum.total_cost;
        }
        if steps == 0 {
            0.0
        } else {
            elapsed as f64 / steps as f64
        }
    });

    Ok(SweepRow {
        seed,
        d,
        k,
        valid_corners: c.grid.len(),
        finite_corners: c.grid.total_finite(),
        corners_with_sentinels: c.grid.total_with_sentinels(),
        excluded_corners: c.grid.excluded(),
        tree_nodes: c.tree.nodes().len(),
        leaves: c.tree.leaves().count(),
        grid_depth: depth.grid,
        direction_depth: depth.direction,
        total_depth: depth.total,
        grid_depth_bound: c.tree.grid_depth_bound(),
        direction_depth_bound: c.tree.direction_depth_bound(),
        compile_us: config.timing.then_some(compile_us),
        mean_step_ns,
    })
}

/// All rows in `(seed, d, k)` order. Timed sweeps run sequentially so the
/// measurements do not compete for cores.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, GenerateError> {
    let jobs: Vec<(u64, usize, usize)> = config
        .seeds
        .iter()
        .flat_map(|&s| {
            config
                .dimensions
                .iter()
                .flat_map(move |&d| config.ks.iter().map(move |&k| (s, d, k)))
        })
        .collect();
    if config.timing {
        jobs.iter()
            .map(|&(s, d, k)| sweep_row(config, s, d, k))
            .collect()
    } else {
        jobs.par_iter()
            .map(|&(s, d, k)| sweep_row(config, s, d, k))
            .collect()
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialise");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(timing: bool) -> SweepConfig {
        SweepConfig {
            seeds: vec![1, 2],
            dimensions: vec![1, 2],
            ks: vec![0, 3],
            lo: -10,
            hi: 10,
            max_extent: 6,
            options: BuildOptions::default(),
            timing,
            episodes: 5,
        }
    }

    #[test]
    fn untimed_sweep_is_reproducible() {
        let a = rows_to_csv(&sweep(&config(false)).unwrap());
        let b = rows_to_csv(&sweep(&config(false)).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 8);
        assert!(a.starts_with("seed,d,k,valid_corners,"));
    }

    #[test]
    fn timed_rows_have_timings() {
        let rows = sweep(&SweepConfig {
            seeds: vec![3],
            ..config(true)
        })
        .unwrap();
        assert!(rows
            .iter()
            .all(|r| r.compile_us.is_some() && r.mean_step_ns.is_some()));
        assert!(rows.iter().all(|r| r.grid_depth <= r.grid_depth_bound));
    }
}
