use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mazetree::oracle::{bfs_values, bounding_box};
use mazetree::runtime::{default_max_steps, episode_cost};
use mazetree::{compile, BuildOptions, Point};
use mazetree_bench::bench_maze;

/// Episode from the farthest reachable in-box state.
fn episodes(c: &mut Criterion) {
    let mut group = c.benchmark_group("episode");
    for (d, k) in [(2, 4), (2, 50), (3, 8)] {
        let maze = bench_maze(d, k);
        let tree = compile(&maze, &[], &BuildOptions::default()).unwrap().tree;
        let field = bfs_values(&maze, &bounding_box(&maze, &[], 1).unwrap());
        let (start, _) = field
            .free_states()
            .filter_map(|(p, v)| v.finite().map(|v| (p, v)))
            .max_by_key(|&(_, v)| v)
            .expect("some reachable state");
        let budget = default_max_steps(&maze, &start);
        group.bench_with_input(
            BenchmarkId::new(format!("d{d}"), k),
            &start,
            |b, s: &Point| b.iter(|| episode_cost(&maze, &tree, s, budget).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, episodes);
criterion_main!(benches);
