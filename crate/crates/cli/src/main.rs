use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mazetree::io::{
    emit_maze, emit_policy, emit_trace, export_dot, export_svg_2d, generate_maze, load_policy,
    parse_maze_document, parse_trace, GeneratorConfig, PolicyDocument,
};
use mazetree::runtime::{
    default_max_steps, default_noisy_max_steps, run_episode, run_noisy_episode, NoiseConfig,
};
use mazetree::sweep::{rows_to_csv, sweep, SweepConfig};
use mazetree::tree::{LeafAction, Node};
use mazetree::verify::{verify, VerifyOptions, VerifyReport};
use mazetree::{compile, Alpha, BuildOptions, Compiled, Maze, Point};

#[derive(Parser)]
#[command(
    name = "mazetree",
    version,
    about = "Compile obstacle mazes into optimal decision-tree policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random maze document.
    Gen(GenArgs),
    /// Compile a maze into a policy document.
    Compile(CompileArgs),
    /// Show the decision a policy makes at one state.
    Eval(EvalArgs),
    /// Run an episode and write its trace.
    Simulate(SimulateArgs),
    /// Check a maze (and optionally a policy) against the brute-force oracle.
    Verify(VerifyArgs),
    /// Draw a policy tree (DOT) or a 2-d maze with a trace (SVG).
    #[command(subcommand)]
    Render(RenderCommand),
    /// Sweep generated mazes and report tree sizes, depths and timings.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, short = 'd', default_value_t = 2)]
    dimension: usize,
    #[arg(long, short = 'k', default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
    lo: i64,
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    hi: i64,
    #[arg(long, default_value_t = 8)]
    max_extent: i64,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    /// Extra coordinate anchors, e.g. "0,0;3,-2". Added to any in the maze file.
    #[arg(long, allow_hyphen_values = true)]
    anchors: Option<String>,
    /// Share identical direction subtrees within a cell.
    #[arg(long)]
    dag_dir_tree: bool,
}

#[derive(Args)]
struct CompileArgs {
    maze: PathBuf,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[command(flatten)]
    build: BuildArgs,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct EvalArgs {
    policy: PathBuf,
    /// Comma-separated coordinates, e.g. "2,-2".
    #[arg(long, allow_hyphen_values = true)]
    state: String,
    /// Reject the policy unless it was built from this maze.
    #[arg(long)]
    maze: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    policy: PathBuf,
    #[arg(long)]
    maze: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    state: String,
    /// Stall probability, "p/q" or decimal.
    #[arg(long)]
    alpha: Option<Alpha>,
    /// Required when --alpha is nonzero.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_steps: Option<u64>,
    /// Trace output (JSON lines).
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Maze document; omit with --random.
    maze: Option<PathBuf>,
    /// Verify this policy instead of a fresh compilation.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Verify this many generated mazes instead of a file.
    #[arg(long, requires = "seed", conflicts_with = "maze")]
    random: Option<u64>,
    /// First generator seed for --random.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    padding: i64,
    #[arg(long)]
    max_steps: Option<u64>,
    /// Also check the noisy value law and greedy actions.
    #[arg(long)]
    alpha: Option<Alpha>,
    #[command(flatten)]
    build: BuildArgs,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Subcommand)]
enum RenderCommand {
    /// Graphviz description of a policy tree.
    Dot {
        policy: PathBuf,
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
    /// SVG picture of a 2-d maze, optionally with a trace.
    Svg {
        maze: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Number of seeds, starting at --first-seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    dimensions: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    ks: Vec<usize>,
    #[arg(long, default_value_t = -50, allow_hyphen_values = true)]
    lo: i64,
    #[arg(long, default_value_t = 50, allow_hyphen_values = true)]
    hi: i64,
    #[arg(long, default_value_t = 20)]
    max_extent: i64,
    /// Leave the timing columns empty so output depends only on the flags.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    dag_dir_tree: bool,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

enum Failure {
    Usage(String),
    Io(anyhow::Error),
    Verification(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_point(text: &str) -> Result<Point, Failure> {
    text.split(',')
        .map(|v| v.trim().parse::<i64>())
        .collect::<Result<Vec<_>, _>>()
        .map(Point)
        .map_err(|_| usage(format!("cannot parse coordinates {text:?}")))
}

fn parse_anchors(text: Option<&str>) -> Result<Vec<Point>, Failure> {
    text.map_or(Ok(vec![]), |t| {
        t.split(';')
            .filter(|s| !s.trim().is_empty())
            .map(parse_point)
            .collect()
    })
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_maze(path: &Path) -> anyhow::Result<(Maze, Vec<Point>)> {
    parse_maze_document(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_policy_file(path: &Path, maze: Option<&Maze>) -> anyhow::Result<PolicyDocument> {
    load_policy(&read(path)?, maze).with_context(|| format!("loading {}", path.display()))
}

fn check_dimension(maze: &Maze, p: &Point, what: &str) -> Result<(), Failure> {
    if p.dimension() != maze.dimension() {
        return Err(usage(format!(
            "{what} {p} has {} coordinates, maze has {}",
            p.dimension(),
            maze.dimension()
        )));
    }
    Ok(())
}

fn build(
    maze: &Maze,
    file_anchors: &[Point],
    args: &BuildArgs,
) -> Result<(Compiled, Vec<Point>), Failure> {
    let mut anchors = file_anchors.to_vec();
    anchors.extend(parse_anchors(args.anchors.as_deref())?);
    for a in &anchors {
        check_dimension(maze, a, "anchor")?;
    }
    let options = BuildOptions {
        dag_direction_tree: args.dag_dir_tree,
    };
    let compiled = compile(maze, &anchors, &options).map_err(|e| usage(e.to_string()))?;
    Ok((compiled, anchors))
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let cfg = GeneratorConfig {
        seed: a.seed,
        dimension: a.dimension,
        k: a.k,
        lo: a.lo,
        hi: a.hi,
        max_extent: a.max_extent,
    };
    let maze = generate_maze(&cfg).map_err(|e| usage(e.to_string()))?;
    write_or_print(a.output.as_deref(), &(emit_maze(&maze, &[]) + "\n"))?;
    Ok(())
}

fn cmd_compile(a: CompileArgs) -> Outcome {
    let (maze, file_anchors) = load_maze(&a.maze)?;
    let (c, anchors) = build(&maze, &file_anchors, &a.build)?;
    let d = c.tree.depth();
    let doc = PolicyDocument::new(&maze, &anchors, c.tree.clone());
    let out = a
        .output
        .unwrap_or_else(|| a.maze.with_extension("policy.json"));
    fs::write(&out, emit_policy(&doc)).with_context(|| format!("writing {}", out.display()))?;
    let stats = serde_json::json!({
        "grid_depth": d.grid,
        "direction_depth": d.direction,
        "total_depth": d.total,
        "grid_depth_bound": c.tree.grid_depth_bound(),
        "direction_depth_bound": c.tree.direction_depth_bound(),
        "valid_corners": c.grid.len(),
        "finite_corners": c.grid.total_finite(),
        "corners_with_sentinels": c.grid.total_with_sentinels().to_string(),
        "tree_nodes": c.tree.nodes().len(),
        "policy": out.display().to_string(),
    });
    match a.format {
        Format::Json => println!("{stats}"),
        Format::Csv => {
            println!("grid_depth,direction_depth,total_depth,valid_corners,finite_corners,tree_nodes");
            println!("{},{},{},{},{},{}", d.grid, d.direction, d.total, c.grid.len(), c.grid.total_finite(), c.tree.nodes().len());
        }
        Format::Text => println!(
            "grid depth {} (bound {}), dir depth {} (bound {}), total depth {}, corners {} valid of {} finite ({} with sentinels), {} nodes -> {}",
            d.grid,
            c.tree.grid_depth_bound(),
            d.direction,
            c.tree.direction_depth_bound(),
            d.total,
            c.grid.len(),
            c.grid.total_finite(),
            c.grid.total_with_sentinels(),
            c.tree.nodes().len(),
            out.display()
        ),
    }
    Ok(())
}

fn describe_leaf(tree: &mazetree::PolicyTree, action: &LeafAction) -> String {
    match *action {
        LeafAction::AtGoal => "AtGoal".into(),
        LeafAction::CornerStep { corner, next } => format!(
            "CornerStep {} -> {}",
            tree.corner(corner),
            tree.corner(next)
        ),
        LeafAction::GoToCorner { target } => format!("GoToCorner {}", tree.corner(target)),
        LeafAction::Unreachable => "Unreachable".into(),
    }
}

fn cmd_eval(a: EvalArgs) -> Outcome {
    let maze = a.maze.as_deref().map(load_maze).transpose()?;
    let doc = load_policy_file(&a.policy, maze.as_ref().map(|m| &m.0))?;
    let tree = &doc.policy;
    let s = parse_point(&a.state)?;
    if s.dimension() != tree.dimension() {
        return Err(usage(format!(
            "state {s} has {} coordinates, policy has {}",
            s.dimension(),
            tree.dimension()
        )));
    }
    if let Some((m, _)) = &maze {
        if m.in_obstacle(&s) {
            return Err(usage(format!("state {s} lies inside an obstacle")));
        }
    }
    let (leaf, _) = tree.evaluate(&s);
    let path = tree.path(&s);
    let steps: Vec<String> = path
        .iter()
        .map(|&id| match tree.node(id) {
            Node::Grid(g) => {
                let branch = match s[g.feature].cmp(&g.pivot) {
                    std::cmp::Ordering::Less => "<",
                    std::cmp::Ordering::Equal => "=",
                    std::cmp::Ordering::Greater => ">",
                };
                format!("n{id}: x{} ? {} -> {branch}", g.feature + 1, g.pivot)
            }
            Node::Dir(x) => format!(
                "n{id}: d(x,{})+{} <= d(x,{})+{} [{}] -> {}",
                tree.corner(x.c1),
                x.v1,
                tree.corner(x.c2),
                x.v2,
                x.form,
                if x.form.holds(&s) { "yes" } else { "no" }
            ),
            Node::Leaf(_) => format!("n{id}: leaf"),
        })
        .collect();
    let decision = describe_leaf(tree, &leaf.action);
    let macros: Vec<String> = leaf.macros.iter().map(ToString::to_string).collect();
    match a.format {
        Format::Json => println!(
            "{}",
            serde_json::json!({ "state": s, "decision": decision, "leaf": leaf, "path": path })
        ),
        _ => {
            println!("{decision}");
            if !macros.is_empty() {
                println!("macros: {}", macros.join(", "));
            }
            println!("path ({} nodes):", path.len());
            for st in steps {
                println!("  {st}");
            }
        }
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Outcome {
    let (maze, _) = load_maze(&a.maze)?;
    let doc = load_policy_file(&a.policy, Some(&maze))?;
    let s = parse_point(&a.state)?;
    check_dimension(&maze, &s, "state")?;
    let trace = match a.alpha.filter(|al| !al.is_zero()) {
        Some(alpha) => {
            let seed = a
                .seed
                .ok_or_else(|| usage("--seed is required with a nonzero --alpha"))?;
            let budget = a
                .max_steps
                .unwrap_or_else(|| default_noisy_max_steps(&maze, &s, alpha));
            run_noisy_episode(&maze, &doc.policy, &s, NoiseConfig { alpha, seed }, budget)
        }
        None => {
            let budget = a.max_steps.unwrap_or_else(|| default_max_steps(&maze, &s));
            run_episode(&maze, &doc.policy, &s, budget)
        }
    }
    .map_err(|e| usage(e.to_string()))?;
    if let Some(out) = &a.output {
        fs::write(out, emit_trace(&trace)).with_context(|| format!("writing {}", out.display()))?;
    }
    match a.format {
        Format::Json => println!(
            "{}",
            serde_json::json!({ "total_cost": trace.total_cost, "steps": trace.actions.len(), "tree_node_visits": trace.tree_node_visits })
        ),
        _ => println!(
            "cost {} over {} steps, {} tree node visits",
            trace.total_cost,
            trace.actions.len(),
            trace.tree_node_visits
        ),
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let options = |extra: Vec<Point>| VerifyOptions {
        padding: a.padding,
        extra_states: extra,
        max_steps: a.max_steps,
        alpha: a.alpha,
    };
    let mut reports: Vec<(String, VerifyReport)> = Vec::new();
    if let Some(n) = a.random {
        let first = a.seed.expect("clap enforces --seed");
        for seed in first..first + n {
            let cfg = GeneratorConfig {
                seed,
                dimension: 1 + (seed % 3) as usize,
                k: 1 + ((seed / 3) % 6) as usize,
                lo: -10,
                hi: 10,
                max_extent: 8,
            };
            let maze = generate_maze(&cfg).map_err(|e| usage(e.to_string()))?;
            let (c, anchors) = build(&maze, &[], &a.build)?;
            let report = verify(&maze, &c, &options(anchors)).map_err(|e| usage(e.to_string()))?;
            reports.push((format!("seed {seed}"), report));
        }
    } else {
        let path = a
            .maze
            .as_deref()
            .ok_or_else(|| usage("give a maze file or --random N --seed S"))?;
        let (maze, file_anchors) = load_maze(path)?;
        let (c, anchors) = match &a.policy {
            Some(p) => {
                let doc = load_policy_file(p, Some(&maze))?;
                let (c, _) = build(
                    &maze,
                    &doc.anchors,
                    &BuildArgs {
                        anchors: None,
                        dag_dir_tree: a.build.dag_dir_tree,
                    },
                )?;
                (
                    Compiled {
                        tree: doc.policy,
                        ..c
                    },
                    doc.anchors,
                )
            }
            None => build(&maze, &file_anchors, &a.build)?,
        };
        if c.tree.corners() != c.grid.corners() {
            return Err(Failure::Verification(
                "policy corners differ from the maze's corners".into(),
            ));
        }
        let report = verify(&maze, &c, &options(anchors)).map_err(|e| usage(e.to_string()))?;
        reports.push((path.display().to_string(), report));
    }
    let failed: Vec<&str> = reports
        .iter()
        .filter(|(_, r)| !r.passed())
        .map(|(n, _)| n.as_str())
        .collect();
    match a.format {
        Format::Json => {
            let items: Vec<_> = reports
                .iter()
                .map(|(n, r)| serde_json::json!({ "maze": n, "passed": r.passed(), "report": r }))
                .collect();
            println!("{}", serde_json::Value::Array(items));
        }
        Format::Csv => {
            println!("maze,check,checked,failures");
            for (n, r) in &reports {
                for c in &r.checks {
                    println!("{n},{},{},{}", c.name, c.checked, c.failures);
                }
            }
        }
        Format::Text => {
            let mut out = String::new();
            for (n, r) in &reports {
                let _ = write!(out, "== {n}\n{r}");
            }
            print!("{out}");
            println!(
                "{} of {} mazes passed",
                reports.len() - failed.len(),
                reports.len()
            );
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "verification failed for {}",
            failed.join(", ")
        )))
    }
}

fn cmd_render(r: RenderCommand) -> Outcome {
    match r {
        RenderCommand::Dot { policy, output } => {
            let doc = load_policy_file(&policy, None)?;
            write_or_print(output.as_deref(), &export_dot(&doc.policy))?;
        }
        RenderCommand::Svg {
            maze,
            trace,
            output,
        } => {
            let (maze, _) = load_maze(&maze)?;
            let trace = trace
                .map(|p| {
                    read(&p).and_then(|t| {
                        parse_trace(&t).with_context(|| format!("parsing {}", p.display()))
                    })
                })
                .transpose()?;
            let svg = export_svg_2d(&maze, trace.as_ref()).map_err(|e| usage(e.to_string()))?;
            write_or_print(output.as_deref(), &svg)?;
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Outcome {
    let cfg = SweepConfig {
        seeds: (a.first_seed..a.first_seed + a.seeds).collect(),
        dimensions: a.dimensions,
        ks: a.ks,
        lo: a.lo,
        hi: a.hi,
        max_extent: a.max_extent,
        options: BuildOptions {
            dag_direction_tree: a.dag_dir_tree,
        },
        timing: !a.no_timing,
        episodes: 50,
    };
    let rows = sweep(&cfg).map_err(|e| usage(e.to_string()))?;
    let text = match a.format {
        Format::Json => serde_json::to_string(&rows).context("serialising rows")? + "\n",
        _ => rows_to_csv(&rows),
    };
    write_or_print(a.output.as_deref(), &text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Render(r) => cmd_render(r),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
