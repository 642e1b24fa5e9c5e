use std::fmt::Write;

use thiserror::Error;

use crate::grid::build_lists;
use crate::maze::Maze;
use crate::runtime::Trace;
use crate::tree::{LeafAction, Node, PolicyTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("SVG rendering needs a 2-dimensional maze, got dimension {0}")]
    UnsupportedDimension(usize),
}

/// Graphviz description with one node per tree node.
pub fn export_dot(tree: &PolicyTree) -> String {
    let mut out = String::from("digraph policy {\n  node [fontname=\"monospace\"];\n");
    for (id, node) in tree.nodes().iter().enumerate() {
        match node {
            Node::Grid(g) => {
                let _ = writeln!(
                    out,
                    "  n{id} [shape=diamond, label=\"x{} ? {}\"];",
                    g.feature + 1,
                    g.pivot
                );
                for (child, tag) in [(g.less, "<"), (g.eq, "="), (g.greater, ">")] {
                    let _ = writeln!(out, "  n{id} -> n{child} [label=\"{tag}\"];");
                }
            }
            Node::Dir(x) => {
                let _ = writeln!(
                    out,
                    "  n{id} [shape=box, label=\"d(x,{})+{} ≤ d(x,{})+{}\"];",
                    tree.corner(x.c1),
                    x.v1,
                    tree.corner(x.c2),
                    x.v2
                );
                let _ = writeln!(out, "  n{id} -> n{} [label=\"yes\"];", x.left);
                let _ = writeln!(out, "  n{id} -> n{} [label=\"no\"];", x.right);
            }
            Node::Leaf(l) => {
                let label = match l.action {
                    LeafAction::AtGoal => "goal".to_string(),
                    LeafAction::CornerStep { corner, next } => {
                        format!("{} -> {}", tree.corner(corner), tree.corner(next))
                    }
                    LeafAction::GoToCorner { target } => format!("go to {}", tree.corner(target)),
                    LeafAction::Unreachable => "unreachable".to_string(),
                };
                let _ = writeln!(out, "  n{id} [shape=ellipse, label=\"{label}\"];");
            }
        }
    }
    out.push_str("}\n");
    out
}

const UNIT: i64 = 32;
const MARGIN: i64 = 16;

/// Top-down picture of a 2-d maze: grid lines at list coordinates, gray
/// obstacles, a red goal and an optional blue trajectory.
pub fn export_svg_2d(maze: &Maze, trace: Option<&Trace>) -> Result<String, RenderError> {
    if maze.dimension() != 2 {
        return Err(RenderError::UnsupportedDimension(maze.dimension()));
    }
    let lists = build_lists(maze, &[]);
    let states = trace.map_or(&[][..], |t| &t.states[..]);
    let xs = lists[0]
        .values()
        .iter()
        .copied()
        .chain(states.iter().map(|p| p[0]));
    let ys = lists[1]
        .values()
        .iter()
        .copied()
        .chain(states.iter().map(|p| p[1]));
    let (x0, x1) = xs.fold((i64::MAX, i64::MIN), |(a, b), v| (a.min(v), b.max(v)));
    let (y0, y1) = ys.fold((i64::MAX, i64::MIN), |(a, b), v| (a.min(v), b.max(v)));
    let (x0, x1, y0, y1) = (x0 - 1, x1 + 1, y0 - 1, y1 + 1);
    let px = |x: i64| (x - x0) * UNIT + MARGIN;
    let py = |y: i64| (y1 - y) * UNIT + MARGIN;
    let width = (x1 - x0) * UNIT + 2 * MARGIN;
    let height = (y1 - y0) * UNIT + 2 * MARGIN;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        out,
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>"
    );
    for o in maze.obstacles() {
        let _ = writeln!(
            out,
            "  <rect class=\"obstacle\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#9e9e9e\"/>",
            px(o.a[0]),
            py(o.b[1]),
            (o.b[0] - o.a[0]) * UNIT,
            (o.b[1] - o.a[1]) * UNIT
        );
    }
    for &x in lists[0].values() {
        let _ = writeln!(
            out,
            "  <line class=\"grid\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#c8c8c8\"/>",
            px(x),
            py(y1),
            py(y0)
        );
    }
    for &y in lists[1].values() {
        let _ = writeln!(
            out,
            "  <line class=\"grid\" x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#c8c8c8\"/>",
            py(y),
            px(x0),
            px(x1)
        );
    }
    if !states.is_empty() {
        let pts: Vec<String> = states
            .iter()
            .map(|p| format!("{},{}", px(p[0]), py(p[1])))
            .collect();
        let _ = writeln!(
            out,
            "  <polyline class=\"trajectory\" points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"3\"/>",
            pts.join(" ")
        );
        for p in states {
            let _ = writeln!(
                out,
                "  <circle class=\"trajectory-point\" cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#1f77b4\"/>",
                px(p[0]),
                py(p[1])
            );
        }
    }
    let g = maze.goal();
    let _ = writeln!(
        out,
        "  <circle class=\"goal\" cx=\"{}\" cy=\"{}\" r=\"7\" fill=\"#d62728\"/>",
        px(g[0]),
        py(g[1])
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::fixtures::two_boxes;
    use crate::maze::Point;
    use crate::runtime::run_episode;
    use crate::{compile, BuildOptions};

    #[test]
    fn dot_has_three_way_fanout() {
        let c = compile(&two_boxes(), &[], &BuildOptions::default()).unwrap();
        let dot = export_dot(&c.tree);
        assert!(dot.starts_with("digraph policy {"));
        assert_eq!(dot.matches("[shape=").count(), c.tree.nodes().len());
        assert!(dot.contains("label=\"x1 ? "));
        for tag in ["<", "=", ">"] {
            assert!(dot.contains(&format!("[label=\"{tag}\"]")));
        }
    }

    #[test]
    fn svg_trace_points() {
        let m = two_boxes();
        let c = compile(&m, &[], &BuildOptions::default()).unwrap();
        let t = run_episode(&m, &c.tree, &Point::from([7, 0]), 1000).unwrap();
        let svg = export_svg_2d(&m, Some(&t)).unwrap();
        assert_eq!(svg.matches("class=\"trajectory-point\"").count(), 10);
        assert_eq!(svg.matches("class=\"obstacle\"").count(), 2);
        assert_eq!(svg, export_svg_2d(&m, Some(&t)).unwrap());
    }

    #[test]
    fn svg_requires_two_dimensions() {
        let m = Maze::new(3, [0, 0, 0], vec![]).unwrap();
        assert_eq!(
            export_svg_2d(&m, None),
            Err(RenderError::UnsupportedDimension(3))
        );
    }
}
