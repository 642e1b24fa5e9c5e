use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corner_mdp::Cost;
use crate::maze::{Maze, Obstacle, Point};
use crate::oracle::ValueField;
use crate::tree::{Node, PolicyTree};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk maze. Fields are declared in key order so that serialising the
/// struct directly gives the canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MazeDocument {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchors: Vec<Vec<i64>>,
    pub dimension: usize,
    pub goal: Vec<i64>,
    pub obstacles: Vec<ObstacleDocument>,
    pub schema_version: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObstacleDocument {
    pub a: Vec<i64>,
    pub b: Vec<i64>,
}

impl MazeDocument {
    /// Canonical document: obstacles sorted by `(a, b)`, anchors sorted and
    /// deduplicated.
    pub fn from_maze(maze: &Maze, anchors: &[Point]) -> Self {
        let mut obstacles: Vec<ObstacleDocument> = maze
            .obstacles()
            .iter()
            .map(|o| ObstacleDocument {
                a: o.a.0.clone(),
                b: o.b.0.clone(),
            })
            .collect();
        obstacles.sort();
        let mut anchors: Vec<Vec<i64>> = anchors.iter().map(|p| p.0.clone()).collect();
        anchors.sort();
        anchors.dedup();
        MazeDocument {
            anchors,
            dimension: maze.dimension(),
            goal: maze.goal().0.clone(),
            obstacles,
            schema_version: SCHEMA_VERSION,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", .0.join("; "))]
    Invalid(Vec<String>),
}

fn int_array(v: Option<&Value>, field: &str, errors: &mut Vec<String>) -> Option<Vec<i64>> {
    match v {
        None => {
            errors.push(format!("{field}: missing"));
            None
        }
        Some(Value::Array(items)) => {
            let out: Option<Vec<i64>> = items.iter().map(Value::as_i64).collect();
            if out.is_none() {
                errors.push(format!("{field}: expected an array of integers"));
            }
            out
        }
        Some(_) => {
            errors.push(format!("{field}: expected an array of integers"));
            None
        }
    }
}

/// Parses a maze document with its anchors, reporting every violation
/// found rather than the first.
pub fn parse_maze_document(text: &str) -> Result<(Maze, Vec<Point>), ParseError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(obj) = root else {
        return Err(ParseError::Invalid(vec![
            "document: expected an object".into()
        ]));
    };
    let mut errors = Vec::new();
    for key in obj.keys() {
        if ![
            "anchors",
            "dimension",
            "goal",
            "obstacles",
            "schema_version",
        ]
        .contains(&key.as_str())
        {
            errors.push(format!("{key}: unknown field"));
        }
    }
    match obj.get("schema_version").map(Value::as_u64) {
        Some(Some(v)) if v == u64::from(SCHEMA_VERSION) => {}
        Some(Some(v)) => errors.push(format!("schema_version: unsupported version {v}")),
        Some(None) => errors.push("schema_version: expected an integer".into()),
        None => errors.push("schema_version: missing".into()),
    }
    let dimension = match obj.get("dimension").map(Value::as_u64) {
        Some(Some(d)) if d >= 1 => Some(d as usize),
        Some(_) => {
            errors.push("dimension: expected a positive integer".into());
            None
        }
        None => {
            errors.push("dimension: missing".into());
            None
        }
    };
    let goal = int_array(obj.get("goal"), "goal", &mut errors);
    let mut obstacles = Vec::new();
    match obj.get("obstacles") {
        Some(Value::Array(items)) => {
            for (j, item) in items.iter().enumerate() {
                let Value::Object(o) = item else {
                    errors.push(format!(
                        "obstacle {j}: expected an object with fields a and b"
                    ));
                    continue;
                };
                for key in o.keys().filter(|k| *k != "a" && *k != "b") {
                    errors.push(format!("obstacle {j}: unknown field {key}"));
                }
                let a = int_array(o.get("a"), &format!("obstacle {j}.a"), &mut errors);
                let b = int_array(o.get("b"), &format!("obstacle {j}.b"), &mut errors);
                if let (Some(a), Some(b)) = (a, b) {
                    obstacles.push(Obstacle::new(a, b));
                }
            }
        }
        Some(_) => errors.push("obstacles: expected an array".into()),
        None => errors.push("obstacles: missing".into()),
    }
    let mut anchors = Vec::new();
    match obj.get("anchors") {
        None => {}
        Some(Value::Array(items)) => {
            for (j, item) in items.iter().enumerate() {
                if let Some(p) = int_array(Some(item), &format!("anchor {j}"), &mut errors) {
                    if dimension.is_some_and(|d| d != p.len()) {
                        errors.push(format!("anchor {j}: length mismatch"));
                    }
                    anchors.push(Point(p));
                }
            }
        }
        Some(_) => errors.push("anchors: expected an array".into()),
    }
    if let (Some(d), Some(goal)) = (dimension, goal) {
        let maze = Maze::new_unchecked(d, goal, obstacles);
        if let Err(v) = maze.validate() {
            errors.extend(v.iter().map(ToString::to_string));
        }
        if errors.is_empty() {
            return Ok((maze, anchors));
        }
    }
    Err(ParseError::Invalid(errors))
}

pub fn parse_maze(text: &str) -> Result<Maze, ParseError> {
    parse_maze_document(text).map(|(m, _)| m)
}

/// Canonical compact JSON: sorted keys, obstacles ordered by `(a, b)`.
pub fn emit_maze(maze: &Maze, anchors: &[Point]) -> String {
    serde_json::to_string(&MazeDocument::from_maze(maze, anchors))
        .expect("maze documents serialise")
}

/// SHA-256 of the canonical document of `maze` without anchors.
pub fn maze_digest(maze: &Maze) -> String {
    hex::encode(Sha256::digest(emit_maze(maze, &[]).as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub anchors: Vec<Point>,
    pub maze_digest: String,
    pub policy: PolicyTree,
    pub schema_version: u32,
}

impl PolicyDocument {
    pub fn new(maze: &Maze, anchors: &[Point], policy: PolicyTree) -> Self {
        PolicyDocument {
            anchors: anchors.to_vec(),
            maze_digest: maze_digest(maze),
            policy,
            schema_version: SCHEMA_VERSION,
        }
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("malformed policy document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("unsupported policy schema version {0}")]
    SchemaVersion(u32),
    #[error("policy was built for maze {expected}, but the given maze has digest {found}")]
    DigestMismatch { expected: String, found: String },
    #[error("inconsistent policy document: {0}")]
    Malformed(String),
}

pub fn emit_policy(doc: &PolicyDocument) -> String {
    serde_json::to_string(doc).expect("policy documents serialise")
}

/// Parses a policy document and checks its internal consistency. With
/// `maze`, also rejects the document unless it was built from that maze.
pub fn load_policy(text: &str, maze: Option<&Maze>) -> Result<PolicyDocument, PolicyError> {
    let doc: PolicyDocument = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(PolicyError::SchemaVersion(doc.schema_version));
    }
    if let Some(maze) = maze {
        let found = maze_digest(maze);
        if found != doc.maze_digest {
            return Err(PolicyError::DigestMismatch {
                expected: doc.maze_digest,
                found,
            });
        }
    }
    check_structure(&doc.policy).map_err(PolicyError::Malformed)?;
    Ok(doc)
}

fn check_structure(t: &PolicyTree) -> Result<(), String> {
    let d = t.dimension();
    let n = t.nodes().len();
    let k = t.corners().len();
    if d == 0 || t.lists().len() != d {
        return Err("dimension and coordinate lists disagree".into());
    }
    if t.corners().iter().any(|c| c.dimension() != d) {
        return Err("corner of the wrong dimension".into());
    }
    if t.values().len() != k || t.successors().len() != k || t.goal_index() >= k {
        return Err("corner tables have inconsistent lengths".into());
    }
    if t.successors().iter().flatten().any(|&s| s >= k) {
        return Err("successor index out of range".into());
    }
    if t.root() >= n {
        return Err("root index out of range".into());
    }
    for (id, node) in t.nodes().iter().enumerate() {
        let ok = match node {
            Node::Grid(g) => g.feature < d && [g.less, g.eq, g.greater].iter().all(|&c| c < n),
            Node::Dir(x) => {
                x.c1 < k
                    && x.c2 < k
                    && x.left < n
                    && x.right < n
                    && x.form.weights.len() == d
                    && x.cell.segments.len() == d
            }
            Node::Leaf(l) => {
                l.cell.segments.len() == d
                    && l.target().is_none_or(|c| c < k)
                    && l.macros.iter().all(|m| m.feature < d)
                    && match l.action {
                        crate::tree::LeafAction::CornerStep { corner, .. } => corner < k,
                        _ => true,
                    }
            }
        };
        if !ok {
            return Err(format!("node {id} refers outside the document"));
        }
    }
    // iterative three-colour search for cycles
    let mut colour = vec![0u8; n];
    let mut stack = vec![(t.root(), false)];
    while let Some((id, done)) = stack.pop() {
        if done {
            colour[id] = 2;
            continue;
        }
        match colour[id] {
            1 => return Err(format!("cycle through node {id}")),
            2 => continue,
            _ => {}
        }
        colour[id] = 1;
        stack.push((id, true));
        for c in children(t.node(id)) {
            if colour[c] == 1 {
                return Err(format!("cycle through node {c}"));
            }
            if colour[c] == 0 {
                stack.push((c, false));
            }
        }
    }
    if crate::tree::measure_depth(t.nodes(), t.root()) != t.depth() {
        return Err("depth statistics do not match the nodes".into());
    }
    Ok(())
}

fn children(node: &Node) -> Vec<usize> {
    match node {
        Node::Grid(g) => vec![g.less, g.eq, g.greater],
        Node::Dir(x) => vec![x.left, x.right],
        Node::Leaf(_) => vec![],
    }
}

#[derive(Serialize)]
struct ValueFieldDocument<'a> {
    hi: &'a [i64],
    lo: &'a [i64],
    states: Vec<(Point, Cost)>,
}

/// Free in-box states with their values, for debugging.
pub fn emit_value_field(field: &ValueField) -> String {
    let doc = ValueFieldDocument {
        hi: field.bbox().hi(),
        lo: field.bbox().lo(),
        states: field.free_states().collect(),
    };
    serde_json::to_string(&doc).expect("value fields serialise")
}
