use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maze::{Action, Point};
use crate::runtime::Trace;

/// One JSON object per line: a `step` per visited state, then a `summary`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Step {
        index: usize,
        state: Point,
        /// Action taken from `state`; absent on the final state.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action: Option<Action>,
    },
    Summary {
        corner_waypoints: Vec<Point>,
        total_cost: u64,
        tree_node_visits: usize,
    },
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
}

pub fn emit_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for (index, state) in trace.states.iter().enumerate() {
        let line = Line::Step {
            index,
            state: state.clone(),
            action: trace.actions.get(index).copied(),
        };
        out.push_str(&serde_json::to_string(&line).expect("trace lines serialise"));
        out.push('\n');
    }
    let summary = Line::Summary {
        corner_waypoints: trace.corner_waypoints.clone(),
        total_cost: trace.total_cost,
        tree_node_visits: trace.tree_node_visits,
    };
    out.push_str(&serde_json::to_string(&summary).expect("trace lines serialise"));
    out.push('\n');
    out
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    let mut trace = Trace {
        states: vec![],
        actions: vec![],
        total_cost: 0,
        tree_node_visits: 0,
        corner_waypoints: vec![],
    };
    let mut summary_seen = false;
    let structure = |line: usize, message: &str| TraceError::Structure {
        line,
        message: message.to_string(),
    };
    for (i, raw) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let line = i + 1;
        if summary_seen {
            return Err(structure(line, "content after the summary"));
        }
        match serde_json::from_str(raw).map_err(|source| TraceError::Json { line, source })? {
            Line::Step {
                index,
                state,
                action,
            } => {
                if index != trace.states.len() {
                    return Err(structure(line, "step index out of sequence"));
                }
                if trace.actions.len() != trace.states.len() {
                    return Err(structure(line, "step after the final state"));
                }
                trace.states.push(state);
                trace.actions.extend(action);
            }
            Line::Summary {
                corner_waypoints,
                total_cost,
                tree_node_visits,
            } => {
                summary_seen = true;
                trace.corner_waypoints = corner_waypoints;
                trace.total_cost = total_cost;
                trace.tree_node_visits = tree_node_visits;
            }
        }
    }
    if !summary_seen {
        return Err(structure(text.lines().count(), "missing summary"));
    }
    if trace.states.is_empty() || trace.actions.len() + 1 != trace.states.len() {
        return Err(structure(
            text.lines().count(),
            "every state but the last needs an action",
        ));
    }
    Ok(trace)
}
