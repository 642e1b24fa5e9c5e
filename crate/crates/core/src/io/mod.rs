//! File formats, maze generation and rendering.

mod document;
mod generate;
mod render;
mod trace;

pub use document::{
    emit_maze, emit_policy, emit_value_field, load_policy, maze_digest, parse_maze,
    parse_maze_document, MazeDocument, ObstacleDocument, ParseError, PolicyDocument, PolicyError,
    SCHEMA_VERSION,
};
pub use generate::{generate_maze, GenerateError, GeneratorConfig};
pub use render::{export_dot, export_svg_2d, RenderError};
pub use trace::{emit_trace, parse_trace, TraceError};
