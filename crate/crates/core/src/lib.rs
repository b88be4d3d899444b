//! Summarize robot experiences into hierarchical text, explain failures
//! progressively with a language model, and plan corrections.

pub mod config;
pub mod geometry;
pub mod log_model;
pub mod math;
pub mod relations;
pub mod scene_graph;
pub mod sim_eval;
pub mod percepts;
pub mod reason;
pub mod summary;
pub mod world;
