//! Greedy best-first planning with per-step control over which heuristic's
//! open list to expand from, plus learned controllers for that choice.

pub mod bridge;
pub mod dac;
pub mod eval;
pub mod heuristics;
pub mod rl;
pub mod search;
pub mod task;
pub mod taskgen;
