//! Self-generated behavior-cloning data for parametric text games.

pub mod crawler;
pub mod engine;
pub mod evaluator;
mod hash;
pub mod macros;
pub mod pipeline;
pub mod policy;
pub mod score;
pub mod trajectory;

pub use hash::content_hash;
pub use score::Score;
