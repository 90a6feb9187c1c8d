//! Core library for prompted tile-level generation.
//!
//! The pipeline: parse and stitch a corpus of path-annotated levels
//! ([`corpus`]), tokenize flattened level strings ([`tokenizer`]), annotate
//! windows with quantized feature prompts ([`prompt`]), train a small
//! prompt-conditioned decoder plus a masked infill model ([`model`]), check
//! traversability with a deterministic A* agent ([`playability`]), and run an
//! open-ended novelty-search loop whose mutation operator is the generator
//! itself ([`novelty`]).

pub mod corpus;
pub mod model;
pub mod novelty;
pub mod playability;
pub mod prompt;
pub mod tokenizer;

pub use corpus::{stitch, LevelGrid, Tile, LEVEL_HEIGHT, TILE_SYMBOLS};
pub use prompt::{FeatureCounts, PromptSpec};
pub use tokenizer::{TokenSequence, Vocab};
