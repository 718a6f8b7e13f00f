//! Origin/destination search-term detection for indoor wayfinding queries.
//!
//! The crate generates a labeled query corpus from a department lexicon and
//! phrase templates, trains a convolutional sentence classifier with two
//! softmax heads (origin and destination), and compares it against an
//! edit-distance directory matcher and a hashed n-gram linear model. Detected
//! pairs can be routed on a floor graph and narrated as turn-by-turn steps.

pub mod checkpoint;
pub mod cnn;
pub mod corpus;
pub mod encode;
pub mod error;
pub mod eval;
pub mod levmatch;
pub mod linear;
pub mod navigate;
pub mod rng;
pub mod server;

pub use error::{Error, Result};

/// Department lexicon shipped with the crate (79 entries).
pub const DEFAULT_DEPARTMENTS: &str = include_str!("../data/departments.txt");
/// Query templates shipped with the crate (46 entries).
pub const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.txt");
/// Demo floor map covering every shipped department.
pub const DEMO_FLOOR_MAP: &str = include_str!("../data/floor_map.json");
