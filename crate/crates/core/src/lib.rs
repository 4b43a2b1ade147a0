//! Modeling kernel for AR workflow models: a two-level metamodeling core,
//! the ARWFML language, canonical bundle interchange, pose mathematics and
//! a deterministic workflow interpreter.

pub mod arwfml;
pub mod bundle_io;
pub mod canonical;
pub mod engine;
pub mod fixture;
pub mod meta2;
pub mod scene3d;
