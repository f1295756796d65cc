//! Display sets of rooted binary phylogenetic networks, rSPR graphs of
//! tree collections, hypercube recognition, and reconstruction of level-1
//! networks from their display sets.

pub mod error;
pub mod display;
pub mod hypercube;
pub mod level1;
pub mod network;
pub mod oracle;
pub mod rspr;
pub mod tree;

pub use error::{Error, Result};
