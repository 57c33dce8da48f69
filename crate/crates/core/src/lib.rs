//! Distance graphs over F_q^d and the machinery for embedding colored paths
//! and trees into subsets of them: exact field arithmetic, Cayley-graph
//! spectra, min-degree peeling, depth-first path embedding, the colorful
//! tree-embedding calculus, point–sphere incidences and extremal
//! constructions.

pub mod cli;
pub mod constructions;
pub mod dfs_path;
pub mod distgraph;
pub mod error;
pub mod expander;
pub mod gf;
pub mod haxell;
pub mod incidence;

pub use error::{Error, Result};
