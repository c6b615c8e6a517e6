//! Cross-modal retrieval with Cluster-CCA and a cosine triplet network.
//!
//! Pipeline: centre both views, fit (Cluster-)CCA to a K-dimensional shared
//! space, train one triplet network per retrieval direction on the projected
//! data, then rank gallery items by cosine similarity and score MAP / PRC
//! under category-balanced cross-validation.

pub mod cca;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod mining;
pub mod seed;
pub mod tnn;

pub use error::{Error, Result};
