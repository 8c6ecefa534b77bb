//! Semantic link learning between image entities: a closed-world knowledge
//! base, averaged word-vector entity embeddings, a neural tensor layer triple
//! scorer, detector post-processing, and two relation classifiers (an
//! embedding-only baseline and an image-feature fusion network).

pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod detect;
pub mod embeddings;
pub mod error;
pub mod kb;
pub mod models;
pub mod nn;
pub mod ntl;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
