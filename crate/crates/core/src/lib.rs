//! Event clustering, near-duplicate removal and propaganda scoring for
//! streams of news articles.

pub mod clustering;
pub mod config;
pub mod corpus;
pub mod dedup;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod service;
pub mod synthetic;

pub use error::{Error, Result};
