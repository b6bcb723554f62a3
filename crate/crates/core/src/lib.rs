//! Graph + recurrent anomaly detection for CAN bus traffic.
//!
//! Frames are grouped into fixed-size windows, each window becomes a path
//! graph over its frames, a graph encoder (autoencoder + three graph
//! convolutions) maps every graph to a 32-dimensional embedding, and a
//! two-layer GRU classifies sliding sequences of embeddings. Detection is
//! reported per sequence and per window (mean and max aggregation).
//!
//! | module | role |
//! |---|---|
//! | [`ingest`] | CSV parsing, normalization, windowing, chronological split |
//! | [`synth`] | synthetic ECU traffic and flooding/fuzzing/replay/spoofing injection |
//! | [`graph`] | window → path graph, normalized adjacency |
//! | [`nn`] | tensors, reverse-mode autodiff tape, layers, Adam, checkpoints |
//! | [`encoder`] | graph encoder training and embedding |
//! | [`detector`] | sequence construction, GRU detector, sequence/window detection |
//! | [`analysis`] | window entropy sweep and classification metrics |
//! | [`cli`] | config file, staged pipeline and the `guard-can` command line |

pub mod analysis;
pub mod cli;
pub mod detector;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod nn;
pub mod synth;

pub use error::{Error, Result};
