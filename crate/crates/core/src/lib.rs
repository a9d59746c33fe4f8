//! Two-party split-learning runtime and privacy benchmark for small
//! transformer models.
//!
//! The crate partitions a toy encoder-only classifier or decoder-only
//! language model between a Data Party and a Model Party, runs the head-tail
//! (HT) and head-body-tail (HBT) training and inference protocols over
//! in-process or socket transports, mounts inversion/label-inference attacks
//! and their defenses at the party boundaries, and scores every attack-defense
//! pair with the DCS metric family.

pub mod error;
pub mod rng;
pub mod tensor;
