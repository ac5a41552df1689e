//! Core of the dataset-size sweep lab: task generation, tokenization, a
//! small reverse-mode autograd engine, a decoder-only transformer with
//! AdamW, the training loop, and threshold-crossing analysis.
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! `std` feature. File formats, the CLI and sweep orchestration live in the
//! companion `sweetspot` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod corpus;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod timing;
pub mod tokenizer;
pub mod train;
