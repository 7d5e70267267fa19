//! D3Q19 TRT lattice Boltzmann benchmark kernels.
//!
//! Seventeen update kernels over dense and fluid-only lattices, a Roofline
//! model with memory bandwidth micro-benchmarks, a benchmark harness and a
//! Poiseuille flow check.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::manual_is_multiple_of)]

pub mod cli;
pub mod d3q19;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod lattice;
pub mod perfmodel;
pub mod pool;
pub mod storage;
pub mod verification;

pub use error::{Error, Result};
