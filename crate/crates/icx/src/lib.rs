//! Trace-driven analysis of how custom-instruction ISA extensions change
//! instruction-cache behaviour.
//!
//! A static program image plus a dynamic fetch trace are replayed through a
//! configurable instruction cache, before and after contiguous instruction
//! sequences are collapsed into custom instructions. The crate then models
//! per-access energy and average memory access time across a cache-size
//! sweep and decides when the extended ISA allows a smaller cache without
//! violating the baseline access-time bound.

pub mod cache;
pub mod ci;
pub mod energy;
pub mod harness;
pub mod program;

pub use cache::{AccessStats, CacheConfig};
pub use program::{DynamicTrace, StaticProgram};
