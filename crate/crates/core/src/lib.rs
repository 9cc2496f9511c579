//! Control plane for sequence-aware sharded, sliced exact unlearning.
//!
//! A dataset is split into `m` shards of `L` slices. Every shard trains up to
//! `B` model variants, each on its own ordering of the slices; a variant that
//! sees a deleted slice keeps only the layers trained before that slice. This
//! crate provides:
//!
//! - [`types`] / [`partition`]: identifiers, permutations, priors, manifests.
//! - [`selection`]: budgeted selection of diverse slice orderings (cyclic
//!   rotation, bipartite-matching selection, conditional sampling).
//! - [`engine`]: the deletion state machine.
//! - [`analytics`]: closed-form deletion-rate and retention results.
//! - [`montecarlo`]: seeded trial runner checked against [`analytics`].
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytics;
pub mod engine;
mod error;
pub mod math;
pub mod montecarlo;
pub mod partition;
pub mod selection;
pub mod types;

pub use error::{Error, Result};
pub use types::{Budget, DeletionPrior, Permutation, ShardIndex, SliceIndex};
