//! Dataset partitioning into `m` shards of `L` slices.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, ShardIndex, SliceIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionPolicy {
    /// Item `i` goes to cell `i mod (m*L)`.
    RoundRobin,
    /// Items are shuffled with the seed, then dealt round-robin.
    SeededUniform,
}

/// Assignment of every item id in `0..n_items` to a (shard, slice) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ManifestRepr", into = "ManifestRepr")]
pub struct PartitionManifest {
    n_items: usize,
    shards: usize,
    slices: usize,
    assignment: Vec<(ShardIndex, SliceIndex)>,
    slice_sizes: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ManifestRepr {
    n_items: usize,
    m: usize,
    #[serde(rename = "L")]
    l: usize,
    assignment: Vec<(usize, usize)>,
}

impl PartitionManifest {
    pub fn from_assignment(
        shards: usize,
        slices: usize,
        assignment: Vec<(ShardIndex, SliceIndex)>,
    ) -> Result<Self> {
        if shards == 0 || slices == 0 {
            return Err(Error::InvalidConfig("m and L must be at least 1".into()));
        }
        let mut slice_sizes = alloc::vec![alloc::vec![0usize; slices]; shards];
        for &(sh, sl) in &assignment {
            if sh.0 >= shards {
                return Err(Error::ShardOutOfRange { shard: sh.0, shards });
            }
            if sl.0 >= slices {
                return Err(Error::SliceOutOfRange { slice: sl.0, slices });
            }
            slice_sizes[sh.0][sl.0] += 1;
        }
        Ok(Self {
            n_items: assignment.len(),
            shards,
            slices,
            assignment,
            slice_sizes,
        })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn shards(&self) -> usize {
        self.shards
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn locate(&self, item: usize) -> Option<(ShardIndex, SliceIndex)> {
        self.assignment.get(item).copied()
    }

    pub fn assignment(&self) -> &[(ShardIndex, SliceIndex)] {
        &self.assignment
    }

    /// `slice_sizes()[shard][slice]` item counts.
    pub fn slice_sizes(&self) -> &[Vec<usize>] {
        &self.slice_sizes
    }
}

impl TryFrom<ManifestRepr> for PartitionManifest {
    type Error = Error;

    fn try_from(r: ManifestRepr) -> Result<Self> {
        if r.assignment.len() != r.n_items {
            return Err(Error::InvalidConfig(alloc::format!(
                "manifest lists {} assignments for {} items",
                r.assignment.len(),
                r.n_items
            )));
        }
        let assignment = r
            .assignment
            .into_iter()
            .map(|(a, b)| (ShardIndex(a), SliceIndex(b)))
            .collect();
        Self::from_assignment(r.m, r.l, assignment)
    }
}

impl From<PartitionManifest> for ManifestRepr {
    fn from(p: PartitionManifest) -> Self {
        Self {
            n_items: p.n_items,
            m: p.shards,
            l: p.slices,
            assignment: p.assignment.into_iter().map(|(a, b)| (a.0, b.0)).collect(),
        }
    }
}

/// Splits `n_items` opaque ids into `shards * slices` near-equal cells.
///
/// Both policies deal items round-robin over the cells, so cell sizes differ
/// by at most one; `SeededUniform` first shuffles the ids.
pub fn partition(
    n_items: usize,
    shards: usize,
    slices: usize,
    policy: PartitionPolicy,
    seed: u64,
) -> Result<PartitionManifest> {
    if shards == 0 || slices == 0 {
        return Err(Error::InvalidConfig("m and L must be at least 1".into()));
    }
    let cells = shards
        .checked_mul(slices)
        .ok_or_else(|| Error::InvalidConfig("m*L overflows".into()))?;
    if n_items < cells {
        return Err(Error::InsufficientItems {
            n_items,
            required: cells,
        });
    }
    let mut order: Vec<usize> = (0..n_items).collect();
    if policy == PartitionPolicy::SeededUniform {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut assignment = alloc::vec![(ShardIndex(0), SliceIndex(0)); n_items];
    for (rank, &item) in order.iter().enumerate() {
        let cell = rank % cells;
        assignment[item] = (ShardIndex(cell / slices), SliceIndex(cell % slices));
    }
    PartitionManifest::from_assignment(shards, slices, assignment)
}
