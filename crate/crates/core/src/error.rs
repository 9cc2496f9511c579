use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid deletion prior: {0}")]
    InvalidPrior(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("at least one item per slice required: {n_items} items for {required} slices")]
    InsufficientItems { n_items: usize, required: usize },
    #[error("budget exceeds permutation space: B={budget} > {space}")]
    BudgetExceedsPermutationSpace { budget: usize, space: u128 },
    #[error("budget {budget} exceeds slice count {slices} for method {method}")]
    BudgetExceedsSlices {
        budget: usize,
        slices: usize,
        method: &'static str,
    },
    #[error("infeasible matching")]
    InfeasibleMatching,
    #[error("diversity undefined for fewer than two sequences")]
    DiversityUndefined,
    #[error("sampling exhausted after {rejections} consecutive duplicate draws")]
    SamplingExhausted { rejections: usize },
    #[error("unknown item id {0}")]
    UnknownItem(usize),
    #[error("item {0} already deleted")]
    ItemAlreadyDeleted(usize),
    #[error("item-level deletion requires a partition manifest")]
    NoManifest,
    #[error("shard {shard} out of range (m={shards})")]
    ShardOutOfRange { shard: usize, shards: usize },
    #[error("slice {slice} out of range (L={slices})")]
    SliceOutOfRange { slice: usize, slices: usize },
    #[error("operation requires sisa mode")]
    NotSisaMode,
    #[error("failure predicate can never fire: {0}")]
    FailureUnreachable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
