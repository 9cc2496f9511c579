//! The deletion state machine.
//!
//! Each shard holds its trained variants. A deletion that hits slice `s` of a
//! shard cuts every variant of that shard back to the layers trained before
//! `s`; a variant left with no layers is dead. Dead variants stay in the state
//! (flagged by `active_prefix == 0`) so snapshots and replays keep the full
//! history.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::derive_seed;
use crate::partition::PartitionManifest;
use crate::selection::{self, SelectionMethod, SelectionPlan};
use crate::{Budget, DeletionPrior, Error, Permutation, Result, ShardIndex, SliceIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    S3t,
    /// One identity-ordered model per shard.
    Sisa,
}

/// When the whole system counts as failed and needs retraining.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailurePredicate {
    /// Every shard has lost all of its variants.
    #[default]
    AllShards,
    /// Some shard has lost all of its variants.
    AnyShard,
}

/// One trained model: a slice ordering and how many of its leading layers
/// are still usable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VariantRepr", into = "VariantRepr")]
pub struct ModelVariant {
    shard: ShardIndex,
    perm: Permutation,
    active_prefix: usize,
    positions: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct VariantRepr {
    shard: ShardIndex,
    perm: Permutation,
    active_prefix: usize,
}

impl ModelVariant {
    pub fn new(shard: ShardIndex, perm: Permutation) -> Self {
        let positions = perm.positions();
        let active_prefix = perm.len();
        Self {
            shard,
            perm,
            active_prefix,
            positions,
        }
    }

    pub fn shard(&self) -> ShardIndex {
        self.shard
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn active_prefix(&self) -> usize {
        self.active_prefix
    }

    pub fn is_alive(&self) -> bool {
        self.active_prefix >= 1
    }

    /// Slices the still-active layers were trained on, in order.
    pub fn active_slices(&self) -> &[SliceIndex] {
        &self.perm.order()[..self.active_prefix]
    }

    pub fn position_of(&self, slice: SliceIndex) -> usize {
        self.positions[slice.get()]
    }

    /// Switches off the layer trained on `slice` and everything after it.
    /// Returns true if this kills the variant.
    fn deactivate(&mut self, slice: SliceIndex) -> bool {
        let q = self.positions[slice.get()];
        if q < self.active_prefix {
            let was_alive = self.is_alive();
            self.active_prefix = q;
            was_alive && !self.is_alive()
        } else {
            false
        }
    }
}

impl TryFrom<VariantRepr> for ModelVariant {
    type Error = Error;

    fn try_from(r: VariantRepr) -> Result<Self> {
        if r.active_prefix > r.perm.len() {
            return Err(Error::InvalidConfig(format!(
                "active prefix {} exceeds sequence length {}",
                r.active_prefix,
                r.perm.len()
            )));
        }
        let mut v = Self::new(r.shard, r.perm);
        v.active_prefix = r.active_prefix;
        Ok(v)
    }
}

impl From<ModelVariant> for VariantRepr {
    fn from(v: ModelVariant) -> Self {
        Self {
            shard: v.shard,
            perm: v.perm,
            active_prefix: v.active_prefix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardState {
    shard: ShardIndex,
    variants: Vec<ModelVariant>,
    deleted_slices: BTreeSet<SliceIndex>,
    /// Per-slice live item counts; present only with a manifest.
    remaining_items: Option<Vec<usize>>,
}

impl ShardState {
    pub fn shard(&self) -> ShardIndex {
        self.shard
    }

    pub fn variants(&self) -> &[ModelVariant] {
        &self.variants
    }

    pub fn deleted_slices(&self) -> &BTreeSet<SliceIndex> {
        &self.deleted_slices
    }

    pub fn remaining_items(&self) -> Option<&[usize]> {
        self.remaining_items.as_deref()
    }

    pub fn is_alive(&self) -> bool {
        self.variants.iter().any(ModelVariant::is_alive)
    }

    /// The alive variant with the longest active prefix; earliest wins ties.
    pub fn best_variant(&self) -> Option<&ModelVariant> {
        let mut best: Option<&ModelVariant> = None;
        for v in &self.variants {
            if v.is_alive() && best.is_none_or(|b| v.active_prefix > b.active_prefix) {
                best = Some(v);
            }
        }
        best
    }

    pub fn best_prefix(&self) -> usize {
        self.best_variant().map_or(0, ModelVariant::active_prefix)
    }
}

/// Free-function form of [`ShardState::best_variant`].
pub fn best_variant(shard: &ShardState) -> Option<&ModelVariant> {
    shard.best_variant()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeletionTarget {
    Item(usize),
    Slice { shard: ShardIndex, slice: SliceIndex },
}

/// Audit record of one processed deletion request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionEvent {
    pub request_id: u64,
    pub target: DeletionTarget,
    pub newly_dead_variants: usize,
    pub system_alive_after: bool,
}

/// Where each shard's training sequences come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanSource {
    Select(SelectionMethod),
    /// One plan per shard, or a single plan shared by all shards.
    Explicit(Vec<SelectionPlan>),
}

impl From<SelectionMethod> for PlanSource {
    fn from(m: SelectionMethod) -> Self {
        Self::Select(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub shards: usize,
    pub slices: usize,
    pub budget: Budget,
    pub mode: Mode,
    pub plan_source: PlanSource,
    /// One prior per shard, or one shared by all shards.
    pub priors: Option<Vec<DeletionPrior>>,
    pub horizon: u32,
    pub manifest: Option<PartitionManifest>,
    pub failure: FailurePredicate,
    pub seed: u64,
}

impl InitConfig {
    pub fn new(shards: usize, slices: usize, budget: Budget, mode: Mode, plan_source: PlanSource) -> Self {
        Self {
            shards,
            slices,
            budget,
            mode,
            plan_source,
            priors: None,
            horizon: selection::DEFAULT_HORIZON,
            manifest: None,
            failure: FailurePredicate::AllShards,
            seed: 0,
        }
    }
}

/// Full ensemble state. Value type: clone it to branch a trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemState {
    mode: Mode,
    failure: FailurePredicate,
    #[serde(rename = "m")]
    shard_count: usize,
    #[serde(rename = "L")]
    slice_count: usize,
    #[serde(rename = "B")]
    budget: Budget,
    shards: Vec<ShardState>,
    manifest: Option<PartitionManifest>,
    deleted_items: BTreeSet<usize>,
    request_count: u64,
    alive_shards: usize,
}

fn pick<'a, T>(items: &'a [T], shard: usize, shards: usize, what: &str) -> Result<&'a T> {
    match items.len() {
        1 => Ok(&items[0]),
        n if n == shards => Ok(&items[shard]),
        n => Err(Error::InvalidConfig(format!("{n} {what} given for m={shards} shards"))),
    }
}

/// Trains (abstractly) every shard: picks its sequences and creates one fully
/// active variant per sequence.
pub fn initialize(config: &InitConfig) -> Result<SystemState> {
    let InitConfig {
        shards,
        slices,
        budget,
        mode,
        ..
    } = *config;
    if shards == 0 || slices == 0 {
        return Err(Error::InvalidConfig("m and L must be at least 1".into()));
    }
    if mode == Mode::Sisa && budget.get() != 1 {
        return Err(Error::InvalidConfig(format!(
            "sisa mode trains one sequence per shard, got B={}",
            budget.get()
        )));
    }
    if let Some(m) = &config.manifest {
        if m.shards() != shards || m.slices() != slices {
            return Err(Error::InvalidConfig(format!(
                "manifest is for m={}, L={}; system has m={shards}, L={slices}",
                m.shards(),
                m.slices()
            )));
        }
    }
    if let Some(priors) = &config.priors {
        for p in priors {
            selection::check_prior_len(p, slices)?;
        }
    }

    let mut states = Vec::with_capacity(shards);
    for shard in 0..shards {
        let plan = match mode {
            Mode::Sisa => SelectionPlan::new(SelectionMethod::Explicit, alloc::vec![Permutation::identity(slices)])?,
            Mode::S3t => shard_plan(config, shard)?,
        };
        let variants = plan
            .into_sequences()
            .into_iter()
            .map(|perm| ModelVariant::new(ShardIndex(shard), perm))
            .collect();
        states.push(ShardState {
            shard: ShardIndex(shard),
            variants,
            deleted_slices: BTreeSet::new(),
            remaining_items: config.manifest.as_ref().map(|m| m.slice_sizes()[shard].clone()),
        });
    }
    Ok(SystemState {
        mode,
        failure: config.failure,
        shard_count: shards,
        slice_count: slices,
        budget,
        shards: states,
        manifest: config.manifest.clone(),
        deleted_items: BTreeSet::new(),
        request_count: 0,
        alive_shards: shards,
    })
}

fn shard_plan(config: &InitConfig, shard: usize) -> Result<SelectionPlan> {
    let plan = match &config.plan_source {
        PlanSource::Select(method) => {
            let prior = match &config.priors {
                Some(p) => Some(pick(p, shard, config.shards, "priors")?),
                None if method.needs_prior() => {
                    return Err(Error::InvalidConfig(format!("plan source {method} requires a prior")))
                }
                None => None,
            };
            selection::select(
                *method,
                config.slices,
                config.budget,
                prior,
                config.horizon,
                derive_seed(config.seed, shard as u64),
            )?
        }
        PlanSource::Explicit(plans) => pick(plans, shard, config.shards, "plans")?.clone(),
    };
    if plan.len() != config.budget.get() || plan.slices() != config.slices {
        return Err(Error::InvalidConfig(format!(
            "plan for shard {shard} has {} sequences of length {}, expected B={} and L={}",
            plan.len(),
            plan.slices(),
            config.budget.get(),
            config.slices
        )));
    }
    Ok(plan)
}

impl SystemState {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn failure(&self) -> FailurePredicate {
        self.failure
    }

    pub fn shard_count(&self) -> usize {
        self.shard_count
    }

    pub fn slice_count(&self) -> usize {
        self.slice_count
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn shards(&self) -> &[ShardState] {
        &self.shards
    }

    pub fn shard(&self, shard: ShardIndex) -> Option<&ShardState> {
        self.shards.get(shard.get())
    }

    pub fn manifest(&self) -> Option<&PartitionManifest> {
        self.manifest.as_ref()
    }

    pub fn deleted_items(&self) -> &BTreeSet<usize> {
        &self.deleted_items
    }

    pub fn request_count(&self) -> u64 {
        self.request_count
    }

    pub fn alive_shards(&self) -> usize {
        self.alive_shards
    }

    /// Whether the system can still serve without retraining, under its
    /// failure predicate.
    pub fn system_alive(&self) -> bool {
        match self.failure {
            FailurePredicate::AllShards => self.alive_shards > 0,
            FailurePredicate::AnyShard => self.alive_shards == self.shard_count,
        }
    }

    /// Best active prefix length of every shard.
    pub fn best_prefixes(&self) -> Vec<usize> {
        self.shards.iter().map(ShardState::best_prefix).collect()
    }

    pub fn resolve(&self, target: &DeletionTarget) -> Result<(ShardIndex, SliceIndex)> {
        match *target {
            DeletionTarget::Item(id) => {
                let manifest = self.manifest.as_ref().ok_or(Error::NoManifest)?;
                let cell = manifest.locate(id).ok_or(Error::UnknownItem(id))?;
                if self.deleted_items.contains(&id) {
                    return Err(Error::ItemAlreadyDeleted(id));
                }
                Ok(cell)
            }
            DeletionTarget::Slice { shard, slice } => {
                if shard.get() >= self.shard_count {
                    return Err(Error::ShardOutOfRange {
                        shard: shard.get(),
                        shards: self.shard_count,
                    });
                }
                if slice.get() >= self.slice_count {
                    return Err(Error::SliceOutOfRange {
                        slice: slice.get(),
                        slices: self.slice_count,
                    });
                }
                Ok((shard, slice))
            }
        }
    }

    /// Processes one deletion request in place. On error the state is
    /// unchanged.
    pub fn apply_deletion(&mut self, target: DeletionTarget) -> Result<DeletionEvent> {
        let (shard_ix, slice) = self.resolve(&target)?;
        if let DeletionTarget::Item(id) = target {
            self.deleted_items.insert(id);
        }
        let shard = &mut self.shards[shard_ix.get()];
        if let Some(counts) = shard.remaining_items.as_mut() {
            if matches!(target, DeletionTarget::Item(_)) {
                counts[slice.get()] -= 1;
            }
        }
        let mut newly_dead = 0;
        if shard.deleted_slices.insert(slice) {
            let was_alive = shard.is_alive();
            for v in &mut shard.variants {
                if v.deactivate(slice) {
                    newly_dead += 1;
                }
            }
            if newly_dead > 0 && was_alive && !shard.is_alive() {
                self.alive_shards -= 1;
            }
        }
        self.request_count += 1;
        Ok(DeletionEvent {
            request_id: self.request_count,
            target,
            newly_dead_variants: newly_dead,
            system_alive_after: self.system_alive(),
        })
    }

    /// Value-semantic form of [`Self::apply_deletion`].
    pub fn with_deletion(&self, target: DeletionTarget) -> Result<(SystemState, DeletionEvent)> {
        let mut next = self.clone();
        let event = next.apply_deletion(target)?;
        Ok((next, event))
    }

    /// For SISA: the longest checkpoint prefix free of deleted slices.
    pub fn sisa_checkpoint_prefix(&self, shard: ShardIndex) -> Result<usize> {
        if self.mode != Mode::Sisa {
            return Err(Error::NotSisaMode);
        }
        let state = self.shard(shard).ok_or(Error::ShardOutOfRange {
            shard: shard.get(),
            shards: self.shard_count,
        })?;
        let variant = &state.variants[0];
        Ok(state
            .deleted_slices
            .iter()
            .map(|&s| variant.position_of(s))
            .min()
            .unwrap_or(self.slice_count))
    }

    /// Checks every structural and unlearning invariant; returns the first
    /// violation found.
    pub fn check_invariants(&self) -> core::result::Result<(), String> {
        if self.shards.len() != self.shard_count {
            return Err(format!("{} shard states for m={}", self.shards.len(), self.shard_count));
        }
        let mut alive = 0;
        for (i, sh) in self.shards.iter().enumerate() {
            if sh.shard.get() != i {
                return Err(format!("shard {i} carries index {}", sh.shard));
            }
            match self.mode {
                Mode::Sisa => {
                    if sh.variants.len() != 1 || !sh.variants[0].perm.is_identity() {
                        return Err(format!("sisa shard {i} must hold one identity variant"));
                    }
                }
                Mode::S3t => {
                    if sh.variants.len() != self.budget.get() {
                        return Err(format!("shard {i} holds {} variants, B={}", sh.variants.len(), self.budget.get()));
                    }
                    let distinct: BTreeSet<&Permutation> = sh.variants.iter().map(|v| &v.perm).collect();
                    if distinct.len() != sh.variants.len() {
                        return Err(format!("shard {i} has duplicate sequences"));
                    }
                }
            }
            for (k, v) in sh.variants.iter().enumerate() {
                if v.shard != sh.shard || v.perm.len() != self.slice_count {
                    return Err(format!("variant {k} of shard {i} is malformed"));
                }
                if let Some(s) = v.active_slices().iter().find(|s| sh.deleted_slices.contains(s)) {
                    return Err(format!("variant {k} of shard {i} still uses deleted slice {s}"));
                }
                // Maximal: the prefix stops exactly at the first deleted slice.
                if v.active_prefix < self.slice_count && !sh.deleted_slices.contains(&v.perm.at(v.active_prefix)) {
                    return Err(format!("variant {k} of shard {i} deactivated without cause"));
                }
            }
            if let (Some(counts), Some(m)) = (&sh.remaining_items, &self.manifest) {
                for (s, (&left, &initial)) in counts.iter().zip(&m.slice_sizes()[i]).enumerate() {
                    if left < initial && !sh.deleted_slices.contains(&SliceIndex(s)) {
                        return Err(format!("slice {s} of shard {i} lost items but is not marked deleted"));
                    }
                }
            }
            if sh.is_alive() {
                alive += 1;
            }
        }
        if alive != self.alive_shards {
            return Err(format!("alive shard count {} but {alive} shards alive", self.alive_shards));
        }
        Ok(())
    }
}
