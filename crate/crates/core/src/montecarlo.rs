//! Seeded Monte Carlo trials over the engine.
//!
//! Every trial draws its randomness from a ChaCha stream selected by the
//! trial index, so outcomes do not depend on how trials are scheduled.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::engine::{self, DeletionTarget, FailurePredicate, InitConfig, Mode, PlanSource, SystemState};
use crate::math::{derive_seed, sqrt};
use crate::partition::{partition, PartitionManifest, PartitionPolicy};
use crate::selection::{SelectionMethod, DEFAULT_HORIZON};
use crate::{Budget, DeletionPrior, Error, Result, ShardIndex, SliceIndex};

pub const DEFAULT_TRIALS: u64 = 10_000;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const PRIOR_DOMAIN: u64 = 0x0070_7269_6f72;
const PLAN_DOMAIN: u64 = 0x706c_616e;
const MANIFEST_DOMAIN: u64 = 0x6d61_6e69;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorSpec {
    #[default]
    Uniform,
    /// One prior per shard drawn from a symmetric Dirichlet.
    Dirichlet { alpha: f64 },
    /// One prior per shard, or one shared by all shards.
    Explicit(Vec<DeletionPrior>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    /// Each request picks a (shard, slice) pair, already-deleted ones included.
    #[default]
    SliceWithReplacement,
    /// Each request deletes one still-present item of a partitioned dataset.
    Item { n_items: usize },
}

fn default_plan_source() -> PlanSource {
    PlanSource::Select(SelectionMethod::Cyclic)
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_horizon() -> u32 {
    DEFAULT_HORIZON
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    #[serde(rename = "m")]
    pub shards: usize,
    #[serde(rename = "L")]
    pub slices: usize,
    #[serde(rename = "B")]
    pub budget: Budget,
    pub mode: Mode,
    #[serde(default = "default_plan_source")]
    pub plan_source: PlanSource,
    #[serde(default)]
    pub prior_spec: PriorSpec,
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default)]
    pub failure: FailurePredicate,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon", rename = "t")]
    pub horizon: u32,
}

impl TrialConfig {
    /// Uniform prior, slice-with-replacement requests, cyclic plans.
    pub fn new(shards: usize, slices: usize, budget: usize, mode: Mode) -> Result<Self> {
        Ok(Self {
            shards,
            slices,
            budget: Budget::new(budget)?,
            mode,
            plan_source: default_plan_source(),
            prior_spec: PriorSpec::Uniform,
            granularity: Granularity::SliceWithReplacement,
            failure: FailurePredicate::AllShards,
            trials: DEFAULT_TRIALS,
            seed: 0,
            horizon: DEFAULT_HORIZON,
        })
    }

    pub fn with_plan(mut self, plan_source: impl Into<PlanSource>) -> Self {
        self.plan_source = plan_source.into();
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.shards == 0 || self.slices == 0 {
            return Err(Error::InvalidConfig("m and L must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        match &self.prior_spec {
            PriorSpec::Dirichlet { alpha } if !(alpha.is_finite() && *alpha > 0.0) => {
                return Err(Error::InvalidConfig(format!("dirichlet alpha must be > 0, got {alpha}")));
            }
            PriorSpec::Explicit(priors) => {
                if priors.len() != 1 && priors.len() != self.shards {
                    return Err(Error::InvalidConfig(format!(
                        "{} explicit priors for m={}",
                        priors.len(),
                        self.shards
                    )));
                }
                if let Some(p) = priors.iter().find(|p| p.len() != self.slices) {
                    return Err(Error::InvalidPrior(format!(
                        "prior has {} entries, expected L={}",
                        p.len(),
                        self.slices
                    )));
                }
            }
            _ => {}
        }
        if let Granularity::Item { n_items } = self.granularity {
            if n_items < self.shards * self.slices {
                return Err(Error::InsufficientItems {
                    n_items,
                    required: self.shards * self.slices,
                });
            }
        }
        Ok(())
    }

    /// Whether initialization consumes per-trial randomness.
    fn randomized_plans(&self) -> bool {
        match &self.plan_source {
            PlanSource::Select(m) if self.mode == Mode::S3t => {
                m.is_randomized() || (*m == SelectionMethod::Bms && self.budget.get() > self.slices)
            }
            _ => false,
        }
    }
}

/// Deletion requests issued until the failure predicate fired, per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub deletions_to_failure: Vec<u64>,
    pub mean: f64,
    /// `None` with fewer than two trials.
    pub ci95_halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retention_trace: Option<Vec<RetentionRow>>,
}

impl TrialResult {
    /// Mean and normal-approximation 95% half-width (sample stddev).
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let n = counts.len() as f64;
        let mean = if counts.is_empty() {
            0.0
        } else {
            counts.iter().map(|&c| c as f64).sum::<f64>() / n
        };
        let ci = (counts.len() >= 2).then(|| {
            let var = counts.iter().map(|&c| (c as f64 - mean) * (c as f64 - mean)).sum::<f64>() / (n - 1.0);
            Z95 * sqrt(var / n)
        });
        Self {
            deletions_to_failure: counts,
            mean,
            ci95_halfwidth: ci,
            retention_trace: None,
        }
    }

    pub fn ci95(&self) -> (f64, f64) {
        let h = self.ci95_halfwidth.unwrap_or(0.0);
        (self.mean - h, self.mean + h)
    }
}

/// A config resolved into priors, a reusable template state and samplers.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: TrialConfig,
    priors: Option<Vec<DeletionPrior>>,
    cumulative: Option<Vec<Vec<f64>>>,
    manifest: Option<PartitionManifest>,
    template: Option<SystemState>,
}

impl Simulator {
    pub fn new(config: TrialConfig) -> Result<Self> {
        config.validate()?;
        let priors = resolve_priors(&config)?;
        let cumulative = priors.as_ref().map(|ps| ps.iter().map(cumulative_of).collect());
        let manifest = match config.granularity {
            Granularity::Item { n_items } => Some(partition(
                n_items,
                config.shards,
                config.slices,
                PartitionPolicy::SeededUniform,
                derive_seed(config.seed, MANIFEST_DOMAIN),
            )?),
            Granularity::SliceWithReplacement => None,
        };
        let mut sim = Self {
            config,
            priors,
            cumulative,
            manifest,
            template: None,
        };
        if !sim.config.randomized_plans() {
            let state = sim.initial_state(0)?;
            sim.check_reachable(&state)?;
            sim.template = Some(state);
        }
        Ok(sim)
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    /// Per-shard priors in effect, `None` for uniform.
    pub fn priors(&self) -> Option<&[DeletionPrior]> {
        self.priors.as_deref()
    }

    fn init_config(&self, plan_seed: u64) -> InitConfig {
        let c = &self.config;
        let needs_prior = matches!(&c.plan_source, PlanSource::Select(m) if m.needs_prior());
        let priors = match &self.priors {
            Some(p) => Some(p.clone()),
            None if needs_prior => Some(vec![DeletionPrior::uniform(c.slices)]),
            None => None,
        };
        InitConfig {
            shards: c.shards,
            slices: c.slices,
            budget: c.budget,
            mode: c.mode,
            plan_source: c.plan_source.clone(),
            priors,
            horizon: c.horizon,
            manifest: self.manifest.clone(),
            failure: c.failure,
            seed: plan_seed,
        }
    }

    fn initial_state(&self, trial: u64) -> Result<SystemState> {
        match &self.template {
            Some(t) => Ok(t.clone()),
            None => {
                let seed = if self.config.randomized_plans() {
                    derive_seed(derive_seed(self.config.seed, PLAN_DOMAIN), trial)
                } else {
                    self.config.seed
                };
                engine::initialize(&self.init_config(seed))
            }
        }
    }

    /// Slice mode with a non-uniform prior can leave a top slice with zero
    /// probability, in which case trials would never end.
    fn check_reachable(&self, state: &SystemState) -> Result<()> {
        let (Granularity::SliceWithReplacement, Some(priors)) = (self.config.granularity, &self.priors) else {
            return Ok(());
        };
        let killable: Vec<bool> = state
            .shards()
            .iter()
            .map(|sh| {
                let prior = &priors[if priors.len() == 1 { 0 } else { sh.shard().get() }];
                sh.variants().iter().all(|v| prior.prob(v.perm().at(0)) > 0.0)
            })
            .collect();
        let ok = match self.config.failure {
            FailurePredicate::AllShards => killable.iter().all(|&k| k),
            FailurePredicate::AnyShard => killable.iter().any(|&k| k),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::FailureUnreachable(
                "some sequence starts with a slice of zero deletion probability".into(),
            ))
        }
    }

    fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(trial);
        rng
    }

    fn draw_slice(&self, rng: &mut ChaCha8Rng, shard: usize) -> SliceIndex {
        match &self.cumulative {
            None => SliceIndex(rng.random_range(0..self.config.slices)),
            Some(cum) => {
                let c = &cum[if cum.len() == 1 { 0 } else { shard }];
                let u: f64 = rng.random();
                SliceIndex(c.partition_point(|&x| x <= u).min(c.len() - 1))
            }
        }
    }

    fn draw_slice_target(&self, rng: &mut ChaCha8Rng) -> DeletionTarget {
        let c = &self.config;
        if self.cumulative.is_none() {
            let cell = rng.random_range(0..c.shards * c.slices);
            return DeletionTarget::Slice {
                shard: ShardIndex(cell / c.slices),
                slice: SliceIndex(cell % c.slices),
            };
        }
        let shard = rng.random_range(0..c.shards);
        DeletionTarget::Slice {
            shard: ShardIndex(shard),
            slice: self.draw_slice(rng, shard),
        }
    }

    /// Runs trial `trial` to failure and returns the number of requests.
    pub fn run_trial(&self, trial: u64) -> Result<u64> {
        let mut state = self.initial_state(trial)?;
        if self.template.is_none() {
            self.check_reachable(&state)?;
        }
        let mut rng = self.trial_rng(trial);
        let mut remaining: Vec<usize> = match &self.manifest {
            Some(m) => (0..m.n_items()).collect(),
            None => Vec::new(),
        };
        while state.system_alive() {
            let target = if self.manifest.is_some() {
                if remaining.is_empty() {
                    return Err(Error::FailureUnreachable("every item deleted".into()));
                }
                let j = rng.random_range(0..remaining.len());
                DeletionTarget::Item(remaining.swap_remove(j))
            } else {
                self.draw_slice_target(&mut rng)
            };
            state.apply_deletion(target)?;
        }
        Ok(state.request_count())
    }

    /// Best active prefix of shard 0 after each request count in `rs`
    /// (ascending), with requests confined to shard 0's slices.
    pub fn retention_trial(&self, trial: u64, rs: &[u64]) -> Result<Vec<usize>> {
        let mut state = self.initial_state(trial)?;
        let mut rng = self.trial_rng(trial);
        let mut out = Vec::with_capacity(rs.len());
        let mut done = 0u64;
        for &r in rs {
            while done < r {
                let target = DeletionTarget::Slice {
                    shard: ShardIndex(0),
                    slice: self.draw_slice(&mut rng, 0),
                };
                state.apply_deletion(target)?;
                done += 1;
            }
            out.push(state.shards()[0].best_prefix());
        }
        Ok(out)
    }

    pub fn estimate_deletion_rate(&self) -> Result<TrialResult> {
        let counts = (0..self.config.trials)
            .map(|i| self.run_trial(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrialResult::from_counts(counts))
    }
}

fn cumulative_of(prior: &DeletionPrior) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = prior
        .probs()
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // Pin the top to 1 without disturbing trailing zero-probability slices.
    let last_positive = prior.probs().iter().rposition(|&p| p > 0.0).unwrap_or(c.len() - 1);
    for x in &mut c[last_positive..] {
        *x = 1.0;
    }
    c
}

fn resolve_priors(config: &TrialConfig) -> Result<Option<Vec<DeletionPrior>>> {
    match &config.prior_spec {
        PriorSpec::Uniform => Ok(None),
        PriorSpec::Explicit(p) => Ok(Some(p.clone())),
        PriorSpec::Dirichlet { alpha } => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, PRIOR_DOMAIN));
            (0..config.shards)
                .map(|_| sample_dirichlet(config.slices, *alpha, &mut rng))
                .collect::<Result<Vec<_>>>()
                .map(Some)
        }
    }
}

/// Symmetric Dirichlet draw via normalized Gamma(alpha, 1) variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(len: usize, alpha: f64, rng: &mut R) -> Result<DeletionPrior> {
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|e| Error::InvalidConfig(format!("dirichlet alpha {alpha}: {e}")))?;
    loop {
        let draws: Vec<f64> = (0..len).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return DeletionPrior::new(draws.into_iter().map(|x| x / total).collect());
        }
    }
}

/// Runs `config.trials` trials sequentially.
pub fn estimate_deletion_rate(config: &TrialConfig) -> Result<TrialResult> {
    Simulator::new(config.clone())?.estimate_deletion_rate()
}

/// Single trial of `config` selected by `trial` index.
pub fn run_trial(config: &TrialConfig, trial: u64) -> Result<u64> {
    Simulator::new(config.clone())?.run_trial(trial)
}

/// Empirical retention at one `(k, r)` next to its closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionRow {
    pub k: usize,
    pub r: u64,
    pub b_eff: usize,
    pub p_sisa: f64,
    pub p_s3t: f64,
    pub gap: f64,
    /// Closed form matching the config's mode.
    pub analytic: f64,
    pub empirical: f64,
    /// `sqrt(analytic (1 - analytic) / trials)`.
    pub std_error: f64,
    pub trials: u64,
}

impl RetentionRow {
    /// `|empirical - analytic|` in standard errors; 0 when both agree exactly.
    pub fn z_score(&self) -> f64 {
        let d = (self.empirical - self.analytic).abs();
        if d == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            d / self.std_error
        }
    }
}

/// Accumulates `best prefix >= k` indicators across trials.
#[derive(Debug, Clone)]
pub struct RetentionTally {
    ks: Vec<usize>,
    rs: Vec<u64>,
    hits: Vec<Vec<u64>>,
    trials: u64,
}

impl RetentionTally {
    pub fn new(ks: &[usize], rs: &[u64]) -> Self {
        Self {
            ks: ks.to_vec(),
            rs: rs.to_vec(),
            hits: vec![vec![0; rs.len()]; ks.len()],
            trials: 0,
        }
    }

    /// `prefixes[j]` is the best prefix after `rs[j]` requests.
    pub fn record(&mut self, prefixes: &[usize]) {
        for (i, &k) in self.ks.iter().enumerate() {
            for (j, &p) in prefixes.iter().enumerate() {
                if p >= k {
                    self.hits[i][j] += 1;
                }
            }
        }
        self.trials += 1;
    }

    pub fn finish(&self, config: &TrialConfig) -> Result<Vec<RetentionRow>> {
        let n = self.trials as f64;
        let mut rows = Vec::with_capacity(self.ks.len() * self.rs.len());
        for (i, &k) in self.ks.iter().enumerate() {
            for (j, &r) in self.rs.iter().enumerate() {
                let point = analytics::retention_point(k, config.slices, r, config.budget.get())?;
                let analytic = match config.mode {
                    Mode::Sisa => point.p_sisa,
                    Mode::S3t => point.p_s3t,
                };
                rows.push(RetentionRow {
                    k,
                    r,
                    b_eff: point.b_eff,
                    p_sisa: point.p_sisa,
                    p_s3t: point.p_s3t,
                    gap: point.gap,
                    analytic,
                    empirical: self.hits[i][j] as f64 / n,
                    std_error: sqrt(analytic * (1.0 - analytic) / n),
                    trials: self.trials,
                });
            }
        }
        Ok(rows)
    }
}

/// Checks `ks`/`rs` and returns the config restricted to one shard plus the
/// sorted, deduplicated `rs`.
pub fn retention_setup(config: &TrialConfig, ks: &[usize], rs: &[u64]) -> Result<(TrialConfig, Vec<u64>)> {
    if ks.is_empty() || rs.is_empty() {
        return Err(Error::InvalidArgument("retention needs at least one k and one r".into()));
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > config.slices) {
        return Err(Error::InvalidArgument(format!("k={k} outside 1..=L")));
    }
    let mut single = config.clone();
    single.shards = 1;
    single.granularity = Granularity::SliceWithReplacement;
    if let PriorSpec::Explicit(p) = &config.prior_spec {
        single.prior_spec = PriorSpec::Explicit(vec![p[0].clone()]);
    }
    if let PlanSource::Explicit(plans) = &config.plan_source {
        single.plan_source = PlanSource::Explicit(vec![plans[0].clone()]);
    }
    let mut sorted = rs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok((single, sorted))
}

/// Fraction of single-shard trials whose best prefix is at least `k` after
/// `r` uniform requests, for every `(k, r)`, beside the closed forms.
pub fn retention_curve(config: &TrialConfig, ks: &[usize], rs: &[u64]) -> Result<Vec<RetentionRow>> {
    let (single, rs) = retention_setup(config, ks, rs)?;
    let sim = Simulator::new(single.clone())?;
    let mut tally = RetentionTally::new(ks, &rs);
    for trial in 0..single.trials {
        tally.record(&sim.retention_trial(trial, &rs)?);
    }
    tally.finish(&single)
}

/// One line of a side-by-side comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub config: TrialConfig,
    pub mean: f64,
    pub ci95: Option<f64>,
    /// Harmonic bound for the config's mode, exact for uniform slice requests.
    pub bound: f64,
    /// Mean relative to the first row.
    pub ratio: f64,
}

pub fn analytic_bound(config: &TrialConfig) -> Result<f64> {
    match config.mode {
        Mode::Sisa => analytics::sisa_deletion_bound(config.shards, config.slices),
        Mode::S3t => analytics::s3t_deletion_bound(config.shards, config.slices, config.budget.get()),
    }
}

/// Builds comparison rows from already computed results.
pub fn comparison_rows(results: Vec<(TrialConfig, TrialResult)>) -> Result<Vec<ComparisonRow>> {
    let base = results.first().map(|(_, r)| r.mean).unwrap_or(0.0);
    results
        .into_iter()
        .map(|(config, res)| {
            Ok(ComparisonRow {
                bound: analytic_bound(&config)?,
                mean: res.mean,
                ci95: res.ci95_halfwidth,
                ratio: if base > 0.0 { res.mean / base } else { f64::NAN },
                config,
            })
        })
        .collect()
}

pub fn compare(configs: &[TrialConfig]) -> Result<Vec<ComparisonRow>> {
    let results = configs
        .iter()
        .map(|c| Ok((c.clone(), estimate_deletion_rate(c)?)))
        .collect::<Result<Vec<_>>>()?;
    comparison_rows(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_slice_fails_on_first_request() {
        for mode in [Mode::Sisa, Mode::S3t] {
            let cfg = TrialConfig::new(1, 1, 1, mode).unwrap().with_trials(20);
            let res = estimate_deletion_rate(&cfg).unwrap();
            assert!(res.deletions_to_failure.iter().all(|&c| c == 1));
            assert_eq!(res.ci95_halfwidth, Some(0.0));
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let cfg = TrialConfig::new(3, 4, 2, Mode::S3t).unwrap().with_seed(42);
        assert_eq!(run_trial(&cfg, 17).unwrap(), run_trial(&cfg, 17).unwrap());
        let a = estimate_deletion_rate(&cfg.clone().with_trials(50)).unwrap();
        let b = estimate_deletion_rate(&cfg.with_trials(50)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_trial_has_no_interval() {
        let cfg = TrialConfig::new(2, 2, 1, Mode::Sisa).unwrap().with_trials(1);
        assert_eq!(estimate_deletion_rate(&cfg).unwrap().ci95_halfwidth, None);
    }

    #[test]
    fn zero_probability_top_slice_is_rejected() {
        let mut cfg = TrialConfig::new(1, 3, 1, Mode::Sisa).unwrap();
        cfg.prior_spec = PriorSpec::Explicit(vec![DeletionPrior::new(vec![0.0, 0.5, 0.5]).unwrap()]);
        assert!(matches!(Simulator::new(cfg), Err(Error::FailureUnreachable(_))));
    }

    #[test]
    fn cumulative_pins_top() {
        let p = DeletionPrior::new(vec![0.2, 0.8, 0.0]).unwrap();
        assert_eq!(cumulative_of(&p), vec![0.2, 1.0, 1.0]);
    }

    #[test]
    fn dirichlet_priors_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for alpha in [0.1, 1.0, 5.0] {
            let p = sample_dirichlet(8, alpha, &mut rng).unwrap();
            assert_eq!(p.len(), 8);
        }
        let mut cfg = TrialConfig::new(2, 3, 1, Mode::Sisa).unwrap();
        cfg.prior_spec = PriorSpec::Dirichlet { alpha: 0.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let cfg: TrialConfig = serde_json::from_str(r#"{"m":5,"L":4,"B":2,"mode":"s3t"}"#).unwrap();
        assert_eq!(cfg.trials, DEFAULT_TRIALS);
        assert_eq!(cfg.horizon, DEFAULT_HORIZON);
        assert_eq!(cfg.plan_source, PlanSource::Select(SelectionMethod::Cyclic));
        let full = r#"{"m":2,"L":3,"B":3,"mode":"s3t","plan_source":"bms",
            "prior_spec":{"dirichlet":{"alpha":1.0}},"granularity":{"item":{"n_items":60}},
            "failure":"any-shard","trials":5,"seed":9,"t":4}"#;
        let cfg: TrialConfig = serde_json::from_str(full).unwrap();
        assert_eq!(cfg.granularity, Granularity::Item { n_items: 60 });
        assert_eq!(cfg.failure, FailurePredicate::AnyShard);
        let back: TrialConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn retention_at_zero_requests_is_one() {
        let cfg = TrialConfig::new(1, 4, 2, Mode::S3t).unwrap().with_trials(100);
        let rows = retention_curve(&cfg, &[1, 4], &[0]).unwrap();
        assert!(rows.iter().all(|r| r.empirical == 1.0 && r.analytic == 1.0));
    }
}
