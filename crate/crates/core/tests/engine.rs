use proptest::prelude::*;
use s3t_core::engine::{initialize, DeletionTarget, FailurePredicate, InitConfig, Mode, PlanSource, SystemState};
use s3t_core::partition::{partition, PartitionPolicy};
use s3t_core::selection::{SelectionMethod, SelectionPlan};
use s3t_core::{Budget, Permutation, ShardIndex, SliceIndex};

fn target(shard: usize, slice: usize) -> DeletionTarget {
    DeletionTarget::Slice {
        shard: ShardIndex(shard),
        slice: SliceIndex(slice),
    }
}

fn init(m: usize, l: usize, b: usize, mode: Mode, plan: PlanSource, seed: u64) -> SystemState {
    let mut cfg = InitConfig::new(m, l, Budget::new(b).unwrap(), mode, plan);
    cfg.seed = seed;
    initialize(&cfg).unwrap()
}

fn config() -> impl Strategy<Value = (usize, usize, usize, u8, u64)> {
    (1usize..=8, 1usize..=16).prop_flat_map(|(m, l)| (Just(m), Just(l), 1..=l, 0u8..3, any::<u64>()))
}

fn plan_of(kind: u8) -> PlanSource {
    match kind {
        0 => SelectionMethod::Cyclic.into(),
        1 => SelectionMethod::Random.into(),
        _ => SelectionMethod::Bms.into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectories_keep_invariants(
        (m, l, b, kind, seed) in config(),
        hits in prop::collection::vec((0usize..8, 0usize..16), 0..120),
    ) {
        let mut cfg = InitConfig::new(m, l, Budget::new(b).unwrap(), Mode::S3t, plan_of(kind));
        cfg.seed = seed;
        cfg.priors = Some(vec![s3t_core::DeletionPrior::uniform(l)]);
        let mut st = initialize(&cfg).unwrap();
        let mut prev = st.best_prefixes();
        let mut prev_alive = st.system_alive();
        for (sh, sl) in hits {
            let (sh, sl) = (sh % m, sl % l);
            let before = st.clone();
            let ev = st.apply_deletion(target(sh, sl)).unwrap();
            prop_assert_eq!(ev.request_id, st.request_count());
            prop_assert_eq!(ev.system_alive_after, st.system_alive());
            if let Err(e) = st.check_invariants() {
                return Err(TestCaseError::fail(e));
            }
            for (i, sh_state) in st.shards().iter().enumerate() {
                prop_assert!(sh_state.variants().iter().all(|v| v.active_slices().iter().all(|s| !sh_state.deleted_slices().contains(s))));
                if i != sh {
                    prop_assert_eq!(sh_state, &before.shards()[i]);
                }
            }
            let now = st.best_prefixes();
            prop_assert!(now.iter().zip(&prev).all(|(a, b)| a <= b));
            prop_assert!(!(st.system_alive() && !prev_alive));
            prev = now;
            prev_alive = st.system_alive();
        }
    }

    #[test]
    fn single_identity_variant_matches_sisa(
        m in 1usize..=6, l in 1usize..=12,
        hits in prop::collection::vec((0usize..6, 0usize..12), 0..60),
    ) {
        let plan = SelectionPlan::new(SelectionMethod::Explicit, vec![Permutation::identity(l)]).unwrap();
        let mut s3t = init(m, l, 1, Mode::S3t, PlanSource::Explicit(vec![plan]), 0);
        let mut sisa = init(m, l, 1, Mode::Sisa, SelectionMethod::Cyclic.into(), 0);
        for (sh, sl) in hits {
            let a = s3t.apply_deletion(target(sh % m, sl % l)).unwrap();
            let b = sisa.apply_deletion(target(sh % m, sl % l)).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(s3t.best_prefixes(), sisa.best_prefixes());
            for i in 0..m {
                prop_assert_eq!(sisa.sisa_checkpoint_prefix(ShardIndex(i)).unwrap(), sisa.best_prefixes()[i]);
            }
        }
    }

    #[test]
    fn pure_and_mutating_paths_agree((m, l, b, kind, seed) in config(), hits in prop::collection::vec((0usize..8, 0usize..16), 0..40)) {
        let mut cfg = InitConfig::new(m, l, Budget::new(b).unwrap(), Mode::S3t, plan_of(kind));
        cfg.seed = seed;
        cfg.priors = Some(vec![s3t_core::DeletionPrior::uniform(l)]);
        let mut st = initialize(&cfg).unwrap();
        let mut pure = st.clone();
        for (sh, sl) in hits {
            let ev = st.apply_deletion(target(sh % m, sl % l)).unwrap();
            let (next, ev2) = pure.with_deletion(target(sh % m, sl % l)).unwrap();
            prop_assert_eq!(ev, ev2);
            pure = next;
        }
        prop_assert_eq!(st, pure);
    }
}

#[test]
fn workflow_shard_of_cyclic_four() {
    let st = init(3, 4, 4, Mode::S3t, SelectionMethod::Cyclic.into(), 0);
    let expected = [[0, 1, 2, 3], [3, 0, 1, 2], [2, 3, 0, 1], [1, 2, 3, 0]];
    for sh in st.shards() {
        let got: Vec<Vec<usize>> = sh.variants().iter().map(|v| v.perm().to_indices()).collect();
        assert_eq!(got, expected);
    }
}

#[test]
fn same_seed_same_serialization() {
    for method in [SelectionMethod::Random, SelectionMethod::Cyclic] {
        let a = init(4, 6, 3, Mode::S3t, method.into(), 99);
        let b = init(4, 6, 3, Mode::S3t, method.into(), 99);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn any_shard_fails_no_later_than_all_shards() {
    let mut all = init(3, 3, 2, Mode::S3t, SelectionMethod::Cyclic.into(), 0);
    let mut cfg = InitConfig::new(3, 3, Budget::new(2).unwrap(), Mode::S3t, SelectionMethod::Cyclic.into());
    cfg.failure = FailurePredicate::AnyShard;
    let mut any = initialize(&cfg).unwrap();
    let order = [(0, 0), (1, 2), (0, 2), (2, 0), (1, 0), (2, 2)];
    for (sh, sl) in order {
        all.apply_deletion(target(sh, sl)).unwrap();
        any.apply_deletion(target(sh, sl)).unwrap();
        assert!(all.system_alive() || !any.system_alive());
    }
    assert!(!any.system_alive());
}

#[test]
fn item_deletions_poison_whole_slice() {
    let manifest = partition(60, 2, 3, PartitionPolicy::RoundRobin, 0).unwrap();
    let mut cfg = InitConfig::new(2, 3, Budget::new(3).unwrap(), Mode::S3t, SelectionMethod::Cyclic.into());
    cfg.manifest = Some(manifest.clone());
    let mut st = initialize(&cfg).unwrap();
    let (sh, sl) = manifest.locate(17).unwrap();
    let ev = st.apply_deletion(DeletionTarget::Item(17)).unwrap();
    assert_eq!(ev.newly_dead_variants, 1);
    assert!(st.shards()[sh.get()].deleted_slices().contains(&sl));
    // A second item of the same slice changes no variant.
    let sibling = (0..60).find(|&i| i != 17 && manifest.locate(i) == Some((sh, sl))).unwrap();
    let ev = st.apply_deletion(DeletionTarget::Item(sibling)).unwrap();
    assert_eq!(ev.newly_dead_variants, 0);
    assert!(st.apply_deletion(DeletionTarget::Item(17)).is_err());
    assert!(st.apply_deletion(DeletionTarget::Item(60)).is_err());
    st.check_invariants().unwrap();
}
