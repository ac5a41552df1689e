use alloc::vec::Vec;

use super::*;
use crate::corpus::{DatasetSplit, TaskSpec};
use crate::model::greedy_decode_with;
use crate::tokenizer::Vocabulary;

fn setup(spec: TaskSpec, n: usize, val: usize, seed: u64) -> (ModelConfig, TrainData) {
    let vocab = Vocabulary::build(&spec);
    let split = DatasetSplit::generate(&spec, n, val, seed, 99, 5).unwrap();
    let data = TrainData::from_split(&spec, &split, &vocab).unwrap();
    let model = ModelConfig {
        depth: 1,
        n_heads: 2,
        d_emb: 16,
        d_ff: 32,
        vocab_size: vocab.len(),
        max_seq_len: data.regions.total_len(),
        init_seed: seed,
    };
    (model, data)
}

fn small(max_updates: u64, eval_every: u64) -> TrainConfig {
    TrainConfig {
        micro_batch: 2,
        accumulation: 2,
        max_updates,
        eval_every,
        eval_train_subset: 6,
        eval_val_subset: 4,
        early_stop: None,
        ..TrainConfig::default()
    }
}

#[test]
fn defaults_match_the_protocol() {
    let c = TrainConfig::default();
    assert_eq!(c.effective_batch(), 160);
    assert_eq!((c.max_updates, c.eval_every), (50_000, 100));
    assert_eq!(c.early_stop, Some(EarlyStop { threshold: 0.999, patience: 5 }));
    assert!(c.validate().is_ok());
    assert!(TrainConfig { eval_every: 300, max_updates: 1000, ..c.clone() }.validate().is_err());
    assert!(TrainConfig { micro_batch: 0, ..c }.validate().is_err());
}

#[test]
fn records_land_on_the_eval_grid() {
    let (model, data) = setup(TaskSpec::nw(1), 8, 4, 1);
    let mut trainer = Trainer::new(small(300, 100), &model, data, 1).unwrap();
    let mut seen = Vec::new();
    let result = trainer
        .run(|_, r| {
            seen.push(r.t);
            Ok(())
        })
        .unwrap();
    assert_eq!(seen, [100, 200, 300]);
    assert_eq!(result.records.iter().map(|r| r.t).collect::<Vec<_>>(), seen);
    assert_eq!(result.updates, 300);
    for r in &result.records {
        for m in [r.train, r.validation] {
            for a in [m.exact_match, m.token_accuracy, m.teacher_forced_accuracy] {
                assert!((0.0..=1.0).contains(&a));
            }
            assert_eq!(m.suffix_exact_match, None);
        }
        assert!(r.loss.is_finite());
    }
}

#[test]
fn identical_seeds_replay_exactly() {
    let go = || {
        let (model, data) = setup(TaskSpec::nw(1).with_suffix(4), 10, 4, 3);
        let mut t = Trainer::new(small(40, 10), &model, data, 3).unwrap();
        let r = t.run(|_, _| Ok(())).unwrap();
        (r, t.params().flat())
    };
    let (a, pa) = go();
    let (b, pb) = go();
    assert_eq!(a, b);
    assert_eq!(pa.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), pb.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
}

#[test]
fn restore_continues_the_same_trajectory() {
    let (model, data) = setup(TaskSpec::nw(1), 10, 4, 2);
    let mut whole = Trainer::new(small(40, 10), &model, data.clone(), 2).unwrap();
    let expected = whole.run(|_, _| Ok(())).unwrap();

    let mut first = Trainer::new(small(40, 10), &model, data.clone(), 2).unwrap();
    for _ in 0..17 {
        first.update().unwrap();
        if first.t().is_multiple_of(10) {
            first.record().unwrap();
        }
    }
    let mut second = Trainer::restore(small(40, 10), &model, data, 2, first.snapshot()).unwrap();
    assert_eq!(second.t(), 17);
    assert_eq!(second.run(|_, _| Ok(())).unwrap(), expected);
    assert_eq!(second.params(), whole.params());
}

#[test]
fn budget_exhaustion_is_censoring() {
    let (model, data) = setup(TaskSpec::nw(1), 8, 4, 4);
    let mut t = Trainer::new(small(20, 10), &model, data.clone(), 4).unwrap();
    let r = t.run(|_, _| Ok(())).unwrap();
    assert!(r.censored && !r.early_stopped);

    let always = EarlyStop { threshold: 0.0, patience: 2 };
    let cfg = TrainConfig { early_stop: Some(always), ..small(100, 10) };
    let mut t = Trainer::new(cfg, &model, data, 4).unwrap();
    let r = t.run(|_, _| Ok(())).unwrap();
    assert!(r.early_stopped && !r.censored);
    assert_eq!(r.updates, 20);
    assert_eq!(r.records.len(), 2);
}

#[test]
fn unfinished_run_is_not_censored() {
    let (model, data) = setup(TaskSpec::nw(1), 8, 4, 4);
    let mut t = Trainer::new(small(20, 10), &model, data, 4).unwrap();
    t.update().unwrap();
    assert!(!t.result().censored);
}

#[test]
fn shuffled_epochs_visit_every_example_once() {
    let (model, data) = setup(TaskSpec::nw(1), 10, 4, 6);
    let mut t = Trainer::new(small(10, 10), &model, data, 6).unwrap();
    for e in 0..3u64 {
        let mut seen: Vec<usize> = (0..10).map(|i| t.example_at(e * 10 + i)).collect();
        let order = seen.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        if e > 0 {
            let prev: Vec<usize> = (0..10).map(|i| t.example_at((e - 1) * 10 + i)).collect();
            assert_ne!(order, prev);
        }
    }
}

#[test]
fn eval_subsets_are_fixed_per_seed() {
    let (model, data) = setup(TaskSpec::nw(2), 50, 30, 7);
    let cfg = TrainConfig { eval_train_subset: 20, eval_val_subset: 10, ..small(10, 10) };
    let a = Trainer::new(cfg.clone(), &model, data.clone(), 7).unwrap();
    let b = Trainer::new(cfg.clone(), &model, data.clone(), 7).unwrap();
    let c = Trainer::new(cfg, &model, data, 8).unwrap();
    assert_eq!(a.eval_subsets(), b.eval_subsets());
    assert_ne!(a.eval_subsets(), c.eval_subsets());
    assert_eq!((a.eval_subsets().0.len(), a.eval_subsets().1.len()), (20, 10));
}

#[test]
fn scoring_counts_whole_regions() {
    let spec = TaskSpec::nw(1).with_suffix(4);
    let (model, data) = setup(spec, 6, 2, 9);
    let params = Parameters::<f32>::init(&model).unwrap();
    let refs: Vec<&TokenizedExample> = data.train.iter().collect();
    let m = evaluate_exact_match(&params, &refs, &data.regions, &data.bit_ids).unwrap();
    let bits = m.suffix_bit_accuracy.unwrap();
    assert!((0.0..=1.0).contains(&bits));
    assert!(m.suffix_exact_match.unwrap() <= bits);
    assert!(m.exact_match <= m.token_accuracy);

    let mut shifted = data.regions;
    shifted.target.end += 1;
    assert!(matches!(evaluate_exact_match(&params, &refs, &shifted, &data.bit_ids), Err(TrainError::RegionOverlap(_))));
}

#[test]
fn suffix_is_decoded_over_bits() {
    let spec = TaskSpec::nw(1).with_suffix(4);
    let (model, data) = setup(spec, 12, 2, 10);
    let params = Parameters::<f32>::init(&model).unwrap();
    let prefixes: Vec<&[usize]> = data.train.iter().map(|e| e.prefix()).collect();
    let r = data.regions;
    let mut allowed: Vec<Option<&[usize]>> = vec![None; r.target.len()];
    allowed.resize(r.target.len() + r.suffix.len(), Some(&data.bit_ids));
    let out = greedy_decode_with(&params, &prefixes, allowed.len(), &allowed).unwrap();
    for seq in out {
        assert!(seq[r.suffix.range()].iter().all(|id| data.bit_ids.contains(id)));
    }
}

#[test]
fn untrained_suffix_accuracy_is_near_chance() {
    let spec = TaskSpec::nw(3).with_suffix(4);
    let mut total = 0.0;
    for seed in 0..3 {
        let (model, data) = setup(spec, 1000, 10, seed);
        let params = Parameters::<f32>::init(&model).unwrap();
        let refs: Vec<&TokenizedExample> = data.train.iter().collect();
        total +=
            evaluate_exact_match(&params, &refs, &data.regions, &data.bit_ids).unwrap().suffix_exact_match.unwrap();
    }
    let mean = total / 3.0;
    assert!((0.03..=0.11).contains(&mean), "A_R at init {mean}");
}
