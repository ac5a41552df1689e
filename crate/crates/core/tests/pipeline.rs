use sweetspot_core::corpus::{nw_matrix, nw_oracle_cell, DatasetSplit, ScoringScheme, TaskSpec, Universe};
use sweetspot_core::model::ModelConfig;
use sweetspot_core::timing::{crossing_time, AccuracySeries, Source};
use sweetspot_core::tokenizer::{decode, Vocabulary};
use sweetspot_core::train::{TrainConfig, TrainData, Trainer};

fn small_run(seed: u64) -> Vec<(u64, f64, f64)> {
    let spec = TaskSpec::nw(2).with_suffix(4);
    let vocab = Vocabulary::build(&spec);
    let split = DatasetSplit::generate(&spec, 48, 32, seed, 0, 1).unwrap();
    let data = TrainData::from_split(&spec, &split, &vocab).unwrap();
    let model = ModelConfig {
        depth: 1,
        n_heads: 2,
        d_emb: 32,
        d_ff: 64,
        ..ModelConfig::for_depth(1, vocab.len(), data.regions.total_len(), seed)
    };
    let config =
        TrainConfig { micro_batch: 4, accumulation: 2, max_updates: 60, eval_every: 20, ..TrainConfig::default() };
    let mut trainer = Trainer::new(config, &model, data, seed).unwrap();
    let result = trainer.run(|_, _| Ok(())).unwrap();
    assert!(result.censored && !result.early_stopped);
    result.records.iter().map(|r| (r.t, r.a_t(), r.a_v())).collect()
}

#[test]
fn split_to_crossings() {
    let records = small_run(2);
    assert_eq!(records.iter().map(|r| r.0).collect::<Vec<_>>(), [20, 40, 60]);
    assert_eq!(records, small_run(2));
    let series = AccuracySeries::new(records.iter().map(|r| (r.0, r.1)).collect(), 60).unwrap();
    let c = crossing_time(&series, 0.5, Source::Train).unwrap();
    assert!(c.time.is_none_or(|t| t % 20 == 0));
}

#[test]
fn tokenized_splits_decode_back() {
    let spec = TaskSpec::nw(3).with_suffix(4);
    let vocab = Vocabulary::build(&spec);
    let split = DatasetSplit::generate(&spec, 100, 50, 7, 0, 3).unwrap();
    let data = TrainData::from_split(&spec, &split, &vocab).unwrap();
    for (tok, ex) in data.train.iter().zip(&split.train) {
        assert_eq!(&decode(tok, &vocab).unwrap(), ex);
    }
}

#[test]
fn generator_matches_oracle_on_sampled_l4_pairs() {
    let s = ScoringScheme::default();
    let universe = Universe::new(4).unwrap();
    for index in (0..universe.size()).step_by(4099) {
        let pair = universe.pair(index).unwrap();
        let m = nw_matrix(&pair, &s);
        for i in 0..=4 {
            for j in 0..=4 {
                assert_eq!(m.get(i, j), nw_oracle_cell(&pair, &s, i, j, 4).unwrap());
            }
        }
    }
}
