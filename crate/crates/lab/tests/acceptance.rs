//! Acceptance gate. Prints one PASS or FAIL line per criterion and exits
//! non-zero if any fail.
//!
//! The end-to-end sweep trains six cells of 10,000 updates each (several
//! hours on one CPU core). It runs in a persistent directory,
//! `SWEETSPOT_MINI_SWEEP_DIR` or `target/acceptance/nw_l3_mini`, so an
//! interrupted or repeated run resumes and skips completed cells.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use sweetspot::analysis::{self, AnalysisOptions, SUMMARY_HEADER};
use sweetspot::config::{Config, SweepSpec};
use sweetspot::runner::{self, Status, METRICS_FILE, RESULT_FILE};
use sweetspot::{plot, verify};
use sweetspot_core::corpus::{
    nw_matrix, nw_oracle_cell, DatasetSplit, ScoreMatrix, ScoringScheme, SequencePair, TaskSpec,
};
use sweetspot_core::model::{ModelConfig, Parameters, RegionLoss};
use sweetspot_core::tensor::{grad_check, GradCheck, Real};
use sweetspot_core::timing::{
    aggregate_seeds, critical_size, crossing_time, gap_series, sweet_spot, to_epochs, AccuracySeries, AggregationRule,
    CrossingRecord, Source, SweepSummary,
};
use sweetspot_core::tokenizer::{encode, TokenizedExample, Vocabulary};
use sweetspot_core::train::{evaluate_exact_match, TrainConfig, TrainData, Trainer};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let scoring = ScoringScheme::default();
    let mut parts = Vec::new();
    for len in 1..=3 {
        let r = verify::verify(len, &scoring, 3).map_err(|e| e.to_string())?;
        verify::check(&r).map_err(|e| e.to_string())?;
        ensure(r.pairs == 1u128 << (4 * len), || format!("L = {len}: {} pairs", r.pairs))?;
        parts.push(format!("L={len}: {} pairs, {} cells", r.pairs, r.cells));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{}; 0 mismatches; {secs:.1} s", parts.join(", ")))
}

fn hand_values() -> Outcome {
    let s = ScoringScheme::default();
    let pair = |x: &str, y: &str| SequencePair::parse(x, y).map_err(|e| e.to_string());
    let cases: [(&str, &str, &[&[i32]]); 2] =
        [("A", "A", &[&[0, -5], &[-5, 5]]), ("AC", "AG", &[&[0, -5, -10], &[-5, 5, 0], &[-10, 0, 1]])];
    for (x, y, rows) in cases {
        let got = nw_matrix(&pair(x, y)?, &s);
        ensure(got == ScoreMatrix::from_rows(rows), || format!("{x}/{y}: {got:?}"))?;
    }
    let oracle = |x: &str, y: &str, i, j| -> Result<i32, String> {
        nw_oracle_cell(&pair(x, y)?, &s, i, j, 3).map_err(|e| e.to_string())
    };
    ensure(oracle("A", "C", 1, 1)? == -4, || "oracle A/C (1, 1)".into())?;
    ensure(oracle("ACG", "TTT", 0, 3)? == -15, || "oracle (0, 3)".into())?;
    ensure(oracle("AC", "AG", 2, 2)? == 1, || "oracle AC/AG (2, 2)".into())?;
    let same = nw_matrix(&pair("GATTACA", "GATTACA")?, &s);
    ensure((0..=7).all(|i| same.get(i, i) == 5 * i as i32), || "identical-string diagonal".into())?;
    ensure(nw_matrix(&pair("ACGTA", "TTGCA")?, &s).dim() == 6, || "L = 5 dimension".into())?;
    Ok("L=1 and L=2 matrices, oracle cells, diagonal and 6x6 shape match".into())
}

fn model_gradient<F: Real>(cfg: &GradCheck) -> Result<sweetspot_core::tensor::GradCheckReport, String> {
    let spec = TaskSpec::nw(2).with_suffix(4);
    let vocab = Vocabulary::build(&spec);
    let ex: Vec<TokenizedExample> =
        [3u128, 77, 190].iter().map(|&i| encode(&spec.example_with_suffix(i, 2).unwrap(), &vocab).unwrap()).collect();
    let config = ModelConfig {
        depth: 1,
        n_heads: 2,
        d_emb: 16,
        d_ff: 64,
        vocab_size: vocab.len(),
        max_seq_len: ex[0].ids.len(),
        init_seed: 4,
    };
    let mut params = Parameters::<F>::init(&config).map_err(|e| e.to_string())?;
    // Start away from the init so gains and biases have generic gradients.
    let mut k = 0u64;
    for t in &mut params.tensors {
        for x in t.data_mut() {
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *x += F::from_f64(((k >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.4);
        }
    }
    let seqs: Vec<&[usize]> = ex.iter().map(|e| e.ids.as_slice()).collect();
    let f = RegionLoss { config: &config, seqs: &seqs, regions: &ex[0].regions };
    grad_check(&f, &params.tensors, cfg).map_err(|e| e.to_string())
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let r32 = model_gradient::<f32>(&GradCheck { eps: 1e-3, tol: 1e-2, floor: 1e-6, sample: Some(64), seed: 21 })?;
    let r64 = model_gradient::<f64>(&GradCheck { eps: 1e-4, tol: 1e-5, floor: 1e-8, sample: Some(64), seed: 21 })?;
    for (name, r, tol) in [("f32", &r32, 1e-2), ("f64", &r64, 1e-5)] {
        ensure(r.checked >= 50 && r.passed && r.max_rel_error < tol, || format!("{name}: {r:?}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "{} coords; max rel err f32 {:.2e} (< 1e-2), f64 {:.2e} (< 1e-5); {secs:.1} s",
        r32.checked, r32.max_rel_error, r64.max_rel_error
    ))
}

fn overfit_smoke() -> Outcome {
    let spec = TaskSpec::nw(2);
    let vocab = Vocabulary::build(&spec);
    let mut solved = Vec::new();
    for seed in 0..3u64 {
        let split = DatasetSplit::generate(&spec, 32, 32, seed, 0, 0).map_err(|e| e.to_string())?;
        let data = TrainData::from_split(&spec, &split, &vocab).map_err(|e| e.to_string())?;
        let model = ModelConfig::for_depth(2, vocab.len(), data.regions.total_len(), seed);
        let config = TrainConfig {
            max_updates: 5000,
            eval_every: 25,
            eval_train_subset: 32,
            eval_val_subset: 32,
            early_stop: None,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(config, &model, data, seed).map_err(|e| e.to_string())?;
        let mut at = None;
        while trainer.t() < 5000 {
            trainer.update().map_err(|e| e.to_string())?;
            if trainer.t() % 25 == 0 && trainer.evaluate().map_err(|e| e.to_string())?.0.exact_match == 1.0 {
                at = Some(trainer.t());
                break;
            }
        }
        solved.push(at);
    }
    let text = solved.iter().map(|s| s.map_or("never".into(), |t| t.to_string())).collect::<Vec<_>>().join(", ");
    ensure(solved.iter().all(Option::is_some), || format!("train exact match 1.0 at updates [{text}]"))?;
    Ok(format!("3/3 seeds reach train exact match 1.0 at updates [{text}]"))
}

fn timing_suite() -> Outcome {
    let series = |pts: &[(u64, f64)]| AccuracySeries::new(pts.to_vec(), 50_000).unwrap();
    let s = series(&[(100, 0.1), (200, 0.5), (300, 0.99)]);
    let cross = |s: &AccuracySeries, tau| crossing_time(s, tau, Source::Validation).unwrap().time;
    ensure(cross(&s, 0.98) == Some(300) && cross(&s, 0.5) == Some(200), || "crossing examples".into())?;
    ensure(cross(&series(&[(100, 0.3), (200, 0.9)]), 0.98).is_none(), || "censoring".into())?;

    let mut table = SweepSummary::new();
    for (n, t) in [(200, None), (500, Some(40_000)), (1000, Some(12_000)), (10_000, Some(30_000))] {
        table.insert(n, 0, CrossingRecord { tau: 0.98, time: t, source: Source::Validation });
    }
    let rule = AggregationRule::Majority;
    let (nc, ns, nmax) = (critical_size(&table, 0.98, rule), sweet_spot(&table, 0.98, rule), table.n_max());
    ensure((nc, ns, nmax) == (Some(500), Some(1000), Some(10_000)), || format!("N_c {nc:?} N* {ns:?} N_max {nmax:?}"))?;
    ensure(nc < ns && ns < nmax, || "interior ordering".into())?;
    let mut censored = SweepSummary::new();
    censored.insert(200, 0, CrossingRecord { tau: 0.98, time: None, source: Source::Validation });
    ensure(critical_size(&censored, 0.98, rule).is_none(), || "all censored must be undefined".into())?;

    let rec = |t: Option<u64>| CrossingRecord { tau: 0.9, time: t, source: Source::Validation };
    let five: Vec<_> = [10_000, 12_000, 14_000, 11_000, 13_000].iter().map(|&t| rec(Some(t))).collect();
    let agg = aggregate_seeds(&five, rule);
    let sd = agg.sd.unwrap_or(f64::NAN);
    ensure(agg.mean == Some(12_000.0) && (sd - 2f64.sqrt() * 1000.0).abs() < 1e-9, || format!("{agg:?}"))?;
    let mixed = [rec(Some(1)), rec(None), rec(Some(2)), rec(None), rec(None)];
    let agg = aggregate_seeds(&mixed, rule);
    ensure(agg.censored && agg.n_censored == 3, || format!("{agg:?}"))?;
    let one = aggregate_seeds(&[rec(Some(700))], rule);
    ensure(one.mean == Some(700.0) && one.sd == Some(0.0), || format!("{one:?}"))?;

    ensure(to_epochs(1000, 2000, 160) == 80.0 && to_epochs(0, 2000, 160) == 0.0, || "epoch examples".into())?;
    for t in (0..=50_000).step_by(100) {
        ensure(to_epochs(t, 160, 160) == t as f64, || format!("epochs at N = 160, t = {t}"))?;
        ensure(to_epochs(t, 2000, 160) == t as f64 * 160.0 / 2000.0, || format!("epoch identity at t = {t}"))?;
    }

    let a_t = series(&[(100, 0.7), (200, 0.5)]);
    let a_r = series(&[(100, 0.4), (200, 0.5)]);
    let g = gap_series(&a_t, &a_r).unwrap();
    ensure((g[0].1 - 0.3).abs() < 1e-12 && g[1].1 == 0.0, || format!("gap {g:?}"))?;

    let pts: Vec<(u64, f64)> = (1..=60).map(|i| (100 * i, ((i * 37 % 101) as f64 / 100.0).min(1.0))).collect();
    let wiggly = series(&pts);
    let mut last = 0;
    for k in 1..100 {
        let tau = k as f64 / 100.0;
        let r = crossing_time(&wiggly, tau, Source::Train).unwrap();
        ensure(r.key() >= last, || format!("monotonicity at tau {tau}"))?;
        if let Some(t) = r.time {
            ensure(pts.iter().filter(|p| p.0 < t).all(|p| p.1 < tau), || format!("minimality at tau {tau}"))?;
        }
        last = r.key();
    }
    Ok("crossings, censoring, N_c < N* < N_max, seed aggregation, epochs = t*160/N, gap and tau-monotonicity".into())
}

fn replay_config() -> Config {
    Config {
        size: 2,
        n: 64,
        val_size: 64,
        depth: 1,
        seed: 3,
        max_updates: 300,
        eval_every: 50,
        checkpoint_every: 100,
        deterministic: true,
        ..Config::default()
    }
}

fn deterministic_replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = replay_config();
    let mut logs = Vec::new();
    for name in ["first", "second"] {
        let run = dir.path().join(name);
        runner::run_cell(&config, &run, |_| {}).map_err(|e| e.to_string())?;
        logs.push(fs::read(run.join(METRICS_FILE)).map_err(|e| e.to_string())?);
    }
    ensure(logs[0] == logs[1], || "metrics logs differ".into())?;
    let rows = logs[0].iter().filter(|&&b| b == b'\n').count();
    Ok(format!("two {}-update runs give byte-identical metrics.csv ({rows} lines)", config.max_updates))
}

fn suffix_chance() -> Outcome {
    let spec = TaskSpec::nw(3).with_suffix(4);
    let vocab = Vocabulary::build(&spec);
    let mut values = Vec::new();
    for seed in 0..3u64 {
        let split = DatasetSplit::generate(&spec, 1000, 16, seed, 0, seed).map_err(|e| e.to_string())?;
        let data = TrainData::from_split(&spec, &split, &vocab).map_err(|e| e.to_string())?;
        let model = ModelConfig::for_depth(2, vocab.len(), data.regions.total_len(), seed);
        let params = Parameters::<f32>::init(&model).map_err(|e| e.to_string())?;
        let refs: Vec<&TokenizedExample> = data.train.iter().collect();
        let m = evaluate_exact_match(&params, &refs, &data.regions, &data.bit_ids).map_err(|e| e.to_string())?;
        values.push(m.suffix_exact_match.ok_or("no suffix metric")?);
    }
    let mean = values.iter().sum::<f64>() / 3.0;
    let text = values.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ");
    ensure((0.03..=0.11).contains(&mean), || format!("mean A_R {mean:.4} from [{text}]"))?;
    Ok(format!("mean A_R at init {mean:.4} in [0.03, 0.11]; per seed [{text}] over 1000 examples"))
}

fn mini_sweep() -> Outcome {
    let root = std::env::var_os("SWEETSPOT_MINI_SWEEP_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace().join("target/acceptance/nw_l3_mini"));
    let sweep = SweepSpec::load(&workspace().join("configs/nw_l3_mini.toml"), &[]).map_err(|e| e.to_string())?;
    let shape = sweep.cells.iter().all(|c| c.task == "nw" && c.size == 3 && c.depth == 2 && c.max_updates == 10_000);
    ensure(sweep.cells.len() == 9 && shape, || "mini sweep config drifted".into())?;
    let rows = runner::run_sweep(&sweep, &root, 1, &|line| eprintln!("{line}")).map_err(|e| e.to_string())?;

    let mut counts = [0usize; 3];
    for (row, cell) in rows.iter().zip(&sweep.cells) {
        match row.status {
            Status::Done => counts[0] += 1,
            Status::CensoredBudget => counts[1] += 1,
            Status::Failed => counts[2] += 1,
            other => return Err(format!("{}: status {}", row.run_id, other.name())),
        }
        if row.status == Status::Failed {
            ensure(cell.n + cell.val_size > 4096, || format!("{} failed: {}", row.run_id, row.detail))?;
            continue;
        }
        let result = fs::read_to_string(root.join(&row.run_dir).join(RESULT_FILE)).map_err(|e| e.to_string())?;
        let censored = result.contains("censored = true");
        ensure(censored == (row.status == Status::CensoredBudget), || format!("{}: result {result}", row.run_id))?;
        ensure(!censored || row.updates == 10_000, || format!("{}: censored after {}", row.run_id, row.updates))?;
        ensure(row.updates <= 10_000 && row.updates.is_multiple_of(100), || {
            format!("{}: {} updates", row.run_id, row.updates)
        })?;
    }
    ensure(counts[0] + counts[1] == 6 && counts[2] == 3, || format!("done/censored/failed = {counts:?}"))?;

    let out = root.join("analysis");
    let a = analysis::analyze(&root, AnalysisOptions::default()).map_err(|e| e.to_string())?;
    a.write(&root, &out).map_err(|e| e.to_string())?;
    let summary = fs::read_to_string(out.join("summary.csv")).map_err(|e| e.to_string())?;
    let mut lines = summary.lines();
    ensure(lines.next() == Some(SUMMARY_HEADER), || "summary header".into())?;
    let body: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    ensure(body.len() == 2 * 4 * 2, || format!("{} summary rows", body.len()))?;
    for r in &body {
        let (n_censored, n_seeds): (usize, usize) = (r[8].parse().unwrap_or(99), r[9].parse().unwrap_or(0));
        ensure(n_seeds == 3 && n_censored <= 3, || format!("row {r:?}"))?;
        ensure((r[10] == "true") == (2 * (3 - n_censored) <= 3), || format!("majority rule in {r:?}"))?;
        ensure((r[6].is_empty()) == (n_censored == 3), || format!("mean column in {r:?}"))?;
    }

    let figures = plot::plot(&out, &out.join("figures")).map_err(|e| e.to_string())?;
    let names: Vec<String> =
        figures.iter().filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned())).collect();
    for family in ["crossing_", "trajectory_", "gap_"] {
        let count = names.iter().filter(|f| f.starts_with(family)).count();
        ensure(count > 0, || format!("no {family}*.svg"))?;
    }
    for f in &figures {
        let text = fs::read_to_string(f).map_err(|e| e.to_string())?;
        ensure(text.starts_with("<svg") && text.contains("</svg>"), || format!("{} is not SVG", f.display()))?;
    }
    Ok(format!(
        "{} done, {} censored-budget, {} failed (oversubscribed); {} summary rows; {} figures in {}",
        counts[0],
        counts[1],
        counts[2],
        body.len(),
        figures.len(),
        root.display()
    ))
}

fn full_scale_manifest() -> Outcome {
    let sweep = SweepSpec::load(&workspace().join("configs/nw_l5_full.toml"), &[]).map_err(|e| e.to_string())?;
    let grid = [200, 500, 1000, 2000, 3000, 4000, 5000, 10_000, 50_000, 100_000];
    ensure(sweep.cells.len() == 4 * grid.len() * 5, || format!("{} cells", sweep.cells.len()))?;
    for depth in 3..=6 {
        let cells: Vec<&Config> = sweep.cells.iter().filter(|c| c.depth == depth).collect();
        let mut ns: Vec<usize> = cells.iter().map(|c| c.n).collect();
        ns.dedup();
        ensure(ns == grid, || format!("depth {depth}: N grid {ns:?}"))?;
        ensure(cells.len() == 50, || format!("depth {depth}: {} runs", cells.len()))?;
        for n in grid {
            let mut seeds: Vec<u64> = cells.iter().filter(|c| c.n == n).map(|c| c.seed).collect();
            seeds.sort();
            ensure(seeds == [0, 1, 2, 3, 4], || format!("depth {depth} N {n}: seeds {seeds:?}"))?;
        }
    }
    for c in &sweep.cells {
        let spec = c.task_spec().map_err(|e| e.to_string())?;
        let model = c.model_config(&spec);
        let t = c.train_config();
        let ok = c.task == "nw"
            && c.size == 5
            && t.max_updates == 50_000
            && t.eval_every == 100
            && t.effective_batch() == 160
            && (t.lr_max, t.lr_min) == (1e-3, 1e-4)
            && (t.optimizer.beta1, t.optimizer.beta2, t.optimizer.weight_decay) == (0.9, 0.99, 0.1)
            && model.d_emb == 64 * c.depth
            && model.d_ff == 4 * model.d_emb
            && model.n_heads == c.depth;
        ensure(ok, || format!("{} deviates from the protocol", c.run_id()))?;
    }
    Ok("configs/nw_l5_full.toml: 4 depths x 10 sizes x 5 seeds = 200 cells at 50,000 updates; not run here".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence L=1..3", oracle_equivalence),
        ("hand-value spot checks", hand_values),
        ("gradient fidelity", gradient_fidelity),
        ("overfit smoke", overfit_smoke),
        ("crossing-time unit suite", timing_suite),
        ("deterministic replay", deterministic_replay),
        ("suffix chance level", suffix_chance),
        ("end-to-end mini sweep", mini_sweep),
        ("full-scale manifest", full_scale_manifest),
    ];
    let only = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, check) in criteria {
        if only.as_deref().is_some_and(|o| !name.contains(o)) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
