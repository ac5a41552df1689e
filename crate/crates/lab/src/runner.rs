//! Single runs with checkpointing and resume, and the sweep executor that
//! fans cells out over threads and keeps `manifest.tsv` current.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use sweetspot_core::tokenizer::Vocabulary;
use sweetspot_core::train::{MetricsRecord, TrainData, TrainError, Trainer};

use crate::checkpoint::{self, Checkpoint};
use crate::config::{Config, SweepSpec};
use crate::error::{LabError, Result};
use crate::metrics::MetricsWriter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Stopped by the early-stop condition.
    Done,
    /// Spent the whole update budget.
    CensoredBudget,
    Failed,
    /// Not run yet (only seen while a sweep is in progress).
    Pending,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Done => "done",
            Status::CensoredBudget => "censored-budget",
            Status::Failed => "failed",
            Status::Pending => "pending",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Status::Done, Status::CensoredBudget, Status::Failed, Status::Pending].into_iter().find(|st| st.name() == s)
    }

    /// The run finished and its metrics are usable.
    pub fn completed(self) -> bool {
        matches!(self, Status::Done | Status::CensoredBudget)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const RESULT_FILE: &str = "result.toml";
pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: Status,
    pub updates: u64,
    pub wall_seconds: f64,
    pub param_count: usize,
    pub records: Vec<MetricsRecord>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(LabError::io(path))
}

/// Trains one config into `dir`, resuming from `dir/checkpoint.bin` when
/// it was written for the same config. `progress` sees every record.
pub fn run_cell(config: &Config, dir: &Path, mut progress: impl FnMut(&MetricsRecord)) -> Result<RunOutcome> {
    let started = Instant::now();
    fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    let echo = config.echo();
    write(&dir.join(CONFIG_FILE), &echo)?;
    let _ = fs::remove_file(dir.join(RESULT_FILE));

    let spec = config.task_spec()?;
    let split = config.split(&spec)?;
    let vocab = Vocabulary::build(&spec);
    let data = TrainData::from_split(&spec, &split, &vocab)?;
    let model = config.model_config(&spec);
    let train = config.train_config();

    let ckpt_path = dir.join(CHECKPOINT_FILE);
    let resumed = match checkpoint::load(&ckpt_path) {
        Ok(c) if c.config_echo == echo => Some(c.snapshot),
        _ => None,
    };
    let mut trainer = match resumed {
        Some(snapshot) => Trainer::restore(train, &model, data, config.seed, snapshot)?,
        None => Trainer::new(train, &model, data, config.seed)?,
    };

    let run_id = config.run_id();
    let metrics_path = dir.join(METRICS_FILE);
    let mut writer = MetricsWriter::create(&metrics_path, &run_id, trainer.records())?;
    let save = |trainer: &Trainer| {
        checkpoint::save(&ckpt_path, &Checkpoint { config_echo: echo.clone(), snapshot: trainer.snapshot() })
    };
    let every = config.checkpoint_every;
    let result = trainer.run(|trainer, record| {
        progress(record);
        if let Err(e) = writer.append(record) {
            let _ = save(trainer);
            return Err(TrainError::Sink(format!("{}: {e}", metrics_path.display())));
        }
        if record.t.is_multiple_of(every) || trainer.is_finished() {
            save(trainer).map_err(|e| TrainError::Sink(e.to_string()))?;
        }
        Ok(())
    })?;
    save(&trainer)?;

    let status = if result.early_stopped { Status::Done } else { Status::CensoredBudget };
    let outcome = RunOutcome {
        status,
        updates: result.updates,
        wall_seconds: started.elapsed().as_secs_f64(),
        param_count: model.param_count(),
        records: result.records,
    };
    write(
        &dir.join(RESULT_FILE),
        &format!(
            "run_id = \"{run_id}\"\nconfig_hash = \"{}\"\nstatus = \"{status}\"\nupdates = {}\ncensored = {}\nearly_stopped = {}\nparam_count = {}\nwall_seconds = {:.3}\n",
            config.hash(),
            outcome.updates,
            result.censored,
            result.early_stopped,
            outcome.param_count,
            outcome.wall_seconds,
        ),
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub run_id: String,
    pub config_hash: String,
    pub task: String,
    pub size: usize,
    pub n: usize,
    pub depth: usize,
    pub seed: u64,
    pub status: Status,
    pub updates: u64,
    pub wall_seconds: f64,
    /// Relative to the sweep directory.
    pub run_dir: String,
    pub detail: String,
}

pub const MANIFEST_HEADER: &str =
    "run_id\tconfig_hash\ttask\tsize\tn\tdepth\tseed\tstatus\tupdates\twall_seconds\trun_dir\tdetail";

impl ManifestRow {
    pub fn pending(config: &Config) -> Self {
        let run_id = config.run_id();
        Self {
            run_dir: format!("runs/{run_id}"),
            run_id,
            config_hash: config.hash(),
            task: config.task.clone(),
            size: config.size,
            n: config.n,
            depth: config.depth,
            seed: config.seed,
            status: Status::Pending,
            updates: 0,
            wall_seconds: 0.0,
            detail: String::new(),
        }
    }

    fn line(&self) -> String {
        let detail = self.detail.replace(['\t', '\n'], " ");
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{}\t{}",
            self.run_id,
            self.config_hash,
            self.task,
            self.size,
            self.n,
            self.depth,
            self.seed,
            self.status,
            self.updates,
            self.wall_seconds,
            self.run_dir,
            detail
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let bad = || LabError::Data(format!("malformed manifest row {line:?}"));
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 12 {
            return Err(bad());
        }
        Ok(Self {
            run_id: f[0].into(),
            config_hash: f[1].into(),
            task: f[2].into(),
            size: f[3].parse().map_err(|_| bad())?,
            n: f[4].parse().map_err(|_| bad())?,
            depth: f[5].parse().map_err(|_| bad())?,
            seed: f[6].parse().map_err(|_| bad())?,
            status: Status::parse(f[7]).ok_or_else(bad)?,
            updates: f[8].parse().map_err(|_| bad())?,
            wall_seconds: f[9].parse().map_err(|_| bad())?,
            run_dir: f[10].into(),
            detail: f[11].into(),
        })
    }
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut text = format!("{MANIFEST_HEADER}\n");
    for r in rows {
        text.push_str(&r.line());
        text.push('\n');
    }
    let tmp = path.with_extension("tmp");
    write(&tmp, &text)?;
    fs::rename(&tmp, path).map_err(LabError::io(path))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    if !path.exists() {
        return Err(LabError::MissingInput(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(LabError::io(path))?;
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(LabError::Data(format!("{}: unexpected header", path.display())));
    }
    lines.map(ManifestRow::parse).collect()
}

/// Parallel-cell count from `PARALLEL_CELLS`, if set.
pub fn parallel_from_env() -> Result<Option<usize>> {
    match std::env::var("PARALLEL_CELLS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&k| k > 0)
            .map(Some)
            .ok_or_else(|| LabError::Config(format!("PARALLEL_CELLS={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Runs every cell of `sweep` under `root`, `parallel` at a time. Cells
/// already completed under the same config hash are kept; failures are
/// recorded and never stop the sweep.
pub fn run_sweep(
    sweep: &SweepSpec,
    root: &Path,
    parallel: usize,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Vec<ManifestRow>> {
    fs::create_dir_all(root.join("runs")).map_err(LabError::io(root))?;
    write(&root.join(CONFIG_FILE), &sweep.echo())?;
    let manifest = root.join(MANIFEST_FILE);
    let previous: BTreeMap<String, ManifestRow> = match read_manifest(&manifest) {
        Ok(rows) => rows.into_iter().map(|r| (r.run_id.clone(), r)).collect(),
        Err(LabError::MissingInput(_)) => BTreeMap::new(),
        Err(e) => return Err(e),
    };
    let rows: Vec<ManifestRow> = sweep
        .cells
        .iter()
        .map(|c| {
            let fresh = ManifestRow::pending(c);
            match previous.get(&fresh.run_id) {
                Some(old)
                    if old.config_hash == fresh.config_hash
                        && old.status.completed()
                        && root.join(&old.run_dir).join(METRICS_FILE).exists() =>
                {
                    old.clone()
                }
                _ => fresh,
            }
        })
        .collect();
    let todo: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].status.completed()).collect();
    log(&format!("{} cells, {} already complete, {} to run", rows.len(), rows.len() - todo.len(), todo.len()));
    write_manifest(&manifest, &rows)?;

    let rows = Mutex::new(rows);
    let next = AtomicUsize::new(0);
    let workers = parallel.clamp(1, todo.len().max(1));
    let worker = || loop {
        let k = next.fetch_add(1, Ordering::SeqCst);
        let Some(&i) = todo.get(k) else { break };
        let cell = &sweep.cells[i];
        let run_id = cell.run_id();
        let dir: PathBuf = root.join("runs").join(&run_id);
        log(&format!("[{run_id}] start"));
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
            run_cell(cell, &dir, |r| {
                log(&format!("[{run_id}] t={} A_T={:.4} A_V={:.4} loss={:.4}", r.t, r.a_t(), r.a_v(), r.loss))
            })
        }));
        let mut rows = rows.lock().expect("manifest lock");
        let row = &mut rows[i];
        match outcome {
            Ok(Ok(out)) => {
                row.status = out.status;
                row.updates = out.updates;
                row.wall_seconds = out.wall_seconds;
                row.detail.clear();
            }
            Ok(Err(e)) => {
                row.status = Status::Failed;
                row.detail = e.to_string();
            }
            Err(p) => {
                row.status = Status::Failed;
                row.detail = panic_text(p);
            }
        }
        log(&format!("[{run_id}] {} {}", row.status, row.detail));
        if let Err(e) = write_manifest(&manifest, &rows) {
            log(&format!("manifest write failed: {e}"));
        }
    };
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(worker);
        }
    });
    let rows = rows.into_inner().expect("manifest lock");
    write_manifest(&manifest, &rows)?;
    Ok(rows)
}
