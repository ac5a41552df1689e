//! Sweep analysis: crossing tables per threshold, seed aggregates, `N_c`,
//! `N*` and `N_max`, epoch-normalized times, per-run component series with
//! the train-random gap, and the decomposition residual.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sweetspot_core::timing::{
    critical_size, crossing_time, decomposition_residual, gap_series, sweet_spot, to_epochs, AccuracySeries,
    AggregationRule, Source, SweepSummary,
};

use crate::config::Config;
use crate::error::{LabError, Result};
use crate::metrics::read_metrics;
use crate::runner::{read_manifest, ManifestRow, CONFIG_FILE, MANIFEST_FILE, METRICS_FILE};

pub const DEFAULT_TAUS: [f64; 4] = [0.3, 0.6, 0.9, 0.98];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub taus: Vec<f64>,
    pub rule: AggregationRule,
    /// The decomposition residual covers samples up to the first with
    /// `A_V >= until_val`.
    pub until_val: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { taus: DEFAULT_TAUS.to_vec(), rule: AggregationRule::default(), until_val: 0.5 }
    }
}

pub fn parse_taus(text: &str) -> Result<Vec<f64>> {
    let taus = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| LabError::Config(format!("bad threshold {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if taus.is_empty() || taus.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(LabError::Config(format!("thresholds must lie in (0, 1): {text}")));
    }
    Ok(taus)
}

/// One analysed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub row: ManifestRow,
    pub config: Config,
    pub a_t: AccuracySeries,
    pub a_v: AccuracySeries,
    pub a_r: Option<AccuracySeries>,
}

/// Runs sharing a task, size and depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub task: String,
    pub size: usize,
    pub depth: usize,
    pub effective_batch: u64,
    pub summary: SweepSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub runs: Vec<RunSeries>,
    pub groups: Vec<Group>,
    pub skipped: Vec<ManifestRow>,
    pub options: AnalysisOptions,
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn load_runs(runs_dir: &Path) -> Result<(Vec<RunSeries>, Vec<ManifestRow>)> {
    let rows = read_manifest(&runs_dir.join(MANIFEST_FILE))?;
    let (mut runs, mut skipped) = (Vec::new(), Vec::new());
    for row in rows {
        if !row.status.completed() {
            skipped.push(row);
            continue;
        }
        let dir = runs_dir.join(&row.run_dir);
        let cfg_path = dir.join(CONFIG_FILE);
        let text = fs::read_to_string(&cfg_path).map_err(LabError::io(&cfg_path))?;
        let config: Config = text.parse()?;
        let metrics = read_metrics(&dir.join(METRICS_FILE))?;
        let (a_t, a_v, a_r) = metrics.components(config.max_updates)?;
        runs.push(RunSeries { row, config, a_t, a_v, a_r });
    }
    Ok((runs, skipped))
}

pub fn analyze_runs(runs: Vec<RunSeries>, skipped: Vec<ManifestRow>, options: AnalysisOptions) -> Result<Analysis> {
    let mut groups: BTreeMap<(String, usize, usize), Group> = BTreeMap::new();
    for run in &runs {
        let c = &run.config;
        let group = groups.entry((c.task.clone(), c.size, c.depth)).or_insert_with(|| Group {
            task: c.task.clone(),
            size: c.size,
            depth: c.depth,
            effective_batch: (c.micro_batch * c.accumulation) as u64,
            summary: SweepSummary::new(),
        });
        let n = c.n as u64;
        group.summary.add_size(n);
        for &tau in &options.taus {
            for (series, source) in [(&run.a_t, Source::Train), (&run.a_v, Source::Validation)] {
                let record = crossing_time(series, tau, source)
                    .map_err(|e| LabError::Data(format!("{}: {e}", run.row.run_id)))?;
                group.summary.insert(n, c.seed, record);
            }
        }
    }
    Ok(Analysis { runs, groups: groups.into_values().collect(), skipped, options })
}

pub fn analyze(runs_dir: &Path, options: AnalysisOptions) -> Result<Analysis> {
    let (runs, skipped) = load_runs(runs_dir)?;
    if runs.is_empty() {
        return Err(LabError::Data(format!("no completed runs under {}", runs_dir.display())));
    }
    analyze_runs(runs, skipped, options)
}

pub const SUMMARY_HEADER: &str = "task,size,depth,N,tau,source,mean_crossing,sd,n_censored,n_seeds,cell_censored";
pub const SUMMARY_EPOCHS_HEADER: &str =
    "task,size,depth,N,tau,source,mean_crossing_epochs,sd_epochs,n_censored,n_seeds,cell_censored";
pub const DERIVED_HEADER: &str = "task,size,depth,tau,N_c,N_star,N_max,crossing_at_N_star";
pub const RUNS_HEADER: &str =
    "run_id,task,size,depth,N,seed,status,updates,final_A_T,final_A_V,final_A_R,decomposition_residual";
pub const CROSSINGS_HEADER: &str = "run_id,depth,N,seed,tau,source,crossing";
pub const SERIES_HEADER: &str = "t,A_T,A_V,A_R,G";

impl Analysis {
    pub fn summary_csv(&self, epochs: bool) -> String {
        let mut out = format!("{}\n", if epochs { SUMMARY_EPOCHS_HEADER } else { SUMMARY_HEADER });
        for g in &self.groups {
            for &n in g.summary.sizes() {
                let scale = |t: f64| if epochs { t * g.effective_batch as f64 / n as f64 } else { t };
                for &tau in &self.options.taus {
                    for source in [Source::Validation, Source::Train] {
                        let a = g.summary.aggregate(n, tau, source, self.options.rule);
                        let _ = writeln!(
                            out,
                            "{},{},{},{n},{tau},{},{},{},{},{},{}",
                            g.task,
                            g.size,
                            g.depth,
                            source.name(),
                            fmt_opt(a.mean.map(scale)),
                            fmt_opt(a.sd.map(scale)),
                            a.n_censored,
                            a.n_seeds,
                            a.censored
                        );
                    }
                }
            }
        }
        out
    }

    pub fn derived_csv(&self) -> String {
        let mut out = format!("{DERIVED_HEADER}\n");
        for g in &self.groups {
            for &tau in &self.options.taus {
                let nc = critical_size(&g.summary, tau, self.options.rule);
                let ns = sweet_spot(&g.summary, tau, self.options.rule);
                let at = ns.and_then(|n| g.summary.aggregate(n, tau, Source::Validation, self.options.rule).mean);
                let _ = writeln!(
                    out,
                    "{},{},{},{tau},{},{},{},{}",
                    g.task,
                    g.size,
                    g.depth,
                    fmt_opt(nc),
                    fmt_opt(ns),
                    fmt_opt(g.summary.n_max()),
                    fmt_opt(at)
                );
            }
        }
        out
    }

    pub fn crossings_csv(&self) -> Result<String> {
        let mut out = format!("{CROSSINGS_HEADER}\n");
        for run in &self.runs {
            for &tau in &self.options.taus {
                for (series, source) in [(&run.a_v, Source::Validation), (&run.a_t, Source::Train)] {
                    let r = crossing_time(series, tau, source).map_err(|e| LabError::Data(e.to_string()))?;
                    let c = &run.config;
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{tau},{},{}",
                        run.row.run_id,
                        c.depth,
                        c.n,
                        c.seed,
                        source.name(),
                        fmt_opt(r.time)
                    );
                }
            }
        }
        Ok(out)
    }

    pub fn runs_csv(&self) -> Result<String> {
        let mut out = format!("{RUNS_HEADER}\n");
        for run in &self.runs {
            let last = |s: &AccuracySeries| s.points.last().map(|p| p.1);
            let residual = match &run.a_r {
                Some(a_r) => Some(
                    decomposition_residual(&run.a_t, a_r, &run.a_v, self.options.until_val)
                        .map_err(|e| LabError::Data(format!("{}: {e}", run.row.run_id)))?,
                ),
                None => None,
            };
            let c = &run.config;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                run.row.run_id,
                c.task,
                c.size,
                c.depth,
                c.n,
                c.seed,
                run.row.status,
                run.row.updates,
                fmt_opt(last(&run.a_t)),
                fmt_opt(last(&run.a_v)),
                fmt_opt(run.a_r.as_ref().and_then(last)),
                fmt_opt(residual)
            );
        }
        Ok(out)
    }

    pub fn series_csv(&self, run: &RunSeries) -> Result<String> {
        let gap = match &run.a_r {
            Some(a_r) => {
                Some(gap_series(&run.a_t, a_r).map_err(|e| LabError::Data(format!("{}: {e}", run.row.run_id)))?)
            }
            None => None,
        };
        if !run.a_t.times().eq(run.a_v.times()) {
            return Err(LabError::Data(format!("{}: train and validation grids differ", run.row.run_id)));
        }
        let mut out = format!("{SERIES_HEADER}\n");
        for (k, (&(t, a_t), &(_, a_v))) in run.a_t.points.iter().zip(&run.a_v.points).enumerate() {
            let a_r = run.a_r.as_ref().map(|s| s.points[k].1);
            let g = gap.as_ref().map(|g| g[k].1);
            let _ = writeln!(out, "{t},{a_t},{a_v},{},{}", fmt_opt(a_r), fmt_opt(g));
        }
        Ok(out)
    }

    pub fn meta_text(&self, runs_dir: &Path) -> String {
        let mut m = String::new();
        let taus: Vec<String> = self.options.taus.iter().map(f64::to_string).collect();
        let _ = writeln!(m, "runs_dir = {}", runs_dir.display());
        let _ = writeln!(m, "taus = {}", taus.join(","));
        let _ = writeln!(m, "aggregation_rule = {}", self.options.rule.name());
        let _ = writeln!(
            m,
            "aggregation = a cell is non-censored under the rule; mean and population sd over crossing seeds"
        );
        let _ = writeln!(
            m,
            "crossing = first evaluation with accuracy >= tau, no interpolation; censored if none within budget"
        );
        let _ = writeln!(m, "sweet_spot_ties = smaller N");
        let _ = writeln!(m, "decomposition_until_val = {}", self.options.until_val);
        let _ = writeln!(m, "runs_analyzed = {}", self.runs.len());
        let skipped: Vec<String> = self.skipped.iter().map(|r| format!("{}:{}", r.run_id, r.status)).collect();
        let _ = writeln!(m, "runs_skipped = {}", skipped.join(","));
        for g in &self.groups {
            let budget = self.runs.iter().filter(|r| r.config.depth == g.depth).map(|r| r.config.max_updates).max();
            let _ = writeln!(
                m,
                "group {}{} depth {} = sizes {:?}, effective batch {}, budget {}",
                g.task,
                g.size,
                g.depth,
                g.summary.sizes(),
                g.effective_batch,
                fmt_opt(budget)
            );
        }
        m
    }

    /// Writes every analysis file under `out`.
    pub fn write(&self, runs_dir: &Path, out: &Path) -> Result<Vec<PathBuf>> {
        let series_dir = out.join("series");
        fs::create_dir_all(&series_dir).map_err(LabError::io(&series_dir))?;
        let mut written = Vec::new();
        let mut put = |path: PathBuf, text: String| -> Result<()> {
            fs::write(&path, text).map_err(LabError::io(&path))?;
            written.push(path);
            Ok(())
        };
        put(out.join("summary.csv"), self.summary_csv(false))?;
        put(out.join("summary_epochs.csv"), self.summary_csv(true))?;
        put(out.join("derived.csv"), self.derived_csv())?;
        put(out.join("crossings.csv"), self.crossings_csv()?)?;
        put(out.join("runs.csv"), self.runs_csv()?)?;
        put(out.join("meta.txt"), self.meta_text(runs_dir))?;
        for run in &self.runs {
            put(series_dir.join(format!("{}.csv", run.row.run_id)), self.series_csv(run)?)?;
        }
        Ok(written)
    }
}

/// Epochs for a crossing time of a given run.
pub fn epochs_of(t: u64, config: &Config) -> f64 {
    to_epochs(t, config.n as u64, (config.micro_batch * config.accumulation) as u64)
}
