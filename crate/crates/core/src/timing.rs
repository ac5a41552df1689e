//! Threshold-crossing analysis over evaluation series: crossing times with
//! budget censoring, seed aggregation, critical size and sweet spot, the
//! train-random gap and epoch normalization.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimingError {
    #[error("accuracy series is empty")]
    EmptySeries,
    #[error("threshold {0} outside (0, 1)")]
    BadThreshold(f64),
    #[error("series sample grids differ")]
    GridMismatch,
    #[error("series is not strictly increasing in t or has accuracy outside [0, 1]")]
    Malformed,
}

/// Accuracy samples at the evaluation cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracySeries {
    pub points: Vec<(u64, f64)>,
    /// The run's update budget.
    pub budget: u64,
}

impl AccuracySeries {
    pub fn new(points: Vec<(u64, f64)>, budget: u64) -> Result<Self, TimingError> {
        let ordered = points.windows(2).all(|w| w[0].0 < w[1].0);
        let bounded = points.iter().all(|&(_, a)| (0.0..=1.0).contains(&a));
        if !ordered || !bounded {
            return Err(TimingError::Malformed);
        }
        Ok(Self { points, budget })
    }

    pub fn times(&self) -> impl Iterator<Item = u64> + '_ {
        self.points.iter().map(|&(t, _)| t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Train,
    Validation,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Train => "train",
            Source::Validation => "validation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Source::Train),
            "validation" => Some(Source::Validation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingRecord {
    pub tau: f64,
    /// First sampled update with accuracy >= tau; `None` when censored.
    pub time: Option<u64>,
    pub source: Source,
}

impl CrossingRecord {
    pub fn censored(&self) -> bool {
        self.time.is_none()
    }

    /// Ordering key with censored runs at +infinity.
    pub fn key(&self) -> u64 {
        self.time.unwrap_or(u64::MAX)
    }
}

/// First sample reaching `tau`, snapped to the evaluation grid. Samples
/// past the budget do not count.
pub fn crossing_time(series: &AccuracySeries, tau: f64, source: Source) -> Result<CrossingRecord, TimingError> {
    if series.points.is_empty() {
        return Err(TimingError::EmptySeries);
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(TimingError::BadThreshold(tau));
    }
    let time = series.points.iter().find(|&&(t, a)| t <= series.budget && a >= tau).map(|&(t, _)| t);
    Ok(CrossingRecord { tau, time, source })
}

/// How the seeds of one `(N, tau, source)` cell decide whether the cell as
/// a whole counts as crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregationRule {
    /// More than half of the seeds cross.
    #[default]
    Majority,
    Any,
    All,
}

impl AggregationRule {
    pub fn name(self) -> &'static str {
        match self {
            AggregationRule::Majority => "majority",
            AggregationRule::Any => "any",
            AggregationRule::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "majority" => Some(AggregationRule::Majority),
            "any" => Some(AggregationRule::Any),
            "all" => Some(AggregationRule::All),
            _ => None,
        }
    }

    fn crosses(self, crossing: usize, seeds: usize) -> bool {
        match self {
            AggregationRule::Majority => 2 * crossing > seeds,
            AggregationRule::Any => crossing > 0,
            AggregationRule::All => seeds > 0 && crossing == seeds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedAggregate {
    /// Mean crossing time over the crossing seeds.
    pub mean: Option<f64>,
    /// Population standard deviation over the crossing seeds.
    pub sd: Option<f64>,
    pub n_censored: usize,
    pub n_seeds: usize,
    /// Cell-level censoring under the aggregation rule.
    pub censored: bool,
}

pub fn aggregate_seeds(records: &[CrossingRecord], rule: AggregationRule) -> SeedAggregate {
    let times: Vec<f64> = records.iter().filter_map(|r| r.time).map(|t| t as f64).collect();
    let n_seeds = records.len();
    let (mean, sd) = if times.is_empty() {
        (None, None)
    } else {
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / times.len() as f64;
        (Some(mean), Some(libm::sqrt(var)))
    };
    SeedAggregate {
        mean,
        sd,
        n_censored: n_seeds - times.len(),
        n_seeds,
        censored: !rule.crosses(times.len(), n_seeds),
    }
}

/// Crossing records of a sweep, keyed by dataset size, threshold, seed and
/// source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSummary {
    cells: BTreeMap<(u64, u64, Source), Vec<(u64, CrossingRecord)>>,
    sizes: Vec<u64>,
}

fn tau_key(tau: f64) -> u64 {
    tau.to_bits()
}

impl SweepSummary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a dataset size even if none of its runs produced records,
    /// so it still counts toward `N_max`.
    pub fn add_size(&mut self, n: u64) {
        if let Err(at) = self.sizes.binary_search(&n) {
            self.sizes.insert(at, n);
        }
    }

    pub fn insert(&mut self, n: u64, seed: u64, record: CrossingRecord) {
        self.add_size(n);
        let cell = self.cells.entry((n, tau_key(record.tau), record.source)).or_default();
        cell.retain(|(s, _)| *s != seed);
        cell.push((seed, record));
        cell.sort_by_key(|(s, _)| *s);
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn taus(&self) -> Vec<f64> {
        let mut keys: Vec<u64> = self.cells.keys().map(|k| k.1).collect();
        keys.sort_by(|a, b| f64::from_bits(*a).total_cmp(&f64::from_bits(*b)));
        keys.dedup();
        keys.into_iter().map(f64::from_bits).collect()
    }

    pub fn records(&self, n: u64, tau: f64, source: Source) -> Vec<CrossingRecord> {
        self.cells.get(&(n, tau_key(tau), source)).map(|c| c.iter().map(|(_, r)| *r).collect()).unwrap_or_default()
    }

    pub fn aggregate(&self, n: u64, tau: f64, source: Source, rule: AggregationRule) -> SeedAggregate {
        aggregate_seeds(&self.records(n, tau, source), rule)
    }

    /// Largest swept dataset size.
    pub fn n_max(&self) -> Option<u64> {
        self.sizes.last().copied()
    }

    fn crossing_cells(&self, tau: f64, rule: AggregationRule) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.sizes.iter().filter_map(move |&n| {
            let agg = self.aggregate(n, tau, Source::Validation, rule);
            match (agg.censored, agg.mean) {
                (false, Some(mean)) => Some((n, mean)),
                _ => None,
            }
        })
    }
}

/// `N_c(tau)`: the smallest size whose validation cell is not censored.
pub fn critical_size(summary: &SweepSummary, tau: f64, rule: AggregationRule) -> Option<u64> {
    summary.crossing_cells(tau, rule).next().map(|(n, _)| n)
}

/// `N*(tau)`: the size with the smallest aggregated validation crossing
/// time among non-censored cells; ties go to the smaller size.
pub fn sweet_spot(summary: &SweepSummary, tau: f64, rule: AggregationRule) -> Option<u64> {
    let mut best: Option<(u64, f64)> = None;
    for (n, mean) in summary.crossing_cells(tau, rule) {
        if best.is_none_or(|(_, b)| mean < b) {
            best = Some((n, mean));
        }
    }
    best.map(|(n, _)| n)
}

/// `G(t) = A_T(t) - A_R(t)` on a shared grid.
pub fn gap_series(train: &AccuracySeries, suffix: &AccuracySeries) -> Result<Vec<(u64, f64)>, TimingError> {
    if !train.times().eq(suffix.times()) {
        return Err(TimingError::GridMismatch);
    }
    Ok(train.points.iter().zip(&suffix.points).map(|(&(t, a), &(_, r))| (t, a - r)).collect())
}

/// `max |A_T - (A_R + A_V)|` over samples up to and including the first one
/// where `A_V >= until_val` (the whole series if that never happens).
pub fn decomposition_residual(
    train: &AccuracySeries,
    suffix: &AccuracySeries,
    val: &AccuracySeries,
    until_val: f64,
) -> Result<f64, TimingError> {
    if !train.times().eq(suffix.times()) || !train.times().eq(val.times()) {
        return Err(TimingError::GridMismatch);
    }
    if train.points.is_empty() {
        return Err(TimingError::EmptySeries);
    }
    let mut worst: f64 = 0.0;
    for ((&(_, a_t), &(_, a_r)), &(_, a_v)) in train.points.iter().zip(&suffix.points).zip(&val.points) {
        worst = worst.max(libm::fabs(a_t - (a_r + a_v)));
        if a_v >= until_val {
            break;
        }
    }
    Ok(worst)
}

/// Passes over the training set after `t` updates.
pub fn to_epochs(t: u64, n: u64, effective_batch: u64) -> f64 {
    t as f64 * effective_batch as f64 / n as f64
}
