//! SVG figures from an analysis directory: crossing time against dataset
//! size, per-run component trajectories, and validation accuracy against
//! the train-random gap.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::analysis::{SERIES_HEADER, SUMMARY_HEADER};
use crate::error::{LabError, Result};

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

fn draw_err<E: std::fmt::Debug>(path: &Path) -> impl FnOnce(E) -> LabError + '_ {
    move |e| LabError::Data(format!("{}: {e:?}", path.display()))
}

fn read_csv(path: &Path, header: &str) -> Result<Vec<csv::StringRecord>> {
    if !path.exists() {
        return Err(LabError::MissingInput(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| LabError::Data(format!("{}: {e}", path.display())))?;
    let found = r.headers().map_err(|e| LabError::Data(e.to_string()))?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(LabError::Data(format!("{}: unexpected header {found:?}", path.display())));
    }
    r.records().map(|row| row.map_err(|e| LabError::Data(format!("{}: {e}", path.display())))).collect()
}

fn num(field: &str, path: &Path) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| LabError::Data(format!("{}: bad number {field:?}", path.display())))
}

/// One point of a crossing curve; `None` marks a censored cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingPoint {
    pub n: f64,
    pub time: Option<f64>,
}

/// `(tau, source) -> points` for one (task, size, depth) group.
pub type CrossingCurves = BTreeMap<(String, String), Vec<CrossingPoint>>;

pub fn crossing_curves(analysis: &Path) -> Result<BTreeMap<String, CrossingCurves>> {
    let path = analysis.join("summary.csv");
    let mut groups: BTreeMap<String, CrossingCurves> = BTreeMap::new();
    for row in read_csv(&path, SUMMARY_HEADER)? {
        let group = format!("{}{}_d{}", &row[0], &row[1], &row[2]);
        let n = num(&row[3], &path)?.ok_or_else(|| LabError::Data(format!("{}: missing N", path.display())))?;
        let censored = &row[10] == "true";
        let time = if censored { None } else { num(&row[6], &path)? };
        groups
            .entry(group)
            .or_default()
            .entry((row[4].to_string(), row[5].to_string()))
            .or_default()
            .push(CrossingPoint { n, time });
    }
    Ok(groups)
}

fn crossing_figure(path: &Path, title: &str, curves: &CrossingCurves) -> Result<()> {
    let ns: Vec<f64> = curves.values().flatten().map(|p| p.n).collect();
    let times: Vec<f64> = curves.values().flatten().filter_map(|p| p.time).collect();
    let (lo, hi) = ns.iter().fold((f64::MAX, f64::MIN), |(a, b), &n| (a.min(n), b.max(n)));
    let top = times.iter().copied().fold(1.0, f64::max) * 1.15;
    let censor_y = top / 1.15 * 1.07;
    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err(path))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(45)
        .y_label_area_size(75)
        .build_cartesian_2d((lo / 1.5..hi * 1.5).log_scale(), 0f64..top)
        .map_err(draw_err(path))?;
    chart
        .configure_mesh()
        .x_desc("dataset size N")
        .y_desc("first update reaching tau")
        .draw()
        .map_err(draw_err(path))?;
    let taus: Vec<&String> = {
        let mut t: Vec<&String> = curves.keys().map(|k| &k.0).collect();
        t.dedup();
        t
    };
    for ((tau, source), points) in curves {
        let k = taus.iter().position(|t| *t == tau).unwrap_or(0);
        let color = PALETTE[k % PALETTE.len()];
        let finite: Vec<(f64, f64)> = points.iter().filter_map(|p| p.time.map(|t| (p.n, t))).collect();
        let style = color.stroke_width(2);
        let label = format!("tau={tau} {source}");
        if source == "validation" {
            chart
                .draw_series(LineSeries::new(finite.clone(), style))
                .map_err(draw_err(path))?
                .label(label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 22, y)], color.stroke_width(2)));
        } else {
            chart
                .draw_series(DashedLineSeries::new(finite.clone(), 6, 4, style))
                .map_err(draw_err(path))?
                .label(label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 8, y), (x + 14, y), (x + 22, y)], color));
        }
        chart.draw_series(finite.iter().map(|&p| Circle::new(p, 3, color.filled()))).map_err(draw_err(path))?;
        let censored = points.iter().filter(|p| p.time.is_none()).map(|p| (p.n, censor_y));
        chart.draw_series(censored.map(|p| Cross::new(p, 6, color.stroke_width(2)))).map_err(draw_err(path))?;
    }
    chart
        .draw_series(std::iter::once(Cross::new((lo, censor_y), 0, BLACK)))
        .map_err(draw_err(path))?
        .label("x at top: censored")
        .legend(|(x, y)| Cross::new((x + 11, y), 5, BLACK.stroke_width(2)));
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperLeft)
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err(path))?;
    root.present().map_err(draw_err(path))
}

/// `t, A_T, A_V, A_R, G` with missing suffix columns as `None`.
pub type SeriesRow = (f64, f64, f64, Option<f64>, Option<f64>);

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    read_csv(path, SERIES_HEADER)?
        .iter()
        .map(|r| {
            let need =
                |i: usize| num(&r[i], path)?.ok_or_else(|| LabError::Data(format!("{}: empty field", path.display())));
            Ok((need(0)?, need(1)?, need(2)?, num(&r[3], path)?, num(&r[4], path)?))
        })
        .collect()
}

/// Label, points, dashed.
type Line<'a> = (&'a str, Vec<(f64, f64)>, bool);

fn line_figure(path: &Path, title: &str, y_desc: &str, y_range: (f64, f64), lines: &[Line]) -> Result<()> {
    let t_max = lines.iter().flat_map(|l| l.1.iter().map(|p| p.0)).fold(1.0, f64::max);
    let root = SVGBackend::new(path, (900, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err(path))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(45)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..t_max, y_range.0..y_range.1)
        .map_err(draw_err(path))?;
    chart.configure_mesh().x_desc("optimizer update t").y_desc(y_desc).draw().map_err(draw_err(path))?;
    for (k, (label, points, dashed)) in lines.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let style = color.stroke_width(2);
        let series = if *dashed {
            chart.draw_series(DashedLineSeries::new(points.clone(), 6, 4, style))
        } else {
            chart.draw_series(LineSeries::new(points.clone(), style))
        };
        series
            .map_err(draw_err(path))?
            .label(*label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 22, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err(path))?;
    root.present().map_err(draw_err(path))
}

/// Writes every figure for `analysis` into `out`; returns the files.
pub fn plot(analysis: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    if !analysis.is_dir() {
        return Err(LabError::MissingInput(analysis.to_path_buf()));
    }
    let groups = crossing_curves(analysis)?;
    let series_dir = analysis.join("series");
    let mut runs: Vec<PathBuf> = match fs::read_dir(&series_dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect(),
        Err(_) => return Err(LabError::MissingInput(series_dir)),
    };
    runs.sort();
    fs::create_dir_all(out).map_err(LabError::io(out))?;
    let mut written = Vec::new();
    for (group, curves) in &groups {
        let path = out.join(format!("crossing_{group}.svg"));
        crossing_figure(&path, &format!("Threshold crossing vs dataset size ({group})"), curves)?;
        written.push(path);
    }
    for run in runs {
        let id = run.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
        let rows = read_series(&run)?;
        let pick = |f: fn(&SeriesRow) -> Option<f64>| -> Vec<(f64, f64)> {
            rows.iter().filter_map(|r| f(r).map(|v| (r.0, v))).collect()
        };
        let a_t = pick(|r| Some(r.1));
        let a_v = pick(|r| Some(r.2));
        let a_r = pick(|r| r.3);
        let gap = pick(|r| r.4);

        let mut comps = vec![("A_T (train)", a_t, false), ("A_V (validation)", a_v.clone(), false)];
        if !a_r.is_empty() {
            comps.push(("A_R (random suffix)", a_r, true));
        }
        let path = out.join(format!("trajectory_{id}.svg"));
        line_figure(&path, &format!("Exact-match components ({id})"), "exact-match accuracy", (0.0, 1.02), &comps)?;
        written.push(path);

        let mut overlay = vec![("A_V (validation)", a_v, false)];
        let note = if gap.is_empty() { " - no suffix probe" } else { "" };
        if !gap.is_empty() {
            overlay.push(("G = A_T - A_R", gap, true));
        }
        let path = out.join(format!("gap_{id}.svg"));
        line_figure(
            &path,
            &format!("Validation accuracy and train-random gap ({id}){note}"),
            "accuracy",
            (-1.02, 1.02),
            &overlay,
        )?;
        written.push(path);
    }
    Ok(written)
}
