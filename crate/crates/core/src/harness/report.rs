use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::RunConfig;
use super::runner::RunResult;
use super::svg::{self, Axes, Scale};
use crate::trace::{write_jsonl, TraceError};

pub const RUNS_CSV: &str = "runs.csv";
pub const POINTS_CSV: &str = "points.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const TRACES_DIR: &str = "traces";
pub const PLOTS_DIR: &str = "plots";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("no runs to report")]
    Empty,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv {
        path: path.to_owned(),
        source,
    }
}

/// One line of `runs.csv`: the run's configuration and its metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: u64,
    pub label: String,
    pub family: String,
    pub design: String,
    pub cc: String,
    pub ab_limit: String,
    pub strategy: String,
    pub dispatch: String,
    pub pquic_mode: bool,
    pub ack_frequency: bool,
    pub transfer_size: u64,
    pub seed: u64,
    /// Design point coordinates joined by `;`.
    pub point: String,
    /// `bandwidth_mbps/rtt_ms` per path joined by `;`.
    pub paths: String,
    pub lower_bound_s: f64,
    pub transfer_time_s: f64,
    pub mean_ranges_per_ack_frame: f64,
    pub frac_ack_frames_at_limit: f64,
    pub rel_retransmitted: f64,
    pub max_per_byte_retrans: u32,
    pub ack_bytes_total: u64,
    pub ack_frames: u64,
    pub spurious_losses: u64,
    pub buffer_drops: u64,
    pub fingerprint: String,
}

fn join(v: impl IntoIterator<Item = String>) -> String {
    v.into_iter().collect::<Vec<_>>().join(";")
}

impl RunRow {
    pub fn new(r: &RunResult) -> Self {
        let c = &r.config;
        let m = &r.metrics;
        RunRow {
            run_id: c.run_id,
            label: c.label(),
            family: c.family.to_string(),
            design: c.design.to_string(),
            cc: serde_plain(&c.cc),
            ab_limit: c.ab_limit.to_string(),
            strategy: c.strategy.to_string(),
            dispatch: c.dispatch.to_string(),
            pquic_mode: c.pquic_mode,
            ack_frequency: c.ack_frequency,
            transfer_size: c.transfer_size,
            seed: c.seed,
            point: join(c.point.iter().map(|x| x.to_string())),
            paths: join(
                c.paths
                    .iter()
                    .map(|p| format!("{}/{}", p.bandwidth_mbps, p.rtt_ms)),
            ),
            lower_bound_s: c.lower_bound_seconds(),
            transfer_time_s: m.transfer_time_s,
            mean_ranges_per_ack_frame: m.mean_ranges_per_ack_frame,
            frac_ack_frames_at_limit: m.frac_ack_frames_at_limit,
            rel_retransmitted: m.rel_retransmitted,
            max_per_byte_retrans: m.max_per_byte_retrans,
            ack_bytes_total: m.ack_bytes_total,
            ack_frames: m.ack_frames,
            spurious_losses: m.spurious_losses,
            buffer_drops: m.buffer_drops,
            fingerprint: c.fingerprint(),
        }
    }

    /// Identity of the network scenario, shared by runs of different
    /// protocol configurations on the same design point.
    pub fn scenario_key(&self) -> (String, String) {
        (self.family.clone(), self.point.clone())
    }
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>, ReportError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

pub fn write_runs_csv(path: &Path, rows: &[RunRow]) -> Result<(), ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>, ReportError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err(path))
}

/// Writes the design points of a sweep with their path parameters.
pub fn write_points_csv(path: &Path, runs: &[RunConfig]) -> Result<(), ReportError> {
    let first = runs.first().ok_or(ReportError::Empty)?;
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut head = vec!["point_id".to_owned(), "family".to_owned()];
    head.extend(
        first
            .family
            .coordinate_names()
            .iter()
            .map(|s| s.to_string()),
    );
    for i in 0..first.paths.len() {
        head.push(format!("bw{i}_mbps"));
        head.push(format!("rtt{i}_ms"));
    }
    w.write_record(&head).map_err(csv_err(path))?;
    for r in runs {
        let mut rec = vec![r.run_id.to_string(), r.family.to_string()];
        rec.extend(r.point.iter().map(|x| x.to_string()));
        for p in &r.paths {
            rec.push(p.bandwidth_mbps.to_string());
            rec.push(p.rtt_ms.to_string());
        }
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn trace_path(dir: &Path, run_id: u64) -> PathBuf {
    dir.join(TRACES_DIR).join(format!("run-{run_id}.jsonl"))
}

/// Writes `runs.csv`, `points.csv` and one trace per run under `dir`.
pub fn write_results(dir: &Path, results: &[RunResult]) -> Result<Vec<RunRow>, ReportError> {
    if results.is_empty() {
        return Err(ReportError::Empty);
    }
    let rows: Vec<RunRow> = results.iter().map(RunRow::new).collect();
    write_runs_csv(&dir.join(RUNS_CSV), &rows)?;
    let configs: Vec<RunConfig> = results.iter().map(|r| r.config.clone()).collect();
    write_points_csv(&dir.join(POINTS_CSV), &configs)?;
    for r in results {
        if r.trace.is_empty() {
            continue;
        }
        let path = trace_path(dir, r.config.run_id);
        write_jsonl(&r.trace, create(&path)?)?;
    }
    Ok(rows)
}

/// Loads `runs.csv` from `dir` and from each immediate subdirectory.
pub fn collect_rows(dir: &Path) -> Result<Vec<RunRow>, ReportError> {
    let mut rows = Vec::new();
    let top = dir.join(RUNS_CSV);
    if top.exists() {
        rows.extend(read_runs_csv(&top)?);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.join(RUNS_CSV).exists())
        .collect();
    subdirs.sort();
    for d in subdirs {
        rows.extend(read_runs_csv(&d.join(RUNS_CSV))?);
    }
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(rows)
}

/// Rows grouped by configuration label, in first-seen order.
pub fn by_label(rows: &[RunRow]) -> Vec<(String, Vec<&RunRow>)> {
    let mut out: Vec<(String, Vec<&RunRow>)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(l, _)| *l == r.label) {
            Some((_, v)) => v.push(r),
            None => out.push((r.label.clone(), vec![r])),
        }
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Transfer-time ratios `baseline / other` on the scenarios both ran.
pub fn paired_time_ratios(baseline: &[&RunRow], other: &[&RunRow]) -> Vec<f64> {
    let base: BTreeMap<_, f64> = baseline
        .iter()
        .map(|r| (r.scenario_key(), r.transfer_time_s))
        .collect();
    other
        .iter()
        .filter_map(|r| base.get(&r.scenario_key()).map(|b| b / r.transfer_time_s))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub family: String,
    pub runs: usize,
    pub median_transfer_time_s: f64,
    pub max_transfer_time_s: f64,
    pub median_mean_ranges: f64,
    pub median_frac_at_limit: f64,
    pub median_rel_retransmitted: f64,
    pub max_rel_retransmitted: f64,
    pub median_ack_bytes: f64,
}

pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    by_label(rows)
        .into_iter()
        .map(|(label, rs)| {
            let col = |f: fn(&RunRow) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let max = |v: Vec<f64>| v.into_iter().fold(f64::NEG_INFINITY, f64::max);
            SummaryRow {
                family: rs[0].family.clone(),
                runs: rs.len(),
                median_transfer_time_s: median(&col(|r| r.transfer_time_s)),
                max_transfer_time_s: max(col(|r| r.transfer_time_s)),
                median_mean_ranges: median(&col(|r| r.mean_ranges_per_ack_frame)),
                median_frac_at_limit: median(&col(|r| r.frac_ack_frames_at_limit)),
                median_rel_retransmitted: median(&col(|r| r.rel_retransmitted)),
                max_rel_retransmitted: max(col(|r| r.rel_retransmitted)),
                median_ack_bytes: median(&col(|r| r.ack_bytes_total as f64)),
                label,
            }
        })
        .collect()
}

pub fn write_summary_csv(path: &Path, rows: &[RunRow]) -> Result<Vec<SummaryRow>, ReportError> {
    let summary = summarize(rows);
    let mut w = csv::Writer::from_writer(create(path)?);
    for s in &summary {
        w.serialize(s).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(summary)
}

/// Renders the standard plots into `dir` and returns the files written.
pub fn write_plots(dir: &Path, rows: &[RunRow]) -> Result<Vec<PathBuf>, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let groups = by_label(rows);
    let series = |f: fn(&RunRow) -> f64| -> Vec<(String, Vec<f64>)> {
        groups
            .iter()
            .map(|(l, rs)| (l.clone(), rs.iter().map(|r| f(r)).collect()))
            .collect()
    };
    let mut files = Vec::new();
    let mut emit = |name: &str, body: String| -> Result<(), ReportError> {
        let p = dir.join(name);
        fs::write(&p, body).map_err(io_err(&p))?;
        files.push(p);
        Ok(())
    };

    let scatter: Vec<(String, Vec<(f64, f64)>)> = groups
        .iter()
        .map(|(l, rs)| {
            (
                l.clone(),
                rs.iter()
                    .map(|r| (r.run_id as f64, r.transfer_time_s))
                    .collect(),
            )
        })
        .collect();
    emit(
        "transfer_time.svg",
        svg::scatter(
            &Axes {
                title: "Transfer time per scenario",
                x_label: "scenario",
                y_label: "transfer time (s)",
                x_scale: Scale::Linear,
            },
            &scatter,
        ),
    )?;
    let cdfs: [(&str, &str, &str, fn(&RunRow) -> f64); 4] = [
        (
            "mean_ranges_cdf.svg",
            "Ranges per client ACK frame",
            "mean ranges per frame",
            |r| r.mean_ranges_per_ack_frame,
        ),
        (
            "retransmitted_cdf.svg",
            "Retransmitted stream data",
            "retransmitted / transfer size",
            |r| r.rel_retransmitted,
        ),
        (
            "ack_bytes_cdf.svg",
            "Acknowledgment frame bytes",
            "client ACK bytes",
            |r| r.ack_bytes_total as f64,
        ),
        (
            "at_limit_cdf.svg",
            "ACK frames using every allowed range",
            "fraction of frames",
            |r| r.frac_ack_frames_at_limit,
        ),
    ];
    for (name, title, x_label, f) in cdfs {
        emit(
            name,
            svg::cdf(
                &Axes {
                    title,
                    x_label,
                    y_label: "CDF",
                    x_scale: Scale::Linear,
                },
                &series(f),
            ),
        )?;
    }
    if groups.len() >= 2 {
        let (base_label, base) = &groups[0];
        let ratios: Vec<(String, Vec<f64>)> = groups[1..]
            .iter()
            .map(|(l, rs)| (format!("{base_label} / {l}"), paired_time_ratios(base, rs)))
            .filter(|(_, v)| !v.is_empty())
            .collect();
        if !ratios.is_empty() {
            emit(
                "time_ratio_cdf.svg",
                svg::cdf(
                    &Axes {
                        title: "Transfer time ratio (above 1: second configuration faster)",
                        x_label: "time ratio",
                        y_label: "CDF",
                        x_scale: Scale::Log10,
                    },
                    &ratios,
                ),
            )?;
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::CcAlgorithm;
    use crate::harness::{run_all, Experiment, Family, RunOptions};
    use crate::Design;

    fn rows() -> Vec<RunRow> {
        let mut e = Experiment::desk(Family::Homo2, Design::Mpns, CcAlgorithm::Cubic);
        e.points = 3;
        e.transfer_size = 200_000;
        let res = run_all(&e.runs().unwrap(), RunOptions::default()).unwrap();
        res.iter().map(RunRow::new).collect()
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = rows();
        let p = dir.path().join(RUNS_CSV);
        write_runs_csv(&p, &rows).unwrap();
        assert_eq!(read_runs_csv(&p).unwrap(), rows);
        assert!(matches!(write_runs_csv(&p, &[]), Err(ReportError::Empty)));
    }

    #[test]
    fn ratio_pairs_by_scenario() {
        let a = rows();
        let mut b = a.clone();
        for r in &mut b {
            r.label = "other".into();
            r.transfer_time_s *= 2.0;
        }
        let ra: Vec<&RunRow> = a.iter().collect();
        let rb: Vec<&RunRow> = b.iter().collect();
        let ratios = paired_time_ratios(&ra, &rb);
        assert_eq!(ratios.len(), 3);
        assert!(ratios.iter().all(|&x| (x - 0.5).abs() < 1e-12));

        let dir = tempfile::tempdir().unwrap();
        let all: Vec<RunRow> = a.into_iter().chain(b).collect();
        let files = write_plots(dir.path(), &all).unwrap();
        assert!(files.iter().any(|f| f.ends_with("time_ratio_cdf.svg")));
        let s = summarize(&all);
        assert_eq!(s.len(), 2);
        assert!((s[1].median_transfer_time_s - 2.0 * s[0].median_transfer_time_s).abs() < 1e-9);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
