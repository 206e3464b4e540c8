//! Monte Carlo experiments: replicate datasets across a sweep, run each
//! path engine until the first noise variable enters, and aggregate the
//! ranks.
//!
//! Replicate `r` of sweep point `s` draws its data from stream
//! `(s << 32) | r` of the experiment seed, and results are reduced in
//! `(s, r)` order, so outputs do not depend on the number of workers.

pub mod config;
pub mod csvio;
pub mod svg;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{preset, ExperimentConfig, OutputKind, Preset, Sweep, SweepPoint};

use crate::design::DesignSampler;
use crate::diagram::{double_ranking, least_squares_tstats};
use crate::error::{Error, Result};
use crate::predict::predicted_rank;
use crate::rankstat::first_spurious_rank;
use crate::rng::{replicate_stream, stream_rng};
use crate::seqpath::{run_path, run_until_first_noise, Method, Termination};
use svg::{Marker, Overlay, Plot, ScatterPoint};

pub const WORKERS_ENV: &str = "SFV_WORKERS";

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRecord {
    pub method: Method,
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub replicate: usize,
    /// `None` when the path ended before any noise variable entered.
    pub rank: Option<usize>,
    pub signals_before: usize,
    pub drops_before_first_noise: usize,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub sweep_value: f64,
    pub mean_t: Option<f64>,
    /// Sample standard deviation of `T` (divisor `m − 1`), not the standard
    /// error of the mean.
    pub sd_t: Option<f64>,
    pub predicted_t: Option<f64>,
    pub replicates_with_t: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    /// Ordered by sweep point, then replicate, then method.
    pub records: Vec<ReplicateRecord>,
    /// Ordered by sweep point, then method.
    pub summary: Vec<SummaryRow>,
}

/// Worker count from `SFV_WORKERS`, or `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w >= 1 => Ok(Some(w)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_workers(config, workers_from_env()?)
}

/// Runs every (sweep point, replicate) pair on a pool of `workers` threads
/// (all cores when `None`).
pub fn run_experiment_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    config.validate()?;
    let points: Vec<SweepPoint> = (0..config.sweep.len()).map(|i| config.point(i)).collect::<Result<_>>()?;
    let samplers: Vec<DesignSampler> = points.iter().map(|p| DesignSampler::new(&p.design)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|s| (0..config.replicates).map(move |r| (s, r)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let per_job: Vec<Vec<ReplicateRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, r)| replicate_with(config, &points[s], &samplers[s], s, r))
            .collect::<Result<_>>()
    })?;
    let records: Vec<ReplicateRecord> = per_job.into_iter().flatten().collect();
    let summary = summarize(config, &records)?;
    Ok(ExperimentResult { records, summary })
}

/// One replicate of one sweep point, every method on the same dataset.
pub fn run_replicate(config: &ExperimentConfig, sweep_index: usize, replicate: usize) -> Result<Vec<ReplicateRecord>> {
    let point = config.point(sweep_index)?;
    let sampler = DesignSampler::new(&point.design)?;
    replicate_with(config, &point, &sampler, sweep_index, replicate)
}

fn replicate_with(
    config: &ExperimentConfig,
    point: &SweepPoint,
    sampler: &DesignSampler,
    s: usize,
    r: usize,
) -> Result<Vec<ReplicateRecord>> {
    let mut rng = stream_rng(config.seed, replicate_stream(s, r));
    let data = sampler.generate(&point.signal, &mut rng)?;
    config
        .methods
        .iter()
        .map(|&method| {
            let trace = run_until_first_noise(method, &data, None)?;
            let report = first_spurious_rank(&trace, data.support());
            Ok(ReplicateRecord {
                method,
                sweep_index: s,
                sweep_value: point.value,
                replicate: r,
                rank: report.rank,
                signals_before: report.signals_before,
                drops_before_first_noise: report.drops_before_first_noise,
                termination: trace.termination,
            })
        })
        .collect()
}

/// Predicted rank for a sweep point; `k + 1 = 1` for an empty support.
pub fn predicted_for(point: &SweepPoint) -> Option<f64> {
    let k = point.signal.sparsity();
    if k == 0 {
        return Some(1.0);
    }
    predicted_rank(point.design.n, point.design.p, k).ok().map(|p| p.rank)
}

/// Mean and sample standard deviation (`None` below two values).
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (Some(mean), Some((ss / (m - 1.0)).sqrt()))
}

pub fn summarize(config: &ExperimentConfig, records: &[ReplicateRecord]) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for s in 0..config.sweep.len() {
        let point = config.point(s)?;
        let predicted_t = predicted_for(&point);
        for &method in &config.methods {
            let ts: Vec<f64> = records
                .iter()
                .filter(|r| r.sweep_index == s && r.method == method)
                .filter_map(|r| r.rank.map(|t| t as f64))
                .collect();
            let (mean_t, sd_t) = mean_sd(&ts);
            rows.push(SummaryRow {
                method,
                sweep_value: point.value,
                mean_t,
                sd_t,
                predicted_t,
                replicates_with_t: ts.len(),
            });
        }
    }
    Ok(rows)
}

/// Mean rank per method against the sweep value, with the prediction as
/// an overlay when requested.
pub fn summary_plot(config: &ExperimentConfig, summary: &[SummaryRow]) -> Plot {
    let points = summary
        .iter()
        .filter_map(|r| {
            r.mean_t.map(|t| ScatterPoint {
                x: r.sweep_value,
                y: t,
                marker: Marker::for_method(r.method),
            })
        })
        .collect();
    let mut overlays = Vec::new();
    if config.wants(OutputKind::PredictionOverlay) {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for r in summary {
            if let Some(t) = r.predicted_t {
                if pts.last().map(|l| l.0) != Some(r.sweep_value) {
                    pts.push((r.sweep_value, t));
                }
            }
        }
        if !pts.is_empty() {
            overlays.push(Overlay {
                label: "predicted".into(),
                points: pts,
                dashed: false,
            });
        }
    }
    Plot {
        title: format!(
            "n = {}, p = {}, {} replicates",
            config.design.n, config.design.p, config.replicates
        ),
        x_label: config.sweep.axis_label().into(),
        y_label: "mean rank of first noise variable".into(),
        points,
        overlays,
        band: None,
        legend: config
            .methods
            .iter()
            .map(|&m| (Marker::for_method(m), m.name().to_string()))
            .collect(),
    }
}

/// Writes the requested outputs into `dir` and returns the paths written.
/// Diagram outputs use the first replicate of the first sweep point and
/// the first method, run to the end of its path.
pub fn write_outputs(config: &ExperimentConfig, result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if config.wants(OutputKind::RankCsv) {
        let path = dir.join("ranks.csv");
        csvio::save_with(&path, |w| csvio::write_ranks_csv(&result.records, w))?;
        written.push(path);
    }
    if config.wants(OutputKind::SummaryCsv) {
        let path = dir.join("summary.csv");
        csvio::save_with(&path, |w| csvio::write_summary_csv(&result.summary, w))?;
        written.push(path);
    }
    if config.wants(OutputKind::SvgPlot) {
        let plot = summary_plot(config, &result.summary);
        if !plot.points.is_empty() {
            let path = dir.join("plot.svg");
            std::fs::write(&path, svg::emit_svg_scatter(&plot)?)?;
            written.push(path);
        }
    }
    if config.wants(OutputKind::DiagramCsv) || config.wants(OutputKind::DiagramSvg) {
        let point = config.point(0)?;
        let sampler = DesignSampler::new(&point.design)?;
        let data = sampler.generate(&point.signal, &mut stream_rng(config.seed, replicate_stream(0, 0)))?;
        let method = config.methods[0];
        let trace = run_path(method, data.x(), data.y(), None, &|_| false)?;
        let tstats = least_squares_tstats(data.x(), data.y())?;
        let table = double_ranking(&trace, &tstats, data.support())?;
        if config.wants(OutputKind::DiagramCsv) {
            let path = dir.join("diagram.csv");
            csvio::save_with(&path, |w| csvio::write_diagram_csv(&table, w))?;
            written.push(path);
        }
        if config.wants(OutputKind::DiagramSvg) {
            let path = dir.join("diagram.svg");
            std::fs::write(&path, svg::diagram_svg(&table, method.name())?)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignSpec;

    fn small(values: Vec<usize>) -> ExperimentConfig {
        ExperimentConfig {
            design: DesignSpec::gaussian(40, 30),
            sweep: Sweep::Sparsity {
                values,
                magnitude: 50.0,
                noise_sigma: 1.0,
            },
            methods: Method::ALL.to_vec(),
            replicates: 6,
            seed: 11,
            outputs: OutputKind::DEFAULT.to_vec(),
        }
    }

    #[test]
    fn empty_support_gives_rank_one() {
        let res = run_experiment_with_workers(&small(vec![0]), Some(2)).unwrap();
        for row in &res.summary {
            assert_eq!(row.mean_t, Some(1.0));
            assert_eq!(row.replicates_with_t, 6);
            assert_eq!(row.predicted_t, Some(1.0));
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = small(vec![2, 8]);
        let a = run_experiment_with_workers(&c, Some(1)).unwrap();
        let b = run_experiment_with_workers(&c, Some(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replicates_can_run_in_any_order() {
        let c = small(vec![3, 6]);
        let all = run_experiment_with_workers(&c, Some(2)).unwrap();
        let mut jobs: Vec<(usize, usize)> = (0..2).flat_map(|s| (0..6).map(move |r| (s, r))).collect();
        jobs.reverse();
        let mut got: Vec<ReplicateRecord> = jobs.iter().flat_map(|&(s, r)| run_replicate(&c, s, r).unwrap()).collect();
        got.sort_by_key(|r| (r.sweep_index, r.replicate, Method::ALL.iter().position(|&m| m == r.method)));
        assert_eq!(got, all.records);
    }

    #[test]
    fn summary_arithmetic() {
        assert_eq!(mean_sd(&[]), (None, None));
        assert_eq!(mean_sd(&[4.0]), (Some(4.0), None));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn full_support_has_no_rank() {
        let mut c = small(vec![30]);
        c.replicates = 2;
        let res = run_experiment_with_workers(&c, Some(1)).unwrap();
        for row in &res.summary {
            assert_eq!(row.replicates_with_t, 0);
            assert_eq!(row.mean_t, None);
        }
    }

    #[test]
    fn writes_requested_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(vec![2, 5]);
        c.replicates = 3;
        c.outputs.extend([OutputKind::DiagramCsv, OutputKind::DiagramSvg]);
        let res = run_experiment_with_workers(&c, Some(2)).unwrap();
        let files = write_outputs(&c, &res, dir.path()).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["ranks.csv", "summary.csv", "plot.svg", "diagram.csv", "diagram.svg"]);
        let ranks = std::fs::read_to_string(dir.path().join("ranks.csv")).unwrap();
        assert_eq!(ranks.lines().count(), 1 + 2 * 3 * 3);
    }
}
