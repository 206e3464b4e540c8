use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sfv::design::DesignSpec;
use sfv::harness::svg::Frame;
use sfv::harness::{
    preset, run_experiment_with_workers, run_replicate, write_outputs, ExperimentConfig, OutputKind, Preset, Sweep,
};
use sfv::predict::predicted_rank;
use sfv::seqpath::Method;

fn small_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        design: DesignSpec::gaussian(60, 50),
        sweep: Sweep::Sparsity {
            values: vec![2, 5, 10, 20],
            magnitude: 20.0,
            noise_sigma: 1.0,
        },
        methods: Method::ALL.to_vec(),
        replicates: 8,
        seed,
        outputs: vec![
            OutputKind::RankCsv,
            OutputKind::SummaryCsv,
            OutputKind::SvgPlot,
            OutputKind::PredictionOverlay,
            OutputKind::DiagramCsv,
            OutputKind::DiagramSvg,
        ],
    }
}

fn run_into(config: &ExperimentConfig, workers: usize, dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let result = run_experiment_with_workers(config, Some(workers)).unwrap();
    let written = write_outputs(config, &result, dir).unwrap();
    written
        .iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(p).unwrap()))
        .collect()
}

#[test]
fn outputs_are_byte_identical_across_runs_and_workers() {
    let config = small_config(42);
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let a = run_into(&config, 1, dirs[0].path());
    let b = run_into(&config, 1, dirs[1].path());
    let c = run_into(&config, 3, dirs[2].path());
    let names: Vec<_> = a.keys().cloned().collect();
    assert_eq!(names, ["diagram.csv", "diagram.svg", "plot.svg", "ranks.csv", "summary.csv"]);
    assert_eq!(a, b);
    assert_eq!(a, c);

    let other = tempfile::tempdir().unwrap();
    let d = run_into(&small_config(43), 1, other.path());
    assert_ne!(a["ranks.csv"], d["ranks.csv"]);
}

#[test]
fn replicates_do_not_depend_on_execution_order() {
    let config = small_config(5);
    let result = run_experiment_with_workers(&config, Some(2)).unwrap();
    // walk the jobs backwards, one at a time
    let mut backwards = Vec::new();
    for s in (0..config.sweep.len()).rev() {
        for r in (0..config.replicates).rev() {
            backwards.push(run_replicate(&config, s, r).unwrap());
        }
    }
    backwards.reverse();
    let flat: Vec<_> = backwards.into_iter().flatten().collect();
    assert_eq!(flat, result.records);
}

#[test]
fn summary_matches_rank_table() {
    let config = small_config(9);
    let dir = tempfile::tempdir().unwrap();
    run_into(&config, 2, dir.path());

    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut ranks = csv::Reader::from_path(dir.path().join("ranks.csv")).unwrap();
    let header = ranks.headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["method", "sweep_value", "replicate", "T", "signals_before", "drops_before_first_noise"]
    );
    let mut rows = 0;
    for rec in ranks.records() {
        let rec = rec.unwrap();
        rows += 1;
        let entry = groups.entry((rec[0].to_string(), rec[1].to_string())).or_default();
        if !rec[3].is_empty() {
            entry.push(rec[3].parse().unwrap());
        }
    }
    assert_eq!(rows, 4 * 8 * 3);

    let mut summary = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    assert_eq!(
        summary.headers().unwrap().iter().collect::<Vec<_>>(),
        ["method", "sweep_value", "mean_T", "sd_T", "predicted_T", "replicates_with_T"]
    );
    let mut seen = 0;
    for rec in summary.records() {
        let rec = rec.unwrap();
        let ts = &groups[&(rec[0].to_string(), rec[1].to_string())];
        let m = ts.len() as f64;
        let mean = ts.iter().sum::<f64>() / m;
        let sd = (ts.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        let got_mean: f64 = rec[2].parse().unwrap();
        let got_sd: f64 = rec[3].parse().unwrap();
        assert!((got_mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((got_sd - sd).abs() <= 1e-12 * sd.abs().max(1.0));
        assert_eq!(rec[5].parse::<usize>().unwrap(), ts.len());
        let k: usize = rec[1].parse().unwrap();
        let want = predicted_rank(60, 50, k).unwrap().rank;
        assert!((rec[4].parse::<f64>().unwrap() - want).abs() <= 1e-12 * want);
        seen += 1;
    }
    assert_eq!(seen, groups.len());
}

#[test]
fn empty_support_gives_rank_one() {
    let mut config = small_config(3);
    config.sweep = Sweep::Sparsity {
        values: vec![0],
        magnitude: 5.0,
        noise_sigma: 1.0,
    };
    let result = run_experiment_with_workers(&config, Some(1)).unwrap();
    for row in &result.summary {
        assert_eq!(row.mean_t, Some(1.0));
        assert_eq!(row.sd_t, Some(0.0));
        assert_eq!(row.replicates_with_t, 8);
    }
}

#[test]
fn config_json_roundtrip() {
    let config = preset(Preset::Study2b, 0.1, 17).unwrap();
    let back = ExperimentConfig::from_json(&config.to_json().unwrap()).unwrap();
    assert_eq!(back, config);
}

fn overlay_vertices(svg: &str) -> Vec<(f64, f64)> {
    let start = svg.find(r#"<polyline class="overlay""#).expect("overlay polyline");
    let rest = &svg[start..];
    let key = "points=\"";
    let from = rest.find(key).unwrap() + key.len();
    let to = from + rest[from..].find('"').unwrap();
    rest[from..to]
        .split(' ')
        .map(|pair| {
            let (x, y) = pair.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

#[test]
fn fig1_overlay_is_the_prediction() {
    let mut config = preset(Preset::Fig1, 0.05, 1).unwrap();
    config.replicates = 2;
    let (n, p) = (config.design.n, config.design.p);
    let dir = tempfile::tempdir().unwrap();
    let files = run_into(&config, 1, dir.path());
    let svg = String::from_utf8(files["plot.svg"].clone()).unwrap();
    let frame = Frame::parse(&svg).unwrap();
    let vertices = overlay_vertices(&svg);
    let Sweep::Sparsity { values, .. } = &config.sweep else {
        panic!("fig1 sweeps sparsity")
    };
    assert_eq!(vertices.len(), values.len());
    for (&(px, py), &k) in vertices.iter().zip(values) {
        let (x, y) = (frame.data_x(px), frame.data_y(py));
        let want = predicted_rank(n, p, k).unwrap().rank;
        assert!((x - k as f64).abs() <= 1e-9, "{x} vs {k}");
        assert!((y - want).abs() <= 1e-9, "k {k}: {y} vs {want}");
    }
}
