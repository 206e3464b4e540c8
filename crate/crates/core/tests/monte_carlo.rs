//! Seeded Monte Carlo checks at desk scale. Each test fixes its seeds, so the
//! outcomes are reproducible.

use nalgebra::DMatrix;

use sfv::design::{generate_dataset, Correlation, DesignSpec, SignalSpec};
use sfv::diagram::{double_ranking, least_squares_tstats, separation_condition};
use sfv::harness::{preset, run_experiment, Preset};
use sfv::predict::{linear_sparsity_bound, sparsity_cutoff};
use sfv::rankstat::{compute_gamma, first_spurious_rank, residual_inner_profile};
use sfv::seqpath::{run_path, run_until_first_noise, Method};

fn strong(p: usize) -> f64 {
    100.0 * (2.0 * (p as f64).ln()).sqrt()
}

#[test]
fn column_norms_concentrate_at_one() {
    let (n, p) = (500, 450);
    let band = 4.0 / (n as f64).sqrt();
    let signal = SignalSpec::uniform(p, 0, 0.0, 1.0);
    let mut inside = 0;
    for seed in 0..500 {
        let d = generate_dataset(&DesignSpec::gaussian(n, p), &signal, seed).unwrap();
        let mean_sq = d.x().column_iter().map(|c| c.norm_squared()).sum::<f64>() / p as f64;
        if (mean_sq - 1.0).abs() <= band {
            inside += 1;
        }
    }
    assert!(inside as f64 >= 0.99 * 500.0, "{inside}/500");
}

#[test]
fn zero_equicorrelation_matches_iid_gram() {
    let (n, p) = (50, 20);
    let signal = SignalSpec::uniform(p, 0, 0.0, 1.0);
    let mut equi = DMatrix::zeros(p, p);
    let mut iid = DMatrix::zeros(p, p);
    for seed in 0..200 {
        let a = generate_dataset(&DesignSpec::correlated(n, p, Correlation::Equi(0.0)), &signal, seed).unwrap();
        let b = generate_dataset(&DesignSpec::gaussian(n, p), &signal, seed).unwrap();
        equi += a.x().tr_mul(a.x());
        iid += b.x().tr_mul(b.x());
    }
    let gap = ((equi - iid) / 200.0).amax();
    assert!(gap <= 4.0 / (n as f64).sqrt(), "{gap}");
}

fn gammas(count: u64) -> Vec<f64> {
    let (n, p, k) = (500, 450, 100);
    let signal = SignalSpec::uniform(p, k, strong(p), 1.0);
    (0..count)
        .map(|seed| compute_gamma(&generate_dataset(&DesignSpec::gaussian(n, p), &signal, seed).unwrap()).unwrap().gamma)
        .collect()
}

#[test]
fn gamma_mean_is_near_one() {
    let g = gammas(200);
    let mean = g.iter().sum::<f64>() / 200.0;
    assert!((0.95..=1.05).contains(&mean), "mean {mean}");
    assert!(g.iter().all(|&v| v >= -0.05));
}

#[test]
fn gamma_rarely_exceeds_upper_bound() {
    let g = gammas(500);
    let below = g.iter().filter(|&&v| v <= 1.05).count();
    assert!(below as f64 > 0.99 * 500.0, "{below}/500 at or below 1.05");
}

#[test]
fn no_drops_before_first_noise() {
    let (n, p, k) = (300, 270, 60);
    let signal = SignalSpec::uniform(p, k, strong(p), 1.0);
    for seed in 0..200 {
        let d = generate_dataset(&DesignSpec::gaussian(n, p), &signal, seed).unwrap();
        let lasso = run_until_first_noise(Method::Lasso, &d, None).unwrap();
        let lars = run_until_first_noise(Method::LeastAngle, &d, None).unwrap();
        assert_eq!(lasso.events, lars.events, "seed {seed}");
        let r = first_spurious_rank(&lasso, d.support());
        assert!(r.rank.is_some(), "seed {seed}");
        assert_eq!(r.drops_before_first_noise, 0, "seed {seed}");
    }
}

#[test]
fn first_noise_sits_below_signals_vertically() {
    let (n, p, k) = (400, 100, 20);
    let sep = separation_condition(n, p, 1.0).unwrap();
    let signal = SignalSpec::uniform(p, k, 1.1 * sep.threshold, 1.0);
    let mut separated = 0;
    for seed in 0..200 {
        let d = generate_dataset(&DesignSpec::gaussian(n, p), &signal, seed).unwrap();
        let t = least_squares_tstats(d.x(), d.y()).unwrap();
        let trace = run_path(Method::LeastAngle, d.x(), d.y(), None, &|_| false).unwrap();
        if double_ranking(&trace, &t, d.support()).unwrap().first_noise_separated() == Some(true) {
            separated += 1;
        }
    }
    assert!(separated as f64 >= 0.9 * 200.0, "{separated}/200");
}

#[test]
fn early_noise_has_large_vertical_rank() {
    let (n, p, k) = (200, 180, 50);
    let signal = SignalSpec::uniform(p, k, strong(p), 1.0);
    let mut good = 0;
    for seed in 0..200 {
        let d = generate_dataset(&DesignSpec::gaussian(n, p), &signal, seed).unwrap();
        let t = least_squares_tstats(d.x(), d.y()).unwrap();
        let trace = run_path(Method::LeastAngle, d.x(), d.y(), None, &|_| false).unwrap();
        let table = double_ranking(&trace, &t, d.support()).unwrap();
        let early = table.early_noise(5);
        if early.len() == 5 && early.iter().all(|r| r.v_rank > k) {
            good += 1;
        }
    }
    assert!(good as f64 >= 0.9 * 200.0, "{good}/200");
}

#[test]
fn offsupport_inner_product_scale() {
    let (n, p, k) = (500, 450, 160);
    let m = strong(p);
    let signal = SignalSpec::uniform(p, k, m, 1.0);
    let scale = m * (2.0 * k as f64 * ((p - k) as f64).ln() / n as f64).sqrt();
    let mut total = 0.0;
    for seed in 0..100 {
        let d = generate_dataset(&DesignSpec::gaussian(n, p), &signal, seed).unwrap();
        let trace = run_until_first_noise(Method::Lasso, &d, None).unwrap();
        let rank = first_spurious_rank(&trace, d.support()).rank.unwrap();
        total += residual_inner_profile(&d, &trace, rank).unwrap().max_offsupport / scale;
    }
    let mean = total / 100.0;
    assert!((0.8..=1.2).contains(&mean), "{mean}");
}

#[test]
fn desk_fig1_curve() {
    let config = preset(Preset::Fig1, 0.25, 11).unwrap();
    let (n, p) = (config.design.n, config.design.p);
    assert_eq!((n, p), (500, 450));
    let result = run_experiment(&config).unwrap();
    let cutoff = sparsity_cutoff(n as f64, p as f64);
    for method in [Method::Lasso, Method::LeastAngle] {
        let rows: Vec<_> = result.summary.iter().filter(|r| r.method == method).collect();
        let mut bounded = 0;
        for r in &rows {
            // the same point on the full-size grid
            let eps = r.sweep_value / p as f64;
            if r.mean_t.unwrap() <= linear_sparsity_bound(1800, eps, 2000.0 / 1800.0) {
                bounded += 1;
            }
        }
        assert!(bounded as f64 >= 0.95 * rows.len() as f64, "{method}: {bounded}/{}", rows.len());

        let peak = rows.iter().max_by(|a, b| a.mean_t.unwrap().total_cmp(&b.mean_t.unwrap())).unwrap();
        assert!(peak.sweep_value >= cutoff / 2.0 && peak.sweep_value <= 2.0 * cutoff, "{method}: peak at {}", peak.sweep_value);
        let first = rows.first().unwrap().mean_t.unwrap();
        let last = rows.last().unwrap().mean_t.unwrap();
        assert!(peak.mean_t.unwrap() > first && peak.mean_t.unwrap() > last);
    }
}
