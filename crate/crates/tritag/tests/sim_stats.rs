//! Statistical validation of the time-tag simulator against closed-form
//! expectations: thinning rates, exponential gap statistics, correlation
//! peak shape, accidental floors, and dead-time suppression.
//!
//! Every check runs on a frozen seed with at least 5σ of slack, so the
//! suite is deterministic; the tolerances are quoted next to each assert.

use tritag::coincidence::{pair_histogram, singles_rates, triple_histogram, HistogramAxis};
use tritag::sim::{simulate, SimConfig};

/// Poisson 5σ envelope around an expected count.
fn within_5_sigma(observed: u64, expected: f64) -> bool {
    (observed as f64 - expected).abs() <= 5.0 * expected.sqrt().max(1.0)
}

#[test]
fn singles_counts_match_thinning_model() {
    // Every photon of a pair (×2) and of a triplet (×3) is routed
    // independently with probability η_i, on top of a Poisson background.
    let config = SimConfig {
        pair_rate_hz: 5_000.0,
        triplet_rate_hz: 700.0,
        sim_time_s: 50.0,
        corr_sigma_s: 100e-12,
        routing: [0.25, 0.35, 0.2],
        background_hz: [2_000.0, 1_000.0, 0.0],
        rng_seed: 41,
        ..SimConfig::default()
    };
    let output = simulate(&config).unwrap();
    for (i, stream) in output.streams.iter().enumerate() {
        let lambda = (2.0 * config.pair_rate_hz + 3.0 * config.triplet_rate_hz)
            * config.routing[i]
            + config.background_hz[i];
        let expected = lambda * config.sim_time_s;
        assert!(
            within_5_sigma(stream.len() as u64, expected),
            "channel {} count {} vs expected {expected:.0}",
            i + 1,
            stream.len()
        );
    }
}

#[test]
fn background_gaps_are_exponential() {
    // Kolmogorov–Smirnov test of the inter-tag gaps of a pure background
    // channel against Exp(λ) with the configured (not fitted) rate.
    let rate_hz = 10_000.0;
    let config = SimConfig {
        pair_rate_hz: 0.0,
        sim_time_s: 20.0,
        background_hz: [rate_hz, 0.0, 0.0],
        rng_seed: 42,
        ..SimConfig::default()
    };
    let output = simulate(&config).unwrap();
    let tags = output.streams[0].timestamps();
    let mut gaps: Vec<f64> = tags.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    assert!(gaps.len() > 100_000, "needs a large sample, got {}", gaps.len());
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let rate_per_ps = rate_hz * 1e-12;
    let n = gaps.len() as f64;
    let mut d_stat = 0.0f64;
    for (i, gap) in gaps.iter().enumerate() {
        let cdf = 1.0 - (-rate_per_ps * gap).exp();
        let above = (i as f64 + 1.0) / n - cdf;
        let below = cdf - i as f64 / n;
        d_stat = d_stat.max(above).max(below);
    }
    // 0.1% critical value of the one-sample KS statistic.
    let critical = 1.949 / n.sqrt();
    assert!(
        d_stat < critical,
        "KS statistic {d_stat:.5} exceeds the α=0.001 bound {critical:.5}"
    );
}

#[test]
fn pair_peak_has_sqrt2_sigma_width() {
    // Both photons carry independent N(0, σ) jitter, so the delay peak is
    // N(0, √2 σ). Peak mass also pins the two-orderings convention: every
    // emitted pair contributes its (i, j) and (j, i) photon assignments.
    let sigma_ps = 400.0;
    let config = SimConfig {
        pair_rate_hz: 20_000.0,
        sim_time_s: 10.0,
        corr_sigma_s: sigma_ps * 1e-12,
        routing: [0.5, 0.5, 0.0],
        rng_seed: 43,
        ..SimConfig::default()
    };
    let output = simulate(&config).unwrap();
    let axis = HistogramAxis::new(100, 5_050).unwrap();
    let hist = pair_histogram(&output.streams[0], &output.streams[1], axis).unwrap();

    // Restrict to ±3000 ps (±5.3 widths); the accidental floor under the
    // peak is ~6 counts against ~10⁵ of signal.
    let mut total = 0.0;
    let mut mean = 0.0;
    for k in axis.bin_range() {
        if axis.bin_center_ps(k).abs() <= 3_000 {
            let c = hist.count_at(k) as f64;
            total += c;
            mean += c * axis.bin_center_ps(k) as f64;
        }
    }
    mean /= total;
    let mut var = 0.0;
    for k in axis.bin_range() {
        if axis.bin_center_ps(k).abs() <= 3_000 {
            let d = axis.bin_center_ps(k) as f64 - mean;
            var += hist.count_at(k) as f64 * d * d;
        }
    }
    let width = (var / total).sqrt();
    let predicted = 2.0f64.sqrt() * sigma_ps;
    assert!(
        (width / predicted - 1.0).abs() < 0.10,
        "peak width {width:.1} ps vs predicted {predicted:.1} ps"
    );

    let expected_pairs = 2.0 * config.pair_rate_hz * 0.25 * config.sim_time_s;
    assert!(
        (total - expected_pairs).abs() <= 5.0 * expected_pairs.sqrt() + 10.0,
        "peak mass {total} vs expected {expected_pairs}"
    );
}

#[test]
fn uncorrelated_pair_floor_matches_rate_product() {
    // Two independent background channels: every bin holds R₁R₂ΔT·T.
    let config = SimConfig {
        pair_rate_hz: 0.0,
        sim_time_s: 20.0,
        background_hz: [50_000.0, 50_000.0, 0.0],
        rng_seed: 44,
        ..SimConfig::default()
    };
    let output = simulate(&config).unwrap();
    let axis = HistogramAxis::new(500, 10_250).unwrap();
    let hist = pair_histogram(&output.streams[0], &output.streams[1], axis).unwrap();
    let singles = singles_rates(&output.streams).unwrap();

    // Against the configured rates (5σ of the whole-histogram count).
    let per_bin = 50_000.0f64 * 50_000.0 * 500e-12 * config.sim_time_s;
    let expected_total = per_bin * axis.num_bins() as f64;
    assert!(
        within_5_sigma(hist.total(), expected_total),
        "histogram total {} vs expected {expected_total:.0}",
        hist.total()
    );

    // Against the measured rates the estimate is even tighter.
    let measured = singles.rate_hz(0) * singles.rate_hz(1) * 500e-12 * config.sim_time_s;
    let mean =
        hist.total() as f64 / axis.num_bins() as f64;
    assert!(
        (mean / measured - 1.0).abs() < 0.05,
        "mean bin {mean:.2} vs measured-rate prediction {measured:.2}"
    );
}

#[test]
fn uncorrelated_triple_floor_matches_rate_product() {
    // Three independent background channels: the 2-D histogram is flat at
    // R₁R₂R₃ΔT²·T per bin.
    let config = SimConfig {
        pair_rate_hz: 0.0,
        sim_time_s: 50.0,
        background_hz: [300_000.0; 3],
        rng_seed: 45,
        ..SimConfig::default()
    };
    let output = simulate(&config).unwrap();
    let axis = HistogramAxis::new(500, 5_250).unwrap();
    let [s1, s2, s3] = &output.streams;
    let hist = triple_histogram(s1, s2, s3, axis).unwrap();

    let per_bin = 300_000.0f64.powi(3) * 500e-12 * 500e-12 * config.sim_time_s;
    let bins = (axis.num_bins() * axis.num_bins()) as f64;
    assert!(
        within_5_sigma(hist.total(), per_bin * bins),
        "triple total {} vs expected {:.1}",
        hist.total(),
        per_bin * bins
    );
}

#[test]
fn dead_time_suppresses_rate_as_renewal_process() {
    // Non-paralyzable dead time d turns a Poisson stream of rate λ into a
    // renewal process of rate λ/(1 + λd).
    let rate_hz = 100_000.0;
    let dead_s = 5e-6;
    let config = SimConfig {
        pair_rate_hz: 0.0,
        sim_time_s: 10.0,
        background_hz: [rate_hz, rate_hz, 0.0],
        dead_time_s: [dead_s, 0.0, 0.0],
        rng_seed: 46,
        ..SimConfig::default()
    };
    let output = simulate(&config).unwrap();

    let suppressed = rate_hz / (1.0 + rate_hz * dead_s) * config.sim_time_s;
    // Renewal count fluctuation: σ² ≈ n·Var(interval)/E(interval)².
    let cv2 = (1.0 / rate_hz).powi(2) / (dead_s + 1.0 / rate_hz).powi(2);
    let sigma = (suppressed * cv2).sqrt();
    let n1 = output.streams[0].len() as f64;
    assert!(
        (n1 - suppressed).abs() <= 5.0 * sigma,
        "dead-timed channel kept {n1} tags vs {suppressed:.0} ± {sigma:.0}"
    );

    // The untouched channel keeps the full rate.
    assert!(within_5_sigma(
        output.streams[1].len() as u64,
        rate_hz * config.sim_time_s
    ));

    // Every surviving gap respects the dead time.
    let dead_ps = (dead_s * 1e12) as u64;
    let tags = output.streams[0].timestamps();
    assert!(
        tags.windows(2).all(|w| w[1] - w[0] >= dead_ps),
        "a gap shorter than the dead time survived"
    );
}
