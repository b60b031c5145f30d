//! The genuine-triplet peak over the accidental background.
//!
//! Injects a small rate of genuine photon triplets on top of pairs and
//! background, normalizes the triple histogram by the accidental model,
//! and reports the zero-delay peak g³ₙ(0,0) together with the Poisson
//! probability that the accidentals alone produced it. In the stimulated
//! regime the ideal peak is exactly 1 + 36/4 = 10.
//!
//! Run with: `cargo run --example stimulated_triplet_peak`

use tritag::background::{
    accidental_model_from_pairs, default_mask_floor, normalized_g3, peak_significance, CorrOptions,
};
use tritag::coincidence::{pair_histogram, singles_rates, triple_histogram, HistogramAxis};
use tritag::fock::predicted_g3n_peak;
use tritag::sim::{simulate, SimConfig};
use tritag::units::ps_to_seconds;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig {
        pair_rate_hz: 10_000.0,
        triplet_rate_hz: 4.4,
        sim_time_s: 60.0,
        background_hz: [20_000.0, 20_000.0, 20_000.0],
        rng_seed: 2024,
        ..SimConfig::default()
    };
    let output = simulate(&config)?;
    let [s1, s2, s3] = &output.streams;

    let axis = HistogramAxis::new(500, 10_250)?;
    let singles = singles_rates(&output.streams)?;
    let pairs = [
        pair_histogram(s1, s2, axis)?,
        pair_histogram(s1, s3, axis)?,
        pair_histogram(s2, s3, axis)?,
    ];
    let triple = triple_histogram(s1, s2, s3, axis)?;

    let model =
        accidental_model_from_pairs(&pairs[0], &pairs[1], &pairs[2], &singles, &CorrOptions::default())?;
    let normalized = normalized_g3(&triple, &model, default_mask_floor(&model))?;

    let duration_s = ps_to_seconds(triple.duration_ps());
    let expected_center = model.expected_counts_at(0, 0);
    println!("acquisition: {duration_s} s, triplet rate {} /s", config.triplet_rate_hz);
    println!("observed counts at (0,0) : {}", triple.count_at(0, 0));
    println!("accidental expectation   : {expected_center:.2}");
    println!();
    println!("g³ₙ(0,0) measured : {:.2}", normalized.center_value());
    println!("g³ₙ(0,0) ideal    : {}", predicted_g3n_peak());

    let p = peak_significance(&normalized)?;
    println!("\nPoisson significance of the peak:");
    println!("  P(accidentals ≥ observed) = {p:.3e}");
    Ok(())
}
