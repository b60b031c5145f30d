//! Null test of the accidental-background normalization.
//!
//! With no genuine triplets in the source, every structure in the triple
//! histogram — the flat floor and the three pair-coincidence ridges — is
//! accidental. Dividing by the model built from measured pair correlations
//! and singles must therefore flatten the whole map to g³ₙ ≈ 1.
//!
//! Run with: `cargo run --example null_normalized_map`

use tritag::background::{
    accidental_model_from_pairs, default_mask_floor, normalized_g3, CorrOptions,
};
use tritag::coincidence::{pair_histogram, singles_rates, triple_histogram, HistogramAxis};
use tritag::sim::{simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Pairs + strong uncorrelated background, zero triplet rate. Wide 20 ns
    // bins make every accidental bin well populated in 20 s.
    let config = SimConfig {
        pair_rate_hz: 20_000.0,
        triplet_rate_hz: 0.0,
        sim_time_s: 20.0,
        background_hz: [38_000.0, 38_000.0, 38_000.0],
        rng_seed: 99,
        ..SimConfig::default()
    };
    let output = simulate(&config)?;
    let [s1, s2, s3] = &output.streams;

    let axis = HistogramAxis::new(20_000, 210_000)?; // ΔT = 20 ns, 21 bins
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

    println!("triple histogram: {} counts total", triple.total());
    println!(
        "model: flat {:.3e} /s, ridge₁₂(0) {:.3e} /s",
        model.flat_hz(),
        model.ridge12()[model.axis().offset(0)]
    );
    println!(
        "\nnormalized map ({} of {} bins unmasked):",
        normalized.unmasked_count(),
        normalized.masked().len()
    );
    println!("  mean g³ₙ   = {:.4}  (expect ≈ 1)", normalized.unmasked_mean());
    println!("  center g³ₙ = {:.4}  (expect ≈ 1: no genuine triples)", normalized.center_value());

    // Profile along the τ₁₂ ridge: accidental ridges divide out too.
    print!("  g³ₙ along (0, ℓ):");
    for l in [-8i64, -4, 0, 4, 8] {
        print!("  {:.3}", normalized.value_at(0, l));
    }
    println!();
    Ok(())
}
