//! TOML run configuration.
//!
//! One declarative file drives a whole pipeline run. Only `[source]
//! pair_rate_hz` and `[run] duration` are required; everything else has
//! the documented default. All durations are strings with a unit suffix
//! (`ps`, `ns`, `us`, `ms`, `s`) so nobody has to guess units:
//!
//! ```toml
//! [source]
//! pair_rate_hz = 10000.0
//! triplet_rate_hz = 4.4          # default 0 (pairs only)
//! correlation_sigma = "100ps"    # detection jitter, default 100ps
//!
//! [detectors]
//! efficiency = [0.3, 0.3, 0.3]   # routing probability per channel
//! background_hz = [20000.0, 20000.0, 20000.0]
//! dead_time = ["0ps", "0ps", "0ps"]
//!
//! [run]
//! duration = "200s"
//! seed = 42                      # default 0
//! event_cap = 1000000000         # optional safety cap
//!
//! [histogram]
//! bin_width = "500ps"
//! tau_max = "10.25ns"
//!
//! [normalize]
//! floor_hz = 1e-9                # optional; absent → model-derived floor
//! exclusion_radius_bins = 5
//! tail = "zero_outside"          # zero_outside | clamp_negative | keep
//!
//! [coarse]
//! pixel_width = "500ps"          # default = bin width
//! strip_halfwidth = 2
//! window_tau_max = "5ns"         # optional central crop
//!
//! [output]
//! directory = "results"          # optional default output directory
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::background::{CorrOptions, TailTreatment};
use crate::coarse::CoarseOptions;
use crate::coincidence::HistogramAxis;
use crate::sim::SimConfig;
use crate::units::{parse_duration_ps, ps_to_seconds};

/// Default histogram bin width: 500 ps.
pub const DEFAULT_BIN_WIDTH_PS: u64 = 500;
/// Default histogram half-range: 10.25 ns (20 bins on each side at 500 ps).
pub const DEFAULT_TAU_MAX_PS: u64 = 10_250;

/// Errors from loading or validating a run configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config field {field}: {detail}")]
    Field { field: String, detail: String },
}

/// A fully resolved and validated pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Source, detector and acquisition parameters.
    pub sim: SimConfig,
    /// Histogram bin width ΔT in picoseconds.
    pub bin_width_ps: u64,
    /// Histogram half-range τ_max in picoseconds.
    pub tau_max_ps: u64,
    /// Normalization mask floor in events/s; `None` → model-derived default.
    pub floor_hz: Option<f64>,
    /// Correlated-part extraction options for the accidental model.
    pub corr: CorrOptions,
    /// Coarse-graining options.
    pub coarse: CoarseOptions,
    /// Default output directory, if configured.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    source: RawSource,
    #[serde(default)]
    detectors: RawDetectors,
    run: RawRun,
    #[serde(default)]
    histogram: RawHistogram,
    #[serde(default)]
    normalize: RawNormalize,
    #[serde(default)]
    coarse: RawCoarse,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    pair_rate_hz: f64,
    #[serde(default)]
    triplet_rate_hz: f64,
    correlation_sigma: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetectors {
    efficiency: Option<[f64; 3]>,
    background_hz: Option<[f64; 3]>,
    dead_time: Option<[String; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    duration: String,
    #[serde(default)]
    seed: u64,
    event_cap: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHistogram {
    bin_width: Option<String>,
    tau_max: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNormalize {
    floor_hz: Option<f64>,
    exclusion_radius_bins: Option<i64>,
    tail: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoarse {
    pixel_width: Option<String>,
    strip_halfwidth: Option<i64>,
    window_tau_max: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<String>,
}

fn field_err(field: &str, detail: impl ToString) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        detail: detail.to_string(),
    }
}

fn duration_field(field: &str, text: &str) -> Result<u64, ConfigError> {
    parse_duration_ps(text).map_err(|e| field_err(field, e))
}

fn tail_from_name(field: &str, name: &str) -> Result<TailTreatment, ConfigError> {
    match name {
        "zero_outside" => Ok(TailTreatment::ZeroOutside),
        "clamp_negative" => Ok(TailTreatment::ClampNegative),
        "keep" => Ok(TailTreatment::Keep),
        other => Err(field_err(
            field,
            format!("unknown tail treatment {other:?} (expected zero_outside, clamp_negative or keep)"),
        )),
    }
}

/// Parse and validate a configuration from TOML text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;

    let sigma_ps = match &raw.source.correlation_sigma {
        Some(s) => duration_field("source.correlation_sigma", s)?,
        None => 100,
    };
    let mut dead_time_s = [0.0; 3];
    if let Some(texts) = &raw.detectors.dead_time {
        for (i, t) in texts.iter().enumerate() {
            dead_time_s[i] = ps_to_seconds(duration_field(&format!("detectors.dead_time[{i}]"), t)?);
        }
    }
    let sim_time_ps = duration_field("run.duration", &raw.run.duration)?;
    let sim = SimConfig {
        pair_rate_hz: raw.source.pair_rate_hz,
        triplet_rate_hz: raw.source.triplet_rate_hz,
        sim_time_s: ps_to_seconds(sim_time_ps),
        corr_sigma_s: ps_to_seconds(sigma_ps),
        routing: raw.detectors.efficiency.unwrap_or([0.3, 0.3, 0.3]),
        background_hz: raw.detectors.background_hz.unwrap_or([0.0; 3]),
        dead_time_s,
        rng_seed: raw.run.seed,
        event_cap: raw.run.event_cap.unwrap_or(SimConfig::default().event_cap),
    };
    sim.validate()
        .map_err(|e| field_err("source/detectors/run", e))?;

    let bin_width_ps = match &raw.histogram.bin_width {
        Some(s) => duration_field("histogram.bin_width", s)?,
        None => DEFAULT_BIN_WIDTH_PS,
    };
    let tau_max_ps = match &raw.histogram.tau_max {
        Some(s) => duration_field("histogram.tau_max", s)?,
        None => DEFAULT_TAU_MAX_PS,
    };
    HistogramAxis::new(bin_width_ps, tau_max_ps).map_err(|e| field_err("histogram", e))?;

    if let Some(floor) = raw.normalize.floor_hz {
        if !floor.is_finite() || floor <= 0.0 {
            return Err(field_err(
                "normalize.floor_hz",
                format!("must be positive and finite, got {floor}"),
            ));
        }
    }
    let radius = raw
        .normalize
        .exclusion_radius_bins
        .unwrap_or(CorrOptions::default().exclusion_radius_bins);
    if radius < 0 {
        return Err(field_err(
            "normalize.exclusion_radius_bins",
            format!("must be non-negative, got {radius}"),
        ));
    }
    let tail = match &raw.normalize.tail {
        Some(name) => tail_from_name("normalize.tail", name)?,
        None => TailTreatment::default(),
    };

    let pixel_width_ps = match &raw.coarse.pixel_width {
        Some(s) => duration_field("coarse.pixel_width", s)?,
        None => bin_width_ps,
    };
    if pixel_width_ps == 0 || pixel_width_ps % bin_width_ps != 0 {
        return Err(field_err(
            "coarse.pixel_width",
            format!("must be a positive multiple of the bin width ({bin_width_ps} ps)"),
        ));
    }
    let strip_halfwidth = raw.coarse.strip_halfwidth.unwrap_or(2);
    if strip_halfwidth < 0 {
        return Err(field_err(
            "coarse.strip_halfwidth",
            format!("must be non-negative, got {strip_halfwidth}"),
        ));
    }
    let window_tau_max_ps = match &raw.coarse.window_tau_max {
        Some(s) => Some(duration_field("coarse.window_tau_max", s)?),
        None => None,
    };

    Ok(RunConfig {
        sim,
        bin_width_ps,
        tau_max_ps,
        floor_hz: raw.normalize.floor_hz,
        corr: CorrOptions {
            tail,
            exclusion_radius_bins: radius,
        },
        coarse: CoarseOptions {
            strip_halfwidth,
            pixel_width_ps,
            window_tau_max_ps,
        },
        output_dir: raw.output.directory.as_ref().map(PathBuf::from),
    })
}

/// Load and validate a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
        [source]
        pair_rate_hz = 10000.0
        triplet_rate_hz = 4.4
        correlation_sigma = "120ps"

        [detectors]
        efficiency = [0.3, 0.25, 0.2]
        background_hz = [20000.0, 15000.0, 10000.0]
        dead_time = ["100ns", "0ps", "0ps"]

        [run]
        duration = "200s"
        seed = 42
        event_cap = 500000000

        [histogram]
        bin_width = "500ps"
        tau_max = "400.25ns"

        [normalize]
        floor_hz = 1e-9
        exclusion_radius_bins = 4
        tail = "clamp_negative"

        [coarse]
        pixel_width = "50ns"
        strip_halfwidth = 3
        window_tau_max = "100.25ns"

        [output]
        directory = "results"
    "#;

    #[test]
    fn full_config_lands_in_the_right_fields() {
        let config = parse_config(FULL).unwrap();
        assert_eq!(config.sim.pair_rate_hz, 10_000.0);
        assert_eq!(config.sim.triplet_rate_hz, 4.4);
        assert_eq!(config.sim.corr_sigma_s, 120e-12);
        assert_eq!(config.sim.routing, [0.3, 0.25, 0.2]);
        assert_eq!(config.sim.background_hz, [20_000.0, 15_000.0, 10_000.0]);
        assert_eq!(config.sim.dead_time_s[0], 100e-9);
        assert_eq!(config.sim.sim_time_s, 200.0);
        assert_eq!(config.sim.rng_seed, 42);
        assert_eq!(config.sim.event_cap, 500_000_000);
        assert_eq!(config.bin_width_ps, 500);
        assert_eq!(config.tau_max_ps, 400_250);
        assert_eq!(config.floor_hz, Some(1e-9));
        assert_eq!(config.corr.exclusion_radius_bins, 4);
        assert_eq!(config.corr.tail, TailTreatment::ClampNegative);
        assert_eq!(config.coarse.pixel_width_ps, 50_000);
        assert_eq!(config.coarse.strip_halfwidth, 3);
        assert_eq!(config.coarse.window_tau_max_ps, Some(100_250));
        assert_eq!(config.output_dir, Some(PathBuf::from("results")));
    }

    #[test]
    fn minimal_config_gets_the_documented_defaults() {
        let config = parse_config(
            "[source]\npair_rate_hz = 10.0\n[run]\nduration = \"1s\"\n",
        )
        .unwrap();
        assert_eq!(config.sim.triplet_rate_hz, 0.0);
        assert_eq!(config.sim.corr_sigma_s, 100e-12);
        assert_eq!(config.sim.routing, [0.3, 0.3, 0.3]);
        assert_eq!(config.sim.background_hz, [0.0; 3]);
        assert_eq!(config.sim.rng_seed, 0);
        assert_eq!(config.bin_width_ps, DEFAULT_BIN_WIDTH_PS);
        assert_eq!(config.tau_max_ps, DEFAULT_TAU_MAX_PS);
        assert_eq!(config.floor_hz, None);
        assert_eq!(config.corr, CorrOptions::default());
        assert_eq!(config.coarse.pixel_width_ps, DEFAULT_BIN_WIDTH_PS);
        assert_eq!(config.coarse.strip_halfwidth, 2);
        assert_eq!(config.coarse.window_tau_max_ps, None);
        assert_eq!(config.output_dir, None);
    }

    #[test]
    fn efficiency_sum_above_one_names_the_invariant() {
        let err = parse_config(
            "[source]\npair_rate_hz = 10.0\n[detectors]\nefficiency = [0.5, 0.4, 0.2]\n[run]\nduration = \"1s\"\n",
        )
        .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("routing probabilities must sum to at most 1"), "{message}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config(
            "[source]\npair_rate_hz = 10.0\ntypo_rate = 1.0\n[run]\nduration = \"1s\"\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(_)), "{err}");
    }

    #[test]
    fn duration_errors_name_the_field() {
        let err = parse_config(
            "[source]\npair_rate_hz = 10.0\n[run]\nduration = \"200\"\n",
        )
        .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("run.duration"), "{message}");

        let err = parse_config(
            "[source]\npair_rate_hz = 10.0\ncorrelation_sigma = \"fast\"\n[run]\nduration = \"1s\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("source.correlation_sigma"), "{err}");
    }

    #[test]
    fn pixel_width_must_be_a_bin_multiple() {
        let err = parse_config(
            "[source]\npair_rate_hz = 10.0\n[run]\nduration = \"1s\"\n[coarse]\npixel_width = \"750ps\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("coarse.pixel_width"), "{err}");
    }

    #[test]
    fn bad_tail_name_is_rejected() {
        let err = parse_config(
            "[source]\npair_rate_hz = 10.0\n[run]\nduration = \"1s\"\n[normalize]\ntail = \"drop\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("normalize.tail"), "{err}");
    }

    #[test]
    fn missing_file_is_a_read_error() {
        let err = load_config(Path::new("/nonexistent/run.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Read { .. }), "{err}");
    }
}
