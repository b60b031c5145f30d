//! Pipeline command-line interface.
//!
//! One thin binary over the library: `simulate` → `histogram` →
//! `normalize` → `coarsegrain`, plus `predict` (closed-form source
//! predictions) and `export` (tag streams as CSV). Exit codes: 0 success,
//! 2 configuration or validation failure, 3 I/O failure; every failure
//! also prints a single machine-readable JSON line on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tritag::background::{
    accidental_model_from_pairs, default_mask_floor, normalize_matrices, normalized_g3,
    peak_significance, BackgroundError, CorrOptions, TailTreatment,
};
use tritag::bundle::{
    self, read_histogram_bundle, read_normalized, read_triple, write_histogram_bundle,
    write_model, write_normalized, write_streams_csv, BundleError,
};
use tritag::coarse::{coarse_grain, coarse_grain_values, CoarseError, CoarseOptions};
use tritag::coincidence::{
    pair_histogram, singles_rates, triple_histogram, CoincidenceError, HistogramAxis,
};
use tritag::config::{load_config, ConfigError};
use tritag::fock::{classify_regime, g2_seed, g3_seed, predicted_g3n_peak, FockError, PdcParams};
use tritag::sim::{simulate, SimError};
use tritag::tagfile::{read_streams, write_sim_output, TagFileContents, TagFileError};
use tritag::units::{format_ps, parse_duration_ps, ps_to_seconds, UnitError};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "TRITAG_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "tritag",
    version,
    about = "Simulate and analyse three-detector photon-coincidence runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate time-tag streams from a TOML run configuration.
    Simulate {
        /// Run configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output tag file (default: <out dir>/tags.ptt).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the RNG seed from the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build singles, pair and triple histograms from a tag file.
    Histogram {
        /// Input tag file.
        #[arg(long)]
        tags: PathBuf,
        /// Bin width ΔT, with unit suffix.
        #[arg(long, default_value = "500ps")]
        dt: String,
        /// Half-range τ_max, with unit suffix.
        #[arg(long, default_value = "10.25ns")]
        taumax: String,
        /// Output directory (default: <out dir>/hists).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the accidental model and the normalized map g³ₙ = G³/G³ₐ.
    Normalize {
        /// Directory written by `histogram`.
        #[arg(long)]
        hists: PathBuf,
        /// Output directory (default: <out dir>/norm).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mask floor in events/s (default: derived from the model).
        #[arg(long)]
        floor: Option<f64>,
        /// Radius (in bins) around τ=0 that keeps raw correlated values.
        #[arg(long = "exclusion-radius")]
        exclusion_radius: Option<i64>,
        /// Tail treatment outside the radius: zero_outside | clamp_negative | keep.
        #[arg(long)]
        tail: Option<String>,
    },
    /// Coarse-grain a normalized map or a triple histogram.
    Coarsegrain {
        /// Directory written by `normalize` (or by `histogram`).
        #[arg(long = "in")]
        input: PathBuf,
        /// Along-ridge pixel width T_pix, with unit suffix (default: one bin).
        #[arg(long)]
        pixel: Option<String>,
        /// Ridge strip half-width in bins.
        #[arg(long, default_value_t = 2)]
        strip: i64,
        /// Optional central window τ_max' to crop to first, with unit suffix.
        #[arg(long)]
        window: Option<String>,
        /// Output directory (default: <out dir>/coarse).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print closed-form source predictions for given intensities.
    Predict {
        /// Pair-creation intensity |γ|².
        #[arg(long)]
        gamma2: f64,
        /// Seed intensity |β|².
        #[arg(long)]
        beta2: f64,
        /// Separation factor quantifying each "much less than".
        #[arg(long, default_value_t = 10.0)]
        margin: f64,
    },
    /// Export a tag file as CSV (channel,timestamp_ps).
    Export {
        /// Input tag file.
        #[arg(long)]
        tags: PathBuf,
        /// Output CSV path (default: <out dir>/streams.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ErrorKind {
    Validation,
    Io,
}

struct CliError {
    kind: ErrorKind,
    message: String,
}

impl CliError {
    fn validation(message: impl ToString) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.to_string(),
        }
    }

    fn io(message: impl ToString) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: message.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Io => 3,
        }
    }

    fn to_json(&self) -> String {
        let kind = match self.kind {
            ErrorKind::Validation => "validation",
            ErrorKind::Io => "io",
        };
        serde_json::json!({
            "error": { "code": self.exit_code(), "kind": kind, "message": self.message }
        })
        .to_string()
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => Self::io(e),
            _ => Self::validation(e),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        Self::validation(e)
    }
}

/// Read a tag file, attaching the offending path to the error message.
fn read_tag_file(path: &Path) -> Result<TagFileContents, CliError> {
    read_streams(path).map_err(|e| {
        let message = format!("{}: {e}", path.display());
        match e {
            TagFileError::Io(_) => CliError::io(message),
            _ => CliError::validation(message),
        }
    })
}

impl From<TagFileError> for CliError {
    fn from(e: TagFileError) -> Self {
        match e {
            TagFileError::Io(_) => Self::io(e),
            _ => Self::validation(e),
        }
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::Io { .. } => Self::io(e),
            _ => Self::validation(e),
        }
    }
}

impl From<CoincidenceError> for CliError {
    fn from(e: CoincidenceError) -> Self {
        Self::validation(e)
    }
}

impl From<BackgroundError> for CliError {
    fn from(e: BackgroundError) -> Self {
        Self::validation(e)
    }
}

impl From<CoarseError> for CliError {
    fn from(e: CoarseError) -> Self {
        Self::validation(e)
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        Self::validation(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Default base for outputs: configured directory, then the environment
/// variable, then the working directory.
fn base_dir(configured: Option<&Path>) -> PathBuf {
    configured
        .map(Path::to_owned)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn resolve_out(flag: Option<PathBuf>, configured: Option<&Path>, leaf: &str) -> PathBuf {
    flag.unwrap_or_else(|| base_dir(configured).join(leaf))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

fn duration_flag(flag: &str, text: &str) -> Result<u64, CliError> {
    parse_duration_ps(text)
        .map_err(|e: UnitError| CliError::validation(format!("--{flag}: {e}")))
}

fn tail_flag(name: &str) -> Result<TailTreatment, CliError> {
    match name {
        "zero_outside" => Ok(TailTreatment::ZeroOutside),
        "clamp_negative" => Ok(TailTreatment::ClampNegative),
        "keep" => Ok(TailTreatment::Keep),
        other => Err(CliError::validation(format!(
            "--tail: unknown tail treatment {other:?} (expected zero_outside, clamp_negative or keep)"
        ))),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, out, seed } => cmd_simulate(&config, out, seed),
        Command::Histogram {
            tags,
            dt,
            taumax,
            out,
        } => cmd_histogram(&tags, &dt, &taumax, out),
        Command::Normalize {
            hists,
            out,
            floor,
            exclusion_radius,
            tail,
        } => cmd_normalize(&hists, out, floor, exclusion_radius, tail.as_deref()),
        Command::Coarsegrain {
            input,
            pixel,
            strip,
            window,
            out,
        } => cmd_coarsegrain(&input, pixel.as_deref(), strip, window.as_deref(), out),
        Command::Predict {
            gamma2,
            beta2,
            margin,
        } => cmd_predict(gamma2, beta2, margin),
        Command::Export { tags, out } => cmd_export(&tags, out),
    }
}

fn cmd_simulate(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let run_config = load_config(config)?;
    let mut sim_config = run_config.sim.clone();
    if let Some(seed) = seed {
        sim_config.rng_seed = seed;
    }
    let output = simulate(&sim_config)?;
    let out_path = resolve_out(out, run_config.output_dir.as_deref(), "tags.ptt");
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_sim_output(&out_path, &output)?;
    println!("wrote {}", out_path.display());
    println!("duration {}", format_ps(output.streams[0].duration_ps()));
    println!("seed {} ({})", output.rng_seed, output.rng_algorithm);
    for stream in &output.streams {
        println!(
            "channel {}: {} events ({:.6} /s)",
            stream.channel(),
            stream.len(),
            stream.rate_hz()
        );
    }
    println!("collapsed duplicates: {}", output.total_collapsed());
    Ok(())
}

fn cmd_histogram(
    tags: &Path,
    dt: &str,
    taumax: &str,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let bin_width_ps = duration_flag("dt", dt)?;
    let tau_max_ps = duration_flag("taumax", taumax)?;
    let axis = HistogramAxis::new(bin_width_ps, tau_max_ps)?;
    let contents = read_tag_file(tags)?;
    let [s1, s2, s3] = &contents.streams;
    let singles = singles_rates(&contents.streams)?;
    let pairs = [
        pair_histogram(s1, s2, axis)?,
        pair_histogram(s1, s3, axis)?,
        pair_histogram(s2, s3, axis)?,
    ];
    let triple = triple_histogram(s1, s2, s3, axis)?;
    let out_dir = resolve_out(out, None, "hists");
    write_histogram_bundle(&out_dir, &singles, &pairs, &triple)?;
    println!("wrote {}", out_dir.display());
    println!(
        "axis: {} bins of {} out to {}",
        axis.num_bins(),
        format_ps(axis.bin_width_ps()),
        format_ps(axis.tau_max_ps())
    );
    let rates = singles.rates_hz();
    for (i, rate) in rates.iter().enumerate() {
        println!(
            "singles channel {}: {} events ({:.6} /s)",
            i + 1,
            singles.counts()[i],
            rate
        );
    }
    for pair in &pairs {
        let (a, b) = pair.channels();
        println!("pair_{a}{b} total {}", pair.total());
    }
    println!("triple total {}", triple.total());
    Ok(())
}

fn cmd_normalize(
    hists: &Path,
    out: Option<PathBuf>,
    floor: Option<f64>,
    exclusion_radius: Option<i64>,
    tail: Option<&str>,
) -> Result<(), CliError> {
    let (singles, pairs, triple) = read_histogram_bundle(hists)?;
    let defaults = CorrOptions::default();
    let options = CorrOptions {
        tail: match tail {
            Some(name) => tail_flag(name)?,
            None => defaults.tail,
        },
        exclusion_radius_bins: exclusion_radius.unwrap_or(defaults.exclusion_radius_bins),
    };
    let model = accidental_model_from_pairs(&pairs[0], &pairs[1], &pairs[2], &singles, &options)?;
    let floor_hz = match floor {
        Some(f) => f,
        None => default_mask_floor(&model),
    };
    let normalized = normalized_g3(&triple, &model, floor_hz)?;
    let significance = peak_significance(&normalized).ok();
    let out_dir = resolve_out(out, None, "norm");
    ensure_dir(&out_dir)?;
    write_model(&out_dir, &model)?;
    write_normalized(&out_dir, &normalized, floor_hz, significance)?;
    println!("wrote {}", out_dir.display());
    println!("flat accidental rate {:.6e} /s", model.flat_hz());
    println!("mask floor {floor_hz:.6e} /s");
    println!(
        "unmasked bins {} of {}",
        normalized.unmasked_count(),
        normalized.masked().len()
    );
    if normalized.unmasked_count() > 0 {
        println!("map mean {:.6}", normalized.unmasked_mean());
    }
    if !normalized.is_masked(0, 0) {
        println!("center g3n {:.6}", normalized.center_value());
    }
    if let Some(p) = significance {
        println!("peak significance {p:.6e}");
    }
    Ok(())
}

fn cmd_coarsegrain(
    input: &Path,
    pixel: Option<&str>,
    strip: i64,
    window: Option<&str>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let window_tau_max_ps = match window {
        Some(text) => Some(duration_flag("window", text)?),
        None => None,
    };
    let out_dir = resolve_out(out, None, "coarse");
    ensure_dir(&out_dir)?;

    if input.join("normalized.json").is_file() {
        let (normalized, floor_hz) = read_normalized(input)?;
        let options = CoarseOptions {
            strip_halfwidth: strip,
            pixel_width_ps: match pixel {
                Some(text) => duration_flag("pixel", text)?,
                None => normalized.axis().bin_width_ps(),
            },
            window_tau_max_ps,
        };
        let axis = normalized.axis();
        let duration_ps = normalized.duration_ps();
        let coarse_obs = coarse_grain_values(axis, duration_ps, normalized.observed(), &options)?;
        let coarse_exp = coarse_grain_values(axis, duration_ps, normalized.expected(), &options)?;
        let floor_counts = floor_hz * ps_to_seconds(duration_ps);
        let ratio = normalize_matrices(
            coarse_obs.axis(),
            duration_ps,
            coarse_obs.values().to_vec(),
            coarse_exp.values().to_vec(),
            floor_counts,
        )?;
        bundle::write_coarse_matrix(&out_dir, "coarse_observed", &coarse_obs)?;
        bundle::write_coarse_matrix(&out_dir, "coarse_expected", &coarse_exp)?;
        bundle::write_partition(&out_dir, &coarse_obs)?;
        bundle::write_coarse_ratio(
            &out_dir,
            &ratio,
            floor_hz,
            options.pixel_width_ps,
            options.strip_halfwidth,
        )?;
        println!("wrote {}", out_dir.display());
        println!(
            "pixel {} strip {} bins",
            format_ps(options.pixel_width_ps),
            options.strip_halfwidth
        );
        println!(
            "unmasked bins {} of {}",
            ratio.unmasked_count(),
            ratio.masked().len()
        );
        if ratio.unmasked_count() > 0 {
            println!("coarse map mean {:.6}", ratio.unmasked_mean());
        }
        if !ratio.is_masked(0, 0) {
            println!("center g3n {:.6}", ratio.center_value());
        }
        return Ok(());
    }

    if input.join("triple.json").is_file() {
        let triple = read_triple(input)?;
        let options = CoarseOptions {
            strip_halfwidth: strip,
            pixel_width_ps: match pixel {
                Some(text) => duration_flag("pixel", text)?,
                None => triple.axis().bin_width_ps(),
            },
            window_tau_max_ps,
        };
        let coarse = coarse_grain(&triple, &options)?;
        bundle::write_coarse(&out_dir, "coarse_map", &coarse)?;
        println!("wrote {}", out_dir.display());
        println!(
            "pixel {} strip {} bins",
            format_ps(options.pixel_width_ps),
            options.strip_halfwidth
        );
        println!("center count {}", coarse.value_at(0, 0));
        for region in coarse.regions() {
            println!(
                "region {}: {} bins, mean {:.6}",
                region.label.name(),
                region.bins,
                region.mean
            );
        }
        return Ok(());
    }

    Err(CliError::validation(format!(
        "{} contains neither normalized.json nor triple.json",
        input.display()
    )))
}

fn cmd_predict(gamma2: f64, beta2: f64, margin: f64) -> Result<(), CliError> {
    let params = PdcParams::from_intensities(gamma2, beta2)?;
    let g2 = g2_seed(&params)?;
    let g3 = g3_seed(&params)?;
    let report = classify_regime(gamma2, beta2, margin)?;
    println!("gamma_sq {gamma2:e}");
    println!("beta_sq {beta2:e}");
    println!("g2_seed {g2:e}");
    println!("g3_seed {g3:e}");
    println!("g3n_peak {}", predicted_g3n_peak());
    println!("regime {}", report.dominant.name());
    println!(
        "narrow_window {}",
        if report.narrow_window_ok { "ok" } else { "outside" }
    );
    println!(
        "extended_window {}",
        if report.extended_window_ok { "ok" } else { "outside" }
    );
    println!("margin {margin}");
    Ok(())
}

fn cmd_export(tags: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let contents = read_tag_file(tags)?;
    let out_path = resolve_out(out, None, "streams.csv");
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_streams_csv(&out_path, &contents.streams)?;
    let total: usize = contents.streams.iter().map(|s| s.len()).sum();
    println!("wrote {} ({total} events)", out_path.display());
    Ok(())
}
