//! CSV + JSON result bundles.
//!
//! Every tabular artifact is a pair of files: a CSV with the numbers and a
//! JSON sidecar with the metadata needed to reinterpret them (axis,
//! duration, channels, …). 1-D histograms are two-column CSVs
//! (`tau_ps,count`); 2-D maps are rectangular matrices whose header row
//! carries the τ₁₃ bin centers and whose first column carries the τ₁₂ bin
//! centers. Masked bins are written as empty cells. Floating-point values
//! use Rust's shortest round-trip formatting, which is locale-independent,
//! so reading a bundle back reproduces the exact same doubles.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::background::{AccidentalModel, NormalizedTriple};
use crate::coarse::{CoarseGrainOutput, Pixel, PixelatedProfile, RegionLabel};
use crate::coincidence::{HistogramAxis, PairHistogram, SinglesRates, TripleHistogram};
use crate::sim::DetectionStream;

/// Errors from reading or writing result bundles.
#[derive(Debug, Error)]
pub enum BundleError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("malformed {path}: {detail}")]
    Format { path: PathBuf, detail: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_owned(),
        source,
    }
}

fn format_err(path: &Path, detail: impl Into<String>) -> BundleError {
    BundleError::Format {
        path: path.to_owned(),
        detail: detail.into(),
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Clone, Copy)]
struct AxisMeta {
    bin_width_ps: u64,
    tau_max_ps: u64,
}

impl AxisMeta {
    fn of(axis: HistogramAxis) -> Self {
        Self {
            bin_width_ps: axis.bin_width_ps(),
            tau_max_ps: axis.tau_max_ps(),
        }
    }

    fn to_axis(self, path: &Path) -> Result<HistogramAxis, BundleError> {
        HistogramAxis::new(self.bin_width_ps, self.tau_max_ps)
            .map_err(|e| format_err(path, e.to_string()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BundleError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| BundleError::Json {
        path: path.to_owned(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BundleError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| BundleError::Json {
        path: path.to_owned(),
        source,
    })
}

// ---------------------------------------------------------------- singles

#[derive(Debug, Serialize, Deserialize)]
struct SinglesMeta {
    kind: String,
    duration_ps: u64,
    counts: [u64; 3],
    rates_hz: [f64; 3],
}

/// Write `singles.json`.
pub fn write_singles(dir: &Path, singles: &SinglesRates) -> Result<(), BundleError> {
    let meta = SinglesMeta {
        kind: "singles".into(),
        duration_ps: singles.duration_ps(),
        counts: singles.counts(),
        rates_hz: singles.rates_hz(),
    };
    write_json(&dir.join("singles.json"), &meta)
}

/// Read `singles.json`.
pub fn read_singles(dir: &Path) -> Result<SinglesRates, BundleError> {
    let path = dir.join("singles.json");
    let meta: SinglesMeta = read_json(&path)?;
    if meta.kind != "singles" {
        return Err(format_err(&path, format!("unexpected kind {:?}", meta.kind)));
    }
    Ok(SinglesRates::from_counts(meta.counts, meta.duration_ps))
}

// ------------------------------------------------------- pair histograms

#[derive(Debug, Serialize, Deserialize)]
struct PairMeta {
    kind: String,
    channels: (u8, u8),
    axis: AxisMeta,
    duration_ps: u64,
    total: u64,
}

fn pair_stem(channels: (u8, u8)) -> String {
    format!("pair_{}{}", channels.0, channels.1)
}

/// Write `pair_ij.csv` + `pair_ij.json` for one pair histogram.
pub fn write_pair(dir: &Path, hist: &PairHistogram) -> Result<(), BundleError> {
    let stem = pair_stem(hist.channels());
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut csv = String::from("tau_ps,count\n");
    for k in hist.axis().bin_range() {
        csv.push_str(&format!("{},{}\n", hist.axis().bin_center_ps(k), hist.count_at(k)));
    }
    fs::write(&csv_path, csv).map_err(io_err(&csv_path))?;
    let meta = PairMeta {
        kind: "pair_histogram".into(),
        channels: hist.channels(),
        axis: AxisMeta::of(hist.axis()),
        duration_ps: hist.duration_ps(),
        total: hist.total(),
    };
    write_json(&dir.join(format!("{stem}.json")), &meta)
}

/// Read one pair histogram back from its bundle files.
pub fn read_pair(dir: &Path, channels: (u8, u8)) -> Result<PairHistogram, BundleError> {
    let stem = pair_stem(channels);
    let json_path = dir.join(format!("{stem}.json"));
    let meta: PairMeta = read_json(&json_path)?;
    if meta.kind != "pair_histogram" {
        return Err(format_err(&json_path, format!("unexpected kind {:?}", meta.kind)));
    }
    if meta.channels != channels {
        return Err(format_err(
            &json_path,
            format!("expected channels {channels:?}, found {:?}", meta.channels),
        ));
    }
    let axis = meta.axis.to_axis(&json_path)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let text = fs::read_to_string(&csv_path).map_err(io_err(&csv_path))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("tau_ps,count") => {}
        other => {
            return Err(format_err(
                &csv_path,
                format!("expected 'tau_ps,count' header, found {other:?}"),
            ))
        }
    }
    let mut counts = Vec::with_capacity(axis.num_bins());
    for (i, line) in lines.enumerate() {
        let (tau, count) = line
            .split_once(',')
            .ok_or_else(|| format_err(&csv_path, format!("row {i} is not two columns")))?;
        let tau: i64 = tau
            .parse()
            .map_err(|_| format_err(&csv_path, format!("bad tau {tau:?}")))?;
        let want = axis.bin_center_ps(-axis.half_bins() + i as i64);
        if tau != want {
            return Err(format_err(
                &csv_path,
                format!("row {i}: tau {tau} does not match the axis ({want})"),
            ));
        }
        let count: u64 = count
            .parse()
            .map_err(|_| format_err(&csv_path, format!("bad count {count:?}")))?;
        counts.push(count);
    }
    let hist = PairHistogram::from_parts(channels, axis, meta.duration_ps, counts)
        .map_err(|e| format_err(&csv_path, e.to_string()))?;
    if hist.total() != meta.total {
        return Err(format_err(
            &csv_path,
            format!("total {} does not match metadata {}", hist.total(), meta.total),
        ));
    }
    Ok(hist)
}

// ------------------------------------------------------------ 2-D matrices

/// Write a rectangular matrix CSV: header row of τ₁₃ centers, first column
/// of τ₁₂ centers, one cell per bin (None → empty).
fn write_matrix_csv<F>(path: &Path, axis: HistogramAxis, cell: F) -> Result<(), BundleError>
where
    F: Fn(i64, i64) -> Option<String>,
{
    let mut csv = String::from("tau12_ps");
    for l in axis.bin_range() {
        csv.push(',');
        csv.push_str(&axis.bin_center_ps(l).to_string());
    }
    csv.push('\n');
    for k in axis.bin_range() {
        csv.push_str(&axis.bin_center_ps(k).to_string());
        for l in axis.bin_range() {
            csv.push(',');
            if let Some(text) = cell(k, l) {
                csv.push_str(&text);
            }
        }
        csv.push('\n');
    }
    fs::write(path, csv).map_err(io_err(path))
}

/// Read a matrix CSV written by [`write_matrix_csv`]; empty cells → None.
fn read_matrix_csv(path: &Path, axis: HistogramAxis) -> Result<Vec<Option<f64>>, BundleError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let n = axis.num_bins();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(path, "empty file"))?;
    let mut fields = header.split(',');
    if fields.next() != Some("tau12_ps") {
        return Err(format_err(path, "missing tau12_ps header cell"));
    }
    for (j, field) in fields.enumerate() {
        let want = axis.bin_center_ps(-axis.half_bins() + j as i64).to_string();
        if field != want {
            return Err(format_err(
                path,
                format!("header column {j}: {field:?} does not match the axis"),
            ));
        }
    }
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let label = fields
            .next()
            .ok_or_else(|| format_err(path, format!("row {i} is empty")))?;
        let want = axis.bin_center_ps(-axis.half_bins() + i as i64).to_string();
        if label != want {
            return Err(format_err(
                path,
                format!("row {i} label {label:?} does not match the axis"),
            ));
        }
        let mut cols = 0usize;
        for field in fields {
            if field.is_empty() {
                values.push(None);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| format_err(path, format!("bad value {field:?} in row {i}")))?;
                values.push(Some(v));
            }
            cols += 1;
        }
        if cols != n {
            return Err(format_err(
                path,
                format!("row {i} has {cols} value columns, expected {n}"),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(format_err(path, format!("{rows} rows, expected {n}")));
    }
    Ok(values)
}

#[derive(Debug, Serialize, Deserialize)]
struct TripleMeta {
    kind: String,
    axis: AxisMeta,
    duration_ps: u64,
    total: u64,
}

/// Write `triple.csv` + `triple.json`.
pub fn write_triple(dir: &Path, hist: &TripleHistogram) -> Result<(), BundleError> {
    let axis = hist.axis();
    write_matrix_csv(&dir.join("triple.csv"), axis, |k, l| {
        Some(hist.count_at(k, l).to_string())
    })?;
    let meta = TripleMeta {
        kind: "triple_histogram".into(),
        axis: AxisMeta::of(axis),
        duration_ps: hist.duration_ps(),
        total: hist.total(),
    };
    write_json(&dir.join("triple.json"), &meta)
}

/// Read `triple.csv` + `triple.json`.
pub fn read_triple(dir: &Path) -> Result<TripleHistogram, BundleError> {
    let json_path = dir.join("triple.json");
    let meta: TripleMeta = read_json(&json_path)?;
    if meta.kind != "triple_histogram" {
        return Err(format_err(&json_path, format!("unexpected kind {:?}", meta.kind)));
    }
    let axis = meta.axis.to_axis(&json_path)?;
    let csv_path = dir.join("triple.csv");
    let cells = read_matrix_csv(&csv_path, axis)?;
    let mut counts = Vec::with_capacity(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        let v = cell.ok_or_else(|| format_err(&csv_path, format!("empty cell at index {i}")))?;
        if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(format_err(&csv_path, format!("cell {i} is not a count: {v}")));
        }
        counts.push(v as u64);
    }
    let hist = TripleHistogram::from_parts(axis, meta.duration_ps, counts)
        .map_err(|e| format_err(&csv_path, e.to_string()))?;
    if hist.total() != meta.total {
        return Err(format_err(
            &csv_path,
            format!("total {} does not match metadata {}", hist.total(), meta.total),
        ));
    }
    Ok(hist)
}

// ----------------------------------------------------- histogram bundles

/// Write the full histogram stage output: singles, three pairs, triple.
pub fn write_histogram_bundle(
    dir: &Path,
    singles: &SinglesRates,
    pairs: &[PairHistogram; 3],
    triple: &TripleHistogram,
) -> Result<(), BundleError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_singles(dir, singles)?;
    for pair in pairs {
        write_pair(dir, pair)?;
    }
    write_triple(dir, triple)
}

/// Read back a histogram bundle written by [`write_histogram_bundle`].
pub fn read_histogram_bundle(
    dir: &Path,
) -> Result<(SinglesRates, [PairHistogram; 3], TripleHistogram), BundleError> {
    let singles = read_singles(dir)?;
    let pairs = [
        read_pair(dir, (1, 2))?,
        read_pair(dir, (1, 3))?,
        read_pair(dir, (2, 3))?,
    ];
    let triple = read_triple(dir)?;
    Ok((singles, pairs, triple))
}

// ----------------------------------------------------------------- model

#[derive(Debug, Serialize, Deserialize)]
struct ModelMeta {
    kind: String,
    axis: AxisMeta,
    duration_ps: u64,
    singles_hz: [f64; 3],
    flat_hz: f64,
    ridge12_hz: Vec<f64>,
    ridge13_hz: Vec<f64>,
    /// Indexed by d + 2K for d = τ₁₃ − τ₁₂ bin difference.
    ridge23_hz: Vec<f64>,
}

/// Write `model.csv` (full matrix in events/s) + `model.json` (components).
pub fn write_model(dir: &Path, model: &AccidentalModel) -> Result<(), BundleError> {
    write_matrix_csv(&dir.join("model.csv"), model.axis(), |k, l| {
        Some(model.value_at(k, l).to_string())
    })?;
    let meta = ModelMeta {
        kind: "accidental_model".into(),
        axis: AxisMeta::of(model.axis()),
        duration_ps: model.duration_ps(),
        singles_hz: model.singles_hz(),
        flat_hz: model.flat_hz(),
        ridge12_hz: model.ridge12().to_vec(),
        ridge13_hz: model.ridge13().to_vec(),
        ridge23_hz: model.ridge23().to_vec(),
    };
    write_json(&dir.join("model.json"), &meta)
}

// ------------------------------------------------------- normalized maps

#[derive(Debug, Serialize, Deserialize)]
struct NormalizedMeta {
    kind: String,
    axis: AxisMeta,
    duration_ps: u64,
    floor_hz: f64,
    masked_bins: usize,
    unmasked_bins: usize,
    unmasked_mean: Option<f64>,
    center_value: Option<f64>,
    peak_significance: Option<f64>,
}

/// Write `normalized.csv` (masked bins empty), `observed.csv`,
/// `expected.csv` and `normalized.json`.
pub fn write_normalized(
    dir: &Path,
    norm: &NormalizedTriple,
    floor_hz: f64,
    significance: Option<f64>,
) -> Result<(), BundleError> {
    let axis = norm.axis();
    write_matrix_csv(&dir.join("normalized.csv"), axis, |k, l| {
        (!norm.is_masked(k, l)).then(|| norm.value_at(k, l).to_string())
    })?;
    write_matrix_csv(&dir.join("observed.csv"), axis, |k, l| {
        Some(norm.observed_at(k, l).to_string())
    })?;
    write_matrix_csv(&dir.join("expected.csv"), axis, |k, l| {
        Some(norm.expected_at(k, l).to_string())
    })?;
    let unmasked = norm.unmasked_count();
    let meta = NormalizedMeta {
        kind: "normalized_triple".into(),
        axis: AxisMeta::of(axis),
        duration_ps: norm.duration_ps(),
        floor_hz,
        masked_bins: norm.masked().len() - unmasked,
        unmasked_bins: unmasked,
        unmasked_mean: (unmasked > 0).then(|| norm.unmasked_mean()),
        center_value: (!norm.is_masked(0, 0)).then(|| norm.center_value()),
        peak_significance: significance,
    };
    write_json(&dir.join("normalized.json"), &meta)
}

/// Read back a normalized map; returns the map and the floor it was
/// masked with.
pub fn read_normalized(dir: &Path) -> Result<(NormalizedTriple, f64), BundleError> {
    let json_path = dir.join("normalized.json");
    let meta: NormalizedMeta = read_json(&json_path)?;
    if meta.kind != "normalized_triple" {
        return Err(format_err(&json_path, format!("unexpected kind {:?}", meta.kind)));
    }
    let axis = meta.axis.to_axis(&json_path)?;
    let cells = read_matrix_csv(&dir.join("normalized.csv"), axis)?;
    let observed = read_full_matrix(&dir.join("observed.csv"), axis)?;
    let expected = read_full_matrix(&dir.join("expected.csv"), axis)?;
    let masked: Vec<bool> = cells.iter().map(|c| c.is_none()).collect();
    let values: Vec<f64> = cells.iter().map(|c| c.unwrap_or(0.0)).collect();
    let norm = NormalizedTriple::from_parts(
        axis,
        meta.duration_ps,
        values,
        masked,
        observed,
        expected,
    )
    .map_err(|e| format_err(&json_path, e.to_string()))?;
    Ok((norm, meta.floor_hz))
}

fn read_full_matrix(path: &Path, axis: HistogramAxis) -> Result<Vec<f64>, BundleError> {
    let cells = read_matrix_csv(path, axis)?;
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| format_err(path, format!("empty cell at index {i}"))))
        .collect()
}

// ------------------------------------------------------------ coarse maps

#[derive(Debug, Serialize, Deserialize)]
struct PixelMeta {
    first_bin: i64,
    last_bin: i64,
    mean_value: f64,
    mean_delay_ps: f64,
}

impl PixelMeta {
    fn of(p: &Pixel) -> Self {
        Self {
            first_bin: p.first_bin,
            last_bin: p.last_bin,
            mean_value: p.mean_value,
            mean_delay_ps: p.mean_delay_ps,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SectionMeta {
    ridge: String,
    pixel_width_ps: u64,
    center_value: f64,
    has_partial_tail: bool,
    positive: Vec<PixelMeta>,
    negative: Vec<PixelMeta>,
}

impl SectionMeta {
    fn of(ridge: RegionLabel, section: &PixelatedProfile) -> Self {
        Self {
            ridge: ridge.name().into(),
            pixel_width_ps: section.pixel_width_ps(),
            center_value: section.center_value(),
            has_partial_tail: section.has_partial_tail(),
            positive: section.positive().iter().map(PixelMeta::of).collect(),
            negative: section.negative().iter().map(PixelMeta::of).collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RegionMeta {
    label: String,
    bins: usize,
    sum: f64,
    mean: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PartitionMeta {
    kind: String,
    axis: AxisMeta,
    strip_halfwidth: i64,
    regions: Vec<RegionMeta>,
    sections: Vec<SectionMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoarseMeta {
    kind: String,
    axis: AxisMeta,
    duration_ps: u64,
    strip_halfwidth: i64,
    pixel_width_ps: u64,
}

/// Write `<stem>.csv` + `<stem>.json` for a coarse map.
pub fn write_coarse_matrix(
    dir: &Path,
    stem: &str,
    coarse: &CoarseGrainOutput,
) -> Result<(), BundleError> {
    let axis = coarse.axis();
    write_matrix_csv(&dir.join(format!("{stem}.csv")), axis, |k, l| {
        Some(coarse.value_at(k, l).to_string())
    })?;
    let meta = CoarseMeta {
        kind: "coarse_map".into(),
        axis: AxisMeta::of(axis),
        duration_ps: coarse.duration_ps(),
        strip_halfwidth: coarse.partition().strip_halfwidth(),
        pixel_width_ps: coarse.sections()[0].pixel_width_ps(),
    };
    write_json(&dir.join(format!("{stem}.json")), &meta)
}

/// Write `partition.json` describing regions and pixelated cross-sections.
pub fn write_partition(dir: &Path, coarse: &CoarseGrainOutput) -> Result<(), BundleError> {
    let partition = PartitionMeta {
        kind: "region_partition".into(),
        axis: AxisMeta::of(coarse.axis()),
        strip_halfwidth: coarse.partition().strip_halfwidth(),
        regions: coarse
            .regions()
            .iter()
            .map(|r| RegionMeta {
                label: r.label.name().into(),
                bins: r.bins,
                sum: r.sum,
                mean: r.mean,
            })
            .collect(),
        sections: [RegionLabel::Ridge12, RegionLabel::Ridge13, RegionLabel::Ridge23]
            .iter()
            .zip(coarse.sections())
            .map(|(&ridge, section)| SectionMeta::of(ridge, section))
            .collect(),
    };
    write_json(&dir.join("partition.json"), &partition)
}

/// Write both the coarse matrix and the partition description.
pub fn write_coarse(dir: &Path, stem: &str, coarse: &CoarseGrainOutput) -> Result<(), BundleError> {
    write_coarse_matrix(dir, stem, coarse)?;
    write_partition(dir, coarse)
}

#[derive(Debug, Serialize, Deserialize)]
struct CoarseRatioMeta {
    kind: String,
    axis: AxisMeta,
    duration_ps: u64,
    strip_halfwidth: i64,
    pixel_width_ps: u64,
    floor_hz: f64,
    masked_bins: usize,
    unmasked_bins: usize,
    unmasked_mean: Option<f64>,
    center_value: Option<f64>,
}

/// Write `coarse_map.csv` + `coarse_map.json` for a coarse-grained
/// normalized map (ratio of coarse observed to coarse expected counts;
/// masked bins become empty cells).
pub fn write_coarse_ratio(
    dir: &Path,
    ratio: &NormalizedTriple,
    floor_hz: f64,
    pixel_width_ps: u64,
    strip_halfwidth: i64,
) -> Result<(), BundleError> {
    let axis = ratio.axis();
    write_matrix_csv(&dir.join("coarse_map.csv"), axis, |k, l| {
        (!ratio.is_masked(k, l)).then(|| ratio.value_at(k, l).to_string())
    })?;
    let unmasked = ratio.unmasked_count();
    let meta = CoarseRatioMeta {
        kind: "coarse_normalized_map".into(),
        axis: AxisMeta::of(axis),
        duration_ps: ratio.duration_ps(),
        strip_halfwidth,
        pixel_width_ps,
        floor_hz,
        masked_bins: ratio.masked().len() - unmasked,
        unmasked_bins: unmasked,
        unmasked_mean: (unmasked > 0).then(|| ratio.unmasked_mean()),
        center_value: (!ratio.is_masked(0, 0)).then(|| ratio.center_value()),
    };
    write_json(&dir.join("coarse_map.json"), &meta)
}

// ------------------------------------------------------------ tag export

/// Write all three streams as a flat CSV (`channel,timestamp_ps`).
pub fn write_streams_csv(path: &Path, streams: &[DetectionStream; 3]) -> Result<(), BundleError> {
    let mut csv = String::from("channel,timestamp_ps\n");
    for s in streams {
        for &t in s.timestamps() {
            csv.push_str(&format!("{},{t}\n", s.channel()));
        }
    }
    fs::write(path, csv).map_err(io_err(path))
}
