//! Structure-aware coarse graining of 2-D triple-coincidence maps.
//!
//! A `(τ₁₂, τ₁₃)` map has physical structure only in a few places: the
//! center bin (true triples), three ridges where one pair is correlated
//! (τ₁₂ ≈ 0, τ₁₃ ≈ 0, τ₁₂ ≈ τ₁₃), and a featureless accidental background
//! between them. Averaging uniformly would smear the ridges; instead the
//! map is partitioned and each part is compressed according to what it is:
//!
//! * the center bin passes through untouched,
//! * ridge strips are replaced by a pixel-averaged 1-D cross-section taken
//!   along the exact ridge line, evaluated at the bin's along-ridge
//!   coordinate,
//! * the six background regions (two off-diagonal quadrants, four
//!   triangles) are each replaced by their region mean.
//!
//! Pixels chunk outward from the first off-center bin on each side; when
//! the axis length is not a multiple of the pixel width the outermost
//! pixel is shorter and flagged. A pixel width of one bin makes the
//! on-ridge values pass through unchanged.

use thiserror::Error;

use crate::coincidence::{HistogramAxis, TripleHistogram};

/// Errors from coarse graining.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoarseError {
    #[error("central window tau_max {requested} ps exceeds available {available} ps")]
    WindowTooLarge { requested: u64, available: u64 },
    #[error("invalid central window: {0}")]
    InvalidWindow(String),
    #[error("invalid pixel width: {0}")]
    InvalidPixelWidth(String),
    #[error("strip half-width must be non-negative")]
    InvalidStrip,
    #[error("value vector length does not match the axis")]
    LengthMismatch,
}

/// Partition label of one `(k, l)` bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    /// The single bin (0, 0).
    Center,
    /// τ₁₂ ≈ 0 strip (channel 1–2 pair correlated).
    Ridge12,
    /// τ₁₃ ≈ 0 strip (channel 1–3 pair correlated).
    Ridge13,
    /// τ₁₂ ≈ τ₁₃ strip (channel 2–3 pair correlated).
    Ridge23,
    /// k < 0, l > 0 background quadrant.
    QuadrantA,
    /// k > 0, l < 0 background quadrant.
    QuadrantB,
    /// k > 0, l > 0, l < k background triangle.
    Tri1,
    /// k > 0, l > 0, l > k background triangle.
    Tri2,
    /// k < 0, l < 0, l > k background triangle.
    Tri3,
    /// k < 0, l < 0, l < k background triangle.
    Tri4,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 10] = [
        RegionLabel::Center,
        RegionLabel::Ridge12,
        RegionLabel::Ridge13,
        RegionLabel::Ridge23,
        RegionLabel::QuadrantA,
        RegionLabel::QuadrantB,
        RegionLabel::Tri1,
        RegionLabel::Tri2,
        RegionLabel::Tri3,
        RegionLabel::Tri4,
    ];

    /// Stable machine-readable name.
    pub fn name(&self) -> &'static str {
        match self {
            RegionLabel::Center => "center",
            RegionLabel::Ridge12 => "ridge_12",
            RegionLabel::Ridge13 => "ridge_13",
            RegionLabel::Ridge23 => "ridge_23",
            RegionLabel::QuadrantA => "quadrant_a",
            RegionLabel::QuadrantB => "quadrant_b",
            RegionLabel::Tri1 => "triangle_1",
            RegionLabel::Tri2 => "triangle_2",
            RegionLabel::Tri3 => "triangle_3",
            RegionLabel::Tri4 => "triangle_4",
        }
    }

    fn index(&self) -> usize {
        Self::ALL.iter().position(|r| r == self).unwrap()
    }

    /// True for the six featureless background regions.
    pub fn is_background(&self) -> bool {
        matches!(
            self,
            RegionLabel::QuadrantA
                | RegionLabel::QuadrantB
                | RegionLabel::Tri1
                | RegionLabel::Tri2
                | RegionLabel::Tri3
                | RegionLabel::Tri4
        )
    }
}

/// Deterministic partition of a delay grid into center, ridges and
/// background regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPartition {
    axis: HistogramAxis,
    strip_halfwidth: i64,
}

impl RegionPartition {
    pub fn new(axis: HistogramAxis, strip_halfwidth: i64) -> Result<Self, CoarseError> {
        if strip_halfwidth < 0 {
            return Err(CoarseError::InvalidStrip);
        }
        Ok(Self {
            axis,
            strip_halfwidth,
        })
    }

    pub fn axis(&self) -> HistogramAxis {
        self.axis
    }

    pub fn strip_halfwidth(&self) -> i64 {
        self.strip_halfwidth
    }

    /// Label of bin `(k, l)`. Precedence: center, then the exact ridge
    /// lines, then the ridge strips (1-2 before 1-3 before 2-3), then the
    /// background region by sign.
    pub fn label_of(&self, k: i64, l: i64) -> RegionLabel {
        let s = self.strip_halfwidth;
        if k == 0 && l == 0 {
            RegionLabel::Center
        } else if k == 0 {
            RegionLabel::Ridge12
        } else if l == 0 {
            RegionLabel::Ridge13
        } else if l == k {
            RegionLabel::Ridge23
        } else if k.abs() <= s {
            RegionLabel::Ridge12
        } else if l.abs() <= s {
            RegionLabel::Ridge13
        } else if (l - k).abs() <= s {
            RegionLabel::Ridge23
        } else if k < 0 && l > 0 {
            RegionLabel::QuadrantA
        } else if k > 0 && l < 0 {
            RegionLabel::QuadrantB
        } else if k > 0 {
            // l > 0 here: the diagonal l == k is already taken.
            if l < k {
                RegionLabel::Tri1
            } else {
                RegionLabel::Tri2
            }
        } else if l > k {
            RegionLabel::Tri3
        } else {
            RegionLabel::Tri4
        }
    }

    /// Number of bins carrying each label, indexed like [`RegionLabel::ALL`].
    pub fn region_sizes(&self) -> [usize; 10] {
        let mut sizes = [0usize; 10];
        for k in self.axis.bin_range() {
            for l in self.axis.bin_range() {
                sizes[self.label_of(k, l).index()] += 1;
            }
        }
        sizes
    }
}

/// Per-region aggregate over one map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub label: RegionLabel,
    pub bins: usize,
    pub sum: f64,
    pub mean: f64,
}

/// Map with background bins replaced by their region mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionAveraged {
    pub values: Vec<f64>,
    /// Aggregates for every label, in [`RegionLabel::ALL`] order.
    pub regions: Vec<RegionStats>,
}

/// Replace each background bin by the mean of its region; center and
/// ridge bins keep their original values. Stats are reported for every
/// region, ridges included.
pub fn region_average(
    partition: &RegionPartition,
    values: &[f64],
) -> Result<RegionAveraged, CoarseError> {
    let axis = partition.axis();
    let n = axis.num_bins();
    if values.len() != n * n {
        return Err(CoarseError::LengthMismatch);
    }
    let mut sums = [0.0f64; 10];
    let mut bins = [0usize; 10];
    for k in axis.bin_range() {
        for l in axis.bin_range() {
            let idx = partition.label_of(k, l).index();
            sums[idx] += values[axis.offset2(k, l)];
            bins[idx] += 1;
        }
    }
    let mut means = [0.0f64; 10];
    for i in 0..10 {
        if bins[i] > 0 {
            means[i] = sums[i] / bins[i] as f64;
        }
    }
    let mut out = values.to_vec();
    for k in axis.bin_range() {
        for l in axis.bin_range() {
            let label = partition.label_of(k, l);
            if label.is_background() {
                out[axis.offset2(k, l)] = means[label.index()];
            }
        }
    }
    let regions = RegionLabel::ALL
        .iter()
        .map(|&label| RegionStats {
            label,
            bins: bins[label.index()],
            sum: sums[label.index()],
            mean: means[label.index()],
        })
        .collect();
    Ok(RegionAveraged {
        values: out,
        regions,
    })
}

/// Extract the three 1-D cross-sections along the exact ridge lines, in
/// order (1-2, 1-3, 2-3): `value(0, m)`, `value(m, 0)` and `value(m, m)`.
pub fn cross_sections(
    axis: HistogramAxis,
    values: &[f64],
) -> Result<[Vec<f64>; 3], CoarseError> {
    let n = axis.num_bins();
    if values.len() != n * n {
        return Err(CoarseError::LengthMismatch);
    }
    let c12 = axis.bin_range().map(|m| values[axis.offset2(0, m)]).collect();
    let c13 = axis.bin_range().map(|m| values[axis.offset2(m, 0)]).collect();
    let c23 = axis.bin_range().map(|m| values[axis.offset2(m, m)]).collect();
    Ok([c12, c13, c23])
}

/// One averaged pixel of a cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub first_bin: i64,
    pub last_bin: i64,
    pub mean_value: f64,
    /// Mean of the covered bin centers, in picoseconds.
    pub mean_delay_ps: f64,
}

/// Cross-section compressed into fixed-width pixels on each side of zero.
///
/// The zero-delay bin is its own pixel and keeps its exact value; pixels
/// then chunk outward from bins ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelatedProfile {
    axis: HistogramAxis,
    pixel_width_bins: i64,
    center_value: f64,
    positive: Vec<Pixel>,
    negative: Vec<Pixel>,
    has_partial_tail: bool,
}

impl PixelatedProfile {
    pub fn axis(&self) -> HistogramAxis {
        self.axis
    }

    pub fn pixel_width_bins(&self) -> i64 {
        self.pixel_width_bins
    }

    pub fn pixel_width_ps(&self) -> u64 {
        self.pixel_width_bins as u64 * self.axis.bin_width_ps()
    }

    /// Exact value of the zero-delay bin.
    pub fn center_value(&self) -> f64 {
        self.center_value
    }

    /// Pixels covering bins 1..=K, ordered outward.
    pub fn positive(&self) -> &[Pixel] {
        &self.positive
    }

    /// Pixels covering bins −1..=−K, ordered outward (first pixel is the
    /// one touching the center).
    pub fn negative(&self) -> &[Pixel] {
        &self.negative
    }

    /// True when the outermost pixel on either side covers fewer bins
    /// than the pixel width.
    pub fn has_partial_tail(&self) -> bool {
        self.has_partial_tail
    }

    /// Pixel-averaged value at bin `m` (O(1) lookup).
    pub fn pixel_value_for_bin(&self, m: i64) -> f64 {
        if m == 0 {
            self.center_value
        } else if m > 0 {
            self.positive[((m - 1) / self.pixel_width_bins) as usize].mean_value
        } else {
            self.negative[((-m - 1) / self.pixel_width_bins) as usize].mean_value
        }
    }
}

/// Average a cross-section into pixels of `pixel_width_ps`, which must be
/// a positive multiple of the axis bin width.
pub fn pixel_average(
    axis: HistogramAxis,
    section: &[f64],
    pixel_width_ps: u64,
) -> Result<PixelatedProfile, CoarseError> {
    if section.len() != axis.num_bins() {
        return Err(CoarseError::LengthMismatch);
    }
    let dt = axis.bin_width_ps();
    if pixel_width_ps == 0 || !pixel_width_ps.is_multiple_of(dt) {
        return Err(CoarseError::InvalidPixelWidth(format!(
            "{pixel_width_ps} ps is not a positive multiple of the {dt} ps bin width"
        )));
    }
    let w = (pixel_width_ps / dt) as i64;
    let k_max = axis.half_bins();
    let value = |m: i64| section[axis.offset(m)];
    let mut has_partial_tail = false;
    let mut side = |sign: i64| -> Vec<Pixel> {
        let mut pixels = Vec::new();
        let mut start = 1i64;
        while start <= k_max {
            let end = (start + w - 1).min(k_max);
            if end - start + 1 < w {
                has_partial_tail = true;
            }
            let mut sum = 0.0;
            let mut delay_sum = 0.0;
            for m in start..=end {
                sum += value(sign * m);
                delay_sum += axis.bin_center_ps(sign * m) as f64;
            }
            let bins = (end - start + 1) as f64;
            let (first_bin, last_bin) = if sign > 0 {
                (start, end)
            } else {
                (-end, -start)
            };
            pixels.push(Pixel {
                first_bin,
                last_bin,
                mean_value: sum / bins,
                mean_delay_ps: delay_sum / bins,
            });
            start = end + 1;
        }
        pixels
    };
    let positive = side(1);
    let negative = side(-1);
    Ok(PixelatedProfile {
        axis,
        pixel_width_bins: w,
        center_value: value(0),
        positive,
        negative,
        has_partial_tail,
    })
}

/// Restrict a value matrix to a smaller symmetric delay window with the
/// same bin width.
pub fn central_window_values(
    axis: HistogramAxis,
    values: &[f64],
    window_tau_max_ps: u64,
) -> Result<(HistogramAxis, Vec<f64>), CoarseError> {
    let n = axis.num_bins();
    if values.len() != n * n {
        return Err(CoarseError::LengthMismatch);
    }
    let new_axis = HistogramAxis::new(axis.bin_width_ps(), window_tau_max_ps)
        .map_err(|e| CoarseError::InvalidWindow(e.to_string()))?;
    if new_axis.half_bins() > axis.half_bins() {
        return Err(CoarseError::WindowTooLarge {
            requested: window_tau_max_ps,
            available: axis.tau_max_ps(),
        });
    }
    let mut out = Vec::with_capacity(new_axis.num_bins() * new_axis.num_bins());
    for k in new_axis.bin_range() {
        for l in new_axis.bin_range() {
            out.push(values[axis.offset2(k, l)]);
        }
    }
    Ok((new_axis, out))
}

/// Restrict a triple histogram to a smaller symmetric delay window.
pub fn central_window(
    hist: &TripleHistogram,
    window_tau_max_ps: u64,
) -> Result<TripleHistogram, CoarseError> {
    let axis = hist.axis();
    let values: Vec<f64> = hist.counts().iter().map(|&c| c as f64).collect();
    let (new_axis, cropped) = central_window_values(axis, &values, window_tau_max_ps)?;
    let counts: Vec<u64> = cropped.iter().map(|&v| v as u64).collect();
    Ok(TripleHistogram::from_parts(new_axis, hist.duration_ps(), counts)
        .expect("cropped matrix matches its axis"))
}

/// Coarse-graining parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseOptions {
    /// Ridge strips cover bins within this half-width of the ridge line.
    pub strip_halfwidth: i64,
    /// Along-ridge pixel width; must be a multiple of the bin width.
    pub pixel_width_ps: u64,
    /// Optional restriction to a central window before coarse graining.
    pub window_tau_max_ps: Option<u64>,
}

/// Result of coarse graining one map.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrainOutput {
    axis: HistogramAxis,
    duration_ps: u64,
    partition: RegionPartition,
    values: Vec<f64>,
    regions: Vec<RegionStats>,
    sections: [PixelatedProfile; 3],
}

impl CoarseGrainOutput {
    pub fn axis(&self) -> HistogramAxis {
        self.axis
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    pub fn partition(&self) -> RegionPartition {
        self.partition
    }

    /// The coarse map on the (possibly cropped) fine grid.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, k: i64, l: i64) -> f64 {
        self.values[self.axis.offset2(k, l)]
    }

    /// Aggregates for every region label.
    pub fn regions(&self) -> &[RegionStats] {
        &self.regions
    }

    /// Pixelated ridge cross-sections, in order (1-2, 1-3, 2-3).
    pub fn sections(&self) -> &[PixelatedProfile; 3] {
        &self.sections
    }
}

/// Coarse-grain a value matrix: background regions to their means, ridge
/// strips to their pixelated on-line cross-sections, center untouched.
pub fn coarse_grain_values(
    axis: HistogramAxis,
    duration_ps: u64,
    values: &[f64],
    options: &CoarseOptions,
) -> Result<CoarseGrainOutput, CoarseError> {
    let (axis, values) = match options.window_tau_max_ps {
        Some(window) => central_window_values(axis, values, window)?,
        None => {
            let n = axis.num_bins();
            if values.len() != n * n {
                return Err(CoarseError::LengthMismatch);
            }
            (axis, values.to_vec())
        }
    };
    let partition = RegionPartition::new(axis, options.strip_halfwidth)?;
    let averaged = region_average(&partition, &values)?;
    let [c12, c13, c23] = cross_sections(axis, &values)?;
    let sections = [
        pixel_average(axis, &c12, options.pixel_width_ps)?,
        pixel_average(axis, &c13, options.pixel_width_ps)?,
        pixel_average(axis, &c23, options.pixel_width_ps)?,
    ];
    let mut out = averaged.values;
    for k in axis.bin_range() {
        for l in axis.bin_range() {
            let v = match partition.label_of(k, l) {
                RegionLabel::Center => continue, // exact passthrough
                RegionLabel::Ridge12 => sections[0].pixel_value_for_bin(l),
                RegionLabel::Ridge13 => sections[1].pixel_value_for_bin(k),
                RegionLabel::Ridge23 => {
                    // Along-diagonal coordinate of an off-diagonal strip
                    // bin; never 0 for strip bins, so the center pixel is
                    // only read by the exact diagonal.
                    sections[2].pixel_value_for_bin((k + l).div_euclid(2))
                }
                _ => continue, // background already averaged
            };
            out[axis.offset2(k, l)] = v;
        }
    }
    Ok(CoarseGrainOutput {
        axis,
        duration_ps,
        partition,
        values: out,
        regions: averaged.regions,
        sections,
    })
}

/// Coarse-grain a triple-coincidence histogram (counts enter as f64).
pub fn coarse_grain(
    hist: &TripleHistogram,
    options: &CoarseOptions,
) -> Result<CoarseGrainOutput, CoarseError> {
    let values: Vec<f64> = hist.counts().iter().map(|&c| c as f64).collect();
    coarse_grain_values(hist.axis(), hist.duration_ps(), &values, options)
}
