//! Monte-Carlo generation of detector time-tag streams.
//!
//! The simulated source emits photon pairs at rate `pair_rate_hz` and,
//! optionally, genuine photon triplets at `triplet_rate_hz`, uniformly over
//! the acquisition. Photons of one emission share an emission time and
//! receive independent Gaussian detection jitter of width `corr_sigma_s`.
//! Each photon is routed to detector channel 1, 2 or 3 — or lost — by the
//! cumulative-probability rule over `routing = (η₁, η₂, η₃)`. Independent
//! Poissonian dark/background counts are added per channel, every channel
//! is sorted, duplicate picosecond timestamps are collapsed (counted in the
//! output metadata), and a per-channel non-paralyzable dead time is applied.
//!
//! All draws come from a single ChaCha8 stream seeded with `rng_seed`, and
//! the generation order is fixed, so a given `(config, seed)` reproduces
//! its streams bit-for-bit on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::units::{seconds_to_ps, PS_PER_SECOND};

/// Name of the pseudo-random generator, recorded in output metadata.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Default cap on the expected number of generated photons.
pub const DEFAULT_EVENT_CAP: u64 = 1_000_000_000;

/// Errors from configuration validation and stream construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("expected event count {expected:.3e} exceeds the cap {cap}")]
    Overflow { expected: f64, cap: u64 },
    #[error("timestamps must be strictly increasing (violation at index {0})")]
    Unsorted(usize),
    #[error("timestamp {timestamp} is not below the stream duration {duration_ps}")]
    OutOfRange { timestamp: u64, duration_ps: u64 },
    #[error("stream duration must fit the signed 64-bit picosecond range")]
    DurationTooLarge,
    #[error("dead time must be non-negative and finite")]
    NegativeDeadTime,
}

/// Simulation parameters. Rates are per second, times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Photon-pair emission rate of the source.
    pub pair_rate_hz: f64,
    /// Genuine photon-triplet emission rate (0 disables injection).
    pub triplet_rate_hz: f64,
    /// Acquisition length in seconds.
    pub sim_time_s: f64,
    /// Gaussian detection-jitter width applied to each photon.
    pub corr_sigma_s: f64,
    /// Probability that one photon lands on channel 1, 2, 3; the remainder
    /// is lost. Must each lie in [0, 1] and sum to at most 1.
    pub routing: [f64; 3],
    /// Uncorrelated background/dark count rate per channel.
    pub background_hz: [f64; 3],
    /// Non-paralyzable dead time per channel (0 disables).
    pub dead_time_s: [f64; 3],
    /// Seed of the ChaCha8 generator.
    pub rng_seed: u64,
    /// Upper bound on the expected photon count before generation starts.
    pub event_cap: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            pair_rate_hz: 0.0,
            triplet_rate_hz: 0.0,
            sim_time_s: 1.0,
            corr_sigma_s: 100e-12,
            routing: [0.3, 0.3, 0.3],
            background_hz: [0.0; 3],
            dead_time_s: [0.0; 3],
            rng_seed: 0,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

impl SimConfig {
    /// Check every physical constraint; called by [`simulate`].
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |msg: String| Err(SimError::ConfigInvalid(msg));
        for (name, value) in [
            ("pair_rate_hz", self.pair_rate_hz),
            ("triplet_rate_hz", self.triplet_rate_hz),
            ("corr_sigma_s", self.corr_sigma_s),
        ] {
            if !value.is_finite() || value < 0.0 {
                return err(format!("{name} must be non-negative and finite, got {value}"));
            }
        }
        if !self.sim_time_s.is_finite() || self.sim_time_s <= 0.0 {
            return err(format!(
                "sim_time_s must be positive, got {}",
                self.sim_time_s
            ));
        }
        let mut eta_sum = 0.0;
        for (i, eta) in self.routing.iter().enumerate() {
            if !eta.is_finite() || *eta < 0.0 || *eta > 1.0 {
                return err(format!("routing[{i}] must lie in [0, 1], got {eta}"));
            }
            eta_sum += eta;
        }
        if eta_sum > 1.0 + 1e-12 {
            return err(format!(
                "routing probabilities must sum to at most 1, got {eta_sum}"
            ));
        }
        for (i, b) in self.background_hz.iter().enumerate() {
            if !b.is_finite() || *b < 0.0 {
                return err(format!(
                    "background_hz[{i}] must be non-negative and finite, got {b}"
                ));
            }
        }
        for (i, d) in self.dead_time_s.iter().enumerate() {
            if !d.is_finite() || *d < 0.0 {
                return err(format!(
                    "dead_time_s[{i}] must be non-negative and finite, got {d}"
                ));
            }
        }
        let duration = seconds_to_ps(self.sim_time_s)
            .map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        if duration == 0 {
            return err("sim_time_s rounds to zero picoseconds".into());
        }
        if duration > i64::MAX as u64 {
            return Err(SimError::DurationTooLarge);
        }
        Ok(())
    }

    /// Acquisition length in integer picoseconds.
    pub fn duration_ps(&self) -> u64 {
        seconds_to_ps(self.sim_time_s).unwrap_or(0)
    }

    /// Expected photon count across all processes, used for the cap check.
    pub fn expected_events(&self) -> f64 {
        let t = self.sim_time_s;
        let background: f64 = self.background_hz.iter().sum();
        (2.0 * self.pair_rate_hz + 3.0 * self.triplet_rate_hz + background) * t
    }
}

/// Sorted time tags of one detector channel.
///
/// Timestamps are strictly increasing integer picoseconds inside
/// `[0, duration_ps)`; the constructor enforces both, so downstream
/// consumers can rely on sortedness without re-checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionStream {
    channel: u8,
    duration_ps: u64,
    timestamps: Vec<u64>,
}

impl DetectionStream {
    /// Build a stream, validating order and range.
    pub fn new(channel: u8, duration_ps: u64, timestamps: Vec<u64>) -> Result<Self, SimError> {
        if duration_ps > i64::MAX as u64 {
            return Err(SimError::DurationTooLarge);
        }
        for (i, window) in timestamps.windows(2).enumerate() {
            if window[0] >= window[1] {
                return Err(SimError::Unsorted(i + 1));
            }
        }
        if let Some(&last) = timestamps.last() {
            if last >= duration_ps {
                return Err(SimError::OutOfRange {
                    timestamp: last,
                    duration_ps,
                });
            }
        }
        Ok(Self {
            channel,
            duration_ps,
            timestamps,
        })
    }

    pub(crate) fn from_sorted_unchecked(
        channel: u8,
        duration_ps: u64,
        timestamps: Vec<u64>,
    ) -> Self {
        debug_assert!(timestamps.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(timestamps.last().is_none_or(|&t| t < duration_ps));
        Self {
            channel,
            duration_ps,
            timestamps,
        }
    }

    /// 1-based detector channel number.
    pub fn channel(&self) -> u8 {
        self.channel
    }

    /// Acquisition length in picoseconds.
    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    /// The sorted time tags.
    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Mean detection rate over the acquisition, in events per second.
    pub fn rate_hz(&self) -> f64 {
        self.timestamps.len() as f64 / (self.duration_ps as f64 / PS_PER_SECOND)
    }
}

/// Result of one simulation run.
#[derive(Debug, Clone)]
pub struct SimOutput {
    /// One stream per detector channel, in channel order 1, 2, 3.
    pub streams: [DetectionStream; 3],
    /// Per-channel count of same-picosecond duplicates collapsed to one tag.
    pub collapsed_duplicates: [u64; 3],
    /// Name of the generator that produced the run.
    pub rng_algorithm: &'static str,
    /// Seed the run was generated from.
    pub rng_seed: u64,
}

impl SimOutput {
    /// Total duplicates collapsed across all channels.
    pub fn total_collapsed(&self) -> u64 {
        self.collapsed_duplicates.iter().sum()
    }
}

/// Run the Monte-Carlo generation for one acquisition.
pub fn simulate(config: &SimConfig) -> Result<SimOutput, SimError> {
    config.validate()?;
    let expected = config.expected_events();
    if expected > config.event_cap as f64 {
        return Err(SimError::Overflow {
            expected,
            cap: config.event_cap,
        });
    }

    let duration_ps = config.duration_ps();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut channels: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];

    // Correlated emissions first, background last; the stage order is part
    // of the determinism contract.
    emit_bunches(config, &mut rng, duration_ps, 2, config.pair_rate_hz, &mut channels)?;
    emit_bunches(
        config,
        &mut rng,
        duration_ps,
        3,
        config.triplet_rate_hz,
        &mut channels,
    )?;
    for (ch, channel) in channels.iter_mut().enumerate() {
        let n = draw_poisson(&mut rng, config.background_hz[ch] * config.sim_time_s)?;
        channel.reserve(n as usize);
        for _ in 0..n {
            let t = rng.gen::<f64>() * config.sim_time_s;
            if let Some(ps) = to_ps_in_range(t, duration_ps) {
                channel.push(ps);
            }
        }
    }

    let mut collapsed = [0u64; 3];
    let mut streams: Vec<DetectionStream> = Vec::with_capacity(3);
    for (ch, mut tags) in channels.into_iter().enumerate() {
        tags.sort_unstable();
        let before = tags.len();
        tags.dedup();
        collapsed[ch] = (before - tags.len()) as u64;
        let kept = dead_time_filter(&tags, seconds_to_ps(config.dead_time_s[ch]).unwrap_or(0));
        streams.push(DetectionStream::from_sorted_unchecked(
            ch as u8 + 1,
            duration_ps,
            kept,
        ));
    }
    let streams: [DetectionStream; 3] = streams.try_into().expect("three channels");

    Ok(SimOutput {
        streams,
        collapsed_duplicates: collapsed,
        rng_algorithm: RNG_ALGORITHM,
        rng_seed: config.rng_seed,
    })
}

/// Re-apply a non-paralyzable dead time to an already sorted stream.
///
/// An event is kept iff its time is at least the last kept time plus the
/// dead time; the first event is always kept.
pub fn apply_dead_time(stream: &DetectionStream, dead_time_s: f64) -> Result<DetectionStream, SimError> {
    if !dead_time_s.is_finite() || dead_time_s < 0.0 {
        return Err(SimError::NegativeDeadTime);
    }
    let dead_ps = seconds_to_ps(dead_time_s).map_err(|_| SimError::NegativeDeadTime)?;
    Ok(DetectionStream::from_sorted_unchecked(
        stream.channel,
        stream.duration_ps,
        dead_time_filter(&stream.timestamps, dead_ps),
    ))
}

/// Emit Poisson-many bunches of `photons_per_bunch` jittered, routed photons.
fn emit_bunches(
    config: &SimConfig,
    rng: &mut ChaCha8Rng,
    duration_ps: u64,
    photons_per_bunch: u32,
    rate_hz: f64,
    channels: &mut [Vec<u64>; 3],
) -> Result<(), SimError> {
    let n_bunches = draw_poisson(rng, rate_hz * config.sim_time_s)?;
    let jitter = if config.corr_sigma_s > 0.0 {
        Some(Normal::new(0.0, config.corr_sigma_s).expect("validated sigma"))
    } else {
        None
    };
    for _ in 0..n_bunches {
        let t_emit = rng.gen::<f64>() * config.sim_time_s;
        for _ in 0..photons_per_bunch {
            let t = match &jitter {
                Some(normal) => t_emit + normal.sample(rng),
                None => t_emit,
            };
            // Routing consumes one uniform draw per photon even when the
            // photon later falls outside the acquisition, keeping the draw
            // sequence independent of the jitter outcome.
            let route = rng.gen::<f64>();
            let channel = if route < config.routing[0] {
                Some(0)
            } else if route < config.routing[0] + config.routing[1] {
                Some(1)
            } else if route < config.routing[0] + config.routing[1] + config.routing[2] {
                Some(2)
            } else {
                None
            };
            if let (Some(ch), Some(ps)) = (channel, to_ps_in_range(t, duration_ps)) {
                channels[ch].push(ps);
            }
        }
    }
    Ok(())
}

/// Round a time in seconds to integer picoseconds, dropping out-of-range.
fn to_ps_in_range(t_seconds: f64, duration_ps: u64) -> Option<u64> {
    let ps = (t_seconds * PS_PER_SECOND).round();
    if ps < 0.0 || ps >= duration_ps as f64 {
        None
    } else {
        Some(ps as u64)
    }
}

/// Greedy non-paralyzable dead-time filter over sorted tags.
fn dead_time_filter(sorted: &[u64], dead_ps: u64) -> Vec<u64> {
    if dead_ps == 0 || sorted.is_empty() {
        return sorted.to_vec();
    }
    let mut kept = Vec::with_capacity(sorted.len());
    let mut next_accepted = 0u64;
    for &t in sorted {
        if t >= next_accepted {
            kept.push(t);
            next_accepted = t.saturating_add(dead_ps);
        }
    }
    kept
}

/// Draw a Poisson count; `lambda = 0` yields 0 without touching the RNG.
fn draw_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> Result<u64, SimError> {
    if lambda == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(lambda)
        .map_err(|_| SimError::ConfigInvalid(format!("invalid Poisson mean {lambda}")))?;
    Ok(dist.sample(rng) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SimConfig {
        SimConfig {
            pair_rate_hz: 1e4,
            sim_time_s: 2.0,
            corr_sigma_s: 100e-12,
            routing: [0.3, 0.3, 0.3],
            background_hz: [1e3, 1e3, 1e3],
            rng_seed: 42,
            ..SimConfig::default()
        }
    }

    #[test]
    fn same_seed_reproduces_streams_bit_for_bit() {
        let config = base_config();
        let a = simulate(&config).unwrap();
        let b = simulate(&config).unwrap();
        for ch in 0..3 {
            assert_eq!(a.streams[ch], b.streams[ch]);
        }
        assert_eq!(a.collapsed_duplicates, b.collapsed_duplicates);
        let other = simulate(&SimConfig {
            rng_seed: 43,
            ..config
        })
        .unwrap();
        assert_ne!(a.streams[0], other.streams[0]);
    }

    #[test]
    fn streams_are_sorted_in_range_and_labelled() {
        let out = simulate(&base_config()).unwrap();
        for (i, stream) in out.streams.iter().enumerate() {
            assert_eq!(stream.channel(), i as u8 + 1);
            assert_eq!(stream.duration_ps(), 2_000_000_000_000);
            assert!(stream.timestamps().windows(2).all(|w| w[0] < w[1]));
            assert!(stream.timestamps().iter().all(|&t| t < stream.duration_ps()));
            assert!(!stream.is_empty());
        }
        assert_eq!(out.rng_algorithm, RNG_ALGORITHM);
    }

    #[test]
    fn routing_sum_above_one_is_rejected() {
        let config = SimConfig {
            routing: [0.5, 0.4, 0.2],
            ..base_config()
        };
        let err = simulate(&config).unwrap_err();
        assert!(matches!(err, SimError::ConfigInvalid(ref m) if m.contains("sum")));
    }

    #[test]
    fn expected_event_cap_is_enforced() {
        let config = SimConfig {
            pair_rate_hz: 1e9,
            sim_time_s: 10.0,
            event_cap: 1_000_000,
            ..base_config()
        };
        assert!(matches!(
            simulate(&config),
            Err(SimError::Overflow { .. })
        ));
    }

    #[test]
    fn dead_time_worked_examples() {
        // [0, 10 ns, 15 ns] with 12 ns dead time: 10 ns arrives while dead,
        // 15 ns is past 0 + 12 ns and is kept.
        let stream = DetectionStream::new(1, 1_000_000, vec![0, 10_000, 15_000]).unwrap();
        let filtered = apply_dead_time(&stream, 12e-9).unwrap();
        assert_eq!(filtered.timestamps(), &[0, 15_000]);

        // [0, 5, 10, 15] ns with 6 ns dead time keeps every other event.
        let stream = DetectionStream::new(1, 1_000_000, vec![0, 5_000, 10_000, 15_000]).unwrap();
        let filtered = apply_dead_time(&stream, 6e-9).unwrap();
        assert_eq!(filtered.timestamps(), &[0, 10_000]);
    }

    #[test]
    fn dead_time_filter_properties() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mut tags: Vec<u64> = (0..200).map(|_| rng.gen_range(0..1_000_000)).collect();
            tags.sort_unstable();
            tags.dedup();
            let stream = DetectionStream::new(1, 1_000_000, tags.clone()).unwrap();
            let dead_ps = rng.gen_range(1..50_000u64);
            let filtered = apply_dead_time(&stream, dead_ps as f64 / PS_PER_SECOND).unwrap();
            // Gaps at least dead time, first event kept, subset of input.
            assert!(filtered
                .timestamps()
                .windows(2)
                .all(|w| w[1] - w[0] >= dead_ps));
            if !tags.is_empty() {
                assert_eq!(filtered.timestamps()[0], tags[0]);
            }
            assert!(filtered.timestamps().iter().all(|t| tags.contains(t)));
            // Idempotent.
            let twice = apply_dead_time(&filtered, dead_ps as f64 / PS_PER_SECOND).unwrap();
            assert_eq!(twice.timestamps(), filtered.timestamps());
        }
    }

    #[test]
    fn zero_dead_time_is_identity() {
        let stream = DetectionStream::new(2, 1_000, vec![1, 2, 3, 900]).unwrap();
        let same = apply_dead_time(&stream, 0.0).unwrap();
        assert_eq!(same.timestamps(), stream.timestamps());
        assert!(apply_dead_time(&stream, -1.0).is_err());
    }

    #[test]
    fn duplicate_collapse_is_counted() {
        let (collapsed, count) = {
            let tags = vec![1, 1, 2, 5, 5, 5, 9];
            let mut v = tags;
            let before = v.len();
            v.dedup();
            (v.clone(), before - v.len())
        };
        assert_eq!(collapsed, vec![1, 2, 5, 9]);
        assert_eq!(count, 3);
        // ~1e4 events in a 1e6 ps window: ~50 expected birthday collisions.
        let config = SimConfig {
            pair_rate_hz: 0.0,
            background_hz: [1e10, 0.0, 0.0],
            sim_time_s: 1e-6,
            corr_sigma_s: 0.0,
            rng_seed: 9,
            ..SimConfig::default()
        };
        let out = simulate(&config).unwrap();
        assert!(out.collapsed_duplicates[0] > 0);
        assert_eq!(out.total_collapsed(), out.collapsed_duplicates[0]);
    }

    #[test]
    fn out_of_range_jitter_is_dropped_not_clamped() {
        // Jitter much longer than the acquisition: most photons fall
        // outside [0, T) and must simply vanish.
        let config = SimConfig {
            pair_rate_hz: 1e4,
            sim_time_s: 1e-3,
            corr_sigma_s: 1e-2,
            routing: [1.0, 0.0, 0.0],
            rng_seed: 3,
            ..SimConfig::default()
        };
        let out = simulate(&config).unwrap();
        let n = out.streams[0].len();
        assert!(n < 10, "expected nearly all photons dropped, kept {n}");
        assert!(out.streams[0].timestamps().iter().all(|&t| t < config.duration_ps()));
    }

    #[test]
    fn stream_constructor_validates() {
        assert!(matches!(
            DetectionStream::new(1, 100, vec![5, 5]),
            Err(SimError::Unsorted(1))
        ));
        assert!(matches!(
            DetectionStream::new(1, 100, vec![5, 100]),
            Err(SimError::OutOfRange { .. })
        ));
        assert!(DetectionStream::new(1, 100, vec![]).is_ok());
        assert!(matches!(
            DetectionStream::new(1, u64::MAX, vec![]),
            Err(SimError::DurationTooLarge)
        ));
    }

    #[test]
    fn rate_reflects_counts_over_duration() {
        let stream = DetectionStream::new(1, 2_000_000_000_000, (0..1000).map(|i| i * 1000).collect())
            .unwrap();
        assert!((stream.rate_hz() - 500.0).abs() < 1e-9);
    }
}
