//! Simulation and analysis of three-detector photon-coincidence
//! experiments.
//!
//! The crate covers the full chain from a parametric photon-pair source to
//! a normalized third-order correlation map:
//!
//! * [`fock`] — exact truncated-Fock predictions for a weakly seeded
//!   pair source: normally ordered correlators, seeded two- and
//!   three-photon rates, parameter regimes.
//! * [`sim`] — Monte-Carlo generation of timestamped detection streams
//!   for three detectors, with jitter, losses, dark counts and dead time.
//! * [`coincidence`] — second-order (1-D) and third-order (2-D delay
//!   grid) coincidence histograms with singles rates.
//! * [`background`] — accidental-coincidence model built from pair
//!   correlations and singles, normalized maps `g³ₙ = G³/G³ₐ`, and
//!   Poisson tail significance of the zero-delay peak.
//! * [`coarse`] — structure-aware compression of 2-D maps: ridge
//!   cross-sections pixel-averaged along their length, background regions
//!   reduced to means, the center bin kept exact.
//! * [`tagfile`] / [`bundle`] — binary time-tag files and CSV + JSON
//!   result bundles.
//! * [`config`] — TOML run configuration with suffixed durations.
//!
//! Each major capability has a runnable example under `examples/`; start
//! with `simulate_tag_streams` and `stimulated_triplet_peak`.

pub mod background;
pub mod bundle;
pub mod coarse;
pub mod coincidence;
pub mod config;
pub mod fock;
pub mod sim;
pub mod tagfile;
pub mod units;
