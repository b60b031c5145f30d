//! Picosecond time base and suffixed-duration parsing.
//!
//! Every timestamp and delay in this crate is an integer number of
//! picoseconds. Human-facing inputs (config files, CLI flags) write
//! durations as a decimal number with a unit suffix — `"500ps"`, `"0.5ns"`,
//! `"1.2us"`, `"10ms"`, `"200s"` — which this module converts to integer
//! picoseconds with round-to-nearest.

use thiserror::Error;

/// Picoseconds per second.
pub const PS_PER_SECOND: f64 = 1e12;

/// Largest f64 that still converts to `u64` without overflow.
const MAX_PS: f64 = 1.8e19;

/// Errors from duration parsing and conversion.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnitError {
    #[error("empty duration string")]
    Empty,
    #[error("duration `{0}` has no recognized unit suffix (ps, ns, us, ms, s)")]
    UnknownSuffix(String),
    #[error("duration `{0}` has an unparseable numeric part")]
    BadNumber(String),
    #[error("duration `{0}` is negative, non-finite, or too large for the picosecond time base")]
    OutOfRange(String),
}

/// Convert non-negative seconds to integer picoseconds, rounding to nearest.
pub fn seconds_to_ps(seconds: f64) -> Result<u64, UnitError> {
    let ps = seconds * PS_PER_SECOND;
    if !ps.is_finite() || !(0.0..=MAX_PS).contains(&ps) {
        return Err(UnitError::OutOfRange(format!("{seconds}s")));
    }
    Ok(ps.round() as u64)
}

/// Convert integer picoseconds to seconds.
pub fn ps_to_seconds(ps: u64) -> f64 {
    ps as f64 / PS_PER_SECOND
}

/// Parse a duration string with a unit suffix into integer picoseconds.
///
/// Accepted suffixes: `ps`, `ns`, `us`, `ms`, `s`. The numeric part may be
/// any non-negative decimal; the result is rounded to the nearest
/// picosecond. A bare number without a suffix is rejected so that callers
/// never guess units.
pub fn parse_duration_ps(text: &str) -> Result<u64, UnitError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(UnitError::Empty);
    }
    let (number_part, factor) = if let Some(n) = trimmed.strip_suffix("ps") {
        (n, 1.0)
    } else if let Some(n) = trimmed.strip_suffix("ns") {
        (n, 1e3)
    } else if let Some(n) = trimmed.strip_suffix("us") {
        (n, 1e6)
    } else if let Some(n) = trimmed.strip_suffix("ms") {
        (n, 1e9)
    } else if let Some(n) = trimmed.strip_suffix('s') {
        (n, 1e12)
    } else {
        return Err(UnitError::UnknownSuffix(trimmed.to_string()));
    };
    let number: f64 = number_part
        .trim()
        .parse()
        .map_err(|_| UnitError::BadNumber(trimmed.to_string()))?;
    let ps = number * factor;
    if !ps.is_finite() || !(0.0..=MAX_PS).contains(&ps) {
        return Err(UnitError::OutOfRange(trimmed.to_string()));
    }
    Ok(ps.round() as u64)
}

/// Format a picosecond count with the largest unit that divides it exactly.
pub fn format_ps(ps: u64) -> String {
    const UNITS: [(u64, &str); 4] = [
        (1_000_000_000_000, "s"),
        (1_000_000_000, "ms"),
        (1_000_000, "us"),
        (1_000, "ns"),
    ];
    for (factor, suffix) in UNITS {
        if ps != 0 && ps.is_multiple_of(factor) {
            return format!("{}{}", ps / factor, suffix);
        }
    }
    format!("{ps}ps")
}
