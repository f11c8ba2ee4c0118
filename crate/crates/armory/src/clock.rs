//! Time source and RFC 3339 conversion.

use std::str::FromStr;

use armory_core::Timestamp;
use chrono::{DateTime, SecondsFormat, Utc};

/// Where "now" comes from. Every timestamp-consuming operation takes a clock so
/// runs can be pinned.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Clock {
    #[default]
    System,
    Fixed(Timestamp),
}

impl Clock {
    pub fn now(&self) -> Timestamp {
        match self {
            Clock::System => Timestamp(Utc::now().timestamp()),
            Clock::Fixed(t) => *t,
        }
    }
}

impl FromStr for Clock {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rfc3339(s).map(Clock::Fixed)
    }
}

/// `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_rfc3339(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(t.0, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| format!("@{}", t.0))
}

/// Accepts any RFC 3339 offset; fractional seconds are truncated.
pub fn parse_rfc3339(s: &str) -> Result<Timestamp, String> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|d| Timestamp(d.timestamp()))
        .map_err(|e| format!("invalid RFC 3339 timestamp `{s}`: {e}"))
}
