//! Simulation time: 64-bit integer nanoseconds.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

pub type Nanos = u64;

pub const NANOSECOND: Nanos = 1;
pub const MICROSECOND: Nanos = 1_000;
pub const MILLISECOND: Nanos = 1_000_000;
pub const SECOND: Nanos = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid duration `{0}` (expected an integer with unit ns, us, ms or s)")]
pub struct DurationParseError(pub String);

/// Parses `"10ms"`, `"1us"`, `"250ns"`, `"2s"` or a bare integer (nanoseconds).
pub fn parse_duration(text: &str) -> Result<Nanos, DurationParseError> {
    let t = text.trim();
    let split = t.find(|c: char| !c.is_ascii_digit() && c != '.').unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let scale = match unit.trim() {
        "" | "ns" => NANOSECOND,
        "us" | "µs" => MICROSECOND,
        "ms" => MILLISECOND,
        "s" => SECOND,
        _ => return Err(DurationParseError(text.to_string())),
    };
    if let Ok(v) = num.parse::<u64>() {
        return v.checked_mul(scale).ok_or_else(|| DurationParseError(text.to_string()));
    }
    let v: f64 = num.parse().map_err(|_| DurationParseError(text.to_string()))?;
    let ns = v * scale as f64;
    if !ns.is_finite() || ns < 0.0 || ns.fract() != 0.0 {
        return Err(DurationParseError(text.to_string()));
    }
    Ok(ns as Nanos)
}

/// Shortest exact rendering with a unit suffix.
pub fn format_duration(ns: Nanos) -> String {
    for (scale, unit) in [(SECOND, "s"), (MILLISECOND, "ms"), (MICROSECOND, "us")] {
        if ns != 0 && ns.is_multiple_of(scale) {
            return format!("{}{unit}", ns / scale);
        }
    }
    format!("{ns}ns")
}

struct DurationVisitor;

impl<'de> Visitor<'de> for DurationVisitor {
    type Value = Nanos;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a duration as integer nanoseconds or a string like \"10ms\"")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Nanos, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Nanos, E> {
        u64::try_from(v).map_err(|_| E::custom("negative duration"))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Nanos, E> {
        parse_duration(v).map_err(E::custom)
    }
}

/// Serde adapter for `Nanos` fields written as `"10ms"` strings.
pub mod serde_duration {
    use super::*;

    pub fn serialize<S: Serializer>(ns: &Nanos, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_duration(*ns))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Nanos, D::Error> {
        d.deserialize_any(DurationVisitor)
    }
}

/// Serde adapter for optional durations where `null` / `"inf"` mean unbounded.
pub mod serde_opt_duration {
    use super::*;

    struct OptVisitor;

    impl<'de> Visitor<'de> for OptVisitor {
        type Value = Option<Nanos>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a duration, \"inf\" or null")
        }

        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
            d.deserialize_any(self)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
            Ok(Some(v))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
            DurationVisitor.visit_i64(v).map(Some)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
            match v.trim() {
                "inf" | "infinite" | "none" => Ok(None),
                other => parse_duration(other).map(Some).map_err(E::custom),
            }
        }
    }

    pub fn serialize<S: Serializer>(ns: &Option<Nanos>, s: S) -> Result<S::Ok, S::Error> {
        match ns {
            Some(v) => s.serialize_str(&format_duration(*v)),
            None => s.serialize_str("inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Nanos>, D::Error> {
        d.deserialize_any(OptVisitor)
    }
}
