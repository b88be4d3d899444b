use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Whole seconds since the start of a task, rendered as `MM:SS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(u32);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid timestamp {0:?}, expected MM:SS")]
pub struct ParseTimestampError(pub String);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub const fn from_secs(seconds: u32) -> Self {
        Timestamp(seconds)
    }

    /// Sub-second precision is floored.
    pub fn from_secs_f64(seconds: f64) -> Self {
        Timestamp(seconds.max(0.0).floor() as u32)
    }

    pub const fn secs(self) -> u32 {
        self.0
    }

    pub fn parse(text: &str) -> Result<Self, ParseTimestampError> {
        text.parse()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for Timestamp {
    type Err = ParseTimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimestampError(s.to_string());
        let (mm, ss) = s.split_once(':').ok_or_else(err)?;
        if mm.len() < 2 || ss.len() != 2 {
            return Err(err());
        }
        if !mm.bytes().chain(ss.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let minutes: u32 = mm.parse().map_err(|_| err())?;
        let seconds: u32 = ss.parse().map_err(|_| err())?;
        if seconds >= 60 {
            return Err(err());
        }
        minutes
            .checked_mul(60)
            .and_then(|m| m.checked_add(seconds))
            .map(Timestamp)
            .ok_or_else(err)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
