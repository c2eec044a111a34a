use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kinds of behavioral telemetry. `Other` keeps the taxonomy open for
/// client-specific events.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    ScreenShown,
    ScreenCompleted,
    AnswerChanged,
    FocusLost,
    FocusGained,
    MediaPlay,
    MediaPause,
    MediaStallStart,
    MediaStallEnd,
    MediaEnded,
    Other(String),
}

const KNOWN: [(EventKind, &str); 10] = [
    (EventKind::ScreenShown, "screen-shown"),
    (EventKind::ScreenCompleted, "screen-completed"),
    (EventKind::AnswerChanged, "answer-changed"),
    (EventKind::FocusLost, "focus-lost"),
    (EventKind::FocusGained, "focus-gained"),
    (EventKind::MediaPlay, "media-play"),
    (EventKind::MediaPause, "media-pause"),
    (EventKind::MediaStallStart, "media-stall-start"),
    (EventKind::MediaStallEnd, "media-stall-end"),
    (EventKind::MediaEnded, "media-ended"),
];

impl EventKind {
    pub fn as_str(&self) -> &str {
        match self {
            EventKind::Other(s) => s,
            k => KNOWN.iter().find(|(kk, _)| kk == k).map(|(_, s)| *s).unwrap_or(""),
        }
    }

    pub fn parse(s: &str) -> Self {
        KNOWN
            .iter()
            .find(|(_, name)| *name == s)
            .map(|(k, _)| k.clone())
            .unwrap_or_else(|| EventKind::Other(s.to_string()))
    }

    pub fn is_media(&self) -> bool {
        matches!(
            self,
            EventKind::MediaPlay
                | EventKind::MediaPause
                | EventKind::MediaStallStart
                | EventKind::MediaStallEnd
                | EventKind::MediaEnded
        )
    }

    /// Payload keys that must be present for this kind.
    pub fn required_keys(&self) -> &'static [&'static str] {
        match self {
            EventKind::ScreenShown | EventKind::ScreenCompleted => &[keys::SCREEN_ID],
            EventKind::AnswerChanged => &[keys::ITEM_ID],
            k if k.is_media() => &[keys::ASSET_ID],
            _ => &[],
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for EventKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EventKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Err(serde::de::Error::custom("empty event kind"));
        }
        Ok(EventKind::parse(&s))
    }
}

pub mod keys {
    pub const SCREEN_ID: &str = "screen_id";
    pub const ITEM_ID: &str = "item_id";
    pub const ASSET_ID: &str = "asset_id";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventFlag {
    /// Timestamp was earlier than the previous event in the log.
    NonMonotonic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehavioralEvent {
    pub kind: EventKind,
    /// Milliseconds since session start.
    pub t: u64,
    #[serde(default)]
    pub payload: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub flags: BTreeSet<EventFlag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("{kind} event is missing payload key `{key}`")]
    MissingPayloadKey { kind: String, key: &'static str },
    #[error("event kind is empty")]
    EmptyKind,
}

impl BehavioralEvent {
    pub fn new(kind: EventKind, t: u64) -> Self {
        Self {
            kind,
            t,
            payload: BTreeMap::new(),
            flags: BTreeSet::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.payload.insert(key.to_string(), value.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.payload.get(key).map(String::as_str)
    }

    pub fn check(&self) -> Result<(), EventError> {
        if self.kind.as_str().is_empty() {
            return Err(EventError::EmptyKind);
        }
        for key in self.kind.required_keys() {
            if !self.payload.contains_key(*key) {
                return Err(EventError::MissingPayloadKey {
                    kind: self.kind.to_string(),
                    key,
                });
            }
        }
        Ok(())
    }

    pub fn is_flagged(&self, flag: EventFlag) -> bool {
        self.flags.contains(&flag)
    }
}
