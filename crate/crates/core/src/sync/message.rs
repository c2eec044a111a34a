//! Wire format of [`SyncMessage`].
//!
//! One message per WebSocket text frame:
//!
//! ```text
//! frame   = "SYNC/1" SP kind SP seq SP str SP str SP count *( SP str SP str )
//! kind    = "hello" / "progress" / "barrier-reached" / "barrier-release"
//!         / "command" / "ack" / "resume-request" / "state-snapshot"
//! seq     = "0" / %x31-39 *DIGIT          ; no leading zeros
//! count   = "0" / %x31-39 *DIGIT
//! str     = len ":" *OCTET                ; exactly len UTF-8 bytes
//! len     = "0" / %x31-39 *DIGIT
//! ```
//!
//! The two strings after `seq` are the session group and the device id,
//! followed by `count` key/value pairs with keys in strictly ascending byte
//! order. Every message has exactly one encoding.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use thiserror::Error;

pub const MAGIC: &str = "SYNC/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Hello,
    Progress,
    BarrierReached,
    BarrierRelease,
    Command,
    Ack,
    ResumeRequest,
    StateSnapshot,
}

impl MessageKind {
    pub const ALL: [MessageKind; 8] = [
        MessageKind::Hello,
        MessageKind::Progress,
        MessageKind::BarrierReached,
        MessageKind::BarrierRelease,
        MessageKind::Command,
        MessageKind::Ack,
        MessageKind::ResumeRequest,
        MessageKind::StateSnapshot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Hello => "hello",
            MessageKind::Progress => "progress",
            MessageKind::BarrierReached => "barrier-reached",
            MessageKind::BarrierRelease => "barrier-release",
            MessageKind::Command => "command",
            MessageKind::Ack => "ack",
            MessageKind::ResumeRequest => "resume-request",
            MessageKind::StateSnapshot => "state-snapshot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Sequenced kinds are delivered exactly once and in order; the others
    /// are idempotent control messages carrying seq 0.
    pub fn is_sequenced(self) -> bool {
        !matches!(
            self,
            MessageKind::Ack | MessageKind::ResumeRequest | MessageKind::StateSnapshot
        )
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Payload keys used by the protocol.
pub mod fields {
    pub const SCREEN_ID: &str = "screen_id";
    pub const STATUS: &str = "status";
    pub const ORIGIN: &str = "origin";
    pub const ORIGIN_SEQ: &str = "origin_seq";
    pub const BARRIER_ID: &str = "barrier_id";
    pub const COMMAND: &str = "command";
    pub const TO: &str = "to";
    pub const FROM: &str = "from";
    pub const ACK_DEVICE: &str = "ack_device";
    pub const ACK_SEQ: &str = "ack_seq";
    pub const LAST_ACKED: &str = "last_acked";
    pub const PROGRESS_PREFIX: &str = "progress:";
    pub const BARRIER_PREFIX: &str = "barrier:";
    /// Command target meaning every other member.
    pub const BROADCAST: &str = "*";
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SyncMessage {
    pub session_group: String,
    pub device_id: String,
    pub seq: u64,
    pub kind: MessageKind,
    pub payload: BTreeMap<String, String>,
}

impl SyncMessage {
    pub fn new(session_group: &str, device_id: &str, seq: u64, kind: MessageKind) -> Self {
        Self {
            session_group: session_group.to_string(),
            device_id: device_id.to_string(),
            seq,
            kind,
            payload: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.payload.insert(key.to_string(), value.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.payload.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, SyncError> {
        self.get(key)
            .ok_or_else(|| SyncError::Malformed(format!("{} message lacks `{key}`", self.kind)))
    }

    pub fn require_u64(&self, key: &str) -> Result<u64, SyncError> {
        self.require(key)?
            .parse()
            .map_err(|_| SyncError::Malformed(format!("`{key}` is not an integer")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyncError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message kind `{0}`")]
    UnknownKind(String),
    #[error("unknown session group `{0}`")]
    UnknownGroup(String),
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("{0} messages are not accepted in this direction")]
    UnexpectedKind(MessageKind),
}

impl SyncError {
    pub fn code(&self) -> &'static str {
        match self {
            SyncError::Malformed(_) => "MALFORMED_MESSAGE",
            SyncError::UnknownKind(_) => "UNKNOWN_KIND",
            SyncError::UnknownGroup(_) => "UNKNOWN_GROUP",
            SyncError::UnknownDevice(_) => "UNKNOWN_DEVICE",
            SyncError::UnexpectedKind(_) => "UNEXPECTED_KIND",
        }
    }
}

fn put_str(out: &mut String, s: &str) {
    let _ = write!(out, " {}:{s}", s.len());
}

pub fn encode_message(m: &SyncMessage) -> String {
    let mut out = String::with_capacity(64);
    let _ = write!(out, "{MAGIC} {} {}", m.kind, m.seq);
    put_str(&mut out, &m.session_group);
    put_str(&mut out, &m.device_id);
    let _ = write!(out, " {}", m.payload.len());
    for (k, v) in &m.payload {
        put_str(&mut out, k);
        put_str(&mut out, v);
    }
    out
}

struct Reader<'a> {
    rest: &'a str,
}

fn malformed(what: &str) -> SyncError {
    SyncError::Malformed(what.to_string())
}

impl<'a> Reader<'a> {
    fn space(&mut self) -> Result<(), SyncError> {
        self.rest = self.rest.strip_prefix(' ').ok_or_else(|| malformed("expected space"))?;
        Ok(())
    }

    fn token(&mut self) -> &'a str {
        let end = self.rest.find(' ').unwrap_or(self.rest.len());
        let (t, r) = self.rest.split_at(end);
        self.rest = r;
        t
    }

    fn number_until(&mut self, stop: char) -> Result<u64, SyncError> {
        let end = self.rest.find(stop).unwrap_or(self.rest.len());
        let (digits, r) = self.rest.split_at(end);
        let canonical = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit())
            && (digits == "0" || !digits.starts_with('0'));
        if !canonical {
            return Err(malformed("bad number"));
        }
        self.rest = r;
        digits.parse().map_err(|_| malformed("number overflow"))
    }

    fn string(&mut self) -> Result<&'a str, SyncError> {
        self.space()?;
        let len = self.number_until(':')? as usize;
        self.rest = self.rest.strip_prefix(':').ok_or_else(|| malformed("expected `:`"))?;
        if len > self.rest.len() || !self.rest.is_char_boundary(len) {
            return Err(malformed("string runs past end of frame"));
        }
        let (s, r) = self.rest.split_at(len);
        self.rest = r;
        Ok(s)
    }
}

pub fn decode_message(frame: &str) -> Result<SyncMessage, SyncError> {
    let mut r = Reader { rest: frame };
    if r.token() != MAGIC {
        return Err(malformed("missing SYNC/1 prefix"));
    }
    r.space()?;
    let kind_name = r.token();
    r.space()?;
    let seq = r.number_until(' ')?;
    let session_group = r.string()?;
    let device_id = r.string()?;
    r.space()?;
    let count = r.number_until(' ')?;
    let mut payload = BTreeMap::new();
    let mut last: Option<&str> = None;
    for _ in 0..count {
        let k = r.string()?;
        let v = r.string()?;
        if last.is_some_and(|l| l >= k) {
            return Err(malformed("payload keys not strictly ascending"));
        }
        last = Some(k);
        payload.insert(k.to_string(), v.to_string());
    }
    if !r.rest.is_empty() {
        return Err(malformed("trailing bytes"));
    }
    let kind = MessageKind::parse(kind_name).ok_or_else(|| SyncError::UnknownKind(kind_name.to_string()))?;
    Ok(SyncMessage {
        session_group: session_group.to_string(),
        device_id: device_id.to_string(),
        seq,
        kind,
        payload,
    })
}

/// Packs a list of strings into one payload value (`len:bytes` repeated).
pub fn pack(items: &[&str]) -> String {
    let mut out = String::new();
    for s in items {
        let _ = write!(out, "{}:{s}", s.len());
    }
    out
}

pub fn unpack(mut s: &str) -> Result<Vec<&str>, SyncError> {
    let mut out = Vec::new();
    while !s.is_empty() {
        let colon = s.find(':').ok_or_else(|| malformed("packed list lacks `:`"))?;
        let len: usize = s[..colon].parse().map_err(|_| malformed("packed length"))?;
        let body = &s[colon + 1..];
        if len > body.len() || !body.is_char_boundary(len) {
            return Err(malformed("packed item runs past end"));
        }
        out.push(&body[..len]);
        s = &body[len..];
    }
    Ok(out)
}
