use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use super::event::{keys, BehavioralEvent, EventKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaStats {
    pub asset_id: String,
    pub stall_count: u64,
    pub total_stall_ms: u64,
    /// Time spent playing outside of stalls.
    pub playback_ms: u64,
    pub completed: bool,
    /// A stall was still open at the end of the log and was closed there.
    pub open_stall_closed: bool,
}

impl MediaStats {
    pub fn empty(asset_id: &str) -> Self {
        Self {
            asset_id: asset_id.to_string(),
            stall_count: 0,
            total_stall_ms: 0,
            playback_ms: 0,
            completed: false,
            open_stall_closed: false,
        }
    }
}

/// Incremental fold over one session's event log for a single asset.
///
/// Playback and stall state are tracked independently; playback time accrues
/// while playing and not stalled. A second stall-start while stalled and a
/// stall-end without an open stall are ignored, so stall intervals never
/// overlap.
#[derive(Debug, Clone)]
pub struct MediaFold {
    stats: MediaStats,
    playing: bool,
    stall_since: Option<u64>,
    since: u64,
    last_t: u64,
}

impl MediaFold {
    pub fn new(asset_id: &str) -> Self {
        Self {
            stats: MediaStats::empty(asset_id),
            playing: false,
            stall_since: None,
            since: 0,
            last_t: 0,
        }
    }

    pub fn push(&mut self, ev: &BehavioralEvent) {
        self.last_t = self.last_t.max(ev.t);
        if !ev.kind.is_media() || ev.get(keys::ASSET_ID) != Some(self.stats.asset_id.as_str()) {
            return;
        }
        self.accrue(ev.t);
        match ev.kind {
            EventKind::MediaPlay => self.playing = true,
            EventKind::MediaPause => self.playing = false,
            EventKind::MediaEnded => {
                self.playing = false;
                self.stats.completed = true;
            }
            EventKind::MediaStallStart => {
                if self.stall_since.is_none() {
                    self.stall_since = Some(ev.t);
                    self.stats.stall_count += 1;
                }
            }
            EventKind::MediaStallEnd => {
                if let Some(start) = self.stall_since.take() {
                    self.stats.total_stall_ms += ev.t.saturating_sub(start);
                }
            }
            _ => {}
        }
    }

    fn accrue(&mut self, t: u64) {
        if self.playing && self.stall_since.is_none() {
            self.stats.playback_ms += t.saturating_sub(self.since);
        }
        self.since = self.since.max(t);
    }

    /// Stats as of the end of the events pushed so far; an open stall or
    /// playback is closed at the latest event time.
    pub fn stats(&self) -> MediaStats {
        let mut out = self.clone();
        let end = out.last_t;
        out.accrue(end);
        if let Some(start) = out.stall_since {
            out.stats.total_stall_ms += end.saturating_sub(start);
            out.stats.open_stall_closed = true;
        }
        out.stats
    }
}

pub fn fold_media_stats<'a>(
    events: impl IntoIterator<Item = &'a BehavioralEvent>,
    asset_id: &str,
) -> MediaStats {
    let mut fold = MediaFold::new(asset_id);
    for ev in events {
        fold.push(ev);
    }
    fold.stats()
}
