use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::message::{fields, pack, MessageKind, SyncError, SyncMessage};

/// Device id the coordinator uses for its own messages.
pub const COORDINATOR: &str = "coordinator";

/// Latest progress reported by one device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Progress {
    pub screen_id: String,
    pub status: String,
    /// Sequence number of the reporting message in the origin's stream.
    pub seq: u64,
}

pub type ProgressView = BTreeMap<String, Progress>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Barrier {
    pub reached: BTreeSet<String>,
    pub released: bool,
}

/// A message addressed to one device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outbound {
    pub to: String,
    pub message: SyncMessage,
}

#[derive(Debug, Clone, Default)]
struct Outbox {
    next_seq: u64,
    unacked: Vec<SyncMessage>,
}

/// Coordinator state for one session group.
///
/// Each device's stream is applied exactly once and in order: a message is
/// applied only when its seq is one past the last applied seq; anything at or
/// below is a duplicate and only re-acked, anything beyond is dropped and
/// left to client retransmission. Coordinator-to-device messages form one
/// sequenced stream per recipient and stay queued until acked.
#[derive(Debug, Clone)]
pub struct GroupState {
    session_group: String,
    roster: Option<BTreeSet<String>>,
    members: BTreeMap<String, u64>,
    barriers: BTreeMap<String, Barrier>,
    progress: ProgressView,
    outboxes: BTreeMap<String, Outbox>,
    releases_emitted: BTreeMap<String, u32>,
}

impl GroupState {
    /// An open group: any device may join with `hello`, and barriers wait
    /// for every device registered at the time.
    pub fn new(session_group: &str) -> Self {
        Self {
            session_group: session_group.to_string(),
            roster: None,
            members: BTreeMap::new(),
            barriers: BTreeMap::new(),
            progress: BTreeMap::new(),
            outboxes: BTreeMap::new(),
            releases_emitted: BTreeMap::new(),
        }
    }

    /// A closed group: only `roster` devices may join, and barriers wait for
    /// all of them whether or not they have connected yet.
    pub fn with_roster<'a>(session_group: &str, roster: impl IntoIterator<Item = &'a str>) -> Self {
        let roster: BTreeSet<String> = roster.into_iter().map(str::to_string).collect();
        let mut g = Self::new(session_group);
        for d in &roster {
            g.outboxes.insert(d.clone(), Outbox::default());
        }
        g.roster = Some(roster);
        g
    }

    pub fn session_group(&self) -> &str {
        &self.session_group
    }

    pub fn is_member(&self, device: &str) -> bool {
        self.members.contains_key(device)
    }

    /// Last applied seq per registered device.
    pub fn members(&self) -> &BTreeMap<String, u64> {
        &self.members
    }

    pub fn progress_view(&self) -> &ProgressView {
        &self.progress
    }

    pub fn barriers(&self) -> &BTreeMap<String, Barrier> {
        &self.barriers
    }

    /// How many times each barrier has been released (at most once).
    pub fn releases_emitted(&self) -> &BTreeMap<String, u32> {
        &self.releases_emitted
    }

    pub fn has_unacked(&self) -> bool {
        self.outboxes.iter().any(|(d, o)| self.members.contains_key(d) && !o.unacked.is_empty())
    }

    fn participants(&self) -> Vec<String> {
        match &self.roster {
            Some(r) => r.iter().cloned().collect(),
            None => self.members.keys().cloned().collect(),
        }
    }

    fn send(&mut self, to: &str, kind: MessageKind, payload: BTreeMap<String, String>, out: &mut Vec<Outbound>) {
        let outbox = self.outboxes.entry(to.to_string()).or_default();
        outbox.next_seq += 1;
        let mut message = SyncMessage::new(&self.session_group, COORDINATOR, outbox.next_seq, kind);
        message.payload = payload;
        outbox.unacked.push(message.clone());
        out.push(Outbound {
            to: to.to_string(),
            message,
        });
    }

    fn ack(&self, device: &str, out: &mut Vec<Outbound>) {
        let last = self.members.get(device).copied().unwrap_or(0);
        let message = SyncMessage::new(&self.session_group, COORDINATOR, 0, MessageKind::Ack)
            .with(fields::ACK_DEVICE, device)
            .with(fields::ACK_SEQ, format!("{last}"));
        out.push(Outbound {
            to: device.to_string(),
            message,
        });
    }

    fn progress_payload(origin: &str, p: &Progress) -> BTreeMap<String, String> {
        [
            (fields::ORIGIN, origin.to_string()),
            (fields::ORIGIN_SEQ, format!("{}", p.seq)),
            (fields::SCREEN_ID, p.screen_id.clone()),
            (fields::STATUS, p.status.clone()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Processes one inbound message and returns the messages to send.
    /// On error the state is left untouched.
    pub fn step(&mut self, m: &SyncMessage) -> Result<Vec<Outbound>, SyncError> {
        if m.session_group != self.session_group {
            return Err(SyncError::UnknownGroup(m.session_group.clone()));
        }
        let device = m.device_id.as_str();
        if device == COORDINATOR {
            return Err(SyncError::UnknownDevice(device.to_string()));
        }
        let mut out = Vec::new();
        match m.kind {
            MessageKind::BarrierRelease | MessageKind::StateSnapshot => {
                return Err(SyncError::UnexpectedKind(m.kind));
            }
            MessageKind::Ack => {
                self.require_member(device)?;
                if m.require(fields::ACK_DEVICE)? != COORDINATOR {
                    return Err(SyncError::Malformed("ack does not reference the coordinator".into()));
                }
                let upto = m.require_u64(fields::ACK_SEQ)?;
                if let Some(outbox) = self.outboxes.get_mut(device) {
                    outbox.unacked.retain(|u| u.seq > upto);
                }
            }
            MessageKind::ResumeRequest => {
                self.require_member(device)?;
                out.push(Outbound {
                    to: device.to_string(),
                    message: self.snapshot_message(),
                });
                self.ack(device, &mut out);
                out.extend(self.retransmit_to(device));
            }
            MessageKind::Hello if !self.members.contains_key(device) => {
                if self.roster.as_ref().is_some_and(|r| !r.contains(device)) {
                    return Err(SyncError::UnknownDevice(device.to_string()));
                }
                self.members.insert(device.to_string(), m.seq);
                if !self.outboxes.contains_key(device) {
                    // late joiner of an open group: catch up on the view
                    let view: Vec<_> = self
                        .progress
                        .iter()
                        .map(|(o, p)| Self::progress_payload(o, p))
                        .collect();
                    for payload in view {
                        self.send(device, MessageKind::Progress, payload, &mut out);
                    }
                    self.outboxes.entry(device.to_string()).or_default();
                }
                self.ack(device, &mut out);
            }
            _ => {
                let last = *self
                    .members
                    .get(device)
                    .ok_or_else(|| SyncError::UnknownDevice(device.to_string()))?;
                if m.seq == last + 1 {
                    self.apply(m, &mut out)?;
                    self.members.insert(device.to_string(), m.seq);
                }
                self.ack(device, &mut out);
            }
        }
        Ok(out)
    }

    fn require_member(&self, device: &str) -> Result<(), SyncError> {
        if self.members.contains_key(device) {
            Ok(())
        } else {
            Err(SyncError::UnknownDevice(device.to_string()))
        }
    }

    fn apply(&mut self, m: &SyncMessage, out: &mut Vec<Outbound>) -> Result<(), SyncError> {
        let device = m.device_id.as_str();
        match m.kind {
            MessageKind::Hello => {}
            MessageKind::Progress => {
                let p = Progress {
                    screen_id: m.require(fields::SCREEN_ID)?.to_string(),
                    status: m.require(fields::STATUS)?.to_string(),
                    seq: m.seq,
                };
                let payload = Self::progress_payload(device, &p);
                self.progress.insert(device.to_string(), p);
                for to in self.participants() {
                    if to != device {
                        self.send(&to, MessageKind::Progress, payload.clone(), out);
                    }
                }
            }
            MessageKind::BarrierReached => {
                let id = m.require(fields::BARRIER_ID)?.to_string();
                let payload: BTreeMap<String, String> =
                    [(fields::BARRIER_ID.to_string(), id.clone())].into_iter().collect();
                let participants = self.participants();
                let barrier = self.barriers.entry(id.clone()).or_default();
                let newly_reached = barrier.reached.insert(device.to_string());
                if barrier.released {
                    // open group member that joined after the release
                    if newly_reached {
                        self.send(device, MessageKind::BarrierRelease, payload, out);
                    }
                } else if participants.iter().all(|p| barrier.reached.contains(p)) {
                    barrier.released = true;
                    *self.releases_emitted.entry(id).or_insert(0) += 1;
                    for to in participants {
                        self.send(&to, MessageKind::BarrierRelease, payload.clone(), out);
                    }
                }
            }
            MessageKind::Command => {
                let command = m.require(fields::COMMAND)?.to_string();
                let to = m.require(fields::TO)?;
                let payload: BTreeMap<String, String> = [
                    (fields::COMMAND.to_string(), command),
                    (fields::FROM.to_string(), device.to_string()),
                ]
                .into_iter()
                .collect();
                let targets: Vec<String> = if to == fields::BROADCAST {
                    self.participants().into_iter().filter(|p| p != device).collect()
                } else if self.participants().iter().any(|p| p == to) {
                    alloc::vec![to.to_string()]
                } else {
                    Vec::new()
                };
                for t in targets {
                    self.send(&t, MessageKind::Command, payload.clone(), out);
                }
            }
            MessageKind::Ack | MessageKind::ResumeRequest | MessageKind::BarrierRelease | MessageKind::StateSnapshot => {
                unreachable!("control messages are handled in step")
            }
        }
        Ok(())
    }

    /// Current view and barrier states, sent in reply to `resume-request`.
    pub fn snapshot_message(&self) -> SyncMessage {
        let mut m = SyncMessage::new(&self.session_group, COORDINATOR, 0, MessageKind::StateSnapshot);
        for (device, p) in &self.progress {
            let seq = format!("{}", p.seq);
            m.payload.insert(
                format!("{}{device}", fields::PROGRESS_PREFIX),
                pack(&[&p.screen_id, &p.status, &seq]),
            );
        }
        for (id, b) in &self.barriers {
            let mut items: Vec<&str> = alloc::vec![if b.released { "released" } else { "open" }];
            items.extend(b.reached.iter().map(String::as_str));
            m.payload.insert(format!("{}{id}", fields::BARRIER_PREFIX), pack(&items));
        }
        m
    }

    /// Unacked messages for one registered device, in seq order.
    pub fn retransmit_to(&self, device: &str) -> Vec<Outbound> {
        if !self.members.contains_key(device) {
            return Vec::new();
        }
        self.outboxes
            .get(device)
            .map(|o| {
                o.unacked
                    .iter()
                    .map(|m| Outbound {
                        to: device.to_string(),
                        message: m.clone(),
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Unacked messages for every registered device.
    pub fn retransmit(&self) -> Vec<Outbound> {
        self.members.keys().flat_map(|d| self.retransmit_to(d)).collect()
    }
}

/// Functional form of [`GroupState::step`].
pub fn coordinator_step(g: &GroupState, m: &SyncMessage) -> Result<(GroupState, Vec<Outbound>), SyncError> {
    let mut next = g.clone();
    let out = next.step(m)?;
    Ok((next, out))
}
