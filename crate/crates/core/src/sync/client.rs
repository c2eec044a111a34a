use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::coordinator::{Progress, ProgressView, COORDINATOR};
use super::message::{fields, unpack, MessageKind, SyncError, SyncMessage};

/// A command relayed to this device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedCommand {
    pub from: String,
    pub command: String,
}

/// Device side of the protocol: numbers outgoing messages, keeps them until
/// acked, and applies the coordinator's stream exactly once.
#[derive(Debug, Clone)]
pub struct SyncClient {
    group: String,
    device: String,
    next_seq: u64,
    unacked: Vec<SyncMessage>,
    last_from_coordinator: u64,
    view: ProgressView,
    released: BTreeSet<String>,
    awaiting_snapshot: bool,
    inbox: Vec<ReceivedCommand>,
}

impl SyncClient {
    pub fn new(group: &str, device: &str) -> Self {
        Self {
            group: group.to_string(),
            device: device.to_string(),
            next_seq: 1,
            unacked: Vec::new(),
            last_from_coordinator: 0,
            view: ProgressView::new(),
            released: BTreeSet::new(),
            awaiting_snapshot: false,
            inbox: Vec::new(),
        }
    }

    pub fn device_id(&self) -> &str {
        &self.device
    }

    fn sequenced(&mut self, kind: MessageKind) -> SyncMessage {
        let m = SyncMessage::new(&self.group, &self.device, self.next_seq, kind);
        self.next_seq += 1;
        m
    }

    fn queue(&mut self, m: SyncMessage) -> SyncMessage {
        self.unacked.push(m.clone());
        m
    }

    pub fn hello(&mut self) -> SyncMessage {
        let m = self.sequenced(MessageKind::Hello);
        self.queue(m)
    }

    pub fn report_progress(&mut self, screen_id: &str, status: &str) -> SyncMessage {
        let m = self
            .sequenced(MessageKind::Progress)
            .with(fields::SCREEN_ID, screen_id)
            .with(fields::STATUS, status);
        self.view.insert(
            self.device.clone(),
            Progress {
                screen_id: screen_id.to_string(),
                status: status.to_string(),
                seq: m.seq,
            },
        );
        self.queue(m)
    }

    pub fn reach_barrier(&mut self, barrier_id: &str) -> SyncMessage {
        let m = self
            .sequenced(MessageKind::BarrierReached)
            .with(fields::BARRIER_ID, barrier_id);
        self.queue(m)
    }

    /// `to` is a device id or [`fields::BROADCAST`].
    pub fn send_command(&mut self, to: &str, command: &str) -> SyncMessage {
        let m = self
            .sequenced(MessageKind::Command)
            .with(fields::TO, to)
            .with(fields::COMMAND, command);
        self.queue(m)
    }

    /// Starts a reconnect: the coordinator answers with a state snapshot,
    /// after which [`on_message`](Self::on_message) returns the unacked
    /// messages for replay. A device whose `hello` was never acked is
    /// unknown to the coordinator and simply retransmits instead.
    pub fn resume(&mut self) -> Vec<SyncMessage> {
        if self.unacked.iter().any(|m| m.kind == MessageKind::Hello) {
            self.awaiting_snapshot = false;
            return self.unacked.clone();
        }
        self.awaiting_snapshot = true;
        alloc::vec![self.resume_request()]
    }

    fn resume_request(&self) -> SyncMessage {
        let last_acked = self.unacked.first().map_or(self.next_seq - 1, |m| m.seq - 1);
        SyncMessage::new(&self.group, &self.device, 0, MessageKind::ResumeRequest)
            .with(fields::LAST_ACKED, format!("{last_acked}"))
    }

    /// Messages to resend on a retransmission timer.
    pub fn retransmit(&self) -> Vec<SyncMessage> {
        if self.awaiting_snapshot {
            alloc::vec![self.resume_request()]
        } else {
            self.unacked.clone()
        }
    }

    fn ack(&self) -> SyncMessage {
        SyncMessage::new(&self.group, &self.device, 0, MessageKind::Ack)
            .with(fields::ACK_DEVICE, COORDINATOR)
            .with(fields::ACK_SEQ, format!("{}", self.last_from_coordinator))
    }

    pub fn on_message(&mut self, m: &SyncMessage) -> Result<Vec<SyncMessage>, SyncError> {
        if m.session_group != self.group {
            return Err(SyncError::UnknownGroup(m.session_group.clone()));
        }
        if m.device_id != COORDINATOR {
            return Err(SyncError::UnknownDevice(m.device_id.clone()));
        }
        match m.kind {
            MessageKind::Ack => {
                if m.require(fields::ACK_DEVICE)? != self.device {
                    return Err(SyncError::Malformed("ack addressed to another device".into()));
                }
                let upto = m.require_u64(fields::ACK_SEQ)?;
                self.unacked.retain(|u| u.seq > upto);
                Ok(Vec::new())
            }
            MessageKind::StateSnapshot => {
                self.apply_snapshot(m)?;
                if core::mem::take(&mut self.awaiting_snapshot) {
                    Ok(self.unacked.clone())
                } else {
                    Ok(Vec::new())
                }
            }
            MessageKind::Progress | MessageKind::BarrierRelease | MessageKind::Command => {
                if m.seq == self.last_from_coordinator + 1 {
                    self.apply(m)?;
                    self.last_from_coordinator = m.seq;
                }
                Ok(alloc::vec![self.ack()])
            }
            MessageKind::Hello | MessageKind::BarrierReached | MessageKind::ResumeRequest => {
                Err(SyncError::UnexpectedKind(m.kind))
            }
        }
    }

    fn merge_progress(&mut self, origin: &str, p: Progress) {
        let newer = self.view.get(origin).is_none_or(|cur| p.seq > cur.seq);
        if newer {
            self.view.insert(origin.to_string(), p);
        }
    }

    fn apply(&mut self, m: &SyncMessage) -> Result<(), SyncError> {
        match m.kind {
            MessageKind::Progress => {
                let origin = m.require(fields::ORIGIN)?.to_string();
                let p = Progress {
                    screen_id: m.require(fields::SCREEN_ID)?.to_string(),
                    status: m.require(fields::STATUS)?.to_string(),
                    seq: m.require_u64(fields::ORIGIN_SEQ)?,
                };
                self.merge_progress(&origin, p);
            }
            MessageKind::BarrierRelease => {
                self.released.insert(m.require(fields::BARRIER_ID)?.to_string());
            }
            MessageKind::Command => self.inbox.push(ReceivedCommand {
                from: m.require(fields::FROM)?.to_string(),
                command: m.require(fields::COMMAND)?.to_string(),
            }),
            _ => {}
        }
        Ok(())
    }

    fn apply_snapshot(&mut self, m: &SyncMessage) -> Result<(), SyncError> {
        let mut progress = Vec::new();
        let mut released = Vec::new();
        for (k, v) in &m.payload {
            if let Some(device) = k.strip_prefix(fields::PROGRESS_PREFIX) {
                let parts = unpack(v)?;
                let [screen, status, seq] = parts.as_slice() else {
                    return Err(SyncError::Malformed(format!("bad snapshot entry `{k}`")));
                };
                let seq = seq
                    .parse()
                    .map_err(|_| SyncError::Malformed(format!("bad seq in `{k}`")))?;
                progress.push((
                    device.to_string(),
                    Progress {
                        screen_id: screen.to_string(),
                        status: status.to_string(),
                        seq,
                    },
                ));
            } else if let Some(id) = k.strip_prefix(fields::BARRIER_PREFIX) {
                let parts = unpack(v)?;
                if parts.first() == Some(&"released") {
                    released.push(id.to_string());
                }
            }
        }
        for (device, p) in progress {
            self.merge_progress(&device, p);
        }
        self.released.extend(released);
        Ok(())
    }

    pub fn view(&self) -> &ProgressView {
        &self.view
    }

    pub fn is_released(&self, barrier_id: &str) -> bool {
        self.released.contains(barrier_id)
    }

    pub fn released(&self) -> &BTreeSet<String> {
        &self.released
    }

    pub fn unacked(&self) -> &[SyncMessage] {
        &self.unacked
    }

    pub fn awaiting_snapshot(&self) -> bool {
        self.awaiting_snapshot
    }

    pub fn take_commands(&mut self) -> Vec<ReceivedCommand> {
        core::mem::take(&mut self.inbox)
    }
}
