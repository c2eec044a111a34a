use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket};
use sheetline_core::sync::{decode_message, encode_message, GroupState, Outbound, SyncError, SyncMessage};
use tokio::sync::mpsc::{unbounded_channel, UnboundedSender};

use super::AppState;

struct Group {
    state: GroupState,
    links: HashMap<String, (u64, UnboundedSender<String>)>,
}

/// Coordinators for all session groups. Each group's messages are applied
/// one at a time under the hub lock.
pub struct Hub {
    rosters: BTreeMap<String, Vec<String>>,
    groups: Mutex<HashMap<String, Group>>,
    next_link: Mutex<u64>,
}

impl Hub {
    pub fn new(rosters: BTreeMap<String, Vec<String>>) -> Self {
        Self {
            rosters,
            groups: Mutex::new(HashMap::new()),
            next_link: Mutex::new(0),
        }
    }

    fn groups(&self) -> std::sync::MutexGuard<'_, HashMap<String, Group>> {
        self.groups.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn deliver(group: &Group, out: Vec<Outbound>) {
        for o in out {
            if let Some((_, tx)) = group.links.get(&o.to) {
                let _ = tx.send(encode_message(&o.message));
            }
        }
    }

    /// Applies one frame received on link `link` of `group`; replies go out
    /// through the links of their recipients.
    fn receive(&self, group: &str, link: u64, tx: &UnboundedSender<String>, frame: &str) -> Result<(), SyncError> {
        let m: SyncMessage = decode_message(frame)?;
        let mut groups = self.groups();
        let g = groups.entry(group.to_string()).or_insert_with(|| Group {
            state: match self.rosters.get(group) {
                Some(r) => GroupState::with_roster(group, r.iter().map(String::as_str)),
                None => GroupState::new(group),
            },
            links: HashMap::new(),
        });
        let out = g.state.step(&m)?;
        g.links.insert(m.device_id.clone(), (link, tx.clone()));
        Self::deliver(g, out);
        Ok(())
    }

    fn disconnect(&self, group: &str, link: u64) {
        if let Some(g) = self.groups().get_mut(group) {
            g.links.retain(|_, (l, _)| *l != link);
        }
    }

    /// Resends every unacked coordinator message to connected devices.
    pub fn retransmit(&self) {
        for g in self.groups().values() {
            Self::deliver(g, g.state.retransmit());
        }
    }

    /// Progress view and barriers of a group, if it has seen any traffic.
    pub fn snapshot(&self, group: &str) -> Option<GroupState> {
        self.groups().get(group).map(|g| g.state.clone())
    }

    pub(crate) async fn connect(&self, group: String, mut socket: WebSocket) {
        let link = {
            let mut n = self.next_link.lock().unwrap_or_else(|p| p.into_inner());
            *n += 1;
            *n
        };
        let (tx, mut rx) = unbounded_channel::<String>();
        loop {
            tokio::select! {
                incoming = socket.recv() => match incoming {
                    Some(Ok(Message::Text(frame))) => {
                        if let Err(e) = self.receive(&group, link, &tx, frame.as_str()) {
                            tracing::debug!(group, code = e.code(), "sync frame rejected: {e}");
                        }
                    }
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => {}
                },
                Some(frame) = rx.recv() => {
                    if socket.send(Message::Text(frame.into())).await.is_err() {
                        break;
                    }
                }
            }
        }
        self.disconnect(&group, link);
    }
}

pub(crate) async fn retransmit_loop(state: AppState, period: Duration) {
    let mut tick = tokio::time::interval(period);
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tick.tick().await;
        state.hub().retransmit();
    }
}
