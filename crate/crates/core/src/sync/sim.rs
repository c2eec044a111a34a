//! Deterministic network simulator for the sync protocol.
//!
//! Devices run scripted sessions (progress reports, commands, barriers)
//! against one coordinator over a transport that drops, duplicates and
//! reorders frames. Every frame goes through the wire codec. Retransmission
//! timers fire at random and whenever the network runs dry.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::client::SyncClient;
use super::coordinator::{GroupState, ProgressView};
use super::message::{decode_message, encode_message, fields, SyncMessage};

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub devices: usize,
    /// Probability that a frame is lost in transit.
    pub loss: f64,
    /// Probability that a delivered frame is also left in flight again.
    pub duplication: f64,
    pub barriers: usize,
    pub max_progress_per_phase: usize,
    /// Probability per step that a device drops its connection and resumes.
    pub disconnect: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            devices: 2,
            loss: 0.2,
            duplication: 0.1,
            barriers: 3,
            max_progress_per_phase: 4,
            disconnect: 0.002,
            max_steps: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Progress { screen_id: String, status: String },
    Command { to: String, command: String },
    Barrier(String),
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    /// Scripts finished, nothing in flight, nothing unacked.
    pub quiescent: bool,
    pub steps: usize,
    pub coordinator_view: ProgressView,
    pub client_views: Vec<ProgressView>,
    pub barriers: Vec<String>,
    pub releases_emitted: BTreeMap<String, u32>,
    pub client_released: Vec<BTreeSet<String>>,
    pub commands_expected: usize,
    pub commands_received: usize,
    pub frames_sent: usize,
    pub frames_lost: usize,
    pub frames_duplicated: usize,
}

impl SimOutcome {
    pub fn converged(&self) -> bool {
        self.client_views.iter().all(|v| *v == self.coordinator_view)
    }

    /// Every barrier was released exactly once and every device saw it.
    pub fn barriers_released_once(&self) -> bool {
        self.barriers.iter().all(|b| {
            self.releases_emitted.get(b) == Some(&1) && self.client_released.iter().all(|r| r.contains(b))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Coordinator,
    Device(usize),
}

struct Rng(ChaCha8Rng);

impl Rng {
    fn chance(&mut self, p: f64) -> bool {
        let unit = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        unit < p
    }

    fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }
}

fn device_name(i: usize) -> String {
    format!("dev{i}")
}

pub fn scripts(config: &SimConfig, rng_seed: u64) -> Vec<Vec<Action>> {
    let mut rng = Rng(ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5eed_5c21));
    (0..config.devices)
        .map(|d| {
            let mut script = Vec::new();
            for phase in 0..=config.barriers {
                for j in 0..rng.below(config.max_progress_per_phase + 1) {
                    script.push(Action::Progress {
                        screen_id: format!("s{phase}-{j}"),
                        status: if rng.chance(0.5) { "shown" } else { "completed" }.to_string(),
                    });
                    if config.devices > 1 && rng.chance(0.15) {
                        let to = if rng.chance(0.3) {
                            fields::BROADCAST.to_string()
                        } else {
                            let mut t = rng.below(config.devices - 1);
                            if t >= d {
                                t += 1;
                            }
                            device_name(t)
                        };
                        script.push(Action::Command {
                            to,
                            command: format!("degrade {d}:{phase}:{j}"),
                        });
                    }
                }
                if phase < config.barriers {
                    script.push(Action::Barrier(format!("b{phase}")));
                }
            }
            script.push(Action::Progress {
                screen_id: "end".to_string(),
                status: "completed".to_string(),
            });
            script
        })
        .collect()
}

struct Device {
    client: SyncClient,
    script: Vec<Action>,
    next: usize,
    waiting: Option<String>,
}

impl Device {
    fn can_act(&self) -> bool {
        self.next < self.script.len() && self.waiting.as_ref().is_none_or(|b| self.client.is_released(b))
    }
}

pub fn run(config: &SimConfig) -> SimOutcome {
    let group = "sim";
    let names: Vec<String> = (0..config.devices).map(device_name).collect();
    let mut coordinator = GroupState::with_roster(group, names.iter().map(String::as_str));
    let all_scripts = scripts(config, config.seed);
    let commands_expected = all_scripts
        .iter()
        .flatten()
        .map(|a| match a {
            Action::Command { to, .. } if to == fields::BROADCAST => config.devices - 1,
            Action::Command { .. } => 1,
            _ => 0,
        })
        .sum();
    let mut devices: Vec<Device> = names
        .iter()
        .zip(all_scripts)
        .map(|(n, script)| Device {
            client: SyncClient::new(group, n),
            script,
            next: 0,
            waiting: None,
        })
        .collect();

    let mut rng = Rng(ChaCha8Rng::seed_from_u64(config.seed));
    let mut net: Vec<(Node, String)> = Vec::new();
    let mut sent = 0usize;
    let mut lost = 0usize;
    let mut duplicated = 0usize;
    let mut commands_received = 0usize;

    let mut push = |net: &mut Vec<(Node, String)>, to: Node, m: &SyncMessage| {
        net.push((to, encode_message(m)));
        sent += 1;
    };

    for d in devices.iter_mut() {
        let hello = d.client.hello();
        push(&mut net, Node::Coordinator, &hello);
    }

    let mut steps = 0;
    let mut quiescent = false;
    while steps < config.max_steps {
        steps += 1;
        let actable: Vec<usize> = (0..devices.len()).filter(|&i| devices[i].can_act()).collect();

        if net.is_empty() && actable.is_empty() {
            let idle = devices
                .iter()
                .all(|d| d.next == d.script.len() && d.client.unacked().is_empty() && !d.client.awaiting_snapshot())
                && !coordinator.has_unacked();
            if idle {
                quiescent = true;
                break;
            }
            // timers fire on every node
            for d in devices.iter() {
                for m in d.client.retransmit() {
                    push(&mut net, Node::Coordinator, &m);
                }
            }
            for o in coordinator.retransmit() {
                let i = names.iter().position(|n| *n == o.to).expect("roster device");
                push(&mut net, Node::Device(i), &o.message);
            }
            continue;
        }

        let roll = rng.below(100);
        if roll < 30 && !actable.is_empty() {
            let i = actable[rng.below(actable.len())];
            let d = &mut devices[i];
            let action = d.script[d.next].clone();
            d.next += 1;
            let m = match action {
                Action::Progress { screen_id, status } => d.client.report_progress(&screen_id, &status),
                Action::Command { to, command } => d.client.send_command(&to, &command),
                Action::Barrier(b) => {
                    d.waiting = Some(b.clone());
                    d.client.reach_barrier(&b)
                }
            };
            push(&mut net, Node::Coordinator, &m);
        } else if roll < 34 {
            match rng.below(devices.len() + 1) {
                0 => {
                    for o in coordinator.retransmit() {
                        let i = names.iter().position(|n| *n == o.to).expect("roster device");
                        push(&mut net, Node::Device(i), &o.message);
                    }
                }
                k => {
                    for m in devices[k - 1].client.retransmit() {
                        push(&mut net, Node::Coordinator, &m);
                    }
                }
            }
        } else if config.disconnect > 0.0 && rng.chance(config.disconnect) {
            let i = rng.below(devices.len());
            net.retain(|(to, _)| *to != Node::Device(i));
            for m in devices[i].client.resume() {
                push(&mut net, Node::Coordinator, &m);
            }
        } else if !net.is_empty() {
            let idx = rng.below(net.len());
            let (to, frame) = if rng.chance(config.duplication) {
                duplicated += 1;
                net[idx].clone()
            } else {
                net.swap_remove(idx)
            };
            if rng.chance(config.loss) {
                lost += 1;
                continue;
            }
            let m = decode_message(&frame).expect("simulator frames are well formed");
            match to {
                Node::Coordinator => {
                    // errors (e.g. traffic before hello) are dropped like a real server would
                    if let Ok(out) = coordinator.step(&m) {
                        for o in out {
                            let i = names.iter().position(|n| *n == o.to).expect("roster device");
                            push(&mut net, Node::Device(i), &o.message);
                        }
                    }
                }
                Node::Device(i) => {
                    if let Ok(replies) = devices[i].client.on_message(&m) {
                        for r in replies {
                            push(&mut net, Node::Coordinator, &r);
                        }
                    }
                    commands_received += devices[i].client.take_commands().len();
                }
            }
        }
    }

    SimOutcome {
        quiescent,
        steps,
        coordinator_view: coordinator.progress_view().clone(),
        client_views: devices.iter().map(|d| d.client.view().clone()).collect(),
        barriers: (0..config.barriers).map(|b| format!("b{b}")).collect(),
        releases_emitted: coordinator.releases_emitted().clone(),
        client_released: devices.iter().map(|d| d.client.released().clone()).collect(),
        commands_expected,
        commands_received,
        frames_sent: sent,
        frames_lost: lost,
        frames_duplicated: duplicated,
    }
}
