//! Session state machine.
//!
//! One screen is active at a time. Answers may only target items on the
//! active screen, [`Session::advance`] is gated on [`Session::screen_ready`],
//! and the next screen is picked by the highest-priority matching routing
//! rule (falling through to the following screen). Navigation is
//! forward-only.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::capture::{self, keys, BehavioralEvent, EventError, EventFlag, EventKind};
use crate::diagnostic::{has_errors, Diagnostic};
use crate::spec::{AnswerKind, Comparator, Condition, Literal, QuestionnaireSpec, ScaleSpec, ScreenBody, ScreenSpec};

/// Monotonic time source injected into the engine. Wall-clock time is read
/// once at session start for alignment with external records.
pub trait Clock {
    fn monotonic_ms(&self) -> u64;
    fn wall_clock_ms(&self) -> u64;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixedClock {
    pub monotonic_ms: u64,
    pub wall_clock_ms: u64,
}

impl Clock for FixedClock {
    fn monotonic_ms(&self) -> u64 {
        self.monotonic_ms
    }

    fn wall_clock_ms(&self) -> u64 {
        self.wall_clock_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerValue {
    Category(u32),
    Continuous(f64),
    Text(String),
    /// A `data:image/...;base64,` URI.
    Image(String),
}

impl AnswerValue {
    pub fn kind(&self) -> AnswerKind {
        match self {
            AnswerValue::Category(_) => AnswerKind::Category,
            AnswerValue::Continuous(_) => AnswerKind::Continuous,
            AnswerValue::Text(_) => AnswerKind::Text,
            AnswerValue::Image(_) => AnswerKind::Image,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Created,
    InProgress,
    Completed,
    Aborted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Created => "created",
            Status::InProgress => "in_progress",
            Status::Completed => "completed",
            Status::Aborted => "aborted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Status::Created, Status::InProgress, Status::Completed, Status::Aborted]
            .into_iter()
            .find(|st| st.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub participant_id: String,
    pub spec_id: String,
    pub spec_version: String,
    pub seed: u64,
    pub cursor: usize,
    pub status: Status,
    pub answers: BTreeMap<String, AnswerValue>,
    #[serde(default)]
    pub revisions: BTreeMap<String, u32>,
    pub events: Vec<BehavioralEvent>,
    pub screen_entry_times: BTreeMap<String, u64>,
    /// Screen ids in the order they were shown.
    #[serde(default)]
    pub path: Vec<String>,
    pub started_wall_ms: u64,
    pub started_monotonic_ms: u64,
}

impl SessionState {
    /// A session in `created` status with no events. [`Session::create`] is
    /// the usual entry point.
    pub fn prepare(spec: &QuestionnaireSpec, participant_id: &str, seed: u64, clock: &dyn Clock) -> Self {
        let wall = clock.wall_clock_ms();
        let mono = clock.monotonic_ms();
        let mut h = Sha256::new();
        h.update(spec.spec_id.as_bytes());
        h.update([0]);
        h.update(participant_id.as_bytes());
        h.update([0]);
        h.update(seed.to_le_bytes());
        h.update(wall.to_le_bytes());
        h.update(mono.to_le_bytes());
        let digest = h.finalize();
        let session_id = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Self {
            session_id,
            participant_id: participant_id.to_string(),
            spec_id: spec.spec_id.clone(),
            spec_version: spec.version.clone(),
            seed,
            cursor: 0,
            status: Status::Created,
            answers: BTreeMap::new(),
            revisions: BTreeMap::new(),
            events: Vec::new(),
            screen_entry_times: BTreeMap::new(),
            path: Vec::new(),
            started_wall_ms: wall,
            started_monotonic_ms: mono,
        }
    }

    /// Milliseconds since session start according to `clock`.
    pub fn elapsed_ms(&self, clock: &dyn Clock) -> u64 {
        clock.monotonic_ms().saturating_sub(self.started_monotonic_ms)
    }

    fn push_event(&mut self, mut ev: BehavioralEvent) {
        if self.events.last().is_some_and(|last| ev.t < last.t) {
            ev.flags.insert(EventFlag::NonMonotonic);
        }
        self.events.push(ev);
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("questionnaire has validation errors")]
    InvalidSpec(Vec<Diagnostic>),
    #[error("session is not in progress")]
    SessionNotActive,
    #[error("item `{0}` is not on the active screen")]
    ItemNotOnActiveScreen(String),
    #[error("answer type does not match the scale of item `{0}`")]
    TypeMismatch(String),
    #[error("answer for item `{0}` is out of range")]
    ValueOutOfRange(String),
    #[error("active screen is not ready to advance")]
    NotReady,
    #[error(transparent)]
    InvalidEvent(#[from] EventError),
    #[error("session belongs to {expected}, not to {found}")]
    SpecMismatch { expected: String, found: String },
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::InvalidSpec(_) => "INVALID_SPEC",
            EngineError::SessionNotActive => "SESSION_NOT_ACTIVE",
            EngineError::ItemNotOnActiveScreen(_) => "ITEM_NOT_ON_ACTIVE_SCREEN",
            EngineError::TypeMismatch(_) => "TYPE_MISMATCH",
            EngineError::ValueOutOfRange(_) => "VALUE_OUT_OF_RANGE",
            EngineError::NotReady => "NOT_READY",
            EngineError::InvalidEvent(_) => "INVALID_EVENT",
            EngineError::SpecMismatch { .. } => "SPEC_MISMATCH",
        }
    }
}

/// Outcome of a successful [`Session::advance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    Screen(usize),
    Completed,
}

pub struct Session<'s> {
    spec: &'s QuestionnaireSpec,
    state: SessionState,
}

impl<'s> Session<'s> {
    pub fn create(
        spec: &'s QuestionnaireSpec,
        participant_id: &str,
        seed: u64,
        clock: &dyn Clock,
    ) -> Result<Self, EngineError> {
        let diags = crate::spec::validate(spec);
        if has_errors(&diags) {
            return Err(EngineError::InvalidSpec(diags));
        }
        let mut session = Self {
            spec,
            state: SessionState::prepare(spec, participant_id, seed, clock),
        };
        session.state.status = Status::InProgress;
        session.show(0, 0);
        Ok(session)
    }

    /// Reattaches a restored state to its questionnaire.
    pub fn resume(spec: &'s QuestionnaireSpec, state: SessionState) -> Result<Self, EngineError> {
        if state.spec_id != spec.spec_id || state.spec_version != spec.version {
            return Err(EngineError::SpecMismatch {
                expected: format!("{}@{}", spec.spec_id, spec.version),
                found: format!("{}@{}", state.spec_id, state.spec_version),
            });
        }
        if state.status == Status::InProgress && state.cursor >= spec.screens.len() {
            return Err(EngineError::SpecMismatch {
                expected: format!("{} screens", spec.screens.len()),
                found: format!("cursor {}", state.cursor),
            });
        }
        Ok(Self { spec, state })
    }

    pub fn spec(&self) -> &'s QuestionnaireSpec {
        self.spec
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn into_state(self) -> SessionState {
        self.state
    }

    pub fn active_screen(&self) -> Option<&'s ScreenSpec> {
        if self.state.status == Status::InProgress {
            self.spec.screens.get(self.state.cursor)
        } else {
            None
        }
    }

    fn active(&self) -> Result<&'s ScreenSpec, EngineError> {
        self.active_screen().ok_or(EngineError::SessionNotActive)
    }

    fn show(&mut self, index: usize, at: u64) {
        let id = self.spec.screens[index].screen_id.clone();
        self.state.cursor = index;
        self.state.screen_entry_times.insert(id.clone(), at);
        self.state.path.push(id.clone());
        self.state
            .push_event(BehavioralEvent::new(EventKind::ScreenShown, at).with(keys::SCREEN_ID, id));
    }

    pub fn submit_answer(&mut self, item_id: &str, value: AnswerValue, at: u64) -> Result<(), EngineError> {
        let screen = self.active()?;
        let item = match &screen.body {
            ScreenBody::Items { items } => items.iter().find(|it| it.item_id == item_id),
            _ => None,
        }
        .ok_or_else(|| EngineError::ItemNotOnActiveScreen(item_id.to_string()))?;
        check_answer(&item.scale, &value, item_id)?;

        self.state.answers.insert(item_id.to_string(), value);
        let rev = self.state.revisions.entry(item_id.to_string()).or_insert(0);
        *rev += 1;
        let rev = *rev;
        self.state.push_event(
            BehavioralEvent::new(EventKind::AnswerChanged, at)
                .with(keys::ITEM_ID, item_id)
                .with(keys::SCREEN_ID, screen.screen_id.as_str())
                .with("revision", format!("{rev}")),
        );
        Ok(())
    }

    /// Whether the active screen's completion condition holds at `now`.
    pub fn screen_ready(&self, now: u64) -> bool {
        let Some(screen) = self.active_screen() else {
            return false;
        };
        match &screen.body {
            ScreenBody::Items { items } => items
                .iter()
                .filter(|it| it.required)
                .all(|it| self.state.answers.contains_key(&it.item_id)),
            ScreenBody::Wait { duration_ms } => {
                let entered = self.entry_time(screen);
                now.saturating_sub(entered) >= *duration_ms
            }
            ScreenBody::Media { asset_id, autoplay, .. } => !*autoplay || self.media_ended_since_shown(screen, asset_id),
            ScreenBody::Export { .. } | ScreenBody::RemoteCommand { .. } => true,
        }
    }

    fn entry_time(&self, screen: &ScreenSpec) -> u64 {
        self.state
            .screen_entry_times
            .get(&screen.screen_id)
            .copied()
            .unwrap_or(0)
    }

    fn media_ended_since_shown(&self, screen: &ScreenSpec, asset_id: &str) -> bool {
        for ev in self.state.events.iter().rev() {
            if ev.kind == EventKind::ScreenShown && ev.get(keys::SCREEN_ID) == Some(screen.screen_id.as_str()) {
                return false;
            }
            if ev.kind == EventKind::MediaEnded && ev.get(keys::ASSET_ID) == Some(asset_id) {
                return true;
            }
        }
        false
    }

    pub fn advance(&mut self, at: u64) -> Result<Advance, EngineError> {
        let screen = self.active()?;
        if !self.screen_ready(at) {
            return Err(EngineError::NotReady);
        }
        let next = next_screen(self.spec, self.state.cursor, &self.state.answers);
        self.state.push_event(
            BehavioralEvent::new(EventKind::ScreenCompleted, at).with(keys::SCREEN_ID, screen.screen_id.as_str()),
        );
        match next {
            Some(i) => {
                self.show(i, at);
                Ok(Advance::Screen(i))
            }
            None => {
                self.state.status = Status::Completed;
                Ok(Advance::Completed)
            }
        }
    }

    pub fn record_event(&mut self, event: BehavioralEvent) -> Result<(), EngineError> {
        self.active()?;
        event.check()?;
        self.state.push_event(event);
        Ok(())
    }

    pub fn abort(&mut self) -> Result<(), EngineError> {
        self.active()?;
        self.state.status = Status::Aborted;
        Ok(())
    }
}

fn check_answer(scale: &ScaleSpec, value: &AnswerValue, item_id: &str) -> Result<(), EngineError> {
    if scale.answer_kind() != value.kind() {
        return Err(EngineError::TypeMismatch(item_id.to_string()));
    }
    let in_range = match (scale, value) {
        (ScaleSpec::CategoryRating { labels }, AnswerValue::Category(i)) => (*i as usize) < labels.len(),
        (_, AnswerValue::Continuous(v)) => v.is_finite() && (0.0..=1.0).contains(v),
        (ScaleSpec::FreeText { max_length }, AnswerValue::Text(t)) => t.chars().count() <= *max_length as usize,
        (_, AnswerValue::Image(uri)) => matches!(
            capture::data_uri::decode(uri),
            Ok((mt, _)) if mt.starts_with("image/")
        ),
        _ => false,
    };
    if in_range {
        Ok(())
    } else {
        Err(EngineError::ValueOutOfRange(item_id.to_string()))
    }
}

/// Index of the screen that follows `current`, or `None` when the
/// questionnaire is finished.
pub fn next_screen(spec: &QuestionnaireSpec, current: usize, answers: &BTreeMap<String, AnswerValue>) -> Option<usize> {
    let id = &spec.screens[current].screen_id;
    spec.rules_after(id)
        .into_iter()
        .find(|r| evaluate(&r.condition, answers))
        .and_then(|r| spec.screen_index(&r.goto_screen))
        .or_else(|| (current + 1 < spec.screens.len()).then_some(current + 1))
}

/// Evaluates a routing condition. Comparisons between an answer and a literal
/// of a different type are false, as is any comparison on an unanswered item
/// other than `unanswered`.
pub fn evaluate(cond: &Condition, answers: &BTreeMap<String, AnswerValue>) -> bool {
    let answer = answers.get(&cond.item_id);
    match cond.comparator {
        Comparator::Answered => return answer.is_some(),
        Comparator::Unanswered => return answer.is_none(),
        _ => {}
    }
    let (Some(answer), Some(lit)) = (answer, cond.literal.as_ref()) else {
        return false;
    };
    let ord = match (answer, lit) {
        (AnswerValue::Category(a), Literal::Category(b)) => Some(a.cmp(b)),
        (AnswerValue::Continuous(a), Literal::Continuous(b)) => a.partial_cmp(b),
        (AnswerValue::Text(a), Literal::Text(b)) => Some(a.as_str().cmp(b.as_str())),
        _ => None,
    };
    let Some(ord) = ord else { return false };
    match cond.comparator {
        Comparator::Eq => ord == Ordering::Equal,
        Comparator::Ne => ord != Ordering::Equal,
        Comparator::Lt => ord == Ordering::Less,
        Comparator::Le => ord != Ordering::Greater,
        Comparator::Gt => ord == Ordering::Greater,
        Comparator::Ge => ord != Ordering::Less,
        Comparator::Answered | Comparator::Unanswered => unreachable!(),
    }
}

/// Time from the item's screen being shown to its first answer, recomputed
/// from the event log alone.
pub fn time_to_answer(events: &[BehavioralEvent], item_id: &str) -> Option<u64> {
    let (idx, first) = events
        .iter()
        .enumerate()
        .find(|(_, e)| e.kind == EventKind::AnswerChanged && e.get(keys::ITEM_ID) == Some(item_id))?;
    let screen = first.get(keys::SCREEN_ID)?;
    let shown = events[..idx]
        .iter()
        .rev()
        .find(|e| e.kind == EventKind::ScreenShown && e.get(keys::SCREEN_ID) == Some(screen))?;
    Some(first.t.saturating_sub(shown.t))
}

pub const SNAPSHOT_FORMAT: &str = "sheetline.session";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
}

impl SnapshotError {
    pub fn code(&self) -> &'static str {
        "CORRUPT_SNAPSHOT"
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<S> {
    format: String,
    version: u32,
    state: S,
}

/// Self-describing JSON snapshot. Readers ignore unknown fields so minor
/// additions stay compatible; the major `version` must match.
pub fn snapshot(state: &SessionState) -> Vec<u8> {
    serde_json::to_vec(&Envelope {
        format: SNAPSHOT_FORMAT.to_string(),
        version: SNAPSHOT_VERSION,
        state,
    })
    .expect("session state serializes")
}

pub fn restore(bytes: &[u8]) -> Result<SessionState, SnapshotError> {
    let env: Envelope<serde_json::Value> =
        serde_json::from_slice(bytes).map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
    if env.format != SNAPSHOT_FORMAT {
        return Err(SnapshotError::Corrupt(format!("unexpected format `{}`", env.format)));
    }
    if env.version != SNAPSHOT_VERSION {
        return Err(SnapshotError::UnsupportedVersion(env.version));
    }
    serde_json::from_value(env.state).map_err(|e| SnapshotError::Corrupt(e.to_string()))
}
