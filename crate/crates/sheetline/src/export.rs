//! Tall CSV export of sessions and the wide per-session analysis table.
//!
//! Dialect: UTF-8, comma delimiter, LF line endings, double-quote quoting
//! with quote doubling. A field is quoted iff it contains a comma, a double
//! quote, CR or LF. Every file starts with [`HEADER`].
//!
//! Rows, in order:
//! - three `meta` rows: `seed`, `status`, `started_wall_ms` (empty `t_ms`);
//! - one `answer` row per answered item in item-id order, key = item id,
//!   value = `{"value":{"<kind>":<answer>},"revisions":<n>}`, `t_ms` = time of
//!   the item's last answer-changed event (empty when there is none);
//! - one `event` row per behavioral event in log order, key = event kind,
//!   value = `{"payload":{...}}` plus `"flags":[...]` when flagged, `t_ms` =
//!   event time.
//!
//! JSON values are compact with object keys in byte order; free-hand answers
//! are `data:image/png;base64,...` URIs kept in a single cell.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sheetline_core::capture::{fold_media_stats, keys, BehavioralEvent, EventFlag, EventKind};
use sheetline_core::engine::{time_to_answer, AnswerValue, SessionState, Status};
use thiserror::Error;

pub const HEADER: [&str; 8] = [
    "session_id",
    "participant_id",
    "spec_id",
    "spec_version",
    "kind",
    "key",
    "value",
    "t_ms",
];

pub const META_SEED: &str = "seed";
pub const META_STATUS: &str = "status";
pub const META_STARTED: &str = "started_wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowKind {
    Answer,
    Event,
    Meta,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Answer => "answer",
            RowKind::Event => "event",
            RowKind::Meta => "meta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [RowKind::Answer, RowKind::Event, RowKind::Meta]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportRow {
    pub session_id: String,
    pub participant_id: String,
    pub spec_id: String,
    pub spec_version: String,
    pub kind: RowKind,
    pub key: String,
    pub value: String,
    pub t_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueCode {
    MalformedRow,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::MalformedRow => "MALFORMED_ROW",
        }
    }
}

/// A row that was skipped while reading; the rest of the file is kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub code: IssueCode,
    /// 1-based line where the record starts.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at line {}: {}", self.code.as_str(), self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportDocument {
    pub rows: Vec<ExportRow>,
    pub issues: Vec<RowIssue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("BAD_HEADER: {0}")]
    BadHeader(String),
    #[error("MIXED_SPECS: sessions of {0} and {1} cannot share one table")]
    MixedSpecs(String, String),
}

impl ExportError {
    pub fn code(&self) -> &'static str {
        match self {
            ExportError::BadHeader(_) => "BAD_HEADER",
            ExportError::MixedSpecs(..) => "MIXED_SPECS",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerCell {
    value: AnswerValue,
    revisions: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventCell {
    payload: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    flags: BTreeSet<EventFlag>,
}

fn writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(buf)
}

/// Serializes any list of records in the export dialect.
pub fn write_records<I, R, F>(header: &[F], records: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
    F: AsRef<[u8]>,
{
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        w.write_record(header).expect("writing to memory");
        for r in records {
            w.write_record(r).expect("writing to memory");
        }
        w.flush().expect("writing to memory");
    }
    buf
}

/// The rows [`to_csv`] writes for `state`.
pub fn rows_of(state: &SessionState) -> Vec<ExportRow> {
    let row = |kind, key: &str, value: String, t_ms| ExportRow {
        session_id: state.session_id.clone(),
        participant_id: state.participant_id.clone(),
        spec_id: state.spec_id.clone(),
        spec_version: state.spec_version.clone(),
        kind,
        key: key.to_string(),
        value,
        t_ms,
    };
    let mut rows = vec![
        row(RowKind::Meta, META_SEED, state.seed.to_string(), None),
        row(RowKind::Meta, META_STATUS, state.status.as_str().to_string(), None),
        row(RowKind::Meta, META_STARTED, state.started_wall_ms.to_string(), None),
    ];
    for (item, value) in &state.answers {
        let cell = AnswerCell {
            value: value.clone(),
            revisions: state.revisions.get(item).copied().unwrap_or(1),
        };
        let t = state
            .events
            .iter()
            .rev()
            .find(|e| e.kind == EventKind::AnswerChanged && e.get(keys::ITEM_ID) == Some(item))
            .map(|e| e.t);
        rows.push(row(
            RowKind::Answer,
            item,
            serde_json::to_string(&cell).expect("answers serialize"),
            t,
        ));
    }
    for ev in &state.events {
        let cell = EventCell {
            payload: ev.payload.clone(),
            flags: ev.flags.clone(),
        };
        rows.push(row(
            RowKind::Event,
            ev.kind.as_str(),
            serde_json::to_string(&cell).expect("events serialize"),
            Some(ev.t),
        ));
    }
    rows
}

fn row_fields(r: &ExportRow) -> [String; 8] {
    [
        r.session_id.clone(),
        r.participant_id.clone(),
        r.spec_id.clone(),
        r.spec_version.clone(),
        r.kind.as_str().to_string(),
        r.key.clone(),
        r.value.clone(),
        r.t_ms.map(|t| t.to_string()).unwrap_or_default(),
    ]
}

pub fn write_rows(rows: &[ExportRow]) -> Vec<u8> {
    write_records(&HEADER, rows.iter().map(row_fields))
}

/// Header, meta rows, answer rows, event rows.
pub fn to_csv(state: &SessionState) -> Vec<u8> {
    write_rows(&rows_of(state))
}

impl ExportDocument {
    pub fn to_csv(&self) -> Vec<u8> {
        write_rows(&self.rows)
    }

    /// Sessions in order of first appearance.
    pub fn sessions(&self) -> Vec<SessionRecord> {
        let mut order: Vec<String> = Vec::new();
        let mut by_id: BTreeMap<String, SessionRecord> = BTreeMap::new();
        for r in &self.rows {
            let rec = by_id.entry(r.session_id.clone()).or_insert_with(|| {
                order.push(r.session_id.clone());
                SessionRecord {
                    session_id: r.session_id.clone(),
                    participant_id: r.participant_id.clone(),
                    spec_id: r.spec_id.clone(),
                    spec_version: r.spec_version.clone(),
                    ..Default::default()
                }
            });
            match r.kind {
                RowKind::Meta => match r.key.as_str() {
                    META_SEED => rec.seed = r.value.parse().ok(),
                    META_STATUS => rec.status = Status::parse(&r.value),
                    META_STARTED => rec.started_wall_ms = r.value.parse().ok(),
                    _ => {}
                },
                RowKind::Answer => {
                    if let Ok(cell) = serde_json::from_str::<AnswerCell>(&r.value) {
                        rec.answers.insert(r.key.clone(), (cell.value, cell.revisions));
                    }
                }
                RowKind::Event => {
                    if let Ok(cell) = serde_json::from_str::<EventCell>(&r.value) {
                        rec.events.push(BehavioralEvent {
                            kind: EventKind::parse(&r.key),
                            t: r.t_ms.unwrap_or(0),
                            payload: cell.payload,
                            flags: cell.flags,
                        });
                    }
                }
            }
        }
        order.into_iter().filter_map(|id| by_id.remove(&id)).collect()
    }
}

/// One session as recovered from export rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionRecord {
    pub session_id: String,
    pub participant_id: String,
    pub spec_id: String,
    pub spec_version: String,
    pub seed: Option<u64>,
    pub status: Option<Status>,
    pub started_wall_ms: Option<u64>,
    pub answers: BTreeMap<String, (AnswerValue, u32)>,
    pub events: Vec<BehavioralEvent>,
}

fn check_row(fields: &[&str]) -> Result<ExportRow, String> {
    let [session_id, participant_id, spec_id, spec_version, kind, key, value, t_ms] = fields else {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    };
    if session_id.is_empty() {
        return Err("empty session_id".into());
    }
    let kind = RowKind::parse(kind).ok_or_else(|| format!("unknown row kind `{kind}`"))?;
    let t_ms = if t_ms.is_empty() {
        None
    } else if t_ms.bytes().all(|b| b.is_ascii_digit()) && (t_ms.len() == 1 || !t_ms.starts_with('0')) {
        Some(t_ms.parse::<u64>().map_err(|_| format!("t_ms `{t_ms}` out of range"))?)
    } else {
        return Err(format!("t_ms `{t_ms}` is not a millisecond count"));
    };
    match kind {
        RowKind::Meta => {
            if t_ms.is_some() {
                return Err("meta rows carry no t_ms".into());
            }
            let ok = match *key {
                META_SEED | META_STARTED => value.parse::<u64>().is_ok_and(|v| v.to_string() == *value),
                META_STATUS => Status::parse(value).is_some(),
                _ => return Err(format!("unknown meta key `{key}`")),
            };
            if !ok {
                return Err(format!("bad {key} value `{value}`"));
            }
        }
        RowKind::Answer => {
            let cell: AnswerCell = serde_json::from_str(value).map_err(|e| format!("bad answer value: {e}"))?;
            if serde_json::to_string(&cell).ok().as_deref() != Some(*value) {
                return Err("answer value is not in canonical form".into());
            }
        }
        RowKind::Event => {
            if key.is_empty() {
                return Err("empty event kind".into());
            }
            if t_ms.is_none() {
                return Err("event rows need t_ms".into());
            }
            let cell: EventCell = serde_json::from_str(value).map_err(|e| format!("bad event value: {e}"))?;
            if serde_json::to_string(&cell).ok().as_deref() != Some(*value) {
                return Err("event value is not in canonical form".into());
            }
        }
    }
    Ok(ExportRow {
        session_id: session_id.to_string(),
        participant_id: participant_id.to_string(),
        spec_id: spec_id.to_string(),
        spec_version: spec_version.to_string(),
        kind,
        key: key.to_string(),
        value: value.to_string(),
        t_ms,
    })
}

/// Reads an export file. A wrong header rejects the file; a bad row is
/// reported as MALFORMED_ROW and skipped.
pub fn from_csv(bytes: &[u8]) -> Result<ExportDocument, ExportError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.byte_records();
    let header = match records.next() {
        None => return Err(ExportError::BadHeader("empty file".into())),
        Some(Err(e)) => return Err(ExportError::BadHeader(e.to_string())),
        Some(Ok(h)) => h,
    };
    if header.iter().ne(HEADER.iter().map(|h| h.as_bytes())) {
        return Err(ExportError::BadHeader(format!(
            "expected `{}`",
            HEADER.join(",")
        )));
    }
    let mut doc = ExportDocument::default();
    for rec in records {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                doc.issues.push(RowIssue {
                    code: IssueCode::MalformedRow,
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Result<Vec<&str>, _> = rec.iter().map(std::str::from_utf8).collect();
        match fields
            .map_err(|_| "row is not valid UTF-8".to_string())
            .and_then(|f| check_row(&f))
        {
            Ok(row) => doc.rows.push(row),
            Err(message) => doc.issues.push(RowIssue {
                code: IssueCode::MalformedRow,
                line,
                message,
            }),
        }
    }
    Ok(doc)
}

/// The wide analysis table: one row per session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WideTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl WideTable {
    pub fn to_csv(&self) -> Vec<u8> {
        write_records(&self.columns, self.rows.iter())
    }
}

pub const TIME_TO_ANSWER_PREFIX: &str = "time_to_answer_";
pub const FOCUS_LOST_COUNT: &str = "focus_lost_count";
pub const STALL_TOTAL_PREFIX: &str = "stall_total_ms_";

/// Text form of an answer in the wide table.
pub fn answer_cell(v: &AnswerValue) -> String {
    match v {
        AnswerValue::Category(c) => c.to_string(),
        AnswerValue::Continuous(x) => x.to_string(),
        AnswerValue::Text(s) | AnswerValue::Image(s) => s.clone(),
    }
}

/// Columns: session_id, participant_id, spec_id, spec_version, status, one
/// column per item, `time_to_answer_<item>` per item, `focus_lost_count`,
/// `stall_total_ms_<asset>` per media asset. Items and assets are the union
/// over all sessions, sorted; rows are sorted, so input order is irrelevant.
pub fn aggregate(docs: &[ExportDocument]) -> Result<WideTable, ExportError> {
    let sessions: Vec<SessionRecord> = docs.iter().flat_map(ExportDocument::sessions).collect();
    if let Some(first) = sessions.first() {
        for s in &sessions[1..] {
            if (s.spec_id.as_str(), s.spec_version.as_str()) != (first.spec_id.as_str(), first.spec_version.as_str()) {
                return Err(ExportError::MixedSpecs(
                    format!("{}@{}", first.spec_id, first.spec_version),
                    format!("{}@{}", s.spec_id, s.spec_version),
                ));
            }
        }
    }
    let items: BTreeSet<&str> = sessions.iter().flat_map(|s| s.answers.keys().map(String::as_str)).collect();
    let assets: BTreeSet<&str> = sessions
        .iter()
        .flat_map(|s| s.events.iter())
        .filter(|e| e.kind.is_media())
        .filter_map(|e| e.get(keys::ASSET_ID))
        .collect();

    let mut columns: Vec<String> = ["session_id", "participant_id", "spec_id", "spec_version", "status"]
        .map(String::from)
        .to_vec();
    columns.extend(items.iter().map(|i| i.to_string()));
    columns.extend(items.iter().map(|i| format!("{TIME_TO_ANSWER_PREFIX}{i}")));
    columns.push(FOCUS_LOST_COUNT.to_string());
    columns.extend(assets.iter().map(|a| format!("{STALL_TOTAL_PREFIX}{a}")));

    let mut rows: Vec<Vec<String>> = sessions
        .iter()
        .map(|s| {
            let mut row = vec![
                s.session_id.clone(),
                s.participant_id.clone(),
                s.spec_id.clone(),
                s.spec_version.clone(),
                s.status.map(|st| st.as_str().to_string()).unwrap_or_default(),
            ];
            row.extend(
                items
                    .iter()
                    .map(|i| s.answers.get(*i).map(|(v, _)| answer_cell(v)).unwrap_or_default()),
            );
            row.extend(
                items
                    .iter()
                    .map(|i| time_to_answer(&s.events, i).map(|t| t.to_string()).unwrap_or_default()),
            );
            row.push(s.events.iter().filter(|e| e.kind == EventKind::FocusLost).count().to_string());
            row.extend(
                assets
                    .iter()
                    .map(|a| fold_media_stats(s.events.iter(), a).total_stall_ms.to_string()),
            );
            row
        })
        .collect();
    rows.sort();
    Ok(WideTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sheetline_core::engine::FixedClock;
    use sheetline_core::spec::{ItemSpec, ScaleSpec, ScreenBody, ScreenSpec};
    use sheetline_core::QuestionnaireSpec;

    fn spec() -> QuestionnaireSpec {
        QuestionnaireSpec {
            spec_id: "t".into(),
            version: "1".into(),
            title: "T".into(),
            screens: vec![ScreenSpec {
                screen_id: "s".into(),
                body: ScreenBody::Items {
                    items: vec![ItemSpec {
                        item_id: "q".into(),
                        question: "Q".into(),
                        scale: ScaleSpec::FreeText { max_length: 100 },
                        required: false,
                    }],
                },
            }],
            routing: vec![],
            assets: vec![],
        }
    }

    fn fresh() -> SessionState {
        SessionState::prepare(&spec(), "p1", 42, &FixedClock {
                monotonic_ms: 5,
                wall_clock_ms: 1_700_000_000_000,
            })
    }

    #[test]
    fn fresh_session_has_only_meta_rows() {
        let csv = String::from_utf8(to_csv(&fresh())).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], HEADER.join(","));
        assert!(lines[1].ends_with(",t,1,meta,seed,42,"));
        assert!(lines[2].ends_with(",meta,status,created,"));
        assert!(lines[3].ends_with(",meta,started_wall_ms,1700000000000,"));
    }

    #[test]
    fn two_answers_three_events() {
        let mut s = fresh();
        s.answers.insert("a".into(), AnswerValue::Category(2));
        s.answers.insert("b".into(), AnswerValue::Continuous(0.25));
        for t in [1, 2, 3] {
            s.events.push(BehavioralEvent::new(EventKind::FocusLost, t));
        }
        let doc = from_csv(&to_csv(&s)).unwrap();
        assert_eq!(doc.rows.len(), 3 + 2 + 3);
        assert_eq!(doc.rows, rows_of(&s));
    }

    #[test]
    fn awkward_text_is_quoted() {
        let mut s = fresh();
        s.answers.insert("q".into(), AnswerValue::Text("\",\n".into()));
        s.revisions.insert("q".into(), 3);
        let bytes = to_csv(&s);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains(r#","{""value"":{""text"":""\"",\n""},""revisions"":3}","#));
        let doc = from_csv(&bytes).unwrap();
        assert!(doc.issues.is_empty());
        assert_eq!(doc.to_csv(), bytes);
        assert_eq!(doc.sessions()[0].answers["q"], (AnswerValue::Text("\",\n".into()), 3));
    }

    #[test]
    fn wrong_header() {
        let err = from_csv(b"id,kind\n1,meta\n").unwrap_err();
        assert_eq!(err.code(), "BAD_HEADER");
        assert_eq!(from_csv(b"").unwrap_err().code(), "BAD_HEADER");
    }

    #[test]
    fn one_bad_row_among_hundred() {
        let mut s = fresh();
        for t in 0..97 {
            s.events.push(BehavioralEvent::new(EventKind::FocusGained, t));
        }
        let text = String::from_utf8(to_csv(&s)).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 101);
        lines[50] = "garbage,\"unterminated";
        let bad = lines.join("\n");
        // an unterminated quote swallows the rest, so break a row differently
        let doc = from_csv(bad.as_bytes()).unwrap();
        assert!(doc.rows.len() < 100);
        lines[50] = "x,y,z";
        let doc = from_csv(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(doc.rows.len(), 99);
        assert_eq!(doc.issues.len(), 1);
        assert_eq!(doc.issues[0].code.as_str(), "MALFORMED_ROW");
        assert_eq!(doc.issues[0].line, 51);
    }

    #[test]
    fn malformed_rows_are_recognized() {
        let good = "s,p,t,1,event,focus-lost,{\"payload\":{}},7";
        for bad in [
            "s,p,t,1,event,focus-lost,{\"payload\":{}},",
            "s,p,t,1,event,focus-lost,{\"payload\":{}},07",
            "s,p,t,1,event,focus-lost,{},7",
            "s,p,t,1,evnt,focus-lost,{\"payload\":{}},7",
            "s,p,t,1,meta,seed,-1,",
            "s,p,t,1,meta,seed,1,5",
            "s,p,t,1,meta,colour,1,",
            "s,p,t,1,answer,q,{\"value\":{\"category\":1}},",
            ",p,t,1,meta,seed,1,",
        ] {
            let doc = from_csv(format!("{}\n{good}\n{bad}\n", HEADER.join(",")).as_bytes()).unwrap();
            assert_eq!((doc.rows.len(), doc.issues.len()), (1, 1), "{bad}");
        }
    }

    fn doc_with(session: &str, participant: &str, answers: &[(&str, AnswerValue)], events: Vec<BehavioralEvent>) -> ExportDocument {
        let mut s = fresh();
        s.session_id = session.into();
        s.participant_id = participant.into();
        s.status = Status::Completed;
        for (k, v) in answers {
            s.answers.insert(k.to_string(), v.clone());
        }
        s.events = events;
        from_csv(&to_csv(&s)).unwrap()
    }

    #[test]
    fn aggregate_two_sessions() {
        let shown = |t, s: &str| BehavioralEvent::new(EventKind::ScreenShown, t).with(keys::SCREEN_ID, s);
        let answered = |t, i: &str, s: &str| {
            BehavioralEvent::new(EventKind::AnswerChanged, t)
                .with(keys::ITEM_ID, i)
                .with(keys::SCREEN_ID, s)
        };
        let a = doc_with(
            "A",
            "p1",
            &[("x", AnswerValue::Category(1)), ("y", AnswerValue::Continuous(0.5))],
            vec![
                shown(0, "s"),
                answered(700, "x", "s"),
                BehavioralEvent::new(EventKind::FocusLost, 800),
                answered(900, "y", "s"),
                BehavioralEvent::new(EventKind::MediaStallStart, 1000).with(keys::ASSET_ID, "clip"),
                BehavioralEvent::new(EventKind::MediaStallEnd, 1250).with(keys::ASSET_ID, "clip"),
            ],
        );
        let b = doc_with("B", "p2", &[("x", AnswerValue::Category(0))], vec![]);
        let t = aggregate(&[b.clone(), a.clone()]).unwrap();
        assert_eq!(
            t.columns,
            [
                "session_id",
                "participant_id",
                "spec_id",
                "spec_version",
                "status",
                "x",
                "y",
                "time_to_answer_x",
                "time_to_answer_y",
                "focus_lost_count",
                "stall_total_ms_clip"
            ]
        );
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0], ["A", "p1", "t", "1", "completed", "1", "0.5", "700", "900", "1", "250"]);
        assert_eq!(t.rows[1], ["B", "p2", "t", "1", "completed", "0", "", "", "", "0", "0"]);
        assert_eq!(aggregate(&[a, b]).unwrap(), t);
    }

    #[test]
    fn aggregate_rejects_mixed_specs() {
        let a = doc_with("A", "p1", &[], vec![]);
        let mut b = doc_with("B", "p2", &[], vec![]);
        for r in &mut b.rows {
            r.spec_version = "2".into();
        }
        assert_eq!(aggregate(&[a, b]).unwrap_err().code(), "MIXED_SPECS");
    }

    #[test]
    fn empty_aggregate_is_header_only() {
        let t = aggregate(&[]).unwrap();
        assert_eq!(
            String::from_utf8(t.to_csv()).unwrap(),
            "session_id,participant_id,spec_id,spec_version,status,focus_lost_count\n"
        );
    }
}
