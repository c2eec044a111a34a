//! Random questionnaires and sessions shared by the integration tests.
#![allow(dead_code)]

pub mod study;

use rand::seq::SliceRandom;
use rand::Rng;
use sheetline_core::capture::{data_uri, BehavioralEvent, EventKind};
use sheetline_core::engine::{AnswerValue, SessionState, Status};
use sheetline_core::spec::{
    AssetRef, Comparator, Condition, ExportTarget, ItemSpec, Literal, RoutingRule, ScaleSpec, ScreenBody, ScreenSpec,
};
use sheetline_core::QuestionnaireSpec;

const NASTY: &[&str] = &[
    "\"", "\"\"", ",", "\n", "\r\n", "\r", " ", "\t", "ä", "日本", "🙂", "\\", "'", "=", "#", "[", "]", "{", "}",
    "data:", "SYNC/1", "\u{0}", "\u{feff}", "</script>", "&amp;", "NaN", "-0", "",
];

/// Text built from quoting, delimiter and non-ASCII fragments.
pub fn nasty_string(rng: &mut impl Rng) -> String {
    let mut s = String::new();
    for _ in 0..rng.gen_range(0..8) {
        if rng.gen_bool(0.6) {
            s.push_str(NASTY.choose(rng).unwrap());
        } else {
            let len = rng.gen_range(1..6);
            s.extend((0..len).map(|_| rng.gen_range(b'a'..=b'z') as char));
        }
    }
    s
}

fn non_empty(rng: &mut impl Rng) -> String {
    let s = nasty_string(rng);
    if s.trim().is_empty() {
        format!("q{s}x")
    } else {
        s
    }
}

pub fn random_scale(rng: &mut impl Rng, svg_assets: &mut Vec<AssetRef>, tag: &str) -> ScaleSpec {
    match rng.gen_range(0..7) {
        0 => {
            let n = rng.gen_range(2..7);
            ScaleSpec::CategoryRating {
                labels: (0..n).map(|i| format!("{}#{i}", nasty_string(rng))).collect(),
            }
        }
        1 => ScaleSpec::VisualAnalogue {
            min_label: nasty_string(rng),
            max_label: nasty_string(rng),
        },
        2 => ScaleSpec::NasaTlxSubscale {
            dimension: non_empty(rng),
        },
        3 => ScaleSpec::ContinuousQuality,
        4 => ScaleSpec::FreeText {
            max_length: rng.gen_range(1..2000),
        },
        5 => ScaleSpec::FreeHand {
            width: rng.gen_range(1..900),
            height: rng.gen_range(1..900),
        },
        _ => {
            let id = format!("svg-{tag}");
            svg_assets.push(AssetRef {
                asset_id: id.clone(),
                src: format!("{id}.svg"),
                media_type: "image/svg+xml".into(),
                preload: rng.gen(),
            });
            let lo: f64 = rng.gen_range(-100.0..100.0);
            ScaleSpec::CustomSvg {
                svg_asset: id,
                value_min: lo,
                value_max: lo + rng.gen_range(0.5..50.0),
            }
        }
    }
}

/// A literal that fits `scale`, if the scale supports comparisons.
pub fn fitting_literal(rng: &mut impl Rng, scale: &ScaleSpec) -> Option<Literal> {
    match scale {
        ScaleSpec::CategoryRating { labels } => Some(Literal::Category(rng.gen_range(0..labels.len() as u32))),
        ScaleSpec::FreeText { .. } => Some(Literal::Text(nasty_string(rng))),
        ScaleSpec::FreeHand { .. } => None,
        _ => Some(Literal::Continuous(rng.gen_range(0.0..=1.0))),
    }
}

pub struct SpecShape {
    pub screens: usize,
    /// Share of items screens among all screens.
    pub items_share: f64,
    pub max_items: usize,
    pub max_rules_per_screen: usize,
    pub with_export: bool,
}

impl Default for SpecShape {
    fn default() -> Self {
        Self {
            screens: 20,
            items_share: 0.6,
            max_items: 4,
            max_rules_per_screen: 3,
            with_export: true,
        }
    }
}

/// A spec that passes validation without errors.
pub fn random_spec(rng: &mut impl Rng, shape: &SpecShape) -> QuestionnaireSpec {
    let mut assets = Vec::new();
    let mut screens = Vec::new();
    let last = shape.screens.saturating_sub(1);
    for si in 0..shape.screens {
        let screen_id = format!("s{si}");
        let body = if shape.with_export && si == last && si > 0 {
            ScreenBody::Export {
                target: *[
                    ExportTarget::Upload,
                    ExportTarget::Download,
                    ExportTarget::UploadThenDownloadFallback,
                ]
                .choose(rng)
                .unwrap(),
            }
        } else if si == 0 || rng.gen_bool(shape.items_share) {
            let n = rng.gen_range(1..=shape.max_items.max(1));
            ScreenBody::Items {
                items: (0..n)
                    .map(|ii| ItemSpec {
                        item_id: format!("q{si}_{ii}"),
                        question: non_empty(rng),
                        scale: random_scale(rng, &mut assets, &format!("{si}_{ii}")),
                        required: rng.gen_bool(0.4),
                    })
                    .collect(),
            }
        } else {
            match rng.gen_range(0..3) {
                0 => ScreenBody::Wait {
                    duration_ms: rng.gen_range(0..5000),
                },
                1 => {
                    let asset_id = format!("media-{si}");
                    assets.push(AssetRef {
                        asset_id: asset_id.clone(),
                        src: format!("clips/{}.mp4", nasty_string(rng).escape_default()),
                        media_type: "video/mp4".into(),
                        preload: rng.gen(),
                    });
                    ScreenBody::Media {
                        asset_id,
                        autoplay: rng.gen(),
                        preload: rng.gen(),
                    }
                }
                _ => ScreenBody::RemoteCommand {
                    command: nasty_string(rng),
                },
            }
        };
        screens.push(ScreenSpec { screen_id, body });
    }

    let all_items: Vec<(String, ScaleSpec)> = screens
        .iter()
        .flat_map(|s| match &s.body {
            ScreenBody::Items { items } => items.iter().map(|i| (i.item_id.clone(), i.scale.clone())).collect(),
            _ => Vec::new(),
        })
        .collect();
    let mut routing = Vec::new();
    for a in 0..shape.screens.saturating_sub(1) {
        let n = rng.gen_range(0..=shape.max_rules_per_screen);
        let mut priorities: Vec<i64> = (-5..20).collect();
        priorities.shuffle(rng);
        for &priority in priorities.iter().take(n) {
            let (item_id, scale) = all_items.choose(rng).unwrap().clone();
            let lit = fitting_literal(rng, &scale);
            let comparator = match &lit {
                Some(_) if rng.gen_bool(0.8) => *Comparator::ALL[..6].choose(rng).unwrap(),
                _ => *[Comparator::Answered, Comparator::Unanswered].choose(rng).unwrap(),
            };
            let literal = if comparator.takes_literal() { lit } else { None };
            routing.push(RoutingRule {
                after_screen: format!("s{a}"),
                condition: Condition {
                    item_id,
                    comparator,
                    literal,
                },
                goto_screen: format!("s{}", rng.gen_range(a + 1..shape.screens)),
                priority,
            });
        }
    }
    routing.shuffle(rng);

    QuestionnaireSpec {
        spec_id: format!("spec-{}", rng.gen_range(0..1000)),
        version: format!("{}.{}", rng.gen_range(0..5), rng.gen_range(0..10)),
        title: non_empty(rng),
        screens,
        routing,
        assets,
    }
}

/// A tiny PNG-labelled Data URI; the payload bytes are arbitrary.
pub fn random_image_uri(rng: &mut impl Rng) -> String {
    let len = rng.gen_range(0..600);
    let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
    data_uri::encode("image/png", &bytes)
}

pub fn random_answer(rng: &mut impl Rng, scale: &ScaleSpec) -> AnswerValue {
    match scale {
        ScaleSpec::CategoryRating { labels } => AnswerValue::Category(rng.gen_range(0..labels.len() as u32)),
        ScaleSpec::FreeText { .. } => AnswerValue::Text(nasty_string(rng)),
        ScaleSpec::FreeHand { .. } => AnswerValue::Image(random_image_uri(rng)),
        _ => AnswerValue::Continuous(match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..=1.0),
        }),
    }
}

const KINDS: &[&str] = &[
    "screen-shown",
    "screen-completed",
    "answer-changed",
    "focus-lost",
    "focus-gained",
    "media-play",
    "media-pause",
    "media-stall-start",
    "media-stall-end",
    "media-ended",
];

/// A session state with arbitrary answers and events, not necessarily one
/// the engine would produce; used to exercise serialization.
pub fn random_session(rng: &mut impl Rng) -> SessionState {
    let mut answers = std::collections::BTreeMap::new();
    let mut revisions = std::collections::BTreeMap::new();
    let mut ids = Vec::new();
    for i in 0..rng.gen_range(0..8) {
        let id = if rng.gen_bool(0.2) {
            format!("{}{i}", nasty_string(rng))
        } else {
            format!("q{i}")
        };
        let mut assets = Vec::new();
        let scale = random_scale(rng, &mut assets, "x");
        answers.insert(id.clone(), random_answer(rng, &scale));
        revisions.insert(id.clone(), rng.gen_range(1..5));
        ids.push(id);
    }
    let mut t = 0u64;
    let events = (0..rng.gen_range(0..20))
        .map(|_| {
            t += rng.gen_range(0..3000);
            let kind = if rng.gen_bool(0.1) {
                EventKind::parse(&format!("custom-{}", nasty_string(rng)))
            } else {
                EventKind::parse(KINDS.choose(rng).unwrap())
            };
            let mut ev = BehavioralEvent::new(kind, if rng.gen_bool(0.05) { t / 2 } else { t });
            for _ in 0..rng.gen_range(0..4) {
                ev = ev.with(&nasty_string(rng), nasty_string(rng));
            }
            if let Some(id) = ids.choose(rng) {
                ev = ev.with("item_id", id.clone());
            }
            if rng.gen_bool(0.1) {
                ev.flags.insert(sheetline_core::capture::EventFlag::NonMonotonic);
            }
            ev
        })
        .collect();
    SessionState {
        session_id: format!("{:016x}", rng.gen::<u64>()),
        participant_id: nasty_string(rng),
        spec_id: nasty_string(rng),
        spec_version: nasty_string(rng),
        seed: rng.gen(),
        cursor: rng.gen_range(0..10),
        status: *[Status::Created, Status::InProgress, Status::Completed, Status::Aborted]
            .choose(rng)
            .unwrap(),
        answers,
        revisions,
        events,
        screen_entry_times: Default::default(),
        path: Vec::new(),
        started_wall_ms: rng.gen(),
        started_monotonic_ms: rng.gen_range(0..1 << 40),
    }
}

/// Runs the engine through a spec as a participant would, answering every
/// item, waiting out waits and playing media to the end.
pub fn complete_session(rng: &mut impl Rng, spec: &QuestionnaireSpec, participant_id: &str, seed: u64) -> SessionState {
    use sheetline_core::capture::keys;
    use sheetline_core::engine::{Advance, FixedClock, Session};

    let clock = FixedClock {
        monotonic_ms: 0,
        wall_clock_ms: 1_700_000_000_000 + rng.gen_range(0..1_000_000_000),
    };
    let mut s = Session::create(spec, participant_id, seed, &clock).expect("valid spec");
    let mut t = 0u64;
    loop {
        let screen = s.active_screen().expect("in progress");
        t += rng.gen_range(1..2000);
        match &screen.body {
            ScreenBody::Items { items } => {
                for it in items {
                    let mut v = random_answer(rng, &it.scale);
                    if let (AnswerValue::Text(text), ScaleSpec::FreeText { max_length }) = (&mut v, &it.scale) {
                        *text = text.chars().take(*max_length as usize).collect();
                    }
                    t += rng.gen_range(1..3000);
                    s.submit_answer(&it.item_id, v, t).unwrap();
                }
            }
            ScreenBody::Wait { duration_ms } => t += duration_ms,
            ScreenBody::Media { asset_id, .. } => {
                let ev = |k: &str, t| BehavioralEvent::new(EventKind::parse(k), t).with(keys::ASSET_ID, asset_id.as_str());
                s.record_event(ev("media-play", t)).unwrap();
                if rng.gen_bool(0.5) {
                    t += rng.gen_range(1..500);
                    s.record_event(ev("media-stall-start", t)).unwrap();
                    t += rng.gen_range(1..500);
                    s.record_event(ev("media-stall-end", t)).unwrap();
                }
                t += rng.gen_range(1..5000);
                s.record_event(ev("media-ended", t)).unwrap();
            }
            ScreenBody::Export { .. } | ScreenBody::RemoteCommand { .. } => {}
        }
        if rng.gen_bool(0.1) {
            s.record_event(BehavioralEvent::new(EventKind::FocusLost, t)).unwrap();
            t += rng.gen_range(1..1000);
            s.record_event(BehavioralEvent::new(EventKind::FocusGained, t)).unwrap();
        }
        if s.advance(t).unwrap() == Advance::Completed {
            return s.into_state();
        }
    }
}
