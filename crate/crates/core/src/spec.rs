//! Questionnaire model: screens, items, scales, routing rules and assets.
//!
//! A [`QuestionnaireSpec`] is the single document that drives the session
//! engine, the printer and the browser client. [`validate`] checks every
//! structural invariant and reports problems as [`Diagnostic`]s addressed by
//! document path.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::diagnostic::{Code, Diagnostic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireSpec {
    pub spec_id: String,
    pub version: String,
    pub title: String,
    pub screens: Vec<ScreenSpec>,
    #[serde(default)]
    pub routing: Vec<RoutingRule>,
    #[serde(default)]
    pub assets: Vec<AssetRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub screen_id: String,
    pub body: ScreenBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenKind {
    Items,
    Wait,
    Media,
    Export,
    RemoteCommand,
}

impl ScreenKind {
    pub const ALL: [ScreenKind; 5] = [
        ScreenKind::Items,
        ScreenKind::Wait,
        ScreenKind::Media,
        ScreenKind::Export,
        ScreenKind::RemoteCommand,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScreenKind::Items => "items",
            ScreenKind::Wait => "wait",
            ScreenKind::Media => "media",
            ScreenKind::Export => "export",
            ScreenKind::RemoteCommand => "remote_command",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Per-kind screen payload. Exactly one variant exists per screen, so the
/// "payload matches kind" invariant holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScreenBody {
    Items { items: Vec<ItemSpec> },
    Wait { duration_ms: u64 },
    Media { asset_id: String, autoplay: bool, preload: bool },
    Export { target: ExportTarget },
    RemoteCommand { command: String },
}

impl ScreenBody {
    pub fn kind(&self) -> ScreenKind {
        match self {
            ScreenBody::Items { .. } => ScreenKind::Items,
            ScreenBody::Wait { .. } => ScreenKind::Wait,
            ScreenBody::Media { .. } => ScreenKind::Media,
            ScreenBody::Export { .. } => ScreenKind::Export,
            ScreenBody::RemoteCommand { .. } => ScreenKind::RemoteCommand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportTarget {
    Upload,
    Download,
    UploadThenDownloadFallback,
}

impl ExportTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            ExportTarget::Upload => "upload",
            ExportTarget::Download => "download",
            ExportTarget::UploadThenDownloadFallback => "upload-then-download-fallback",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ExportTarget::Upload,
            ExportTarget::Download,
            ExportTarget::UploadThenDownloadFallback,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSpec {
    pub item_id: String,
    pub question: String,
    pub scale: ScaleSpec,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScaleSpec {
    CategoryRating { labels: Vec<String> },
    VisualAnalogue { min_label: String, max_label: String },
    NasaTlxSubscale { dimension: String },
    ContinuousQuality,
    FreeText { max_length: u32 },
    FreeHand { width: u32, height: u32 },
    CustomSvg { svg_asset: String, value_min: f64, value_max: f64 },
}

/// The shape of answer a scale produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnswerKind {
    Category,
    Continuous,
    Text,
    Image,
}

impl ScaleSpec {
    pub fn type_name(&self) -> &'static str {
        match self {
            ScaleSpec::CategoryRating { .. } => "category_rating",
            ScaleSpec::VisualAnalogue { .. } => "visual_analogue",
            ScaleSpec::NasaTlxSubscale { .. } => "nasa_tlx_subscale",
            ScaleSpec::ContinuousQuality => "continuous_quality",
            ScaleSpec::FreeText { .. } => "free_text",
            ScaleSpec::FreeHand { .. } => "free_hand",
            ScaleSpec::CustomSvg { .. } => "custom_svg",
        }
    }

    pub fn answer_kind(&self) -> AnswerKind {
        match self {
            ScaleSpec::CategoryRating { .. } => AnswerKind::Category,
            ScaleSpec::VisualAnalogue { .. }
            | ScaleSpec::NasaTlxSubscale { .. }
            | ScaleSpec::ContinuousQuality
            | ScaleSpec::CustomSvg { .. } => AnswerKind::Continuous,
            ScaleSpec::FreeText { .. } => AnswerKind::Text,
            ScaleSpec::FreeHand { .. } => AnswerKind::Image,
        }
    }

    /// Graphical scales are drawn from a fixed SVG rather than form widgets.
    pub fn is_graphical(&self) -> bool {
        matches!(
            self,
            ScaleSpec::VisualAnalogue { .. }
                | ScaleSpec::NasaTlxSubscale { .. }
                | ScaleSpec::ContinuousQuality
                | ScaleSpec::CustomSvg { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingRule {
    pub after_screen: String,
    pub condition: Condition,
    pub goto_screen: String,
    pub priority: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub item_id: String,
    pub comparator: Comparator,
    #[serde(default)]
    pub literal: Option<Literal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Answered,
    Unanswered,
}

impl Comparator {
    pub const ALL: [Comparator; 8] = [
        Comparator::Eq,
        Comparator::Ne,
        Comparator::Lt,
        Comparator::Le,
        Comparator::Gt,
        Comparator::Ge,
        Comparator::Answered,
        Comparator::Unanswered,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Eq => "eq",
            Comparator::Ne => "ne",
            Comparator::Lt => "lt",
            Comparator::Le => "le",
            Comparator::Gt => "gt",
            Comparator::Ge => "ge",
            Comparator::Answered => "answered",
            Comparator::Unanswered => "unanswered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn takes_literal(self) -> bool {
        !matches!(self, Comparator::Answered | Comparator::Unanswered)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Literal {
    Category(u32),
    Continuous(f64),
    Text(String),
}

impl Literal {
    pub fn kind(&self) -> AnswerKind {
        match self {
            Literal::Category(_) => AnswerKind::Category,
            Literal::Continuous(_) => AnswerKind::Continuous,
            Literal::Text(_) => AnswerKind::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetRef {
    pub asset_id: String,
    /// Location relative to the asset root, or an absolute URL.
    pub src: String,
    pub media_type: String,
    pub preload: bool,
}

impl QuestionnaireSpec {
    pub fn screen_index(&self, screen_id: &str) -> Option<usize> {
        self.screens.iter().position(|s| s.screen_id == screen_id)
    }

    pub fn asset(&self, asset_id: &str) -> Option<&AssetRef> {
        self.assets.iter().find(|a| a.asset_id == asset_id)
    }

    /// Finds an item and the index of the screen that holds it.
    pub fn item(&self, item_id: &str) -> Option<(usize, &ItemSpec)> {
        self.screens.iter().enumerate().find_map(|(i, s)| match &s.body {
            ScreenBody::Items { items } => {
                items.iter().find(|it| it.item_id == item_id).map(|it| (i, it))
            }
            _ => None,
        })
    }

    pub fn items(&self) -> impl Iterator<Item = (usize, &ItemSpec)> {
        self.screens
            .iter()
            .enumerate()
            .flat_map(|(i, s)| match &s.body {
                ScreenBody::Items { items } => items.as_slice(),
                _ => &[],
            }
            .iter()
            .map(move |it| (i, it)))
    }

    /// Rules attached to a screen, highest priority first.
    pub fn rules_after(&self, screen_id: &str) -> Vec<&RoutingRule> {
        let mut rules: Vec<&RoutingRule> = self
            .routing
            .iter()
            .filter(|r| r.after_screen == screen_id)
            .collect();
        rules.sort_by_key(|r| core::cmp::Reverse(r.priority));
        rules
    }
}

pub fn screen_path(i: usize) -> String {
    format!("screens[{i}]")
}

pub fn item_path(screen: usize, item: usize) -> String {
    format!("screens[{screen}].items[{item}]")
}

pub fn rule_path(i: usize) -> String {
    format!("routing[{i}]")
}

pub fn asset_path(i: usize) -> String {
    format!("assets[{i}]")
}

/// Checks every model invariant. The result is empty iff the spec is fully
/// valid; a missing export screen is reported as a warning only.
pub fn validate(spec: &QuestionnaireSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if spec.spec_id.is_empty() {
        out.push(Diagnostic::error(Code::EmptyId, "spec_id", "spec_id is empty"));
    }
    if spec.screens.is_empty() {
        out.push(Diagnostic::error(
            Code::NoScreens,
            "screens",
            "a questionnaire needs at least one screen",
        ));
    }

    let mut asset_ids = BTreeSet::new();
    for (i, asset) in spec.assets.iter().enumerate() {
        if asset.asset_id.is_empty() {
            out.push(Diagnostic::error(
                Code::EmptyId,
                format!("{}.asset_id", asset_path(i)),
                "asset_id is empty",
            ));
        } else if !asset_ids.insert(asset.asset_id.as_str()) {
            out.push(Diagnostic::error(
                Code::DuplicateAssetId,
                format!("{}.asset_id", asset_path(i)),
                format!("asset `{}` declared twice", asset.asset_id),
            ));
        }
    }

    let mut screen_ids = BTreeSet::new();
    let mut item_ids: BTreeMap<&str, usize> = BTreeMap::new();
    for (si, screen) in spec.screens.iter().enumerate() {
        let sp = screen_path(si);
        if screen.screen_id.is_empty() {
            out.push(Diagnostic::error(
                Code::EmptyId,
                format!("{sp}.screen_id"),
                "screen_id is empty",
            ));
        } else if !screen_ids.insert(screen.screen_id.as_str()) {
            out.push(Diagnostic::error(
                Code::DuplicateScreenId,
                format!("{sp}.screen_id"),
                format!("screen `{}` declared twice", screen.screen_id),
            ));
        }
        match &screen.body {
            ScreenBody::Items { items } => {
                if items.is_empty() {
                    out.push(Diagnostic::error(
                        Code::EmptyItems,
                        format!("{sp}.items"),
                        "items screen has no items",
                    ));
                }
                for (ii, item) in items.iter().enumerate() {
                    let ip = item_path(si, ii);
                    if item.item_id.is_empty() {
                        out.push(Diagnostic::error(
                            Code::EmptyId,
                            format!("{ip}.item_id"),
                            "item_id is empty",
                        ));
                    } else if item_ids.insert(&item.item_id, si).is_some() {
                        out.push(Diagnostic::error(
                            Code::DuplicateItemId,
                            format!("{ip}.item_id"),
                            format!("item `{}` declared twice", item.item_id),
                        ));
                    }
                    if item.question.trim().is_empty() {
                        out.push(Diagnostic::error(
                            Code::EmptyQuestion,
                            format!("{ip}.question"),
                            "question text is empty",
                        ));
                    }
                    validate_scale(&item.scale, &format!("{ip}.scale"), &asset_ids, &mut out);
                }
            }
            ScreenBody::Media { asset_id, .. } => {
                if !asset_ids.contains(asset_id.as_str()) {
                    out.push(Diagnostic::error(
                        Code::DanglingAssetRef,
                        format!("{sp}.asset_id"),
                        format!("media screen references undeclared asset `{asset_id}`"),
                    ));
                }
            }
            ScreenBody::Wait { .. } | ScreenBody::Export { .. } | ScreenBody::RemoteCommand { .. } => {}
        }
    }

    let mut priorities: BTreeSet<(&str, i64)> = BTreeSet::new();
    for (ri, rule) in spec.routing.iter().enumerate() {
        let rp = rule_path(ri);
        let after = spec.screen_index(&rule.after_screen);
        let goto = spec.screen_index(&rule.goto_screen);
        if after.is_none() {
            out.push(Diagnostic::error(
                Code::DanglingScreenRef,
                format!("{rp}.after_screen"),
                format!("unknown screen `{}`", rule.after_screen),
            ));
        }
        if goto.is_none() {
            out.push(Diagnostic::error(
                Code::DanglingScreenRef,
                format!("{rp}.goto_screen"),
                format!("unknown screen `{}`", rule.goto_screen),
            ));
        }
        if let (Some(a), Some(g)) = (after, goto) {
            if g <= a {
                out.push(Diagnostic::error(
                    Code::BackwardRoute,
                    format!("{rp}.goto_screen"),
                    format!(
                        "rule jumps from `{}` back to `{}`; navigation is forward-only",
                        rule.after_screen, rule.goto_screen
                    ),
                ));
            }
        }
        if !priorities.insert((rule.after_screen.as_str(), rule.priority)) {
            out.push(Diagnostic::error(
                Code::DuplicatePriority,
                format!("{rp}.priority"),
                format!(
                    "another rule after `{}` already has priority {}",
                    rule.after_screen, rule.priority
                ),
            ));
        }

        let cond = &rule.condition;
        let cp = format!("{rp}.condition");
        let item = spec.item(&cond.item_id).map(|(_, it)| it);
        if item.is_none() {
            out.push(Diagnostic::error(
                Code::DanglingItemRef,
                format!("{cp}.item_id"),
                format!("unknown item `{}`", cond.item_id),
            ));
        }
        match (&cond.literal, cond.comparator.takes_literal()) {
            (None, true) => out.push(Diagnostic::error(
                Code::MissingLiteral,
                format!("{cp}.literal"),
                format!("comparator `{}` needs a literal", cond.comparator.as_str()),
            )),
            (Some(_), false) => out.push(Diagnostic::error(
                Code::LiteralTypeMismatch,
                format!("{cp}.literal"),
                format!("comparator `{}` takes no literal", cond.comparator.as_str()),
            )),
            (Some(lit), true) => {
                if let Some(item) = item {
                    if !literal_fits(lit, &item.scale) {
                        out.push(Diagnostic::error(
                            Code::LiteralTypeMismatch,
                            format!("{cp}.literal"),
                            format!(
                                "literal does not match the answers of a `{}` scale",
                                item.scale.type_name()
                            ),
                        ));
                    }
                }
            }
            (None, false) => {}
        }
    }

    if !spec
        .screens
        .iter()
        .any(|s| s.body.kind() == ScreenKind::Export)
    {
        out.push(Diagnostic::warning(
            Code::NoExportScreen,
            "screens",
            "no export screen; collected data will not leave the device",
        ));
    }

    out
}

fn literal_fits(lit: &Literal, scale: &ScaleSpec) -> bool {
    match (lit, scale) {
        (Literal::Category(i), ScaleSpec::CategoryRating { labels }) => (*i as usize) < labels.len(),
        (Literal::Continuous(v), s) if s.answer_kind() == AnswerKind::Continuous => {
            v.is_finite() && (0.0..=1.0).contains(v)
        }
        (Literal::Text(_), ScaleSpec::FreeText { .. }) => true,
        _ => false,
    }
}

fn validate_scale(scale: &ScaleSpec, path: &str, assets: &BTreeSet<&str>, out: &mut Vec<Diagnostic>) {
    match scale {
        ScaleSpec::CategoryRating { labels } => {
            if labels.len() < 2 {
                out.push(Diagnostic::error(
                    Code::TooFewLabels,
                    format!("{path}.labels"),
                    "a category rating needs at least two labels",
                ));
            }
            let mut seen = BTreeSet::new();
            for (i, l) in labels.iter().enumerate() {
                if !seen.insert(l.as_str()) {
                    out.push(Diagnostic::error(
                        Code::DuplicateLabel,
                        format!("{path}.labels[{i}]"),
                        format!("label `{l}` repeated"),
                    ));
                }
            }
        }
        ScaleSpec::FreeHand { width, height } => {
            if *width == 0 || *height == 0 {
                out.push(Diagnostic::error(
                    Code::InvalidCanvas,
                    path,
                    "free-hand canvas dimensions must be positive",
                ));
            }
        }
        ScaleSpec::CustomSvg {
            svg_asset,
            value_min,
            value_max,
        } => {
            if !(value_min.is_finite() && value_max.is_finite() && value_min < value_max) {
                out.push(Diagnostic::error(
                    Code::InvalidSvgRange,
                    path,
                    "custom svg scale needs value_min < value_max",
                ));
            }
            if !assets.contains(svg_asset.as_str()) {
                out.push(Diagnostic::error(
                    Code::DanglingAssetRef,
                    format!("{path}.svg_asset"),
                    format!("undeclared svg asset `{svg_asset}`"),
                ));
            }
        }
        ScaleSpec::VisualAnalogue { .. }
        | ScaleSpec::NasaTlxSubscale { .. }
        | ScaleSpec::ContinuousQuality
        | ScaleSpec::FreeText { .. } => {}
    }
}
