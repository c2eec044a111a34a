//! The questionnaire file format: TOML with lower_snake_case field names.
//!
//! ```toml
//! spec_id = "demo"
//! version = "1"
//! title = "Demo"
//!
//! [[screens]]
//! screen_id = "s1"
//! kind = "items"
//!
//! [[screens.items]]
//! item_id = "q1"
//! question = "Overall quality?"
//! required = true
//! scale = { type = "category_rating", labels = ["bad", "good"] }
//!
//! [[routing]]
//! after_screen = "s1"
//! goto_screen = "s3"
//! priority = 10
//! condition = { item_id = "q1", comparator = "eq", literal = 0 }
//! ```
//!
//! Literals are typed by their TOML type: integers compare against category
//! answers, floats against continuous answers, strings against text.
//! Templates add a `[randomization]` table, which plain specs must not carry.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};
use sheetline_core::construct::{validate_template, Randomization, TemplateSpec};
use sheetline_core::diagnostic::has_errors;
use sheetline_core::spec::{
    validate, AssetRef, Comparator, Condition, ExportTarget, ItemSpec, Literal, RoutingRule, ScaleSpec, ScreenBody,
    ScreenKind, ScreenSpec,
};
use sheetline_core::{Code, Diagnostic, Position, QuestionnaireSpec};
use toml::Spanned;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    spec_id: String,
    version: String,
    title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    randomization: Option<RawRandomization>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    assets: Vec<RawAsset>,
    screens: Vec<RawScreen>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    routing: Vec<RawRule>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScreen {
    screen_id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    asset_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    autoplay: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preload: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    items: Option<Vec<RawItem>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    item_id: String,
    question: String,
    #[serde(default)]
    required: bool,
    scale: RawScale,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScale {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dimension: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_length: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    svg_asset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value_max: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    after_screen: String,
    goto_screen: String,
    priority: i64,
    condition: RawCondition,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCondition {
    item_id: String,
    comparator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    literal: Option<toml::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAsset {
    asset_id: String,
    src: String,
    media_type: String,
    #[serde(default)]
    preload: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRandomization {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    permutation_groups: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    shuffle_items: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    slots: BTreeMap<String, Vec<String>>,
}

// Second, lenient pass that only records where tables start.
#[derive(Deserialize)]
struct SpanDoc {
    #[serde(default)]
    screens: Vec<Spanned<SpanScreen>>,
    #[serde(default)]
    routing: Vec<Spanned<IgnoredAny>>,
    #[serde(default)]
    assets: Vec<Spanned<IgnoredAny>>,
    #[serde(default)]
    randomization: Option<Spanned<IgnoredAny>>,
}

#[derive(Deserialize)]
struct SpanScreen {
    #[serde(default)]
    items: Vec<Spanned<IgnoredAny>>,
}

/// Maps diagnostic paths onto source positions.
struct Locator<'a> {
    text: &'a str,
    spans: BTreeMap<String, Range<usize>>,
}

impl<'a> Locator<'a> {
    fn new(text: &'a str) -> Self {
        let mut spans = BTreeMap::new();
        if let Ok(doc) = toml::from_str::<SpanDoc>(text) {
            for (si, s) in doc.screens.iter().enumerate() {
                spans.insert(format!("screens[{si}]"), s.span());
                for (ii, it) in s.get_ref().items.iter().enumerate() {
                    spans.insert(format!("screens[{si}].items[{ii}]"), it.span());
                }
            }
            for (ri, r) in doc.routing.iter().enumerate() {
                spans.insert(format!("routing[{ri}]"), r.span());
            }
            for (ai, a) in doc.assets.iter().enumerate() {
                spans.insert(format!("assets[{ai}]"), a.span());
            }
            if let Some(r) = &doc.randomization {
                spans.insert("randomization".to_string(), r.span());
            }
        }
        Self { text, spans }
    }

    /// Position of the innermost located table enclosing `path`.
    fn locate(&self, path: &str) -> Option<Position> {
        let mut p = path;
        loop {
            if let Some(span) = self.spans.get(p) {
                return Some(position_of(self.text, span.start));
            }
            let cut = p.rfind(['.', '['])?;
            p = &p[..cut];
        }
    }

    fn attach(&self, mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
        for d in &mut diags {
            if d.position.is_none() {
                d.position = self.locate(&d.path);
            }
        }
        diags
    }
}

/// 1-based line and column (in characters) of byte `offset`.
pub fn position_of(text: &str, offset: usize) -> Position {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    Position {
        line,
        column: before[line_start..].chars().count() + 1,
    }
}

fn syntax(text: &str, err: &toml::de::Error) -> Diagnostic {
    let mut d = Diagnostic::error(Code::SyntaxError, "", err.message().trim().to_string());
    d.position = err.span().map(|s| position_of(text, s.start));
    d
}

fn decode_text(document: &[u8]) -> Result<&str, Vec<Diagnostic>> {
    std::str::from_utf8(document).map_err(|e| {
        let valid = std::str::from_utf8(&document[..e.valid_up_to()]).unwrap_or_default();
        let mut d = Diagnostic::error(Code::SyntaxError, "", "document is not valid UTF-8");
        d.position = Some(position_of(valid, valid.len()));
        vec![d]
    })
}

fn mismatch(path: String, message: String) -> Diagnostic {
    Diagnostic::error(Code::PayloadMismatch, path, message)
}

fn lower_screen(si: usize, raw: RawScreen, out: &mut Vec<Diagnostic>) -> Option<ScreenSpec> {
    let path = format!("screens[{si}]");
    let Some(kind) = ScreenKind::parse(&raw.kind) else {
        out.push(Diagnostic::error(
            Code::UnknownScreenKind,
            format!("{path}.kind"),
            format!("unknown screen kind `{}`", raw.kind),
        ));
        return None;
    };
    let present = [
        ("items", raw.items.is_some()),
        ("duration_ms", raw.duration_ms.is_some()),
        ("asset_id", raw.asset_id.is_some()),
        ("autoplay", raw.autoplay.is_some()),
        ("preload", raw.preload.is_some()),
        ("target", raw.target.is_some()),
        ("command", raw.command.is_some()),
    ];
    let allowed: &[&str] = match kind {
        ScreenKind::Items => &["items"],
        ScreenKind::Wait => &["duration_ms"],
        ScreenKind::Media => &["asset_id", "autoplay", "preload"],
        ScreenKind::Export => &["target"],
        ScreenKind::RemoteCommand => &["command"],
    };
    let before = out.len();
    for (field, is_set) in present {
        if is_set && !allowed.contains(&field) {
            out.push(mismatch(
                format!("{path}.{field}"),
                format!("`{field}` does not belong to a {} screen", kind.as_str()),
            ));
        }
    }
    let missing = |field: &str| mismatch(format!("{path}.{field}"), format!("{} screen needs `{field}`", kind.as_str()));
    let body = match kind {
        ScreenKind::Items => match raw.items {
            Some(items) => {
                let items: Vec<_> = items
                    .into_iter()
                    .enumerate()
                    .filter_map(|(ii, it)| lower_item(&format!("{path}.items[{ii}]"), it, out))
                    .collect();
                Some(ScreenBody::Items { items })
            }
            None => {
                out.push(missing("items"));
                None
            }
        },
        ScreenKind::Wait => match raw.duration_ms {
            Some(duration_ms) => Some(ScreenBody::Wait { duration_ms }),
            None => {
                out.push(missing("duration_ms"));
                None
            }
        },
        ScreenKind::Media => match raw.asset_id {
            Some(asset_id) => Some(ScreenBody::Media {
                asset_id,
                autoplay: raw.autoplay.unwrap_or(false),
                preload: raw.preload.unwrap_or(false),
            }),
            None => {
                out.push(missing("asset_id"));
                None
            }
        },
        ScreenKind::Export => match raw.target.as_deref() {
            Some(t) => match ExportTarget::parse(t) {
                Some(target) => Some(ScreenBody::Export { target }),
                None => {
                    out.push(Diagnostic::error(
                        Code::UnknownExportTarget,
                        format!("{path}.target"),
                        format!("unknown export target `{t}`"),
                    ));
                    None
                }
            },
            None => {
                out.push(missing("target"));
                None
            }
        },
        ScreenKind::RemoteCommand => match raw.command {
            Some(command) => Some(ScreenBody::RemoteCommand { command }),
            None => {
                out.push(missing("command"));
                None
            }
        },
    };
    if out.len() > before {
        return None;
    }
    body.map(|body| ScreenSpec {
        screen_id: raw.screen_id,
        body,
    })
}

fn lower_item(path: &str, raw: RawItem, out: &mut Vec<Diagnostic>) -> Option<ItemSpec> {
    let scale = lower_scale(&format!("{path}.scale"), raw.scale, out)?;
    Some(ItemSpec {
        item_id: raw.item_id,
        question: raw.question,
        scale,
        required: raw.required,
    })
}

fn lower_scale(path: &str, raw: RawScale, out: &mut Vec<Diagnostic>) -> Option<ScaleSpec> {
    let present = [
        ("labels", raw.labels.is_some()),
        ("min_label", raw.min_label.is_some()),
        ("max_label", raw.max_label.is_some()),
        ("dimension", raw.dimension.is_some()),
        ("max_length", raw.max_length.is_some()),
        ("width", raw.width.is_some()),
        ("height", raw.height.is_some()),
        ("svg_asset", raw.svg_asset.is_some()),
        ("value_min", raw.value_min.is_some()),
        ("value_max", raw.value_max.is_some()),
    ];
    let allowed: &[&str] = match raw.kind.as_str() {
        "category_rating" => &["labels"],
        "visual_analogue" => &["min_label", "max_label"],
        "nasa_tlx_subscale" => &["dimension"],
        "continuous_quality" => &[],
        "free_text" => &["max_length"],
        "free_hand" => &["width", "height"],
        "custom_svg" => &["svg_asset", "value_min", "value_max"],
        other => {
            out.push(Diagnostic::error(
                Code::UnknownScaleType,
                format!("{path}.type"),
                format!("unknown scale type `{other}`"),
            ));
            return None;
        }
    };
    let mut ok = true;
    for (field, is_set) in present {
        if is_set != allowed.contains(&field) {
            ok = false;
            let msg = if is_set {
                format!("`{field}` does not belong to a {} scale", raw.kind)
            } else {
                format!("{} scale needs `{field}`", raw.kind)
            };
            out.push(mismatch(format!("{path}.{field}"), msg));
        }
    }
    if !ok {
        return None;
    }
    Some(match raw.kind.as_str() {
        "category_rating" => ScaleSpec::CategoryRating { labels: raw.labels? },
        "visual_analogue" => ScaleSpec::VisualAnalogue {
            min_label: raw.min_label?,
            max_label: raw.max_label?,
        },
        "nasa_tlx_subscale" => ScaleSpec::NasaTlxSubscale { dimension: raw.dimension? },
        "continuous_quality" => ScaleSpec::ContinuousQuality,
        "free_text" => ScaleSpec::FreeText { max_length: raw.max_length? },
        "free_hand" => ScaleSpec::FreeHand {
            width: raw.width?,
            height: raw.height?,
        },
        _ => ScaleSpec::CustomSvg {
            svg_asset: raw.svg_asset?,
            value_min: raw.value_min?,
            value_max: raw.value_max?,
        },
    })
}

fn lower_rule(ri: usize, raw: RawRule, out: &mut Vec<Diagnostic>) -> Option<RoutingRule> {
    let path = format!("routing[{ri}].condition");
    let Some(comparator) = Comparator::parse(&raw.condition.comparator) else {
        out.push(Diagnostic::error(
            Code::UnknownComparator,
            format!("{path}.comparator"),
            format!("unknown comparator `{}`", raw.condition.comparator),
        ));
        return None;
    };
    let literal = match raw.condition.literal {
        None => None,
        Some(toml::Value::Integer(i)) => match u32::try_from(i) {
            Ok(c) => Some(Literal::Category(c)),
            Err(_) => {
                out.push(Diagnostic::error(
                    Code::LiteralTypeMismatch,
                    format!("{path}.literal"),
                    format!("category literal {i} is not a label index"),
                ));
                return None;
            }
        },
        Some(toml::Value::Float(f)) => Some(Literal::Continuous(f)),
        Some(toml::Value::String(s)) => Some(Literal::Text(s)),
        Some(other) => {
            out.push(Diagnostic::error(
                Code::LiteralTypeMismatch,
                format!("{path}.literal"),
                format!("literal must be an integer, float or string, not {}", other.type_str()),
            ));
            return None;
        }
    };
    Some(RoutingRule {
        after_screen: raw.after_screen,
        condition: Condition {
            item_id: raw.condition.item_id,
            comparator,
            literal,
        },
        goto_screen: raw.goto_screen,
        priority: raw.priority,
    })
}

fn lower(raw: RawSpec, out: &mut Vec<Diagnostic>) -> Option<QuestionnaireSpec> {
    let before = out.len();
    let screens: Vec<_> = raw
        .screens
        .into_iter()
        .enumerate()
        .filter_map(|(si, s)| lower_screen(si, s, out))
        .collect();
    let routing: Vec<_> = raw
        .routing
        .into_iter()
        .enumerate()
        .filter_map(|(ri, r)| lower_rule(ri, r, out))
        .collect();
    if out.len() > before {
        return None;
    }
    Some(QuestionnaireSpec {
        spec_id: raw.spec_id,
        version: raw.version,
        title: raw.title,
        screens,
        routing,
        assets: raw
            .assets
            .into_iter()
            .map(|a| AssetRef {
                asset_id: a.asset_id,
                src: a.src,
                media_type: a.media_type,
                preload: a.preload,
            })
            .collect(),
    })
}

/// Parses and validates a spec document. Returns the spec when there are no
/// errors, together with every diagnostic (warnings included), each carrying
/// the source position of the table it refers to.
pub fn check_spec(document: &[u8]) -> (Option<QuestionnaireSpec>, Vec<Diagnostic>) {
    let text = match decode_text(document) {
        Ok(t) => t,
        Err(d) => return (None, d),
    };
    let raw: RawSpec = match toml::from_str(text) {
        Ok(r) => r,
        Err(e) => return (None, vec![syntax(text, &e)]),
    };
    let locator = Locator::new(text);
    let mut diags = Vec::new();
    if raw.randomization.is_some() {
        diags.push(Diagnostic::error(
            Code::TemplateDirectivesInSpec,
            "randomization",
            "randomization directives belong in a template; instantiate it first",
        ));
    }
    let spec = lower(raw, &mut diags);
    if let Some(spec) = &spec {
        diags.extend(validate(spec));
    }
    let diags = locator.attach(diags);
    if has_errors(&diags) {
        (None, diags)
    } else {
        (spec, diags)
    }
}

/// Parses a spec document; on failure returns all diagnostics.
pub fn parse_spec(document: &[u8]) -> Result<QuestionnaireSpec, Vec<Diagnostic>> {
    match check_spec(document) {
        (Some(spec), _) => Ok(spec),
        (None, diags) => Err(diags),
    }
}

/// Template counterpart of [`check_spec`]: the base is checked through the
/// template validator, so placeholders need not form a valid spec on their own.
pub fn check_template(document: &[u8]) -> (Option<TemplateSpec>, Vec<Diagnostic>) {
    let text = match decode_text(document) {
        Ok(t) => t,
        Err(d) => return (None, d),
    };
    let mut raw: RawSpec = match toml::from_str(text) {
        Ok(r) => r,
        Err(e) => return (None, vec![syntax(text, &e)]),
    };
    let locator = Locator::new(text);
    let randomization = raw
        .randomization
        .take()
        .map(|r| Randomization {
            permutation_groups: r.permutation_groups,
            shuffle_items: r.shuffle_items,
            slots: r.slots,
        })
        .unwrap_or_default();
    let mut diags = Vec::new();
    let template = lower(raw, &mut diags).map(|base| TemplateSpec { base, randomization });
    if let Some(t) = &template {
        diags.extend(validate_template(t));
    }
    let diags = locator.attach(diags);
    if has_errors(&diags) {
        (None, diags)
    } else {
        (template, diags)
    }
}

pub fn parse_template(document: &[u8]) -> Result<TemplateSpec, Vec<Diagnostic>> {
    match check_template(document) {
        (Some(t), _) => Ok(t),
        (None, diags) => Err(diags),
    }
}

fn raise(spec: &QuestionnaireSpec, randomization: Option<&Randomization>) -> RawSpec {
    RawSpec {
        spec_id: spec.spec_id.clone(),
        version: spec.version.clone(),
        title: spec.title.clone(),
        randomization: randomization.filter(|r| !r.is_empty()).map(|r| RawRandomization {
            permutation_groups: r.permutation_groups.clone(),
            shuffle_items: r.shuffle_items.clone(),
            slots: r.slots.clone(),
        }),
        assets: spec
            .assets
            .iter()
            .map(|a| RawAsset {
                asset_id: a.asset_id.clone(),
                src: a.src.clone(),
                media_type: a.media_type.clone(),
                preload: a.preload,
            })
            .collect(),
        screens: spec.screens.iter().map(raise_screen).collect(),
        routing: spec
            .routing
            .iter()
            .map(|r| RawRule {
                after_screen: r.after_screen.clone(),
                goto_screen: r.goto_screen.clone(),
                priority: r.priority,
                condition: RawCondition {
                    item_id: r.condition.item_id.clone(),
                    comparator: r.condition.comparator.as_str().to_string(),
                    literal: r.condition.literal.as_ref().map(|l| match l {
                        Literal::Category(c) => toml::Value::Integer(i64::from(*c)),
                        Literal::Continuous(f) => toml::Value::Float(*f),
                        Literal::Text(s) => toml::Value::String(s.clone()),
                    }),
                },
            })
            .collect(),
    }
}

fn raise_screen(s: &ScreenSpec) -> RawScreen {
    let mut raw = RawScreen {
        screen_id: s.screen_id.clone(),
        kind: s.body.kind().as_str().to_string(),
        ..Default::default()
    };
    match &s.body {
        ScreenBody::Items { items } => {
            raw.items = Some(
                items
                    .iter()
                    .map(|it| RawItem {
                        item_id: it.item_id.clone(),
                        question: it.question.clone(),
                        required: it.required,
                        scale: raise_scale(&it.scale),
                    })
                    .collect(),
            )
        }
        ScreenBody::Wait { duration_ms } => raw.duration_ms = Some(*duration_ms),
        ScreenBody::Media {
            asset_id,
            autoplay,
            preload,
        } => {
            raw.asset_id = Some(asset_id.clone());
            raw.autoplay = Some(*autoplay);
            raw.preload = Some(*preload);
        }
        ScreenBody::Export { target } => raw.target = Some(target.as_str().to_string()),
        ScreenBody::RemoteCommand { command } => raw.command = Some(command.clone()),
    }
    raw
}

fn raise_scale(s: &ScaleSpec) -> RawScale {
    let mut raw = RawScale {
        kind: s.type_name().to_string(),
        ..Default::default()
    };
    match s {
        ScaleSpec::CategoryRating { labels } => raw.labels = Some(labels.clone()),
        ScaleSpec::VisualAnalogue { min_label, max_label } => {
            raw.min_label = Some(min_label.clone());
            raw.max_label = Some(max_label.clone());
        }
        ScaleSpec::NasaTlxSubscale { dimension } => raw.dimension = Some(dimension.clone()),
        ScaleSpec::ContinuousQuality => {}
        ScaleSpec::FreeText { max_length } => raw.max_length = Some(*max_length),
        ScaleSpec::FreeHand { width, height } => {
            raw.width = Some(*width);
            raw.height = Some(*height);
        }
        ScaleSpec::CustomSvg {
            svg_asset,
            value_min,
            value_max,
        } => {
            raw.svg_asset = Some(svg_asset.clone());
            raw.value_min = Some(*value_min);
            raw.value_max = Some(*value_max);
        }
    }
    raw
}

/// Canonical document for `spec`.
pub fn serialize_spec(spec: &QuestionnaireSpec) -> String {
    toml::to_string(&raise(spec, None)).expect("spec documents always serialize")
}

pub fn serialize_template(t: &TemplateSpec) -> String {
    toml::to_string(&raise(&t.base, Some(&t.randomization))).expect("template documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
spec_id = "m"
version = "1"
title = "Minimal"

[[screens]]
screen_id = "s1"
kind = "items"

[[screens.items]]
item_id = "q1"
question = "How was it?"
scale = { type = "category_rating", labels = ["bad", "good"] }

[[screens]]
screen_id = "done"
kind = "export"
target = "upload"
"#;

    fn codes(diags: &[Diagnostic]) -> Vec<&'static str> {
        diags.iter().map(|d| d.code.as_str()).collect()
    }

    #[test]
    fn minimal_document() {
        let spec = parse_spec(MINIMAL.as_bytes()).unwrap();
        assert_eq!(spec.screens.len(), 2);
        assert_eq!(spec.items().count(), 1);
        assert_eq!(parse_spec(serialize_spec(&spec).as_bytes()).unwrap(), spec);
    }

    #[test]
    fn dangling_route_is_located() {
        let doc = format!(
            "{MINIMAL}\n[[routing]]\nafter_screen = \"s1\"\ngoto_screen = \"s9\"\npriority = 1\ncondition = {{ item_id = \"q1\", comparator = \"answered\" }}\n"
        );
        let diags = parse_spec(doc.as_bytes()).unwrap_err();
        assert_eq!(codes(&diags), ["DANGLING_SCREEN_REF"]);
        let line = doc.lines().position(|l| l == "[[routing]]").unwrap() + 1;
        assert_eq!(diags[0].position, Some(Position { line, column: 1 }));
    }

    #[test]
    fn syntax_error_has_position() {
        let diags = parse_spec(b"spec_id = \"x\"\nversion = = 1\n").unwrap_err();
        assert_eq!(codes(&diags), ["SYNTAX_ERROR"]);
        assert_eq!(diags[0].position.unwrap().line, 2);
    }

    #[test]
    fn unknown_kind_and_scale() {
        let doc = MINIMAL.replace("kind = \"export\"", "kind = \"video\"").replace("category_rating", "stars");
        let diags = parse_spec(doc.as_bytes()).unwrap_err();
        let mut c = codes(&diags);
        c.sort();
        assert_eq!(c, ["UNKNOWN_SCALE_TYPE", "UNKNOWN_SCREEN_KIND"]);
        assert!(diags.iter().all(|d| d.position.is_some()));
    }

    #[test]
    fn payload_must_match_kind() {
        let doc = MINIMAL.replace("target = \"upload\"", "target = \"upload\"\nduration_ms = 5");
        assert_eq!(codes(&parse_spec(doc.as_bytes()).unwrap_err()), ["PAYLOAD_MISMATCH"]);
        let doc = MINIMAL.replace("target = \"upload\"\n", "");
        assert_eq!(codes(&parse_spec(doc.as_bytes()).unwrap_err()), ["PAYLOAD_MISMATCH"]);
    }

    #[test]
    fn warnings_survive_success() {
        let doc = MINIMAL.split("[[screens]]\nscreen_id = \"done\"").next().unwrap();
        let (spec, diags) = check_spec(doc.as_bytes());
        assert!(spec.is_some());
        assert_eq!(codes(&diags), ["NO_EXPORT_SCREEN"]);
    }

    #[test]
    fn randomization_rejected_in_plain_spec() {
        let doc = format!("{MINIMAL}\n[randomization]\nshuffle_items = [\"s1\"]\n");
        assert_eq!(codes(&parse_spec(doc.as_bytes()).unwrap_err()), ["TEMPLATE_DIRECTIVES_IN_SPEC"]);
        let t = parse_template(doc.as_bytes()).unwrap();
        assert_eq!(t.randomization.shuffle_items, ["s1"]);
        assert_eq!(parse_template(serialize_template(&t).as_bytes()).unwrap(), t);
    }

    #[test]
    fn literal_types() {
        let doc = format!(
            "{MINIMAL}\n[[routing]]\nafter_screen = \"s1\"\ngoto_screen = \"done\"\npriority = 1\ncondition = {{ item_id = \"q1\", comparator = \"eq\", literal = -1 }}\n"
        );
        assert_eq!(codes(&parse_spec(doc.as_bytes()).unwrap_err()), ["LITERAL_TYPE_MISMATCH"]);
        let doc = doc.replace("-1", "1.0");
        assert_eq!(codes(&parse_spec(doc.as_bytes()).unwrap_err()), ["LITERAL_TYPE_MISMATCH"]);
        let doc = doc.replace("1.0", "1");
        assert!(parse_spec(doc.as_bytes()).is_ok());
    }

    #[test]
    fn invalid_utf8() {
        let diags = parse_spec(b"title = \"a\"\n\xff").unwrap_err();
        assert_eq!(diags[0].position, Some(Position { line: 2, column: 1 }));
    }

    #[test]
    fn positions_count_characters() {
        assert_eq!(position_of("äb\ncd", 3), Position { line: 1, column: 3 });
        assert_eq!(position_of("äb\ncd", 5), Position { line: 2, column: 2 });
    }
}
