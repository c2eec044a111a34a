//! Per-participant questionnaire instantiation from a template.
//!
//! Randomness comes from ChaCha20 keyed with
//! `SHA-256("sheetline/instantiate/v1" || seed as u64 LE || participant_id)`.
//! Bounded integers use rejection sampling on `next_u64`, and shuffles are
//! Fisher-Yates from the last index down. Draws happen in this order:
//! permutation groups (declaration order), item shuffles (declaration order),
//! then slot values (slot names in byte order). Any other implementation
//! following the same recipe reproduces the same instances.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::diagnostic::{has_errors, Code, Diagnostic};
use crate::spec::{validate, QuestionnaireSpec, ScaleSpec, ScreenBody, ScreenKind};

const INSTANTIATE_DOMAIN: &[u8] = b"sheetline/instantiate/v1";
const PARTICIPANT_SEED_DOMAIN: &[u8] = b"sheetline/participant-seed/v1";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Randomization {
    /// Sets of screen ids whose members swap positions among themselves.
    #[serde(default)]
    pub permutation_groups: Vec<Vec<String>>,
    /// Items screens whose items are shuffled.
    #[serde(default)]
    pub shuffle_items: Vec<String>,
    /// `{{name}}` placeholder -> candidate values; one is drawn per instance.
    #[serde(default)]
    pub slots: BTreeMap<String, Vec<String>>,
}

impl Randomization {
    pub fn is_empty(&self) -> bool {
        self.permutation_groups.is_empty() && self.shuffle_items.is_empty() && self.slots.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub base: QuestionnaireSpec,
    pub randomization: Randomization,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid template ({} problems)", .0.len())]
pub struct InvalidTemplate(pub Vec<Diagnostic>);

impl InvalidTemplate {
    pub fn code(&self) -> &'static str {
        "INVALID_TEMPLATE"
    }
}

/// Seed for one participant: the first 8 bytes (LE) of
/// `SHA-256("sheetline/participant-seed/v1" || master_seed LE || participant_id)`.
pub fn participant_seed(master_seed: u64, participant_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(PARTICIPANT_SEED_DOMAIN);
    h.update(master_seed.to_le_bytes());
    h.update(participant_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Deterministic generator used for instantiation.
pub struct InstanceRng(ChaCha20Rng);

impl InstanceRng {
    pub fn new(seed: u64, participant_id: &str) -> Self {
        let mut h = Sha256::new();
        h.update(INSTANTIATE_DOMAIN);
        h.update(seed.to_le_bytes());
        h.update(participant_id.as_bytes());
        Self(ChaCha20Rng::from_seed(h.finalize().into()))
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        // 2^64 mod n; values below it would bias the modulo
        let threshold = n.wrapping_neg() % n;
        loop {
            let r = self.0.next_u64();
            if r >= threshold {
                return r % n;
            }
        }
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

/// Names of all `{{name}}` placeholders in `s`.
pub fn placeholders(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else { break };
        let name = &after[..end];
        if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            out.push(name);
        }
        rest = &after[end + 2..];
    }
    out
}

fn substitute(s: &mut String, values: &BTreeMap<&str, &str>) {
    if !s.contains("{{") {
        return;
    }
    for (name, value) in values {
        let pat = format!("{{{{{name}}}}}");
        if s.contains(&pat) {
            *s = s.replace(&pat, value);
        }
    }
}

/// Every string field that may carry placeholders, with its document path.
fn for_each_text(spec: &mut QuestionnaireSpec, mut f: impl FnMut(String, &mut String)) {
    f("title".into(), &mut spec.title);
    for (ai, a) in spec.assets.iter_mut().enumerate() {
        f(format!("assets[{ai}].src"), &mut a.src);
    }
    for (si, screen) in spec.screens.iter_mut().enumerate() {
        match &mut screen.body {
            ScreenBody::Items { items } => {
                for (ii, item) in items.iter_mut().enumerate() {
                    let p = format!("screens[{si}].items[{ii}]");
                    f(format!("{p}.question"), &mut item.question);
                    match &mut item.scale {
                        ScaleSpec::CategoryRating { labels } => {
                            for (li, l) in labels.iter_mut().enumerate() {
                                f(format!("{p}.scale.labels[{li}]"), l);
                            }
                        }
                        ScaleSpec::VisualAnalogue { min_label, max_label } => {
                            f(format!("{p}.scale.min_label"), min_label);
                            f(format!("{p}.scale.max_label"), max_label);
                        }
                        ScaleSpec::NasaTlxSubscale { dimension } => f(format!("{p}.scale.dimension"), dimension),
                        _ => {}
                    }
                }
            }
            ScreenBody::Media { asset_id, .. } => f(format!("screens[{si}].asset_id"), asset_id),
            ScreenBody::RemoteCommand { command } => f(format!("screens[{si}].command"), command),
            ScreenBody::Wait { .. } | ScreenBody::Export { .. } => {}
        }
    }
}

/// Checks the directives against the base questionnaire. The base itself is
/// validated with every placeholder bound to its slot's first value.
pub fn validate_template(t: &TemplateSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let spec = &t.base;
    let r = &t.randomization;

    let mut grouped: BTreeSet<&str> = BTreeSet::new();
    for (gi, group) in r.permutation_groups.iter().enumerate() {
        let gp = format!("randomization.permutation_groups[{gi}]");
        if group.is_empty() {
            out.push(Diagnostic::error(Code::InvalidDirective, &gp, "empty permutation group"));
        }
        for (mi, id) in group.iter().enumerate() {
            if spec.screen_index(id).is_none() {
                out.push(Diagnostic::error(
                    Code::DanglingScreenRef,
                    format!("{gp}[{mi}]"),
                    format!("unknown screen `{id}`"),
                ));
            }
            if !grouped.insert(id) {
                out.push(Diagnostic::error(
                    Code::OverlappingGroups,
                    format!("{gp}[{mi}]"),
                    format!("screen `{id}` belongs to more than one permutation group"),
                ));
            }
        }
    }
    for (ri, rule) in spec.routing.iter().enumerate() {
        if grouped.contains(rule.after_screen.as_str()) || grouped.contains(rule.goto_screen.as_str()) {
            out.push(Diagnostic::error(
                Code::InvalidDirective,
                format!("routing[{ri}]"),
                "routing rules cannot reference permuted screens",
            ));
        }
    }
    for (i, id) in r.shuffle_items.iter().enumerate() {
        let ok = spec
            .screen_index(id)
            .is_some_and(|si| spec.screens[si].body.kind() == ScreenKind::Items);
        if !ok {
            out.push(Diagnostic::error(
                Code::InvalidDirective,
                format!("randomization.shuffle_items[{i}]"),
                format!("`{id}` is not an items screen"),
            ));
        }
    }
    for (name, values) in &r.slots {
        if values.is_empty() {
            out.push(Diagnostic::error(
                Code::InvalidDirective,
                format!("randomization.slots.{name}"),
                "slot has no values",
            ));
        }
    }

    let mut probe = spec.clone();
    let mut unbound = Vec::new();
    for_each_text(&mut probe, |path, s| {
        for name in placeholders(s) {
            if !r.slots.contains_key(name) {
                unbound.push(Diagnostic::error(
                    Code::UnboundPlaceholder,
                    path.clone(),
                    format!("placeholder `{{{{{name}}}}}` has no slot"),
                ));
            }
        }
    });
    out.extend(unbound);

    if !has_errors(&out) {
        let firsts: BTreeMap<&str, &str> = r
            .slots
            .iter()
            .map(|(k, v)| (k.as_str(), v[0].as_str()))
            .collect();
        for_each_text(&mut probe, |_, s| substitute(s, &firsts));
        out.extend(validate(&probe));
    }
    out
}

/// Builds one participant's questionnaire. Pure in its three arguments.
pub fn instantiate(t: &TemplateSpec, participant_id: &str, seed: u64) -> Result<QuestionnaireSpec, InvalidTemplate> {
    let diags = validate_template(t);
    if has_errors(&diags) {
        return Err(InvalidTemplate(diags));
    }
    let r = &t.randomization;
    let mut rng = InstanceRng::new(seed, participant_id);
    let mut spec = t.base.clone();

    for group in &r.permutation_groups {
        let mut positions: Vec<usize> = group.iter().filter_map(|id| spec.screen_index(id)).collect();
        positions.sort_unstable();
        let mut screens: Vec<_> = positions.iter().map(|&i| spec.screens[i].clone()).collect();
        rng.shuffle(&mut screens);
        for (pos, screen) in positions.into_iter().zip(screens) {
            spec.screens[pos] = screen;
        }
    }

    let mut shuffled = BTreeSet::new();
    for id in &r.shuffle_items {
        if !shuffled.insert(id.as_str()) {
            continue;
        }
        let si = spec.screen_index(id).expect("validated");
        if let ScreenBody::Items { items } = &mut spec.screens[si].body {
            rng.shuffle(items);
        }
    }

    let chosen: BTreeMap<&str, &str> = r
        .slots
        .iter()
        .map(|(name, values)| (name.as_str(), values[rng.below(values.len() as u64) as usize].as_str()))
        .collect();
    for_each_text(&mut spec, |_, s| substitute(s, &chosen));

    let diags = validate(&spec);
    if has_errors(&diags) {
        return Err(InvalidTemplate(diags));
    }
    Ok(spec)
}
