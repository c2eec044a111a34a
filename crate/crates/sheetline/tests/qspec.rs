mod common;

use common::{random_spec, SpecShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sheetline::qspec::{check_spec, parse_spec, serialize_spec};
use sheetline_core::spec::{validate, Comparator, Literal, ScaleSpec, ScreenBody};
use sheetline_core::{Code, QuestionnaireSpec};

#[test]
fn generated_specs_are_valid() {
    for seed in 0..200 {
        let spec = random_spec(&mut ChaCha8Rng::seed_from_u64(seed), &SpecShape::default());
        let diags = validate(&spec);
        assert!(diags.is_empty(), "seed {seed}: {diags:?}");
    }
}

#[test]
fn twenty_screen_round_trip() {
    for seed in 0..300 {
        let spec = random_spec(&mut ChaCha8Rng::seed_from_u64(seed), &SpecShape::default());
        assert_eq!(spec.screens.len(), 20);
        let doc = serialize_spec(&spec);
        let back = parse_spec(doc.as_bytes()).unwrap_or_else(|d| panic!("seed {seed}: {d:?}\n{doc}"));
        assert_eq!(back, spec, "seed {seed}");
        assert_eq!(serialize_spec(&back), doc, "serialization is canonical");
    }
}

/// Single-field corruptions of a valid spec, each breaking one invariant.
fn corruptions(spec: &QuestionnaireSpec) -> Vec<(&'static str, QuestionnaireSpec)> {
    let mut out = Vec::new();
    let mut push = |name, f: &dyn Fn(&mut QuestionnaireSpec) -> bool| {
        let mut s = spec.clone();
        if f(&mut s) {
            out.push((name, s));
        }
    };
    push("empty spec_id", &|s| {
        s.spec_id.clear();
        true
    });
    push("no screens", &|s| {
        s.screens.clear();
        s.routing.clear();
        true
    });
    push("duplicate screen id", &|s| {
        s.screens[1].screen_id = s.screens[0].screen_id.clone();
        true
    });
    push("empty screen id", &|s| {
        s.screens[2].screen_id.clear();
        true
    });
    push("empty items", &|s| match &mut s.screens[0].body {
        ScreenBody::Items { items } => {
            items.clear();
            s.routing.clear();
            true
        }
        _ => false,
    });
    push("duplicate item id within screen", &|s| {
        for sc in &mut s.screens {
            if let ScreenBody::Items { items } = &mut sc.body {
                if items.len() >= 2 {
                    items[1].item_id = items[0].item_id.clone();
                    return true;
                }
            }
        }
        false
    });
    push("duplicate item id across screens", &|s| {
        let ids: Vec<_> = s.items().map(|(_, i)| i.item_id.clone()).collect();
        if ids.len() < 2 {
            return false;
        }
        let last = ids.last().unwrap().clone();
        for sc in &mut s.screens {
            if let ScreenBody::Items { items } = &mut sc.body {
                items[0].item_id = last;
                return true;
            }
        }
        false
    });
    push("empty question", &|s| match &mut s.screens[0].body {
        ScreenBody::Items { items } => {
            items[0].question = "  ".into();
            true
        }
        _ => false,
    });
    let first_scale = |s: &mut QuestionnaireSpec, f: &dyn Fn(&mut ScaleSpec) -> bool| {
        for sc in &mut s.screens {
            if let ScreenBody::Items { items } = &mut sc.body {
                for it in items {
                    if f(&mut it.scale) {
                        return true;
                    }
                }
            }
        }
        false
    };
    push("one label", &|s| {
        first_scale(s, &|sc| match sc {
            ScaleSpec::CategoryRating { labels } => {
                labels.truncate(1);
                true
            }
            _ => false,
        }) && {
            s.routing.retain(|r| !matches!(r.condition.literal, Some(Literal::Category(_))));
            true
        }
    });
    push("duplicate label", &|s| {
        first_scale(s, &|sc| match sc {
            ScaleSpec::CategoryRating { labels } => {
                labels[1] = labels[0].clone();
                true
            }
            _ => false,
        })
    });
    push("inverted svg range", &|s| {
        first_scale(s, &|sc| match sc {
            ScaleSpec::CustomSvg { value_min, value_max, .. } => {
                std::mem::swap(value_min, value_max);
                true
            }
            _ => false,
        })
    });
    push("zero canvas", &|s| {
        first_scale(s, &|sc| match sc {
            ScaleSpec::FreeHand { width, .. } => {
                *width = 0;
                true
            }
            _ => false,
        })
    });
    push("undeclared svg asset", &|s| {
        first_scale(s, &|sc| match sc {
            ScaleSpec::CustomSvg { svg_asset, .. } => {
                svg_asset.push('!');
                true
            }
            _ => false,
        })
    });
    push("undeclared media asset", &|s| {
        s.screens.iter_mut().any(|sc| match &mut sc.body {
            ScreenBody::Media { asset_id, .. } => {
                asset_id.push('!');
                true
            }
            _ => false,
        })
    });
    push("duplicate asset", &|s| {
        if s.assets.is_empty() {
            return false;
        }
        let a = s.assets[0].clone();
        s.assets.push(a);
        true
    });
    push("dangling goto", &|s| match s.routing.first_mut() {
        Some(r) => {
            r.goto_screen = "s9x".into();
            true
        }
        None => false,
    });
    push("dangling after", &|s| match s.routing.first_mut() {
        Some(r) => {
            r.after_screen = "nowhere".into();
            true
        }
        None => false,
    });
    push("backward route", &|s| match s.routing.first_mut() {
        Some(r) => {
            std::mem::swap(&mut r.after_screen, &mut r.goto_screen);
            true
        }
        None => false,
    });
    push("dangling item", &|s| match s.routing.first_mut() {
        Some(r) => {
            r.condition.item_id = "ghost".into();
            true
        }
        None => false,
    });
    push("duplicate priority", &|s| {
        let Some(r) = s.routing.first().cloned() else { return false };
        let mut twin = r.clone();
        twin.condition.comparator = Comparator::Answered;
        twin.condition.literal = None;
        s.routing.push(twin);
        true
    });
    push("missing literal", &|s| match s.routing.iter_mut().find(|r| r.condition.literal.is_some()) {
        Some(r) => {
            r.condition.literal = None;
            true
        }
        None => false,
    });
    push("literal out of range", &|s| match s.routing.first_mut() {
        Some(r) => {
            r.condition.comparator = Comparator::Eq;
            r.condition.literal = Some(Literal::Continuous(f64::INFINITY));
            true
        }
        None => false,
    });
    out
}

#[test]
fn every_single_corruption_is_an_error() {
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..100 {
        let spec = random_spec(&mut ChaCha8Rng::seed_from_u64(seed), &SpecShape::default());
        for (name, bad) in corruptions(&spec) {
            let diags = validate(&bad);
            assert!(
                diags.iter().any(|d| d.is_error()),
                "seed {seed}, corruption `{name}` went unnoticed"
            );
            seen.insert(name);
        }
    }
    assert!(seen.len() >= 20, "only {} corruption kinds exercised: {seen:?}", seen.len());
}

#[test]
fn no_export_is_only_a_warning() {
    let shape = SpecShape {
        with_export: false,
        ..Default::default()
    };
    let spec = random_spec(&mut ChaCha8Rng::seed_from_u64(7), &shape);
    let spec = QuestionnaireSpec {
        screens: spec
            .screens
            .into_iter()
            .filter(|s| !matches!(s.body, ScreenBody::Export { .. }))
            .collect(),
        ..spec
    };
    let (parsed, diags) = check_spec(serialize_spec(&spec).as_bytes());
    assert!(parsed.is_some());
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].code, Code::NoExportScreen);
    assert!(!diags[0].is_error());
}
