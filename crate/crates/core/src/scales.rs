//! SVG artwork for the graphical scales.
//!
//! The same markup is embedded in printed questionnaires and served to the
//! browser client, so on-screen and on-paper scales are byte-identical. All
//! built-in scales share one horizontal geometry: a 600x100 view box whose
//! answer line runs from [`ANCHOR_MIN_X`] to [`ANCHOR_MAX_X`].

use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use crate::spec::ScaleSpec;

pub const VIEW_WIDTH: f64 = 600.0;
pub const VIEW_HEIGHT: f64 = 100.0;
pub const ANCHOR_MIN_X: f64 = 40.0;
pub const ANCHOR_MAX_X: f64 = 560.0;
const LINE_Y: f64 = 50.0;

/// Labels of the continuous quality rating scale, bottom to top of the range.
pub const CONTINUOUS_QUALITY_LABELS: [&str; 7] =
    ["extremely bad", "bad", "poor", "fair", "good", "excellent", "ideal"];

pub const TLX_TICKS: usize = 21;

/// Maps a horizontal position in view-box units onto the answer range
/// `[0, 1]`, linear between the anchors and clamped outside them.
pub fn position_to_value(x: f64) -> f64 {
    ((x - ANCHOR_MIN_X) / (ANCHOR_MAX_X - ANCHOR_MIN_X)).clamp(0.0, 1.0)
}

pub fn value_to_position(v: f64) -> f64 {
    ANCHOR_MIN_X + v.clamp(0.0, 1.0) * (ANCHOR_MAX_X - ANCHOR_MIN_X)
}

/// Maps a normalized answer of a custom SVG scale onto its declared range.
pub fn custom_value(normalized: f64, value_min: f64, value_max: f64) -> f64 {
    value_min + normalized.clamp(0.0, 1.0) * (value_max - value_min)
}

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn open(class: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" class=\"scale {class}\" viewBox=\"0 0 {VIEW_WIDTH} {VIEW_HEIGHT}\" \
         width=\"{VIEW_WIDTH}\" height=\"{VIEW_HEIGHT}\" data-anchor-min=\"{ANCHOR_MIN_X}\" data-anchor-max=\"{ANCHOR_MAX_X}\">"
    )
}

fn baseline(out: &mut String) {
    let _ = write!(
        out,
        "<line x1=\"{ANCHOR_MIN_X}\" y1=\"{LINE_Y}\" x2=\"{ANCHOR_MAX_X}\" y2=\"{LINE_Y}\" stroke=\"black\" stroke-width=\"2\"/>"
    );
}

fn tick(out: &mut String, x: f64, half: f64) {
    let _ = write!(
        out,
        "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\" stroke-width=\"2\"/>",
        LINE_Y - half,
        LINE_Y + half
    );
}

fn label(out: &mut String, x: f64, y: f64, anchor: &str, text: &str) {
    let _ = write!(
        out,
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        escape_xml(text)
    );
}

/// Artwork for a built-in graphical scale; `None` for scales drawn with
/// form controls and for custom SVG scales, whose artwork is an asset.
pub fn scale_svg(scale: &ScaleSpec) -> Option<String> {
    let mut out;
    match scale {
        ScaleSpec::VisualAnalogue { min_label, max_label } => {
            out = open("visual-analogue");
            baseline(&mut out);
            tick(&mut out, ANCHOR_MIN_X, 12.0);
            tick(&mut out, ANCHOR_MAX_X, 12.0);
            label(&mut out, ANCHOR_MIN_X, LINE_Y + 32.0, "start", min_label);
            label(&mut out, ANCHOR_MAX_X, LINE_Y + 32.0, "end", max_label);
        }
        ScaleSpec::NasaTlxSubscale { dimension } => {
            out = open("nasa-tlx");
            let (low, high) = if dimension.eq_ignore_ascii_case("performance") {
                ("Perfect", "Failure")
            } else {
                ("Very Low", "Very High")
            };
            label(&mut out, VIEW_WIDTH / 2.0, 18.0, "middle", dimension);
            baseline(&mut out);
            for i in 0..TLX_TICKS {
                let x = value_to_position(i as f64 / (TLX_TICKS - 1) as f64);
                let half = if i == TLX_TICKS / 2 { 14.0 } else { 8.0 };
                tick(&mut out, x, half);
            }
            label(&mut out, ANCHOR_MIN_X, LINE_Y + 32.0, "start", low);
            label(&mut out, ANCHOR_MAX_X, LINE_Y + 32.0, "end", high);
        }
        ScaleSpec::ContinuousQuality => {
            out = open("continuous-quality");
            baseline(&mut out);
            let n = CONTINUOUS_QUALITY_LABELS.len();
            for (i, text) in CONTINUOUS_QUALITY_LABELS.iter().enumerate() {
                let x = value_to_position(i as f64 / (n - 1) as f64);
                tick(&mut out, x, 10.0);
                label(&mut out, x, LINE_Y + 32.0, "middle", text);
            }
        }
        _ => return None,
    }
    out.push_str("</svg>");
    Some(out)
}
