//! Paper rendering of a questionnaire as one self-contained HTML document.
//!
//! Every items screen becomes a sheet; wait, media and remote-command
//! screens become instruction sheets; export screens produce nothing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::diagnostic::{Code, Diagnostic};
use crate::scales::{escape_xml, scale_svg};
use crate::spec::{item_path, QuestionnaireSpec, ScaleSpec, ScreenBody};

/// Printable area of an A4 sheet with 20 mm margins, in CSS pixels.
pub const PAGE_CONTENT_WIDTH: u32 = 642;
pub const PAGE_CONTENT_HEIGHT: u32 = 971;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrintedDocument {
    pub html: String,
    pub pages: usize,
    pub warnings: Vec<Diagnostic>,
}

const STYLE: &str = "@page{size:A4;margin:20mm}\
body{font-family:sans-serif;margin:0}\
.page{page-break-after:always;break-after:page;padding:0}\
.page:last-child{page-break-after:auto;break-after:auto}\
.item{margin:0 0 24px 0}\
.question{font-weight:bold}\
.options{list-style:none;padding:0}\
.options li::before{content:\"\\2610  \"}\
.answer-line{border-bottom:1px solid black;height:28px}\
.canvas{border:1px solid black}\
.placeholder{font-style:italic;border:1px dashed gray;padding:16px}";

/// Renders `spec` for printing. `svg_assets` maps asset ids to SVG markup
/// for custom SVG scales.
pub fn print_layout(spec: &QuestionnaireSpec, svg_assets: &BTreeMap<String, String>) -> PrintedDocument {
    let mut html = String::new();
    let mut warnings = Vec::new();
    let mut pages = 0;
    let title = escape_xml(&spec.title);
    let _ = write!(
        html,
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{title}</title><style>{STYLE}</style></head><body>\n"
    );

    for (si, screen) in spec.screens.iter().enumerate() {
        let id = escape_xml(&screen.screen_id);
        let body = match &screen.body {
            ScreenBody::Export { .. } => continue,
            ScreenBody::Items { items } => {
                let mut s = String::new();
                if pages == 0 {
                    let _ = write!(s, "<h1>{title}</h1>");
                }
                for (ii, item) in items.iter().enumerate() {
                    let _ = write!(
                        s,
                        "<div class=\"item\" data-item=\"{}\"><p class=\"question\">{}{}</p>",
                        escape_xml(&item.item_id),
                        escape_xml(&item.question),
                        if item.required { " *" } else { "" }
                    );
                    render_scale(&mut s, &item.scale, svg_assets, &item_path(si, ii), &mut warnings);
                    s.push_str("</div>");
                }
                s
            }
            ScreenBody::Wait { duration_ms } => placeholder(&format!(
                "Pause for {} before turning the page.",
                seconds(*duration_ms)
            )),
            ScreenBody::Media { asset_id, .. } => placeholder(&format!(
                "The experimenter presents stimulus \u{201c}{asset_id}\u{201d} now."
            )),
            ScreenBody::RemoteCommand { command } => {
                placeholder(&format!("Experimenter step: {command}"))
            }
        };
        pages += 1;
        let _ = writeln!(
            html,
            "<section class=\"page\" data-screen=\"{id}\" data-page=\"{pages}\">{body}</section>"
        );
    }
    html.push_str("</body></html>\n");
    PrintedDocument { html, pages, warnings }
}

fn seconds(ms: u64) -> String {
    if ms.is_multiple_of(1000) {
        format!("{} s", ms / 1000)
    } else {
        format!("{}.{:03} s", ms / 1000, ms % 1000)
    }
}

fn placeholder(text: &str) -> String {
    format!("<p class=\"placeholder\">{}</p>", escape_xml(text))
}

fn render_scale(
    out: &mut String,
    scale: &ScaleSpec,
    svg_assets: &BTreeMap<String, String>,
    path: &str,
    warnings: &mut Vec<Diagnostic>,
) {
    if let Some(svg) = scale_svg(scale) {
        out.push_str(&svg);
        out.push_str("<div class=\"answer-line\"></div>");
        return;
    }
    match scale {
        ScaleSpec::CategoryRating { labels } => {
            out.push_str("<ul class=\"options\">");
            for l in labels {
                let _ = write!(out, "<li>{}</li>", escape_xml(l));
            }
            out.push_str("</ul>");
        }
        ScaleSpec::FreeText { max_length } => {
            let lines = (*max_length as usize).div_ceil(80).clamp(1, 12);
            for _ in 0..lines {
                out.push_str("<div class=\"answer-line\"></div>");
            }
        }
        ScaleSpec::FreeHand { width, height } => {
            if *width > PAGE_CONTENT_WIDTH || *height > PAGE_CONTENT_HEIGHT {
                warnings.push(Diagnostic::warning(
                    Code::UnprintableScale,
                    format!("{path}.scale"),
                    format!(
                        "{width}x{height} px canvas exceeds the {PAGE_CONTENT_WIDTH}x{PAGE_CONTENT_HEIGHT} px printable area"
                    ),
                ));
            }
            let _ = write!(
                out,
                "<div class=\"canvas\" style=\"width:{}px;height:{}px\"></div>",
                (*width).min(PAGE_CONTENT_WIDTH),
                (*height).min(PAGE_CONTENT_HEIGHT)
            );
        }
        ScaleSpec::CustomSvg { svg_asset, .. } => match svg_assets.get(svg_asset) {
            Some(svg) => {
                out.push_str(svg);
                out.push_str("<div class=\"answer-line\"></div>");
            }
            None => {
                warnings.push(Diagnostic::warning(
                    Code::UnprintableScale,
                    format!("{path}.scale.svg_asset"),
                    format!("artwork for `{svg_asset}` was not supplied"),
                ));
                out.push_str(&placeholder(&format!("[scale {svg_asset}]")));
            }
        },
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::fixtures::*;
    use crate::spec::{ItemSpec, ScreenSpec};
    use alloc::string::ToString;
    use alloc::vec;

    fn none() -> BTreeMap<String, String> {
        BTreeMap::new()
    }

    #[test]
    fn one_page_per_items_screen() {
        let s = spec(vec![
            items_screen("a", vec![category("q1", true)]),
            items_screen("b", vec![category("q2", true)]),
            items_screen("c", vec![category("q3", true)]),
            export_screen("x"),
        ]);
        let doc = print_layout(&s, &none());
        assert_eq!(doc.pages, 3);
        assert_eq!(doc.html.matches("<section class=\"page\"").count(), 3);
        assert!(doc.warnings.is_empty());
    }

    #[test]
    fn wait_screen_is_placeholder_without_inputs() {
        let s = spec(vec![ScreenSpec {
            screen_id: "w".into(),
            body: ScreenBody::Wait { duration_ms: 1500 },
        }]);
        let doc = print_layout(&s, &none());
        assert_eq!(doc.pages, 1);
        assert!(doc.html.contains("class=\"placeholder\""));
        assert!(doc.html.contains("1.500 s"));
        assert!(!doc.html.contains("class=\"answer-line\""));
        assert!(!doc.html.contains("<input"));
    }

    #[test]
    fn vas_svg_embedded_verbatim() {
        let s = demo();
        let doc = print_layout(&s, &none());
        let (_, vas) = s.item("vas").unwrap();
        let svg = scale_svg(&vas.scale).unwrap();
        assert_eq!(doc.html.matches(svg.as_str()).count(), 1);
        // 3 items screens + 1 media placeholder
        assert_eq!(doc.pages, 4);
    }

    #[test]
    fn oversized_canvas_warns() {
        let s = spec(vec![items_screen(
            "a",
            vec![ItemSpec {
                item_id: "sketch".into(),
                question: "Draw".into(),
                scale: ScaleSpec::FreeHand { width: 2000, height: 300 },
                required: false,
            }],
        )]);
        let doc = print_layout(&s, &none());
        assert_eq!(doc.warnings.len(), 1);
        assert_eq!(doc.warnings[0].code, Code::UnprintableScale);
        assert_eq!(doc.warnings[0].path, "screens[0].items[0].scale");
    }

    #[test]
    fn text_is_escaped() {
        let mut s = spec(vec![items_screen("a", vec![category("q1", true)])]);
        s.title = "<script>alert(1)</script>".to_string();
        let doc = print_layout(&s, &none());
        assert!(!doc.html.contains("<script>"));
    }
}
