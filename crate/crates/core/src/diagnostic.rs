use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// Machine-readable diagnostic codes shared by the parser, the validator and
/// the printer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Code {
    SyntaxError,
    UnknownScreenKind,
    UnknownScaleType,
    UnknownComparator,
    UnknownExportTarget,
    PayloadMismatch,
    TemplateDirectivesInSpec,
    EmptyId,
    NoScreens,
    EmptyItems,
    EmptyQuestion,
    DuplicateScreenId,
    DuplicateItemId,
    DuplicateAssetId,
    DuplicateLabel,
    TooFewLabels,
    InvalidSvgRange,
    InvalidCanvas,
    DanglingScreenRef,
    DanglingItemRef,
    DanglingAssetRef,
    DuplicatePriority,
    BackwardRoute,
    MissingLiteral,
    LiteralTypeMismatch,
    NoExportScreen,
    UnprintableScale,
    OverlappingGroups,
    UnboundPlaceholder,
    InvalidDirective,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::SyntaxError => "SYNTAX_ERROR",
            Code::UnknownScreenKind => "UNKNOWN_SCREEN_KIND",
            Code::UnknownScaleType => "UNKNOWN_SCALE_TYPE",
            Code::UnknownComparator => "UNKNOWN_COMPARATOR",
            Code::UnknownExportTarget => "UNKNOWN_EXPORT_TARGET",
            Code::PayloadMismatch => "PAYLOAD_MISMATCH",
            Code::TemplateDirectivesInSpec => "TEMPLATE_DIRECTIVES_IN_SPEC",
            Code::EmptyId => "EMPTY_ID",
            Code::NoScreens => "NO_SCREENS",
            Code::EmptyItems => "EMPTY_ITEMS",
            Code::EmptyQuestion => "EMPTY_QUESTION",
            Code::DuplicateScreenId => "DUPLICATE_SCREEN_ID",
            Code::DuplicateItemId => "DUPLICATE_ITEM_ID",
            Code::DuplicateAssetId => "DUPLICATE_ASSET_ID",
            Code::DuplicateLabel => "DUPLICATE_LABEL",
            Code::TooFewLabels => "TOO_FEW_LABELS",
            Code::InvalidSvgRange => "INVALID_SVG_RANGE",
            Code::InvalidCanvas => "INVALID_CANVAS",
            Code::DanglingScreenRef => "DANGLING_SCREEN_REF",
            Code::DanglingItemRef => "DANGLING_ITEM_REF",
            Code::DanglingAssetRef => "DANGLING_ASSET_REF",
            Code::DuplicatePriority => "DUPLICATE_PRIORITY",
            Code::BackwardRoute => "BACKWARD_ROUTE",
            Code::MissingLiteral => "MISSING_LITERAL",
            Code::LiteralTypeMismatch => "LITERAL_TYPE_MISMATCH",
            Code::NoExportScreen => "NO_EXPORT_SCREEN",
            Code::UnprintableScale => "UNPRINTABLE_SCALE",
            Code::OverlappingGroups => "OVERLAPPING_GROUPS",
            Code::UnboundPlaceholder => "UNBOUND_PLACEHOLDER",
            Code::InvalidDirective => "INVALID_DIRECTIVE",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 1-based line/column in the source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    /// Dotted path into the document, e.g. `screens[2].items[0].question`.
    pub path: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
}

impl Diagnostic {
    pub fn error(code: Code, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            severity: Severity::Error,
            path: path.into(),
            message: message.into(),
            position: None,
        }
    }

    pub fn warning(code: Code, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(code, path, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.position {
            Some(p) => write!(
                f,
                "{sev}[{}] {}:{} {}: {}",
                self.code, p.line, p.column, self.path, self.message
            ),
            None => write!(f, "{sev}[{}] {}: {}", self.code, self.path, self.message),
        }
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
