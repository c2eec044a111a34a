//! Core of the sheetline questionnaire toolkit.
//!
//! Everything here is pure and allocation-only (`no_std` + `alloc`): the
//! questionnaire model and validator, the session engine, behavioral capture,
//! seeded randomization, the multi-device sync protocol and the printable
//! layout. File formats, storage, HTTP and the CLI live in the `sheetline`
//! crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod capture;
pub mod construct;
pub mod diagnostic;
pub mod engine;
pub mod print;
pub mod scales;
pub mod spec;
pub mod sync;

pub use diagnostic::{Code, Diagnostic, Position, Severity};
pub use engine::{AnswerValue, Session, SessionState, Status};
pub use spec::QuestionnaireSpec;
