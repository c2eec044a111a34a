//! Behavioral events, media playback statistics and free-hand strokes.

pub mod data_uri;
mod event;
mod media;
mod stroke;

pub use event::{keys, BehavioralEvent, EventError, EventFlag, EventKind};
pub use media::{fold_media_stats, MediaFold, MediaStats};
pub use stroke::{strokes_to_image, GrayImage, StrokeError, StrokePoint, StrokeSet, BLACK, STROKE_RADIUS, WHITE};
