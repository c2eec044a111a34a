use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stroke half-width in pixels; strokes are 2 px wide with round caps.
pub const STROKE_RADIUS: f64 = 1.0;

pub const WHITE: u8 = 255;
pub const BLACK: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokePoint {
    pub x: f64,
    pub y: f64,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeSet {
    width: u32,
    height: u32,
    strokes: Vec<Vec<StrokePoint>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrokeError {
    #[error("point ({x}, {y}) of stroke {stroke} lies outside the {width}x{height} canvas")]
    OutOfRange {
        stroke: usize,
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("timestamps of stroke {stroke} decrease at point {point}")]
    DecreasingTime { stroke: usize, point: usize },
    #[error("canvas has zero width or height")]
    EmptyCanvas,
}

impl StrokeSet {
    pub fn new(width: u32, height: u32, strokes: Vec<Vec<StrokePoint>>) -> Result<Self, StrokeError> {
        for (si, stroke) in strokes.iter().enumerate() {
            for (pi, p) in stroke.iter().enumerate() {
                let inside = p.x >= 0.0 && p.y >= 0.0 && p.x < f64::from(width) && p.y < f64::from(height);
                if !inside {
                    return Err(StrokeError::OutOfRange {
                        stroke: si,
                        x: p.x,
                        y: p.y,
                        width,
                        height,
                    });
                }
                if pi > 0 && p.t < stroke[pi - 1].t {
                    return Err(StrokeError::DecreasingTime { stroke: si, point: pi });
                }
            }
        }
        Ok(Self { width, height, strokes })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn strokes(&self) -> &[Vec<StrokePoint>] {
        &self.strokes
    }
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn blank(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![WHITE; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

fn dist2_to_segment(px: f64, py: f64, a: StrokePoint, b: StrokePoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - a.x) * dx + (py - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.x + t * dx - px, a.y + t * dy - py);
    cx * cx + cy * cy
}

/// Renders strokes black on white. A pixel is inked when its centre lies
/// within [`STROKE_RADIUS`] of a stroke segment; single-point strokes become
/// dots.
pub fn strokes_to_image(set: &StrokeSet) -> Result<GrayImage, StrokeError> {
    if set.width == 0 || set.height == 0 {
        return Err(StrokeError::EmptyCanvas);
    }
    let mut img = GrayImage::blank(set.width, set.height);
    let r2 = STROKE_RADIUS * STROKE_RADIUS;
    for stroke in &set.strokes {
        let segments = stroke
            .windows(2)
            .map(|w| (w[0], w[1]))
            .chain(stroke.first().filter(|_| stroke.len() == 1).map(|p| (*p, *p)));
        for (a, b) in segments {
            let x0 = floor_clamp(a.x.min(b.x) - STROKE_RADIUS, set.width);
            let x1 = floor_clamp(a.x.max(b.x) + STROKE_RADIUS, set.width);
            let y0 = floor_clamp(a.y.min(b.y) - STROKE_RADIUS, set.height);
            let y1 = floor_clamp(a.y.max(b.y) + STROKE_RADIUS, set.height);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let d2 = dist2_to_segment(f64::from(x) + 0.5, f64::from(y) + 0.5, a, b);
                    if d2 <= r2 {
                        img.pixels[y as usize * set.width as usize + x as usize] = BLACK;
                    }
                }
            }
        }
    }
    Ok(img)
}

fn floor_clamp(v: f64, limit: u32) -> u32 {
    if v <= 0.0 {
        0
    } else {
        // `as` truncates toward zero, which is floor for positive values
        (v as u32).min(limit - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, t: u64) -> StrokePoint {
        StrokePoint { x, y, t }
    }

    #[test]
    fn empty_strokes_all_white() {
        let img = strokes_to_image(&StrokeSet::new(8, 4, vec![]).unwrap()).unwrap();
        assert!(img.pixels.iter().all(|&p| p == WHITE));
        assert_eq!((img.width, img.height), (8, 4));
    }

    #[test]
    fn zero_canvas() {
        let s = StrokeSet::new(0, 5, vec![]).unwrap();
        assert_eq!(strokes_to_image(&s), Err(StrokeError::EmptyCanvas));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            StrokeSet::new(10, 10, vec![vec![pt(10.0, 1.0, 0)]]),
            Err(StrokeError::OutOfRange { .. })
        ));
        assert!(matches!(
            StrokeSet::new(10, 10, vec![vec![pt(1.0, 1.0, 5), pt(2.0, 1.0, 4)]]),
            Err(StrokeError::DecreasingTime { stroke: 0, point: 1 })
        ));
    }

    #[test]
    fn horizontal_stroke_stays_in_dilated_box() {
        let s = StrokeSet::new(40, 20, vec![vec![pt(5.0, 10.0, 0), pt(30.0, 10.0, 16)]]).unwrap();
        let img = strokes_to_image(&s).unwrap();
        let mut inked = 0;
        for y in 0..img.height {
            for x in 0..img.width {
                if img.get(x, y) != WHITE {
                    inked += 1;
                    let (cx, cy) = (f64::from(x) + 0.5, f64::from(y) + 0.5);
                    assert!((5.0 - STROKE_RADIUS..=30.0 + STROKE_RADIUS).contains(&cx));
                    assert!((10.0 - STROKE_RADIUS..=10.0 + STROKE_RADIUS).contains(&cy));
                }
            }
        }
        // rows 9 and 10 have centres at 9.5/10.5, both within radius 1
        assert!(inked >= 2 * 25);
    }

    #[test]
    fn dot_for_single_point() {
        let s = StrokeSet::new(5, 5, vec![vec![pt(2.5, 2.5, 0)]]).unwrap();
        let img = strokes_to_image(&s).unwrap();
        assert_eq!(img.get(2, 2), BLACK);
        assert_eq!(img.get(0, 0), WHITE);
    }
}
