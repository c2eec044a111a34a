//! PNG encoding of free-hand answers and their Data URI form.

use sheetline_core::capture::{data_uri, strokes_to_image, GrayImage, StrokeError, StrokeSet};
use sheetline_core::engine::AnswerValue;
use thiserror::Error;

pub const PNG: &str = "image/png";

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("UNSUPPORTED_MEDIA_TYPE: `{0}` (only image/png is built in)")]
    UnsupportedMediaType(String),
    #[error(transparent)]
    Stroke(#[from] StrokeError),
    #[error(transparent)]
    DataUri(#[from] data_uri::DataUriError),
    #[error("bad PNG: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("PNG is not 8-bit grayscale")]
    NotGray,
}

impl CaptureError {
    pub fn code(&self) -> &'static str {
        match self {
            CaptureError::UnsupportedMediaType(_) => "UNSUPPORTED_MEDIA_TYPE",
            CaptureError::Stroke(StrokeError::EmptyCanvas) => "EMPTY_CANVAS",
            CaptureError::Stroke(_) => "INVALID_STROKES",
            CaptureError::DataUri(_) | CaptureError::Decode(_) | CaptureError::NotGray => "BAD_IMAGE",
        }
    }
}

/// 8-bit grayscale PNG with default compression; identical images give
/// identical bytes.
pub fn encode_png(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width, img.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("writing to memory");
        w.write_image_data(&img.pixels).expect("pixel count matches dimensions");
    }
    out
}

pub fn decode_png(bytes: &[u8]) -> Result<GrayImage, CaptureError> {
    let mut reader = png::Decoder::new(std::io::Cursor::new(bytes)).read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(CaptureError::NotGray);
    }
    buf.truncate(info.buffer_size());
    Ok(GrayImage {
        width: info.width,
        height: info.height,
        pixels: buf,
    })
}

pub fn image_to_data_uri(img: &GrayImage, media_type: &str) -> Result<String, CaptureError> {
    if media_type != PNG {
        return Err(CaptureError::UnsupportedMediaType(media_type.to_string()));
    }
    Ok(data_uri::encode(PNG, &encode_png(img)))
}

pub fn data_uri_to_image(uri: &str) -> Result<GrayImage, CaptureError> {
    let (media_type, bytes) = data_uri::decode(uri)?;
    if media_type != PNG {
        return Err(CaptureError::UnsupportedMediaType(media_type));
    }
    decode_png(&bytes)
}

/// Renders a free-hand drawing into the answer value the engine stores.
pub fn strokes_to_answer(set: &StrokeSet) -> Result<AnswerValue, CaptureError> {
    let img = strokes_to_image(set)?;
    Ok(AnswerValue::Image(image_to_data_uri(&img, PNG)?))
}
