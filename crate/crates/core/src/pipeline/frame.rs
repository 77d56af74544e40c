//! Raster frames and their lossless file formats.
//!
//! PNG (8-bit gray/RGB, with or without alpha, palettes expanded) and binary
//! PPM are accepted on input; PNG is always written. Alpha is composited over
//! opaque black.

use std::fs;
use std::io::{self, Cursor};
use std::path::Path;

use thiserror::Error;

use crate::colorspace::Srgb;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported image format")]
    UnsupportedFormat,
    #[error("image has a zero dimension ({width}x{height})")]
    ZeroDimension { width: u32, height: u32 },
    #[error("image data is truncated")]
    Truncated,
    #[error("malformed image: {0}")]
    Malformed(String),
    #[error("frame is {actual:?} but {expected:?} was expected")]
    DimensionMismatch { expected: (u32, u32), actual: (u32, u32) },
}

/// Row-major sRGB pixel buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<Srgb>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<Srgb>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::ZeroDimension { width, height });
        }
        if pixels.len() as u64 != u64::from(width) * u64::from(height) {
            return Err(FrameError::Malformed(format!(
                "{} pixels for a {width}x{height} frame",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, color: Srgb) -> Result<Self, FrameError> {
        let n = u64::from(width) * u64::from(height);
        Self::new(width, height, vec![color; n as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Srgb) -> Result<Self, FrameError> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Srgb] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Srgb] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<Srgb> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Srgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: Srgb) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = c;
    }

    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.channels()).collect()
    }
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame, FrameError> {
    decode_frame(&fs::read(path)?)
}

/// Save as PNG regardless of the file extension.
pub fn save_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<(), FrameError> {
    fs::write(path, encode_png(frame)?)?;
    Ok(())
}

/// Decode PNG or binary PPM, sniffed by signature.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    const PNG_SIG: &[u8] = b"\x89PNG\r\n\x1a\n";
    if bytes.starts_with(PNG_SIG) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else if bytes.len() < PNG_SIG.len() && PNG_SIG.starts_with(bytes) && !bytes.is_empty() {
        Err(FrameError::Truncated)
    } else {
        Err(FrameError::UnsupportedFormat)
    }
}

pub fn encode_png(frame: &Frame) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, frame.width, frame.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(encode_err)?;
        writer.write_image_data(&frame.to_rgb_bytes()).map_err(encode_err)?;
        writer.finish().map_err(encode_err)?;
    }
    Ok(out)
}

fn encode_err(e: png::EncodingError) -> FrameError {
    match e {
        png::EncodingError::IoError(e) => FrameError::Io(e),
        other => FrameError::Malformed(other.to_string()),
    }
}

fn decode_png(bytes: &[u8]) -> Result<Frame, FrameError> {
    // IHDR width/height sit at fixed offsets; checking them first lets a
    // zero-sized image report as such instead of as a generic format error.
    if bytes.len() < 24 {
        return Err(FrameError::Truncated);
    }
    let width = u32::from_be_bytes(bytes[16..20].try_into().unwrap());
    let height = u32::from_be_bytes(bytes[20..24].try_into().unwrap());
    if width == 0 || height == 0 {
        return Err(FrameError::ZeroDimension { width, height });
    }

    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| FrameError::Malformed("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(decode_err)?;
    let data = &buf[..info.buffer_size()];

    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(FrameError::UnsupportedFormat),
    };
    let stride = info.line_size;
    let mut pixels = Vec::with_capacity(info.width as usize * info.height as usize);
    for row in data.chunks_exact(stride).take(info.height as usize) {
        for px in row[..info.width as usize * channels].chunks_exact(channels) {
            pixels.push(match channels {
                1 => Srgb::new(px[0], px[0], px[0]),
                2 => {
                    let v = over_black(px[0], px[1]);
                    Srgb::new(v, v, v)
                }
                3 => Srgb::new(px[0], px[1], px[2]),
                _ => Srgb::new(over_black(px[0], px[3]), over_black(px[1], px[3]), over_black(px[2], px[3])),
            });
        }
    }
    Frame::new(info.width, info.height, pixels)
}

fn decode_err(e: png::DecodingError) -> FrameError {
    match e {
        png::DecodingError::IoError(e) if e.kind() == io::ErrorKind::UnexpectedEof => FrameError::Truncated,
        png::DecodingError::IoError(e) => FrameError::Io(e),
        other => FrameError::Malformed(other.to_string()),
    }
}

/// Composite an 8-bit channel over black: round(v·α/255).
#[inline]
fn over_black(v: u8, alpha: u8) -> u8 {
    ((u32::from(v) * u32::from(alpha) + 127) / 255) as u8
}

fn decode_ppm(bytes: &[u8]) -> Result<Frame, FrameError> {
    let mut pos = 2;
    let mut header = [0u32; 3];
    for slot in header.iter_mut() {
        *slot = ppm_header_int(bytes, &mut pos)?;
    }
    let [width, height, maxval] = header;
    if maxval != 255 {
        return Err(FrameError::UnsupportedFormat);
    }
    if width == 0 || height == 0 {
        return Err(FrameError::ZeroDimension { width, height });
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        Some(_) => return Err(FrameError::Malformed("missing separator after PPM header".into())),
        None => return Err(FrameError::Truncated),
    }
    let need = width as usize * height as usize * 3;
    let data = bytes.get(pos..pos + need).ok_or(FrameError::Truncated)?;
    let pixels = data.chunks_exact(3).map(|p| Srgb::new(p[0], p[1], p[2])).collect();
    Frame::new(width, height, pixels)
}

fn ppm_header_int(bytes: &[u8], pos: &mut usize) -> Result<u32, FrameError> {
    loop {
        match bytes.get(*pos) {
            None => return Err(FrameError::Truncated),
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if *pos == bytes.len() {
        return Err(FrameError::Truncated);
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| FrameError::Malformed("bad PPM header field".into()))
}

/// Binary PPM encoding; used by tests and tooling that want a second format.
pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend(frame.to_rgb_bytes());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Frame {
        Frame::from_fn(7, 5, |x, y| Srgb::new((x * 30) as u8, (y * 50) as u8, ((x + y) * 9) as u8)).unwrap()
    }

    #[test]
    fn png_round_trip() {
        let f = sample();
        assert_eq!(decode_frame(&encode_png(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn ppm_round_trip_with_comments() {
        let f = sample();
        assert_eq!(decode_frame(&encode_ppm(&f)).unwrap(), f);
        let mut commented = b"P6\n# made by hand\n7 5\n# depth\n255\n".to_vec();
        commented.extend(f.to_rgb_bytes());
        assert_eq!(decode_frame(&commented).unwrap(), f);
    }

    #[test]
    fn single_pixel_is_valid() {
        let f = Frame::filled(1, 1, Srgb::new(1, 2, 3)).unwrap();
        assert_eq!(decode_frame(&encode_png(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(Frame::new(0, 3, vec![]), Err(FrameError::ZeroDimension { .. })));
        assert!(matches!(decode_frame(b"GIF89a......"), Err(FrameError::UnsupportedFormat)));
        assert!(matches!(decode_frame(b"P6\n0 4\n255\n"), Err(FrameError::ZeroDimension { .. })));
        assert!(matches!(decode_frame(b"P6\n2 2\n255\n\0\0\0"), Err(FrameError::Truncated)));
        assert!(matches!(decode_frame(b"P6\n2 2\n65535\n"), Err(FrameError::UnsupportedFormat)));

        let png = encode_png(&sample()).unwrap();
        assert!(matches!(decode_frame(&png[..png.len() - 20]), Err(FrameError::Truncated)));
        assert!(matches!(decode_frame(&png[..12]), Err(FrameError::Truncated)));

        let mut zero = png.clone();
        zero[16..20].copy_from_slice(&0u32.to_be_bytes());
        assert!(matches!(decode_frame(&zero), Err(FrameError::ZeroDimension { .. })));
    }

    #[test]
    fn alpha_composites_over_black() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 1);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[200, 100, 50, 255, 200, 100, 50, 128]).unwrap();
        }
        let f = decode_frame(&out).unwrap();
        assert_eq!(f.get(0, 0), Srgb::new(200, 100, 50));
        assert_eq!(f.get(1, 0), Srgb::new(100, 50, 25));
    }

    #[test]
    fn grayscale_expands() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0x80, 0x00]).unwrap();
        }
        assert_eq!(decode_frame(&out).unwrap().get(0, 0), Srgb::new(128, 128, 128));
    }
}
