use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use super::{Image, ImageError, Result};

/// Loads an 8- or 16-bit RGB, RGBA, gray or gray+alpha PNG. Alpha is dropped and
/// gray is replicated into all three channels.
pub fn load_png(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    decode(BufReader::new(file))
}

/// Decodes PNG bytes held in memory.
pub fn from_png_bytes(bytes: &[u8]) -> Result<Image> {
    decode(bytes)
}

fn decode<R: Read>(reader: R) -> Result<Image> {
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(malformed)?;
    let (color_type, bit_depth) = reader.output_color_type();
    let depth = match bit_depth {
        BitDepth::Eight => 8u8,
        BitDepth::Sixteen => 16,
        other => return Err(ImageError::UnsupportedBitDepth(other as u8)),
    };
    let channels = match color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => {
            return Err(ImageError::UnsupportedColorType("indexed".into()));
        }
    };
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(malformed)?;
    let (h, w) = (info.height as usize, info.width as usize);
    if h == 0 || w == 0 {
        return Err(ImageError::ZeroSize(h, w));
    }
    let bytes_per_sample = depth as usize / 8;
    let sample = |row: &[u8], idx: usize| -> f64 {
        if depth == 8 {
            row[idx] as f64 / 255.0
        } else {
            let hi = row[2 * idx] as u16;
            let lo = row[2 * idx + 1] as u16;
            ((hi << 8) | lo) as f64 / 65535.0
        }
    };

    let mut data = Vec::with_capacity(h * w * 3);
    for i in 0..h {
        let row = &buf[i * info.line_size..i * info.line_size + w * channels * bytes_per_sample];
        for j in 0..w {
            let base = j * channels;
            match channels {
                1 | 2 => {
                    let g = sample(row, base);
                    data.extend_from_slice(&[g, g, g]);
                }
                _ => {
                    data.push(sample(row, base));
                    data.push(sample(row, base + 1));
                    data.push(sample(row, base + 2));
                }
            }
        }
    }
    Image::from_raw(h, w, data)
}

/// Writes an 8-bit RGB PNG with `byte = round_half_up(v * 255)`.
pub fn save_png(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let write_err = |e| ImageError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let file = File::create(path).map_err(write_err)?;
    let mut out = BufWriter::new(file);
    encode(image, &mut out).map_err(|e| match e {
        png::EncodingError::IoError(err) => write_err(err),
        other => ImageError::MalformedPng(other.to_string()),
    })?;
    out.flush().map_err(write_err)
}

/// Encodes to an in-memory 8-bit RGB PNG.
pub fn to_png_bytes(image: &Image) -> Vec<u8> {
    let mut bytes = Vec::new();
    encode(image, &mut bytes).expect("PNG encoding into memory cannot fail");
    bytes
}

fn encode<W: Write>(image: &Image, w: W) -> std::result::Result<(), png::EncodingError> {
    let mut encoder = png::Encoder::new(w, image.width() as u32, image.height() as u32);
    encoder.set_color(ColorType::Rgb);
    encoder.set_depth(BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    let bytes: Vec<u8> = image.as_raw().iter().map(|&v| to_byte(v)).collect();
    writer.write_image_data(&bytes)?;
    writer.finish()
}

#[inline]
fn to_byte(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn io_error(path: &Path, e: std::io::Error) -> ImageError {
    if e.kind() == std::io::ErrorKind::NotFound {
        ImageError::NotFound(path.display().to_string())
    } else {
        ImageError::Io {
            path: path.display().to_string(),
            source: e,
        }
    }
}

fn malformed(e: png::DecodingError) -> ImageError {
    ImageError::MalformedPng(e.to_string())
}
