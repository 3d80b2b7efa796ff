//! Binary PPM/PGM (P5/P6), maxval 255 or 65535.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::Colorspace;

/// Linear value of 8-bit sRGB code 128, handy as a test fixture.
pub const SRGB_EIGHT_BIT_MID: f64 = 0.215_860_5;

/// Standard sRGB electro-optical transfer function (decode to linear).
pub fn srgb_to_linear(u: f64) -> f64 {
    if u <= 0.04045 {
        u / 12.92
    } else {
        ((u + 0.055) / 1.055).powf(2.4)
    }
}

pub fn decode(bytes: &[u8], colorspace: Colorspace) -> Result<Image> {
    let mut cur = 0usize;
    let magic = take_token(bytes, &mut cur)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::Format(format!("unsupported PNM magic {other:?}"))),
    };
    let width: usize = parse_dim(&take_token(bytes, &mut cur)?)?;
    let height: usize = parse_dim(&take_token(bytes, &mut cur)?)?;
    let maxval: usize = parse_dim(&take_token(bytes, &mut cur)?)?;
    if maxval != 255 && maxval != 65535 {
        return Err(Error::Format(format!(
            "PNM maxval must be 255 or 65535, got {maxval}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    if cur >= bytes.len() {
        return Err(Error::Format("PNM raster missing".into()));
    }
    cur += 1;
    let bytes_per = if maxval == 255 { 1 } else { 2 };
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Size("PNM dimensions overflow".into()))?;
    let needed = count * bytes_per;
    let raster = bytes
        .get(cur..cur + needed)
        .ok_or_else(|| Error::Format("PNM raster truncated".into()))?;

    let scale = 1.0 / maxval as f64;
    let mut samples = vec![0.0f32; count];
    // PNM interleaves channels per pixel; our layout is planar.
    for y in 0..height {
        for x in 0..width {
            for c in 0..channels {
                let i = (y * width + x) * channels + c;
                let raw = if bytes_per == 1 {
                    raster[i] as u32
                } else {
                    // 16-bit PNM samples are big-endian
                    u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as u32
                };
                let mut v = raw as f64 * scale;
                if colorspace == Colorspace::Srgb {
                    v = srgb_to_linear(v);
                }
                samples[(c * height + y) * width + x] = v as f32;
            }
        }
    }
    Image::new(width, height, channels, samples)
}

/// Encodes as 16-bit P5/P6 with samples clamped to `[0, 1]`.
pub fn encode16(img: &Image) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(Error::Format(format!(
                "PNM supports 1 or 3 channels, image has {c}"
            )))
        }
    };
    let mut out = format!("{magic}\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..img.channels() {
                let v = img.get(x, y, c).clamp(0.0, 1.0) as f64;
                let q = (v * 65535.0).round() as u16;
                out.extend_from_slice(&q.to_be_bytes());
            }
        }
    }
    Ok(out)
}

fn take_token(bytes: &[u8], cur: &mut usize) -> Result<String> {
    // skip whitespace and `#` comment lines
    loop {
        while *cur < bytes.len() && bytes[*cur].is_ascii_whitespace() {
            *cur += 1;
        }
        if *cur < bytes.len() && bytes[*cur] == b'#' {
            while *cur < bytes.len() && bytes[*cur] != b'\n' {
                *cur += 1;
            }
        } else {
            break;
        }
    }
    let start = *cur;
    while *cur < bytes.len() && !bytes[*cur].is_ascii_whitespace() {
        *cur += 1;
    }
    if start == *cur {
        return Err(Error::Format("PNM header ended unexpectedly".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*cur]).into_owned())
}

fn parse_dim(tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Format(format!("bad PNM header field {tok:?}")))
}
