//! Binary PGM (P5) reading and writing, 8-bit only.

use super::GrayImage;
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Writes `P5`, the dimensions, maxval 255, exactly one whitespace byte, then
/// the raw rows.
pub fn write_pgm<W: Write>(mut w: W, img: &GrayImage) -> std::io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    w.write_all(img.data())
}

pub fn save_pgm<P: AsRef<Path>>(path: P, img: &GrayImage) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_pgm(&mut out, img)?;
    out.flush()
}

/// Reads a binary PGM. The maxval must be exactly 255 (16-bit rasters are
/// rejected); exactly one whitespace byte separates the maxval from the data.
pub fn read_pgm<R: Read>(mut r: R) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0usize;

    let magic = next_token(&bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Parse(format!(
            "not a binary PGM (magic {:?})",
            String::from_utf8_lossy(&magic)
        )));
    }
    let width: usize = parse_int(&next_token(&bytes, &mut pos)?)?;
    let height: usize = parse_int(&next_token(&bytes, &mut pos)?)?;
    let maxval: usize = parse_int(&next_token(&bytes, &mut pos)?)?;
    if maxval > 255 {
        return Err(Error::Parse(format!(
            "16-bit PGM rejected (maxval {maxval})"
        )));
    }
    if maxval != 255 {
        return Err(Error::Parse(format!("maxval must be 255, got {maxval}")));
    }
    // Exactly one whitespace byte after the maxval.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Parse("missing whitespace after maxval".into())),
    }
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(Error::Parse(format!(
            "truncated raster: need {need} bytes, have {}",
            bytes.len() - pos
        )));
    }
    GrayImage::new(width, height, bytes[pos..pos + need].to_vec())
}

pub fn load_pgm<P: AsRef<Path>>(path: P) -> Result<GrayImage> {
    read_pgm(BufReader::new(File::open(path)?))
}

/// Returns the next header token, skipping whitespace and `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Result<Vec<u8>> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse("unexpected end of PGM header".into()));
    }
    Ok(bytes[start..*pos].to_vec())
}

fn parse_int(token: &[u8]) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::Parse(format!(
                "bad integer in PGM header: {:?}",
                String::from_utf8_lossy(token)
            ))
        })
}
