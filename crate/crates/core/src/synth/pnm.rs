//! Binary PPM/PGM readers and writers.
//!
//! RGB frames are stored as binary P6 with maxval 255; depth maps as binary
//! P5 with maxval 65535 (16-bit big-endian millimeters per the netpbm
//! specification); masks as binary P5 with maxval 255 using 0/255 values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::synth::SynthError;

fn write_header<W: Write>(w: &mut W, magic: &str, width: usize, height: usize, maxval: u32) -> Result<(), SynthError> {
    write!(w, "{magic}\n{width} {height}\n{maxval}\n")?;
    Ok(())
}

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<(), SynthError> {
    if rgb.len() != width * height * 3 {
        return Err(SynthError::DimensionMismatch(format!(
            "rgb buffer {} for {width}x{height}",
            rgb.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, "P6", width, height, 255)?;
    w.write_all(rgb)?;
    Ok(())
}

pub fn write_pgm8(path: &Path, width: usize, height: usize, gray: &[u8]) -> Result<(), SynthError> {
    if gray.len() != width * height {
        return Err(SynthError::DimensionMismatch(format!(
            "gray buffer {} for {width}x{height}",
            gray.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, "P5", width, height, 255)?;
    w.write_all(gray)?;
    Ok(())
}

pub fn write_pgm16(path: &Path, width: usize, height: usize, values: &[u16]) -> Result<(), SynthError> {
    if values.len() != width * height {
        return Err(SynthError::DimensionMismatch(format!(
            "depth buffer {} for {width}x{height}",
            values.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, "P5", width, height, 65535)?;
    let mut bytes = Vec::with_capacity(values.len() * 2);
    for v in values {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

struct PnmHeader {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
}

/// Reads the ASCII header (magic, dimensions, maxval), tolerating `#`
/// comments and arbitrary whitespace, and leaves the reader positioned at
/// the first raster byte.
fn read_header<R: Read>(r: &mut R) -> Result<PnmHeader, SynthError> {
    let mut magic = [0u8; 2];
    r.read_exact(&mut magic)
        .map_err(|_| SynthError::ImageParse("missing magic number".into()))?;

    let mut fields = [0u64; 3];
    for field in &mut fields {
        // Skip whitespace and comment lines.
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte)
                .map_err(|_| SynthError::ImageParse("truncated header".into()))?;
            match byte[0] {
                b'#' => {
                    while byte[0] != b'\n' {
                        r.read_exact(&mut byte)
                            .map_err(|_| SynthError::ImageParse("truncated comment".into()))?;
                    }
                }
                b if b.is_ascii_whitespace() => {}
                _ => break,
            }
        }
        let mut value: u64 = 0;
        let mut any = false;
        while byte[0].is_ascii_digit() {
            any = true;
            value = value * 10 + u64::from(byte[0] - b'0');
            if r.read_exact(&mut byte).is_err() {
                byte[0] = b' ';
                break;
            }
        }
        if !any || !byte[0].is_ascii_whitespace() {
            return Err(SynthError::ImageParse("malformed header field".into()));
        }
        *field = value;
    }
    Ok(PnmHeader {
        magic,
        width: fields[0] as usize,
        height: fields[1] as usize,
        maxval: fields[2] as u32,
    })
}

pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<u8>), SynthError> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r)?;
    if &h.magic != b"P6" || h.maxval != 255 {
        return Err(SynthError::ImageParse(format!(
            "{}: expected binary P6 maxval 255",
            path.display()
        )));
    }
    let mut rgb = vec![0u8; h.width * h.height * 3];
    r.read_exact(&mut rgb)
        .map_err(|_| SynthError::ImageParse("truncated P6 raster".into()))?;
    Ok((h.width, h.height, rgb))
}

pub fn read_pgm8(path: &Path) -> Result<(usize, usize, Vec<u8>), SynthError> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r)?;
    if &h.magic != b"P5" || h.maxval != 255 {
        return Err(SynthError::ImageParse(format!(
            "{}: expected binary P5 maxval 255",
            path.display()
        )));
    }
    let mut gray = vec![0u8; h.width * h.height];
    r.read_exact(&mut gray)
        .map_err(|_| SynthError::ImageParse("truncated P5 raster".into()))?;
    Ok((h.width, h.height, gray))
}

pub fn read_pgm16(path: &Path) -> Result<(usize, usize, Vec<u16>), SynthError> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r)?;
    if &h.magic != b"P5" || h.maxval != 65535 {
        return Err(SynthError::ImageParse(format!(
            "{}: expected binary P5 maxval 65535",
            path.display()
        )));
    }
    let mut bytes = vec![0u8; h.width * h.height * 2];
    r.read_exact(&mut bytes)
        .map_err(|_| SynthError::ImageParse("truncated 16-bit P5 raster".into()))?;
    let values = bytes
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((h.width, h.height, values))
}
