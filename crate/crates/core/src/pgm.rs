//! Portable GrayMap (PGM) reading and writing.
//!
//! Supports the ASCII `P2` and binary `P5` variants with maxval up to
//! 65535 (two-byte big-endian samples above 255). Header comments
//! starting with `#` are skipped. Errors carry the offending path.

use crate::wavelet::Image;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a PGM file (magic {found:?})")]
    BadMagic { path: PathBuf, found: String },
    #[error("{path}: malformed header: {reason}")]
    BadHeader { path: PathBuf, reason: String },
    #[error("{path}: truncated pixel data: expected {expected} samples, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{path}: sample value {value} exceeds maxval {maxval}")]
    ValueOutOfRange {
        path: PathBuf,
        value: u32,
        maxval: u32,
    },
}

/// Raw decoded PGM: integer samples in `[0, maxval]`.
#[derive(Debug, Clone)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub pixels: Vec<u16>,
}

impl PgmImage {
    /// Converts to a real-valued image with pixels divided by maxval,
    /// i.e. normalized into [0, 1].
    pub fn to_image_normalized(&self) -> Image {
        let scale = 1.0 / self.maxval as f64;
        let pixels = self.pixels.iter().map(|&p| p as f64 * scale).collect();
        Image::new(self.width, self.height, pixels)
            .expect("decoded dimensions always match the pixel count")
    }
}

fn io_err(path: &Path, source: std::io::Error) -> PgmError {
    PgmError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Pulls the next whitespace-delimited ASCII token, skipping `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
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
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(
    bytes: &[u8],
    pos: &mut usize,
    path: &Path,
    what: &str,
) -> Result<usize, PgmError> {
    let tok = next_token(bytes, pos).ok_or_else(|| PgmError::BadHeader {
        path: path.to_path_buf(),
        reason: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| PgmError::BadHeader {
        path: path.to_path_buf(),
        reason: format!("invalid {what} {tok:?}"),
    })
}

pub fn read_pgm(path: &Path) -> Result<PgmImage, PgmError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let mut pos = 0usize;
    let magic = next_token(&bytes, &mut pos).unwrap_or_default();
    if magic != "P2" && magic != "P5" {
        return Err(PgmError::BadMagic {
            path: path.to_path_buf(),
            found: magic,
        });
    }
    let width = header_number(&bytes, &mut pos, path, "width")?;
    let height = header_number(&bytes, &mut pos, path, "height")?;
    let maxval = header_number(&bytes, &mut pos, path, "maxval")? as u32;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(PgmError::BadHeader {
            path: path.to_path_buf(),
            reason: format!("unsupported geometry {width}x{height} maxval {maxval}"),
        });
    }
    let expected = width * height;
    let mut pixels = Vec::with_capacity(expected);

    if magic == "P2" {
        while pixels.len() < expected {
            match next_token(&bytes, &mut pos) {
                Some(tok) => {
                    let value: u32 = tok.parse().map_err(|_| PgmError::BadHeader {
                        path: path.to_path_buf(),
                        reason: format!("invalid sample {tok:?}"),
                    })?;
                    if value > maxval {
                        return Err(PgmError::ValueOutOfRange {
                            path: path.to_path_buf(),
                            value,
                            maxval,
                        });
                    }
                    pixels.push(value as u16);
                }
                None => {
                    return Err(PgmError::Truncated {
                        path: path.to_path_buf(),
                        expected,
                        found: pixels.len(),
                    })
                }
            }
        }
    } else {
        // One whitespace byte separates the header from binary data.
        pos += 1;
        let wide = maxval > 255;
        let bytes_per = if wide { 2 } else { 1 };
        let avail = bytes.len().saturating_sub(pos) / bytes_per;
        if avail < expected {
            return Err(PgmError::Truncated {
                path: path.to_path_buf(),
                expected,
                found: avail,
            });
        }
        for i in 0..expected {
            let value = if wide {
                u16::from_be_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]]) as u32
            } else {
                bytes[pos + i] as u32
            };
            if value > maxval {
                return Err(PgmError::ValueOutOfRange {
                    path: path.to_path_buf(),
                    value,
                    maxval,
                });
            }
            pixels.push(value as u16);
        }
    }
    Ok(PgmImage {
        width,
        height,
        maxval,
        pixels,
    })
}

/// Writes 8-bit binary PGM (`P5`, maxval 255).
pub fn write_pgm_p5(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<(), PgmError> {
    assert_eq!(data.len(), width * height, "pixel count mismatch");
    let mut out = Vec::with_capacity(20 + data.len());
    out.extend_from_slice(format!("P5\n{width} {height}\n255\n").as_bytes());
    out.extend_from_slice(data);
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Writes ASCII PGM (`P2`), handy for fixtures and small dumps.
pub fn write_pgm_p2(
    path: &Path,
    width: usize,
    height: usize,
    maxval: u32,
    data: &[u16],
) -> Result<(), PgmError> {
    assert_eq!(data.len(), width * height, "pixel count mismatch");
    let mut text = format!("P2\n{width} {height}\n{maxval}\n");
    for row in data.chunks(width) {
        let mut line = String::new();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v}");
        }
        text.push_str(&line);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}
