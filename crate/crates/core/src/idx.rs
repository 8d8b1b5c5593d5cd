//! Reader and writer for the IDX files the MNIST digits ship in.
//!
//! Layout: a big-endian magic `0x0000TTRR` (type code `TT`, rank `RR`),
//! `RR` big-endian u32 dimension sizes, then the raw row-major payload.
//! Only unsigned-byte payloads of rank 1 (labels) and rank 3 (images) are
//! supported.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
const TYPE_U8: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxData {
    Images {
        count: usize,
        rows: usize,
        cols: usize,
        /// `count * rows * cols` bytes, image-major then row-major.
        pixels: Vec<u8>,
    },
    Labels(Vec<u8>),
}

impl IdxData {
    /// Images as a `count × (rows·cols)` matrix of raw pixel values.
    pub fn image_matrix(&self) -> Option<Array2<f64>> {
        match self {
            IdxData::Images {
                count,
                rows,
                cols,
                pixels,
            } => Some(
                Array2::from_shape_vec(
                    (*count, rows * cols),
                    pixels.iter().map(|&p| f64::from(p)).collect(),
                )
                .expect("payload length validated at parse time"),
            ),
            IdxData::Labels(_) => None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            IdxData::Images {
                count,
                rows,
                cols,
                pixels,
            } => {
                out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
                for d in [count, rows, cols] {
                    out.extend_from_slice(&(*d as u32).to_be_bytes());
                }
                out.extend_from_slice(pixels);
            }
            IdxData::Labels(labels) => {
                out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
                out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
                out.extend_from_slice(labels);
            }
        }
        out
    }
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<IdxData> {
    parse_idx(&fs::read(path)?)
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxData> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile {
            expected: 4,
            found: bytes.len(),
        });
    }
    let magic = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    let (zero, type_code, rank) = (&bytes[..2], bytes[2], bytes[3]);
    if zero != [0, 0] || !(rank == 1 || rank == 3) {
        return Err(Error::BadMagic { found: magic });
    }
    if type_code != TYPE_U8 {
        return Err(Error::UnsupportedType(type_code));
    }
    let header_len = 4 + 4 * rank as usize;
    if bytes.len() < header_len {
        return Err(Error::TruncatedFile {
            expected: header_len,
            found: bytes.len(),
        });
    }
    let dims: Vec<usize> = bytes[4..header_len]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let payload_len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format {
            format: "IDX",
            reason: "dimension product overflows".into(),
        })?;
    let expected = header_len + payload_len;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format {
            format: "IDX",
            reason: format!("{} trailing bytes after payload", bytes.len() - expected),
        });
    }
    let payload = bytes[header_len..].to_vec();
    Ok(match dims.as_slice() {
        [_] => IdxData::Labels(payload),
        [count, rows, cols] => IdxData::Images {
            count: *count,
            rows: *rows,
            cols: *cols,
            pixels: payload,
        },
        _ => unreachable!("rank checked above"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_images() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend_from_slice(&[0, 255, 17, 128, 1, 2, 3, 4]);
        b
    }

    #[test]
    fn parses_handcrafted_images() {
        let data = parse_idx(&two_images()).unwrap();
        let IdxData::Images {
            count,
            rows,
            cols,
            ref pixels,
        } = data
        else {
            panic!("expected images");
        };
        assert_eq!((count, rows, cols), (2, 2, 2));
        assert_eq!(pixels, &[0, 255, 17, 128, 1, 2, 3, 4]);
        let m = data.image_matrix().unwrap();
        assert_eq!(m.dim(), (2, 4));
        assert_eq!(m[[0, 1]], 255.0);
        assert_eq!(m[[1, 3]], 4.0);
        assert_eq!(data.to_bytes(), two_images());
    }

    #[test]
    fn parses_labels() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 9];
        let data = parse_idx(&bytes).unwrap();
        assert_eq!(data, IdxData::Labels(vec![7, 2, 9]));
        assert_eq!(data.to_bytes(), bytes);
        assert!(data.image_matrix().is_none());
    }

    #[test]
    fn wrong_magic() {
        let mut b = two_images();
        b[0] = 1;
        assert!(matches!(parse_idx(&b), Err(Error::BadMagic { .. })));
        let mut b = two_images();
        b[3] = 2;
        assert!(matches!(
            parse_idx(&b),
            Err(Error::BadMagic { found: 0x0802 })
        ));
    }

    #[test]
    fn unsupported_element_type() {
        let mut b = two_images();
        b[2] = 0x0d;
        assert!(matches!(parse_idx(&b), Err(Error::UnsupportedType(0x0d))));
    }

    #[test]
    fn truncated_payload_and_header() {
        let b = two_images();
        assert!(matches!(
            parse_idx(&b[..b.len() - 1]),
            Err(Error::TruncatedFile {
                expected: 24,
                found: 23
            })
        ));
        assert!(matches!(
            parse_idx(&b[..9]),
            Err(Error::TruncatedFile { .. })
        ));
        assert!(matches!(
            parse_idx(&b[..2]),
            Err(Error::TruncatedFile { .. })
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut b = two_images();
        b.push(0);
        assert!(matches!(parse_idx(&b), Err(Error::Format { .. })));
    }
}
