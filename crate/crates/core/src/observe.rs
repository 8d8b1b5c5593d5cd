//! Masked one-bit observations `s̄ = m ⊙ sign(x)` and mask sampling.

use std::io::{Read, Write};

use ndarray::{Array1, ArrayView1};
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::rng::seeded;

pub const GSOB_MAGIC: &[u8; 5] = b"GSOB1";

/// One realization: which nodes were seen, and the sign seen there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    mask: Vec<bool>,
    signed: Vec<i8>,
}

impl Observation {
    /// Checks `signed[i] == 0` exactly where `mask[i]` is false and
    /// `|signed[i]| == 1` elsewhere.
    pub fn new(mask: Vec<bool>, signed: Vec<i8>) -> Result<Self> {
        check_len("observation", mask.len(), signed.len())?;
        for (i, (&m, &s)) in mask.iter().zip(&signed).enumerate() {
            let ok = if m { s == 1 || s == -1 } else { s == 0 };
            if !ok {
                return Err(Error::InvalidEntry {
                    index: i,
                    value: f64::from(s),
                });
            }
        }
        Ok(Self { mask, signed })
    }

    /// Builds an observation from `s̄` alone, inferring the mask.
    pub fn from_signed(signed: Vec<i8>) -> Result<Self> {
        let mask = infer_mask(&signed)?;
        Ok(Self { mask, signed })
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn signed(&self) -> &[i8] {
        &self.signed
    }

    pub fn n_observed(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn mask_f64(&self) -> Array1<f64> {
        self.mask
            .iter()
            .map(|&m| if m { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn signed_f64(&self) -> Array1<f64> {
        self.signed.iter().map(|&s| f64::from(s)).collect()
    }
}

/// Entry-wise sign with `sign(0) = +1`.
pub fn quantize(x: ArrayView1<f64>) -> Vec<i8> {
    x.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect()
}

pub fn apply_mask(signs: &[i8], mask: &[bool]) -> Result<Observation> {
    check_len("apply_mask", signs.len(), mask.len())?;
    let signed = signs
        .iter()
        .zip(mask)
        .map(|(&s, &m)| if m { s } else { 0 })
        .collect();
    Observation::new(mask.to_vec(), signed)
}

/// Convenience for `apply_mask(quantize(x), mask)`.
pub fn observe(x: ArrayView1<f64>, mask: &[bool]) -> Result<Observation> {
    apply_mask(&quantize(x), mask)
}

/// I.i.d. Bernoulli(`p_observe`) mask, reproducible from `seed`.
pub fn sample_mask(n: usize, p_observe: f64, seed: u64) -> Result<Vec<bool>> {
    if !(p_observe > 0.0 && p_observe <= 1.0) {
        return Err(Error::InvalidProbability(p_observe));
    }
    let mut rng = seeded(seed);
    Ok((0..n).map(|_| rng.random_bool(p_observe)).collect())
}

pub fn infer_mask(signed: &[i8]) -> Result<Vec<bool>> {
    signed
        .iter()
        .enumerate()
        .map(|(i, &s)| match s {
            -1 | 1 => Ok(true),
            0 => Ok(false),
            _ => Err(Error::InvalidEntry {
                index: i,
                value: f64::from(s),
            }),
        })
        .collect()
}

/// Writes `GSOB1`, `N` and `R` (u32 little-endian), then `R` records of `N`
/// signed bytes.
pub fn write_observations<W: Write>(mut out: W, observations: &[Observation]) -> Result<()> {
    let n = observations.first().map_or(0, Observation::len);
    let mut buf = Vec::with_capacity(13 + n * observations.len());
    buf.extend_from_slice(GSOB_MAGIC);
    buf.extend_from_slice(&u32_len(n)?.to_le_bytes());
    buf.extend_from_slice(&u32_len(observations.len())?.to_le_bytes());
    for obs in observations {
        check_len("GSOB1 record", n, obs.len())?;
        buf.extend(obs.signed.iter().map(|&s| s as u8));
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Returns `(N, records)`.
pub fn read_observations<R: Read>(mut input: R) -> Result<(usize, Vec<Observation>)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let (n, r, payload) = parse_header(&bytes, GSOB_MAGIC, "GSOB1")?;
    let expected = n * r;
    if payload.len() < expected {
        return Err(Error::TruncatedFile {
            expected: 13 + expected,
            found: bytes.len(),
        });
    }
    let records = payload[..expected]
        .chunks(n.max(1))
        .take(r)
        .map(|rec| Observation::from_signed(rec.iter().map(|&b| b as i8).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok((n, records))
}

pub(crate) fn u32_len(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format {
        format: "binary header",
        reason: format!("{n} does not fit in 32 bits"),
    })
}

/// Splits `magic | N u32le | R u32le | payload`.
pub(crate) fn parse_header<'a>(
    bytes: &'a [u8],
    magic: &[u8; 5],
    format: &'static str,
) -> Result<(usize, usize, &'a [u8])> {
    if bytes.len() < 13 {
        return Err(Error::TruncatedFile {
            expected: 13,
            found: bytes.len(),
        });
    }
    if &bytes[..5] != magic {
        return Err(Error::Format {
            format,
            reason: format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..5])),
        });
    }
    let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let r = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    Ok((n, r, &bytes[13..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(array![0.5, -2.0, 0.0].view()), vec![1, -1, 1]);
        assert_eq!(quantize(array![0.1, 3.0].view()), vec![1, 1]);
        let x = array![0.3, -0.1, 0.0, -7.0];
        let s = quantize(x.view());
        let as_reals: Array1<f64> = s.iter().map(|&v| f64::from(v)).collect();
        assert_eq!(quantize(as_reals.view()), s);
    }

    #[test]
    fn apply_mask_examples() {
        let obs = apply_mask(&[1, -1], &[false, true]).unwrap();
        assert_eq!(obs.signed(), &[0, -1]);
        assert_eq!(
            apply_mask(&[1, -1], &[true, true]).unwrap().signed(),
            &[1, -1]
        );
        assert_eq!(
            apply_mask(&[1, -1], &[false, false]).unwrap().signed(),
            &[0, 0]
        );
        assert!(matches!(
            apply_mask(&[1], &[true, false]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sample_mask_examples() {
        assert!(sample_mask(50, 1.0, 3).unwrap().iter().all(|&m| m));
        let m = sample_mask(10_000, 0.5, 17).unwrap();
        let frac = m.iter().filter(|&&b| b).count() as f64 / 1e4;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
        assert_eq!(m, sample_mask(10_000, 0.5, 17).unwrap());
        for p in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                sample_mask(4, p, 0),
                Err(Error::InvalidProbability(_))
            ));
        }
    }

    #[test]
    fn infer_mask_examples() {
        assert_eq!(infer_mask(&[1, 0, -1]).unwrap(), vec![true, false, true]);
        assert_eq!(infer_mask(&[0, 0]).unwrap(), vec![false, false]);
        assert!(matches!(
            infer_mask(&[1, 2]),
            Err(Error::InvalidEntry { index: 1, .. })
        ));
        let m = vec![true, false, false, true];
        assert_eq!(
            infer_mask(apply_mask(&[-1, 1, -1, 1], &m).unwrap().signed()).unwrap(),
            m
        );
    }

    #[test]
    fn observation_rejects_inconsistent_entries() {
        assert!(Observation::new(vec![true], vec![0]).is_err());
        assert!(Observation::new(vec![false], vec![1]).is_err());
        assert!(Observation::new(vec![true, false], vec![-1, 0]).is_ok());
    }

    #[test]
    fn gsob_roundtrip_and_layout() {
        let obs = vec![
            Observation::from_signed(vec![1, 0, -1]).unwrap(),
            Observation::from_signed(vec![0, 0, 1]).unwrap(),
        ];
        let mut buf = Vec::new();
        write_observations(&mut buf, &obs).unwrap();
        assert_eq!(&buf[..5], b"GSOB1");
        assert_eq!(&buf[5..13], &[3, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&buf[13..], &[1, 0, 0xff, 0, 0, 1]);
        let (n, back) = read_observations(buf.as_slice()).unwrap();
        assert_eq!(n, 3);
        assert_eq!(back, obs);
    }

    #[test]
    fn gsob_rejects_corruption() {
        let obs = vec![Observation::from_signed(vec![1, 0]).unwrap()];
        let mut buf = Vec::new();
        write_observations(&mut buf, &obs).unwrap();
        assert!(matches!(
            read_observations(&buf[..14]),
            Err(Error::TruncatedFile { .. })
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_observations(bad.as_slice()),
            Err(Error::Format { .. })
        ));
        let mut bad = buf;
        bad[13] = 5;
        assert!(matches!(
            read_observations(bad.as_slice()),
            Err(Error::InvalidEntry { .. })
        ));
    }
}
