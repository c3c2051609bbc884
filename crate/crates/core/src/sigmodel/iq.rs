//! Binary IQ block files.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 4    | magic `NCCB`                |
//! | 4      | 2    | version (u16, currently 1)  |
//! | 6      | 2    | antennas M (u16)            |
//! | 8      | 4    | samples K (u32)             |
//! | 12     | 4    | reserved, zero              |
//! | 16     | 8·MK | (re f32, im f32) pairs      |
//!
//! Samples are antenna-major: all K samples of antenna 0, then antenna 1.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::ComplexMatrix;

pub const IQ_MAGIC: [u8; 4] = *b"NCCB";
pub const IQ_VERSION: u16 = 1;
pub const IQ_HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum IqError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: bad magic {found:?} at offset {offset}, expected \"NCCB\"")]
    BadMagic { path: PathBuf, offset: u64, found: [u8; 4] },
    #[error("{path}: unsupported version {version} at offset {offset}")]
    UnsupportedVersion { path: PathBuf, offset: u64, version: u16 },
    #[error("{path}: empty dimensions M={antennas} K={samples} at offset {offset}")]
    EmptyBlock { path: PathBuf, offset: u64, antennas: u16, samples: u32 },
    #[error("{path}: truncated at offset {offset}, expected {expected} bytes in total")]
    Truncated { path: PathBuf, offset: u64, expected: u64 },
    #[error("{path}: non-finite sample at offset {offset}")]
    NonFinite { path: PathBuf, offset: u64 },
    #[error("{path}: {extra} trailing bytes after offset {offset}")]
    TrailingData { path: PathBuf, offset: u64, extra: u64 },
    #[error("block too large for the IQ format: M={antennas} K={samples}")]
    TooLarge { antennas: usize, samples: usize },
}

/// Serializes an M×K sample matrix. Samples are narrowed to f32.
pub fn write_iq<W: Write>(samples: &ComplexMatrix, mut out: W) -> io::Result<()> {
    let m = u16::try_from(samples.rows()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "M exceeds u16"))?;
    let k = u32::try_from(samples.cols()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "K exceeds u32"))?;
    let mut buf = Vec::with_capacity(IQ_HEADER_LEN + 8 * samples.as_slice().len());
    buf.extend_from_slice(&IQ_MAGIC);
    buf.extend_from_slice(&IQ_VERSION.to_le_bytes());
    buf.extend_from_slice(&m.to_le_bytes());
    buf.extend_from_slice(&k.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    for z in samples.as_slice() {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()
}

pub fn write_iq_file(samples: &ComplexMatrix, path: &Path) -> Result<(), IqError> {
    if samples.rows() > u16::MAX as usize || samples.cols() > u32::MAX as usize {
        return Err(IqError::TooLarge {
            antennas: samples.rows(),
            samples: samples.cols(),
        });
    }
    let io_err = |source| IqError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_iq(samples, BufWriter::new(file)).map_err(io_err)
}

/// Parses an IQ stream; `path` only labels errors.
pub fn read_iq<R: Read>(mut input: R, path: &Path) -> Result<ComplexMatrix, IqError> {
    let p = || path.to_path_buf();
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|source| IqError::Io { path: p(), source })?;

    if bytes.len() < 4 {
        return Err(IqError::Truncated {
            path: p(),
            offset: bytes.len() as u64,
            expected: IQ_HEADER_LEN as u64,
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != IQ_MAGIC {
        return Err(IqError::BadMagic {
            path: p(),
            offset: 0,
            found: magic,
        });
    }
    if bytes.len() < IQ_HEADER_LEN {
        return Err(IqError::Truncated {
            path: p(),
            offset: bytes.len() as u64,
            expected: IQ_HEADER_LEN as u64,
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != IQ_VERSION {
        return Err(IqError::UnsupportedVersion {
            path: p(),
            offset: 4,
            version,
        });
    }
    let m = u16::from_le_bytes([bytes[6], bytes[7]]);
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if m == 0 || k == 0 {
        return Err(IqError::EmptyBlock {
            path: p(),
            offset: 6,
            antennas: m,
            samples: k,
        });
    }
    let n = m as u64 * k as u64;
    let expected = IQ_HEADER_LEN as u64 + 8 * n;
    if (bytes.len() as u64) < expected {
        return Err(IqError::Truncated {
            path: p(),
            offset: bytes.len() as u64,
            expected,
        });
    }
    if (bytes.len() as u64) > expected {
        return Err(IqError::TrailingData {
            path: p(),
            offset: expected,
            extra: bytes.len() as u64 - expected,
        });
    }
    let mut data = Vec::with_capacity(n as usize);
    for (i, chunk) in bytes[IQ_HEADER_LEN..].chunks_exact(8).enumerate() {
        let re = f32::from_le_bytes(chunk[0..4].try_into().unwrap());
        let im = f32::from_le_bytes(chunk[4..8].try_into().unwrap());
        if !re.is_finite() || !im.is_finite() {
            return Err(IqError::NonFinite {
                path: p(),
                offset: (IQ_HEADER_LEN + 8 * i) as u64,
            });
        }
        data.push(Complex64::new(re as f64, im as f64));
    }
    Ok(ComplexMatrix::from_row_major(m as usize, k as usize, data).expect("checked finite"))
}

pub fn read_iq_file(path: &Path) -> Result<ComplexMatrix, IqError> {
    let file = File::open(path).map_err(|source| IqError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_iq(BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ComplexMatrix {
        let data = (0..12).map(|i| Complex64::new(i as f64 * 0.5, -(i as f64))).collect();
        ComplexMatrix::from_row_major(3, 4, data).unwrap()
    }

    fn encode(m: &ComplexMatrix) -> Vec<u8> {
        let mut v = Vec::new();
        write_iq(m, &mut v).unwrap();
        v
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(bytes.len(), 16 + 12 * 8);
        assert_eq!(&bytes[0..4], b"NCCB");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..8], &[3, 0]);
        assert_eq!(&bytes[8..12], &[4, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[0; 4]);
        // second sample of antenna 0 is (0.5, -1)
        assert_eq!(&bytes[24..28], &0.5f32.to_le_bytes());
        assert_eq!(&bytes[28..32], &(-1.0f32).to_le_bytes());
    }

    #[test]
    fn round_trip() {
        let m = sample();
        let back = read_iq(&encode(&m)[..], Path::new("mem")).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn corrupted_magic_names_offset() {
        let mut bytes = encode(&sample());
        bytes[0] = b'X';
        let err = read_iq(&bytes[..], Path::new("blk.iq")).unwrap_err();
        assert!(matches!(err, IqError::BadMagic { offset: 0, .. }));
        let msg = err.to_string();
        assert!(msg.contains("blk.iq") && msg.contains("offset 0"), "{msg}");
    }

    #[test]
    fn truncated_and_trailing() {
        let bytes = encode(&sample());
        assert!(matches!(
            read_iq(&bytes[..bytes.len() - 3], Path::new("t")),
            Err(IqError::Truncated { .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            read_iq(&long[..], Path::new("t")),
            Err(IqError::TrailingData { offset: 112, extra: 1, .. })
        ));
        assert!(matches!(read_iq(&bytes[..10], Path::new("t")), Err(IqError::Truncated { .. })));
    }

    #[test]
    fn wrong_version_and_nan() {
        let mut bytes = encode(&sample());
        bytes[4] = 9;
        assert!(matches!(
            read_iq(&bytes[..], Path::new("t")),
            Err(IqError::UnsupportedVersion { version: 9, offset: 4, .. })
        ));
        let mut bytes = encode(&sample());
        bytes[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            read_iq(&bytes[..], Path::new("t")),
            Err(IqError::NonFinite { offset: 24, .. })
        ));
    }
}
