//! Binary container for transmission matrices.
//!
//! Little-endian layout:
//!
//! | field    | type  |
//! |----------|-------|
//! | magic    | `b"SPTM"` |
//! | version  | u32   |
//! | m_in     | u32   |
//! | n_out    | u32   |
//! | channel  | u8 (0 = R, 1 = G, 2 = B) |
//! | seed     | u64   |
//! | entries  | `n_out · m_in` pairs of f64 `(re, im)`, row-major |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use super::{Channel, TransmissionMatrix};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SPTM";
pub const VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 4 + 4 + 1 + 8;

pub fn write_tm<W: Write>(tm: &TransmissionMatrix, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(tm.m_in() as u32)?;
    w.write_u32::<LittleEndian>(tm.n_out() as u32)?;
    w.write_u8(tm.channel().code())?;
    w.write_u64::<LittleEndian>(tm.seed())?;
    let mut err = None;
    tm.for_each_row_block(256, |_, re, im| {
        if err.is_some() {
            return;
        }
        for r in 0..re.ncols() {
            for m in 0..re.nrows() {
                if let Err(e) = w
                    .write_f64::<LittleEndian>(re[(m, r)])
                    .and_then(|_| w.write_f64::<LittleEndian>(im[(m, r)]))
                {
                    err = Some(e);
                    return;
                }
            }
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => {
            w.flush()?;
            Ok(())
        }
    }
}

pub fn read_tm<R: Read>(r: R) -> Result<TransmissionMatrix> {
    let mut r = r;
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, 0)?;
    if &magic != MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:?}, expected \"SPTM\"")));
    }
    let version = r.read_u32::<LittleEndian>().map_err(|e| eof(e, 4))?;
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let m_in = r.read_u32::<LittleEndian>().map_err(|e| eof(e, 8))? as usize;
    let n_out = r.read_u32::<LittleEndian>().map_err(|e| eof(e, 12))? as usize;
    let code = r.read_u8().map_err(|e| eof(e, 16))?;
    let channel = Channel::from_code(code).ok_or_else(|| Error::format(16, format!("unknown channel code {code}")))?;
    let seed = r.read_u64::<LittleEndian>().map_err(|e| eof(e, 17))?;
    if m_in == 0 || n_out == 0 {
        return Err(Error::format(8, format!("zero dimension {n_out}×{m_in}")));
    }
    let count = m_in
        .checked_mul(n_out)
        .ok_or_else(|| Error::format(8, "dimensions overflow"))?;
    let mut entries = Vec::with_capacity(count);
    let mut buf = [0u8; 16];
    for i in 0..count {
        let offset = HEADER_LEN + 16 * i as u64;
        read_exact(&mut r, &mut buf, offset)?;
        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
        entries.push(Complex64::new(re, im));
    }
    TransmissionMatrix::from_entries(m_in, n_out, seed, channel, &entries)
}

pub fn save_tm(tm: &TransmissionMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_tm(tm, BufWriter::new(File::create(path)?))
}

pub fn load_tm(path: impl AsRef<Path>) -> Result<TransmissionMatrix> {
    read_tm(BufReader::new(File::open(path)?))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    r.read_exact(buf).map_err(|e| eof(e, offset))
}

fn eof(e: std::io::Error, offset: u64) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::format(offset, "truncated transmission matrix file")
    } else {
        e.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits_and_header() {
        let tm = TransmissionMatrix::generate(6, 5, 77, Channel::B).unwrap();
        let mut buf = Vec::new();
        write_tm(&tm, &mut buf).unwrap();
        assert_eq!(buf.len() as u64, HEADER_LEN + 16 * 30);
        assert_eq!(&buf[..4], b"SPTM");
        assert_eq!(buf[16], 2);
        assert_eq!(u64::from_le_bytes(buf[17..25].try_into().unwrap()), 77);
        let back = read_tm(buf.as_slice()).unwrap();
        assert_eq!(back, tm);
    }

    #[test]
    fn truncation_names_offset() {
        let tm = TransmissionMatrix::generate(2, 2, 1, Channel::R).unwrap();
        let mut buf = Vec::new();
        write_tm(&tm, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        match read_tm(buf.as_slice()) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, HEADER_LEN + 16 * 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        assert!(matches!(read_tm(&b"NOPE0000"[..]), Err(Error::Format { offset: 0, .. })));
    }
}
