//! Binary container for [`RidgeModel`]s.
//!
//! Little-endian layout:
//!
//! | field       | type |
//! |-------------|------|
//! | magic       | `b"RGMD"` |
//! | version     | u32  |
//! | dim `D`     | u32  |
//! | classes `K` | u32  |
//! | lambda      | f64  |
//! | solver form | u8 (0 = primal, 1 = dual) |
//! | beta        | `(D+1)·K` f64, row-major, bias row last |
//! | names       | `K` × (u32 byte length, UTF-8 bytes) |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{LabelSet, RidgeModel, SolverForm};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RGMD";
pub const VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 4 + 4 + 8 + 1;
const MAX_NAME_LEN: u32 = 1 << 16;

pub fn write_model<W: Write>(model: &RidgeModel, mut w: W) -> Result<()> {
    let dim = u32::try_from(model.dim()).map_err(|_| Error::invalid("model dimension exceeds u32"))?;
    let k = u32::try_from(model.classes()).map_err(|_| Error::invalid("class count exceeds u32"))?;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(dim)?;
    w.write_u32::<LittleEndian>(k)?;
    w.write_f64::<LittleEndian>(model.lambda())?;
    w.write_u8(model.solver_form().code())?;
    for &v in model.beta() {
        w.write_f64::<LittleEndian>(v)?;
    }
    for name in model.label_set().names() {
        w.write_u32::<LittleEndian>(name.len() as u32)?;
        w.write_all(name.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<RidgeModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| eof(e, 0))?;
    if &magic != MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:?}, expected \"RGMD\"")));
    }
    let version = r.read_u32::<LittleEndian>().map_err(|e| eof(e, 4))?;
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let dim = r.read_u32::<LittleEndian>().map_err(|e| eof(e, 8))? as usize;
    let k = r.read_u32::<LittleEndian>().map_err(|e| eof(e, 12))? as usize;
    if dim == 0 || k == 0 {
        return Err(Error::format(8, format!("zero dimension D={dim}, K={k}")));
    }
    let lambda = r.read_f64::<LittleEndian>().map_err(|e| eof(e, 16))?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::format(16, format!("invalid lambda {lambda}")));
    }
    let code = r.read_u8().map_err(|e| eof(e, 24))?;
    let form = SolverForm::from_code(code).ok_or_else(|| Error::format(24, format!("unknown solver form {code}")))?;

    let count = (dim + 1) * k;
    let mut beta = Vec::with_capacity(count);
    let mut offset = HEADER_LEN;
    for _ in 0..count {
        let v = r.read_f64::<LittleEndian>().map_err(|e| eof(e, offset))?;
        if !v.is_finite() {
            return Err(Error::format(offset, "non-finite beta entry"));
        }
        beta.push(v);
        offset += 8;
    }
    let mut names = Vec::with_capacity(k);
    for _ in 0..k {
        let len = r.read_u32::<LittleEndian>().map_err(|e| eof(e, offset))?;
        if len > MAX_NAME_LEN {
            return Err(Error::format(offset, format!("label name length {len} is implausible")));
        }
        offset += 4;
        let mut buf = vec![0u8; len as usize];
        r.read_exact(&mut buf).map_err(|e| eof(e, offset))?;
        names.push(String::from_utf8(buf).map_err(|_| Error::format(offset, "label name is not UTF-8"))?);
        offset += len as u64;
    }
    let labels = LabelSet::new(names).map_err(|e| Error::format(HEADER_LEN + 8 * count as u64, e.to_string()))?;
    RidgeModel::from_parts(dim, beta, lambda, labels, form)
}

pub fn save_model(model: &RidgeModel, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RidgeModel> {
    read_model(BufReader::new(File::open(path)?))
}

fn eof(e: std::io::Error, offset: u64) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::format(offset, "truncated model file")
    } else {
        e.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> RidgeModel {
        let labels = LabelSet::new(vec!["cat".into(), "dög".into()]).unwrap();
        RidgeModel::from_parts(2, vec![0.5, -1.0, 2.0, 3.25, 1e-300, 7.0], 0.125, labels, SolverForm::Dual).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"RGMD");
        assert_eq!(buf[24], 1);
        assert_eq!(buf.len() as u64, HEADER_LEN + 6 * 8 + 4 + 3 + 4 + 4);
        assert_eq!(read_model(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn truncated_beta_names_offset() {
        let mut buf = Vec::new();
        write_model(&model(), &mut buf).unwrap();
        buf.truncate(HEADER_LEN as usize + 20);
        match read_model(buf.as_slice()) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, HEADER_LEN + 16),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
