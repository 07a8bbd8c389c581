//! `.cttensor` files: `"CTT1"`, dtype byte, rank byte, little-endian `u32`
//! dims, then the payload (packed trits, `f64` or `i32`, little-endian).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;
use crate::trit::{checked_count, PackedTritTensor};

pub const TENSOR_MAGIC: &[u8; 4] = b"CTT1";

const DTYPE_TRIT: u8 = 0;
const DTYPE_REAL64: u8 = 1;
const DTYPE_INT32: u8 = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    Trits(PackedTritTensor),
    Real(Tensor<f64>),
    Int(Tensor<i32>),
}

impl TensorData {
    pub fn dims(&self) -> &[usize] {
        match self {
            TensorData::Trits(t) => t.dims(),
            TensorData::Real(t) => t.dims(),
            TensorData::Int(t) => t.dims(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            TensorData::Trits(_) => "trit",
            TensorData::Real(_) => "real64",
            TensorData::Int(_) => "int32",
        }
    }
}

pub fn write_tensor<W: Write>(mut w: W, t: &TensorData) -> Result<()> {
    let dims = t.dims();
    if dims.len() > u8::MAX as usize {
        return Err(Error::DimOverflow(format!("rank {} > 255", dims.len())));
    }
    let dtype = match t {
        TensorData::Trits(_) => DTYPE_TRIT,
        TensorData::Real(_) => DTYPE_REAL64,
        TensorData::Int(_) => DTYPE_INT32,
    };
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&[dtype, dims.len() as u8])?;
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::DimOverflow(format!("dim {d} > u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    match t {
        TensorData::Trits(p) => w.write_all(p.payload())?,
        TensorData::Real(r) => {
            for v in r.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        TensorData::Int(i) => {
            for v in i.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(Error::Truncated {
                    expected: buf.len(),
                    found: filled,
                })
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<TensorData> {
    let mut head = [0u8; 6];
    read_exact_or_truncated(&mut r, &mut head)?;
    if &head[..4] != TENSOR_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &head[..4])));
    }
    let (dtype, rank) = (head[4], head[5] as usize);
    let mut raw = vec![0u8; 4 * rank];
    read_exact_or_truncated(&mut r, &mut raw)?;
    let dims: Vec<usize> = raw
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let count = checked_count(&dims)?;
    let width = match dtype {
        DTYPE_TRIT => 0,
        DTYPE_REAL64 => 8,
        DTYPE_INT32 => 4,
        other => return Err(Error::Format(format!("unknown dtype {other}"))),
    };
    let bytes = if width == 0 {
        count.div_ceil(5)
    } else {
        count
            .checked_mul(width)
            .ok_or_else(|| Error::DimOverflow(format!("{dims:?}")))?
    };
    let mut payload = vec![0u8; bytes];
    read_exact_or_truncated(&mut r, &mut payload)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(match dtype {
        DTYPE_TRIT => TensorData::Trits(PackedTritTensor::from_payload(&dims, payload)?),
        DTYPE_REAL64 => TensorData::Real(Tensor::new(
            &dims,
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )?),
        _ => TensorData::Int(Tensor::new(
            &dims,
            payload
                .chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )?),
    })
}

pub fn save_tensor(path: impl AsRef<Path>, t: &TensorData) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<TensorData> {
    read_tensor(BufReader::new(File::open(path)?))
}

pub fn load_trits(path: impl AsRef<Path>) -> Result<PackedTritTensor> {
    match load_tensor(path)? {
        TensorData::Trits(t) => Ok(t),
        other => Err(Error::Format(format!("expected trit tensor, found {}", other.kind()))),
    }
}

/// Load a real tensor, converting to `T`.
pub fn load_real<T: Real>(path: impl AsRef<Path>) -> Result<Tensor<T>> {
    match load_tensor(path)? {
        TensorData::Real(t) => Ok(t.map(T::of)),
        TensorData::Int(t) => Ok(t.map(|v| T::of_int(v as i64))),
        other => Err(Error::Format(format!("expected real tensor, found {}", other.kind()))),
    }
}

pub fn save_real<T: Real>(path: impl AsRef<Path>, t: &Tensor<T>) -> Result<()> {
    save_tensor(path, &TensorData::Real(t.map(|v| v.as_f64())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trit::Trit;

    fn roundtrip(t: &TensorData) -> TensorData {
        let mut buf = Vec::new();
        write_tensor(&mut buf, t).unwrap();
        read_tensor(&buf[..]).unwrap()
    }

    #[test]
    fn trit_tensor_layout() {
        let trits = [Trit::Pos, Trit::Zero, Trit::Neg, Trit::Pos, Trit::Pos, Trit::Neg];
        let p = PackedTritTensor::from_trits(&[2, 3], &trits).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &TensorData::Trits(p.clone())).unwrap();
        assert_eq!(&buf[..4], b"CTT1");
        assert_eq!(buf[4], 0);
        assert_eq!(buf[5], 2);
        assert_eq!(&buf[6..14], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(buf.len(), 14 + 2);
        assert_eq!(roundtrip(&TensorData::Trits(p.clone())), TensorData::Trits(p));
    }

    #[test]
    fn real_and_int_roundtrip() {
        let r = TensorData::Real(Tensor::new(&[3], vec![0.5, -1.25, 1e300]).unwrap());
        assert_eq!(roundtrip(&r), r);
        let i = TensorData::Int(Tensor::new(&[2, 1], vec![i32::MIN, 7]).unwrap());
        assert_eq!(roundtrip(&i), i);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let p = TensorData::Trits(PackedTritTensor::zeros(&[7]).unwrap());
        let mut buf = Vec::new();
        write_tensor(&mut buf, &p).unwrap();
        assert!(matches!(
            read_tensor(&buf[..buf.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_tensor(&bad[..]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(read_tensor(&bad[..]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        *bad.last_mut().unwrap() = 250;
        assert!(matches!(read_tensor(&bad[..]), Err(Error::InvalidCodeword(250))));
        let mut long = buf;
        long.push(0);
        assert!(matches!(read_tensor(&long[..]), Err(Error::Format(_))));
    }
}
