//! `.ctprog` files. All integers are little-endian.
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `"CTP1"` |
//! | 4  | 2 | version (1) |
//! | 6  | 2 | reserved |
//! | 8  | 32 | `N_I, N_O, K, I_W, I_H, L, P, W_S` as `u32` |
//! | 40 | 4 | instruction count `n` |
//! | 44 | 4 | threshold pair count `m` |
//! | 48 | 8 | weight image length in trits `t` |
//! | 56 | 32 n | instruction records |
//! | .. | 8 m | threshold pairs (`t_lo`, `t_hi` as `i32`) |
//! | .. | ceil(t/5) | packed weight image |
//!
//! Instruction record (32 bytes): `in_h, in_w, in_c, out_c` (`u16`);
//! `kh, kw, sh, sw, padding, pool_kind, pool_h, pool_w` (`u8`, padding 1 =
//! full, pool kind 0 none / 1 max / 2 avg); `weight_base, threshold_base,
//! dense_inputs` (`u32`); flags (`u8`, bit 0 = depthwise); 3 reserved bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::compiler::{CompiledProgram, LayerInstr, Pooling, ThresholdPair};
use crate::error::{Error, Result};
use crate::network::{ArchConfig, Padding};
use crate::trit::PackedTritTensor;

pub const PROGRAM_MAGIC: &[u8; 4] = b"CTP1";
pub const PROGRAM_VERSION: u16 = 1;
pub const INSTR_RECORD_BYTES: usize = 32;
pub const HEADER_BYTES: usize = 56;

fn narrow<const N: usize>(v: usize, what: &str) -> Result<[u8; N]> {
    let max = (1u128 << (8 * N)) - 1;
    if v as u128 > max {
        return Err(Error::DimOverflow(format!("{what} = {v} does not fit {N} bytes")));
    }
    Ok((v as u64).to_le_bytes()[..N].try_into().unwrap())
}

fn encode_instr(i: &LayerInstr) -> Result<[u8; INSTR_RECORD_BYTES]> {
    let mut r = [0u8; INSTR_RECORD_BYTES];
    r[0..2].copy_from_slice(&narrow::<2>(i.in_dims.0, "in_h")?);
    r[2..4].copy_from_slice(&narrow::<2>(i.in_dims.1, "in_w")?);
    r[4..6].copy_from_slice(&narrow::<2>(i.in_dims.2, "in_c")?);
    r[6..8].copy_from_slice(&narrow::<2>(i.out_ch, "out_c")?);
    let (kind, (ph, pw)) = match i.pooling {
        Pooling::None => (0, (1, 1)),
        Pooling::Max { ph, pw } => (1, (ph, pw)),
        Pooling::Avg { ph, pw } => (2, (ph, pw)),
    };
    let bytes = [
        (i.kernel.0, "kh"),
        (i.kernel.1, "kw"),
        (i.stride.0, "sh"),
        (i.stride.1, "sw"),
        ((i.padding == Padding::Full) as usize, "padding"),
        (kind, "pool_kind"),
        (ph, "pool_h"),
        (pw, "pool_w"),
    ];
    for (j, (v, what)) in bytes.into_iter().enumerate() {
        r[8 + j] = narrow::<1>(v, what)?[0];
    }
    r[16..20].copy_from_slice(&narrow::<4>(i.weight_base, "weight_base")?);
    r[20..24].copy_from_slice(&narrow::<4>(i.threshold_base, "threshold_base")?);
    r[24..28].copy_from_slice(&narrow::<4>(i.dense_inputs, "dense_inputs")?);
    r[28] = i.depthwise as u8;
    Ok(r)
}

fn decode_instr(r: &[u8]) -> Result<LayerInstr> {
    let u16_at = |o: usize| u16::from_le_bytes([r[o], r[o + 1]]) as usize;
    let u32_at = |o: usize| u32::from_le_bytes(r[o..o + 4].try_into().unwrap()) as usize;
    let (ph, pw) = (r[14] as usize, r[15] as usize);
    let pooling = match r[13] {
        0 => Pooling::None,
        1 => Pooling::Max { ph, pw },
        2 => Pooling::Avg { ph, pw },
        k => return Err(Error::Format(format!("unknown pool kind {k}"))),
    };
    let padding = match r[12] {
        0 => Padding::None,
        1 => Padding::Full,
        p => return Err(Error::Format(format!("unknown padding {p}"))),
    };
    if r[28] > 1 {
        return Err(Error::Format(format!("unknown flags {:#x}", r[28])));
    }
    Ok(LayerInstr {
        in_dims: (u16_at(0), u16_at(2), u16_at(4)),
        out_ch: u16_at(6),
        kernel: (r[8] as usize, r[9] as usize),
        stride: (r[10] as usize, r[11] as usize),
        padding,
        pooling,
        weight_base: u32_at(16),
        threshold_base: u32_at(20),
        dense_inputs: u32_at(24),
        depthwise: r[28] == 1,
    })
}

pub fn write_program<W: Write>(mut w: W, prog: &CompiledProgram) -> Result<()> {
    let a = &prog.arch;
    w.write_all(PROGRAM_MAGIC)?;
    w.write_all(&PROGRAM_VERSION.to_le_bytes())?;
    w.write_all(&[0, 0])?;
    for v in [a.n_i, a.n_o, a.k, a.i_w, a.i_h, a.l, a.p, a.w_s] {
        w.write_all(&narrow::<4>(v, "arch field")?)?;
    }
    w.write_all(&narrow::<4>(prog.instrs.len(), "instructions")?)?;
    w.write_all(&narrow::<4>(prog.threshold_image.len(), "thresholds")?)?;
    w.write_all(&(prog.weight_image.len() as u64).to_le_bytes())?;
    for i in &prog.instrs {
        w.write_all(&encode_instr(i)?)?;
    }
    for p in &prog.threshold_image {
        for t in [p.t_lo, p.t_hi] {
            let t = i32::try_from(t).map_err(|_| Error::DimOverflow(format!("threshold {t}")))?;
            w.write_all(&t.to_le_bytes())?;
        }
    }
    w.write_all(prog.weight_image.payload())?;
    Ok(())
}

fn take<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(n.min(1 << 24));
    r.take(n as u64).read_to_end(&mut buf)?;
    if buf.len() != n {
        return Err(Error::Truncated {
            expected: n,
            found: buf.len(),
        });
    }
    Ok(buf)
}

pub fn read_program<R: Read>(mut r: R) -> Result<CompiledProgram> {
    let head = take(&mut r, HEADER_BYTES)?;
    if &head[..4] != PROGRAM_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &head[..4])));
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != PROGRAM_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap()) as usize;
    let arch = ArchConfig {
        n_i: u32_at(8),
        n_o: u32_at(12),
        k: u32_at(16),
        i_w: u32_at(20),
        i_h: u32_at(24),
        l: u32_at(28),
        p: u32_at(32),
        w_s: u32_at(36),
    };
    arch.check()?;
    let (n, m) = (u32_at(40), u32_at(44));
    let t = u64::from_le_bytes(head[48..56].try_into().unwrap());
    let t = usize::try_from(t).map_err(|_| Error::DimOverflow(format!("{t} weight trits")))?;
    let slot = arch.window_trits();
    if t % slot != 0 {
        return Err(Error::Format(format!("weight image of {t} trits is not whole kernels")));
    }
    let instrs = take(&mut r, n * INSTR_RECORD_BYTES)?
        .chunks_exact(INSTR_RECORD_BYTES)
        .map(decode_instr)
        .collect::<Result<Vec<_>>>()?;
    let threshold_image = take(&mut r, 8 * m)?
        .chunks_exact(8)
        .map(|c| {
            let lo = i32::from_le_bytes(c[..4].try_into().unwrap()) as i64;
            let hi = i32::from_le_bytes(c[4..].try_into().unwrap()) as i64;
            if lo > hi {
                return Err(Error::Format(format!("threshold pair ({lo}, {hi}) inverted")));
            }
            Ok(ThresholdPair::new(lo, hi))
        })
        .collect::<Result<Vec<_>>>()?;
    let payload = take(&mut r, t.div_ceil(5))?;
    let weight_image =
        PackedTritTensor::from_payload(&[t / slot, arch.k, arch.k, arch.n_i], payload)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after weight image".into()));
    }
    let prog = CompiledProgram {
        arch,
        instrs,
        weight_image,
        threshold_image,
    };
    prog.check()?;
    Ok(prog)
}

pub fn save_program(path: impl AsRef<Path>, prog: &CompiledProgram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_program(&mut w, prog)?;
    w.flush()?;
    Ok(())
}

pub fn load_program(path: impl AsRef<Path>) -> Result<CompiledProgram> {
    read_program(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::emit_program;
    use crate::network::zoo::{random_network, RandomNetOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_random_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let arch = ArchConfig::default();
        for _ in 0..20 {
            let net = random_network::<f64>(&mut rng, &arch, &RandomNetOptions::default());
            let prog = emit_program(&net, &arch).unwrap();
            let mut buf = Vec::new();
            write_program(&mut buf, &prog).unwrap();
            assert_eq!(
                buf.len(),
                HEADER_BYTES
                    + 32 * prog.instrs.len()
                    + 8 * prog.threshold_image.len()
                    + prog.weight_image.len().div_ceil(5)
            );
            assert_eq!(read_program(&buf[..]).unwrap(), prog);
            assert!(matches!(read_program(&buf[..buf.len() - 1]), Err(Error::Truncated { .. })));
        }
    }
}
