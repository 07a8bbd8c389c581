//! Binary trace files: one fixed-size record per cycle, no file header, so
//! the file size is `cycles * record_bytes(arch)`. Little-endian.
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | cycle (`u32`) |
//! | 4  | 2 | layer (`u16`) |
//! | 6  | 1 | phase (0 load, 1 issue, 2 prime, 3 stall, 4 compute, 5 drain) |
//! | 7  | 1 | active stages |
//! | 8  | 4 | window center row, column (`i16`, -1 when none) |
//! | 12 | 1 | flags: bit 0 window valid, bit 1 outputs valid |
//! | 13 | 3 | reserved |
//! | 16 | 2 | tile-buffer read operations (`u16`) |
//! | 18 | 2 | reserved |
//! | 20 | 4 | words read (`u32`) |
//! | 24 | 4 | words written (`u32`) |
//! | 28 | 4 | reserved |
//! | 32 | 16 w | window `+1` and `-1` bit planes, `w = ceil(K^2 N_I / 64)` `u64` words each |
//! | .. | 4 N_O | accumulators (`i32`) |
//! | .. | 4 N_O | pooling-stage values (`i32`) |
//! | .. | ceil(N_O / 5) | output trits, packed five per byte |
//! | .. | ceil(N_O / 8) | output valid mask, bit `o % 8` of byte `o / 8` |
//!
//! Reading a trace back needs the programs that produced it
//! ([`SimTrace::rebuild`](crate::sim::SimTrace::rebuild)).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::ArchConfig;
use crate::sim::{CycleRecord, Phase};
use crate::trit::{pack5, unpack5, Trit, TritPlanes};

pub const RECORD_HEADER_BYTES: usize = 32;

fn plane_words(arch: &ArchConfig) -> usize {
    arch.window_trits().div_ceil(64)
}

pub fn record_bytes(arch: &ArchConfig) -> usize {
    RECORD_HEADER_BYTES + 16 * plane_words(arch) + 8 * arch.n_o + arch.n_o.div_ceil(5) + arch.n_o.div_ceil(8)
}

fn fit<T: TryFrom<u64>>(v: u64, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| Error::DimOverflow(format!("{what} = {v} does not fit the trace record")))
}

pub fn encode_record(arch: &ArchConfig, r: &CycleRecord) -> Result<Vec<u8>> {
    let n_o = arch.n_o;
    let mut b = Vec::with_capacity(record_bytes(arch));
    b.extend(fit::<u32>(r.cycle, "cycle")?.to_le_bytes());
    b.extend(fit::<u16>(r.layer as u64, "layer")?.to_le_bytes());
    b.push(r.phase as u8);
    b.push(fit::<u8>(r.active_stages as u64, "active stages")?);
    let (cy, cx) = match r.center {
        Some((y, x)) => (fit::<i16>(y as u64, "center")?, fit::<i16>(x as u64, "center")?),
        None => (-1, -1),
    };
    b.extend(cy.to_le_bytes());
    b.extend(cx.to_le_bytes());
    b.push(r.window.is_some() as u8 | (r.outputs_valid() as u8) << 1);
    b.extend([0u8; 3]);
    b.extend(fit::<u16>(r.read_ops as u64, "read ops")?.to_le_bytes());
    b.extend([0u8; 2]);
    b.extend(fit::<u32>(r.words_read as u64, "words read")?.to_le_bytes());
    b.extend(fit::<u32>(r.words_written as u64, "words written")?.to_le_bytes());
    b.extend([0u8; 4]);

    let pw = plane_words(arch);
    match &r.window {
        Some(w) => {
            if w.len() != arch.window_trits() {
                return Err(Error::Shape(format!("window of {} trits", w.len())));
            }
            for &v in w.pos_words().iter().chain(w.neg_words()) {
                b.extend(v.to_le_bytes());
            }
        }
        None => b.extend(std::iter::repeat_n(0u8, 16 * pw)),
    }
    for vals in [&r.acc, &r.pooled] {
        for o in 0..n_o {
            let v = vals.get(o).copied().unwrap_or(0);
            let v = i32::try_from(v).map_err(|_| Error::DimOverflow(format!("accumulator {v}")))?;
            b.extend(v.to_le_bytes());
        }
    }
    let out = |o: usize| r.out.get(o).copied().unwrap_or(Trit::Zero);
    for chunk in 0..n_o.div_ceil(5) {
        let q: [Trit; 5] = std::array::from_fn(|j| {
            let o = chunk * 5 + j;
            if o < n_o { out(o) } else { Trit::Zero }
        });
        b.push(pack5(q));
    }
    for chunk in 0..n_o.div_ceil(8) {
        let mut m = 0u8;
        for j in 0..8 {
            if r.out_valid.get(chunk * 8 + j).copied().unwrap_or(false) {
                m |= 1 << j;
            }
        }
        b.push(m);
    }
    debug_assert_eq!(b.len(), record_bytes(arch));
    Ok(b)
}

pub fn decode_record(arch: &ArchConfig, b: &[u8]) -> Result<CycleRecord> {
    if b.len() != record_bytes(arch) {
        return Err(Error::Truncated {
            expected: record_bytes(arch),
            found: b.len(),
        });
    }
    let n_o = arch.n_o;
    let u16_at = |o: usize| u16::from_le_bytes([b[o], b[o + 1]]);
    let i16_at = |o: usize| i16::from_le_bytes([b[o], b[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
    let i32_at = |o: usize| i32::from_le_bytes(b[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
    let flags = b[12];
    if flags > 3 {
        return Err(Error::Format(format!("unknown record flags {flags:#x}")));
    }
    let (window_valid, outputs_valid) = (flags & 1 == 1, flags & 2 == 2);
    let center = match (i16_at(8), i16_at(10)) {
        (-1, -1) => None,
        (y, x) if y >= 0 && x >= 0 => Some((y as usize, x as usize)),
        (y, x) => return Err(Error::Format(format!("bad center ({y}, {x})"))),
    };

    let pw = plane_words(arch);
    let mut o = RECORD_HEADER_BYTES;
    let window = if window_valid {
        let pos = (0..pw).map(|i| u64_at(o + 8 * i)).collect();
        let neg = (0..pw).map(|i| u64_at(o + 8 * (pw + i))).collect();
        Some(TritPlanes::from_words(arch.window_trits(), pos, neg)?)
    } else {
        None
    };
    o += 16 * pw;
    let ints = |o: &mut usize| -> Vec<i64> {
        let v = (0..n_o).map(|i| i32_at(*o + 4 * i) as i64).collect();
        *o += 4 * n_o;
        v
    };
    let acc = ints(&mut o);
    let pooled = ints(&mut o);
    let mut out = Vec::with_capacity(n_o);
    for i in 0..n_o.div_ceil(5) {
        out.extend(unpack5(b[o + i])?);
    }
    out.truncate(n_o);
    o += n_o.div_ceil(5);
    let out_valid: Vec<bool> = (0..n_o).map(|i| b[o + i / 8] >> (i % 8) & 1 == 1).collect();

    Ok(CycleRecord {
        cycle: u32_at(0) as u64,
        layer: u16_at(4) as usize,
        phase: Phase::from_u8(b[6])?,
        active_stages: b[7] as usize,
        center,
        window,
        acc: if window_valid { acc } else { Vec::new() },
        pooled: if window_valid { pooled } else { Vec::new() },
        out: if outputs_valid { out } else { Vec::new() },
        out_valid: if outputs_valid { out_valid } else { Vec::new() },
        read_ops: u16_at(16) as usize,
        words_read: u32_at(20) as usize,
        words_written: u32_at(24) as usize,
    })
}

pub fn write_trace<W: Write>(mut w: W, arch: &ArchConfig, records: &[CycleRecord]) -> Result<()> {
    for r in records {
        w.write_all(&encode_record(arch, r)?)?;
    }
    Ok(())
}

pub fn read_trace<R: Read>(mut r: R, arch: &ArchConfig) -> Result<Vec<CycleRecord>> {
    let n = record_bytes(arch);
    let mut records = Vec::new();
    let mut buf = vec![0u8; n];
    loop {
        let mut got = 0;
        while got < n {
            let k = r.read(&mut buf[got..])?;
            if k == 0 {
                break;
            }
            got += k;
        }
        match got {
            0 => return Ok(records),
            g if g < n => return Err(Error::Truncated { expected: n, found: g }),
            _ => records.push(decode_record(arch, &buf)?),
        }
    }
}

pub fn save_trace(path: impl AsRef<Path>, arch: &ArchConfig, records: &[CycleRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trace(&mut w, arch, records)?;
    w.flush()?;
    Ok(())
}

pub fn load_trace(path: impl AsRef<Path>, arch: &ArchConfig) -> Result<Vec<CycleRecord>> {
    read_trace(BufReader::new(File::open(path)?), arch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::emit_program;
    use crate::network::zoo::{random_input, random_network, RandomNetOptions};
    use crate::sim::{run_program, SimOptions, SimTrace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_random_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let arch = ArchConfig::default();
        for _ in 0..5 {
            let net = random_network::<f64>(&mut rng, &arch, &RandomNetOptions::default());
            let prog = emit_program(&net, &arch).unwrap();
            let x = random_input(&mut rng, net.input_dims, 0.4);
            let (_, tr) = run_program(&prog, &x, SimOptions::default()).unwrap();
            let mut buf = Vec::new();
            write_trace(&mut buf, &arch, &tr.records).unwrap();
            assert_eq!(buf.len() as u64, tr.total_cycles * record_bytes(&arch) as u64);
            let back = read_trace(&buf[..], &arch).unwrap();
            assert_eq!(back, tr.records);
            assert_eq!(SimTrace::rebuild(&[prog], back).unwrap(), tr);
            assert!(matches!(
                read_trace(&buf[..buf.len() - 3], &arch),
                Err(Error::Truncated { .. })
            ));
        }
    }
}
