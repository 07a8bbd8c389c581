//! Ternary values, the 5-trits-per-byte codec, the multiplier product
//! encoding and the thermometer input encoders.

use std::fmt;
use std::ops::{Mul, Neg};

use crate::error::{Error, Result};

/// A ternary digit.
///
/// In memory (outside the packed codec) a trit is held in 2-bit two's
/// complement: `00` = 0, `01` = +1, `11` = -1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(i8)]
pub enum Trit {
    Neg = -1,
    #[default]
    Zero = 0,
    Pos = 1,
}

impl Trit {
    pub const ALL: [Trit; 3] = [Trit::Neg, Trit::Zero, Trit::Pos];

    #[inline]
    pub fn new(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Trit::Neg),
            0 => Ok(Trit::Zero),
            1 => Ok(Trit::Pos),
            other => Err(Error::InvalidTrit(other)),
        }
    }

    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    /// Sign of an integer as a trit.
    #[inline]
    pub fn signum(v: i64) -> Self {
        match v.signum() {
            -1 => Trit::Neg,
            0 => Trit::Zero,
            _ => Trit::Pos,
        }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self == Trit::Zero
    }

    /// 2-bit two's complement code.
    #[inline]
    pub fn code2(self) -> u8 {
        match self {
            Trit::Zero => 0b00,
            Trit::Pos => 0b01,
            Trit::Neg => 0b11,
        }
    }

    #[inline]
    pub fn from_code2(code: u8) -> Result<Self> {
        match code {
            0b00 => Ok(Trit::Zero),
            0b01 => Ok(Trit::Pos),
            0b11 => Ok(Trit::Neg),
            other => Err(Error::InvalidTrit(other as i64)),
        }
    }

    /// Base-3 digit used by the packed codec.
    #[inline]
    fn digit(self) -> u8 {
        (self as i8 + 1) as u8
    }

    #[inline]
    fn from_digit(d: u8) -> Self {
        match d {
            0 => Trit::Neg,
            1 => Trit::Zero,
            _ => Trit::Pos,
        }
    }
}

impl Neg for Trit {
    type Output = Trit;

    #[inline]
    fn neg(self) -> Trit {
        match self {
            Trit::Neg => Trit::Pos,
            Trit::Zero => Trit::Zero,
            Trit::Pos => Trit::Neg,
        }
    }
}

impl Mul for Trit {
    type Output = Trit;

    #[inline]
    fn mul(self, rhs: Trit) -> Trit {
        Trit::signum(self as i64 * rhs as i64)
    }
}

impl TryFrom<i64> for Trit {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        Trit::new(v)
    }
}

impl From<Trit> for i64 {
    fn from(t: Trit) -> i64 {
        t as i64
    }
}

impl fmt::Display for Trit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trit::Neg => f.write_str("-1"),
            Trit::Zero => f.write_str("0"),
            Trit::Pos => f.write_str("+1"),
        }
    }
}

/// Multiplier output code. `10` is +1, `01` is -1, `00` is 0; `11` never occurs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct ProductCode(u8);

impl ProductCode {
    pub const ZERO: ProductCode = ProductCode(0b00);
    pub const PLUS: ProductCode = ProductCode(0b10);
    pub const MINUS: ProductCode = ProductCode(0b01);

    pub fn from_bits(bits: u8) -> Result<Self> {
        match bits {
            0b00..=0b10 => Ok(ProductCode(bits)),
            other => Err(Error::InvalidTrit(other as i64)),
        }
    }

    pub fn encode(value: Trit) -> Self {
        match value {
            Trit::Pos => Self::PLUS,
            Trit::Neg => Self::MINUS,
            Trit::Zero => Self::ZERO,
        }
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn msb(self) -> bool {
        self.0 & 0b10 != 0
    }

    #[inline]
    pub fn lsb(self) -> bool {
        self.0 & 0b01 != 0
    }

    pub fn decode(self) -> Trit {
        match (self.msb(), self.lsb()) {
            (true, false) => Trit::Pos,
            (false, true) => Trit::Neg,
            _ => Trit::Zero,
        }
    }
}

/// One ternary multiplier.
#[inline]
pub fn trit_mul(activation: Trit, weight: Trit) -> ProductCode {
    ProductCode::encode(activation * weight)
}

/// Sum of product codes: set MSBs minus set LSBs.
pub fn popcount_accumulate<I>(products: I) -> i64
where
    I: IntoIterator,
    I::Item: std::borrow::Borrow<ProductCode>,
{
    let (mut ones_msb, mut ones_lsb) = (0i64, 0i64);
    for p in products {
        let p = *std::borrow::Borrow::<ProductCode>::borrow(&p);
        ones_msb += p.msb() as i64;
        ones_lsb += p.lsb() as i64;
    }
    ones_msb - ones_lsb
}

/// Pack five trits into one byte as a little-endian base-3 number with digits `t + 1`.
pub fn pack5(t: [Trit; 5]) -> u8 {
    t.iter().rev().fold(0u8, |acc, &x| acc * 3 + x.digit())
}

pub fn unpack5(b: u8) -> Result<[Trit; 5]> {
    if b >= 243 {
        return Err(Error::InvalidCodeword(b));
    }
    let mut v = b;
    let mut out = [Trit::Zero; 5];
    for slot in out.iter_mut() {
        *slot = Trit::from_digit(v % 3);
        v /= 3;
    }
    Ok(out)
}

/// Binary thermometer code of `x` over `m` channels: `+1` for `i < x`, `-1` otherwise.
pub fn binary_thermometer(x: i64, m: usize) -> Result<Vec<Trit>> {
    if x < 0 || x > m as i64 {
        return Err(Error::EncodingRange { x, max: m as i64 });
    }
    Ok((0..m as i64)
        .map(|i| if i < x { Trit::Pos } else { Trit::Neg })
        .collect())
}

/// Ternary thermometer code of `x` in `[0, 2m]` over `m` channels.
pub fn ternary_thermometer(x: i64, m: usize) -> Result<Vec<Trit>> {
    let m_i = m as i64;
    if x < 0 || x > 2 * m_i {
        return Err(Error::EncodingRange { x, max: 2 * m_i });
    }
    let sign = Trit::signum(x - m_i);
    let base = binary_thermometer((x - m_i).abs(), m)?;
    // (f + 1) / 2 maps -1 -> 0 and +1 -> 1
    Ok(base
        .into_iter()
        .map(|t| if t == Trit::Pos { sign } else { Trit::Zero })
        .collect())
}

/// Row-major trit tensor stored five trits per byte.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedTritTensor {
    dims: Vec<usize>,
    payload: Vec<u8>,
    count: usize,
}

impl PackedTritTensor {
    pub fn from_trits(dims: &[usize], trits: &[Trit]) -> Result<Self> {
        let count = checked_count(dims)?;
        if count != trits.len() {
            return Err(Error::Shape(format!(
                "dims {:?} hold {} trits, got {}",
                dims,
                count,
                trits.len()
            )));
        }
        let payload = trits
            .chunks(5)
            .map(|c| {
                let mut q = [Trit::Zero; 5];
                q[..c.len()].copy_from_slice(c);
                pack5(q)
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            payload,
            count,
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let count = checked_count(dims)?;
        Self::from_trits(dims, &vec![Trit::Zero; count])
    }

    /// Wrap an already packed payload, validating length and codewords.
    pub fn from_payload(dims: &[usize], payload: Vec<u8>) -> Result<Self> {
        let count = checked_count(dims)?;
        let expected = count.div_ceil(5);
        if payload.len() != expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len(),
            });
        }
        if let Some(&bad) = payload.iter().find(|&&b| b >= 243) {
            return Err(Error::InvalidCodeword(bad));
        }
        Ok(Self {
            dims: dims.to_vec(),
            payload,
            count,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, index: usize) -> Trit {
        assert!(index < self.count, "trit index {index} out of range");
        let quintet = unpack5(self.payload[index / 5]).expect("payload validated");
        quintet[index % 5]
    }

    pub fn to_trits(&self) -> Vec<Trit> {
        let mut out = Vec::with_capacity(self.count);
        for &b in &self.payload {
            out.extend_from_slice(&unpack5(b).expect("payload validated"));
        }
        out.truncate(self.count);
        out
    }

    /// Storage cost in bits per trit.
    pub fn bits_per_trit(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.payload.len() * 8) as f64 / self.count as f64
    }

    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        if checked_count(dims)? != self.count {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} to {:?}",
                self.dims, dims
            )));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }
}

pub(crate) fn checked_count(dims: &[usize]) -> Result<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| Error::DimOverflow(format!("{dims:?}")))
    })
}

/// Bit-sliced trit vector: one plane marks +1 positions, the other -1.
///
/// This is the shape of the hardware datapath: a multiplier array is an
/// AND/OR network over the planes and the popcount tree counts the two
/// product-code bit planes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct TritPlanes {
    len: usize,
    pos: Vec<u64>,
    neg: Vec<u64>,
}

impl TritPlanes {
    pub fn zeros(len: usize) -> Self {
        let words = len.div_ceil(64);
        Self {
            len,
            pos: vec![0; words],
            neg: vec![0; words],
        }
    }

    pub fn from_trits(trits: &[Trit]) -> Self {
        let mut planes = Self::zeros(trits.len());
        for (i, &t) in trits.iter().enumerate() {
            planes.set(i, t);
        }
        planes
    }

    pub fn from_words(len: usize, pos: Vec<u64>, neg: Vec<u64>) -> Result<Self> {
        let words = len.div_ceil(64);
        if pos.len() != words || neg.len() != words {
            return Err(Error::Shape(format!("{len} trits need {words} words per plane")));
        }
        if pos.iter().zip(&neg).any(|(p, n)| p & n != 0) {
            return Err(Error::Format("trit set both +1 and -1".into()));
        }
        Ok(Self { len, pos, neg })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pos_words(&self) -> &[u64] {
        &self.pos
    }

    pub fn neg_words(&self) -> &[u64] {
        &self.neg
    }

    #[inline]
    pub fn get(&self, i: usize) -> Trit {
        let (w, b) = (i / 64, i % 64);
        if self.pos[w] >> b & 1 == 1 {
            Trit::Pos
        } else if self.neg[w] >> b & 1 == 1 {
            Trit::Neg
        } else {
            Trit::Zero
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, t: Trit) {
        let (w, b) = (i / 64, i % 64);
        let mask = 1u64 << b;
        self.pos[w] &= !mask;
        self.neg[w] &= !mask;
        match t {
            Trit::Pos => self.pos[w] |= mask,
            Trit::Neg => self.neg[w] |= mask,
            Trit::Zero => {}
        }
    }

    /// Copy `n` trits from `src[src_off..]` into `self[dst_off..]`.
    pub fn copy_from(&mut self, dst_off: usize, src: &TritPlanes, src_off: usize, n: usize) {
        if dst_off.is_multiple_of(64) && src_off.is_multiple_of(64) && n.is_multiple_of(64) {
            let (d, s, w) = (dst_off / 64, src_off / 64, n / 64);
            self.pos[d..d + w].copy_from_slice(&src.pos[s..s + w]);
            self.neg[d..d + w].copy_from_slice(&src.neg[s..s + w]);
        } else {
            for i in 0..n {
                self.set(dst_off + i, src.get(src_off + i));
            }
        }
    }

    pub fn to_trits(&self) -> Vec<Trit> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Number of nonzero trits.
    pub fn nonzeros(&self) -> u64 {
        self.pos
            .iter()
            .zip(&self.neg)
            .map(|(p, n)| (p | n).count_ones() as u64)
            .sum()
    }

    /// Dot product through the product-code planes: the msb plane holds
    /// +1 products, the lsb plane -1 products.
    #[inline]
    pub fn dot(&self, weights: &TritPlanes) -> i64 {
        debug_assert_eq!(self.len, weights.len);
        let mut acc = 0i64;
        for i in 0..self.pos.len() {
            let (xp, xn) = (self.pos[i], self.neg[i]);
            let (wp, wn) = (weights.pos[i], weights.neg[i]);
            let msb = (xp & wp) | (xn & wn);
            let lsb = (xp & wn) | (xn & wp);
            acc += msb.count_ones() as i64 - lsb.count_ones() as i64;
        }
        acc
    }

    /// Positions where the trit differs from `other`.
    pub fn changed_mask(&self, other: &TritPlanes) -> Vec<u64> {
        self.pos
            .iter()
            .zip(&self.neg)
            .zip(other.pos.iter().zip(&other.neg))
            .map(|((p, n), (op, on))| (p ^ op) | (n ^ on))
            .collect()
    }

    /// Mask of nonzero positions.
    pub fn nonzero_mask(&self) -> Vec<u64> {
        self.pos.iter().zip(&self.neg).map(|(p, n)| p | n).collect()
    }

    /// Elementwise product planes `(+1 plane, -1 plane)`.
    pub fn product(&self, weights: &TritPlanes) -> TritPlanes {
        let pos = (0..self.pos.len())
            .map(|i| (self.pos[i] & weights.pos[i]) | (self.neg[i] & weights.neg[i]))
            .collect();
        let neg = (0..self.pos.len())
            .map(|i| (self.pos[i] & weights.neg[i]) | (self.neg[i] & weights.pos[i]))
            .collect();
        TritPlanes {
            len: self.len,
            pos,
            neg,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(v: i64) -> Trit {
        Trit::new(v).unwrap()
    }

    #[test]
    fn trit_rejects_out_of_range() {
        assert!(matches!(Trit::new(2), Err(Error::InvalidTrit(2))));
        assert!(matches!(Trit::new(-7), Err(Error::InvalidTrit(-7))));
    }

    #[test]
    fn pack5_examples() {
        assert_eq!(pack5([Trit::Zero; 5]), 121);
        assert_eq!(pack5([Trit::Neg; 5]), 0);
        assert_eq!(pack5([t(1), t(0), t(-1), t(0), t(1)]), 194);
    }

    #[test]
    fn unpack5_examples() {
        assert_eq!(unpack5(121).unwrap(), [Trit::Zero; 5]);
        assert_eq!(unpack5(242).unwrap(), [Trit::Pos; 5]);
        assert!(matches!(unpack5(255), Err(Error::InvalidCodeword(255))));
    }

    #[test]
    fn codec_is_bijective() {
        for b in 0u8..243 {
            assert_eq!(pack5(unpack5(b).unwrap()), b);
        }
        for b in 243u8..=255 {
            assert!(unpack5(b).is_err());
        }
        let mut seen = std::collections::HashSet::new();
        for code in 0..243u32 {
            let mut q = [Trit::Zero; 5];
            let mut c = code;
            for slot in q.iter_mut() {
                *slot = Trit::ALL[(c % 3) as usize];
                c /= 3;
            }
            let b = pack5(q);
            assert!(b < 243);
            assert!(seen.insert(b));
            assert_eq!(unpack5(b).unwrap(), q);
        }
    }

    #[test]
    fn product_code_table() {
        assert_eq!(trit_mul(Trit::Pos, Trit::Pos).bits(), 0b10);
        assert_eq!(trit_mul(Trit::Pos, Trit::Neg).bits(), 0b01);
        assert_eq!(trit_mul(Trit::Zero, Trit::Neg).bits(), 0b00);
        for a in Trit::ALL {
            for w in Trit::ALL {
                let code = trit_mul(a, w);
                assert_ne!(code.bits(), 0b11);
                assert_eq!(code.decode().value(), a.value() * w.value());
            }
            assert_eq!(ProductCode::encode(a).decode(), a);
        }
        assert!(ProductCode::from_bits(0b11).is_err());
    }

    #[test]
    fn popcount_examples() {
        assert_eq!(popcount_accumulate(Vec::<ProductCode>::new()), 0);
        let codes = [t(1), t(1), t(-1), t(0)].map(ProductCode::encode);
        assert_eq!(popcount_accumulate(codes), 1);
    }

    #[test]
    fn popcount_matches_dot_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10_000 {
            let n = if trial == 0 { 1152 } else { rng.random_range(0..1300) };
            let a: Vec<Trit> = (0..n).map(|_| Trit::ALL[rng.random_range(0..3)]).collect();
            let w: Vec<Trit> = (0..n).map(|_| Trit::ALL[rng.random_range(0..3)]).collect();
            let oracle: i64 = a.iter().zip(&w).map(|(x, y)| x.value() as i64 * y.value() as i64).sum();
            let codes = a.iter().zip(&w).map(|(&x, &y)| trit_mul(x, y));
            assert_eq!(popcount_accumulate(codes), oracle);
            let planes = TritPlanes::from_trits(&a).dot(&TritPlanes::from_trits(&w));
            assert_eq!(planes, oracle);
        }
    }

    #[test]
    fn thermometer_examples() {
        assert_eq!(binary_thermometer(0, 4).unwrap(), vec![Trit::Neg; 4]);
        assert_eq!(binary_thermometer(4, 4).unwrap(), vec![Trit::Pos; 4]);
        let b = binary_thermometer(110, 128).unwrap();
        assert!(b[..110].iter().all(|&x| x == Trit::Pos));
        assert!(b[110..].iter().all(|&x| x == Trit::Neg));

        let g = ternary_thermometer(110, 128).unwrap();
        assert!(g[..18].iter().all(|&x| x == Trit::Neg));
        assert!(g[18..].iter().all(|&x| x == Trit::Zero));
        assert_eq!(ternary_thermometer(128, 128).unwrap(), vec![Trit::Zero; 128]);
        assert_eq!(ternary_thermometer(256, 128).unwrap(), vec![Trit::Pos; 128]);

        assert!(matches!(binary_thermometer(5, 4), Err(Error::EncodingRange { .. })));
        assert!(matches!(binary_thermometer(-1, 4), Err(Error::EncodingRange { .. })));
        assert!(matches!(ternary_thermometer(9, 4), Err(Error::EncodingRange { .. })));
    }

    #[test]
    fn packed_tensor_density_and_errors() {
        let trits = vec![Trit::Pos; 40];
        let p = PackedTritTensor::from_trits(&[8, 5], &trits).unwrap();
        assert_eq!(p.payload().len(), 8);
        assert!((p.bits_per_trit() - 1.6).abs() < 1e-12);
        assert_eq!(p.to_trits(), trits);

        let odd = PackedTritTensor::from_trits(&[7], &[Trit::Neg; 7]).unwrap();
        assert_eq!(odd.payload().len(), 2);
        assert_eq!(odd.get(6), Trit::Neg);

        assert!(matches!(
            PackedTritTensor::from_payload(&[5], vec![250]),
            Err(Error::InvalidCodeword(250))
        ));
        assert!(matches!(
            PackedTritTensor::from_payload(&[6], vec![1]),
            Err(Error::Truncated { .. })
        ));
    }

    fn arb_trits(max: usize) -> impl Strategy<Value = Vec<Trit>> {
        prop::collection::vec(prop::sample::select(Trit::ALL.to_vec()), 0..max)
    }

    proptest! {
        #[test]
        fn ternary_thermometer_support(m in 1usize..300, frac in 0.0f64..=1.0) {
            let x = (frac * 2.0 * m as f64).round() as i64;
            let g = ternary_thermometer(x, m).unwrap();
            let sign = Trit::signum(x - m as i64);
            let nz: Vec<_> = g.iter().filter(|t| !t.is_zero()).collect();
            prop_assert_eq!(nz.len() as i64, (x - m as i64).abs());
            prop_assert!(nz.iter().all(|&&t| t == sign));
        }

        #[test]
        fn binary_thermometer_monotone(m in 1usize..200, x in 0i64..200) {
            let x = x.min(m as i64 - 1);
            let a = binary_thermometer(x, m).unwrap();
            let b = binary_thermometer(x + 1, m).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!(p == q || (*p == Trit::Neg && *q == Trit::Pos));
            }
        }

        #[test]
        fn packed_roundtrip(trits in arb_trits(300)) {
            let p = PackedTritTensor::from_trits(&[trits.len()], &trits).unwrap();
            prop_assert_eq!(p.payload().len(), trits.len().div_ceil(5));
            prop_assert_eq!(p.to_trits(), trits);
        }

        #[test]
        fn planes_roundtrip(trits in arb_trits(300)) {
            let planes = TritPlanes::from_trits(&trits);
            prop_assert_eq!(planes.to_trits(), trits);
        }
    }
}
