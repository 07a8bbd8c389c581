//! Pixel-to-pixel Hamming statistics and synthetic feature maps with a
//! prescribed mean Hamming distance.
//!
//! Distances are counted on the 2-bit trit code (`00` = 0, `01` = +1,
//! `11` = -1), so a 128-channel pixel is a 256-bit word. A sign flip
//! `+1 <-> -1` changes one bit, `0 <-> -1` two bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::trit::{Trit, TritPlanes};

/// Bits that differ between the trit codes of two pixels.
pub fn hamming_distance(a: &TritPlanes, b: &TritPlanes) -> u64 {
    let (ap, an, bp, bn) = (a.pos_words(), a.neg_words(), b.pos_words(), b.neg_words());
    (0..ap.len())
        .map(|i| {
            // lsb = nonzero, msb = negative
            let lsb = (ap[i] | an[i]) ^ (bp[i] | bn[i]);
            let msb = an[i] ^ bn[i];
            (lsb.count_ones() + msb.count_ones()) as u64
        })
        .sum()
}

/// Mean Hamming distance between consecutive pixels of a stream.
pub fn hamming_stats(stream: &[TritPlanes]) -> Result<f64> {
    if stream.len() < 2 {
        return Err(Error::Undefined("Hamming statistics need at least two pixels".into()));
    }
    let total: u64 = stream.windows(2).map(|p| hamming_distance(&p[0], &p[1])).sum();
    Ok(total as f64 / (stream.len() - 1) as f64)
}

/// Pixels of an `(H, W, C)` map in raster order.
pub fn pixel_stream(fm: &Tensor<Trit>) -> Result<Vec<TritPlanes>> {
    let (_, _, c) = fm.hwc()?;
    Ok(fm.data().chunks(c.max(1)).map(TritPlanes::from_trits).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FmKind {
    /// Sign of the latent: values in {-1, +1}.
    Binary,
    /// Dead-zone quantized latent with this zero fraction.
    Ternary { zero_fraction: f64 },
}

impl FmKind {
    fn dead_zone(self) -> f64 {
        match self {
            FmKind::Binary => 0.0,
            FmKind::Ternary { zero_fraction } => Normal::standard().inverse_cdf((1.0 + zero_fraction) / 2.0),
        }
    }

    fn quantize(self, z: f64, d: f64) -> Trit {
        match self {
            FmKind::Binary => {
                if z >= 0.0 {
                    Trit::Pos
                } else {
                    Trit::Neg
                }
            }
            FmKind::Ternary { .. } => {
                if z >= d {
                    Trit::Pos
                } else if z <= -d {
                    Trit::Neg
                } else {
                    Trit::Zero
                }
            }
        }
    }
}

fn code_bits(a: Trit, b: Trit) -> u32 {
    (a.code2() ^ b.code2()).count_ones()
}

/// Horizontally correlated feature maps: each channel of each row is an
/// AR(1) Gaussian process with lag-one correlation `rho`, quantized per
/// [`FmKind`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticStream {
    pub kind: FmKind,
    pub rho: f64,
}

const CALIBRATION_SAMPLES: usize = 200_000;

impl SyntheticStream {
    /// Expected bits flipped per trit between horizontal neighbors,
    /// estimated on a fixed sample so it is monotone in `rho`.
    fn bits_per_trit(kind: FmKind, rho: f64, sample: &[(f64, f64)]) -> f64 {
        let d = kind.dead_zone();
        let s = (1.0 - rho * rho).max(0.0).sqrt();
        let bits: u64 = sample
            .iter()
            .map(|&(z, e)| code_bits(kind.quantize(z, d), kind.quantize(rho * z + s * e, d)) as u64)
            .sum();
        bits as f64 / sample.len() as f64
    }

    /// Choose `rho` by bisection so the mean distance between
    /// consecutive `channels`-wide pixels is `target` bits.
    pub fn calibrate(kind: FmKind, channels: usize, target: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let sample: Vec<(f64, f64)> = (0..CALIBRATION_SAMPLES)
            .map(|_| (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let per_trit = target / channels as f64;
        let f = |rho: f64| Self::bits_per_trit(kind, rho, &sample);
        let (mut lo, mut hi) = (0.0, 1.0);
        if !(f(hi) <= per_trit && per_trit <= f(lo)) {
            return Err(Error::Undefined(format!(
                "Hamming target {target} unreachable for {channels} channels ({kind:?})"
            )));
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > per_trit {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            kind,
            rho: 0.5 * (lo + hi),
        })
    }

    /// Ternary maps at 66.3% zeros with 33 of 256 bits changing between
    /// neighbors.
    pub fn ternary_reference() -> Result<Self> {
        Self::calibrate(FmKind::Ternary { zero_fraction: 0.663 }, 128, 33.0)
    }

    /// Binary maps with 44 of 256 bits changing between neighbors.
    pub fn binary_reference() -> Result<Self> {
        Self::calibrate(FmKind::Binary, 128, 44.0)
    }

    pub fn generate(&self, rng: &mut impl Rng, dims: (usize, usize, usize)) -> Tensor<Trit> {
        synthetic_feature_map(rng, dims, self.kind, self.rho)
    }
}

pub fn synthetic_feature_map(
    rng: &mut impl Rng,
    (h, w, c): (usize, usize, usize),
    kind: FmKind,
    rho: f64,
) -> Tensor<Trit> {
    let d = kind.dead_zone();
    let s = (1.0 - rho * rho).max(0.0).sqrt();
    let mut data = vec![Trit::Zero; h * w * c];
    let mut z = vec![0.0f64; c];
    for y in 0..h {
        for x in 0..w {
            for (ch, zc) in z.iter_mut().enumerate() {
                let e: f64 = StandardNormal.sample(rng);
                *zc = if x == 0 { e } else { rho * *zc + s * e };
                data[(y * w + x) * c + ch] = kind.quantize(*zc, d);
            }
        }
    }
    Tensor::new(&[h, w, c], data).expect("consistent dims")
}
