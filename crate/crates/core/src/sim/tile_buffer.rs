//! Feature-map storage and the K-line tile buffer that releases
//! `K x K x N_I` windows.

use crate::compiler::LayerInstr;
use crate::error::{Error, Result};
use crate::network::Padding;
use crate::tensor::Tensor;
use crate::trit::{Trit, TritPlanes};

/// Feature map with one `N_I`-wide trit vector per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pixels: Vec<TritPlanes>,
}

impl FeatureMap {
    pub fn zeros(h: usize, w: usize, c: usize, width: usize) -> Self {
        Self {
            h,
            w,
            c,
            pixels: vec![TritPlanes::zeros(width); h * w],
        }
    }

    /// Load an `(H, W, C)` tensor; channels `C..width` are zero.
    pub fn from_tensor(t: &Tensor<Trit>, width: usize) -> Result<Self> {
        let (h, w, c) = t.hwc()?;
        if c > width {
            return Err(Error::Capacity(format!("{c} channels exceed pixel width {width}")));
        }
        let pixels = t
            .data()
            .chunks(c.max(1))
            .take(h * w)
            .map(|px| {
                let mut p = TritPlanes::zeros(width);
                for (i, &v) in px.iter().enumerate() {
                    p.set(i, v);
                }
                p
            })
            .collect();
        Ok(Self { h, w, c, pixels })
    }

    pub fn to_tensor(&self) -> Tensor<Trit> {
        let mut data = Vec::with_capacity(self.h * self.w * self.c);
        for p in &self.pixels {
            data.extend((0..self.c).map(|i| p.get(i)));
        }
        Tensor::new(&[self.h, self.w, self.c], data).expect("consistent dims")
    }

    pub fn pixel(&self, y: usize, x: usize) -> &TritPlanes {
        &self.pixels[y * self.w + x]
    }

    pub fn set_pixel(&mut self, y: usize, x: usize, p: TritPlanes) {
        self.pixels[y * self.w + x] = p;
    }
}

/// One released window.
#[derive(Clone, Debug)]
pub struct Release {
    /// Center pixel in input coordinates.
    pub center: (usize, usize),
    /// Position in the (unpooled) output map.
    pub out_pos: (usize, usize),
    pub window: TritPlanes,
    /// Input rows loaded into the buffer before this window.
    pub new_lines: Vec<usize>,
    /// First window of an output row.
    pub row_start: bool,
}

#[derive(Clone, Debug)]
pub struct TileBuffer {
    k: usize,
    width: usize,
    h: usize,
    w: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: Padding,
    out: (usize, usize),
    lines: Vec<Option<(usize, Vec<TritPlanes>)>>,
    loaded_hi: Option<usize>,
    next: (usize, usize),
}

impl TileBuffer {
    /// A buffer of `k` lines of `width`-trit pixels for one layer.
    pub fn new(k: usize, width: usize, instr: &LayerInstr) -> Self {
        let (h, w, _) = instr.in_dims;
        Self {
            k,
            width,
            h,
            w,
            kernel: instr.kernel,
            stride: instr.stride,
            padding: instr.padding,
            out: instr.conv_out_dims(),
            lines: vec![None; k],
            loaded_hi: None,
            next: (0, 0),
        }
    }

    pub fn lines_held(&self) -> usize {
        self.lines.iter().filter(|l| l.is_some()).count()
    }

    pub fn output_dims(&self) -> (usize, usize) {
        self.out
    }

    fn center(&self, oy: usize, ox: usize) -> (usize, usize) {
        let (sh, sw) = self.stride;
        match self.padding {
            Padding::Full => (oy * sh, ox * sw),
            Padding::None => (self.kernel.0 / 2 + oy * sh, self.kernel.1 / 2 + ox * sw),
        }
    }

    fn rows_for(&self, cy: usize) -> (usize, usize) {
        let half = self.k / 2;
        (cy.saturating_sub(half), (cy + half).min(self.h - 1))
    }

    /// Rows the first output row needs before its first window.
    pub fn prime_rows(&self) -> usize {
        let (lo, hi) = self.rows_for(self.center(0, 0).0);
        hi + 1 - lo
    }

    /// Release the next window in raster order, loading lines as needed.
    pub fn next_window(&mut self, fm: &FeatureMap) -> Option<Release> {
        let (oy, ox) = self.next;
        if oy >= self.out.0 {
            return None;
        }
        let (cy, cx) = self.center(oy, ox);
        let mut new_lines = Vec::new();
        if ox == 0 {
            let (lo, hi) = self.rows_for(cy);
            let start = self.loaded_hi.map_or(lo, |h| (h + 1).max(lo));
            for r in start..=hi {
                let row: Vec<TritPlanes> = (0..self.w).map(|x| fm.pixel(r, x).clone()).collect();
                self.lines[r % self.k] = Some((r, row));
                new_lines.push(r);
            }
            if hi + 1 > start {
                self.loaded_hi = Some(hi);
            }
        }

        let half = self.k as i64 / 2;
        let mut window = TritPlanes::zeros(self.k * self.k * self.width);
        for ky in 0..self.k {
            let iy = cy as i64 + ky as i64 - half;
            if iy < 0 || iy >= self.h as i64 {
                continue;
            }
            let (row_idx, row) = self.lines[iy as usize % self.k]
                .as_ref()
                .expect("needed line is resident");
            debug_assert_eq!(*row_idx, iy as usize);
            for kx in 0..self.k {
                let ix = cx as i64 + kx as i64 - half;
                if ix < 0 || ix >= self.w as i64 {
                    continue;
                }
                let dst = (ky * self.k + kx) * self.width;
                window.copy_from(dst, &row[ix as usize], 0, self.width);
            }
        }

        self.next = if ox + 1 < self.out.1 { (oy, ox + 1) } else { (oy + 1, 0) };
        Some(Release {
            center: (cy, cx),
            out_pos: (oy, ox),
            window,
            new_lines,
            row_start: ox == 0,
        })
    }
}

/// The window of a dense layer: the row-major flattened input, zero-padded
/// to `window_len` trits.
pub fn dense_window(fm: &FeatureMap, window_len: usize) -> TritPlanes {
    let mut window = TritPlanes::zeros(window_len);
    let mut i = 0;
    for y in 0..fm.h {
        for x in 0..fm.w {
            let p = fm.pixel(y, x);
            for ch in 0..fm.c {
                window.set(i, p.get(ch));
                i += 1;
            }
        }
    }
    window
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::Pooling;

    fn instr(h: usize, w: usize, stride: (usize, usize), padding: Padding) -> LayerInstr {
        LayerInstr {
            in_dims: (h, w, 1),
            out_ch: 1,
            kernel: (3, 3),
            stride,
            padding,
            pooling: Pooling::None,
            weight_base: 0,
            threshold_base: 0,
            dense_inputs: 0,
            depthwise: false,
        }
    }

    fn ones(h: usize, w: usize) -> FeatureMap {
        let t = Tensor::filled(&[h, w, 1], Trit::Pos).unwrap();
        FeatureMap::from_tensor(&t, 1).unwrap()
    }

    fn drain(tb: &mut TileBuffer, fm: &FeatureMap) -> Vec<Release> {
        std::iter::from_fn(|| tb.next_window(fm)).collect()
    }

    #[test]
    fn padded_three_by_three() {
        let fm = ones(3, 3);
        let mut tb = TileBuffer::new(3, 1, &instr(3, 3, (1, 1), Padding::Full));
        let r = drain(&mut tb, &fm);
        assert_eq!(r.len(), 9);
        assert_eq!(r[0].window.nonzeros(), 4);
        assert_eq!(9 - r[0].window.nonzeros(), 5);
        assert_eq!(r[4].window.nonzeros(), 9);
        assert!(tb.lines_held() <= 3);
    }

    #[test]
    fn unpadded_three_by_three() {
        let fm = ones(3, 3);
        let mut tb = TileBuffer::new(3, 1, &instr(3, 3, (1, 1), Padding::None));
        let r = drain(&mut tb, &fm);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].center, (1, 1));
        assert_eq!(r[0].window.nonzeros(), 9);
    }

    #[test]
    fn strided_centers() {
        let fm = ones(4, 4);
        let mut tb = TileBuffer::new(3, 1, &instr(4, 4, (2, 2), Padding::Full));
        let centers: Vec<_> = drain(&mut tb, &fm).iter().map(|r| r.center).collect();
        assert_eq!(centers, vec![(0, 0), (0, 2), (2, 0), (2, 2)]);
    }

    #[test]
    fn each_line_loads_once() {
        let fm = ones(32, 32);
        let mut tb = TileBuffer::new(3, 1, &instr(32, 32, (1, 1), Padding::Full));
        assert_eq!(tb.prime_rows(), 2);
        let r = drain(&mut tb, &fm);
        let loaded: Vec<usize> = r.iter().flat_map(|x| x.new_lines.clone()).collect();
        assert_eq!(loaded, (0..32).collect::<Vec<_>>());
        assert_eq!(r[0].new_lines, vec![0, 1]);
    }
}
