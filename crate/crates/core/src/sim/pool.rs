//! Streaming pooling unit: a combine register for the current horizontal
//! window and a FIFO of partial results for the windows of the row band.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolOp {
    Max,
    Add,
}

impl PoolOp {
    fn combine(self, a: i64, b: i64) -> i64 {
        match self {
            PoolOp::Max => a.max(b),
            PoolOp::Add => a + b,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PoolUnit {
    op: PoolOp,
    window: (usize, usize),
    register: i64,
    fifo: VecDeque<i64>,
    capacity: usize,
    /// Largest FIFO occupancy seen.
    pub high_water: usize,
}

impl PoolUnit {
    /// A unit for `(ph, pw)` windows over rows of at most `max_width` values.
    pub fn new(op: PoolOp, window: (usize, usize), max_width: usize) -> Self {
        Self {
            op,
            window,
            register: 0,
            fifo: VecDeque::new(),
            capacity: max_width.div_ceil(window.1.max(1)),
            high_water: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn fifo_len(&self) -> usize {
        self.fifo.len()
    }

    pub fn register(&self) -> i64 {
        self.register
    }

    fn push(&mut self, v: i64) -> Result<()> {
        if self.fifo.len() == self.capacity {
            return Err(Error::Capacity(format!(
                "pooling FIFO overflow at {} entries",
                self.capacity
            )));
        }
        self.fifo.push_back(v);
        self.high_water = self.high_water.max(self.fifo.len());
        Ok(())
    }

    fn pop(&mut self) -> Result<i64> {
        self.fifo
            .pop_front()
            .ok_or_else(|| Error::Capacity("pooling FIFO underflow".into()))
    }

    /// Feed the value at output position `(y, x)` in raster order. Returns
    /// the completed window value on the last position of a window.
    pub fn update(&mut self, value: i64, y: usize, x: usize) -> Result<Option<i64>> {
        let (ph, pw) = self.window;
        let (r, c) = (y % ph, x % pw);
        self.register = if c == 0 {
            value
        } else {
            self.op.combine(self.register, value)
        };
        if c + 1 < pw {
            return Ok(None);
        }
        let partial = self.register;
        if ph == 1 {
            return Ok(Some(partial));
        }
        if r == 0 {
            self.push(partial)?;
            Ok(None)
        } else {
            let acc = self.op.combine(self.pop()?, partial);
            if r + 1 < ph {
                self.push(acc)?;
                Ok(None)
            } else {
                Ok(Some(acc))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_max() {
        let mut p = PoolUnit::new(PoolOp::Max, (2, 2), 2);
        let vals = [[-1, 0], [1, 0]];
        let mut out = Vec::new();
        for (y, row) in vals.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                out.push(p.update(v, y, x).unwrap());
            }
        }
        assert_eq!(out, vec![None, None, None, Some(1)]);
    }

    #[test]
    fn nine_by_nine_with_three_by_three() {
        let mut p = PoolUnit::new(PoolOp::Add, (3, 3), 9);
        let mut emitted = Vec::new();
        for y in 0..9 {
            for x in 0..9 {
                if let Some(v) = p.update((y * 9 + x) as i64, y, x).unwrap() {
                    emitted.push((y, x, v));
                }
                assert!(p.fifo_len() <= 3);
            }
        }
        assert_eq!(p.high_water, 3);
        assert_eq!(emitted.len(), 9);
        // windows complete on the last row of each band, left to right
        let pos: Vec<_> = emitted.iter().map(|&(y, x, _)| (y, x)).collect();
        assert_eq!(pos[..3], [(2, 2), (2, 5), (2, 8)]);
        let direct: i64 = (0..3).flat_map(|y| (0..3).map(move |x| (y * 9 + x) as i64)).sum();
        assert_eq!(emitted[0].2, direct);
    }

    #[test]
    fn sum_of_ones() {
        let mut p = PoolUnit::new(PoolOp::Add, (4, 4), 4);
        let mut last = None;
        for y in 0..4 {
            for x in 0..4 {
                last = p.update(1, y, x).unwrap();
            }
        }
        assert_eq!(last, Some(16));
    }

    #[test]
    fn overflow_is_capacity_error() {
        let mut p = PoolUnit::new(PoolOp::Max, (2, 2), 2);
        assert!(p.update(0, 0, 0).unwrap().is_none());
        assert!(p.update(0, 0, 1).unwrap().is_none());
        // a second band-start row without the closing row overflows
        assert!(p.update(0, 0, 0).unwrap().is_none());
        assert!(matches!(p.update(0, 0, 1), Err(Error::Capacity(_))));
    }
}
