//! Dense row-major tensors with the channel axis innermost.

use crate::error::{Error, Result};
use crate::trit::{checked_count, PackedTritTensor, Trit};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<E> {
    dims: Vec<usize>,
    data: Vec<E>,
}

impl<E: Copy> Tensor<E> {
    pub fn new(dims: &[usize], data: Vec<E>) -> Result<Self> {
        let count = checked_count(dims)?;
        if count != data.len() {
            return Err(Error::Shape(format!(
                "dims {:?} hold {} values, got {}",
                dims,
                count,
                data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn filled(dims: &[usize], value: E) -> Result<Self> {
        let count = checked_count(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![value; count],
        })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(usize) -> E) -> Result<Self> {
        let count = checked_count(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: (0..count).map(&mut f).collect(),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<E> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    pub fn at(&self, index: &[usize]) -> E {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: E) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        if checked_count(dims)? != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} to {:?}",
                self.dims, dims
            )));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    pub fn map<F: Copy>(&self, f: impl FnMut(E) -> F) -> Tensor<F> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    /// `(H, W, C)` view of a rank-3 tensor.
    pub fn hwc(&self) -> Result<(usize, usize, usize)> {
        match self.dims[..] {
            [h, w, c] => Ok((h, w, c)),
            _ => Err(Error::Shape(format!(
                "expected an (H, W, C) tensor, got dims {:?}",
                self.dims
            ))),
        }
    }
}

pub type TritTensor = Tensor<Trit>;

impl Tensor<Trit> {
    pub fn pack(&self) -> PackedTritTensor {
        PackedTritTensor::from_trits(&self.dims, &self.data).expect("dims match data")
    }

    pub fn unpack(packed: &PackedTritTensor) -> Self {
        Tensor {
            dims: packed.dims().to_vec(),
            data: packed.to_trits(),
        }
    }
}

impl From<&PackedTritTensor> for Tensor<Trit> {
    fn from(p: &PackedTritTensor) -> Self {
        Tensor::unpack(p)
    }
}
