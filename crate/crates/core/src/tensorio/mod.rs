//! Real-valued tensors and their on-disk interchange.
//!
//! Tensors are stored as NPY v1.0 files (little-endian `f4`/`f8`, C order,
//! rank 2 to 4). Collections of tensors are described by a JSON manifest.

mod manifest;
mod npy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use manifest::{load_manifest, write_manifest, DatasetManifest, ItemKind, ManifestItem};
pub use npy::{read_npy, read_tensor, write_npy, write_tensor};

/// Element type of a tensor as stored on disk.
///
/// Values are always held as `f64` in memory; an `F32` tensor only holds
/// values that are exactly representable in single precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// A dense, row-major array of rank 2, 3 or 4 whose spatial axes are the
/// last two.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    dtype: DType,
}

impl Tensor {
    /// Creates a 64-bit tensor, validating rank, shape and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::with_dtype(shape, data, DType::F64)
    }

    /// Creates a tensor of the given dtype. For `F32` the values are rounded
    /// to single precision.
    pub fn with_dtype(shape: Vec<usize>, mut data: Vec<f64>, dtype: DType) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at flat index {pos}")));
        }
        if dtype == DType::F32 {
            for v in &mut data {
                *v = *v as f32 as f64;
            }
            if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "value at flat index {pos} overflows f32"
                )));
            }
        }
        Ok(Tensor { shape, data, dtype })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![0.0; len])
    }

    /// Builds a square `n`×`n` image from a function of `(row, col)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self::new(vec![n, n], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn height(&self) -> usize {
        self.shape[self.rank() - 2]
    }

    pub fn width(&self) -> usize {
        self.shape[self.rank() - 1]
    }

    /// Number of `height`×`width` planes held by the tensor.
    pub fn plane_count(&self) -> usize {
        self.shape[..self.rank() - 2].iter().product()
    }

    /// Side length of a square rank-2 tensor.
    pub fn square_side(&self) -> Result<usize> {
        if self.rank() != 2 {
            return Err(Error::shape(format!(
                "expected a rank-2 tensor, got shape {:?}",
                self.shape
            )));
        }
        if self.height() != self.width() {
            return Err(Error::shape(format!(
                "expected a square image, got {}x{}",
                self.height(),
                self.width()
            )));
        }
        Ok(self.height())
    }

    /// Copies plane `index` out as a rank-2 tensor.
    pub fn plane(&self, index: usize) -> Tensor {
        let size = self.height() * self.width();
        let data = self.data[index * size..(index + 1) * size].to_vec();
        Tensor {
            shape: vec![self.height(), self.width()],
            data,
            dtype: self.dtype,
        }
    }

    /// All spatial planes in storage order.
    pub fn planes(&self) -> impl Iterator<Item = Tensor> + '_ {
        (0..self.plane_count()).map(move |i| self.plane(i))
    }

    /// Stacks equally shaped rank-2 planes into a rank-3 tensor.
    pub fn stack(planes: &[Tensor]) -> Result<Tensor> {
        let first = planes.first().ok_or(Error::EmptyEnsemble)?;
        if first.rank() != 2 {
            return Err(Error::shape("only rank-2 planes can be stacked"));
        }
        let mut data = Vec::with_capacity(planes.len() * first.data.len());
        for p in planes {
            if p.shape != first.shape {
                return Err(Error::shape(format!(
                    "cannot stack {:?} with {:?}",
                    p.shape, first.shape
                )));
            }
            data.extend_from_slice(&p.data);
        }
        Tensor::with_dtype(
            vec![planes.len(), first.height(), first.width()],
            data,
            first.dtype,
        )
    }

    /// Element of a rank-2 tensor.
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width() + col]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Tensor> {
        Tensor::with_dtype(
            self.shape.clone(),
            self.data.iter().map(|&v| f(v)).collect(),
            self.dtype,
        )
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.data.len() as f64
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if !(2..=4).contains(&shape.len()) {
        return Err(Error::shape(format!(
            "rank must be 2, 3 or 4, got shape {shape:?}"
        )));
    }
    if shape.contains(&0) {
        return Err(Error::shape(format!("zero-sized axis in shape {shape:?}")));
    }
    Ok(())
}
