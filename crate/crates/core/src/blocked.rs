//! Block-partitioned parameter vectors.
//!
//! A [`BlockedVector`] is a dense real vector partitioned into ordered
//! blocks, the layout the blockwise kernels operate on. All arithmetic is
//! blockwise-consistent: `dot(x, y)` equals the sum over blocks of the
//! per-block dot products, accumulated in block order so results are
//! reproducible.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BlockedVector {
    blocks: Vec<Vec<f64>>,
}

impl BlockedVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        BlockedVector { blocks }
    }

    /// Single-block vector.
    pub fn dense(values: Vec<f64>) -> Self {
        BlockedVector {
            blocks: vec![values],
        }
    }

    pub fn zeros(block_dims: &[usize]) -> Self {
        BlockedVector {
            blocks: block_dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn zeros_like(other: &BlockedVector) -> Self {
        BlockedVector {
            blocks: other.blocks.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.blocks
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    /// Iterate over all coordinates in block order.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flatten().copied()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.blocks.iter_mut().flatten()
    }

    pub fn same_shape(&self, other: &BlockedVector) -> bool {
        self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a.len() == b.len())
    }

    pub fn check_shape(&self, other: &BlockedVector, context: &'static str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                left: self.total_dim(),
                right: other.total_dim(),
            })
        }
    }

    pub fn dot(&self, other: &BlockedVector) -> f64 {
        debug_assert!(self.same_shape(other));
        let mut acc = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for (x, y) in a.iter().zip(b) {
                acc += x * y;
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in self.iter_mut() {
            *v *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> BlockedVector {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// self += alpha * other, coordinatewise in block order.
    pub fn axpy(&mut self, alpha: f64, other: &BlockedVector) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
    }

    pub fn add(&self, other: &BlockedVector) -> BlockedVector {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &BlockedVector) -> BlockedVector {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Euclidean distance.
    pub fn dist(&self, other: &BlockedVector) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// Flatten to a single Vec in block order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Rebuild from a flat slice with the given block layout.
    pub fn from_flat(block_dims: &[usize], flat: &[f64]) -> Result<Self> {
        let total: usize = block_dims.iter().sum();
        if flat.len() != total {
            return Err(Error::DimensionMismatch {
                context: "from_flat",
                left: flat.len(),
                right: total,
            });
        }
        let mut blocks = Vec::with_capacity(block_dims.len());
        let mut offset = 0;
        for &d in block_dims {
            blocks.push(flat[offset..offset + d].to_vec());
            offset += d;
        }
        Ok(BlockedVector { blocks })
    }
}
