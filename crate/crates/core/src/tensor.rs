//! Dense real tensors stored in lexicographic (first index most significant)
//! order, together with the mixed-radix index maps used by every unfolding.
//!
//! Indices at this API boundary are 1-based. Internally everything is a
//! 0-based flat offset.

use crate::error::{domain, Result};

/// Lexicographic position of `indices` in a mixed-radix grid.
///
/// Both the input tuple and the returned position are 1-based:
/// `1 + sum_i (indices[i] - 1) * prod_{j > i} radixes[j]`.
pub fn pi(indices: &[usize], radixes: &[usize]) -> Result<usize> {
    if indices.len() != radixes.len() {
        return Err(domain!(
            "index tuple has length {} but {} radixes were given",
            indices.len(),
            radixes.len()
        ));
    }
    let mut linear = 0usize;
    for (pos, (&k, &radix)) in indices.iter().zip(radixes).enumerate() {
        if k < 1 || k > radix {
            return Err(domain!("index {k} at position {pos} outside 1..={radix}"));
        }
        linear = linear * radix + (k - 1);
    }
    Ok(linear + 1)
}

/// Inverse of [`pi`].
pub fn pi_inv(linear: usize, radixes: &[usize]) -> Result<Vec<usize>> {
    let total: usize = radixes.iter().product();
    if linear < 1 || linear > total {
        return Err(domain!("linear index {linear} outside 1..={total}"));
    }
    let mut rest = linear - 1;
    let mut out = vec![0; radixes.len()];
    for (slot, &radix) in out.iter_mut().zip(radixes).rev() {
        *slot = rest % radix + 1;
        rest /= radix;
    }
    Ok(out)
}

/// 0-based offset of a 0-based multi-index; no bounds checks.
#[inline]
pub(crate) fn offset0(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// Advance a 0-based odometer in lexicographic order. Returns false once it
/// wraps back to all zeros.
#[inline]
pub(crate) fn next_index(idx: &mut [usize], dims: &[usize]) -> bool {
    for axis in (0..idx.len()).rev() {
        idx[axis] += 1;
        if idx[axis] < dims[axis] {
            return true;
        }
        idx[axis] = 0;
    }
    false
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let len: usize = dims.iter().product();
        if values.len() != len {
            return Err(domain!(
                "{} values supplied for dims {:?} (expected {len})",
                values.len(),
                dims
            ));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let len = dims.iter().product();
        Ok(Self {
            dims,
            values: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every 1-based multi-index.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        let mut idx0 = vec![0; t.dims.len()];
        let mut idx1 = vec![1; t.dims.len()];
        for v in t.values.iter_mut() {
            for (one, zero) in idx1.iter_mut().zip(&idx0) {
                *one = zero + 1;
            }
            *v = f(&idx1);
            next_index(&mut idx0, &t.dims);
        }
        Ok(t)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entry at a 1-based multi-index.
    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.values[pi(index, &self.dims)? - 1])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let k = pi(index, &self.dims)? - 1;
        self.values[k] = value;
        Ok(())
    }

    /// Entry at a 0-based multi-index, unchecked beyond slice bounds.
    #[inline]
    pub(crate) fn at0(&self, idx: &[usize]) -> f64 {
        self.values[offset0(idx, &self.dims)]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        same_dims(self, other)?;
        Ok(Self {
            dims: self.dims.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(domain!("tensor order must be at least 1"));
    }
    if let Some(pos) = dims.iter().position(|&n| n == 0) {
        return Err(domain!("dimension {pos} is zero in {dims:?}"));
    }
    Ok(())
}

fn same_dims(x: &DenseTensor, y: &DenseTensor) -> Result<()> {
    if x.dims != y.dims {
        return Err(domain!("dimension mismatch: {:?} vs {:?}", x.dims, y.dims));
    }
    Ok(())
}

pub fn inner(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    same_dims(x, y)?;
    Ok(x.values.iter().zip(&y.values).map(|(a, b)| a * b).sum())
}

pub fn fnorm(x: &DenseTensor) -> f64 {
    x.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Tensor product; the result has dims `x.dims ++ y.dims`.
pub fn outer(x: &DenseTensor, y: &DenseTensor) -> DenseTensor {
    let mut dims = x.dims.clone();
    dims.extend_from_slice(&y.dims);
    let mut values = Vec::with_capacity(x.len() * y.len());
    for &a in &x.values {
        values.extend(y.values.iter().map(|b| a * b));
    }
    DenseTensor { dims, values }
}

/// Outer product of a list of vectors, `v_1 ⊗ v_2 ⊗ ... ⊗ v_d`.
pub fn outer_vectors(vectors: &[&[f64]]) -> Result<DenseTensor> {
    let mut iter = vectors.iter();
    let first = iter.next().ok_or_else(|| domain!("no vectors given"))?;
    let mut acc = DenseTensor::new(vec![first.len()], first.to_vec())?;
    for v in iter {
        acc = outer(&acc, &DenseTensor::new(vec![v.len()], v.to_vec())?);
    }
    Ok(acc)
}

/// Unit vector `e_j` of length `n` (1-based `j`), as an order-1 tensor.
pub fn indicator(j: usize, n: usize) -> Result<DenseTensor> {
    if j < 1 || j > n {
        return Err(domain!("indicator position {j} outside 1..={n}"));
    }
    let mut values = vec![0.0; n];
    values[j - 1] = 1.0;
    DenseTensor::new(vec![n], values)
}
