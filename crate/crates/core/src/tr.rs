//! Tensor-ring cores, the contraction map from cores to a full tensor, gauge
//! transformations, and seeded random cores.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::tensor::{pi, DenseTensor};

/// A periodic chain of third-order cores `u^i` of shape `r_i x n_i x r_{i+1}`
/// with `r_{d+1} = r_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrCores {
    cores: Vec<DenseTensor>,
}

impl TrCores {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        let d = cores.len();
        if d < 2 {
            return Err(domain!("a tensor ring needs at least 2 cores, got {d}"));
        }
        for (i, c) in cores.iter().enumerate() {
            if c.order() != 3 {
                return Err(domain!(
                    "core {} has order {}, expected 3",
                    i + 1,
                    c.order()
                ));
            }
        }
        for i in 0..d {
            let right = cores[i].dims()[2];
            let left = cores[(i + 1) % d].dims()[0];
            if right != left {
                return Err(domain!(
                    "core {} has right rank {right} but core {} has left rank {left}",
                    i + 1,
                    (i + 1) % d + 1
                ));
            }
        }
        Ok(Self { cores })
    }

    /// All-zero cores with uniform bond dimension `m`.
    pub fn zeros(m: usize, dims: &[usize]) -> Result<Self> {
        let cores = dims
            .iter()
            .map(|&n| DenseTensor::zeros(vec![m, n, m]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    /// Core `u^i` for a 1-based `i`, with periodic wrap.
    pub fn core(&self, i: usize) -> &DenseTensor {
        &self.cores[wrap(i, self.order())]
    }

    pub fn into_cores(self) -> Vec<DenseTensor> {
        self.cores
    }

    /// Replace core `u^i` (1-based). The shape must be unchanged.
    pub fn set_core(&mut self, i: usize, core: DenseTensor) -> Result<()> {
        let slot = wrap(i, self.order());
        if core.dims() != self.cores[slot].dims() {
            return Err(domain!(
                "replacement core {i} has dims {:?}, expected {:?}",
                core.dims(),
                self.cores[slot].dims()
            ));
        }
        self.cores[slot] = core;
        Ok(())
    }

    /// Internal dimensions `r_1..r_d`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[0]).collect()
    }

    /// External dimensions `n_1..n_d`.
    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    pub fn bond_dimension(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(0)
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.cores.iter().map(DenseTensor::len).sum()
    }

    /// Entrywise `a * self + b * other` over every core.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        let cores = self
            .cores
            .iter()
            .zip(&other.cores)
            .map(|(x, y)| x.lincomb(a, y, b))
            .collect::<Result<Vec<_>>>()?;
        if self.order() != other.order() {
            return Err(domain!(
                "ring orders differ: {} vs {}",
                self.order(),
                other.order()
            ));
        }
        Self::new(cores)
    }
}

#[inline]
pub(crate) fn wrap(i: usize, d: usize) -> usize {
    // 1-based periodic index to a 0-based slot
    (i + d - 1) % d
}

/// Open-chain product of cores. For every external multi-index `X` of the
/// chain (lexicographic, first core most significant) holds the matrix
/// `u^a(x_a) u^{a+1}(x_{a+1}) ... u^b(x_b)`, stored row-major.
pub(crate) struct ChainProduct {
    pub rows: usize,
    pub left: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl ChainProduct {
    pub(crate) fn from_core(core: &DenseTensor) -> Self {
        let [left, n, right] = dims3(core);
        let mut data = vec![0.0; n * left * right];
        let v = core.values();
        for a in 0..left {
            for x in 0..n {
                let src = &v[(a * n + x) * right..(a * n + x + 1) * right];
                data[(x * left + a) * right..(x * left + a + 1) * right].copy_from_slice(src);
            }
        }
        Self {
            rows: n,
            left,
            right,
            data,
        }
    }

    /// Append a core on the right: `P(X, x) = P(X) u(x)`.
    pub(crate) fn push(&self, core: &DenseTensor) -> Self {
        let [mid, n, right] = dims3(core);
        debug_assert_eq!(mid, self.right);
        let left = self.left;
        let cv = core.values();
        let mut data = vec![0.0; self.rows * n * left * right];
        for row in 0..self.rows {
            for a in 0..left {
                let old = &self.data[(row * left + a) * mid..(row * left + a + 1) * mid];
                for (b, &s) in old.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    for x in 0..n {
                        let src = &cv[(b * n + x) * right..(b * n + x + 1) * right];
                        let start = (((row * n + x) * left) + a) * right;
                        let dst = &mut data[start..start + right];
                        for (o, &c) in dst.iter_mut().zip(src) {
                            *o += s * c;
                        }
                    }
                }
            }
        }
        Self {
            rows: self.rows * n,
            left,
            right,
            data,
        }
    }

    /// Close the ring with a final core: `trace(P(X) u(x))` for every `(X, x)`.
    pub(crate) fn close(&self, core: &DenseTensor) -> Vec<f64> {
        let [mid, n, right] = dims3(core);
        debug_assert_eq!(mid, self.right);
        debug_assert_eq!(right, self.left);
        let cv = core.values();
        let mut out = vec![0.0; self.rows * n];
        for row in 0..self.rows {
            let block = &self.data[row * self.left * mid..(row + 1) * self.left * mid];
            for x in 0..n {
                let mut acc = 0.0;
                for a in 0..self.left {
                    for b in 0..mid {
                        acc += block[a * mid + b] * cv[(b * n + x) * right + a];
                    }
                }
                out[row * n + x] = acc;
            }
        }
        out
    }
}

pub(crate) fn chain_product(chain: &[&DenseTensor]) -> Result<ChainProduct> {
    let (first, rest) = chain
        .split_first()
        .ok_or_else(|| domain!("empty core chain"))?;
    let mut acc = ChainProduct::from_core(first);
    for (pos, core) in rest.iter().enumerate() {
        if core.dims()[0] != acc.right {
            return Err(domain!(
                "chain mismatch at link {}: right rank {} vs left rank {}",
                pos + 1,
                acc.right,
                core.dims()[0]
            ));
        }
        acc = acc.push(core);
    }
    Ok(acc)
}

#[inline]
pub(crate) fn dims3(core: &DenseTensor) -> [usize; 3] {
    let d = core.dims();
    [d[0], d[1], d[2]]
}

/// The full tensor represented by the ring.
///
/// Contracts left to right while keeping the `(n_1...n_j) x r_1 x r_{j+1}`
/// boundary, then closes with a trace against the last core, so the cost is
/// polynomial in the bond dimension.
pub fn tau(u: &TrCores) -> DenseTensor {
    let cores = u.cores();
    let (last, head) = cores.split_last().expect("ring has at least 2 cores");
    let chain: Vec<&DenseTensor> = head.iter().collect();
    let values = chain_product(&chain)
        .expect("validated ring chains cyclically")
        .close(last);
    DenseTensor::new(u.dims(), values).expect("contraction shape matches external dims")
}

/// One entry of the ring tensor: `trace(u^1(x_1) ... u^d(x_d))`, 1-based `x`.
pub fn tau_entry(u: &TrCores, x: &[usize]) -> Result<f64> {
    let dims = u.dims();
    pi(x, &dims)?;
    let cores = u.cores();
    let r1 = cores[0].dims()[0];
    // running product, r_1 x r_{j+1}, row-major
    let mut acc = slice_matrix(&cores[0], x[0] - 1);
    let mut cols = cores[0].dims()[2];
    for (core, &xi) in cores.iter().zip(x).skip(1) {
        let s = slice_matrix(core, xi - 1);
        let next_cols = core.dims()[2];
        let mut next = vec![0.0; r1 * next_cols];
        for a in 0..r1 {
            for b in 0..cols {
                let v = acc[a * cols + b];
                if v == 0.0 {
                    continue;
                }
                for c in 0..next_cols {
                    next[a * next_cols + c] += v * s[b * next_cols + c];
                }
            }
        }
        acc = next;
        cols = next_cols;
    }
    Ok((0..r1).map(|a| acc[a * cols + a]).sum())
}

/// Slice `u(:, x, :)` (0-based `x`) as a row-major matrix.
pub(crate) fn slice_matrix(core: &DenseTensor, x: usize) -> Vec<f64> {
    let [left, n, right] = dims3(core);
    let v = core.values();
    let mut out = Vec::with_capacity(left * right);
    for a in 0..left {
        out.extend_from_slice(&v[(a * n + x) * right..(a * n + x + 1) * right]);
    }
    out
}

/// Largest absolute entry over every core.
pub fn max_norm(u: &TrCores) -> f64 {
    u.cores()
        .iter()
        .map(DenseTensor::max_abs)
        .fold(0.0, f64::max)
}

/// Largest absolute entry among the last external slices `v^j(:, n, :)`.
/// All external dimensions must share the same `n`.
pub fn max_norm_slice_n(v: &TrCores) -> Result<f64> {
    let dims = v.dims();
    let n = dims[0];
    if dims.iter().any(|&m| m != n) {
        return Err(domain!("external dims must be uniform, got {dims:?}"));
    }
    Ok(v.cores()
        .iter()
        .map(|c| {
            slice_matrix(c, n - 1)
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()))
        })
        .fold(0.0, f64::max))
}

/// Relative threshold on `sigma_min / sigma_max` below which a gauge matrix
/// counts as singular.
pub const GAUGE_SINGULAR_TOL: f64 = 1e-10;

/// A tuple of invertible matrices `(A_1, ..., A_d)` acting on the bonds.
#[derive(Debug, Clone)]
pub struct GaugeTuple {
    matrices: Vec<Mat<f64>>,
    inverses: Vec<Mat<f64>>,
}

impl GaugeTuple {
    pub fn new(matrices: Vec<Mat<f64>>) -> Result<Self> {
        let mut inverses = Vec::with_capacity(matrices.len());
        for (i, a) in matrices.iter().enumerate() {
            if a.nrows() != a.ncols() {
                return Err(domain!(
                    "gauge matrix {} is {}x{}",
                    i + 1,
                    a.nrows(),
                    a.ncols()
                ));
            }
            inverses.push(
                checked_inverse(a.as_ref(), GAUGE_SINGULAR_TOL)
                    .map_err(|e| domain!("gauge matrix {}: {e}", i + 1))?,
            );
        }
        Ok(Self { matrices, inverses })
    }

    pub fn identity(ranks: &[usize]) -> Self {
        let matrices: Vec<_> = ranks.iter().map(|&r| Mat::<f64>::identity(r, r)).collect();
        Self {
            inverses: matrices.clone(),
            matrices,
        }
    }

    pub fn matrices(&self) -> &[Mat<f64>] {
        &self.matrices
    }

    /// The tuple of inverse matrices, itself a gauge.
    pub fn inverse(&self) -> Self {
        Self {
            matrices: self.inverses.clone(),
            inverses: self.matrices.clone(),
        }
    }
}

/// Inverse through the SVD, refusing matrices with
/// `sigma_min <= tol * sigma_max`.
fn checked_inverse(a: faer::MatRef<'_, f64>, tol: f64) -> std::result::Result<Mat<f64>, String> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let svd = a.svd().map_err(|e| format!("svd failed: {e:?}"))?;
    let s = svd.S().column_vector();
    let smax = s[0];
    let smin = s[n - 1];
    if smin.is_nan() || smin <= tol * smax {
        return Err(format!("singular (sigma_min {smin:e}, sigma_max {smax:e})"));
    }
    let u = svd.U();
    let v = svd.V();
    Ok(Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * u[(j, k)] / s[k]).sum()
    }))
}

/// Gauge action: `v^i(x) = A_i u^i(x) A_{i+1}^{-1}` with `A_{d+1} = A_1`.
pub fn gauge_transform(u: &TrCores, gauge: &GaugeTuple) -> Result<TrCores> {
    let d = u.order();
    if gauge.matrices.len() != d {
        return Err(domain!(
            "gauge has {} matrices for a ring of order {d}",
            gauge.matrices.len()
        ));
    }
    let ranks = u.ranks();
    for (i, (a, &r)) in gauge.matrices.iter().zip(&ranks).enumerate() {
        if a.nrows() != r {
            return Err(domain!(
                "gauge matrix {} is {}x{}, bond is {r}",
                i + 1,
                a.nrows(),
                a.ncols()
            ));
        }
    }
    let mut cores = Vec::with_capacity(d);
    for i in 0..d {
        let core = &u.cores()[i];
        let [left, n, right] = dims3(core);
        let a = &gauge.matrices[i];
        let b_inv = &gauge.inverses[(i + 1) % d];
        let mut out = DenseTensor::zeros(vec![left, n, right])?;
        for x in 0..n {
            let s = Mat::from_fn(left, right, |p, q| core.values()[(p * n + x) * right + q]);
            let t = a * &s * b_inv;
            let ov = out.values_mut();
            for p in 0..left {
                for q in 0..right {
                    ov[(p * n + x) * right + q] = t[(p, q)];
                }
            }
        }
        cores.push(out);
    }
    TrCores::new(cores)
}

fn gaussian_cores(
    m: usize,
    dims: &[usize],
    seed: u64,
    mut keep: impl FnMut(usize) -> bool,
) -> Result<TrCores> {
    if m < 1 {
        return Err(domain!("bond dimension must be at least 1"));
    }
    if dims.len() < 2 {
        return Err(domain!("a tensor ring needs at least 2 cores"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut cores = Vec::with_capacity(dims.len());
    for &n in dims {
        let mut core = DenseTensor::zeros(vec![m, n, m])?;
        for (k, v) in core.values_mut().iter_mut().enumerate() {
            let x = (k / m) % n;
            if keep(x) {
                *v = rng.sample(StandardNormal);
            }
        }
        cores.push(core);
    }
    TrCores::new(cores)
}

/// Cores of uniform bond dimension `m` whose entries are i.i.d. standard
/// normal.
///
/// The stream is ChaCha20 seeded with `seed_from_u64(seed)`; entries are drawn
/// core by core in storage order, normals via the ziggurat sampler of
/// `rand_distr::StandardNormal`. Identical `(seed, m, dims)` give identical
/// cores on every platform.
pub fn random_cores(m: usize, dims: &[usize], seed: u64) -> Result<TrCores> {
    gaussian_cores(m, dims, seed, |_| true)
}

/// Random cores of bond dimension `r` restricted to the subspace where every
/// fiber vanishes at external positions beyond `r^2`. Draw order matches
/// [`random_cores`], skipping the padded positions, so with `n_i == r^2` both
/// functions return the same cores for the same seed.
pub fn random_w_cores(r: usize, dims: &[usize], seed: u64) -> Result<TrCores> {
    let r2 = r * r;
    if let Some(&n) = dims.iter().find(|&&n| n < r2) {
        return Err(domain!("external dimension {n} is below r^2 = {r2}"));
    }
    gaussian_cores(r, dims, seed, |x| x < r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::fnorm;

    /// Explicit sum over every bond index tuple `(k_1..k_d)` of the outer
    /// products of core fibers; exponential, test-only.
    fn tau_brute_force(u: &TrCores) -> DenseTensor {
        let d = u.order();
        let ranks = u.ranks();
        let dims = u.dims();
        DenseTensor::from_fn(dims.clone(), |x| {
            let mut total = 0.0;
            let mut k = vec![0usize; d];
            loop {
                let mut prod = 1.0;
                for i in 0..d {
                    prod *= u.cores()[i].at0(&[k[i], x[i] - 1, k[(i + 1) % d]]);
                }
                total += prod;
                if !crate::tensor::next_index(&mut k, &ranks) {
                    break;
                }
            }
            total
        })
        .unwrap()
    }

    #[test]
    fn zero_cores_give_zero_tensor() {
        let u = TrCores::zeros(3, &[2, 3, 4]).unwrap();
        assert!(tau(&u).is_zero());
        assert_eq!(tau_entry(&u, &[2, 3, 4]).unwrap(), 0.0);
        assert_eq!(max_norm(&u), 0.0);
        assert_eq!(
            max_norm_slice_n(&TrCores::zeros(2, &[3, 3, 3]).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn tau_matches_brute_force_d3() {
        let u = random_cores(2, &[3, 3, 3], 11).unwrap();
        let fast = tau(&u);
        let slow = tau_brute_force(&u);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn tau_matches_brute_force_mixed_ranks() {
        let cores = vec![
            DenseTensor::from_fn(vec![2, 3, 3], |i| {
                (i[0] * 7 + i[1] * 3 + i[2]) as f64 % 5.0 - 2.0
            })
            .unwrap(),
            DenseTensor::from_fn(vec![3, 2, 1], |i| (i[0] + 2 * i[1] * i[2]) as f64 * 0.5).unwrap(),
            DenseTensor::from_fn(vec![1, 4, 2], |i| (i[1] as f64) - (i[2] as f64) * 1.5).unwrap(),
        ];
        let u = TrCores::new(cores).unwrap();
        let fast = tau(&u);
        let slow = tau_brute_force(&u);
        assert_eq!(fast.dims(), &[3, 2, 4]);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn tau_entry_agrees_with_tau() {
        let u = random_cores(3, &[4, 2, 3, 2], 5).unwrap();
        let t = tau(&u);
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..100 {
            let x: Vec<usize> = u.dims().iter().map(|&n| rng.random_range(1..=n)).collect();
            let e = tau_entry(&u, &x).unwrap();
            assert!((e - t.get(&x).unwrap()).abs() < 1e-12);
        }
        assert!(tau_entry(&u, &[5, 1, 1, 1]).is_err());
    }

    #[test]
    fn ring_validation() {
        let a = DenseTensor::zeros(vec![2, 3, 2]).unwrap();
        let b = DenseTensor::zeros(vec![3, 3, 2]).unwrap();
        assert!(TrCores::new(vec![a.clone()]).is_err());
        assert!(TrCores::new(vec![a.clone(), b]).is_err());
        assert!(TrCores::new(vec![a.clone(), DenseTensor::zeros(vec![2, 2]).unwrap()]).is_err());
        assert!(TrCores::new(vec![a.clone(), a]).is_ok());
    }

    #[test]
    fn identity_gauge_is_noop() {
        let u = random_cores(2, &[3, 4, 2], 1).unwrap();
        let v = gauge_transform(&u, &GaugeTuple::identity(&u.ranks())).unwrap();
        for (a, b) in u.cores().iter().zip(v.cores()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    fn well_conditioned(r: usize, seed: u64) -> Mat<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Mat::from_fn(r, r, |i, j| {
            let noise: f64 = rng.random_range(-0.3..0.3);
            if i == j {
                1.0 + noise
            } else {
                noise
            }
        })
    }

    #[test]
    fn gauge_preserves_tau_and_inverts() {
        let u = random_cores(2, &[4, 4, 4], 3).unwrap();
        let g = GaugeTuple::new((0..3).map(|s| well_conditioned(2, s)).collect()).unwrap();
        let v = gauge_transform(&u, &g).unwrap();
        let tu = tau(&u);
        let diff = fnorm(&tau(&v).sub(&tu).unwrap());
        assert!(diff <= 1e-9 * fnorm(&tu));
        let back = gauge_transform(&v, &g.inverse()).unwrap();
        for (a, b) in u.cores().iter().zip(back.cores()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn singular_gauge_rejected() {
        let s = Mat::from_fn(2, 2, |i, _| i as f64 + 1.0);
        assert!(GaugeTuple::new(vec![s, Mat::identity(2, 2)]).is_err());
        let rect = Mat::<f64>::zeros(2, 3);
        assert!(GaugeTuple::new(vec![rect]).is_err());
        let u = random_cores(2, &[2, 2, 2], 0).unwrap();
        assert!(gauge_transform(&u, &GaugeTuple::identity(&[2, 2])).is_err());
        assert!(gauge_transform(&u, &GaugeTuple::identity(&[3, 3, 3])).is_err());
    }

    #[test]
    fn max_norm_slices() {
        let mut u = TrCores::zeros(2, &[3, 3, 3]).unwrap();
        let mut core = u.core(2).clone();
        core.set(&[1, 3, 2], 0.3).unwrap();
        core.set(&[2, 1, 1], -0.7).unwrap();
        u.set_core(2, core).unwrap();
        assert_eq!(max_norm_slice_n(&u).unwrap(), 0.3);
        assert_eq!(max_norm(&u), 0.7);
        let uneven = TrCores::zeros(2, &[3, 4, 3]).unwrap();
        assert!(max_norm_slice_n(&uneven).is_err());
    }

    #[test]
    fn scaling_a_core_scales_max_norm() {
        let u = random_cores(2, &[3, 3, 3], 8).unwrap();
        let base = max_norm(&u);
        let argmax_core = u.cores().iter().position(|c| c.max_abs() == base).unwrap();
        let mut v = u.clone();
        v.set_core(argmax_core + 1, u.cores()[argmax_core].scaled(-2.5))
            .unwrap();
        assert!((max_norm(&v) - 2.5 * base).abs() < 1e-15);
        let mut w = u.clone();
        let other = (argmax_core + 1) % 3;
        w.set_core(other + 1, u.cores()[other].scaled(0.5)).unwrap();
        assert!(max_norm(&w) <= base);
    }

    #[test]
    fn random_generation_is_seeded() {
        let a = random_cores(3, &[2, 4, 3], 42).unwrap();
        let b = random_cores(3, &[2, 4, 3], 42).unwrap();
        let c = random_cores(3, &[2, 4, 3], 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_entries_are_centered() {
        // 5 * 10 * 4000 * ... ; just draw enough cores to reach 1e5 entries
        let u = random_cores(10, &[500, 500], 2024).unwrap();
        let all: Vec<f64> = u.cores().iter().flat_map(|c| c.values().to_vec()).collect();
        assert_eq!(all.len(), 100_000);
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / all.len() as f64;
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn w_cores_are_padded_with_zeros() {
        let w = random_w_cores(2, &[5, 5, 5], 4).unwrap();
        for core in w.cores() {
            for k in 1..=2 {
                for kp in 1..=2 {
                    assert_eq!(core.get(&[k, 5, kp]).unwrap(), 0.0);
                    assert_ne!(core.get(&[k, 4, kp]).unwrap(), 0.0);
                }
            }
        }
        let t = tau(&w);
        for k in 1..=t.len() {
            let x = crate::tensor::pi_inv(k, t.dims()).unwrap();
            if x.iter().any(|&xi| xi >= 5) {
                assert_eq!(t.values()[k - 1], 0.0);
            }
        }
        assert_eq!(
            random_w_cores(2, &[4, 4, 4], 9).unwrap(),
            random_cores(2, &[4, 4, 4], 9).unwrap()
        );
        assert!(random_w_cores(3, &[9, 8, 9], 0).is_err());
    }

    #[test]
    fn tau_is_multilinear() {
        let u = random_cores(2, &[3, 2, 3], 1).unwrap();
        let alt = random_cores(2, &[3, 2, 3], 2).unwrap();
        let (a, b) = (0.7, -1.3);
        for i in 1..=3 {
            let mut mixed = u.clone();
            mixed
                .set_core(i, u.core(i).lincomb(a, alt.core(i), b).unwrap())
                .unwrap();
            let mut swapped = u.clone();
            swapped.set_core(i, alt.core(i).clone()).unwrap();
            let lhs = tau(&mixed);
            let rhs = tau(&u).lincomb(a, &tau(&swapped), b).unwrap();
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
