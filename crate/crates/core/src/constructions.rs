//! Explicit targets and cores: the bond-`r+1` target `T0` with its spurious
//! local minimum `u0` at bond `r^(d-1)`, the rotated and weighted variant,
//! and the witness points used to certify unique ALS microsteps.
//!
//! Everything here is built from 0/1 patterns (or their weighted images), so
//! equality checks on these objects are exact.

use crate::error::{domain, Result};
use crate::tensor::{next_index, offset0, DenseTensor};
use crate::tr::TrCores;

/// Default refusal threshold for the memory footprint of `u0`-style cores.
pub const DEFAULT_MEMORY_CAP: usize = 2 << 30;

fn check_spurious_params(d: usize, r: usize, n: usize) -> Result<()> {
    if d < 3 {
        return Err(domain!("order d = {d} must be at least 3"));
    }
    if r < 2 {
        return Err(domain!("r = {r} must be at least 2"));
    }
    if n < r * r + 1 {
        return Err(domain!("n = {n} must be at least r^2 + 1 = {}", r * r + 1));
    }
    Ok(())
}

/// Bytes needed for `d` cores of shape `m x n x m` with `m = r^(d-1)`.
pub fn overparam_core_bytes(d: usize, r: usize, n: usize) -> Option<usize> {
    let m = r.checked_pow(u32::try_from(d - 1).ok()?)?;
    d.checked_mul(m)?
        .checked_mul(m)?
        .checked_mul(n)?
        .checked_mul(8)
}

fn check_memory(d: usize, r: usize, n: usize, cap: usize) -> Result<usize> {
    match overparam_core_bytes(d, r, n) {
        Some(bytes) if bytes <= cap => Ok(r.pow((d - 1) as u32)),
        Some(bytes) => Err(domain!(
            "cores for d={d}, r={r}, n={n} need {bytes} bytes, above the cap of {cap}"
        )),
        None => Err(domain!("core size overflows for d={d}, r={r}, n={n}")),
    }
}

/// `T0 = sum_{k in [r]^d} ⊗_i e_{pi(k_{i+1}, k_i)} + ⊗_i e_n`.
pub fn build_t0(d: usize, r: usize, n: usize) -> Result<DenseTensor> {
    check_spurious_params(d, r, n)?;
    let mut t = ring_pattern_target(d, r, n)?;
    let corner = vec![n - 1; d];
    let k = offset0(&corner, t.dims());
    debug_assert_eq!(t.values()[k], 0.0);
    t.values_mut()[k] = 1.0;
    Ok(t)
}

/// `sum_{k in [r]^d} ⊗_i e_{pi(k_{i+1}, k_i)}`, asserting that no two
/// summands land on the same entry.
fn ring_pattern_target(d: usize, r: usize, n: usize) -> Result<DenseTensor> {
    let dims = vec![n; d];
    let mut t = DenseTensor::zeros(dims.clone())?;
    let mut k = vec![0usize; d];
    let mut x = vec![0usize; d];
    loop {
        for i in 0..d {
            x[i] = k[(i + 1) % d] * r + k[i];
        }
        let pos = offset0(&x, &dims);
        let slot = &mut t.values_mut()[pos];
        if *slot != 0.0 {
            return Err(domain!("index collision at {x:?}"));
        }
        *slot = 1.0;
        if !next_index(&mut k, &vec![r; d]) {
            break;
        }
    }
    Ok(t)
}

/// Cores `u^1..u^{d-1}` of the spurious minimum (shared with the one-loop
/// witness). Core `i` (0-based) holds `e_{pi(p_i, q_i)}` on the fiber
/// `(pi(p), pi(q))` when `p` and `q` agree off position `i`.
fn delta_pattern_core(d: usize, r: usize, i: usize, n: usize) -> Result<DenseTensor> {
    let m = r.pow((d - 1) as u32);
    let mut core = DenseTensor::zeros(vec![m, n, m])?;
    let digits = vec![r; d - 1];
    let mut p = vec![0usize; d - 1];
    loop {
        let row = offset0(&p, &digits);
        let mut q = p.clone();
        for qi in 0..r {
            q[i] = qi;
            let col = offset0(&q, &digits);
            let x = p[i] * r + qi;
            core.values_mut()[(row * n + x) * m + col] = 1.0;
        }
        if !next_index(&mut p, &digits) {
            break;
        }
    }
    Ok(core)
}

/// Core `u^d` of the spurious minimum: `e_{pi(p_1, q_{d-1})}` on fiber
/// `(pi(p), pi(q))` when `p_{l+1} = q_l` for `l = 1..d-2`.
fn shifted_pattern_core(d: usize, r: usize, n: usize) -> Result<DenseTensor> {
    let m = r.pow((d - 1) as u32);
    let mut core = DenseTensor::zeros(vec![m, n, m])?;
    let digits = vec![r; d - 1];
    let mut p = vec![0usize; d - 1];
    let mut q = vec![0usize; d - 1];
    loop {
        let row = offset0(&p, &digits);
        q[..d - 2].copy_from_slice(&p[1..]);
        for last in 0..r {
            q[d - 2] = last;
            let col = offset0(&q, &digits);
            let x = p[0] * r + last;
            core.values_mut()[(row * n + x) * m + col] = 1.0;
        }
        if !next_index(&mut p, &digits) {
            break;
        }
    }
    Ok(core)
}

/// The spurious local minimum `u0` at bond dimension `r^(d-1)`.
pub fn build_u0(d: usize, r: usize, n: usize) -> Result<TrCores> {
    build_u0_with_cap(d, r, n, DEFAULT_MEMORY_CAP)
}

pub fn build_u0_with_cap(d: usize, r: usize, n: usize, cap_bytes: usize) -> Result<TrCores> {
    check_spurious_params(d, r, n)?;
    check_memory(d, r, n, cap_bytes)?;
    let mut cores = (0..d - 1)
        .map(|i| delta_pattern_core(d, r, i, n))
        .collect::<Result<Vec<_>>>()?;
    cores.push(shifted_pattern_core(d, r, n)?);
    TrCores::new(cores)
}

/// The target `T0` together with its spurious local minimum `u0`.
#[derive(Debug, Clone)]
pub struct SpuriousInstance {
    pub target: DenseTensor,
    pub local_min: TrCores,
    pub d: usize,
    pub r: usize,
    pub n: usize,
}

impl SpuriousInstance {
    pub fn new(d: usize, r: usize, n: usize) -> Result<Self> {
        Ok(Self {
            target: build_t0(d, r, n)?,
            local_min: build_u0(d, r, n)?,
            d,
            r,
            n,
        })
    }

    pub fn bond_dimension(&self) -> usize {
        self.r.pow((self.d - 1) as u32)
    }

    /// `⊗_i e_n`, the part of the target the local minimum misses.
    pub fn corner(&self) -> DenseTensor {
        let mut t = DenseTensor::zeros(vec![self.n; self.d]).expect("valid dims");
        let last = t.len() - 1;
        t.values_mut()[last] = 1.0;
        t
    }
}

/// Weights and orthonormal vectors for the rotated/weighted construction.
///
/// `lambdas[i][k]` and `vectors[i][k]` for mode `i` (0-based) and
/// `k = 0..=r^2`; entry `r^2` drives the extra term that the local minimum
/// cannot reach.
#[derive(Debug, Clone)]
pub struct GeneralizedBasis {
    pub lambdas: Vec<Vec<f64>>,
    pub vectors: Vec<Vec<Vec<f64>>>,
}

/// Orthonormality tolerance for [`GeneralizedBasis`] vectors.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

impl GeneralizedBasis {
    /// `lambda == 1`, `g^i_k = e_k` for `k <= r^2` and `e_n` for the corner,
    /// which reproduces `T0` and `u0`.
    pub fn standard(d: usize, r: usize, n: usize) -> Self {
        let count = r * r + 1;
        let vectors = (0..d)
            .map(|_| {
                (0..count)
                    .map(|k| {
                        let hot = if k + 1 == count { n - 1 } else { k };
                        (0..n).map(|x| if x == hot { 1.0 } else { 0.0 }).collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            lambdas: vec![vec![1.0; count]; d],
            vectors,
        }
    }

    fn validate(&self, d: usize, r: usize, n: usize) -> Result<()> {
        let count = r * r + 1;
        if self.lambdas.len() != d || self.vectors.len() != d {
            return Err(domain!(
                "basis must provide weights and vectors for {d} modes"
            ));
        }
        for i in 0..d {
            if self.lambdas[i].len() != count || self.vectors[i].len() != count {
                return Err(domain!("mode {} needs {count} weights and vectors", i + 1));
            }
            if let Some(l) = self.lambdas[i].iter().find(|&&l| l.is_nan() || l <= 0.0) {
                return Err(domain!("weight {l} in mode {} is not positive", i + 1));
            }
            for (a, ga) in self.vectors[i].iter().enumerate() {
                if ga.len() != n {
                    return Err(domain!(
                        "vector {} of mode {} has length {}",
                        a + 1,
                        i + 1,
                        ga.len()
                    ));
                }
                for (b, gb) in self.vectors[i].iter().enumerate().skip(a) {
                    let dot: f64 = ga.iter().zip(gb).map(|(x, y)| x * y).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    if (dot - expect).abs() > ORTHONORMAL_TOL {
                        return Err(domain!(
                            "vectors {} and {} of mode {} are not orthonormal (<g,g> = {dot})",
                            a + 1,
                            b + 1,
                            i + 1
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn scaled_vector(&self, mode: usize, k: usize) -> Vec<f64> {
        let l = self.lambdas[mode][k];
        self.vectors[mode][k].iter().map(|v| l * v).collect()
    }
}

/// Weighted, rotated target and the matching local minimum: every `e_k`
/// (`k <= r^2`) in mode `i` becomes `lambda^i_k g^i_k`, and the corner term
/// becomes `⊗_i lambda^i_{r^2+1} g^i_{r^2+1}`.
pub fn build_generalized_t0(
    d: usize,
    r: usize,
    n: usize,
    basis: &GeneralizedBasis,
) -> Result<(DenseTensor, TrCores)> {
    check_spurious_params(d, r, n)?;
    basis.validate(d, r, n)?;
    let r2 = r * r;
    let dims = vec![n; d];

    let mut target = DenseTensor::zeros(dims.clone())?;
    let mut add_rank_one = |factors: &[Vec<f64>]| {
        let mut x = vec![0usize; d];
        for v in target.values_mut() {
            *v += x
                .iter()
                .enumerate()
                .map(|(i, &xi)| factors[i][xi])
                .product::<f64>();
            next_index(&mut x, &dims);
        }
    };
    let mut k = vec![0usize; d];
    loop {
        let factors: Vec<Vec<f64>> = (0..d)
            .map(|i| basis.scaled_vector(i, k[(i + 1) % d] * r + k[i]))
            .collect();
        add_rank_one(&factors);
        if !next_index(&mut k, &vec![r; d]) {
            break;
        }
    }
    let corner: Vec<Vec<f64>> = (0..d).map(|i| basis.scaled_vector(i, r2)).collect();
    add_rank_one(&corner);

    // substitute fibers of the base local minimum
    let base = build_u0(d, r, n)?;
    let mut cores = Vec::with_capacity(d);
    for (i, core) in base.cores().iter().enumerate() {
        let [left, _, right] = [core.dims()[0], n, core.dims()[2]];
        let mut out = DenseTensor::zeros(vec![left, n, right])?;
        for a in 0..left {
            for c in 0..right {
                let hot = (0..r2).find(|&x| core.values()[(a * n + x) * right + c] != 0.0);
                if let Some(j) = hot {
                    let g = basis.scaled_vector(i, j);
                    for (x, gx) in g.iter().enumerate() {
                        out.values_mut()[(a * n + x) * right + c] = *gx;
                    }
                }
            }
        }
        cores.push(out);
    }
    Ok((target, TrCores::new(cores)?))
}

/// Witness cores at bond `r^(d-1)` that reproduce a target `T = tau(w)`,
/// `w` in the restricted subspace: the first `d-1` cores are the delta
/// pattern of the spurious minimum and the fibers of `u^d` are read off `T`:
/// `u^d(pi(p), :, pi(q)) = T(pi(q_1,p_1), ..., pi(q_{d-1},p_{d-1}), :)`.
pub fn build_witness_u(t: &DenseTensor, d: usize, r: usize) -> Result<TrCores> {
    if d < 3 || t.order() != d {
        return Err(domain!(
            "target of order {} does not match d = {d} >= 3",
            t.order()
        ));
    }
    if r < 1 {
        return Err(domain!("r must be positive"));
    }
    let r2 = r * r;
    let dims = t.dims().to_vec();
    if let Some(i) = dims[..d - 1].iter().position(|&n| n < r2) {
        return Err(domain!(
            "mode {} has dim {} below r^2 = {r2}",
            i + 1,
            dims[i]
        ));
    }
    let mut x = vec![0usize; d];
    for &v in t.values() {
        if v != 0.0 && x[..d - 1].iter().any(|&xi| xi >= r2) {
            let one_based: Vec<usize> = x.iter().map(|xi| xi + 1).collect();
            return Err(domain!(
                "target is nonzero outside the r^2 block at {one_based:?}"
            ));
        }
        next_index(&mut x, &dims);
    }
    let m = r.pow((d - 1) as u32);
    let mut cores = (0..d - 1)
        .map(|i| delta_pattern_core(d, r, i, dims[i]))
        .collect::<Result<Vec<_>>>()?;
    let nd = dims[d - 1];
    let mut last = DenseTensor::zeros(vec![m, nd, m])?;
    let digits = vec![r; d - 1];
    let mut p = vec![0usize; d - 1];
    loop {
        let mut q = vec![0usize; d - 1];
        loop {
            for i in 0..d - 1 {
                x[i] = q[i] * r + p[i];
            }
            let (row, col) = (offset0(&p, &digits), offset0(&q, &digits));
            for xd in 0..nd {
                x[d - 1] = xd;
                last.values_mut()[(row * nd + xd) * m + col] = t.at0(&x);
            }
            if !next_index(&mut q, &digits) {
                break;
            }
        }
        if !next_index(&mut p, &digits) {
            break;
        }
    }
    cores.push(last);
    TrCores::new(cores)
}

/// Bond-`r` cores with `w^i(k_1, :, k_2) = e_{pi(k_2, k_1)}`.
pub fn build_witness_w(d: usize, r: usize, n: usize) -> Result<TrCores> {
    if d < 2 || r < 1 {
        return Err(domain!("need d >= 2 and r >= 1, got d = {d}, r = {r}"));
    }
    if n < r * r {
        return Err(domain!("n = {n} must be at least r^2 = {}", r * r));
    }
    let core = DenseTensor::from_fn(vec![r, n, r], |i| {
        let (k1, x, k2) = (i[0] - 1, i[1] - 1, i[2] - 1);
        if x == k2 * r + k1 {
            1.0
        } else {
            0.0
        }
    })?;
    TrCores::new(vec![core; d])
}
