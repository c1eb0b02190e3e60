//! Matrix unfoldings that turn one ALS microstep into `min ||A X - B||_F`,
//! and the numerical rank predicates used to certify unique microsteps.
//!
//! Row orderings start at mode `i + 1` and wrap periodically; column
//! orderings of `A_i` put the bond index `k_{i+1}` before `k_i`.

use faer::{Mat, MatRef};

use crate::error::{domain, Result};
use crate::tensor::{next_index, offset0, DenseTensor};
use crate::tr::{chain_product, dims3, wrap, TrCores};

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// External dims of every mode except `mode`, in the order
/// `i+1, ..., d, 1, ..., i-1` (1-based `mode`).
pub fn cyclic_dims(dims: &[usize], mode: usize) -> Vec<usize> {
    let d = dims.len();
    (1..d).map(|s| dims[(mode - 1 + s) % d]).collect()
}

fn check_mode(mode: usize, d: usize) -> Result<()> {
    if mode < 1 || mode > d {
        return Err(domain!("mode {mode} outside 1..={d}"));
    }
    Ok(())
}

/// `B_i(pi(x_{i+1}, ..., x_{i-1}), x_i) = T(x_1, ..., x_d)`.
pub fn unfold_target(t: &DenseTensor, mode: usize) -> Result<Mat<f64>> {
    let d = t.order();
    check_mode(mode, d)?;
    let dims = t.dims();
    let row_dims = cyclic_dims(dims, mode);
    let rows: usize = row_dims.iter().product();
    let cols = dims[mode - 1];
    let mut b = Mat::<f64>::zeros(rows, cols);
    let mut idx = vec![0usize; d];
    let mut row_idx = vec![0usize; d - 1];
    for &v in t.values() {
        for (s, slot) in row_idx.iter_mut().enumerate() {
            *slot = idx[(mode + s) % d];
        }
        b[(offset0(&row_idx, &row_dims), idx[mode - 1])] = v;
        next_index(&mut idx, dims);
    }
    Ok(b)
}

/// Unfold the open chain `u^{i+1}, ..., u^{i-1}` into `A_i`.
///
/// Entry `(pi(x_{i+1}, ..., x_{i-1}), pi(k_{i+1}, k_i))` is the
/// `(k_{i+1}, k_i)` element of the slice product
/// `u^{i+1}(x_{i+1}) ... u^{i-1}(x_{i-1})`.
pub fn alpha(chain: &[&DenseTensor]) -> Result<Mat<f64>> {
    for (pos, c) in chain.iter().enumerate() {
        if c.order() != 3 {
            return Err(domain!("chain element {} has order {}", pos + 1, c.order()));
        }
    }
    let prod = chain_product(chain)?;
    let cols = prod.left * prod.right;
    Ok(Mat::from_fn(prod.rows, cols, |row, col| {
        prod.data[row * cols + col]
    }))
}

/// `A_i` for the current cores of a ring (1-based `mode`).
pub fn mode_alpha(u: &TrCores, mode: usize) -> Result<Mat<f64>> {
    let d = u.order();
    check_mode(mode, d)?;
    let chain: Vec<&DenseTensor> = (1..d).map(|s| u.core(mode + s)).collect();
    alpha(&chain)
}

/// `X(pi(k_{i+1}, k_i), x) = u(k_i, x, k_{i+1})`.
pub fn gamma(core: &DenseTensor) -> Result<Mat<f64>> {
    if core.order() != 3 {
        return Err(domain!(
            "gamma needs a third-order core, got order {}",
            core.order()
        ));
    }
    let [left, n, right] = dims3(core);
    let v = core.values();
    Ok(Mat::from_fn(left * right, n, |row, x| {
        let (kr, kl) = (row / left, row % left);
        v[(kl * n + x) * right + kr]
    }))
}

/// Inverse of [`gamma`] for a core of shape `left x n x right`.
pub fn gamma_inv(x: MatRef<'_, f64>, left: usize, n: usize, right: usize) -> Result<DenseTensor> {
    if x.nrows() != left * right || x.ncols() != n {
        return Err(domain!(
            "matrix is {}x{}, core {left}x{n}x{right} needs {}x{n}",
            x.nrows(),
            x.ncols(),
            left * right
        ));
    }
    let mut core = DenseTensor::zeros(vec![left, n, right])?;
    let v = core.values_mut();
    for kl in 0..left {
        for xi in 0..n {
            for kr in 0..right {
                v[(kl * n + xi) * right + kr] = x[(kr * left + kl, xi)];
            }
        }
    }
    Ok(core)
}

/// `(sigma_min > tol * sigma_max, sigma_min)`; wide matrices fail at once
/// with `sigma_min = 0`.
pub fn check_full_column_rank(a: MatRef<'_, f64>, tol: f64) -> Result<(bool, f64)> {
    if a.nrows() < a.ncols() {
        return Ok((false, 0.0));
    }
    if a.ncols() == 0 {
        return Ok((true, 0.0));
    }
    let s = a
        .singular_values()
        .map_err(|e| crate::error::TrError::Numerical(format!("svd: {e:?}")))?;
    let smax = s[0];
    let smin = s[s.len() - 1];
    Ok((smin > tol * smax, smin))
}

/// The `r^d x r^d` matrix whose full column rank is the genericity
/// condition for mode `j` (`1 <= j <= d - 1`).
///
/// Column `pi(q_1..q_j, p_j..p_{d-1})`; the entries along each column are
/// `T(pi(p_1,q_1), ..., pi(p_{d-1},q_{d-1}), s)` for `s = pi(s_1, s_2) <= r^2`
/// and the remaining `p_1..p_{j-1}, q_{j+1}..q_{d-1}`. The row index keeps
/// the ring order of the digits: `pi(s_1, p_1..p_{j-1}, q_{j+1}..q_{d-1}, s_2)`.
pub fn reshape_tj(t: &DenseTensor, j: usize, r: usize) -> Result<Mat<f64>> {
    let d = t.order();
    if d < 2 {
        return Err(domain!("reshape needs order at least 2"));
    }
    if j < 1 || j > d - 1 {
        return Err(domain!("j = {j} outside 1..={}", d - 1));
    }
    let r2 = r * r;
    if r < 1 || t.dims().iter().any(|&n| n < r2) {
        return Err(domain!(
            "external dims {:?} must all be at least r^2 = {r2}",
            t.dims()
        ));
    }
    let side = r.pow(d as u32);
    let mut out = Mat::<f64>::zeros(side, side);
    let digits = vec![r; d - 1];
    let mut p = vec![0usize; d - 1];
    let mut x = vec![0usize; d];
    let mut col_digits = Vec::with_capacity(d);
    let mut row_digits = Vec::with_capacity(d);
    loop {
        let mut q = vec![0usize; d - 1];
        loop {
            for i in 0..d - 1 {
                x[i] = p[i] * r + q[i];
            }
            col_digits.clear();
            col_digits.extend_from_slice(&q[..j]);
            col_digits.extend_from_slice(&p[j - 1..]);
            let col = offset0(&col_digits, &vec![r; d]);
            for s1 in 0..r {
                for s2 in 0..r {
                    x[d - 1] = s1 * r + s2;
                    row_digits.clear();
                    row_digits.push(s1);
                    row_digits.extend_from_slice(&p[..j - 1]);
                    row_digits.extend_from_slice(&q[j..]);
                    row_digits.push(s2);
                    let row = offset0(&row_digits, &vec![r; d]);
                    out[(row, col)] = t.at0(&x);
                }
            }
            if !next_index(&mut q, &digits) {
                break;
            }
        }
        if !next_index(&mut p, &digits) {
            break;
        }
    }
    Ok(out)
}

/// One microstep as a standard least-squares problem `min ||A X - B||_F`.
#[derive(Debug, Clone)]
pub struct LsProblem {
    pub a_matrix: Mat<f64>,
    pub b_matrix: Mat<f64>,
    /// 1-based mode being solved.
    pub mode: usize,
}

impl LsProblem {
    pub fn assemble(target: &DenseTensor, u: &TrCores, mode: usize) -> Result<Self> {
        if target.dims() != u.dims().as_slice() {
            return Err(domain!(
                "target dims {:?} differ from ring dims {:?}",
                target.dims(),
                u.dims()
            ));
        }
        let a_matrix = mode_alpha(u, mode)?;
        let b_matrix = unfold_target(target, mode)?;
        Ok(Self {
            a_matrix,
            b_matrix,
            mode,
        })
    }

    /// Shape `(left, n, right)` of the core this problem solves for, given
    /// the ring it was assembled from.
    pub fn core_shape(&self, u: &TrCores) -> [usize; 3] {
        dims3(&u.cores()[wrap(self.mode, u.order())])
    }
}
