//! Minimum-norm linear least squares through the thin SVD.

use faer::{Mat, MatRef};

use crate::error::{Result, TrError};

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: Mat<f64>,
    /// Smallest singular value of `A` among its `ncols` columns (0 when `A`
    /// is wide).
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Number of singular values kept above `tol * sigma_max`.
    pub rank: usize,
}

impl LstsqSolution {
    pub fn full_column_rank(&self) -> bool {
        self.rank == self.x.nrows()
    }
}

/// Solve `min ||A X - B||_F` returning the minimum-norm minimizer. Singular
/// values at or below `tol * sigma_max` are treated as zero.
pub fn lstsq_min_norm(a: MatRef<'_, f64>, b: MatRef<'_, f64>, tol: f64) -> Result<LstsqSolution> {
    let (rows, cols) = (a.nrows(), a.ncols());
    if b.nrows() != rows {
        return Err(TrError::Domain(format!(
            "A has {rows} rows but B has {}",
            b.nrows()
        )));
    }
    if a.as_ref().has_nan() || b.as_ref().has_nan() || !a.is_all_finite() || !b.is_all_finite() {
        return Err(TrError::Numerical(
            "non-finite entries in least-squares data".into(),
        ));
    }
    let svd = a
        .thin_svd()
        .map_err(|e| TrError::Numerical(format!("svd did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let k = s.nrows();
    let sigma_max = if k > 0 { s[0] } else { 0.0 };
    let sigma_min = if rows >= cols && k > 0 { s[k - 1] } else { 0.0 };
    let cutoff = tol * sigma_max;
    let rank = (0..k).take_while(|&i| s[i] > cutoff).count();
    let u = svd.U().get(.., ..rank);
    let v = svd.V().get(.., ..rank);
    // X = V_r diag(1/s_r) U_r^T B
    let mut coef = u.transpose() * b;
    for i in 0..rank {
        let inv = 1.0 / s[i];
        for j in 0..coef.ncols() {
            coef[(i, j)] *= inv;
        }
    }
    let x = v * &coef;
    Ok(LstsqSolution {
        x,
        sigma_min,
        sigma_max,
        rank,
    })
}
