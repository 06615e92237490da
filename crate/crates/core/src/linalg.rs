//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Every norm in this crate is the spectral norm (largest singular value).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative asymmetry tolerance used by the SPD check.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Condition number above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Spectral norm (operator 2-norm).
pub fn norm2(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Spectral norm of a symmetric matrix via its eigenvalues.
pub fn sym_norm2(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    symmetrize(m).symmetric_eigen().eigenvalues.min()
}

pub fn condition_number(m: &Matrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let (hi, lo) = (sv.max(), sv.min());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn relative_asymmetry(m: &Matrix) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(m - m.transpose())) / scale
}

/// Symmetric to `SYMMETRY_TOL` relative, and smallest eigenvalue above
/// `1e-12 * ||m||`.
pub fn check_spd(name: &str, m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dims(name, (m.nrows(), m.nrows()), m.shape()));
    }
    let asymmetry = relative_asymmetry(m);
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NonSymmetric {
            matrix: name.to_string(),
            asymmetry,
        });
    }
    let min = min_eigenvalue(m);
    if m.is_empty() || min <= 1e-12 * sym_norm2(m) || min <= 0.0 {
        return Err(Error::NonSpd {
            matrix: name.to_string(),
            min_eigenvalue: min,
        });
    }
    Ok(())
}

pub fn is_spd(m: &Matrix) -> bool {
    check_spd("", m).is_ok()
}

/// Start offset of each block for the given block sizes.
pub fn offsets(dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .scan(0, |acc, &d| {
            let start = *acc;
            *acc += d;
            Some(start)
        })
        .collect()
}

pub fn block_diag<'a, I>(blocks: I) -> Matrix
where
    I: IntoIterator<Item = &'a Matrix>,
{
    let blocks: Vec<&Matrix> = blocks.into_iter().collect();
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Solves `m x = b` for symmetric positive definite `m` via Cholesky.
pub fn spd_solve(name: &str, m: &Matrix, b: &Matrix) -> Result<Matrix> {
    let condition = condition_number(m);
    if condition > SINGULAR_CONDITION {
        return Err(Error::SingularCovariance {
            matrix: name.to_string(),
            condition,
        });
    }
    let chol = symmetrize(m).cholesky().ok_or_else(|| Error::NonSpd {
        matrix: name.to_string(),
        min_eigenvalue: min_eigenvalue(m),
    })?;
    Ok(chol.solve(b))
}

/// Inverse of an SPD matrix, computed as a linear solve against the identity.
pub fn spd_inverse(name: &str, m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    spd_solve(name, m, &Matrix::identity(n, n)).map(|inv| symmetrize(&inv))
}

/// Principal square root of a symmetric PSD matrix (negative round-off
/// eigenvalues clamped to zero).
pub fn psd_sqrt(m: &Matrix) -> Matrix {
    let eig = symmetrize(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Lower factor `G` with `G Gᵀ = m`, for sampling. The all-zero matrix
/// yields a zero factor; anything else must be SPD.
pub fn sampling_factor(name: &str, m: &Matrix) -> Result<Matrix> {
    if max_abs(m) == 0.0 {
        return Ok(Matrix::zeros(m.nrows(), m.ncols()));
    }
    symmetrize(m)
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::NonSpd {
            matrix: name.to_string(),
            min_eigenvalue: min_eigenvalue(m),
        })
}
