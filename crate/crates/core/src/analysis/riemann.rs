//! Riemannian distance on symmetric positive definite matrices.
//!
//! `δ(P, Q) = sqrt(Σ_k log² λ_k)` where `λ_k` are the eigenvalues of
//! `P Q⁻¹`. They are obtained from the symmetric reduction
//! `L⁻¹ P L⁻ᵀ` with `Q = L Lᵀ`, so they come out real and positive.
//!
//! The distance is invariant under inversion and congruence, and the
//! Riccati maps contract it:
//!
//! - `δ(W + B P Bᵀ, W + B Q Bᵀ) <= α / (α + β) · δ(P, Q)` with
//!   `α = max(‖BPBᵀ‖, ‖BQBᵀ‖)` and `β = λ_min(W)`,
//! - `‖P - Q‖ <= (e^δ - 1) ‖Q‖` when `P > Q`.

use crate::error::{Error, Result};
use crate::linalg::{check_spd, min_eigenvalue, norm2, symmetrize, Matrix};

/// Both sides of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalitySides {
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalitySides {
    /// `lhs <= rhs + tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Eigenvalues of `P Q⁻¹` for SPD `P`, `Q`.
pub fn generalized_eigenvalues(p: &Matrix, q: &Matrix) -> Result<Vec<f64>> {
    check_spd("P", p)?;
    check_spd("Q", q)?;
    if p.shape() != q.shape() {
        return Err(Error::dims("riemannian_distance", q.shape(), p.shape()));
    }
    let l = symmetrize(q).cholesky().expect("Q checked SPD").l();
    let left = l
        .solve_lower_triangular(p)
        .expect("Cholesky factor has a positive diagonal");
    let reduced = l
        .solve_lower_triangular(&left.transpose())
        .expect("Cholesky factor has a positive diagonal");
    Ok(symmetrize(&reduced).symmetric_eigen().eigenvalues.iter().copied().collect())
}

pub fn riemannian_distance(p: &Matrix, q: &Matrix) -> Result<f64> {
    if p == q {
        check_spd("P", p)?;
        return Ok(0.0);
    }
    let eig = generalized_eigenvalues(p, q)?;
    Ok(eig.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// A pair of SPD matrices together with their distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMetricPair {
    pub p: Matrix,
    pub q: Matrix,
    pub delta: f64,
}

impl SpdMetricPair {
    pub fn new(p: Matrix, q: Matrix) -> Result<Self> {
        let delta = riemannian_distance(&p, &q)?;
        Ok(Self { p, q, delta })
    }
}

/// Both sides of the contraction inequality for `X -> W + B X Bᵀ`.
pub fn contraction_check(p: &Matrix, q: &Matrix, w: &Matrix, b: &Matrix) -> Result<InequalitySides> {
    check_spd("W", w)?;
    if b.nrows() != w.nrows() || b.ncols() != p.nrows() {
        return Err(Error::dims("B", (w.nrows(), p.nrows()), b.shape()));
    }
    let bpb = symmetrize(&(b * p * b.transpose()));
    let bqb = symmetrize(&(b * q * b.transpose()));
    let lhs = riemannian_distance(&(w + &bpb), &(w + &bqb))?;
    let alpha = norm2(&bpb).max(norm2(&bqb));
    let beta = min_eigenvalue(w);
    let rhs = if alpha == 0.0 {
        0.0
    } else {
        alpha / (alpha + beta) * riemannian_distance(p, q)?
    };
    Ok(InequalitySides { lhs, rhs })
}

/// Both sides of `‖P - Q‖ <= (e^{δ(P,Q)} - 1) ‖Q‖`, which requires `P > Q`.
pub fn norm_gap_bound_check(p: &Matrix, q: &Matrix) -> Result<InequalitySides> {
    let delta = riemannian_distance(p, q)?;
    let diff = p - q;
    let min = min_eigenvalue(&diff);
    if min <= 0.0 {
        return Err(Error::OrderViolation { min_eigenvalue: min });
    }
    Ok(InequalitySides {
        lhs: norm2(&diff),
        rhs: delta.exp_m1() * norm2(q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(seed: u64, n: usize) -> Matrix {
        let mut s = seed;
        let g = Matrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        });
        &g * g.transpose() + Matrix::identity(n, n) * 0.3
    }

    #[test]
    fn distance_to_self_is_zero() {
        let p = spd(1, 4);
        assert!(riemannian_distance(&p, &p).unwrap() < 1e-14);
    }

    #[test]
    fn scaled_identity_distance() {
        for n in 1..=6 {
            let i = Matrix::identity(n, n);
            let d = riemannian_distance(&(&i * 2.0), &i).unwrap();
            assert!((d - (n as f64).sqrt() * 2f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_and_inversion_invariant() {
        let (p, q) = (spd(3, 5), spd(4, 5));
        let d = riemannian_distance(&p, &q).unwrap();
        let d_swapped = riemannian_distance(&q, &p).unwrap();
        let d_inv = riemannian_distance(&p.clone().try_inverse().unwrap(), &q.clone().try_inverse().unwrap()).unwrap();
        assert!((d - d_swapped).abs() < 1e-10);
        assert!((d - d_inv).abs() < 1e-10);
    }

    #[test]
    fn non_spd_rejected() {
        let bad = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            riemannian_distance(&bad, &Matrix::identity(2, 2)),
            Err(Error::NonSpd { .. })
        ));
    }

    #[test]
    fn contraction_trivial_cases() {
        let (p, w) = (spd(5, 3), spd(6, 2));
        let b = Matrix::from_fn(2, 3, |i, j| (i + 2 * j) as f64 * 0.1);
        let same = contraction_check(&p, &p, &w, &b).unwrap();
        assert!(same.lhs.abs() < 1e-14 && same.rhs.abs() < 1e-14);
        let zero = contraction_check(&p, &spd(7, 3), &w, &Matrix::zeros(2, 3)).unwrap();
        assert_eq!(zero.rhs, 0.0);
        assert!(zero.lhs.abs() < 1e-14);
    }

    #[test]
    fn norm_gap_small_perturbation() {
        let q = spd(8, 3);
        let eps = 1e-6;
        let p = &q + Matrix::identity(3, 3) * eps;
        let s = norm_gap_bound_check(&p, &q).unwrap();
        assert!((s.lhs - eps).abs() < 1e-12);
        assert!(s.holds(0.0));
    }

    #[test]
    fn norm_gap_doubling() {
        let q = Matrix::from_diagonal(&crate::linalg::Vector::from_vec(vec![1.0, 3.0, 0.5]));
        let s = norm_gap_bound_check(&(&q * 2.0), &q).unwrap();
        assert!((s.lhs - 3.0).abs() < 1e-14);
        let delta = 3f64.sqrt() * 2f64.ln();
        assert!((s.rhs - delta.exp_m1() * 3.0).abs() < 1e-12);
        assert!(s.rhs >= s.lhs);
    }

    #[test]
    fn norm_gap_requires_order() {
        let q = spd(9, 2);
        assert!(matches!(norm_gap_bound_check(&q, &(&q * 2.0)), Err(Error::OrderViolation { .. })));
    }
}
