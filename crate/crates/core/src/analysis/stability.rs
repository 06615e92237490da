//! PBH rank tests and the asymptotic error-dynamics matrix `H̄ = A(I - K̄C)`.

use nalgebra::Complex;

use crate::central::kalman_gain;
use crate::error::Result;
use crate::linalg::{psd_sqrt, symmetrize, Matrix};
use crate::netmodel::AggregatedModel;

use super::riccati::{steady_state_covariance, FilterKind};

/// Relative singular-value threshold for the rank tests.
pub const RANK_TOL: f64 = 1e-10;

type CMatrix = nalgebra::DMatrix<Complex<f64>>;

fn complexify(m: &Matrix) -> CMatrix {
    m.map(|v| Complex::new(v, 0.0))
}

fn numerical_rank(m: &CMatrix) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * top).count()
}

/// Eigenvalues of `a` on or outside the unit circle.
fn unstable_modes(a: &Matrix) -> Vec<Complex<f64>> {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .copied()
        .filter(|l| l.norm() >= 1.0 - 1e-12)
        .collect()
}

/// `(A, C)` is detectable iff `[A - λI; C]` has full column rank for every
/// eigenvalue `|λ| >= 1`.
pub fn is_detectable(a: &Matrix, c: &Matrix) -> bool {
    let n = a.nrows();
    unstable_modes(a).into_iter().all(|lambda| {
        let mut m = CMatrix::zeros(n + c.nrows(), n);
        let shifted = complexify(a) - CMatrix::identity(n, n) * lambda;
        m.view_mut((0, 0), (n, n)).copy_from(&shifted);
        m.view_mut((n, 0), (c.nrows(), n)).copy_from(&complexify(c));
        numerical_rank(&m) == n
    })
}

/// `(A, B)` is stabilizable iff `[A - λI, B]` has full row rank for every
/// eigenvalue `|λ| >= 1`.
pub fn is_stabilizable(a: &Matrix, b: &Matrix) -> bool {
    let n = a.nrows();
    unstable_modes(a).into_iter().all(|lambda| {
        let mut m = CMatrix::zeros(n, n + b.ncols());
        let shifted = complexify(a) - CMatrix::identity(n, n) * lambda;
        m.view_mut((0, 0), (n, n)).copy_from(&shifted);
        m.view_mut((0, n), (n, b.ncols())).copy_from(&complexify(b));
        numerical_rank(&m) == n
    })
}

pub fn spectral_radius(m: &Matrix) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.norm()))
}

/// Steady-state gain `K̄` from the centralized fixed point `Σ̄`.
pub fn steady_state_gain(model: &AggregatedModel, sigma_bar: &Matrix) -> Result<Matrix> {
    let a = model.a();
    let pred = symmetrize(&(a * sigma_bar * a.transpose() + model.q()));
    kalman_gain(&pred, model.c(), model.r())
}

/// `H̄ = A (I - K̄ C)`.
pub fn h_bar(model: &AggregatedModel, sigma_bar: &Matrix) -> Result<Matrix> {
    let n = model.n();
    let gain = steady_state_gain(model, sigma_bar)?;
    Ok(model.a() * (Matrix::identity(n, n) - gain * model.c()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub detectable: bool,
    pub stabilizable: bool,
    /// `ρ(H̄)`, when the centralized Riccati iteration converges.
    pub rho_h_bar: Option<f64>,
}

impl StabilityReport {
    /// Both rank tests pass and `ρ(H̄) < 1`.
    pub fn is_stable(&self) -> bool {
        self.detectable && self.stabilizable && self.rho_h_bar.is_some_and(|r| r < 1.0)
    }
}

pub fn stability_check(model: &AggregatedModel) -> StabilityReport {
    let detectable = is_detectable(model.a(), model.c());
    let stabilizable = is_stabilizable(model.a(), &psd_sqrt(model.q()));
    let rho_h_bar = steady_state_covariance(model, FilterKind::Centralized)
        .and_then(|s| h_bar(model, &s))
        .map(|h| spectral_radius(&h))
        .ok();
    if detectable && stabilizable {
        debug_assert!(rho_h_bar.is_some_and(|r| r < 1.0), "detectable + stabilizable must give ρ(H̄) < 1");
    }
    StabilityReport {
        detectable,
        stabilizable,
        rho_h_bar,
    }
}
