//! Exact second moment `Δ_k = E(x̃_{k|k-1} x̃_{k|k-1}ᵀ)` of the gap between
//! the centralized and distributed predictions.
//!
//! The true state, the centralized prediction and the gap evolve jointly
//! as a linear Gaussian system driven by `(w_k, v_k)`. With `D_k = K_k - K*_k`:
//!
//! ```text
//! x_{k+1}    = Ã x_k + w_k + L v_k
//! x̂_{k+1|k}  = A(I - K_k C) x̂_{k|k-1} + (A K_k + L)(C x_k + v_k)
//! x̃_{k+1|k}  = A(I - K*_k C) x̃_{k|k-1} + A D_k (C x_k - C x̂_{k|k-1} + v_k)
//! ```
//!
//! Carrying the gap as its own coordinate avoids the cancellation that
//! subtracting two nearly equal estimate blocks would cause.

use crate::error::Result;
use crate::linalg::{block_diag, symmetrize, Matrix, Vector};
use crate::netmodel::AggregatedModel;

use super::riccati::{central_covariances, distributed_covariances};

/// `Δ_k` for `k = 1..=horizon` (index 0 holds `Δ_1`).
pub fn exact_gap_moments(model: &AggregatedModel, horizon: usize) -> Result<Vec<Matrix>> {
    let n = model.n();
    let central = central_covariances(model, horizon)?;
    let dist = distributed_covariances(model, horizon)?;
    let (a, c, l) = (model.a(), model.c(), model.l());
    let eye = Matrix::identity(n, n);

    let x1_mean = a * model.prior_mean();
    let mut mean = Vector::zeros(3 * n);
    for b in 0..2 {
        mean.rows_mut(b * n, n).copy_from(&x1_mean);
    }
    let mut cov = Matrix::zeros(3 * n, 3 * n);
    cov.view_mut((0, 0), (n, n))
        .copy_from(&symmetrize(&(a * model.p() * a.transpose() + model.q())));

    let noise = block_diag([model.q(), model.r()]);
    let mut out = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        let gap_mean = mean.rows(2 * n, n);
        let gap_cov = cov.view((2 * n, 2 * n), (n, n));
        out.push(symmetrize(&(gap_cov + gap_mean * gap_mean.transpose())));
        if k == horizon {
            break;
        }
        let (kc, kd) = (central.gain_at(k), dist.gain_at(k));
        let in_c = a * kc + l;
        let ad = a * (kc - kd);
        let mut f = Matrix::zeros(3 * n, 3 * n);
        f.view_mut((0, 0), (n, n)).copy_from(model.a_tilde());
        f.view_mut((n, 0), (n, n)).copy_from(&(&in_c * c));
        f.view_mut((n, n), (n, n)).copy_from(&(a * (&eye - kc * c)));
        f.view_mut((2 * n, 0), (n, n)).copy_from(&(&ad * c));
        f.view_mut((2 * n, n), (n, n)).copy_from(&(-(&ad * c)));
        f.view_mut((2 * n, 2 * n), (n, n)).copy_from(&(a * (&eye - kd * c)));
        let p = model.p_dim();
        let mut g = Matrix::zeros(3 * n, n + p);
        g.view_mut((0, 0), (n, n)).copy_from(&eye);
        g.view_mut((0, n), (n, p)).copy_from(l);
        g.view_mut((n, n), (n, p)).copy_from(&in_c);
        g.view_mut((2 * n, n), (n, p)).copy_from(&ad);
        mean = &f * &mean;
        cov = symmetrize(&(&f * &cov * f.transpose() + &g * &noise * g.transpose()));
    }
    Ok(out)
}
