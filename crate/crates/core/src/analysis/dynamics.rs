//! Recursion for the estimate gap `x̃_{k|k-1} = x̂_{k|k-1} - x̂*_{k|k-1}`:
//!
//! ```text
//! x̃_{k+1|k} = H_k x̃_{k|k-1} + a_k + b_k
//! H_k = A (I - Σ_{k|k} U)
//! a_k = A Σ_{k|k} Γ̃_{k|k} x̂*_{k|k-1}
//! b_k = A Σ̃_{k|k} Γ*_{k|k} x̂*_{k|k}
//! ```
//!
//! with `Γ = Σ⁻¹`, `Σ̃ = Σ - Σ*`, `Γ̃ = Γ - Γ*`. It follows from the
//! information form of the update, in which both filters add the same
//! `CᵀR⁻¹y_k` to `Γ x̂`.

use crate::central::CentralTrajectory;
use crate::distributed::DistributedTrajectory;
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, Matrix, Vector};
use crate::netmodel::AggregatedModel;

/// Filter quantities at step `k` that the recursion needs.
#[derive(Debug, Clone, Copy)]
pub struct ErrorDynamicsContext<'a> {
    pub model: &'a AggregatedModel,
    /// Centralized `Σ_{k|k}`.
    pub sigma: &'a Matrix,
    /// Distributed `Σ*_{k|k}`.
    pub sigma_star: &'a Matrix,
    /// `x̂*_{k|k-1}`
    pub x_star_predicted: &'a Vector,
    /// `x̂*_{k|k}`
    pub x_star_updated: &'a Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDynamicsStep {
    pub k: usize,
    /// `x̃_{k+1|k}`
    pub next: Vector,
    pub h: Matrix,
    pub a_term: Vector,
    pub b_term: Vector,
}

impl ErrorDynamicsStep {
    /// `ξ_k = a_k + b_k`
    pub fn xi(&self) -> Vector {
        &self.a_term + &self.b_term
    }
}

pub fn error_dynamics_step(x_gap: &Vector, k: usize, ctx: &ErrorDynamicsContext<'_>) -> Result<ErrorDynamicsStep> {
    let model = ctx.model;
    let n = model.n();
    if x_gap.len() != n {
        return Err(Error::dims("x̃", (n, 1), (x_gap.len(), 1)));
    }
    let a = model.a();
    let gamma = spd_inverse("Σ_{k|k}", ctx.sigma)?;
    let gamma_star = spd_inverse("Σ*_{k|k}", ctx.sigma_star)?;
    let h = a * (Matrix::identity(n, n) - ctx.sigma * model.u());
    let a_term = a * ctx.sigma * (&gamma - &gamma_star) * ctx.x_star_predicted;
    let b_term = a * (ctx.sigma - ctx.sigma_star) * &gamma_star * ctx.x_star_updated;
    let next = &h * x_gap + &a_term + &b_term;
    Ok(ErrorDynamicsStep {
        k,
        next,
        h,
        a_term,
        b_term,
    })
}

/// Recursion output and directly computed gap for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionCheck {
    pub k: usize,
    pub recursion: Vector,
    pub direct: Vector,
}

impl RecursionCheck {
    pub fn max_abs_error(&self) -> f64 {
        (&self.recursion - &self.direct).amax()
    }
}

/// Applies one recursion step at every `k = 1..K` starting from the
/// directly computed `x̃_{k|k-1}`, and pairs it with the directly computed
/// `x̃_{k+1|k}`.
pub fn replay_error_dynamics(
    model: &AggregatedModel,
    central: &CentralTrajectory,
    distributed: &DistributedTrajectory,
) -> Result<Vec<RecursionCheck>> {
    (1..=central.horizon())
        .map(|k| {
            let star_pred = distributed.predicted_at(k);
            let star_upd = distributed.updated_at(k);
            let ctx = ErrorDynamicsContext {
                model,
                sigma: &central.updated_at(k).cov,
                sigma_star: &star_upd.cov,
                x_star_predicted: &star_pred.mean,
                x_star_updated: &star_upd.mean,
            };
            let gap = &central.predicted_at(k).mean - &star_pred.mean;
            let step = error_dynamics_step(&gap, k, &ctx).map_err(|e| e.at_step(k))?;
            Ok(RecursionCheck {
                k,
                recursion: step.next,
                direct: &central.predicted_at(k + 1).mean - &distributed.predicted_at(k + 1).mean,
            })
        })
        .collect()
}
