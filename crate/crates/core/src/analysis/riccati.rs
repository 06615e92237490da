//! Covariance recursions of both filters, without any measurement data.
//!
//! Neither covariance sequence depends on the measured values, so the
//! analysis code runs these recursions directly instead of full filters.
//! The distributed recursion works node by node on the diagonal blocks of
//! the aggregated model, starting from `P*`.

use crate::central::{joseph_update, kalman_gain};
use crate::error::{Error, Result};
use crate::linalg::{block_diag, max_abs, symmetrize, Matrix};
use crate::netmodel::{block, AggregatedModel};

/// Maximum number of iterations for [`steady_state_covariance`].
pub const MAX_ITERATIONS: usize = 100_000;
/// Relative increment below which the iteration is considered converged.
/// Iterates beyond this magnitude are treated as divergent.
const DIVERGENCE_LIMIT: f64 = 1e150;
pub const CONVERGENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Centralized,
    Distributed,
}

/// Covariances and gains of one filter over `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceRun {
    /// `Σ_{k|k}` for `k = 0..=K` (index 0 is the initial covariance).
    pub updated: Vec<Matrix>,
    /// `Σ_{k|k-1}` for `k = 1..=K` (index 0 is `Σ_{1|0}`).
    pub predicted: Vec<Matrix>,
    /// `K_k` for `k = 1..=K`.
    pub gains: Vec<Matrix>,
}

impl CovarianceRun {
    pub fn updated_at(&self, k: usize) -> &Matrix {
        &self.updated[k]
    }
    pub fn predicted_at(&self, k: usize) -> &Matrix {
        &self.predicted[k - 1]
    }
    pub fn gain_at(&self, k: usize) -> &Matrix {
        &self.gains[k - 1]
    }
}

/// One predict/update cycle `Σ_{k|k} -> Σ_{k+1|k+1}`; returns the predicted
/// covariance, the gain and the updated covariance.
pub fn riccati_step(sigma: &Matrix, a: &Matrix, c: &Matrix, q: &Matrix, r: &Matrix) -> Result<(Matrix, Matrix, Matrix)> {
    let pred = symmetrize(&(a * sigma * a.transpose() + q));
    let gain = kalman_gain(&pred, c, r)?;
    let upd = joseph_update(&pred, &gain, c, r);
    Ok((pred, gain, upd))
}

fn run_recursion(start: &Matrix, a: &Matrix, c: &Matrix, q: &Matrix, r: &Matrix, horizon: usize) -> Result<CovarianceRun> {
    let mut run = CovarianceRun {
        updated: vec![start.clone()],
        predicted: Vec::with_capacity(horizon),
        gains: Vec::with_capacity(horizon),
    };
    for k in 1..=horizon {
        let (pred, gain, upd) = riccati_step(&run.updated[k - 1], a, c, q, r).map_err(|e| e.at_step(k))?;
        run.predicted.push(pred);
        run.gains.push(gain);
        run.updated.push(upd);
    }
    Ok(run)
}

/// Centralized covariance recursion from `Σ_{0|0} = P`.
pub fn central_covariances(model: &AggregatedModel, horizon: usize) -> Result<CovarianceRun> {
    run_recursion(model.p(), model.a(), model.c(), model.q(), model.r(), horizon)
}

/// Distributed covariance recursion, node by node from `P^(i)`, assembled
/// into block-diagonal matrices.
pub fn distributed_covariances(model: &AggregatedModel, horizon: usize) -> Result<CovarianceRun> {
    let (ns, ps) = (model.state_dims(), model.output_dims());
    let per_node = (0..ns.len())
        .map(|i| {
            run_recursion(
                &block(model.p(), ns, ns, i, i),
                &block(model.a(), ns, ns, i, i),
                &block(model.c(), ps, ns, i, i),
                &block(model.q(), ns, ns, i, i),
                &block(model.r(), ps, ps, i, i),
                horizon,
            )
            .map_err(|e| e.at_node(i + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let assemble = |pick: &dyn Fn(&CovarianceRun) -> &Matrix| block_diag(per_node.iter().map(pick));
    Ok(CovarianceRun {
        updated: (0..=horizon).map(|k| assemble(&|r| &r.updated[k])).collect(),
        predicted: (0..horizon).map(|k| assemble(&|r| &r.predicted[k])).collect(),
        gains: (0..horizon).map(|k| assemble(&|r| &r.gains[k])).collect(),
    })
}

fn iterate_to_fixed_point(start: &Matrix, a: &Matrix, c: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let mut sigma = start.clone();
    let mut last_increment = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let (_, _, next) = riccati_step(&sigma, a, c, q, r)?;
        if !(max_abs(&next) < DIVERGENCE_LIMIT) {
            return Err(Error::NoConvergence {
                iterations: MAX_ITERATIONS,
                last_increment: f64::INFINITY,
            });
        }
        let scale = max_abs(&next).max(f64::MIN_POSITIVE);
        last_increment = max_abs(&(&next - &sigma)) / scale;
        sigma = next;
        if last_increment < CONVERGENCE_TOL {
            return Ok(sigma);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        last_increment,
    })
}

/// Fixed point `Σ̄ = lim Σ_{k|k}` of the chosen filter's covariance recursion.
pub fn steady_state_covariance(model: &AggregatedModel, which: FilterKind) -> Result<Matrix> {
    match which {
        FilterKind::Centralized => iterate_to_fixed_point(model.p(), model.a(), model.c(), model.q(), model.r()),
        FilterKind::Distributed => {
            let (ns, ps) = (model.state_dims(), model.output_dims());
            let blocks = (0..ns.len())
                .map(|i| {
                    iterate_to_fixed_point(
                        &block(model.p(), ns, ns, i, i),
                        &block(model.a(), ns, ns, i, i),
                        &block(model.c(), ps, ns, i, i),
                        &block(model.q(), ns, ns, i, i),
                        &block(model.r(), ps, ps, i, i),
                    )
                    .map_err(|e| e.at_node(i + 1))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(block_diag(blocks.iter()))
        }
    }
}
