//! Per-step gaps between the centralized and distributed filters, next to
//! the bound curves they must stay under.

use crate::central::{central_run, CentralTrajectory};
use crate::distributed::{distributed_run, DistributedTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, sym_norm2, Matrix, Vector};
use crate::netmodel::{AggregatedModel, NetworkModel};

use super::bounds::{covariance_constants, CovarianceConstants};
use super::riccati::{central_covariances, distributed_covariances};
use super::riemann::riemannian_distance;

#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    pub k: usize,
    /// `x̃_{k|k-1} = x̂_{k|k-1} - x̂*_{k|k-1}`, when estimates were compared.
    pub x_gap: Option<Vector>,
    /// `‖Σ_{k|k} - Σ*_{k|k}‖`
    pub sigma_gap_norm: f64,
    /// `‖Γ_{k|k} - Γ*_{k|k}‖`
    pub gamma_gap_norm: f64,
    /// `δ(Σ_{k|k}, Σ*_{k|k})`
    pub riemann_sigma: f64,
    /// `δ(Γ_{k|k}, Γ*_{k|k})`
    pub riemann_gamma: f64,
    pub sigma_norm: f64,
    pub sigma_star_norm: f64,
    pub gamma_norm: f64,
    pub gamma_star_norm: f64,
    /// `κ σ υᵏ`
    pub bound_sigma: f64,
    /// `κ ω υᵏ`
    pub bound_gamma: f64,
    /// `υᵏ δ(P, P*)`
    pub bound_riemann: f64,
    /// `‖Δ̂_k‖` from a Monte-Carlo batch, if one was run.
    pub delta_hat_norm: Option<f64>,
}

impl GapRecord {
    pub fn x_gap_norm(&self) -> Option<f64> {
        self.x_gap.as_ref().map(|v| v.norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapTrajectory {
    pub constants: CovarianceConstants,
    /// Records for `k = 1..=horizon`.
    pub records: Vec<GapRecord>,
}

impl GapTrajectory {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    /// Largest `|x̃|` entry over all records.
    pub fn max_abs_x_gap(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.x_gap.as_ref())
            .flat_map(|v| v.iter().map(|e| e.abs()))
            .fold(0.0, f64::max)
    }
}

fn covariance_record(
    k: usize,
    sigma: &Matrix,
    sigma_star: &Matrix,
    consts: &CovarianceConstants,
) -> Result<GapRecord> {
    let gamma = spd_inverse("Σ_{k|k}", sigma)?;
    let gamma_star = spd_inverse("Σ*_{k|k}", sigma_star)?;
    Ok(GapRecord {
        k,
        x_gap: None,
        sigma_gap_norm: sym_norm2(&(sigma - sigma_star)),
        gamma_gap_norm: sym_norm2(&(&gamma - &gamma_star)),
        riemann_sigma: riemannian_distance(sigma, sigma_star)?,
        riemann_gamma: riemannian_distance(&gamma, &gamma_star)?,
        sigma_norm: sym_norm2(sigma),
        sigma_star_norm: sym_norm2(sigma_star),
        gamma_norm: sym_norm2(&gamma),
        gamma_star_norm: sym_norm2(&gamma_star),
        bound_sigma: consts.sigma_bound(k),
        bound_gamma: consts.gamma_bound(k),
        bound_riemann: consts.riemann_bound(k),
        delta_hat_norm: None,
    })
}

/// Covariance part of the gap trajectory, from the two Riccati recursions.
pub fn covariance_gap_trajectory(model: &AggregatedModel, horizon: usize) -> Result<GapTrajectory> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let constants = covariance_constants(model)?;
    let central = central_covariances(model, horizon)?;
    let dist = distributed_covariances(model, horizon)?;
    let records = (1..=horizon)
        .map(|k| covariance_record(k, central.updated_at(k), dist.updated_at(k), &constants).map_err(|e| e.at_step(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapTrajectory { constants, records })
}

/// Both filter runs on one measurement sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterComparison {
    pub central: CentralTrajectory,
    pub distributed: DistributedTrajectory,
    pub gap: GapTrajectory,
}

/// Runs both filters on `measurements` (`y_1..y_K`) and records the
/// estimate and covariance gaps.
pub fn compare_filters(net: &NetworkModel, model: &AggregatedModel, measurements: &[Vector]) -> Result<FilterComparison> {
    let constants = covariance_constants(model)?;
    let central = central_run(model, measurements)?;
    let distributed = distributed_run(net, model, measurements)?;
    let records = (1..=measurements.len())
        .map(|k| {
            let upd_c = central.updated_at(k);
            let upd_d = distributed.updated_at(k);
            let mut rec = covariance_record(k, &upd_c.cov, &upd_d.cov, &constants).map_err(|e| e.at_step(k))?;
            rec.x_gap = Some(&central.predicted_at(k).mean - &distributed.predicted_at(k).mean);
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterComparison {
        central,
        distributed,
        gap: GapTrajectory { constants, records },
    })
}
