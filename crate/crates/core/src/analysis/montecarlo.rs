//! Monte-Carlo estimate of `Δ_k` and the two-exponential envelope fit.

use rayon::prelude::*;

use crate::central::central_run;
use crate::distributed::distributed_run;
use crate::error::{Error, Result};
use crate::linalg::{sym_norm2, Matrix};
use crate::netmodel::{AggregatedModel, NetworkModel};
use crate::sim::{simulate_system, SimSystem};

use super::bounds::EnvelopeFit;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloGap {
    pub runs: usize,
    /// `Δ̂_k = (1/N) Σ x̃ x̃ᵀ` for `k = 1..=K` (index 0 is `Δ̂_1`).
    pub delta_hat: Vec<Matrix>,
    pub delta_hat_norms: Vec<f64>,
    /// Sample mean of `‖x̂_{k|k-1}‖²`, `k = 1..=K`.
    pub estimate_sq_norms: Vec<f64>,
}

impl MonteCarloGap {
    /// Smallest `‖Δ̂_k‖` that floating point can resolve: the gap is a
    /// difference of two estimates of size `‖x̂‖` computed along different
    /// paths, so it carries an error of order `n u ‖x̂‖` with `u` the unit
    /// roundoff.
    pub fn roundoff_floor(&self) -> Vec<f64> {
        let n = self.delta_hat.first().map_or(1, |m| m.nrows()) as f64;
        let scale = (n * f64::EPSILON).powi(2);
        self.estimate_sq_norms.iter().map(|m| scale * m).collect()
    }
}

/// Averages `x̃_{k|k-1} x̃_{k|k-1}ᵀ` over `n_runs` independent trajectories.
/// Run `r` uses seed `seed + r`; the sum is taken in run order, so the
/// result does not depend on the thread count.
pub fn estimate_gap_monte_carlo(
    net: &NetworkModel,
    model: &AggregatedModel,
    horizon: usize,
    n_runs: usize,
    seed: u64,
) -> Result<MonteCarloGap> {
    if n_runs == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("runs and horizon must be at least 1".into()));
    }
    let sys = SimSystem::from_model(model);
    let per_run = (0..n_runs)
        .into_par_iter()
        .map(|r| -> Result<Vec<(Matrix, f64)>> {
            let traj = simulate_system(&sys, horizon, seed.wrapping_add(r as u64))?;
            let central = central_run(model, &traj.measurements)?;
            let dist = distributed_run(net, model, &traj.measurements)?;
            Ok((1..=horizon)
                .map(|k| {
                    let mean = &central.predicted_at(k).mean;
                    let gap = mean - &dist.predicted_at(k).mean;
                    (&gap * gap.transpose(), mean.norm_squared())
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let n = model.n();
    let mut delta_hat = vec![Matrix::zeros(n, n); horizon];
    let mut estimate_sq_norms = vec![0.0; horizon];
    for run in &per_run {
        for (k, (m, sq)) in run.iter().enumerate() {
            delta_hat[k] += m;
            estimate_sq_norms[k] += sq;
        }
    }
    for m in &mut delta_hat {
        *m /= n_runs as f64;
    }
    for m in &mut estimate_sq_norms {
        *m /= n_runs as f64;
    }
    let delta_hat_norms = delta_hat.iter().map(sym_norm2).collect();
    Ok(MonteCarloGap {
        runs: n_runs,
        delta_hat,
        delta_hat_norms,
        estimate_sq_norms,
    })
}

const LM_ITERATIONS: usize = 200;

/// Least-squares fit of `ln(A ψᵏ + B υᵏ)` to `ln norms[k-1]` over
/// `k = 1..=fit_until`, with `ψ` and `υ` fixed. Zero samples are skipped.
/// Levenberg-Marquardt on `(ln A, ln B)`.
pub fn fit_envelope(norms: &[f64], psi: f64, upsilon: f64, fit_until: usize) -> Result<EnvelopeFit> {
    let samples: Vec<(f64, f64)> = norms
        .iter()
        .take(fit_until)
        .enumerate()
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(i, v)| ((i + 1) as f64, v.ln()))
        .collect();
    if samples.is_empty() {
        return Ok(EnvelopeFit {
            a: 0.0,
            b: 0.0,
            psi,
            upsilon,
            fitted_until: fit_until,
        });
    }
    let single = |rate: f64| -> f64 {
        samples.iter().map(|(k, ly)| ly - k * rate.ln()).sum::<f64>() / samples.len() as f64
    };
    let fit = |a: f64, b: f64| EnvelopeFit {
        a,
        b,
        psi,
        upsilon,
        fitted_until: fit_until,
    };
    match (psi > 0.0, upsilon > 0.0) {
        (false, false) => return Err(Error::InvalidArgument("both envelope rates are zero".into())),
        (false, true) => return Ok(fit(0.0, single(upsilon).exp())),
        (true, false) => return Ok(fit(single(psi).exp(), 0.0)),
        (true, true) => {}
    }
    let (lp, lu) = (psi.ln(), upsilon.ln());
    let residuals = |t: [f64; 2]| -> Vec<(f64, f64)> {
        samples
            .iter()
            .map(|(k, ly)| {
                let (e1, e2) = (t[0] + k * lp, t[1] + k * lu);
                let m = e1.max(e2);
                let lse = m + ((e1 - m).exp() + (e2 - m).exp()).ln();
                (lse - ly, (e1 - lse).exp())
            })
            .collect()
    };
    let cost = |t: [f64; 2]| residuals(t).iter().map(|(r, _)| r * r).sum::<f64>();
    let start = single(psi.max(upsilon)) - std::f64::consts::LN_2;
    let mut t = [start, start];
    let mut mu = 1e-3;
    let mut current = cost(t);
    for _ in 0..LM_ITERATIONS {
        let res = residuals(t);
        let (mut j11, mut j12, mut j22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (r, w) in &res {
            let (d1, d2) = (*w, 1.0 - w);
            j11 += d1 * d1;
            j12 += d1 * d2;
            j22 += d2 * d2;
            g1 += d1 * r;
            g2 += d2 * r;
        }
        let mut improved = false;
        while mu < 1e12 {
            let (a11, a22) = (j11 + mu * (j11 + 1e-12), j22 + mu * (j22 + 1e-12));
            let det = a11 * a22 - j12 * j12;
            let step = [-(a22 * g1 - j12 * g2) / det, -(a11 * g2 - j12 * g1) / det];
            let cand = [t[0] + step[0], t[1] + step[1]];
            let c = cost(cand);
            if c < current {
                let gain = current - c;
                t = cand;
                current = c;
                mu = (mu / 10.0).max(1e-12);
                improved = gain > 1e-15 * (1.0 + current);
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(fit(t[0].exp(), t[1].exp()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `norms[k-1] / fit(k)` over the checked steps, floor ignored.
    pub max_ratio: f64,
}

/// Checks `norms[k-1] <= slack · fit(k) + floor[k-1]` for `k >= from`.
/// Pass an empty `floor` for the plain comparison.
pub fn envelope_check(norms: &[f64], fit: &EnvelopeFit, from: usize, slack: f64, floor: &[f64]) -> EnvelopeCheck {
    let mut out = EnvelopeCheck {
        checked: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    for (i, v) in norms.iter().enumerate().skip(from.saturating_sub(1)) {
        let k = i + 1;
        let env = fit.eval(k);
        out.checked += 1;
        if *v > slack * env + floor.get(i).copied().unwrap_or(0.0) {
            out.violations += 1;
        }
        let ratio = if env > 0.0 { v / env } else if *v > 0.0 { f64::INFINITY } else { 0.0 };
        out.max_ratio = out.max_ratio.max(ratio);
    }
    out
}
