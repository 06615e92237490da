//! Centralized Kalman filter on the aggregated model.
//!
//! The effective process noise `e_k = w_k + L v_k` is correlated with the
//! measurement noise. The correlated-noise prediction
//!
//! ```text
//! x_{k+1|k} = (Ã - S̃R⁻¹C) x_{k|k} + S̃R⁻¹ y_k
//! Σ_{k+1|k} = (Ã - S̃R⁻¹C) Σ_{k|k} (Ã - S̃R⁻¹C)ᵀ + Q̃ - S̃R⁻¹S̃ᵀ
//! ```
//!
//! collapses to `A x_{k|k} + L y_k` and `A Σ_{k|k} Aᵀ + Q` because `S̃R⁻¹ = L`.
//! [`central_predict`] uses the short form and [`central_predict_correlated`]
//! evaluates the long one, so the two can be checked against each other.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, spd_solve, symmetrize, Matrix, Vector, SINGULAR_CONDITION};
use crate::netmodel::AggregatedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeliefKind {
    /// `k|k-1`
    Predicted,
    /// `k|k`
    Updated,
}

impl BeliefKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BeliefKind::Predicted => "predicted (k|k-1)",
            BeliefKind::Updated => "updated (k|k)",
        }
    }
}

impl fmt::Display for BeliefKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Conditional mean and error covariance at step `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vector,
    pub cov: Matrix,
    pub kind: BeliefKind,
    pub step: usize,
}

impl GaussianBelief {
    pub fn new(mean: Vector, cov: Matrix, kind: BeliefKind, step: usize) -> Result<Self> {
        let n = mean.len();
        if cov.shape() != (n, n) {
            return Err(Error::dims("belief covariance", (n, n), cov.shape()));
        }
        Ok(Self { mean, cov, kind, step })
    }

    /// The `0|0` belief: prior mean and covariance, before any measurement.
    pub fn prior(model: &AggregatedModel) -> Self {
        Self {
            mean: model.prior_mean().clone(),
            cov: model.p().clone(),
            kind: BeliefKind::Updated,
            step: 0,
        }
    }

    pub(crate) fn expect_kind(&self, kind: BeliefKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::WrongBeliefKind {
                step: self.step,
                expected: kind.as_str(),
                found: self.kind.as_str(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanGain {
    pub gain: Matrix,
    pub step: usize,
}

fn check_len(what: &str, v: &Vector, len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::dims(what, (len, 1), (v.len(), 1)));
    }
    Ok(())
}

/// Prediction `k|k -> k+1|k`. `y` is the measurement that drives the
/// coupling at step `k` (all zeros at `k = 0`, before any measurement).
pub fn central_predict(belief: &GaussianBelief, y: &Vector, model: &AggregatedModel) -> Result<GaussianBelief> {
    belief.expect_kind(BeliefKind::Updated)?;
    check_len("state mean", &belief.mean, model.n())?;
    check_len("measurement", y, model.p_dim())?;
    let a = model.a();
    Ok(GaussianBelief {
        mean: a * &belief.mean + model.l() * y,
        cov: symmetrize(&(a * &belief.cov * a.transpose() + model.q())),
        kind: BeliefKind::Predicted,
        step: belief.step + 1,
    })
}

/// Same step as [`central_predict`], evaluated through the correlated-noise
/// form with `Ã`, `Q̃` and `S̃`.
pub fn central_predict_correlated(
    belief: &GaussianBelief,
    y: &Vector,
    model: &AggregatedModel,
) -> Result<GaussianBelief> {
    belief.expect_kind(BeliefKind::Updated)?;
    check_len("state mean", &belief.mean, model.n())?;
    check_len("measurement", y, model.p_dim())?;
    // S̃ R⁻¹ = (R⁻¹ S̃ᵀ)ᵀ
    let s_rinv = spd_solve("R", model.r(), &model.s_tilde().transpose())?.transpose();
    let f = model.a_tilde() - &s_rinv * model.c();
    let noise = model.q_tilde() - &s_rinv * model.s_tilde().transpose();
    Ok(GaussianBelief {
        mean: &f * &belief.mean + &s_rinv * y,
        cov: symmetrize(&(&f * &belief.cov * f.transpose() + noise)),
        kind: BeliefKind::Predicted,
        step: belief.step + 1,
    })
}

/// Innovation `y - C x_{k|k-1}` and its covariance `C Σ Cᵀ + R`.
pub fn innovation(mean: &Vector, cov: &Matrix, y: &Vector, c: &Matrix, r: &Matrix) -> (Vector, Matrix) {
    (y - c * mean, symmetrize(&(c * cov * c.transpose() + r)))
}

/// Gain `Σ Cᵀ (C Σ Cᵀ + R)⁻¹`, obtained by solving `S X = C Σ` and
/// transposing.
pub fn kalman_gain(cov: &Matrix, c: &Matrix, r: &Matrix) -> Result<Matrix> {
    let s = symmetrize(&(c * cov * c.transpose() + r));
    let condition = condition_number(&s);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularInnovation { condition });
    }
    let rhs = c * cov;
    let x = match s.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => s
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularInnovation { condition })?,
    };
    Ok(x.transpose())
}

/// Joseph-form covariance update `(I-KC) Σ (I-KC)ᵀ + K R Kᵀ`.
pub fn joseph_update(cov: &Matrix, gain: &Matrix, c: &Matrix, r: &Matrix) -> Matrix {
    let n = cov.nrows();
    let ikc = Matrix::identity(n, n) - gain * c;
    symmetrize(&(&ikc * cov * ikc.transpose() + gain * r * gain.transpose()))
}

/// Short-form covariance update `(I - KC) Σ`, exposed for cross-checking.
pub fn short_form_update(cov: &Matrix, gain: &Matrix, c: &Matrix) -> Matrix {
    let n = cov.nrows();
    (Matrix::identity(n, n) - gain * c) * cov
}

/// Shared measurement update used by both the centralized filter and each
/// distributed node.
pub(crate) fn measurement_update(
    mean: &Vector,
    cov: &Matrix,
    y: &Vector,
    c: &Matrix,
    r: &Matrix,
) -> Result<(Vector, Matrix, Matrix)> {
    let gain = kalman_gain(cov, c, r)?;
    let new_mean = mean + &gain * (y - c * mean);
    let new_cov = joseph_update(cov, &gain, c, r);
    Ok((new_mean, new_cov, gain))
}

/// Measurement update `k|k-1 -> k|k`.
pub fn central_update(
    belief: &GaussianBelief,
    y: &Vector,
    model: &AggregatedModel,
) -> Result<(GaussianBelief, KalmanGain)> {
    belief.expect_kind(BeliefKind::Predicted)?;
    check_len("state mean", &belief.mean, model.n())?;
    check_len("measurement", y, model.p_dim())?;
    let (mean, cov, gain) = measurement_update(&belief.mean, &belief.cov, y, model.c(), model.r())?;
    Ok((
        GaussianBelief {
            mean,
            cov,
            kind: BeliefKind::Updated,
            step: belief.step,
        },
        KalmanGain { gain, step: belief.step },
    ))
}

/// Beliefs produced by [`central_run`] over measurements `y_1..y_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralTrajectory {
    /// `0|0`
    pub initial: GaussianBelief,
    /// `1|0`
    pub first_prediction: GaussianBelief,
    /// `k|k` for `k = 1..=K`
    pub updated: Vec<GaussianBelief>,
    /// `k+1|k` for `k = 1..=K`
    pub predicted: Vec<GaussianBelief>,
    /// `K_k` for `k = 1..=K`
    pub gains: Vec<KalmanGain>,
}

impl CentralTrajectory {
    pub fn horizon(&self) -> usize {
        self.updated.len()
    }

    /// `k|k`, with `k = 0` the prior.
    pub fn updated_at(&self, k: usize) -> &GaussianBelief {
        if k == 0 {
            &self.initial
        } else {
            &self.updated[k - 1]
        }
    }

    /// `k|k-1` for `k = 1..=K+1`.
    pub fn predicted_at(&self, k: usize) -> &GaussianBelief {
        assert!(k >= 1, "no prediction for step 0");
        if k == 1 {
            &self.first_prediction
        } else {
            &self.predicted[k - 2]
        }
    }
}

/// Runs the filter from the prior `x_0 ~ N(prior_mean, P)`.
///
/// `measurements[k-1]` is `y_k`. The transition out of step 0 carries no
/// coupling input; every later prediction uses the measurement just
/// absorbed.
pub fn central_run(model: &AggregatedModel, measurements: &[Vector]) -> Result<CentralTrajectory> {
    if measurements.is_empty() {
        return Err(Error::InvalidArgument("central_run needs at least one measurement".into()));
    }
    let initial = GaussianBelief::prior(model);
    let zero = Vector::zeros(model.p_dim());
    let first_prediction = central_predict(&initial, &zero, model).map_err(|e| e.at_step(0))?;

    let mut updated = Vec::with_capacity(measurements.len());
    let mut predicted = Vec::with_capacity(measurements.len());
    let mut gains = Vec::with_capacity(measurements.len());
    let mut current = first_prediction.clone();
    for (idx, y) in measurements.iter().enumerate() {
        let k = idx + 1;
        let (upd, gain) = central_update(&current, y, model).map_err(|e| e.at_step(k))?;
        let next = central_predict(&upd, y, model).map_err(|e| e.at_step(k))?;
        updated.push(upd);
        gains.push(gain);
        predicted.push(next.clone());
        current = next;
    }
    Ok(CentralTrajectory {
        initial,
        first_prediction,
        updated,
        predicted,
        gains,
    })
}
