//! Scalar constants of the covariance-gap and estimate-gap bounds.
//!
//! With `σ` bounding `‖Σ_{k|k}‖`, `‖Σ*_{k|k}‖` and `ω` bounding their
//! inverses, both covariance recursions contract the Riemannian distance by
//! `υ = υ₁ υ₂` per step:
//!
//! ```text
//! υ₁ = σ‖A‖² / (σ‖A‖² + λ_min(Q))      (prediction)
//! υ₂ = ω / (ω + λ_min(U)),  U = CᵀR⁻¹C   (update, information form)
//! ```
//!
//! and `‖Σ_{k|k} - Σ*_{k|k}‖ <= κ σ υᵏ` with `κ = e^{δ(P,P*)} - 1`.

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, norm2, sym_norm2, Matrix};
use crate::netmodel::AggregatedModel;

use super::moments::exact_gap_moments;
use super::riccati::{central_covariances, steady_state_covariance, FilterKind};
use super::riemann::riemannian_distance;
use super::stability::{h_bar, is_detectable, is_stabilizable, spectral_radius};
use crate::linalg::psd_sqrt;

/// Constants of the covariance bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceConstants {
    pub sigma: f64,
    pub omega: f64,
    pub upsilon1: f64,
    pub upsilon2: f64,
    pub upsilon: f64,
    /// `δ(P, P*)`
    pub delta0: f64,
    pub kappa: f64,
    pub sigma_bar: Matrix,
    pub sigma_bar_star: Matrix,
    /// Set when `U` is singular: `υ₂` is reported as 1 and the bounds carry
    /// no information.
    pub bounds_vacuous: bool,
}

impl CovarianceConstants {
    /// `κ σ υᵏ`
    pub fn sigma_bound(&self, k: usize) -> f64 {
        self.kappa * self.sigma * self.upsilon.powi(k as i32)
    }
    /// `κ ω υᵏ`
    pub fn gamma_bound(&self, k: usize) -> f64 {
        self.kappa * self.omega * self.upsilon.powi(k as i32)
    }
    /// `υᵏ δ(P, P*)`
    pub fn riemann_bound(&self, k: usize) -> f64 {
        self.upsilon.powi(k as i32) * self.delta0
    }
}

fn inverse_norm(m: &Matrix) -> f64 {
    1.0 / min_eigenvalue(m)
}

pub fn covariance_constants(model: &AggregatedModel) -> Result<CovarianceConstants> {
    let p = model.p();
    let p_star = model.p_star();
    let sigma_bar = steady_state_covariance(model, FilterKind::Centralized)?;
    let sigma_bar_star = steady_state_covariance(model, FilterKind::Distributed)?;

    let sigma = sym_norm2(p).max(sym_norm2(&p_star)).max(sym_norm2(&sigma_bar));
    let omega = inverse_norm(p).max(inverse_norm(&p_star)).max(inverse_norm(&sigma_bar));

    let a2 = norm2(model.a()).powi(2);
    let q_floor = min_eigenvalue(model.q());
    let upsilon1 = sigma * a2 / (sigma * a2 + q_floor);

    let u = model.u();
    let u_floor = min_eigenvalue(u);
    let bounds_vacuous = u_floor <= 1e-12 * sym_norm2(u);
    let upsilon2 = if bounds_vacuous { 1.0 } else { omega / (omega + u_floor) };

    let delta0 = riemannian_distance(p, &p_star)?;
    Ok(CovarianceConstants {
        sigma,
        omega,
        upsilon1,
        upsilon2,
        upsilon: upsilon1 * upsilon2,
        delta0,
        kappa: delta0.exp_m1(),
        sigma_bar,
        sigma_bar_star,
        bounds_vacuous,
    })
}

/// Two-exponential envelope `A ψᵏ + B υᵏ` fitted to a decaying sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub a: f64,
    pub b: f64,
    pub psi: f64,
    pub upsilon: f64,
    /// Last step used for fitting.
    pub fitted_until: usize,
}

impl EnvelopeFit {
    pub fn eval(&self, k: usize) -> f64 {
        self.a * self.psi.powi(k as i32) + self.b * self.upsilon.powi(k as i32)
    }
}

/// Everything the convergence analysis computes for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub eps: f64,
    pub horizon: usize,
    pub sigma: f64,
    pub omega: f64,
    pub upsilon1: f64,
    pub upsilon2: f64,
    pub upsilon: f64,
    pub delta0: f64,
    pub kappa: f64,
    pub sigma_bar: Matrix,
    pub sigma_bar_star: Matrix,
    pub u: Matrix,
    pub h_bar: Matrix,
    pub rho_h_bar: f64,
    pub zeta: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `sup_k ζ + 2 sqrt(ζ ‖H_k‖² ‖Δ_{k-1}‖)` over the horizon, with the
    /// exact `Δ_k`.
    pub lambda: f64,
    /// `ε ρ(H̄)`
    pub psi_eps: f64,
    /// First `k` with `‖H_k - H̄‖ <= (sqrt(ε) - 1) ‖H̄‖`.
    pub k_eps: Option<usize>,
    /// Not computed: it needs Jordan decompositions. The fitted envelope
    /// stands in for it.
    pub phi_eps: Option<f64>,
    /// Fitted envelope coefficients, filled by [`BoundReport::with_envelope`].
    pub a_eps: Option<f64>,
    pub b_eps: Option<f64>,
    pub bounds_vacuous: bool,
    pub detectable: bool,
    pub stabilizable: bool,
}

impl BoundReport {
    pub fn with_envelope(mut self, fit: &EnvelopeFit) -> Self {
        self.a_eps = Some(fit.a);
        self.b_eps = Some(fit.b);
        self
    }

    pub fn constants(&self) -> CovarianceConstants {
        CovarianceConstants {
            sigma: self.sigma,
            omega: self.omega,
            upsilon1: self.upsilon1,
            upsilon2: self.upsilon2,
            upsilon: self.upsilon,
            delta0: self.delta0,
            kappa: self.kappa,
            sigma_bar: self.sigma_bar.clone(),
            sigma_bar_star: self.sigma_bar_star.clone(),
            bounds_vacuous: self.bounds_vacuous,
        }
    }

    /// `(name, value)` rows; `None` for quantities that were not computed.
    pub fn rows(&self) -> Vec<(&'static str, Option<f64>)> {
        let flag = |b: bool| Some(if b { 1.0 } else { 0.0 });
        vec![
            ("eps", Some(self.eps)),
            ("horizon", Some(self.horizon as f64)),
            ("sigma", Some(self.sigma)),
            ("omega", Some(self.omega)),
            ("upsilon1", Some(self.upsilon1)),
            ("upsilon2", Some(self.upsilon2)),
            ("upsilon", Some(self.upsilon)),
            ("delta_p_pstar", Some(self.delta0)),
            ("kappa", Some(self.kappa)),
            ("sigma_bar_norm", Some(sym_norm2(&self.sigma_bar))),
            ("u_min_eigenvalue", Some(min_eigenvalue(&self.u))),
            ("h_bar_norm", Some(norm2(&self.h_bar))),
            ("rho_h_bar", Some(self.rho_h_bar)),
            ("zeta", Some(self.zeta)),
            ("alpha", Some(self.alpha)),
            ("beta", Some(self.beta)),
            ("lambda", Some(self.lambda)),
            ("psi_eps", Some(self.psi_eps)),
            ("k_eps", self.k_eps.map(|k| k as f64)),
            ("phi_eps", self.phi_eps),
            ("a_eps_fitted", self.a_eps),
            ("b_eps_fitted", self.b_eps),
            ("bounds_vacuous", flag(self.bounds_vacuous)),
            ("detectable", flag(self.detectable)),
            ("stabilizable", flag(self.stabilizable)),
        ]
    }
}

/// `H_k = A (I - Σ_{k|k} U)` for `k = 1..=horizon` (index 0 is `H_1`).
pub fn error_dynamics_matrices(model: &AggregatedModel, horizon: usize) -> Result<Vec<Matrix>> {
    let n = model.n();
    let run = central_covariances(model, horizon)?;
    Ok((1..=horizon)
        .map(|k| model.a() * (Matrix::identity(n, n) - run.updated_at(k) * model.u()))
        .collect())
}

pub fn compute_bound_report(model: &AggregatedModel, eps: f64, horizon: usize) -> Result<BoundReport> {
    if !(eps > 1.0) {
        return Err(Error::InvalidArgument(format!("eps must exceed 1, got {eps}")));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let consts = covariance_constants(model)?;
    let h_bar = h_bar(model, &consts.sigma_bar)?;
    let rho_h_bar = spectral_radius(&h_bar);

    let (sigma, omega, kappa) = (consts.sigma, consts.omega, consts.kappa);
    let a2 = norm2(model.a()).powi(2);
    let alpha = kappa.powi(2) * omega.powi(2) * sigma.powi(2) * a2 * (sigma * a2 + sym_norm2(model.q()));
    let beta = kappa.powi(2) * omega.powi(2) * sigma.powi(3) * a2;
    let zeta = alpha + beta + 2.0 * (alpha * beta).sqrt();

    let hs = error_dynamics_matrices(model, horizon)?;
    let deltas = exact_gap_moments(model, horizon)?;
    let lambda = hs
        .iter()
        .enumerate()
        .map(|(idx, h)| {
            let prev = if idx == 0 { 0.0 } else { sym_norm2(&deltas[idx - 1]) };
            zeta + 2.0 * (zeta * norm2(h).powi(2) * prev).sqrt()
        })
        .fold(0.0_f64, f64::max);

    let h_bar_norm = norm2(&h_bar);
    let k_eps = hs
        .iter()
        .position(|h| norm2(&(h - &h_bar)) <= (eps.sqrt() - 1.0) * h_bar_norm)
        .map(|idx| idx + 1);

    Ok(BoundReport {
        eps,
        horizon,
        sigma,
        omega,
        upsilon1: consts.upsilon1,
        upsilon2: consts.upsilon2,
        upsilon: consts.upsilon,
        delta0: consts.delta0,
        kappa,
        sigma_bar: consts.sigma_bar,
        sigma_bar_star: consts.sigma_bar_star,
        u: model.u().clone(),
        h_bar,
        rho_h_bar,
        zeta,
        alpha,
        beta,
        lambda,
        psi_eps: eps * rho_h_bar,
        k_eps,
        phi_eps: None,
        a_eps: None,
        b_eps: None,
        bounds_vacuous: consts.bounds_vacuous,
        detectable: is_detectable(model.a(), model.c()),
        stabilizable: is_stabilizable(model.a(), &psd_sqrt(model.q())),
    })
}
