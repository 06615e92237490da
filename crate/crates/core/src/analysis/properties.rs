//! Randomized checks of the metric properties and auxiliary inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{spd_inverse, Matrix};

use super::lemmas::{exp_scaling_grid_violations, psd_block_check};
use super::riemann::{contraction_check, norm_gap_bound_check, riemannian_distance};

pub const PROPERTY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen (negative when every trial holds strictly).
    pub worst_margin: f64,
}

impl PropertyOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            violations: 0,
            worst_margin: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, tol: f64) {
        self.trials += 1;
        let margin = lhs - rhs;
        if margin > tol {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.max(margin);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn gaussian_matrix(rng: &mut ChaCha20Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// `G Gᵀ + shift I` with Gaussian `G`.
pub fn random_spd(rng: &mut ChaCha20Rng, n: usize, shift: f64) -> Matrix {
    let g = gaussian_matrix(rng, n, n);
    &g * g.transpose() + Matrix::identity(n, n) * shift
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Runs every randomized check with `trials` draws per metric property and
/// `block_trials` draws for the PSD block inequality.
pub fn property_suite(seed: u64, trials: usize, block_trials: usize) -> Result<Vec<PropertyOutcome>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let tol = PROPERTY_TOL;
    let mut inversion = PropertyOutcome::new("inversion_invariance");
    let mut congruence = PropertyOutcome::new("congruence_invariance");
    let mut contraction = PropertyOutcome::new("riccati_contraction");
    let mut norm_gap = PropertyOutcome::new("norm_gap_bound");

    for t in 0..trials {
        let n = 1 + t % 6;
        let p = random_spd(&mut rng, n, 0.1);
        let q = random_spd(&mut rng, n, 0.1);
        let d = riemannian_distance(&p, &q)?;

        let inv = riemannian_distance(&spd_inverse("P", &p)?, &spd_inverse("Q", &q)?)?;
        inversion.record(relative(inv, d), 0.0, tol);

        let mut b = gaussian_matrix(&mut rng, n, n);
        while b.clone().lu().determinant().abs() < 1e-3 {
            b = gaussian_matrix(&mut rng, n, n);
        }
        let cong = riemannian_distance(&(&b * &p * b.transpose()), &(&b * &q * b.transpose()))?;
        congruence.record(relative(cong, d), 0.0, tol);

        let w = random_spd(&mut rng, n, 0.1);
        let m = 1 + (t / 6) % n;
        let bb = gaussian_matrix(&mut rng, n, m);
        let pm = random_spd(&mut rng, m, 0.1);
        let qm = random_spd(&mut rng, m, 0.1);
        let sides = contraction_check(&pm, &qm, &w, &bb)?;
        contraction.record(sides.lhs, sides.rhs, tol * (1.0 + sides.rhs));

        let bigger = &q + random_spd(&mut rng, n, 0.01) * rng.gen_range(0.01..2.0);
        let sides = norm_gap_bound_check(&bigger, &q)?;
        norm_gap.record(sides.lhs, sides.rhs, tol * (1.0 + sides.rhs));
    }

    let mut block = PropertyOutcome::new("psd_block_norm");
    for t in 0..block_trials {
        let n = 2 + t % 7;
        let rank = 1 + t % n;
        let g = gaussian_matrix(&mut rng, n, rank);
        let m = &g * g.transpose();
        let split = 1 + (t / 7) % (n - 1);
        let sides = psd_block_check(&m, split)?;
        block.record(sides.lhs, sides.rhs, tol * (1.0 + sides.rhs));
    }

    let (checked, violations) = exp_scaling_grid_violations(-5.0, 5.0, 0.01, tol);
    let grid = PropertyOutcome {
        name: "exp_scaling_grid",
        trials: checked,
        violations,
        worst_margin: f64::NAN,
    };
    Ok(vec![inversion, congruence, contraction, norm_gap, block, grid])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let out = property_suite(7, 24, 30).unwrap();
        assert_eq!(out.len(), 6);
        for o in &out {
            assert!(o.passed(), "{o:?}");
        }
        assert_eq!(out[5].trials, 1001 * 101);
    }
}
