//! Two auxiliary inequalities used by the convergence bounds, as
//! evaluators for property checks.

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};

use super::riemann::InequalitySides;

/// `e^{xy} - 1 <= (e^x - 1) y` for real `x` and `0 <= y <= 1`.
pub fn exp_scaling_check(x: f64, y: f64) -> Result<InequalitySides> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidArgument(format!("y = {y} outside [0, 1]")));
    }
    Ok(InequalitySides {
        lhs: (x * y).exp_m1(),
        rhs: x.exp_m1() * y,
    })
}

/// For a PSD block matrix `[[A, Bᵀ], [B, C]]` with `A` of size `split`:
/// `‖B‖ <= sqrt(‖A‖ ‖C‖)`.
pub fn psd_block_check(m: &Matrix, split: usize) -> Result<InequalitySides> {
    if !m.is_square() || split > m.nrows() {
        return Err(Error::InvalidArgument(format!(
            "cannot split a {}x{} matrix at {split}",
            m.nrows(),
            m.ncols()
        )));
    }
    let rest = m.nrows() - split;
    let a = m.view((0, 0), (split, split)).into_owned();
    let b = m.view((split, 0), (rest, split)).into_owned();
    let c = m.view((split, split), (rest, rest)).into_owned();
    Ok(InequalitySides {
        lhs: norm2(&b),
        rhs: (norm2(&a) * norm2(&c)).sqrt(),
    })
}

/// Counts violations of the exponential-scaling inequality on the grid
/// `x in [x_min, x_max]`, `y in [0, 1]` with spacing `step`.
pub fn exp_scaling_grid_violations(x_min: f64, x_max: f64, step: f64, tol: f64) -> (usize, usize) {
    let nx = ((x_max - x_min) / step).round() as usize;
    let ny = (1.0 / step).round() as usize;
    let mut checked = 0;
    let mut violations = 0;
    for ix in 0..=nx {
        let x = x_min + ix as f64 * step;
        for iy in 0..=ny {
            let y = (iy as f64 * step).min(1.0);
            let sides = exp_scaling_check(x, y).expect("y in range");
            checked += 1;
            if !sides.holds(tol) {
                violations += 1;
            }
        }
    }
    (checked, violations)
}
