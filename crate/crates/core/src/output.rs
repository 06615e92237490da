//! CSV writers. Every number is written as `{:.16e}` (17 significant
//! digits, locale independent), so values round-trip exactly; quantities
//! that were not computed are left empty.

use std::io::Write;

use crate::analysis::bounds::{BoundReport, EnvelopeFit};
use crate::analysis::gap::GapTrajectory;
use crate::analysis::montecarlo::MonteCarloGap;
use crate::central::CentralTrajectory;
use crate::distributed::DistributedTrajectory;
use crate::error::Result;
use crate::linalg::{sym_norm2, Matrix};
use crate::sim::Trajectory;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w)
}

/// Columns: `k`, `x_tilde_1..n`, `x_tilde_norm`, `sigma_gap_norm`,
/// `riemann_distance`, `bound_kappa_sigma_upsilon_k`, then `gamma_gap_norm`,
/// `bound_kappa_omega_upsilon_k`, `bound_upsilon_k_delta0`. The estimate
/// columns are empty for covariance-only trajectories.
pub fn write_gap_csv<W: Write>(gap: &GapTrajectory, n: usize, w: W) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["k".to_string()];
    header.extend((1..=n).map(|i| format!("x_tilde_{i}")));
    header.extend(
        [
            "x_tilde_norm",
            "sigma_gap_norm",
            "riemann_distance",
            "bound_kappa_sigma_upsilon_k",
            "gamma_gap_norm",
            "bound_kappa_omega_upsilon_k",
            "bound_upsilon_k_delta0",
        ]
        .map(String::from),
    );
    out.write_record(&header)?;
    for r in &gap.records {
        let mut row = vec![r.k.to_string()];
        match &r.x_gap {
            Some(v) => row.extend(v.iter().map(|x| fmt_num(*x))),
            None => row.extend(std::iter::repeat_n(String::new(), n)),
        }
        row.push(fmt_opt(r.x_gap_norm()));
        row.extend(
            [
                r.sigma_gap_norm,
                r.riemann_sigma,
                r.bound_sigma,
                r.gamma_gap_norm,
                r.bound_gamma,
                r.bound_riemann,
            ]
            .map(fmt_num),
        );
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One `name,value` row per reported constant.
pub fn write_bound_report_csv<W: Write>(report: &BoundReport, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["name", "value"])?;
    for (name, value) in report.rows() {
        out.write_record([name.to_string(), fmt_opt(value)])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns: `k`, `delta_hat_norm`, `delta_exact_norm`, `envelope`,
/// `roundoff_floor`.
pub fn write_monte_carlo_csv<W: Write>(
    mc: &MonteCarloGap,
    exact: &[Matrix],
    fit: Option<&EnvelopeFit>,
    w: W,
) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["k", "delta_hat_norm", "delta_exact_norm", "envelope", "roundoff_floor"])?;
    let floor = mc.roundoff_floor();
    for (i, norm) in mc.delta_hat_norms.iter().enumerate() {
        let k = i + 1;
        out.write_record([
            k.to_string(),
            fmt_num(*norm),
            fmt_opt(exact.get(i).map(sym_norm2)),
            fmt_opt(fit.map(|f| f.eval(k))),
            fmt_num(floor[i]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns: `k`, `x_1..n`, `y_1..p` (measurement columns empty at `k = 0`).
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut out = writer(w);
    let n = traj.states[0].len();
    let p = traj.measurements.first().map_or(0, |y| y.len());
    let mut header = vec!["k".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=p).map(|i| format!("y_{i}")));
    out.write_record(&header)?;
    for (k, x) in traj.states.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(x.iter().map(|v| fmt_num(*v)));
        match k.checked_sub(1).and_then(|i| traj.measurements.get(i)) {
            Some(y) => row.extend(y.iter().map(|v| fmt_num(*v))),
            None => row.extend(std::iter::repeat_n(String::new(), p)),
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn estimate_rows<W: Write>(
    out: &mut csv::Writer<W>,
    n: usize,
    horizon: usize,
    at: impl Fn(usize) -> (Vec<f64>, f64, Vec<f64>, f64),
) -> Result<()> {
    let mut header = vec!["k".to_string()];
    header.extend((1..=n).map(|i| format!("x_upd_{i}")));
    header.push("trace_sigma_upd".into());
    header.extend((1..=n).map(|i| format!("x_pred_next_{i}")));
    header.push("trace_sigma_pred_next".into());
    out.write_record(&header)?;
    for k in 1..=horizon {
        let (upd, tr_upd, pred, tr_pred) = at(k);
        let mut row = vec![k.to_string()];
        row.extend(upd.into_iter().map(fmt_num));
        row.push(fmt_num(tr_upd));
        row.extend(pred.into_iter().map(fmt_num));
        row.push(fmt_num(tr_pred));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns: `k`, `x_upd_1..n` (`x̂_{k|k}`), `trace_sigma_upd`,
/// `x_pred_next_1..n` (`x̂_{k+1|k}`), `trace_sigma_pred_next`.
pub fn write_central_csv<W: Write>(run: &CentralTrajectory, w: W) -> Result<()> {
    let mut out = writer(w);
    let n = run.initial.mean.len();
    estimate_rows(&mut out, n, run.horizon(), |k| {
        let (u, p) = (run.updated_at(k), run.predicted_at(k + 1));
        (u.mean.iter().copied().collect(), u.cov.trace(), p.mean.iter().copied().collect(), p.cov.trace())
    })
}

/// Same columns as [`write_central_csv`], for the stacked node estimates.
pub fn write_distributed_csv<W: Write>(run: &DistributedTrajectory, w: W) -> Result<()> {
    let mut out = writer(w);
    let first = run.updated_at(1);
    let n = first.mean.len();
    estimate_rows(&mut out, n, run.horizon(), |k| {
        let (u, p) = (run.updated_at(k), run.predicted_at(k + 1));
        (u.mean.iter().copied().collect(), u.cov.trace(), p.mean.iter().copied().collect(), p.cov.trace())
    })
}
