//! Acceptance checks for the five-agent experiments and the analysis
//! toolkit. Prints one PASS/FAIL line per criterion and exits nonzero if
//! any fails.

mod support;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use netkf::analysis::montecarlo::{envelope_check, estimate_gap_monte_carlo, fit_envelope};
use netkf::analysis::properties::property_suite;
use netkf::analysis::{replay_error_dynamics, stability_check};
use netkf::central::central_run;
use netkf::linalg::sym_norm2;
use netkf::netmodel::aggregate;
use netkf::sim::{
    build_model, default_five_agent_network, run_experiment_fig2, run_experiment_fig3, simulate_system,
    InitialCovariance, SimConfig, SimSystem,
};

const SEED: u64 = 42;
const EPS: f64 = 1.1;
/// Absolute allowance once both sides of a covariance bound are at
/// round-off level.
const ROUNDOFF: f64 = 1e-10;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn cfg(horizon: usize, initial_covariance: InitialCovariance, runs: usize) -> SimConfig {
    SimConfig {
        horizon,
        seed: SEED,
        initial_covariance,
        runs,
        prior_mean: None,
    }
}

fn dense() -> InitialCovariance {
    InitialCovariance::RandomSpd { eps0: 0.1 }
}

fn block_diagonal_exactness() -> Outcome {
    let net = default_five_agent_network();
    let c = cfg(200, InitialCovariance::BlockDiagonalScalar { low: 0.0, high: 1.0 }, 1);
    let ex = run_experiment_fig3(&net, &c, EPS).unwrap();
    let (mut mean_gap, mut cov_gap) = (0.0_f64, 0.0_f64);
    for k in 1..=200 {
        let (cu, du) = (ex.comparison.central.updated_at(k), ex.comparison.distributed.updated_at(k));
        mean_gap = mean_gap.max((&cu.mean - &du.mean).amax());
        cov_gap = cov_gap.max(sym_norm2(&(&cu.cov - &du.cov)));
    }
    outcome(
        mean_gap <= 1e-9 && cov_gap <= 1e-9,
        format!("eps1 = {:.4}, max |x̂* - x̂| = {mean_gap:.2e}, max ‖Σ* - Σ‖ = {cov_gap:.2e}", ex.epsilon1.unwrap()),
    )
}

fn centralized_oracle() -> Outcome {
    let mut r = support::rng(7);
    let mut worst = 0.0_f64;
    let mut max_n = 0;
    for trial in 0..20 {
        let (_, model) = support::random_model(&mut r);
        max_n = max_n.max(model.n());
        let horizon = 1 + trial % 5;
        let traj = simulate_system(&SimSystem::from_model(&model), horizon, trial as u64).unwrap();
        let run = central_run(&model, &traj.measurements).unwrap();
        let oracle = support::batch_oracle(&model, &traj.measurements);
        for k in 1..=horizon {
            worst = worst.max((&run.updated_at(k).mean - &oracle.filtered[k - 1]).amax());
            worst = worst.max((&run.predicted_at(k + 1).mean - &oracle.predicted[k - 1]).amax());
        }
    }
    outcome(worst <= 1e-8, format!("20 models, n <= {max_n}, max mean error {worst:.2e}"))
}

fn covariance_checks() -> (Outcome, Outcome) {
    let net = default_five_agent_network();
    let ex = run_experiment_fig2(&net, &cfg(100, dense(), 1), EPS).unwrap();
    let consts = &ex.comparison.gap.constants;
    let (mut riemann_fail, mut riemann_floor) = (0, 0);
    let (mut gap_fail, mut gap_floor) = (0, 0);
    for r in &ex.comparison.gap.records {
        if r.riemann_sigma > r.bound_riemann + ROUNDOFF {
            riemann_fail += 1;
        } else if r.riemann_sigma > r.bound_riemann {
            riemann_floor += 1;
        }
        for (lhs, rhs) in [(r.sigma_gap_norm, r.bound_sigma), (r.gamma_gap_norm, r.bound_gamma)] {
            if lhs > rhs + ROUNDOFF {
                gap_fail += 1;
            } else if lhs > rhs {
                gap_floor += 1;
            }
        }
    }
    let c3 = outcome(
        riemann_fail == 0 && !consts.bounds_vacuous,
        format!(
            "υ = {:.4}, δ(P,P*) = {:.4}, violations {riemann_fail}/100, steps within round-off allowance {riemann_floor}",
            consts.upsilon, consts.delta0
        ),
    );
    let c4 = outcome(
        gap_fail == 0 && !consts.bounds_vacuous,
        format!(
            "κ = {:.3}, σ = {:.3}, ω = {:.3}, violations {gap_fail}/200, checks within round-off allowance {gap_floor}",
            consts.kappa, consts.sigma, consts.omega
        ),
    );
    (c3, c4)
}

fn estimate_gap_decay() -> Outcome {
    let net = default_five_agent_network();
    let c = cfg(60, dense(), 100);
    let (model, _) = build_model(&net, &c).unwrap();
    let report = netkf::analysis::compute_bound_report(&model, EPS, 60).unwrap();
    let mc = estimate_gap_monte_carlo(&net, &model, 60, 100, SEED).unwrap();
    let norms = &mc.delta_hat_norms;
    let early = norms[..10].iter().copied().fold(0.0, f64::max);
    let decayed = norms[59] <= 1e-3 * early;

    let fit = fit_envelope(norms, report.psi_eps, report.upsilon, 15).unwrap();
    let plain = envelope_check(norms, &fit, 16, 2.0, &[]);
    let floored = envelope_check(norms, &fit, 16, 2.0, &mc.roundoff_floor());
    outcome(
        decayed && floored.violations == 0,
        format!(
            "‖Δ̂_60‖ / max_(k<=10) ‖Δ̂_k‖ = {:.2e}; envelope A = {:.2e}, B = {:.2e} (ψ = {:.4}, υ = {:.4}): \
             violations on k = 16..60 {} with round-off floor, {} without",
            norms[59] / early,
            fit.a,
            fit.b,
            fit.psi,
            fit.upsilon,
            floored.violations,
            plain.violations
        ),
    )
}

fn error_recursion() -> Outcome {
    let net = default_five_agent_network();
    let ex = run_experiment_fig2(&net, &cfg(60, dense(), 1), EPS).unwrap();
    let checks = replay_error_dynamics(&ex.model, &ex.comparison.central, &ex.comparison.distributed).unwrap();
    let worst = checks.iter().map(|c| c.max_abs_error()).fold(0.0, f64::max);
    outcome(worst <= 1e-8, format!("{} steps, max error {worst:.2e}", checks.len()))
}

fn property_criteria() -> (Outcome, Outcome) {
    let results = property_suite(SEED, 200, 500).unwrap();
    let by_name: BTreeMap<_, _> = results.iter().map(|r| (r.name, r)).collect();
    let describe = |names: &[&str]| {
        names
            .iter()
            .map(|n| format!("{n} {}/{}", by_name[n].violations, by_name[n].trials))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let metric = ["inversion_invariance", "congruence_invariance", "riccati_contraction", "norm_gap_bound"];
    let lemmas = ["exp_scaling_grid", "psd_block_norm"];
    let ok = |names: &[&str]| names.iter().all(|n| by_name[n].passed());
    (
        outcome(ok(&metric), format!("violations: {}", describe(&metric))),
        outcome(ok(&lemmas), format!("violations: {}", describe(&lemmas))),
    )
}

fn stability() -> Outcome {
    let model = aggregate(&default_five_agent_network(), None).unwrap();
    let s = stability_check(&model);
    outcome(
        s.is_stable(),
        format!("detectable {}, stabilizable {}, ρ(H̄) = {:?}", s.detectable, s.stabilizable, s.rho_h_bar),
    )
}

fn read_outputs(dir: &Path) -> (BTreeMap<String, Vec<u8>>, serde_json::Value) {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name != "manifest.json" {
            files.insert(name, fs::read(&path).unwrap());
        }
    }
    let mut manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    manifest.as_object_mut().unwrap().remove("timestamp");
    (files, manifest)
}

fn determinism() -> Outcome {
    let config = format!("{}/../../configs/five_agent.toml", env!("CARGO_MANIFEST_DIR"));
    let mut details = Vec::new();
    let mut all_same = true;
    for cmd in ["fig2", "fig3", "bounds", "compare"] {
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let status = Command::new(env!("CARGO_BIN_EXE_netkf"))
                    .args([cmd, "--config", &config, "--runs", "20", "--out"])
                    .arg(dir.path())
                    .status()
                    .unwrap();
                assert!(status.success(), "{cmd} failed");
                read_outputs(dir.path())
            })
            .collect();
        let same = runs[0] == runs[1];
        all_same &= same;
        details.push(format!("{cmd}: {} files {}", runs[0].0.len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(all_same, details.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (c3, c4) = covariance_checks();
    let (c7, c8) = property_criteria();
    let results = [
        ("1 block-diagonal exactness", block_diagonal_exactness()),
        ("2 centralized-filter oracle", centralized_oracle()),
        ("3 covariance contraction", c3),
        ("4 covariance-gap bound", c4),
        ("5 estimate-gap decay", estimate_gap_decay()),
        ("6 error-recursion consistency", error_recursion()),
        ("7 Riemannian-distance properties", c7),
        ("8 auxiliary lemmas", c8),
        ("9 stability", stability()),
        ("10 determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
