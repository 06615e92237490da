mod support;

use netkf::central::{central_predict, central_predict_correlated, central_run, central_update, GaussianBelief};
use netkf::sim::{simulate_system, SimSystem};
use support::{batch_oracle, random_model, rng};

#[test]
fn recursive_filter_matches_batch_conditioning() {
    let mut r = rng(2024);
    for trial in 0..20 {
        let (_, model) = random_model(&mut r);
        let horizon = 1 + trial % 5;
        let traj = simulate_system(&SimSystem::from_model(&model), horizon, 100 + trial as u64).unwrap();
        let run = central_run(&model, &traj.measurements).unwrap();
        let oracle = batch_oracle(&model, &traj.measurements);
        for k in 1..=horizon {
            let upd = run.updated_at(k);
            let err = (&upd.mean - &oracle.filtered[k - 1]).amax();
            assert!(err < 1e-8, "trial {trial} k {k}: updated mean off by {err}");
            let err = (&upd.cov - &oracle.filtered_cov[k - 1]).amax();
            assert!(err < 1e-8, "trial {trial} k {k}: covariance off by {err}");
            let err = (&run.predicted_at(k + 1).mean - &oracle.predicted[k - 1]).amax();
            assert!(err < 1e-8, "trial {trial} k {k}: predicted mean off by {err}");
        }
    }
}

#[test]
fn correlated_noise_prediction_equals_simplified_form() {
    let mut r = rng(5);
    for trial in 0..20 {
        let (_, model) = random_model(&mut r);
        let traj = simulate_system(&SimSystem::from_model(&model), 3, trial).unwrap();
        let mut belief = central_predict(&GaussianBelief::prior(&model), &traj.measurements[0].map(|_| 0.0), &model).unwrap();
        for y in &traj.measurements {
            let (upd, _) = central_update(&belief, y, &model).unwrap();
            let short = central_predict(&upd, y, &model).unwrap();
            let long = central_predict_correlated(&upd, y, &model).unwrap();
            assert!((&short.mean - &long.mean).amax() < 1e-10);
            assert!((&short.cov - &long.cov).amax() < 1e-10);
            belief = short;
        }
    }
}
