mod support;

use netkf::central::central_run;
use netkf::distributed::{distributed_run, network_step, NodeFilterState};
use netkf::netmodel::{aggregate, block_diagonal_extract, build_network, CouplingMap, SubsystemModel};
use netkf::sim::{default_five_agent_network, simulate_system, SimSystem};
use netkf::{Matrix, Vector};
use support::{random_network, rng};

#[test]
fn node_ignores_measurements_outside_its_neighborhood() {
    let net = default_five_agent_network();
    let model = aggregate(&net, None).unwrap();
    let traj = simulate_system(&SimSystem::from_model(&model), 4, 1).unwrap();
    let run = distributed_run(&net, &model, &traj.measurements).unwrap();

    let k = 3;
    let states: Vec<NodeFilterState> = run.predicted_nodes(k).to_vec();
    let ys: Vec<Vector> = (0..5).map(|i| Vector::from_element(1, traj.measurements[k - 1][i])).collect();
    let base = network_step(&states, &ys, &net).unwrap();

    let mut perturbed = ys.clone();
    perturbed[3][0] += 10.0; // node 4
    let moved = network_step(&states, &perturbed, &net).unwrap();
    for node in [1, 2] {
        assert_eq!(base.predicted[node - 1], moved.predicted[node - 1], "node {node}");
    }
    for node in [3, 4, 5] {
        assert_ne!(base.predicted[node - 1].belief.mean, moved.predicted[node - 1].belief.mean, "node {node}");
    }
}

#[test]
fn block_diagonal_prior_reproduces_the_centralized_filter() {
    let mut r = rng(99);
    for trial in 0..15 {
        let net = random_network(&mut r);
        let dense = support::random_spd(&mut r, net.state_dims().iter().sum(), 0.2);
        let p = block_diagonal_extract(&dense, &net.state_dims()).unwrap();
        let model = aggregate(&net, Some(&p)).unwrap();
        let traj = simulate_system(&SimSystem::from_model(&model), 25, trial).unwrap();
        let c = central_run(&model, &traj.measurements).unwrap();
        let d = distributed_run(&net, &model, &traj.measurements).unwrap();
        for k in 1..=25 {
            let (cu, du) = (c.updated_at(k), d.updated_at(k));
            assert!((&cu.mean - &du.mean).amax() < 1e-9, "trial {trial} k {k}");
            assert!((&cu.cov - &du.cov).amax() < 1e-9, "trial {trial} k {k}");
        }
    }
}

#[test]
fn decoupled_subsystems_are_uncorrelated() {
    let subs = vec![
        SubsystemModel::scalar(1, 0.7, 1.0, 0.3, 0.2, 1.0).unwrap(),
        SubsystemModel::scalar(2, -0.4, 1.0, 0.5, 0.1, 2.0).unwrap(),
    ];
    let net = build_network(subs, CouplingMap::new()).unwrap();
    let sys = SimSystem::from_model(&aggregate(&net, None).unwrap());
    let runs = 4000;
    let k = 8;
    let samples: Vec<(f64, f64)> = (0..runs)
        .map(|s| {
            let t = simulate_system(&sys, k, 10_000 + s).unwrap();
            (t.states[k][0], t.states[k][1])
        })
        .collect();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| samples.iter().map(f).sum::<f64>() / runs as f64;
    let (m1, m2) = (mean(&|s| s.0), mean(&|s| s.1));
    let cov = mean(&|s| (s.0 - m1) * (s.1 - m2));
    let (v1, v2) = (mean(&|s| (s.0 - m1).powi(2)), mean(&|s| (s.1 - m2).powi(2)));
    let corr = cov / (v1 * v2).sqrt();
    // the sample correlation of independent normals has standard deviation ~ 1/sqrt(N)
    assert!(corr.abs() < 3.0 / (runs as f64).sqrt(), "corr {corr}");
}

#[test]
fn coupled_subsystems_are_correlated() {
    let net = default_five_agent_network();
    let sys = SimSystem::from_model(&aggregate(&net, None).unwrap());
    let runs = 4000;
    let mut acc = 0.0;
    for s in 0..runs {
        let t = simulate_system(&sys, 8, s).unwrap();
        acc += t.states[8][0] * t.states[8][1];
    }
    // zero-mean states; the coupling makes E[x1 x2] clearly positive
    assert!(acc / runs as f64 > 0.01);
}

#[test]
fn distributed_covariance_stays_block_diagonal() {
    let net = default_five_agent_network();
    let p = Matrix::from_fn(5, 5, |i, j| if i == j { 1.0 } else { 0.4 });
    let model = aggregate(&net, Some(&p)).unwrap();
    let traj = simulate_system(&SimSystem::from_model(&model), 10, 2).unwrap();
    let d = distributed_run(&net, &model, &traj.measurements).unwrap();
    for k in 1..=10 {
        let cov = d.updated_at(k).cov;
        assert_eq!(cov, block_diagonal_extract(&cov, &net.state_dims()).unwrap());
    }
}
