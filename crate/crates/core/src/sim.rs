//! Seeded simulation of the coupled network and the five-agent experiments.
//!
//! Sampling uses ChaCha20 (`rand_chacha` 0.3) with standard normals from
//! `rand_distr` 0.4; a Gaussian vector is `mean + G z` with `G` the
//! Cholesky factor of its covariance. Draw order per trajectory:
//! `x_0`, `w_0`, then `v_k` and (for `k < K`) `w_k` for `k = 1..=K`.
//! The same seed always gives a bit-identical trajectory within this crate.
//!
//! There is no measurement at `k = 0`, so the first transition has no
//! coupling input:
//!
//! ```text
//! x_1     = A x_0 + w_0
//! y_k     = C x_k + v_k                      k = 1..=K
//! x_{k+1} = Ã x_k + w_k + L v_k              k = 1..K
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::analysis::bounds::{compute_bound_report, BoundReport};
use crate::analysis::gap::{compare_filters, FilterComparison};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, sampling_factor, Matrix, Vector};
use crate::netmodel::{aggregate, build_network, AggregatedModel, CouplingMap, NetworkModel, SubsystemModel};

/// Pinned identifier of the sampling algorithm, written to run manifests.
pub const RNG_ALGORITHM: &str = "chacha20/rand_chacha-0.3/rand_distr-0.4-standard-normal";

/// Lower bound applied to the random scale of a block-diagonal `P = ε₁ I`.
pub const EPSILON1_FLOOR: f64 = 0.01;

/// Default path graph used by [`default_five_agent_network`].
pub const DEFAULT_EDGES: [(usize, usize); 4] = [(1, 2), (2, 3), (3, 4), (4, 5)];

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCovariance {
    /// `blkdiag(P_1, ..., P_I)` from the subsystem definitions.
    Subsystems,
    /// `P = ε₁ I` with `ε₁ ~ U(low, high)`, floored at [`EPSILON1_FLOOR`].
    BlockDiagonalScalar { low: f64, high: f64 },
    /// `P = G Gᵀ + ε₀ I` with the entries of `G` drawn from `U(0, 1)`.
    RandomSpd { eps0: f64 },
    Explicit(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: usize,
    pub seed: u64,
    pub initial_covariance: InitialCovariance,
    pub runs: usize,
    /// Mean of `x_0`; zero when absent.
    pub prior_mean: Option<Vector>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        match &self.initial_covariance {
            InitialCovariance::RandomSpd { eps0 } if !(*eps0 > 0.0) => {
                Err(Error::InvalidArgument(format!("eps0 must be positive, got {eps0}")))
            }
            InitialCovariance::BlockDiagonalScalar { low, high } if !(low <= high) => {
                Err(Error::InvalidArgument(format!("empty range [{low}, {high}]")))
            }
            _ => Ok(()),
        }
    }
}

fn covariance_rng(seed: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Resolved initial covariance, plus `ε₁` when it was drawn.
pub fn resolve_initial_covariance(net: &NetworkModel, cfg: &SimConfig) -> Result<(Matrix, Option<f64>)> {
    let n: usize = net.state_dims().iter().sum();
    let mut rng = covariance_rng(cfg.seed);
    match &cfg.initial_covariance {
        InitialCovariance::Subsystems => Ok((crate::linalg::block_diag(net.subsystems().iter().map(SubsystemModel::p)), None)),
        InitialCovariance::BlockDiagonalScalar { low, high } => {
            let eps1 = if low == high { *low } else { rng.sample(Uniform::new(*low, *high)) };
            let eps1 = eps1.max(EPSILON1_FLOOR);
            Ok((Matrix::identity(n, n) * eps1, Some(eps1)))
        }
        InitialCovariance::RandomSpd { eps0 } => {
            let unit = Uniform::new(0.0, 1.0);
            let g = Matrix::from_fn(n, n, |_, _| rng.sample(unit));
            Ok((&g * g.transpose() + Matrix::identity(n, n) * *eps0, None))
        }
        InitialCovariance::Explicit(p) => Ok((p.clone(), None)),
    }
}

/// Aggregated model with the configured initial covariance.
pub fn build_model(net: &NetworkModel, cfg: &SimConfig) -> Result<(AggregatedModel, Option<f64>)> {
    cfg.validate()?;
    let (p, eps1) = resolve_initial_covariance(net, cfg)?;
    let model = aggregate(net, Some(&p))?;
    let model = match &cfg.prior_mean {
        Some(m) => model.with_prior_mean(m.clone())?,
        None => model,
    };
    Ok((model, eps1))
}

/// Matrices needed to sample the stacked system. Unlike
/// [`AggregatedModel`], the noise covariances may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSystem {
    pub a: Matrix,
    pub a_tilde: Matrix,
    pub c: Matrix,
    pub l: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub p: Matrix,
    pub mean: Vector,
}

impl SimSystem {
    pub fn from_model(model: &AggregatedModel) -> Self {
        Self {
            a: model.a().clone(),
            a_tilde: model.a_tilde().clone(),
            c: model.c().clone(),
            l: model.l().clone(),
            q: model.q().clone(),
            r: model.r().clone(),
            p: model.p().clone(),
            mean: model.prior_mean().clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x_k`, `k = 0..=K`
    pub states: Vec<Vector>,
    /// `y_k`, `k = 1..=K` (index 0 is `y_1`)
    pub measurements: Vec<Vector>,
    /// `w_k`, `k = 0..K`
    pub process_noise: Vec<Vector>,
    /// `v_k`, `k = 1..=K` (index 0 is `v_1`)
    pub measurement_noise: Vec<Vector>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.measurements.len()
    }
}

fn gaussian(rng: &mut ChaCha20Rng, factor: &Matrix) -> Vector {
    let z = Vector::from_fn(factor.ncols(), |_, _| rng.sample(StandardNormal));
    factor * z
}

pub fn simulate_system(sys: &SimSystem, horizon: usize, seed: u64) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let p_factor = sampling_factor("P", &sys.p)?;
    let q_factor = sampling_factor("Q", &sys.q)?;
    let r_factor = sampling_factor("R", &sys.r)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let x0 = &sys.mean + gaussian(&mut rng, &p_factor);
    let w0 = gaussian(&mut rng, &q_factor);
    let x1 = &sys.a * &x0 + &w0;
    let mut traj = Trajectory {
        states: vec![x0, x1],
        measurements: Vec::with_capacity(horizon),
        process_noise: vec![w0],
        measurement_noise: Vec::with_capacity(horizon),
    };
    for k in 1..=horizon {
        let v = gaussian(&mut rng, &r_factor);
        let x = &traj.states[k];
        traj.measurements.push(&sys.c * x + &v);
        if k < horizon {
            let w = gaussian(&mut rng, &q_factor);
            let next = &sys.a_tilde * x + &w + &sys.l * &v;
            traj.states.push(next);
            traj.process_noise.push(w);
        }
        traj.measurement_noise.push(v);
    }
    Ok(traj)
}

/// Simulates `cfg.horizon` steps with `cfg.seed`.
pub fn simulate(model: &AggregatedModel, cfg: &SimConfig) -> Result<Trajectory> {
    simulate_system(&SimSystem::from_model(model), cfg.horizon, cfg.seed)
}

/// Largest deviation of the stored trajectory from its defining recursion
/// with the stored noise draws (zero for any trajectory produced here).
pub fn recursion_residual(sys: &SimSystem, traj: &Trajectory) -> f64 {
    let mut worst = max_abs(&Matrix::from_columns(&[&traj.states[1] - (&sys.a * &traj.states[0] + &traj.process_noise[0])]));
    for k in 1..traj.states.len() - 1 {
        let v = &traj.measurement_noise[k - 1];
        let expected = &sys.a_tilde * &traj.states[k] + &traj.process_noise[k] + &sys.l * v;
        worst = worst.max((&traj.states[k + 1] - expected).amax());
    }
    for (k, y) in traj.measurements.iter().enumerate() {
        let expected = &sys.c * &traj.states[k + 1] + &traj.measurement_noise[k];
        worst = worst.max((y - expected).amax());
    }
    worst
}

/// Five scalar integrators with pole 0.2, `C = 1`, `Q = R = 0.1`, coupled
/// symmetrically with gain 0.3 along `edges` (1-based, undirected).
pub fn five_agent_network(edges: &[(usize, usize)]) -> Result<NetworkModel> {
    let subs = (1..=5)
        .map(|i| SubsystemModel::scalar(i, 0.2, 1.0, 0.1, 0.1, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let mut couplings = CouplingMap::new();
    for &(i, j) in edges {
        if i == j {
            return Err(Error::InvalidArgument(format!("self-loop ({i},{j}) in an undirected graph")));
        }
        couplings.insert((i, j), Matrix::from_element(1, 1, 0.3));
        couplings.insert((j, i), Matrix::from_element(1, 1, 0.3));
    }
    build_network(subs, couplings)
}

/// [`five_agent_network`] on the path 1-2-3-4-5.
pub fn default_five_agent_network() -> NetworkModel {
    five_agent_network(&DEFAULT_EDGES).expect("default network is valid")
}

/// Result of one filter-comparison experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub model: AggregatedModel,
    pub epsilon1: Option<f64>,
    pub trajectory: Trajectory,
    pub comparison: FilterComparison,
    pub report: BoundReport,
}

/// Simulates one trajectory and runs both filters from identical zero
/// initial estimates.
pub fn run_comparison(net: &NetworkModel, cfg: &SimConfig, eps: f64) -> Result<ExperimentOutput> {
    let (model, epsilon1) = build_model(net, cfg)?;
    let trajectory = simulate(&model, cfg)?;
    let comparison = compare_filters(net, &model, &trajectory.measurements)?;
    let report = compute_bound_report(&model, eps, cfg.horizon)?;
    Ok(ExperimentOutput {
        model,
        epsilon1,
        trajectory,
        comparison,
        report,
    })
}

/// Dense initial covariance `P = G Gᵀ + ε₀ I` (ε₀ from `cfg` when it
/// already asks for a random SPD matrix, else 0.1).
pub fn run_experiment_fig2(net: &NetworkModel, cfg: &SimConfig, eps: f64) -> Result<ExperimentOutput> {
    let eps0 = match cfg.initial_covariance {
        InitialCovariance::RandomSpd { eps0 } => eps0,
        _ => 0.1,
    };
    let cfg = SimConfig {
        initial_covariance: InitialCovariance::RandomSpd { eps0 },
        ..cfg.clone()
    };
    run_comparison(net, &cfg, eps)
}

/// Block-diagonal initial covariance `P = ε₁ I` (range from `cfg` when it
/// already asks for one, else `U(0, 1)`).
pub fn run_experiment_fig3(net: &NetworkModel, cfg: &SimConfig, eps: f64) -> Result<ExperimentOutput> {
    let (low, high) = match cfg.initial_covariance {
        InitialCovariance::BlockDiagonalScalar { low, high } => (low, high),
        _ => (0.0, 1.0),
    };
    let cfg = SimConfig {
        initial_covariance: InitialCovariance::BlockDiagonalScalar { low, high },
        ..cfg.clone()
    };
    run_comparison(net, &cfg, eps)
}
