//! Shared test oracles and random model generators.
#![allow(dead_code)]

use netkf::netmodel::{aggregate, build_network, AggregatedModel, CouplingMap, NetworkModel, SubsystemModel};
use netkf::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Matrix {
    let g = gaussian_matrix(rng, n, n);
    &g * g.transpose() + Matrix::identity(n, n) * shift
}

/// Random network of 1..=3 subsystems with total state dimension at most 6
/// and random couplings.
pub fn random_network(rng: &mut ChaCha8Rng) -> NetworkModel {
    loop {
        let count = rng.gen_range(1..=3);
        let dims: Vec<(usize, usize)> = (0..count).map(|_| (rng.gen_range(1..=2), rng.gen_range(1..=2))).collect();
        if dims.iter().map(|d| d.0).sum::<usize>() > 6 {
            continue;
        }
        let subs = dims
            .iter()
            .enumerate()
            .map(|(i, &(n, p))| {
                SubsystemModel::new(
                    i + 1,
                    gaussian_matrix(rng, n, n) * 0.8,
                    gaussian_matrix(rng, p, n),
                    random_spd(rng, n, 0.1),
                    random_spd(rng, p, 0.1),
                    random_spd(rng, n, 0.2),
                )
                .unwrap()
            })
            .collect();
        let mut couplings = CouplingMap::new();
        for i in 0..count {
            for j in 0..count {
                if i != j && rng.gen_bool(0.6) {
                    couplings.insert((i + 1, j + 1), gaussian_matrix(rng, dims[i].0, dims[j].1) * 0.4);
                }
            }
        }
        return build_network(subs, couplings).unwrap();
    }
}

/// Random model with a dense joint initial covariance and a nonzero mean.
pub fn random_model(rng: &mut ChaCha8Rng) -> (NetworkModel, AggregatedModel) {
    let net = random_network(rng);
    let n: usize = net.state_dims().iter().sum();
    let p = random_spd(rng, n, 0.2);
    let mean = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let model = aggregate(&net, Some(&p)).unwrap().with_prior_mean(mean).unwrap();
    (net, model)
}

/// Affine function `offset + coeff * z` of the stacked independent
/// Gaussians `z = (x_0 - m_0, w_0, .., w_K, v_1, .., v_K)`.
#[derive(Clone)]
struct Affine {
    offset: Vector,
    coeff: Matrix,
}

/// Conditional means of the batch joint Gaussian over states and
/// measurements, computed by direct conditioning.
pub struct BatchOracle {
    /// `E[x_k | y_1..y_k]`, `k = 1..=K`.
    pub filtered: Vec<Vector>,
    /// `E[x_{k+1} | y_1..y_k]`, `k = 1..=K`.
    pub predicted: Vec<Vector>,
    /// `Cov[x_k | y_1..y_k]`.
    pub filtered_cov: Vec<Matrix>,
}

pub fn batch_oracle(model: &AggregatedModel, ys: &[Vector]) -> BatchOracle {
    let (n, p, horizon) = (model.n(), model.p_dim(), ys.len());
    let dim = n + (horizon + 1) * n + horizon * p;
    let w_col = |k: usize| n + k * n;
    let v_col = |k: usize| n + (horizon + 1) * n + (k - 1) * p;

    let mut cov_z = Matrix::zeros(dim, dim);
    cov_z.view_mut((0, 0), (n, n)).copy_from(model.p());
    for k in 0..=horizon {
        cov_z.view_mut((w_col(k), w_col(k)), (n, n)).copy_from(model.q());
    }
    for k in 1..=horizon {
        cov_z.view_mut((v_col(k), v_col(k)), (p, p)).copy_from(model.r());
    }

    let mut x0 = Affine {
        offset: model.prior_mean().clone(),
        coeff: Matrix::zeros(n, dim),
    };
    x0.coeff.view_mut((0, 0), (n, n)).copy_from(&Matrix::identity(n, n));
    let mut xs = vec![x0];
    let mut ys_aff = Vec::new();
    for k in 0..=horizon {
        let x = xs[k].clone();
        if k >= 1 {
            let mut y = Affine {
                offset: model.c() * &x.offset,
                coeff: model.c() * &x.coeff,
            };
            let mut block = y.coeff.view_mut((0, v_col(k)), (p, p));
            block += Matrix::identity(p, p);
            ys_aff.push(y);
        }
        let trans = if k == 0 { model.a() } else { model.a_tilde() };
        let mut next = Affine {
            offset: trans * &x.offset,
            coeff: trans * &x.coeff,
        };
        let mut block = next.coeff.view_mut((0, w_col(k)), (n, n));
        block += Matrix::identity(n, n);
        if k >= 1 {
            let mut block = next.coeff.view_mut((0, v_col(k)), (n, p));
            block += model.l();
        }
        xs.push(next);
    }

    let mut out = BatchOracle {
        filtered: Vec::new(),
        predicted: Vec::new(),
        filtered_cov: Vec::new(),
    };
    for k in 1..=horizon {
        let ty = Matrix::from_fn(k * p, dim, |r, c| ys_aff[r / p].coeff[(r % p, c)]);
        let my = Vector::from_fn(k * p, |r, _| ys_aff[r / p].offset[r % p]);
        let yv = Vector::from_fn(k * p, |r, _| ys[r / p][r % p]);
        let syy = &ty * &cov_z * ty.transpose();
        let solve = |b: &Matrix| syy.clone().lu().solve(b).expect("measurement covariance is invertible");
        let innov = solve(&Matrix::from_column_slice(k * p, 1, (&yv - &my).as_slice()));
        for (target, which) in [(&xs[k], 0), (&xs[k + 1], 1)] {
            let sxy = &target.coeff * &cov_z * ty.transpose();
            let mean = &target.offset + (&sxy * &innov).column(0);
            if which == 0 {
                let sxx = &target.coeff * &cov_z * target.coeff.transpose();
                out.filtered_cov.push(&sxx - &sxy * solve(&sxy.transpose()));
                out.filtered.push(mean);
            } else {
                out.predicted.push(mean);
            }
        }
    }
    out
}

/// Eigenvalues of `P Q⁻¹` from the nonsymmetric product, for cross-checking
/// the symmetric reduction.
pub fn riemann_oracle(p: &Matrix, q: &Matrix) -> f64 {
    let m = p * q.clone().try_inverse().unwrap();
    m.complex_eigenvalues().iter().map(|l| l.norm().ln().powi(2)).sum::<f64>().sqrt()
}
