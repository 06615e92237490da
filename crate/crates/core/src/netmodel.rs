//! Networks of output-coupled LTI subsystems and their aggregated model.
//!
//! Node `i` evolves as
//!
//! ```text
//! x_{k+1}^(i) = A_i x_k^(i) + sum_{j in N_i} L_ij y_k^(j) + w_k^(i)
//! y_k^(i)     = C_i x_k^(i) + v_k^(i)
//! ```
//!
//! Stacking all nodes gives `x_{k+1} = Ã x_k + e_k` with `Ã = A + LC` and
//! `e_k = w_k + L v_k`, whose noise is correlated with `v_k`:
//! `cov(e, e) = Q + L R Lᵀ`, `cov(e, v) = L R`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, check_spd, offsets, spd_solve, symmetrize, Matrix, Vector};

/// One node's local model. Indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemModel {
    index: usize,
    a: Matrix,
    c: Matrix,
    q: Matrix,
    r: Matrix,
    p: Matrix,
}

impl SubsystemModel {
    pub fn new(index: usize, a: Matrix, c: Matrix, q: Matrix, r: Matrix, p: Matrix) -> Result<Self> {
        if index == 0 {
            return Err(Error::InvalidArgument("subsystem indices start at 1".into()));
        }
        let n = a.nrows();
        let tag = |m: &str| format!("{m}_{index}");
        if !a.is_square() {
            return Err(Error::dims(tag("A"), (n, n), a.shape()));
        }
        if c.ncols() != n {
            return Err(Error::dims(tag("C"), (c.nrows(), n), c.shape()));
        }
        let p_out = c.nrows();
        if q.shape() != (n, n) {
            return Err(Error::dims(tag("Q"), (n, n), q.shape()));
        }
        if r.shape() != (p_out, p_out) {
            return Err(Error::dims(tag("R"), (p_out, p_out), r.shape()));
        }
        if p.shape() != (n, n) {
            return Err(Error::dims(tag("P"), (n, n), p.shape()));
        }
        check_spd(&tag("Q"), &q)?;
        check_spd(&tag("R"), &r)?;
        check_spd(&tag("P"), &p)?;
        Ok(Self { index, a, c, q, r, p })
    }

    /// Scalar node, convenient for examples and tests.
    pub fn scalar(index: usize, a: f64, c: f64, q: f64, r: f64, p: f64) -> Result<Self> {
        let s = |v: f64| Matrix::from_element(1, 1, v);
        Self::new(index, s(a), s(c), s(q), s(r), s(p))
    }

    pub fn index(&self) -> usize {
        self.index
    }
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn q(&self) -> &Matrix {
        &self.q
    }
    pub fn r(&self) -> &Matrix {
        &self.r
    }
    pub fn p(&self) -> &Matrix {
        &self.p
    }
    /// State dimension `n_i`.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    /// Output dimension `p_i`.
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
}

/// Sparse coupling gains keyed by `(i, j)`: node `i` is driven by `L_ij y^(j)`.
pub type CouplingMap = BTreeMap<(usize, usize), Matrix>;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    subsystems: Vec<SubsystemModel>,
    couplings: CouplingMap,
    neighbors: BTreeMap<usize, BTreeSet<usize>>,
}

/// Validates the subsystems and couplings and derives the neighbor sets.
///
/// All-zero coupling blocks are dropped, so the neighbor sets are exactly
/// the support of the stored couplings.
pub fn build_network(subsystems: Vec<SubsystemModel>, couplings: CouplingMap) -> Result<NetworkModel> {
    let count = subsystems.len();
    if count == 0 {
        return Err(Error::InvalidArgument("a network needs at least one subsystem".into()));
    }
    for (pos, s) in subsystems.iter().enumerate() {
        if s.index != pos + 1 {
            return Err(Error::NonContiguousIndex { count, found: s.index });
        }
    }
    let mut kept = CouplingMap::new();
    for ((i, j), l) in couplings {
        if i == 0 || j == 0 || i > count || j > count {
            return Err(Error::UnknownSubsystem { i, j });
        }
        let expected = (subsystems[i - 1].state_dim(), subsystems[j - 1].output_dim());
        if l.shape() != expected {
            return Err(Error::dims(format!("L_({i},{j})"), expected, l.shape()));
        }
        if l.iter().any(|v| *v != 0.0) {
            kept.insert((i, j), l);
        }
    }
    let mut neighbors: BTreeMap<usize, BTreeSet<usize>> = (1..=count).map(|i| (i, BTreeSet::new())).collect();
    for &(i, j) in kept.keys() {
        neighbors.get_mut(&i).expect("index checked above").insert(j);
    }
    Ok(NetworkModel {
        subsystems,
        couplings: kept,
        neighbors,
    })
}

impl NetworkModel {
    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystems(&self) -> &[SubsystemModel] {
        &self.subsystems
    }

    /// Subsystem by 1-based index.
    pub fn subsystem(&self, i: usize) -> &SubsystemModel {
        &self.subsystems[i - 1]
    }

    pub fn couplings(&self) -> &CouplingMap {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<&Matrix> {
        self.couplings.get(&(i, j))
    }

    /// `N_i = { j : L_ij != 0 }`.
    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.neighbors[&i]
    }

    /// Nodes that listen to node `j`, i.e. every `i` with `j` in `N_i`.
    pub fn listeners(&self, j: usize) -> BTreeSet<usize> {
        self.couplings.keys().filter(|(_, jj)| *jj == j).map(|(i, _)| *i).collect()
    }

    pub fn state_dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(SubsystemModel::state_dim).collect()
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(SubsystemModel::output_dim).collect()
    }

    /// Dense `n x p` coupling matrix assembled from the sparse map.
    pub fn dense_coupling(&self) -> Matrix {
        let (n_dims, p_dims) = (self.state_dims(), self.output_dims());
        let (row_off, col_off) = (offsets(&n_dims), offsets(&p_dims));
        let mut l = Matrix::zeros(n_dims.iter().sum(), p_dims.iter().sum());
        for (&(i, j), block) in &self.couplings {
            l.view_mut((row_off[i - 1], col_off[j - 1]), block.shape()).copy_from(block);
        }
        l
    }
}

/// Stacked model of the whole network, with the derived correlated-noise
/// statistics. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedModel {
    state_dims: Vec<usize>,
    output_dims: Vec<usize>,
    a: Matrix,
    c: Matrix,
    q: Matrix,
    r: Matrix,
    l: Matrix,
    p: Matrix,
    prior_mean: Vector,
    a_tilde: Matrix,
    q_tilde: Matrix,
    s_tilde: Matrix,
    u: Matrix,
}

/// Builds the aggregated model. Without `p_joint` the initial covariance is
/// `blkdiag(P_1, ..., P_I)`; a supplied joint covariance may have
/// off-diagonal blocks but must itself be SPD.
pub fn aggregate(net: &NetworkModel, p_joint: Option<&Matrix>) -> Result<AggregatedModel> {
    let subs = net.subsystems();
    let a = block_diag(subs.iter().map(SubsystemModel::a));
    let c = block_diag(subs.iter().map(SubsystemModel::c));
    let q = block_diag(subs.iter().map(SubsystemModel::q));
    let r = block_diag(subs.iter().map(SubsystemModel::r));
    let l = net.dense_coupling();
    let n = a.nrows();
    let p = match p_joint {
        Some(pj) => {
            if pj.shape() != (n, n) {
                return Err(Error::dims("P", (n, n), pj.shape()));
            }
            check_spd("P", pj)?;
            pj.clone()
        }
        None => block_diag(subs.iter().map(SubsystemModel::p)),
    };

    let a_tilde = &a + &l * &c;
    let q_tilde = symmetrize(&(&q + &l * &r * l.transpose()));
    let s_tilde = &l * &r;
    let r_inv_c = spd_solve("R", &r, &c)?;
    let u = symmetrize(&(c.transpose() * r_inv_c));

    Ok(AggregatedModel {
        state_dims: net.state_dims(),
        output_dims: net.output_dims(),
        prior_mean: Vector::zeros(n),
        a,
        c,
        q,
        r,
        l,
        p,
        a_tilde,
        q_tilde,
        s_tilde,
        u,
    })
}

impl AggregatedModel {
    /// Replaces the zero prior mean of `x_0`.
    pub fn with_prior_mean(mut self, mean: Vector) -> Result<Self> {
        if mean.len() != self.n() {
            return Err(Error::dims("prior mean", (self.n(), 1), (mean.len(), 1)));
        }
        self.prior_mean = mean;
        Ok(self)
    }

    /// Total state dimension `n`.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Total output dimension `p`.
    pub fn p_dim(&self) -> usize {
        self.c.nrows()
    }
    pub fn state_dims(&self) -> &[usize] {
        &self.state_dims
    }
    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn q(&self) -> &Matrix {
        &self.q
    }
    pub fn r(&self) -> &Matrix {
        &self.r
    }
    /// Dense coupling matrix `L`.
    pub fn l(&self) -> &Matrix {
        &self.l
    }
    /// Joint initial covariance `P`.
    pub fn p(&self) -> &Matrix {
        &self.p
    }
    pub fn prior_mean(&self) -> &Vector {
        &self.prior_mean
    }
    /// `Ã = A + LC`.
    pub fn a_tilde(&self) -> &Matrix {
        &self.a_tilde
    }
    /// `Q̃ = Q + L R Lᵀ`.
    pub fn q_tilde(&self) -> &Matrix {
        &self.q_tilde
    }
    /// `S̃ = L R`.
    pub fn s_tilde(&self) -> &Matrix {
        &self.s_tilde
    }
    /// `U = Cᵀ R⁻¹ C`.
    pub fn u(&self) -> &Matrix {
        &self.u
    }
    /// `P*`: the block-diagonal part of `P`.
    pub fn p_star(&self) -> Matrix {
        block_diagonal_extract(&self.p, &self.state_dims).expect("dims consistent by construction")
    }
    pub fn is_p_block_diagonal(&self) -> bool {
        self.p == self.p_star()
    }
}

/// Keeps the diagonal blocks of `p` (sizes `dims`) and zeroes the rest.
pub fn block_diagonal_extract(p: &Matrix, dims: &[usize]) -> Result<Matrix> {
    let n: usize = dims.iter().sum();
    if p.shape() != (n, n) {
        return Err(Error::dims("block_diagonal_extract", (n, n), p.shape()));
    }
    let mut out = Matrix::zeros(n, n);
    for (&off, &d) in offsets(dims).iter().zip(dims) {
        out.view_mut((off, off), (d, d)).copy_from(&p.view((off, off), (d, d)));
    }
    Ok(out)
}

/// Extracts block `(i, j)` (0-based) of a matrix partitioned by `rows`/`cols`.
pub fn block(m: &Matrix, rows: &[usize], cols: &[usize], i: usize, j: usize) -> Matrix {
    let (ro, co) = (offsets(rows), offsets(cols));
    m.view((ro[i], co[j]), (rows[i], cols[j])).into_owned()
}

/// Splits a stacked vector into per-node pieces.
pub fn split_vector(v: &Vector, dims: &[usize]) -> Vec<Vector> {
    offsets(dims)
        .iter()
        .zip(dims)
        .map(|(&o, &d)| v.rows(o, d).into_owned())
        .collect()
}
