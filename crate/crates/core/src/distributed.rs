//! Per-node distributed Kalman filter.
//!
//! Node `i` filters only its own state. Neighbor outputs `y^(j)`,
//! `j in N_i`, are known at node `i` through broadcasts and enter the
//! prediction as external inputs:
//!
//! ```text
//! x^(i)_{k+1|k} = A_i x^(i)_{k|k} + sum_{j in N_i} L_ij y^(j)_k
//! Σ^(i)_{k+1|k} = A_i Σ^(i)_{k|k} A_iᵀ + Q_i
//! ```
//!
//! followed by an ordinary local measurement update. Each time step is one
//! bulk-synchronous round: every node broadcasts `y^(i)_k`, then every node
//! updates and predicts.

use std::collections::BTreeSet;

use crate::central::{measurement_update, BeliefKind, GaussianBelief};
use crate::error::{Error, Result};
use crate::linalg::{block_diag, symmetrize, Matrix, Vector};
use crate::netmodel::{block, split_vector, AggregatedModel, NetworkModel, SubsystemModel};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeFilterState {
    pub node: usize,
    pub belief: GaussianBelief,
    /// Most recent local gain `K^(i)_k` (zero before the first update).
    pub gain: Matrix,
}

impl NodeFilterState {
    /// The `0|0` state of node `i`: prior mean block and `P^(i)`.
    pub fn initial(sub: &SubsystemModel, mean: Vector, cov: Matrix) -> Result<Self> {
        let n = sub.state_dim();
        if mean.len() != n || cov.shape() != (n, n) {
            return Err(Error::dims(format!("initial state of node {}", sub.index()), (n, n), cov.shape()));
        }
        Ok(Self {
            node: sub.index(),
            belief: GaussianBelief::new(mean, cov, BeliefKind::Updated, 0)?,
            gain: Matrix::zeros(n, sub.output_dim()),
        })
    }

    pub fn step(&self) -> usize {
        self.belief.step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBroadcast {
    pub sender: usize,
    pub step: usize,
    pub y: Vector,
}

/// Local prediction `k|k -> k+1|k` at node `state.node`.
///
/// `inbox` must hold exactly one broadcast at step `k` from every
/// `j in N_i` (including `i` itself when self-coupled). Messages from other
/// senders are ignored. At `k = 0` there are no measurements yet and the
/// coupling input is zero.
pub fn node_predict(
    state: &NodeFilterState,
    inbox: &[MeasurementBroadcast],
    net: &NetworkModel,
) -> Result<NodeFilterState> {
    state.belief.expect_kind(BeliefKind::Updated)?;
    let i = state.node;
    let sub = net.subsystem(i);
    let k = state.step();

    let mut mean = sub.a() * &state.belief.mean;
    if k > 0 {
        let neighbors = net.neighbors(i);
        let missing: Vec<usize> = neighbors
            .iter()
            .copied()
            .filter(|j| !inbox.iter().any(|b| b.sender == *j))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingBroadcast { node: i, missing });
        }
        for &j in neighbors {
            let mut from_j = inbox.iter().filter(|b| b.sender == j);
            let msg = from_j.next().expect("presence checked");
            if from_j.next().is_some() {
                return Err(Error::DuplicateBroadcast { node: i, sender: j });
            }
            if msg.step != k {
                return Err(Error::StaleBroadcast {
                    node: i,
                    sender: j,
                    expected: k,
                    found: msg.step,
                });
            }
            let p_j = net.subsystem(j).output_dim();
            if msg.y.len() != p_j {
                return Err(Error::dims(format!("broadcast from {j}"), (p_j, 1), (msg.y.len(), 1)));
            }
            let l_ij = net.coupling(i, j).expect("neighbors are the coupling support");
            mean += l_ij * &msg.y;
        }
    }
    let cov = symmetrize(&(sub.a() * &state.belief.cov * sub.a().transpose() + sub.q()));
    Ok(NodeFilterState {
        node: i,
        belief: GaussianBelief {
            mean,
            cov,
            kind: BeliefKind::Predicted,
            step: k + 1,
        },
        gain: state.gain.clone(),
    })
}

/// Local measurement update `k|k-1 -> k|k` with the node's own output.
pub fn node_update(state: &NodeFilterState, y: &Vector, sub: &SubsystemModel) -> Result<NodeFilterState> {
    state.belief.expect_kind(BeliefKind::Predicted)?;
    if y.len() != sub.output_dim() {
        return Err(Error::dims(
            format!("measurement of node {}", sub.index()),
            (sub.output_dim(), 1),
            (y.len(), 1),
        ));
    }
    let (mean, cov, gain) = measurement_update(&state.belief.mean, &state.belief.cov, y, sub.c(), sub.r())?;
    Ok(NodeFilterState {
        node: state.node,
        belief: GaussianBelief {
            mean,
            cov,
            kind: BeliefKind::Updated,
            step: state.step(),
        },
        gain,
    })
}

/// Output of one synchronized round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutput {
    /// `k|k` at every node.
    pub updated: Vec<NodeFilterState>,
    /// `k+1|k` at every node.
    pub predicted: Vec<NodeFilterState>,
}

fn check_aligned(states: &[NodeFilterState], kind: BeliefKind) -> Result<usize> {
    let first = states
        .first()
        .ok_or_else(|| Error::InconsistentStep("no node states".into()))?;
    let step = first.step();
    for (pos, s) in states.iter().enumerate() {
        if s.node != pos + 1 {
            return Err(Error::InconsistentStep(format!(
                "state at position {pos} belongs to node {}",
                s.node
            )));
        }
        if s.step() != step || s.belief.kind != kind {
            return Err(Error::InconsistentStep(format!(
                "node {} is at step {} ({}), expected step {step} ({kind})",
                s.node,
                s.step(),
                s.belief.kind
            )));
        }
    }
    Ok(step)
}

/// Delivers every node's `y^(j)_k` to the nodes that listen to it. A
/// self-coupled node reads its own measurement locally.
pub fn exchange_broadcasts(net: &NetworkModel, step: usize, measurements: &[Vector]) -> Vec<Vec<MeasurementBroadcast>> {
    let mut inboxes: Vec<Vec<MeasurementBroadcast>> = vec![Vec::new(); net.len()];
    for (pos, y) in measurements.iter().enumerate() {
        let sender = pos + 1;
        for listener in net.listeners(sender) {
            inboxes[listener - 1].push(MeasurementBroadcast {
                sender,
                step,
                y: y.clone(),
            });
        }
    }
    inboxes
}

/// One round: broadcast, local update, local prediction.
///
/// `states` are the `k|k-1` states of nodes `1..=I` in order and
/// `measurements[i-1]` is `y^(i)_k`.
pub fn network_step(states: &[NodeFilterState], measurements: &[Vector], net: &NetworkModel) -> Result<RoundOutput> {
    if states.len() != net.len() || measurements.len() != net.len() {
        return Err(Error::InconsistentStep(format!(
            "expected {} nodes, got {} states and {} measurements",
            net.len(),
            states.len(),
            measurements.len()
        )));
    }
    let k = check_aligned(states, BeliefKind::Predicted)?;
    let inboxes = exchange_broadcasts(net, k, measurements);

    let updated = states
        .iter()
        .zip(measurements)
        .map(|(s, y)| node_update(s, y, net.subsystem(s.node)).map_err(|e| e.at_node(s.node)))
        .collect::<Result<Vec<_>>>()?;
    let predicted = updated
        .iter()
        .zip(&inboxes)
        .map(|(s, inbox)| node_predict(s, inbox, net).map_err(|e| e.at_node(s.node)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundOutput { updated, predicted })
}

/// Stacked mean `x*` and block-diagonal covariance `Σ*`.
pub fn stack(states: &[NodeFilterState]) -> Result<(Vector, Matrix)> {
    let kind = states
        .first()
        .map(|s| s.belief.kind)
        .ok_or_else(|| Error::InconsistentStep("no node states".into()))?;
    check_aligned(states, kind)?;
    let mean: Vec<f64> = states.iter().flat_map(|s| s.belief.mean.iter().copied()).collect();
    let cov = block_diag(states.iter().map(|s| &s.belief.cov));
    Ok((Vector::from_vec(mean), cov))
}

fn stacked_belief(states: &[NodeFilterState]) -> GaussianBelief {
    let (mean, cov) = stack(states).expect("runner keeps node states aligned");
    GaussianBelief {
        mean,
        cov,
        kind: states[0].belief.kind,
        step: states[0].step(),
    }
}

/// Per-node states over a whole run, laid out like
/// [`CentralTrajectory`](crate::central::CentralTrajectory).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedTrajectory {
    pub initial: Vec<NodeFilterState>,
    pub first_prediction: Vec<NodeFilterState>,
    pub updated: Vec<Vec<NodeFilterState>>,
    pub predicted: Vec<Vec<NodeFilterState>>,
}

impl DistributedTrajectory {
    pub fn horizon(&self) -> usize {
        self.updated.len()
    }

    /// Node states at `k|k`, `k = 0` being the initial states.
    pub fn updated_nodes(&self, k: usize) -> &[NodeFilterState] {
        if k == 0 {
            &self.initial
        } else {
            &self.updated[k - 1]
        }
    }

    /// Node states at `k|k-1`, `k >= 1`.
    pub fn predicted_nodes(&self, k: usize) -> &[NodeFilterState] {
        assert!(k >= 1, "no prediction for step 0");
        if k == 1 {
            &self.first_prediction
        } else {
            &self.predicted[k - 2]
        }
    }

    /// Stacked `x*_{k|k}`, `Σ*_{k|k}`.
    pub fn updated_at(&self, k: usize) -> GaussianBelief {
        stacked_belief(self.updated_nodes(k))
    }

    /// Stacked `x*_{k|k-1}`, `Σ*_{k|k-1}`.
    pub fn predicted_at(&self, k: usize) -> GaussianBelief {
        stacked_belief(self.predicted_nodes(k))
    }
}

/// Runs every node from `x^(i)_0 ~ N(prior block, P^(i))`, where `P^(i)` is
/// diagonal block `i` of the joint `P`; off-diagonal blocks are unknown to
/// the nodes. `measurements[k-1]` is the stacked `y_k`.
pub fn distributed_run(
    net: &NetworkModel,
    model: &AggregatedModel,
    measurements: &[Vector],
) -> Result<DistributedTrajectory> {
    if measurements.is_empty() {
        return Err(Error::InvalidArgument("distributed_run needs at least one measurement".into()));
    }
    let dims = model.state_dims();
    let means = split_vector(model.prior_mean(), dims);
    let initial = net
        .subsystems()
        .iter()
        .zip(means)
        .enumerate()
        .map(|(pos, (sub, m))| NodeFilterState::initial(sub, m, block(model.p(), dims, dims, pos, pos)))
        .collect::<Result<Vec<_>>>()?;
    let first_prediction = initial
        .iter()
        .map(|s| node_predict(s, &[], net).map_err(|e| e.at_node(s.node)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_step(0))?;

    let mut updated = Vec::with_capacity(measurements.len());
    let mut predicted = Vec::with_capacity(measurements.len());
    let mut current = first_prediction.clone();
    for (idx, y) in measurements.iter().enumerate() {
        let per_node = split_vector(y, model.output_dims());
        let round = network_step(&current, &per_node, net).map_err(|e| e.at_step(idx + 1))?;
        current = round.predicted.clone();
        updated.push(round.updated);
        predicted.push(round.predicted);
    }
    Ok(DistributedTrajectory {
        initial,
        first_prediction,
        updated,
        predicted,
    })
}

/// Nodes whose trajectories can be influenced by node `j`'s measurements
/// in a single round: `j` itself and its listeners.
pub fn direct_influence(net: &NetworkModel, j: usize) -> BTreeSet<usize> {
    let mut set = net.listeners(j);
    set.insert(j);
    set
}
