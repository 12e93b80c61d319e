//! Per-agent event detection, the zero-order-hold sampled-state store, and
//! the threshold adaptive law.
//!
//! Agent `i` fires when the squared norm of its measurement error
//! `e_xi = x_i(t_k^i) - x_i(t)` reaches the threshold `|d_i| ||S_i||^2`,
//! where `S_i` is the combined sampled consensus term and `d_i` adapts by
//! `d_i' = -xi_i ||S_i||^2` (non-increasing). On firing, the agent
//! rebroadcasts its position; neighbors hold received values constant until
//! the next broadcast.

use std::collections::BTreeMap;

use nalgebra::DVector;
use thiserror::Error;

use crate::linalg::{norm, norm_squared};
use crate::topology::Topology;

/// Equilibrium guard: no event is generated when both the measurement error
/// and the combined term are below this, which prevents continuous firing at
/// exact consensus where the threshold degenerates to zero.
pub const EQUILIBRIUM_GUARD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TriggerError {
    #[error("agent {agent} has no broadcast entry for neighbor {neighbor}; every agent must broadcast at t0")]
    MissingNeighbor { agent: usize, neighbor: usize },
}

/// Zero-order-hold cache of the agent's own last broadcast and the latest
/// broadcasts received from each neighbor. Entries change only when a
/// broadcast arrives.
#[derive(Debug, Clone)]
pub struct SampledStore {
    own_broadcast: DVector<f64>,
    own_broadcast_time: f64,
    /// Broadcast velocity at the same instants; held for diagnostics only,
    /// never consumed by the trigger or the protocol.
    own_broadcast_velocity: DVector<f64>,
    neighbor_broadcast: BTreeMap<usize, (DVector<f64>, f64)>,
    leader_access: bool,
}

/// Broadcast message delivered to all neighbors within the same simulation
/// step (ideal channel).
#[derive(Debug, Clone)]
pub struct BroadcastMsg {
    pub sender: usize,
    pub position: DVector<f64>,
    pub time: f64,
}

impl SampledStore {
    /// Store for agent `i` right after its initial broadcast at `t0`.
    /// Neighbor entries are filled by [`SampledStore::receive`] as the other
    /// agents' `t0` broadcasts arrive.
    pub fn new(topo: &Topology, i: usize, x: &[f64], v: &[f64], t0: f64) -> Self {
        SampledStore {
            own_broadcast: DVector::from_column_slice(x),
            own_broadcast_time: t0,
            own_broadcast_velocity: DVector::from_column_slice(v),
            neighbor_broadcast: BTreeMap::new(),
            leader_access: topo.has_leader_access(i),
        }
    }

    /// Applies a neighbor broadcast. Messages from non-neighbors are ignored
    /// by the caller; the store itself records whatever it is handed.
    pub fn receive(&mut self, msg: &BroadcastMsg) {
        self.neighbor_broadcast
            .insert(msg.sender, (msg.position.clone(), msg.time));
    }

    pub fn own_broadcast(&self) -> &DVector<f64> {
        &self.own_broadcast
    }

    pub fn own_broadcast_time(&self) -> f64 {
        self.own_broadcast_time
    }

    pub fn leader_access(&self) -> bool {
        self.leader_access
    }

    pub fn neighbor_entry(&self, j: usize) -> Option<&(DVector<f64>, f64)> {
        self.neighbor_broadcast.get(&j)
    }

    /// Measurement error `e_xi(t) = x_i(t_k^i) - x_i(t)`.
    pub fn measurement_error(&self, x_now: &[f64]) -> DVector<f64> {
        let mut e = self.own_broadcast.clone();
        for (ei, xi) in e.iter_mut().zip(x_now) {
            *ei -= xi;
        }
        e
    }

    /// Velocity counterpart of the measurement error; diagnostic only.
    pub fn velocity_error(&self, v_now: &[f64]) -> DVector<f64> {
        let mut e = self.own_broadcast_velocity.clone();
        for (ei, vi) in e.iter_mut().zip(v_now) {
            *ei -= vi;
        }
        e
    }

    /// Rebroadcast: own entry is replaced by the current position, which
    /// resets the measurement error to zero, and a message for the neighbors
    /// is produced.
    pub fn on_fire(&mut self, i: usize, x_now: &[f64], v_now: &[f64], t: f64) -> BroadcastMsg {
        self.own_broadcast = DVector::from_column_slice(x_now);
        self.own_broadcast_velocity = DVector::from_column_slice(v_now);
        self.own_broadcast_time = t;
        BroadcastMsg {
            sender: i,
            position: self.own_broadcast.clone(),
            time: t,
        }
    }
}

/// Adaptive trigger threshold state of one agent.
#[derive(Debug, Clone)]
pub struct TriggerState {
    /// Current threshold value `d_i(t)`; may cross zero, the trigger uses
    /// `|d_i|`.
    pub d: f64,
    /// Adaptation rate `xi_i > 0`.
    pub xi: f64,
    pub d_initial: f64,
}

impl TriggerState {
    pub fn new(d_initial: f64, xi: f64) -> Self {
        TriggerState {
            d: d_initial,
            xi,
            d_initial,
        }
    }
}

/// Combined sampled consensus term
/// `S_i = sum_j L_ij x_j(t_k^j) + k_i (x_i(t_k^i) - x_0(t))`, computed in the
/// relative-difference form
/// `-sum_j w_ij [x_j(t_k^j) - x_i(t_k^i)] - k_i [x_0(t) - x_i(t_k^i)]`
/// so that only relative positions are consumed. For `k_i = 0` the leader
/// argument is ignored.
pub fn combined_term(
    store: &SampledStore,
    topo: &Topology,
    i: usize,
    x0: &[f64],
) -> Result<DVector<f64>, TriggerError> {
    let dim = store.own_broadcast.len();
    let own = &store.own_broadcast;
    let mut s = DVector::zeros(dim);
    for j in topo.neighbors(i) {
        let w = topo.edge_weight(i, j);
        let (xj, _) = store
            .neighbor_entry(j)
            .ok_or(TriggerError::MissingNeighbor {
                agent: i,
                neighbor: j,
            })?;
        for c in 0..dim {
            s[c] -= w * (xj[c] - own[c]);
        }
    }
    let k = topo.leader_weight(i);
    if k > 0.0 {
        for c in 0..dim {
            s[c] -= k * (x0[c] - own[c]);
        }
    }
    Ok(s)
}

/// Trigger function value and threshold.
#[derive(Debug, Clone, Copy)]
pub struct TriggerEval {
    /// `E_i = ||e_x||^2 - |d| ||S||^2`; an event fires when `E_i >= 0`.
    pub value: f64,
    /// Threshold `|d| ||S||^2`.
    pub threshold: f64,
}

/// Evaluates the trigger function. `d sign(d) = |d|`, so a negative
/// threshold state still yields a nonnegative threshold. An infinite `d`
/// (trigger disabled) gives an infinite threshold even when `S = 0`.
pub fn trigger_value(e_x: &[f64], d: f64, s: &[f64]) -> TriggerEval {
    let s2 = norm_squared(s);
    let threshold = if d.is_infinite() {
        f64::INFINITY
    } else {
        d.abs() * s2
    };
    TriggerEval {
        value: norm_squared(e_x) - threshold,
        threshold,
    }
}

/// Event decision: fire iff `E >= 0` and the equilibrium guard does not
/// hold (both `||e_x||` and `||S||` below [`EQUILIBRIUM_GUARD`]).
pub fn should_fire(value: f64, e_x: &[f64], s: &[f64]) -> bool {
    if !(value >= 0.0) {
        return false;
    }
    !(norm(e_x) < EQUILIBRIUM_GUARD && norm(s) < EQUILIBRIUM_GUARD)
}

/// Threshold adaptation rate `d_i' = -xi ||S||^2 <= 0`.
pub fn d_rate(s: &[f64], xi: f64) -> f64 {
    -xi * norm_squared(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector, DMatrix};
    use proptest::prelude::*;

    fn two_agent_topo() -> Topology {
        crate::topology::build_topology(dmatrix![0.0, 1.0; 1.0, 0.0], dvector![1.0, 0.0]).unwrap()
    }

    #[test]
    fn combined_term_at_consensus_is_zero() {
        let topo = two_agent_topo();
        let mut store = SampledStore::new(&topo, 0, &[0.4], &[0.0], 0.0);
        store.receive(&BroadcastMsg {
            sender: 1,
            position: dvector![0.4],
            time: 0.0,
        });
        let s = combined_term(&store, &topo, 0, &[0.4]).unwrap();
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn combined_term_hand_value() {
        // w_12 = 1, k_1 = 1, x_1(t_k) = 1, x_2(t_k) = 0, x0 = 0:
        // S_1 = -(0 - 1) - 1 (0 - 1) = 2.
        let topo = two_agent_topo();
        let mut store = SampledStore::new(&topo, 0, &[1.0], &[0.0], 0.0);
        store.receive(&BroadcastMsg {
            sender: 1,
            position: dvector![0.0],
            time: 0.0,
        });
        let s = combined_term(&store, &topo, 0, &[0.0]).unwrap();
        assert_eq!(s[0], 2.0);
    }

    #[test]
    fn combined_term_missing_neighbor_is_protocol_violation() {
        let topo = two_agent_topo();
        let store = SampledStore::new(&topo, 0, &[1.0], &[0.0], 0.0);
        assert!(matches!(
            combined_term(&store, &topo, 0, &[0.0]),
            Err(TriggerError::MissingNeighbor {
                agent: 0,
                neighbor: 1
            })
        ));
    }

    /// Dense matrix oracle: `S = L x_b + K o (x_b - x0 1)` evaluated directly,
    /// against the relative-difference form used by `combined_term`.
    #[test]
    fn combined_term_matches_matrix_oracle() {
        use rand::{Rng, SeedableRng};
        let l = dmatrix![
            6.0, -1.0, -2.0, -1.0, -2.0,  0.0;
           -1.0,  8.0, -3.0,  0.0,  0.0, -4.0;
           -2.0, -3.0,  5.0,  0.0,  0.0,  0.0;
           -1.0,  0.0,  0.0,  4.0, -3.0,  0.0;
           -2.0,  0.0,  0.0, -3.0,  6.0, -1.0;
            0.0, -4.0,  0.0,  0.0, -1.0,  5.0
        ];
        let k = dvector![2.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let topo = crate::topology::from_laplacian(l.clone(), k.clone()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let xb: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x0 = rng.gen_range(-1.0..1.0);
            let xb_vec = DVector::from_column_slice(&xb);
            let oracle = &l * &xb_vec
                + DVector::from_iterator(6, (0..6).map(|i| k[i] * (xb[i] - x0)));
            for i in 0..6 {
                let mut store = SampledStore::new(&topo, i, &[xb[i]], &[0.0], 0.0);
                for j in topo.neighbors(i) {
                    store.receive(&BroadcastMsg {
                        sender: j,
                        position: dvector![xb[j]],
                        time: 0.0,
                    });
                }
                let s = combined_term(&store, &topo, i, &[x0]).unwrap();
                assert!((s[0] - oracle[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trigger_value_examples() {
        let eval = trigger_value(&[0.0], 0.7, &[0.0]);
        assert_eq!(eval.value, 0.0);
        assert_eq!(eval.threshold, 0.0);

        let eval = trigger_value(&[0.3], 0.5, &[0.4]);
        assert!((eval.value - 0.01).abs() < 1e-15);
        assert!((eval.threshold - 0.08).abs() < 1e-15);

        let neg = trigger_value(&[0.3], -0.5, &[0.4]);
        assert_eq!(neg.value, eval.value);
    }

    #[test]
    fn infinite_threshold_disables_trigger() {
        let eval = trigger_value(&[0.3], f64::INFINITY, &[0.0]);
        assert_eq!(eval.threshold, f64::INFINITY);
        assert!(!should_fire(eval.value, &[0.3], &[0.0]));
    }

    #[test]
    fn fire_decision_cases() {
        assert!(should_fire(0.01, &[0.3], &[0.1]));
        // Exact consensus: E = 0 but both terms vanish, guard holds.
        assert!(!should_fire(0.0, &[0.0], &[0.0]));
        assert!(!should_fire(-0.01, &[0.3], &[0.4]));
        // Zero threshold with a real measurement error still fires.
        assert!(should_fire(0.09, &[0.3], &[0.0]));
    }

    #[test]
    fn d_rate_examples() {
        assert_eq!(d_rate(&[0.0], 0.5), 0.0);
        assert_eq!(d_rate(&[2.0], 0.5), -2.0);
        assert!(d_rate(&[1.3, -0.4], 0.25) <= 0.0);
    }

    #[test]
    fn on_fire_resets_measurement_error_and_updates_receivers() {
        let topo = two_agent_topo();
        let mut sender = SampledStore::new(&topo, 0, &[0.1], &[0.0], 0.0);
        let mut receiver = SampledStore::new(&topo, 1, &[0.2], &[0.0], 0.0);
        let msg = sender.on_fire(0, &[0.7], &[0.3], 1.25);
        receiver.receive(&msg);
        assert_eq!(sender.measurement_error(&[0.7])[0], 0.0);
        assert_eq!(sender.own_broadcast_time(), 1.25);
        let (pos, time) = receiver.neighbor_entry(0).unwrap();
        assert_eq!(pos[0], 0.7);
        assert_eq!(*time, 1.25);
        // Diagnostic velocity error is recorded but plays no role above.
        assert_eq!(sender.velocity_error(&[0.3])[0], 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trigger_invariant_under_threshold_sign(
            e in proptest::collection::vec(-5.0f64..5.0, 1..4),
            s in proptest::collection::vec(-5.0f64..5.0, 1..4),
            d in -10.0f64..10.0,
        ) {
            let a = trigger_value(&e, d, &s);
            let b = trigger_value(&e, -d, &s);
            prop_assert_eq!(a.value, b.value);
            prop_assert_eq!(a.threshold, b.threshold);
        }

        #[test]
        fn d_rate_never_positive(
            s in proptest::collection::vec(-10.0f64..10.0, 1..4),
            xi in 0.01f64..5.0,
        ) {
            prop_assert!(d_rate(&s, xi) <= 0.0);
        }
    }

    #[test]
    fn store_ignores_time_between_events() {
        let topo = crate::topology::build_topology(
            DMatrix::zeros(1, 1),
            dvector![1.0],
        )
        .unwrap();
        let store = SampledStore::new(&topo, 0, &[0.5], &[0.1], 0.0);
        // No broadcast arrives: the held value is constant regardless of the
        // querying time.
        assert_eq!(store.own_broadcast()[0], 0.5);
        assert_eq!(store.own_broadcast_time(), 0.0);
    }
}
