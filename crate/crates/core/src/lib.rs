//! Simulation engine for event-triggered leader-following consensus of
//! second-order nonlinear multi-agent systems.
//!
//! A network of follower agents with double-integrator dynamics and a
//! nonlinear self-term tracks a leader. Followers exchange only sampled
//! relative position information: each agent broadcasts its position when a
//! local event-triggered rule fires, and holds the last-received neighbor
//! broadcasts in a zero-order-hold store between events. Both the coupling
//! gains of the consensus protocol and the trigger thresholds adapt online,
//! so no agent needs spectral information about the communication graph.
//!
//! Module map:
//!
//! - [`topology`]: communication graph, Laplacian, leader-augmented matrix
//!   `H = L + diag(K)`, and spectral certificates.
//! - [`dynamics`]: agent self-dynamics `f(t, x, v)` with a pendulum instance
//!   and a Lipschitz-condition validator.
//! - [`trigger`]: the event rule, the sampled-state store, and the threshold
//!   adaptive law.
//! - [`protocol`]: control input, velocity-coupling estimator, and the gain
//!   adaptive law.
//! - [`simulator`]: fixed-step integration of the coupled ODE/event system.
//! - [`analysis`]: Lyapunov machinery (`Omega`, `Pi`), numeric feasibility
//!   checks, and consensus/event metrics.
//! - [`config`]: TOML experiment configuration with strict schema.
//! - [`report`]: CSV serialization of run records and reports.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod linalg;
pub mod protocol;
pub mod report;
pub mod simulator;
pub mod topology;
pub mod trigger;
