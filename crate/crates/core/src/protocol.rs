//! Consensus control input, velocity-coupling estimator, and the adaptive
//! coupling-gain law.
//!
//! Each agent applies `u_i = -alpha c_i S_i - alpha w_i`, where `S_i` is the
//! combined sampled consensus term and `w_i` estimates the network-coupled
//! velocity information, removing any need to exchange velocities:
//! `w_i' = -gamma w_i - beta c_i S_i`. The per-agent gain adapts by
//! `c_i' = (beta - alpha) <x~_i, S_i> + delta (beta^2 - alpha^2)/beta <w_i, S_i>`.

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::dot;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("coupling gain `{name}` must be positive, got {value}")]
    NonpositiveGain { name: &'static str, value: f64 },
}

/// Fixed gains of the protocol. `alpha`, `beta`, `gamma` weight the control
/// input and the estimator; `delta` weights the estimator term of the gain
/// adaptation.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl ProtocolParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self, ProtocolError> {
        for (name, value) in [
            ("alpha", alpha),
            ("beta", beta),
            ("gamma", gamma),
            ("delta", delta),
        ] {
            if !(value > 0.0) {
                return Err(ProtocolError::NonpositiveGain { name, value });
            }
        }
        Ok(ProtocolParams {
            alpha,
            beta,
            gamma,
            delta,
        })
    }
}

/// Which tracking error feeds the first term of the gain adaptation.
///
/// The adaptation is stated with the instantaneous own tracking error
/// `x_i(t) - x_0(t)`, which an agent without a leader link cannot measure;
/// the sampled variant uses `x_i(t_k^i) - x_0(t)` instead. Both are
/// implemented; the instantaneous form is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum GainErrorMode {
    #[default]
    Instantaneous,
    Sampled,
}

/// Continuous state owned by one agent.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    /// Estimator of the network-coupled velocities.
    pub w: DVector<f64>,
    /// Adaptive coupling gain.
    pub c: f64,
}

/// Control input `u_i = -alpha c_i S_i - alpha w_i`.
pub fn control_input(state: &AgentState, s: &[f64], params: &ProtocolParams) -> DVector<f64> {
    let mut u = DVector::zeros(s.len());
    for i in 0..s.len() {
        u[i] = -params.alpha * state.c * s[i] - params.alpha * state.w[i];
    }
    u
}

/// Estimator dynamics `w_i' = -gamma w_i - beta c_i S_i`.
pub fn estimator_rate(state: &AgentState, s: &[f64], params: &ProtocolParams) -> DVector<f64> {
    let mut dw = DVector::zeros(s.len());
    for i in 0..s.len() {
        dw[i] = -params.gamma * state.w[i] - params.beta * state.c * s[i];
    }
    dw
}

/// Gain adaptation
/// `c_i' = (beta - alpha) <x~_i, S_i> + delta (beta^2 - alpha^2)/beta <w_i, S_i>`,
/// with `x~_i` the tracking error selected by [`GainErrorMode`].
pub fn c_rate(state: &AgentState, x_tilde: &[f64], s: &[f64], params: &ProtocolParams) -> f64 {
    let (alpha, beta) = (params.alpha, params.beta);
    (beta - alpha) * dot(x_tilde, s)
        + params.delta * (beta * beta - alpha * alpha) / beta * dot(state.w.as_slice(), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn state(x: f64, v: f64, w: f64, c: f64) -> AgentState {
        AgentState {
            x: dvector![x],
            v: dvector![v],
            w: dvector![w],
            c,
        }
    }

    fn params(alpha: f64, beta: f64, gamma: f64, delta: f64) -> ProtocolParams {
        ProtocolParams::new(alpha, beta, gamma, delta).unwrap()
    }

    #[test]
    fn rejects_nonpositive_gains() {
        assert!(matches!(
            ProtocolParams::new(0.0, 30.0, 35.0, 13.67),
            Err(ProtocolError::NonpositiveGain { name: "alpha", .. })
        ));
        assert!(matches!(
            ProtocolParams::new(1.0, 30.0, -1.0, 13.67),
            Err(ProtocolError::NonpositiveGain { name: "gamma", .. })
        ));
    }

    #[test]
    fn control_input_values() {
        let p = params(1.0, 30.0, 35.0, 13.67);
        let u = control_input(&state(0.0, 0.0, 0.0, 1.0), &[0.0], &p);
        assert_eq!(u[0], 0.0);

        let u = control_input(&state(0.0, 0.0, 0.1, 2.0), &[0.5], &p);
        assert!((u[0] - (-1.1)).abs() < 1e-15);
    }

    #[test]
    fn estimator_rate_values() {
        let p = params(1.0, 30.0, 35.0, 13.67);
        let dw = estimator_rate(&state(0.0, 0.0, 0.0, 1.0), &[0.0], &p);
        assert_eq!(dw[0], 0.0);

        let dw = estimator_rate(&state(0.0, 0.0, 0.2, 1.0), &[0.1], &p);
        assert!((dw[0] - (-10.0)).abs() < 1e-12);
    }

    #[test]
    fn estimator_decays_like_closed_form_when_uncoupled() {
        // S = 0 reduces w' = -gamma w; compare one RK4 integration over
        // [0, 1] against w(0) exp(-gamma t).
        let p = params(1.0, 30.0, 35.0, 13.67);
        let gamma = p.gamma;
        let mut w = 0.8;
        let h = 1e-3;
        let steps = 1000;
        for _ in 0..steps {
            let f = |w: f64| -gamma * w;
            let k1 = f(w);
            let k2 = f(w + 0.5 * h * k1);
            let k3 = f(w + 0.5 * h * k2);
            let k4 = f(w + h * k3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let exact = 0.8 * (-gamma * 1.0f64).exp();
        assert!((w - exact).abs() < 1e-6, "{w} vs {exact}");
        // The module-level estimator_rate produces the same slope.
        let dw = estimator_rate(&state(0.0, 0.0, 0.8, 1.0), &[0.0], &p);
        assert_eq!(dw[0], -gamma * 0.8);
    }

    #[test]
    fn c_rate_values() {
        let p = params(1.0, 30.0, 35.0, 13.67);
        assert_eq!(c_rate(&state(0.0, 0.0, 0.3, 1.0), &[0.4], &[0.0], &p), 0.0);

        // beta = alpha kills both coefficients.
        let p_eq = params(2.0, 2.0, 35.0, 13.67);
        assert_eq!(
            c_rate(&state(0.0, 0.0, 0.9, 1.0), &[1.3], &[0.7], &p_eq),
            0.0
        );

        // Independent recomputation: 29*0.1*0.2 + 13.67*(899/30)*0.05*0.2.
        let c = c_rate(&state(0.0, 0.0, 0.05, 1.0), &[0.1], &[0.2], &p);
        let expected = 29.0 * 0.02 + 13.67 * (899.0 / 30.0) * 0.01;
        assert!((c - expected).abs() < 1e-12);
        assert!((c - 4.676_443_333_333_334).abs() < 1e-12);
    }
}
