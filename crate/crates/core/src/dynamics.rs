//! Agent self-dynamics `f(t, x, v)` and the standing structural assumption:
//! the velocity enters linearly with coefficient `varsigma`, and the
//! position-only part is Lipschitz with constant `rho`.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::norm;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("rod length must be positive, got {0}")]
    NonpositiveLength(f64),
    #[error("mass must be positive, got {0}")]
    NonpositiveMass(f64),
    #[error("unknown dynamics model `{0}`")]
    UnknownModel(String),
    #[error("model `{model}` is missing parameter `{param}`")]
    MissingParameter { model: String, param: String },
}

/// Self-dynamics of every agent and the leader. Implementations must be pure
/// functions of their inputs so models can be shared across workers.
pub trait Dynamics: Send + Sync {
    /// Writes `f(t, x, v)` into `out`.
    fn eval(&self, t: f64, x: &[f64], v: &[f64], out: &mut [f64]);

    /// The position-only part `f(t, x)` = `eval` with the linear velocity
    /// coupling removed. The default evaluates at `v = 0`.
    fn position_part(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let zeros = vec![0.0; x.len()];
        self.eval(t, x, &zeros, out);
    }

    /// Linear velocity-coupling coefficient.
    fn varsigma(&self) -> f64;

    /// Claimed Lipschitz constant of the position-only part.
    fn rho(&self) -> f64;

    /// Spatial dimension of positions and velocities.
    fn state_dim(&self) -> usize;
}

/// Damped pendulum: `f(t, x, v) = -(g/l) sin(x) - (k/m) v`, applied
/// elementwise. `varsigma = -k/m`; `|d/dx sin| <= 1` gives `rho = g/l`.
#[derive(Debug, Clone)]
pub struct Pendulum {
    pub g: f64,
    pub k: f64,
    pub l: f64,
    pub m: f64,
    dim: usize,
}

impl Pendulum {
    pub fn new(g: f64, k: f64, l: f64, m: f64) -> Result<Self, DynamicsError> {
        if l <= 0.0 {
            return Err(DynamicsError::NonpositiveLength(l));
        }
        if m <= 0.0 {
            return Err(DynamicsError::NonpositiveMass(m));
        }
        Ok(Pendulum { g, k, l, m, dim: 1 })
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }
}

impl Dynamics for Pendulum {
    fn eval(&self, _t: f64, x: &[f64], v: &[f64], out: &mut [f64]) {
        let a = self.g / self.l;
        let b = self.k / self.m;
        for i in 0..out.len() {
            out[i] = -a * x[i].sin() - b * v[i];
        }
    }

    fn varsigma(&self) -> f64 {
        -self.k / self.m
    }

    fn rho(&self) -> f64 {
        self.g / self.l
    }

    fn state_dim(&self) -> usize {
        self.dim
    }
}

/// `f = 0`: pure double integrators.
#[derive(Debug, Clone)]
pub struct Zero {
    dim: usize,
}

impl Zero {
    pub fn new(dim: usize) -> Self {
        Zero { dim }
    }
}

impl Dynamics for Zero {
    fn eval(&self, _t: f64, _x: &[f64], _v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn varsigma(&self) -> f64 {
        0.0
    }

    fn rho(&self) -> f64 {
        0.0
    }

    fn state_dim(&self) -> usize {
        self.dim
    }
}

/// Outcome of the numeric structural-assumption check.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Largest observed `|f(t,x) - f(t,y)| / |x - y|` over the grid.
    pub max_lipschitz_ratio: f64,
    pub rho_claimed: f64,
    pub lipschitz_ok: bool,
    /// Largest residual of `eval(t,x,v) - eval(t,x,v') - varsigma (v - v')`.
    pub max_coupling_residual: f64,
    pub coupling_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.lipschitz_ok && self.coupling_ok
    }
}

/// Checks the Lipschitz inequality for the position-only part on all pairs
/// of an axis-aligned grid over `[lo, hi]^dim`, and the linear-coupling
/// decomposition on a sample of velocity pairs. Report-only: never fails.
pub fn validate_assumption1(
    model: &Arc<dyn Dynamics>,
    lo: &[f64],
    hi: &[f64],
    grid_points: usize,
) -> ValidationReport {
    assert!(grid_points >= 2, "need at least 2 grid points per axis");
    let dim = model.state_dim();
    assert_eq!(lo.len(), dim);
    assert_eq!(hi.len(), dim);

    let times = [0.0, 0.7, 5.0];
    let points = grid(lo, hi, grid_points, dim);
    let mut fa = vec![0.0; dim];
    let mut fb = vec![0.0; dim];

    let mut max_ratio = 0.0f64;
    for &t in &times {
        for (idx, a) in points.iter().enumerate() {
            for b in points.iter().skip(idx + 1) {
                let dx: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
                let dx_norm = norm(&dx);
                if dx_norm == 0.0 {
                    continue;
                }
                model.position_part(t, a, &mut fa);
                model.position_part(t, b, &mut fb);
                let df: Vec<f64> = fa.iter().zip(&fb).map(|(p, q)| p - q).collect();
                max_ratio = max_ratio.max(norm(&df) / dx_norm);
            }
        }
    }

    // Linear coupling: eval(t,x,v) - eval(t,x,v') must equal varsigma (v-v').
    let varsigma = model.varsigma();
    let v_samples = [-2.0, -0.5, 0.0, 1.0, 3.0];
    let mut max_residual = 0.0f64;
    for &t in &times {
        for x in points.iter().take(7) {
            for &va in &v_samples {
                for &vb in &v_samples {
                    let v1 = vec![va; dim];
                    let v2 = vec![vb; dim];
                    model.eval(t, x, &v1, &mut fa);
                    model.eval(t, x, &v2, &mut fb);
                    let res: Vec<f64> = fa
                        .iter()
                        .zip(&fb)
                        .zip(v1.iter().zip(&v2))
                        .map(|((p, q), (r, s))| p - q - varsigma * (r - s))
                        .collect();
                    max_residual = max_residual.max(norm(&res));
                }
            }
        }
    }

    ValidationReport {
        max_lipschitz_ratio: max_ratio,
        rho_claimed: model.rho(),
        lipschitz_ok: max_ratio <= model.rho() + 1e-9,
        max_coupling_residual: max_residual,
        coupling_ok: max_residual <= 1e-9,
    }
}

fn grid(lo: &[f64], hi: &[f64], points: usize, dim: usize) -> Vec<Vec<f64>> {
    let axis: Vec<Vec<f64>> = (0..dim)
        .map(|d| {
            (0..points)
                .map(|i| lo[d] + (hi[d] - lo[d]) * i as f64 / (points - 1) as f64)
                .collect()
        })
        .collect();
    let total = points.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut point = vec![0.0; dim];
        for d in 0..dim {
            point[d] = axis[d][idx % points];
            idx /= points;
        }
        out.push(point);
    }
    out
}

/// Looks up a model by name with a scalar parameter map, for config files.
pub fn model_from_name(
    name: &str,
    params: &std::collections::BTreeMap<String, f64>,
    state_dim: usize,
) -> Result<Arc<dyn Dynamics>, DynamicsError> {
    let need = |key: &str| {
        params
            .get(key)
            .copied()
            .ok_or_else(|| DynamicsError::MissingParameter {
                model: name.to_string(),
                param: key.to_string(),
            })
    };
    match name {
        "pendulum" => {
            let p = Pendulum::new(need("g")?, need("k")?, need("l")?, need("m")?)?
                .with_dim(state_dim);
            Ok(Arc::new(p))
        }
        "zero" => Ok(Arc::new(Zero::new(state_dim))),
        other => Err(DynamicsError::UnknownModel(other.to_string())),
    }
}
