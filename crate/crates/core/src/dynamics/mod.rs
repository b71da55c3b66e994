//! Time integration.
//!
//! Three real-valued phase models share one explicit Euler kernel:
//! the plain Kuramoto model, the delayed model reading each neighbour
//! through a [`HistoryBuffer`], and the phase-lag model where delays are
//! replaced by fixed offsets `eta = omega * tau`. The complex-valued
//! counterpart lives in [`flow`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod euler;
pub mod flow;
mod history;

pub use euler::{integrate_dkm, integrate_km, integrate_phase_lag};
pub use flow::{closed_form_state, complex_step, complex_trajectory, ComplexState, Propagator};
pub use history::HistoryBuffer;

/// Default Euler step, seconds.
pub const DEFAULT_DT: f64 = 1e-4;
/// Default interval between renormalizations of the complex flow, seconds.
pub const DEFAULT_SIGMA: f64 = 1e-3;

/// Natural frequencies in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Frequencies {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Frequencies {
    pub fn per_node(&self, n: usize) -> Vec<f64> {
        match self {
            Frequencies::Uniform(w) => vec![*w; n],
            Frequencies::PerNode(ws) => ws.clone(),
        }
    }

    /// Mean frequency, used wherever a single scalar is required.
    pub fn mean(&self) -> f64 {
        match self {
            Frequencies::Uniform(w) => *w,
            Frequencies::PerNode(ws) => ws.iter().sum::<f64>() / ws.len() as f64,
        }
    }
}

/// How `theta_j(s)` is defined for `s < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HistoryPolicy {
    /// `theta_j(s) = theta_j(0)`.
    #[default]
    ConstantInitial,
    /// `theta_j(s) = theta_j(0) + omega_j * s`, free rotation backwards.
    LinearBackcast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub omega: Frequencies,
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    pub sigma_step: f64,
    pub seed: u64,
    pub history: HistoryPolicy,
    /// Keep every `record_every`-th Euler step in the trajectory. The final
    /// step is always kept.
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            omega: Frequencies::Uniform(20.0 * std::f64::consts::PI),
            epsilon: 0.5,
            dt: DEFAULT_DT,
            t_end: 10.0,
            sigma_step: DEFAULT_SIGMA,
            seed: 0,
            history: HistoryPolicy::ConstantInitial,
            record_every: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if !(self.sigma_step >= self.dt) || !self.sigma_step.is_finite() {
            return Err(Error::param(
                "sigma_step",
                format!("must be at least dt = {}, got {}", self.dt, self.sigma_step),
            ));
        }
        if !(self.t_end >= self.sigma_step) || !self.t_end.is_finite() {
            return Err(Error::param(
                "t_end",
                format!("must be at least sigma_step, got {}", self.t_end),
            ));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::param("epsilon", "must be finite"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        match &self.omega {
            Frequencies::Uniform(w) if !w.is_finite() => {
                Err(Error::param("omega", "must be finite"))
            }
            Frequencies::PerNode(ws) if ws.len() != n => Err(Error::Dimension(format!(
                "{} frequencies for {n} nodes",
                ws.len()
            ))),
            Frequencies::PerNode(ws) if ws.iter().any(|w| !w.is_finite()) => {
                Err(Error::param("omega", "must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Number of Euler steps covering `[0, t_end]`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    Km,
    Dkm,
    PhaseLag,
    ComplexFlow,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Km => "km",
            ModelTag::Dkm => "dkm",
            ModelTag::PhaseLag => "phaselag",
            ModelTag::ComplexFlow => "complex",
        }
    }
}

/// Wrapped phases sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub times: Vec<f64>,
    pub phases: Vec<Vec<f64>>,
    pub model: ModelTag,
}

impl PhaseTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_phases(&self) -> &[f64] {
        self.phases.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Index of the sample closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let spacing = if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            1.0
        };
        (((t - self.times[0]) / spacing).round().max(0.0) as usize).min(self.times.len() - 1)
    }
}

pub(crate) fn check_theta0(theta0: &[f64], n: usize) -> Result<()> {
    if theta0.len() != n {
        return Err(Error::Dimension(format!(
            "initial condition has {} entries for {n} nodes",
            theta0.len()
        )));
    }
    if theta0.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("theta0", "non-finite initial phase"));
    }
    Ok(())
}
