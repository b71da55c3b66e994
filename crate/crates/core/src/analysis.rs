//! Synchrony and pattern measures on phase vectors.
//!
//! Inner products are `<a, b> = sum_i a_i * conj(b_i)` everywhere.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ComplexState, PhaseTrajectory};
use crate::error::{Error, Result};
use crate::spectral::{predicted_pattern, Spectrum};
use crate::wrap_phase;

/// Default cutoff on the pattern match for calling a direction.
pub const DIRECTION_THRESHOLD: f64 = 0.9;

/// Kuramoto order parameter `|sum_j exp(i theta_j)| / N`.
pub fn order_parameter(theta: &[f64]) -> f64 {
    let sum: Complex64 = theta.iter().map(|&t| Complex64::cis(t)).sum();
    sum.norm() / theta.len() as f64
}

/// Order parameter at every sample of a trajectory.
pub fn order_parameter_trace(traj: &PhaseTrajectory) -> Vec<f64> {
    traj.phases.iter().map(|p| order_parameter(p)).collect()
}

/// Mean of `R(t)` over the samples with `t0 <= t <= t1`.
pub fn mean_order_parameter(traj: &PhaseTrajectory, t0: f64, t1: f64) -> Result<f64> {
    // half a grid spacing of slack so endpoints on the grid are included
    let slack = if traj.len() > 1 {
        0.5 * (traj.times[1] - traj.times[0])
    } else {
        0.0
    };
    let (sum, count) = traj
        .times
        .iter()
        .zip(&traj.phases)
        .filter(|(t, _)| **t >= t0 - slack && **t <= t1 + slack)
        .fold((0.0, 0usize), |(s, c), (_, p)| {
            (s + order_parameter(p), c + 1)
        });
    if count == 0 {
        return Err(Error::param(
            "window",
            format!("no samples in [{t0}, {t1}]"),
        ));
    }
    Ok(sum / count as f64)
}

/// Projections of complex states onto eigenvectors, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeContributions {
    pub mu: Vec<Vec<Complex64>>,
    pub log_abs: Vec<Vec<f64>>,
}

impl ModeContributions {
    pub fn push(&mut self, row: Vec<Complex64>) {
        self.log_abs
            .push(row.iter().map(|z| z.norm().log10()).collect());
        self.mu.push(row);
    }
}

/// `mu_k = <x, v_k>` for every mode `k` (index `k - 1`).
pub fn mode_contributions(x: &ComplexState, spec: &Spectrum) -> Result<Vec<Complex64>> {
    if x.n() != spec.n() {
        return Err(Error::Dimension(format!(
            "state of length {} against spectrum of size {}",
            x.n(),
            spec.n()
        )));
    }
    Ok(spec
        .eigenvectors
        .column_iter()
        .map(|v| x.x.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum())
        .collect())
}

/// Largest `|mu_winner| / |mu_k|` margin: the ratio between the winning
/// mode and the strongest other mode.
pub fn dominance_ratio(mu: &[Complex64], winner: usize) -> f64 {
    let top = mu[winner - 1].norm();
    let rest = mu
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != winner - 1)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    top / rest
}

/// `|sum_i exp(i theta_i) exp(-i pattern_i)| / N`.
pub fn pattern_match(theta: &[f64], pattern: &[f64]) -> Result<f64> {
    if theta.len() != pattern.len() || theta.is_empty() {
        return Err(Error::Dimension(format!(
            "phase vector {} vs pattern {}",
            theta.len(),
            pattern.len()
        )));
    }
    let sum: Complex64 = theta
        .iter()
        .zip(pattern)
        .map(|(&t, &p)| Complex64::cis(t - p))
        .sum();
    Ok(sum.norm() / theta.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Positive,
    Negative,
    Neither,
}

impl Direction {
    pub fn label(self) -> i8 {
        match self {
            Direction::Positive => 1,
            Direction::Negative => -1,
            Direction::Neither => 0,
        }
    }
}

/// Matches of a phase vector against the two wave modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionCall {
    pub rho_pos: f64,
    pub rho_neg: f64,
    pub direction: Direction,
}

pub fn classify_direction(
    theta: &[f64],
    spec: &Spectrum,
    pos_mode: usize,
    neg_mode: usize,
    threshold: f64,
) -> Result<DirectionCall> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::param(
            "threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ));
    }
    let rho_pos = pattern_match(theta, &predicted_pattern(spec, pos_mode)?)?;
    let rho_neg = pattern_match(theta, &predicted_pattern(spec, neg_mode)?)?;
    let direction = if rho_pos >= threshold && rho_pos > rho_neg {
        Direction::Positive
    } else if rho_neg >= threshold && rho_neg > rho_pos {
        Direction::Negative
    } else {
        Direction::Neither
    };
    Ok(DirectionCall {
        rho_pos,
        rho_neg,
        direction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRecord {
    pub seed: u64,
    pub rho_pos: f64,
    pub rho_neg: f64,
    pub label: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionStats {
    pub records: Vec<DirectionRecord>,
    pub positive: f64,
    pub negative: f64,
    pub neither: f64,
}

impl DirectionStats {
    pub fn from_records(records: Vec<DirectionRecord>) -> Self {
        let n = records.len().max(1) as f64;
        let count = |l: i8| records.iter().filter(|r| r.label == l).count() as f64 / n;
        DirectionStats {
            positive: count(1),
            negative: count(-1),
            neither: count(0),
            records,
        }
    }
}

/// i.i.d. phases uniform on `[-pi, pi)`.
pub fn random_ic(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-PI..PI)).collect()
}

/// `wrap(pattern_i + amplitude * u_i)` with `u_i` uniform on `[-pi, pi)`.
pub fn biased_ic(pattern: &[f64], amplitude: f64, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(Error::param(
            "amplitude",
            format!("must lie in [0, 1], got {amplitude}"),
        ));
    }
    let noise = random_ic(pattern.len(), seed);
    Ok(pattern
        .iter()
        .zip(noise)
        .map(|(&p, u)| wrap_phase(p + amplitude * u))
        .collect())
}

/// `log10 |mu|` table, one row per state.
pub fn contributions_over(states: &[ComplexState], spec: &Spectrum) -> Result<ModeContributions> {
    let mut out = ModeContributions {
        mu: Vec::with_capacity(states.len()),
        log_abs: Vec::with_capacity(states.len()),
    };
    for s in states {
        out.push(mode_contributions(s, spec)?);
    }
    Ok(out)
}

/// Matrix of `log10 |mu_k(t)|` (rows = samples, columns = modes).
pub fn log_table(mc: &ModeContributions) -> DMatrix<f64> {
    let rows = mc.log_abs.len();
    let cols = mc.log_abs.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, cols, |r, c| mc.log_abs[r][c])
}
