//! Complex-valued flow `x' = (i omega + W) x` and its renormalized iteration.
//!
//! Between renormalizations the state evolves by the exact linear solution
//! `x(t) = exp(i omega t) exp(t W) x(0)`, evaluated through the eigenbasis
//! of `W`. After each interval `sigma`, every entry is rescaled to unit
//! modulus; the arguments are left untouched.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ModelTag, PhaseTrajectory, SimConfig};
use crate::error::{Error, Result};
use crate::spectral::{DelayOperator, Spectrum};
use crate::wrap_phase;

/// Entries smaller than this cannot be renormalized.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexState {
    pub x: DVector<Complex64>,
}

impl ComplexState {
    /// Unit-modulus state with the given arguments.
    pub fn from_phases(theta: &[f64]) -> Self {
        ComplexState {
            x: DVector::from_iterator(theta.len(), theta.iter().map(|&t| Complex64::cis(t))),
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Elementwise arguments wrapped to `[-pi, pi)`.
    pub fn phases(&self) -> Vec<f64> {
        self.x.iter().map(|z| wrap_phase(z.arg())).collect()
    }

    /// Maps every entry to unit modulus.
    pub fn renormalize(&mut self) -> Result<()> {
        for (node, z) in self.x.iter_mut().enumerate() {
            let modulus = z.norm();
            if !(modulus >= DEGENERACY_TOL) {
                return Err(Error::Degenerate { node, modulus });
            }
            *z /= modulus;
        }
        Ok(())
    }
}

fn check_dims(x: &ComplexState, op: &DelayOperator, spec: &Spectrum) -> Result<()> {
    if x.n() != op.n() || spec.n() != op.n() {
        return Err(Error::Dimension(format!(
            "state {} / operator {} / spectrum {}",
            x.n(),
            op.n(),
            spec.n()
        )));
    }
    Ok(())
}

/// `exp(i omega t) V diag(exp(lambda t)) V^-1`.
fn evolution_matrix(spec: &Spectrum, omega: f64, t: f64) -> DMatrix<Complex64> {
    let rotation = Complex64::cis(omega * t);
    let mut scaled = spec.eigenvectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= (spec.eigenvalues[k] * t).exp() * rotation;
    }
    scaled * &spec.dual
}

/// Exact linear solution at time `t`, without renormalization.
pub fn closed_form_state(
    x0: &ComplexState,
    op: &DelayOperator,
    omega: f64,
    t: f64,
    spec: &Spectrum,
) -> Result<ComplexState> {
    check_dims(x0, op, spec)?;
    if t == 0.0 {
        return Ok(x0.clone());
    }
    // coefficients in the eigenbasis, then recombine
    let coeffs = &spec.dual * &x0.x;
    let rotation = Complex64::cis(omega * t);
    let mut x = DVector::zeros(x0.n());
    for k in 0..spec.n() {
        let c = coeffs[k] * (spec.eigenvalues[k] * t).exp() * rotation;
        x.axpy(c, &spec.eigenvectors.column(k), Complex64::new(1.0, 0.0));
    }
    Ok(ComplexState { x })
}

/// One renormalized step of length `sigma`.
pub fn complex_step(
    x: &ComplexState,
    op: &DelayOperator,
    omega: f64,
    sigma: f64,
    spec: &Spectrum,
) -> Result<ComplexState> {
    let mut y = closed_form_state(x, op, omega, sigma, spec)?;
    y.renormalize()?;
    Ok(y)
}

/// Precomputed one-step evolution matrix for repeated stepping.
#[derive(Debug, Clone)]
pub struct Propagator {
    matrix: DMatrix<Complex64>,
    pub sigma: f64,
}

impl Propagator {
    pub fn new(spec: &Spectrum, omega: f64, sigma: f64) -> Self {
        Propagator {
            matrix: evolution_matrix(spec, omega, sigma),
            sigma,
        }
    }

    pub fn step(&self, x: &ComplexState) -> Result<ComplexState> {
        let mut y = ComplexState {
            x: &self.matrix * &x.x,
        };
        y.renormalize()?;
        Ok(y)
    }
}

/// Arguments of the renormalized flow on the grid `0, sigma, 2 sigma, ..., t_end`.
pub fn complex_trajectory(
    x0: &ComplexState,
    op: &DelayOperator,
    omega: f64,
    cfg: &SimConfig,
    spec: &Spectrum,
) -> Result<PhaseTrajectory> {
    check_dims(x0, op, spec)?;
    cfg.validate(op.n())?;
    let sigma = cfg.sigma_step;
    let steps = (cfg.t_end / sigma).round();
    if (steps * sigma - cfg.t_end).abs() > 1e-12 * cfg.t_end.max(1.0) {
        return Err(Error::param(
            "sigma_step",
            format!("{sigma} does not divide t_end = {}", cfg.t_end),
        ));
    }
    let steps = steps as usize;
    let prop = Propagator::new(spec, omega, sigma);
    let mut x = x0.clone();
    x.renormalize()?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut phases = Vec::with_capacity(steps + 1);
    times.push(0.0);
    phases.push(x.phases());
    for s in 1..=steps {
        x = prop.step(&x)?;
        times.push(s as f64 * sigma);
        phases.push(x.phases());
    }
    Ok(PhaseTrajectory {
        times,
        phases,
        model: ModelTag::ComplexFlow,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::{cdt_spectrum, numeric_spectrum};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_operator_rotates_globally() {
        let n = 5;
        let op = DelayOperator::from_matrix(DMatrix::zeros(n, n)).unwrap();
        let spec = cdt_spectrum(&op).unwrap();
        let theta = [0.1, -1.0, 2.0, 3.0, -3.1];
        let x = ComplexState::from_phases(&theta);
        let y = complex_step(&x, &op, 7.0, 0.03, &spec).unwrap();
        for i in 0..n {
            assert!((y.x[i] - x.x[i] * Complex64::cis(7.0 * 0.03)).norm() < 1e-14);
        }
    }

    #[test]
    fn renormalize_keeps_arguments() {
        let mut s = ComplexState {
            x: DVector::from_vec(vec![c(3.0, 4.0), c(-0.5, 0.0), c(1e-3, -2e-3)]),
        };
        let before: Vec<f64> = s.x.iter().map(|z| z.arg()).collect();
        s.renormalize().unwrap();
        for (z, a) in s.x.iter().zip(before) {
            assert!((z.norm() - 1.0).abs() < 1e-14);
            assert!((z.arg() - a).abs() < 1e-15);
        }
        let unit = ComplexState::from_phases(&[0.3, -2.0]);
        let mut again = unit.clone();
        again.renormalize().unwrap();
        assert_eq!(again.phases(), unit.phases());
    }

    #[test]
    fn renormalize_rejects_zero() {
        let mut s = ComplexState {
            x: DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
        };
        assert!(matches!(
            s.renormalize(),
            Err(Error::Degenerate { node: 1, .. })
        ));
    }

    #[test]
    fn two_by_two_matches_symbolic_exponential() {
        // W = [[a, b], [b, a]] has exp(tW) = e^{at} [[cosh bt, sinh bt], [sinh bt, cosh bt]]
        let (a, b) = (c(0.2, -0.4), c(0.7, 0.3));
        let w = DMatrix::from_row_slice(2, 2, &[a, b, b, a]);
        let op = DelayOperator::from_matrix(w).unwrap();
        let spec = numeric_spectrum(&op).unwrap();
        let x0 = ComplexState {
            x: DVector::from_vec(vec![c(0.6, 0.8), c(-1.0, 0.2)]),
        };
        let (t, omega) = (0.37, 3.0);
        let got = closed_form_state(&x0, &op, omega, t, &spec).unwrap();
        let (ch, sh) = ((b * t).cosh(), (b * t).sinh());
        let pre = (a * t).exp() * Complex64::cis(omega * t);
        let expect = [
            pre * (ch * x0.x[0] + sh * x0.x[1]),
            pre * (sh * x0.x[0] + ch * x0.x[1]),
        ];
        for i in 0..2 {
            assert!((got.x[i] - expect[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_at_zero_is_identity() {
        let w =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 1.0), c(1.0, 1.0), c(0.0, 0.0)]);
        let op = DelayOperator::from_matrix(w).unwrap();
        let spec = cdt_spectrum(&op).unwrap();
        let x0 = ComplexState::from_phases(&[0.4, 1.4]);
        assert_eq!(closed_form_state(&x0, &op, 1.0, 0.0, &spec).unwrap(), x0);
    }

    #[test]
    fn trajectory_grid_and_sync_fixed_point() {
        let net = crate::netgen::build_ring(12, 2).unwrap();
        let op = crate::spectral::build_delay_operator(
            &net,
            &crate::netgen::DelayMatrix::zeros(12),
            20.0 * PI,
            0.5,
        )
        .unwrap();
        let spec = cdt_spectrum(&op).unwrap();
        let cfg = SimConfig {
            t_end: 0.1,
            ..SimConfig::default()
        };
        let traj = complex_trajectory(
            &ComplexState::from_phases(&[1.0; 12]),
            &op,
            20.0 * PI,
            &cfg,
            &spec,
        )
        .unwrap();
        assert_eq!(traj.len(), 101);
        assert_eq!(traj.model, ModelTag::ComplexFlow);
        for row in &traj.phases {
            assert!(crate::analysis::order_parameter(row) > 1.0 - 1e-12);
        }
        let bad = SimConfig {
            t_end: 0.1,
            sigma_step: 0.003,
            ..SimConfig::default()
        };
        assert!(complex_trajectory(
            &ComplexState::from_phases(&[1.0; 12]),
            &op,
            1.0,
            &bad,
            &spec
        )
        .is_err());
    }
}
