use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_theta0, HistoryBuffer, ModelTag, PhaseTrajectory, SimConfig};
use crate::error::{Error, Result};
use crate::netgen::{DelayMatrix, Network};
use crate::wrap_phase;

/// Compressed rows of the coupling: for node `i`, the neighbours `j`
/// with complex weight `A_ij * exp(-i eta_ij)` and delay in Euler steps.
struct Kernel {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<Complex64>,
    lags: Vec<usize>,
}

impl Kernel {
    fn new(
        weights: &DMatrix<f64>,
        eta: Option<&DMatrix<f64>>,
        lag_steps: Option<&DMatrix<usize>>,
    ) -> Self {
        let n = weights.nrows();
        let mut k = Kernel {
            offsets: Vec::with_capacity(n + 1),
            cols: Vec::new(),
            weights: Vec::new(),
            lags: Vec::new(),
        };
        k.offsets.push(0);
        for i in 0..n {
            for j in 0..n {
                let a = weights[(i, j)];
                if a == 0.0 || i == j {
                    continue;
                }
                let lag = eta.map_or(0.0, |e| e[(i, j)]);
                k.cols.push(j);
                k.weights.push(Complex64::from_polar(a, -lag));
                k.lags.push(lag_steps.map_or(0, |l| l[(i, j)]));
            }
            k.offsets.push(k.cols.len());
        }
        k
    }

    fn max_lag(&self) -> usize {
        self.lags.iter().copied().max().unwrap_or(0)
    }
}

/// Explicit Euler on `dtheta_i = omega_i + eps * Im(conj(z_i) * sum_j K_ij z_j)`.
///
/// Without a history buffer the neighbours are read at the current step,
/// otherwise each edge reads its own lag from the buffer.
fn run(
    kernel: &Kernel,
    cfg: &SimConfig,
    theta0: &[f64],
    model: ModelTag,
    mut history: Option<HistoryBuffer>,
) -> Result<PhaseTrajectory> {
    let n = theta0.len();
    let omega = cfg.omega.per_node(n);
    let steps = cfg.steps();
    let eps = cfg.epsilon;
    let dt = cfg.dt;

    let mut theta: Vec<f64> = theta0.iter().map(|&t| wrap_phase(t)).collect();
    let mut next = vec![0.0; n];
    let mut phasors: Vec<Complex64> = theta.iter().map(|&t| Complex64::cis(t)).collect();

    let capacity = steps / cfg.record_every + 1;
    let mut times = Vec::with_capacity(capacity);
    let mut phases = Vec::with_capacity(capacity);
    times.push(0.0);
    phases.push(theta.clone());

    for step in 0..steps {
        if let Some(h) = history.as_mut() {
            h.push(&phasors);
        }
        for i in 0..n {
            let row = kernel.offsets[i]..kernel.offsets[i + 1];
            let mut field = Complex64::new(0.0, 0.0);
            match &history {
                Some(h) => {
                    for e in row {
                        field += kernel.weights[e] * h.lookup(kernel.lags[e], kernel.cols[e]);
                    }
                }
                None => {
                    for e in row {
                        field += kernel.weights[e] * phasors[kernel.cols[e]];
                    }
                }
            }
            let drive = (field * phasors[i].conj()).im;
            let value = theta[i] + dt * (omega[i] + eps * drive);
            if !value.is_finite() {
                return Err(Error::Divergence { step, node: i });
            }
            next[i] = wrap_phase(value);
        }
        std::mem::swap(&mut theta, &mut next);
        for (z, &t) in phasors.iter_mut().zip(&theta) {
            *z = Complex64::cis(t);
        }
        if (step + 1) % cfg.record_every == 0 || step + 1 == steps {
            times.push((step + 1) as f64 * dt);
            phases.push(theta.clone());
        }
    }

    Ok(PhaseTrajectory {
        times,
        phases,
        model,
    })
}

/// Delayed Kuramoto model. Each delay is rounded to the nearest Euler step.
pub fn integrate_dkm(
    net: &Network,
    tau: &DelayMatrix,
    cfg: &SimConfig,
    theta0: &[f64],
) -> Result<PhaseTrajectory> {
    let n = net.n();
    check_theta0(theta0, n)?;
    cfg.validate(n)?;
    if tau.n() != n {
        return Err(Error::Dimension(format!(
            "delay matrix is {}x{0}, network has {n} nodes",
            tau.n()
        )));
    }
    if tau.tau.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::param("tau", "delays must be finite and nonnegative"));
    }
    let lag_steps = tau.tau.map(|t| (t / cfg.dt).round() as usize);
    let kernel = Kernel::new(&net.weights, None, Some(&lag_steps));
    let omega = cfg.omega.per_node(n);
    let history =
        HistoryBuffer::with_history(theta0, &omega, cfg.dt, kernel.max_lag() + 1, cfg.history);
    run(&kernel, cfg, theta0, ModelTag::Dkm, Some(history))
}

/// Kuramoto model without delays.
pub fn integrate_km(net: &Network, cfg: &SimConfig, theta0: &[f64]) -> Result<PhaseTrajectory> {
    let n = net.n();
    check_theta0(theta0, n)?;
    cfg.validate(n)?;
    let kernel = Kernel::new(&net.weights, None, None);
    run(&kernel, cfg, theta0, ModelTag::Km, None)
}

/// Phase-lag model `dtheta_i = omega_i + eps * sum_j A_ij sin(theta_j - theta_i - eta_ij)`.
pub fn integrate_phase_lag(
    net: &Network,
    eta: &DMatrix<f64>,
    cfg: &SimConfig,
    theta0: &[f64],
) -> Result<PhaseTrajectory> {
    let n = net.n();
    check_theta0(theta0, n)?;
    cfg.validate(n)?;
    if eta.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "phase-lag matrix {:?} for {n} nodes",
            eta.shape()
        )));
    }
    if eta.iter().any(|e| !e.is_finite()) {
        return Err(Error::param("eta", "phase lags must be finite"));
    }
    if eta != &eta.transpose() {
        return Err(Error::Contract("phase-lag matrix must be symmetric".into()));
    }
    let kernel = Kernel::new(&net.weights, Some(eta), None);
    run(&kernel, cfg, theta0, ModelTag::PhaseLag, None)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::circular_distance;
    use crate::dynamics::{Frequencies, HistoryPolicy};
    use crate::netgen::{build_ring, delays_from_distances};

    fn pair(distance: f64) -> Network {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let d = w.map(|a| a * distance);
        Network::from_parts(w, d, None).unwrap()
    }

    fn cfg(omega: f64, epsilon: f64, t_end: f64) -> SimConfig {
        SimConfig {
            omega: Frequencies::Uniform(omega),
            epsilon,
            t_end,
            ..SimConfig::default()
        }
    }

    /// Average angular velocity over the last `window` seconds, from the
    /// unwrapped increments of node `i`.
    fn late_frequency(traj: &PhaseTrajectory, i: usize, window: f64) -> f64 {
        let end = traj.len() - 1;
        let start = traj.index_at(traj.times[end] - window);
        let mut total = 0.0;
        for s in start..end {
            total += crate::wrap_phase(traj.phases[s + 1][i] - traj.phases[s][i]);
        }
        total / (traj.times[end] - traj.times[start])
    }

    #[test]
    fn synchronized_zero_delay_state_rotates_rigidly() {
        let net = build_ring(20, 4).unwrap();
        let tau = DelayMatrix::zeros(20);
        let c = cfg(20.0 * PI, 0.5, 0.5);
        let traj = integrate_dkm(&net, &tau, &c, &[0.3; 20]).unwrap();
        for (t, row) in traj.times.iter().zip(&traj.phases) {
            let expect = crate::wrap_phase(0.3 + 20.0 * PI * t);
            for &p in row {
                assert!(circular_distance(p, expect) < 1e-9);
            }
        }
    }

    #[test]
    fn uncoupled_phases_advance_at_own_frequency() {
        let net = build_ring(5, 1).unwrap();
        let omegas = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let c = SimConfig {
            omega: Frequencies::PerNode(omegas.clone()),
            epsilon: 0.0,
            t_end: 0.2,
            ..SimConfig::default()
        };
        let theta0 = [0.0, 0.1, 0.2, 0.3, 0.4];
        let traj = integrate_km(&net, &c, &theta0).unwrap();
        let last = traj.final_phases();
        for i in 0..5 {
            assert!(circular_distance(last[i], theta0[i] + omegas[i] * 0.2) < 1e-9);
        }
    }

    #[test]
    fn two_oscillators_attract() {
        // Adler: d(phi)/dt = -2 eps sin(phi) for phi = theta_1 - theta_0
        let net = pair(1.0);
        let c = cfg(10.0, 0.2, 2.0);
        let traj = integrate_km(&net, &c, &[0.0, PI - 0.01]).unwrap();
        let mut prev = f64::INFINITY;
        for row in &traj.phases {
            let gap = circular_distance(row[1], row[0]);
            assert!(gap < prev);
            prev = gap;
        }
        // exact Adler solution tan(phi/2) = tan(phi0/2) exp(-2 eps t)
        let phi0: f64 = PI - 0.01;
        let expect = 2.0 * ((phi0 / 2.0).tan() * (-2.0 * 0.2 * 2.0f64).exp()).atan();
        assert!((prev - expect).abs() < 1e-3, "{prev} vs {expect}");
    }

    #[test]
    fn delayed_pair_locks_to_scalar_fixed_point() {
        // Equal phases reduce to Omega = omega - eps * sin(Omega * tau).
        let (omega, eps, tau_s) = (20.0 * PI, 0.5, 0.01);
        let net = pair(1.0);
        let tau = delays_from_distances(&net, 1.0 / tau_s).unwrap();
        let traj = integrate_dkm(&net, &tau, &cfg(omega, eps, 4.0), &[0.2, 0.2]).unwrap();

        let f = |x: f64| x - omega + eps * (x * tau_s).sin();
        let (mut lo, mut hi) = (omega - 2.0 * eps, omega + 2.0 * eps);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let expect = 0.5 * (lo + hi);
        for i in 0..2 {
            let got = late_frequency(&traj, i, 1.0);
            assert!((got - expect).abs() < 1e-3, "{got} vs {expect}");
        }
        let (a, b) = (traj.final_phases()[0], traj.final_phases()[1]);
        assert_eq!(a, b);
    }

    #[test]
    fn quarter_lag_pair_runs_at_omega_minus_epsilon() {
        let net = pair(1.0);
        let eta = DMatrix::from_row_slice(2, 2, &[0.0, PI / 2.0, PI / 2.0, 0.0]);
        let c = cfg(20.0 * PI, 0.5, 1.0);
        let traj = integrate_phase_lag(&net, &eta, &c, &[0.0, 0.0]).unwrap();
        let expect = crate::wrap_phase(1.0 * (20.0 * PI - 0.5));
        assert!(circular_distance(traj.final_phases()[0], expect) < 1e-9);
        assert!((late_frequency(&traj, 1, 0.5) - (20.0 * PI - 0.5)).abs() < 1e-9);
    }

    #[test]
    fn zero_lag_is_bitwise_plain_kuramoto() {
        let net = build_ring(30, 5).unwrap();
        let c = cfg(20.0 * PI, 0.5, 0.3);
        let theta0: Vec<f64> = (0..30)
            .map(|i| ((i * 7919) % 97) as f64 / 97.0 * 6.0 - 3.0)
            .collect();
        let km = integrate_km(&net, &c, &theta0).unwrap();
        let pl = integrate_phase_lag(&net, &DMatrix::zeros(30, 30), &c, &theta0).unwrap();
        assert_eq!(km.phases, pl.phases);
    }

    #[test]
    fn record_stride_and_grid() {
        let net = build_ring(6, 1).unwrap();
        let mut c = cfg(1.0, 0.1, 0.01);
        c.record_every = 10;
        let traj = integrate_km(&net, &c, &[0.0; 6]).unwrap();
        assert_eq!(traj.len(), 11);
        assert!((traj.times[10] - 0.01).abs() < 1e-15);
        assert!((traj.times[1] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let net = build_ring(6, 1).unwrap();
        let c = cfg(1.0, 0.1, 0.01);
        assert!(matches!(
            integrate_km(&net, &c, &[0.0; 5]),
            Err(Error::Dimension(_))
        ));
        let mut bad = c.clone();
        bad.dt = 0.0;
        assert!(integrate_km(&net, &bad, &[0.0; 6]).is_err());
        let mut eta = DMatrix::zeros(6, 6);
        eta[(0, 1)] = 0.3;
        assert!(matches!(
            integrate_phase_lag(&net, &eta, &c, &[0.0; 6]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn divergence_reports_step() {
        let net = build_ring(6, 1).unwrap();
        let c = SimConfig {
            omega: Frequencies::PerNode(vec![f64::MAX; 6]),
            epsilon: 0.0,
            dt: 1e300f64.sqrt(),
            sigma_step: 1e150,
            t_end: 1e151,
            ..SimConfig::default()
        };
        let err = integrate_km(&net, &c, &[0.0; 6]).unwrap_err();
        assert!(
            matches!(err, Error::Divergence { step: 0, node: 0 }),
            "{err}"
        );
    }

    #[test]
    fn backcast_history_follows_free_rotation() {
        // With backcast history and equal phases the delayed coupling of a
        // synchronous state sees exactly theta - omega * tau from t = 0.
        let net = pair(1.0);
        let tau = delays_from_distances(&net, 100.0).unwrap();
        let omega = 20.0 * PI;
        let mut c = cfg(omega, 0.5, 0.05);
        c.history = HistoryPolicy::LinearBackcast;
        let dkm = integrate_dkm(&net, &tau, &c, &[0.0, 0.0]).unwrap();
        let eta = tau.tau.map(|t| omega * t);
        let lag = integrate_phase_lag(&net, &eta, &c, &[0.0, 0.0]).unwrap();
        // both start rotating at omega - eps sin(omega tau); differences are
        // second order in eps * tau over this window
        for (a, b) in dkm.phases.iter().zip(&lag.phases) {
            assert!(circular_distance(a[0], b[0]) < 1e-3);
        }
    }
}
