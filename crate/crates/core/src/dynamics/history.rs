use num_complex::Complex64;

use super::HistoryPolicy;

/// Ring buffer of past unit phasors `exp(i theta_j)` on the Euler grid.
///
/// Slot `lag` holds the state `lag` steps before the most recent push.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    n: usize,
    depth: usize,
    data: Vec<Complex64>,
    /// Slot of the most recent push.
    head: usize,
}

impl HistoryBuffer {
    /// Depth needed to reach `max_delay` seconds back at resolution `dt`.
    pub fn required_depth(max_delay: f64, dt: f64) -> usize {
        (max_delay / dt).ceil() as usize + 1
    }

    /// Buffer pre-filled with the pre-simulation history for times
    /// `-(depth - 1) * dt ..= -dt`. The state at `t = 0` is pushed by the
    /// integrator.
    pub fn with_history(
        theta0: &[f64],
        omega: &[f64],
        dt: f64,
        depth: usize,
        policy: HistoryPolicy,
    ) -> Self {
        let n = theta0.len();
        let depth = depth.max(1);
        let mut buf = HistoryBuffer {
            n,
            depth,
            data: vec![Complex64::new(0.0, 0.0); n * depth],
            head: depth - 1,
        };
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        for back in (1..depth).rev() {
            let s = -(back as f64) * dt;
            for j in 0..n {
                let theta = match policy {
                    HistoryPolicy::ConstantInitial => theta0[j],
                    HistoryPolicy::LinearBackcast => theta0[j] + omega[j] * s,
                };
                row[j] = Complex64::cis(theta);
            }
            buf.push(&row);
        }
        buf
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn push(&mut self, phasors: &[Complex64]) {
        debug_assert_eq!(phasors.len(), self.n);
        self.head = (self.head + 1) % self.depth;
        let start = self.head * self.n;
        self.data[start..start + self.n].copy_from_slice(phasors);
    }

    /// Phasor of node `j`, `lag` steps before the latest push.
    #[inline]
    pub fn lookup(&self, lag: usize, j: usize) -> Complex64 {
        debug_assert!(lag < self.depth);
        let slot = (self.head + self.depth - lag) % self.depth;
        self.data[slot * self.n + j]
    }
}
