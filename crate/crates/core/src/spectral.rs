//! The complex delay operator and its eigenspectrum.
//!
//! For a network with weights `A`, delays `tau`, common angular frequency
//! `omega` and coupling `epsilon`, the operator is
//!
//! ```text
//! W[i][j] = epsilon * A[i][j] * exp(-i * omega * tau[i][j])
//! ```
//!
//! Circulant operators are diagonalized in closed form by the DFT basis;
//! everything else goes through a dense complex Schur decomposition.
//!
//! Mode labels are 1-based throughout the public API.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netgen::{is_circulant, DelayMatrix, Network};
use crate::wrap_phase;

/// Real parts closer than this are considered tied when ranking modes.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DelayOperator {
    pub w: DMatrix<Complex64>,
    pub epsilon: f64,
    /// Phase lags `omega * tau`, radians.
    pub eta: DMatrix<f64>,
    pub is_circulant: bool,
}

impl DelayOperator {
    /// Wraps an arbitrary complex matrix. Phase lags are read back from the
    /// entry arguments and the circulant flag is detected.
    pub fn from_matrix(w: DMatrix<Complex64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::Dimension(format!(
                "operator must be square, got {:?}",
                w.shape()
            )));
        }
        let eta = w.map(|z| {
            if z == Complex64::new(0.0, 0.0) {
                0.0
            } else {
                -z.arg()
            }
        });
        Ok(DelayOperator {
            is_circulant: is_circulant(&w),
            w,
            epsilon: 1.0,
            eta,
        })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Closed form when circulant, dense eigensolver otherwise.
    pub fn spectrum(&self) -> Result<Spectrum> {
        if self.is_circulant {
            cdt_spectrum(self)
        } else {
            numeric_spectrum(self)
        }
    }
}

pub fn build_delay_operator(
    net: &Network,
    tau: &DelayMatrix,
    omega: f64,
    epsilon: f64,
) -> Result<DelayOperator> {
    let n = net.n();
    if tau.n() != n || !tau.tau.is_square() {
        return Err(Error::Dimension(format!(
            "network has {n} nodes but delay matrix is {:?}",
            tau.tau.shape()
        )));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::param(
            "epsilon",
            format!("must be positive, got {epsilon}"),
        ));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::param(
            "omega",
            format!("must be positive, got {omega}"),
        ));
    }
    let eta = tau.tau.map(|t| omega * t);
    let w = DMatrix::from_fn(n, n, |i, j| {
        let a = net.weights[(i, j)];
        Complex64::from_polar(epsilon * a, -eta[(i, j)])
    });
    Ok(DelayOperator {
        w,
        epsilon,
        eta,
        is_circulant: net.is_circulant && tau.is_circulant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SpectrumOrdering {
    /// DFT order, mode `k` has spatial frequency `k - 1`.
    Cdt,
    DescendingRealPart,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Unit eigenvectors as columns, in the same order as `eigenvalues`.
    pub eigenvectors: DMatrix<Complex64>,
    /// Inverse of `eigenvectors` (the conjugate transpose for the DFT basis).
    pub dual: DMatrix<Complex64>,
    pub ordering: SpectrumOrdering,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalue of 1-based mode `k`.
    pub fn eigenvalue(&self, k: usize) -> Complex64 {
        self.eigenvalues[k - 1]
    }

    /// Eigenvector of 1-based mode `k`.
    pub fn eigenvector(&self, k: usize) -> DVector<Complex64> {
        self.eigenvectors.column(k - 1).into_owned()
    }

    /// `max_k ||W v_k - lambda_k v_k||`.
    pub fn max_residual(&self, w: &DMatrix<Complex64>) -> f64 {
        (0..self.n())
            .map(|k| {
                let v = self.eigenvectors.column(k);
                (w * v - v * self.eigenvalues[k]).norm()
            })
            .fold(0.0, f64::max)
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n() {
            return Err(Error::param(
                "mode",
                format!("mode {k} outside 1..={}", self.n()),
            ));
        }
        Ok(())
    }
}

/// `exp(-2 pi i m / n)` for `m` in `0..n`.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / n as f64))
        .collect()
}

/// Closed-form eigenspectrum of a circulant operator.
///
/// With generating row `h`, mode `k` has eigenvalue
/// `sum_j h_j exp(-2 pi i (k-1)(j-1) / N)` and eigenvector entries
/// `exp(-2 pi i (k-1)(s-1) / N) / sqrt(N)`.
pub fn cdt_spectrum(op: &DelayOperator) -> Result<Spectrum> {
    if !op.is_circulant {
        return Err(Error::Contract(
            "operator is not circulant; use numeric_spectrum".into(),
        ));
    }
    let n = op.n();
    let tw = twiddles(n);
    let h = op.w.row(0);
    let eigenvalues = (0..n)
        .map(|k| (0..n).map(|j| h[j] * tw[(k * j) % n]).sum())
        .collect();
    let scale = 1.0 / (n as f64).sqrt();
    let eigenvectors = DMatrix::from_fn(n, n, |s, k| tw[(k * s) % n] * scale);
    let dual = eigenvectors.adjoint();
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        dual,
        ordering: SpectrumOrdering::Cdt,
    })
}

/// Iteration cap handed to the Schur solver, per matrix row.
const SCHUR_ITER_PER_ROW: usize = 300;

/// Dense eigendecomposition, modes ranked by descending real part.
///
/// Each eigenvector is normalized to unit length and rotated so its
/// largest-modulus entry is real and positive.
pub fn numeric_spectrum(op: &DelayOperator) -> Result<Spectrum> {
    let n = op.n();
    if op.w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Contract("operator has non-finite entries".into()));
    }
    let max_iter = SCHUR_ITER_PER_ROW * n.max(1);
    let schur = nalgebra::linalg::Schur::try_new(op.w.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::NoConvergence { n, max_iter })?;
    let (q, t) = schur.unpack();

    let raw_values: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let tnorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);

    let mut raw_vectors = DMatrix::zeros(n, n);
    for k in 0..n {
        let y = triangular_eigenvector(&t, k, smin);
        let mut v = &q * y;
        gauge_and_normalize(&mut v);
        raw_vectors.set_column(k, &v);
    }

    let order = rank_descending_real(&raw_values);
    let eigenvalues = order.iter().map(|&i| raw_values[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| raw_vectors[(r, order[c])]);
    let dual = eigenvectors.clone().lu().try_inverse().ok_or_else(|| {
        Error::Contract("eigenvector matrix is singular (defective operator)".into())
    })?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        dual,
        ordering: SpectrumOrdering::DescendingRealPart,
    })
}

/// Solves `(T - t_kk) y = 0` with `y_k = 1` for upper-triangular `T`,
/// perturbing near-zero pivots to `smin`.
fn triangular_eigenvector(t: &DMatrix<Complex64>, k: usize, smin: f64) -> DVector<Complex64> {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let mut y = DVector::zeros(n);
    y[k] = Complex64::new(1.0, 0.0);
    for j in (0..k).rev() {
        let s: Complex64 = (j + 1..=k).map(|l| t[(j, l)] * y[l]).sum();
        let mut denom = t[(j, j)] - lambda;
        if denom.norm() < smin {
            denom = Complex64::new(smin, 0.0);
        }
        y[j] = -s / denom;
    }
    y
}

fn gauge_and_normalize(v: &mut DVector<Complex64>) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let pivot = v[best];
    let phase = if pivot.norm() > 0.0 {
        pivot.conj() / pivot.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let norm = v.norm();
    v.iter_mut().for_each(|z| *z = *z * phase / norm);
}

/// `true` when `a` ranks strictly before `b`: larger real part, then larger
/// imaginary part, then lower index, with [`TIE_TOL`] on both parts.
fn ranks_before(values: &[Complex64], a: usize, b: usize) -> bool {
    let (x, y) = (values[a], values[b]);
    if (x.re - y.re).abs() >= TIE_TOL {
        return x.re > y.re;
    }
    if (x.im - y.im).abs() >= TIE_TOL {
        return x.im > y.im;
    }
    a < b
}

/// Indices of `values` from highest to lowest rank.
///
/// Tolerance-based comparisons are not transitive, so this is a selection
/// pass rather than a library sort; the result is still deterministic.
pub(crate) fn rank_descending_real(values: &[Complex64]) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..values.len()).collect();
    let mut out = Vec::with_capacity(values.len());
    while !remaining.is_empty() {
        let mut best = 0;
        for pos in 1..remaining.len() {
            if ranks_before(values, remaining[pos], remaining[best]) {
                best = pos;
            }
        }
        out.push(remaining.remove(best));
    }
    out
}

/// The `m` modes with the largest real part, as 1-based labels in the
/// spectrum's own ordering, best first.
pub fn leading_modes(spec: &Spectrum, m: usize) -> Result<Vec<usize>> {
    if m == 0 || m > spec.n() {
        return Err(Error::param(
            "m",
            format!("need 1 <= m <= {}, got {m}", spec.n()),
        ));
    }
    let mut remaining: Vec<usize> = (0..spec.n()).collect();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best = 0;
        for pos in 1..remaining.len() {
            if ranks_before(&spec.eigenvalues, remaining[pos], remaining[best]) {
                best = pos;
            }
        }
        out.push(remaining.remove(best) + 1);
    }
    Ok(out)
}

/// Elementwise argument of eigenvector `k`, wrapped to `[-pi, pi)`.
pub fn predicted_pattern(spec: &Spectrum, k: usize) -> Result<Vec<f64>> {
    spec.check_mode(k)?;
    Ok(spec
        .eigenvectors
        .column(k - 1)
        .iter()
        .map(|z| wrap_phase(z.arg()))
        .collect())
}
