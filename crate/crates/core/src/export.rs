//! Plain CSV writers for trajectories, spectra and direction statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::analysis::DirectionStats;
use crate::dynamics::{ComplexState, PhaseTrajectory};
use crate::error::{Error, Result};
use crate::spectral::Spectrum;

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `t,theta_0,...,theta_{N-1}`, keeping every `stride`-th row.
pub fn trajectory_csv(traj: &PhaseTrajectory, stride: usize) -> String {
    let n = traj.phases.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 0..n {
        let _ = write!(out, ",theta_{i}");
    }
    out.push('\n');
    for (t, row) in traj.times.iter().zip(&traj.phases).step_by(stride.max(1)) {
        let _ = write!(out, "{t}");
        for p in row {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}

/// `t,re_0,im_0,...` for a sequence of complex states.
pub fn complex_states_csv(times: &[f64], states: &[ComplexState]) -> String {
    let n = states.first().map_or(0, ComplexState::n);
    let mut out = String::from("t");
    for i in 0..n {
        let _ = write!(out, ",re_{i},im_{i}");
    }
    out.push('\n');
    for (t, s) in times.iter().zip(states) {
        let _ = write!(out, "{t}");
        for z in s.x.iter() {
            let _ = write!(out, ",{},{}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

/// Two-column `t,value` table.
pub fn series_csv(name: &str, times: &[f64], values: &[f64]) -> String {
    let mut out = format!("t,{name}\n");
    for (t, v) in times.iter().zip(values) {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

/// `mode_index,re_lambda,im_lambda` with 1-based mode labels.
pub fn eigenvalues_csv(spec: &Spectrum) -> String {
    let mut out = String::from("mode_index,re_lambda,im_lambda\n");
    for (k, z) in spec.eigenvalues.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", k + 1, z.re, z.im);
    }
    out
}

/// One row per node, columns `re_1,im_1,...,re_N,im_N` per mode.
pub fn eigenvectors_csv(spec: &Spectrum) -> String {
    let n = spec.n();
    let mut out = String::new();
    let header: Vec<String> = (1..=n).map(|k| format!("re_{k},im_{k}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|k| {
                let z: Complex64 = spec.eigenvectors[(i, k)];
                format!("{},{}", z.re, z.im)
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `node,phase` table for a predicted pattern.
pub fn pattern_csv(pattern: &[f64]) -> String {
    let mut out = String::from("node,phase\n");
    for (i, p) in pattern.iter().enumerate() {
        let _ = writeln!(out, "{i},{p}");
    }
    out
}

/// `seed,rho_pos,rho_neg,label`.
pub fn direction_csv(stats: &DirectionStats) -> String {
    let mut out = String::from("seed,rho_pos,rho_neg,label\n");
    for r in &stats.records {
        let _ = writeln!(out, "{},{},{},{}", r.seed, r.rho_pos, r.rho_neg, r.label);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ModelTag;

    #[test]
    fn trajectory_header_and_stride() {
        let traj = PhaseTrajectory {
            times: vec![0.0, 0.5, 1.0],
            phases: vec![vec![0.0, 1.0], vec![0.5, 1.5], vec![1.0, 2.0]],
            model: ModelTag::Km,
        };
        let csv = trajectory_csv(&traj, 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,theta_0,theta_1");
        assert_eq!(lines[1], "0,0,1");
        assert_eq!(lines[2], "1,1,2");
        assert_eq!(lines.len(), 3);
    }
}
