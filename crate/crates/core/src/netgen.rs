//! Network substrates: rings, synthetic geometric graphs and user files.
//!
//! A [`Network`] carries a symmetric nonnegative weight matrix together with
//! the pairwise distances used to derive conduction delays. Node indices are
//! 0-based everywhere in this module.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Longest connected delay on the reference ring, seconds.
pub const RING_MAX_DELAY: f64 = 0.062;

/// Length scale of the exponential weight decay in [`synth_geometric`].
pub const GEOMETRIC_DECAY: f64 = 0.3;

/// Absolute tolerance for symmetry checks on loaded files.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub weights: DMatrix<f64>,
    pub distances: DMatrix<f64>,
    pub positions: Option<Vec<[f64; 3]>>,
    pub is_circulant: bool,
}

impl Network {
    /// Assembles a network after checking symmetry, diagonals and the
    /// positive-distance rule. The circulant flag is detected, not trusted.
    pub fn from_parts(
        weights: DMatrix<f64>,
        distances: DMatrix<f64>,
        positions: Option<Vec<[f64; 3]>>,
    ) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || !weights.is_square() || distances.shape() != weights.shape() {
            return Err(Error::Dimension(format!(
                "weights {:?} and distances {:?} must be equal nonempty squares",
                weights.shape(),
                distances.shape()
            )));
        }
        if let Some(p) = &positions {
            if p.len() != n {
                return Err(Error::Dimension(format!(
                    "{} positions for {n} nodes",
                    p.len()
                )));
            }
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 || distances[(i, i)] != 0.0 {
                return Err(Error::Contract(format!("nonzero diagonal at node {i}")));
            }
            for j in 0..n {
                let (w, d) = (weights[(i, j)], distances[(i, j)]);
                if !(w >= 0.0 && d >= 0.0) || !w.is_finite() || !d.is_finite() {
                    return Err(Error::Contract(format!(
                        "entry ({i},{j}) must be finite and nonnegative"
                    )));
                }
                if w != weights[(j, i)] || d != distances[(j, i)] {
                    return Err(Error::Contract(format!("asymmetric entry ({i},{j})")));
                }
                if i != j && w > 0.0 && d <= 0.0 {
                    return Err(Error::Contract(format!(
                        "edge ({i},{j}) has positive weight but zero length"
                    )));
                }
            }
        }
        let is_circulant = is_circulant(&weights) && is_circulant(&distances);
        Ok(Network {
            weights,
            distances,
            positions,
            is_circulant,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    /// Number of undirected edges with positive weight.
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.weights[(i, j)] > 0.0)
            .count()
    }

    /// Largest distance over pairs that carry weight.
    pub fn max_connected_distance(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.distances.iter())
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, d)| *d)
            .fold(0.0, f64::max)
    }
}

/// Row-shift test: row `i` equals row 0 cyclically shifted right by `i`.
pub fn is_circulant<T: PartialEq + nalgebra::Scalar>(m: &DMatrix<T>) -> bool {
    let n = m.nrows();
    if !m.is_square() {
        return false;
    }
    (1..n).all(|i| (0..n).all(|j| m[(i, j)] == m[(0, (j + n - i) % n)]))
}

/// Cyclic distance between ring positions.
pub fn ring_distance(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

/// Ring of `n` nodes, each connected to its `k` nearest neighbours on both sides.
pub fn build_ring(n: usize, k: usize) -> Result<Network> {
    if n < 3 {
        return Err(Error::param(
            "n",
            format!("ring needs at least 3 nodes, got {n}"),
        ));
    }
    if k == 0 || 2 * k >= n {
        return Err(Error::param(
            "k",
            format!("neighbour radius must satisfy 1 <= k < n/2, got k={k}, n={n}"),
        ));
    }
    let distances = DMatrix::from_fn(n, n, |i, j| ring_distance(i, j, n) as f64);
    let weights = DMatrix::from_fn(n, n, |i, j| {
        let d = ring_distance(i, j, n);
        if d >= 1 && d <= k {
            1.0
        } else {
            0.0
        }
    });
    Ok(Network {
        weights,
        distances,
        positions: None,
        is_circulant: true,
    })
}

/// Which ring distance the reference maximum delay is pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelaySpan {
    /// Longest connected hop (`k`) takes [`RING_MAX_DELAY`].
    #[default]
    ConnectedPairs,
    /// Longest cyclic distance (`n/2`) takes [`RING_MAX_DELAY`].
    AllPairs,
}

/// Propagation speed (hops per second) that maps the chosen reference
/// distance onto [`RING_MAX_DELAY`].
pub fn ring_default_speed(n: usize, k: usize, span: DelaySpan) -> f64 {
    let hops = match span {
        DelaySpan::ConnectedPairs => k,
        DelaySpan::AllPairs => n / 2,
    };
    hops as f64 / RING_MAX_DELAY
}

/// Conduction delays in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayMatrix {
    pub tau: DMatrix<f64>,
    pub is_circulant: bool,
}

impl DelayMatrix {
    pub fn zeros(n: usize) -> Self {
        DelayMatrix {
            tau: DMatrix::zeros(n, n),
            is_circulant: true,
        }
    }

    pub fn n(&self) -> usize {
        self.tau.nrows()
    }

    /// Largest delay over the pairs connected in `net`.
    pub fn max_connected(&self, net: &Network) -> f64 {
        net.weights
            .iter()
            .zip(self.tau.iter())
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, t)| *t)
            .fold(0.0, f64::max)
    }

    /// Smallest delay over the pairs connected in `net`.
    pub fn min_connected(&self, net: &Network) -> f64 {
        net.weights
            .iter()
            .zip(self.tau.iter())
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, t)| *t)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `tau = distances / nu`, with `nu` in length units per second.
pub fn delays_from_distances(net: &Network, nu: f64) -> Result<DelayMatrix> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::param(
            "nu",
            format!("speed must be positive and finite, got {nu}"),
        ));
    }
    let mut tau = net.distances.map(|d| d / nu);
    tau.fill_diagonal(0.0);
    Ok(DelayMatrix {
        tau,
        is_circulant: net.is_circulant,
    })
}

fn sample_unit_ball(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let p = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        if p.iter().map(|c: &f64| c * c).sum::<f64>() <= 1.0 {
            return p;
        }
    }
}

fn euclidean(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Random geometric stand-in for a cortical connectome.
///
/// Points are uniform in the unit ball. A pair is connected when its
/// Euclidean distance is at most `2 * density` (so `density = 1` connects
/// every pair) and then carries weight `exp(-d / GEOMETRIC_DECAY)`.
pub fn synth_geometric(n: usize, density: f64, seed: u64) -> Result<Network> {
    synth_geometric_with(n, density, GEOMETRIC_DECAY, seed)
}

/// [`synth_geometric`] with an explicit decay length.
pub fn synth_geometric_with(n: usize, density: f64, decay: f64, seed: u64) -> Result<Network> {
    if !(decay > 0.0) || !decay.is_finite() {
        return Err(Error::param(
            "decay",
            format!("must be positive, got {decay}"),
        ));
    }
    if n < 10 {
        return Err(Error::param(
            "n",
            format!("need at least 10 nodes, got {n}"),
        ));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::param(
            "density",
            format!("must lie in (0, 1], got {density}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<[f64; 3]> = (0..n).map(|_| sample_unit_ball(&mut rng)).collect();
    let radius = 2.0 * density;
    let distances = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            euclidean(&positions[i], &positions[j])
        }
    });
    let weights = DMatrix::from_fn(n, n, |i, j| {
        let d = distances[(i, j)];
        if i != j && d <= radius && d > 0.0 {
            (-d / decay).exp()
        } else {
            0.0
        }
    });
    Ok(Network {
        weights,
        distances,
        positions: Some(positions),
        is_circulant: false,
    })
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        reason: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("cannot parse {what} from `{tok}`"),
    })
}

/// Parses the text network format:
///
/// ```text
/// nodes <n>
/// pos <i> <x> <y> <z>      # one per node
/// edge <i> <j> <weight> <length>
/// ```
///
/// Edges are undirected. A pair listed twice must agree to [`SYMMETRY_TOL`].
pub fn parse_network(text: &str) -> Result<Network> {
    let mut n: Option<usize> = None;
    let mut positions: Vec<Option<[f64; 3]>> = Vec::new();
    let mut weights: DMatrix<f64> = DMatrix::zeros(0, 0);
    let mut distances: DMatrix<f64> = DMatrix::zeros(0, 0);
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let kind = toks.next().unwrap_or_default();

        let Some(nodes) = n else {
            if kind != "nodes" {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected header `nodes <n>`, found `{kind}`"),
                });
            }
            let count: usize = parse_field(toks.next(), line, "node count")?;
            if count == 0 {
                return Err(Error::Validation {
                    line,
                    reason: "node count must be positive".into(),
                });
            }
            n = Some(count);
            positions = vec![None; count];
            weights = DMatrix::zeros(count, count);
            distances = DMatrix::zeros(count, count);
            continue;
        };

        let index = |tok: Option<&str>, what: &str| -> Result<usize> {
            let i: usize = parse_field(tok, line, what)?;
            if i >= nodes {
                return Err(Error::Validation {
                    line,
                    reason: format!("{what} {i} out of range for {nodes} nodes"),
                });
            }
            Ok(i)
        };

        match kind {
            "nodes" => {
                return Err(Error::Parse {
                    line,
                    reason: "duplicate header".into(),
                })
            }
            "pos" => {
                let i = index(toks.next(), "node index")?;
                let x = parse_field(toks.next(), line, "x")?;
                let y = parse_field(toks.next(), line, "y")?;
                let z = parse_field(toks.next(), line, "z")?;
                if positions[i].replace([x, y, z]).is_some() {
                    return Err(Error::Validation {
                        line,
                        reason: format!("position of node {i} given twice"),
                    });
                }
            }
            "edge" => {
                let i = index(toks.next(), "node index")?;
                let j = index(toks.next(), "node index")?;
                let w: f64 = parse_field(toks.next(), line, "weight")?;
                let d: f64 = parse_field(toks.next(), line, "length")?;
                if i == j {
                    return Err(Error::Validation {
                        line,
                        reason: format!("self-loop on node {i}"),
                    });
                }
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::Validation {
                        line,
                        reason: format!("negative or non-finite weight {w}"),
                    });
                }
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::Validation {
                        line,
                        reason: format!("negative or non-finite length {d}"),
                    });
                }
                if w > 0.0 && d == 0.0 {
                    return Err(Error::Validation {
                        line,
                        reason: "weighted edge with zero length".into(),
                    });
                }
                let key = (i.min(j), i.max(j));
                if let Some(prev) = seen.get(&key) {
                    let (pw, pd): (f64, f64) = (weights[key], distances[key]);
                    if (pw - w).abs() > SYMMETRY_TOL || (pd - d).abs() > SYMMETRY_TOL {
                        return Err(Error::Validation {
                            line,
                            reason: format!(
                                "asymmetric entry ({i},{j}): disagrees with line {prev}"
                            ),
                        });
                    }
                    continue;
                }
                seen.insert(key, line);
                weights[(i, j)] = w;
                weights[(j, i)] = w;
                distances[(i, j)] = d;
                distances[(j, i)] = d;
            }
            other => {
                return Err(Error::Parse {
                    line,
                    reason: format!("unknown record `{other}`"),
                })
            }
        }
    }

    if n.is_none() {
        return Err(Error::Parse {
            line: last_line.max(1),
            reason: "missing header `nodes <n>`".into(),
        });
    }
    let positions = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| Error::Validation {
                line: last_line,
                reason: format!("node {i} has no position"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Network::from_parts(weights, distances, Some(positions))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_network(&text)
}

/// Writes a network in the format read by [`parse_network`]. Nodes without
/// positions are written at the origin.
pub fn format_network(net: &Network) -> String {
    let n = net.n();
    let mut out = format!("nodes {n}\n");
    for i in 0..n {
        let p = net.positions.as_ref().map_or([0.0; 3], |ps| ps[i]);
        out.push_str(&format!("pos {i} {} {} {}\n", p[0], p[1], p[2]));
    }
    for i in 0..n {
        for j in i + 1..n {
            let w = net.weights[(i, j)];
            if w > 0.0 {
                out.push_str(&format!("edge {i} {j} {w} {}\n", net.distances[(i, j)]));
            }
        }
    }
    out
}
