//! Spin-network topologies.
//!
//! A [`SpinLattice`] is a vertex count plus a sorted, duplicate-free set of
//! coupling edges `(j, k)` with `j < k`. Vertices are 0-based everywhere.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinLattice {
    n_spins: usize,
    edges: Vec<(usize, usize)>,
    label: String,
}

impl SpinLattice {
    /// Builds a lattice from arbitrary pairs. Pairs are normalised to `j < k`
    /// and deduplicated; self-loops and out-of-range indices are rejected.
    pub fn new(
        n_spins: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidLattice("lattice needs at least one spin".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a >= n_spins || b >= n_spins {
                return Err(Error::InvalidLattice(format!(
                    "edge ({a}, {b}) out of range for {n_spins} spins"
                )));
            }
            if a == b {
                return Err(Error::InvalidLattice(format!("self-loop on spin {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(SpinLattice {
            n_spins,
            edges: set.into_iter().collect(),
            label: label.into(),
        })
    }

    /// Nearest-neighbour chain with periodic boundary.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidLattice(format!("ring needs n >= 2, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)), format!("ring({n})"))
    }

    /// Square grid with wraparound in both directions. Vertex `(r, c)` has
    /// index `r * cols + c`. A size-1 dimension degrades to a ring.
    pub fn torus(rows: usize, cols: usize) -> Result<Self> {
        if rows * cols == 0 {
            return Err(Error::InvalidLattice(format!("torus({rows}, {cols}) has no spins")));
        }
        if rows == 1 {
            return Self::ring(cols);
        }
        if cols == 1 {
            return Self::ring(rows);
        }
        let idx = |r: usize, c: usize| r * cols + c;
        let mut pairs = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pairs.push((idx(r, c), idx(r, (c + 1) % cols)));
                pairs.push((idx(r, c), idx((r + 1) % rows, c)));
            }
        }
        Self::new(rows * cols, pairs, format!("torus({rows},{cols})"))
    }

    /// Parses the edge-list format: a `N <count>` header, then one `j k` pair
    /// per line. Lines starting with `#` and blank lines are skipped.
    pub fn from_edge_list(source: &str) -> Result<Self> {
        let mut n_spins: Option<usize> = None;
        let mut set = BTreeSet::new();
        for (i, raw) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match n_spins {
                None => {
                    if tokens.len() != 2 || tokens[0] != "N" {
                        return Err(parse_err(format!("expected header `N <count>`, got `{line}`")));
                    }
                    let n: usize = tokens[1]
                        .parse()
                        .map_err(|_| parse_err(format!("bad vertex count `{}`", tokens[1])))?;
                    if n == 0 {
                        return Err(parse_err("vertex count must be positive".into()));
                    }
                    n_spins = Some(n);
                }
                Some(n) => {
                    if tokens.len() != 2 {
                        return Err(parse_err(format!("expected `j k`, got `{line}`")));
                    }
                    let parse_idx = |tok: &str| {
                        tok.parse::<usize>()
                            .map_err(|_| parse_err(format!("bad vertex index `{tok}`")))
                    };
                    let (a, b) = (parse_idx(tokens[0])?, parse_idx(tokens[1])?);
                    if a >= n || b >= n {
                        return Err(parse_err(format!("edge ({a}, {b}) out of range for N = {n}")));
                    }
                    if a == b {
                        return Err(parse_err(format!("self-loop on vertex {a}")));
                    }
                    set.insert((a.min(b), a.max(b)));
                }
            }
        }
        let n_spins = n_spins.ok_or(Error::Parse {
            line: 0,
            msg: "missing `N <count>` header".into(),
        })?;
        Ok(SpinLattice {
            n_spins,
            edges: set.into_iter().collect(),
            label: "edge-list".into(),
        })
    }

    /// Inverse of [`SpinLattice::from_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {}\nN {}\n", self.label, self.n_spins);
        for (j, k) in &self.edges {
            let _ = writeln!(out, "{j} {k}");
        }
        out
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Number of couplings, `n_C`.
    pub fn n_couplings(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `n_C / N`.
    pub fn connectivity_ratio(&self) -> f64 {
        self.edges.len() as f64 / self.n_spins as f64
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_spins];
        for &(j, k) in &self.edges {
            deg[j] += 1;
            deg[k] += 1;
        }
        deg
    }

    /// The complete graph on the same vertices, used by the all-pairs
    /// cross-talk mode.
    pub fn all_pairs(&self) -> SpinLattice {
        let n = self.n_spins;
        let edges = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
        SpinLattice {
            n_spins: n,
            edges,
            label: format!("complete({n})"),
        }
    }
}

/// Lattice used by default for a given spin count in reproduction sweeps:
/// the most square periodic torus with both sides at least 2, or a ring when
/// `n` is prime.
pub fn default_lattice(n: usize) -> Result<SpinLattice> {
    if n < 2 {
        return Err(Error::InvalidLattice(format!("need n >= 2, got {n}")));
    }
    let rows = (2..=n).take_while(|r| r * r <= n).filter(|r| n.is_multiple_of(*r)).last();
    match rows {
        Some(r) => SpinLattice::torus(r, n / r),
        None => SpinLattice::ring(n),
    }
}
