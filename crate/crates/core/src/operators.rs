//! Sparse operators on the `2^N` spin space.
//!
//! Basis convention: basis index `i` encodes spin `k` in bit `k` (spin 0 is
//! the least significant bit). Bit value 1 is the `sigma^z = +1` state, bit
//! value 0 is `sigma^z = -1`, so the all-zero index is the ground state of
//! `S_z`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SpinLattice;
use crate::par::*;
use crate::schedule::{Coefficients, ProtocolSchedule};

/// Largest spin count for which operators and pure states are built.
pub const MAX_SPINS: usize = 16;
/// Largest dimension accepted by [`hs_norm_numeric`].
pub const MAX_NUMERIC_NORM_DIM: usize = 1 << 10;

pub(crate) fn check_spins(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("spin count must be positive".into()));
    }
    if n > MAX_SPINS {
        return Err(Error::Capacity {
            what: "spins",
            value: n,
            limit: MAX_SPINS,
        });
    }
    Ok(())
}

/// `+1` if spin `k` is up in basis state `i`, else `-1`.
#[inline]
pub fn spin_sign(i: usize, k: usize) -> f64 {
    if (i >> k) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Which spin pairs carry the cross-talk bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrosstalkMode {
    /// Only the couplings present on the lattice.
    #[default]
    EdgeSet,
    /// Every pair of spins.
    AllPairs,
}

/// Operator in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
        hermitian: bool,
    ) -> Result<Self> {
        if !dim.is_power_of_two() {
            return Err(Error::Domain(format!("operator dimension {dim} is not a power of two")));
        }
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::Domain(format!("entry ({r}, {c}) outside dimension {dim}")));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                if v != Complex64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseOperator {
            dim,
            row_ptr,
            cols,
            vals,
            hermitian,
        })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::from_triplets(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| (i, i, Complex64::new(v, 0.0))),
            true,
        )
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_spins(n)?;
        Self::diagonal(&vec![1.0; 1 << n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_spins(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Stored `(row, col, value)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim)
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.cols[p], self.vals[p])))
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(p) => self.vals[range.start + p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `Tr[self * other]`.
    pub fn trace_product(&self, other: &SparseOperator) -> Complex64 {
        self.entries().map(|(r, c, v)| v * other.get(c, r)).sum()
    }

    /// Largest `|A(r,c) - conj(A(c,r))|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `out = self * x`.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        let row = |r: usize| -> Complex64 {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(|p| self.vals[p] * x[self.cols[p]])
                .sum()
        };
        if self.dim >= crate::par::PAR_MIN_LEN {
            out.par_iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        } else {
            out.iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        }
    }

    /// Dense row-major copy. Only sensible for small dimensions.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut m = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        for (r, c, v) in self.entries() {
            m[r * self.dim + c] = v;
        }
        m
    }
}

/// Collective `S_z = sum_k sigma^z_k`.
pub fn build_sz(n: usize) -> Result<SparseOperator> {
    check_spins(n)?;
    SparseOperator::diagonal(&sz_diagonal(n))
}

/// Collective `S_x = sum_k sigma^x_k`.
pub fn build_sx(n: usize) -> Result<SparseOperator> {
    check_spins(n)?;
    let dim = 1usize << n;
    SparseOperator::from_triplets(
        dim,
        (0..dim).flat_map(|i| (0..n).map(move |k| (i, i ^ (1 << k), Complex64::new(1.0, 0.0)))),
        true,
    )
}

/// `sum_<j,k> sigma^z_j sigma^z_k` over the lattice edges.
pub fn build_coupling(lat: &SpinLattice) -> Result<SparseOperator> {
    check_spins(lat.n_spins())?;
    SparseOperator::diagonal(&zz_diagonal(lat))
}

/// Single-site Pauli operator `sigma^axis_site` embedded in `n` spins.
/// `axis` is one of `'x'`, `'y'`, `'z'`.
pub fn build_pauli(n: usize, site: usize, axis: char) -> Result<SparseOperator> {
    check_spins(n)?;
    if site >= n {
        return Err(Error::Domain(format!("site {site} outside {n} spins")));
    }
    let dim = 1usize << n;
    let triplets: Vec<_> = (0..dim)
        .map(|i| {
            let up = (i >> site) & 1 == 1;
            match axis {
                'x' => Ok((i, i ^ (1 << site), Complex64::new(1.0, 0.0))),
                // sigma^y |down> = i |up>, sigma^y |up> = -i |down>
                'y' => Ok((
                    i ^ (1 << site),
                    i,
                    if up {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    },
                )),
                'z' => Ok((i, i, Complex64::new(spin_sign(i, site), 0.0))),
                other => Err(Error::Domain(format!("unknown Pauli axis `{other}`"))),
            }
        })
        .collect::<Result<_>>()?;
    SparseOperator::from_triplets(dim, triplets, true)
}

/// Driving Hamiltonian at time `t`:
/// `Bx S_x + Bz S_z + Jc sum_edges zz + bias sum_{bias pairs} zz`.
pub fn build_h(
    t: f64,
    sched: &ProtocolSchedule,
    lat: &SpinLattice,
    crosstalk: CrosstalkMode,
) -> Result<SparseOperator> {
    let terms = IsingTerms::new(lat, crosstalk)?;
    let c = sched.coefficients(t)?;
    let bias = sched.crosstalk_bias(t)?;
    let diag = terms.diagonal(&c, bias);
    let n = terms.n;
    let dim = terms.dim();
    let bx = Complex64::new(c.bx, 0.0);
    let diag_entries = diag.iter().enumerate().map(|(i, &d)| (i, i, Complex64::new(d, 0.0)));
    let off: Vec<_> = if c.bx == 0.0 {
        Vec::new()
    } else {
        (0..dim)
            .flat_map(|i| (0..n).map(move |k| (i, i ^ (1 << k), bx)))
            .collect()
    };
    SparseOperator::from_triplets(dim, diag_entries.chain(off), true)
}

/// `2^{-N/2} ||H||_HS = sqrt(N (Bx^2 + Bz^2) + n_C Jc^2)`.
///
/// The unnormalised norm carries an extra `2^{N/2}`, which overflows for
/// device-scale `N`; every norm in this crate uses the normalised scale.
pub fn hs_norm_closed_form(bx: f64, bz: f64, jc: f64, n: usize, n_c: usize) -> f64 {
    (n as f64 * (bx * bx + bz * bz) + n_c as f64 * jc * jc).sqrt()
}

/// `sqrt(sum |entries|^2)` times `2^{-N/2}`, comparable with
/// [`hs_norm_closed_form`].
pub fn hs_norm_numeric(op: &SparseOperator) -> Result<f64> {
    if op.dim() > MAX_NUMERIC_NORM_DIM {
        return Err(Error::Capacity {
            what: "dimension for numeric norm",
            value: op.dim(),
            limit: MAX_NUMERIC_NORM_DIM,
        });
    }
    let sum: f64 = op.entries().map(|(_, _, v)| v.norm_sqr()).sum();
    Ok((sum / op.dim() as f64).sqrt())
}

/// Unnormalised `sqrt(Tr[H^dagger H])`.
pub fn hs_norm_unnormalized(op: &SparseOperator) -> Result<f64> {
    Ok(hs_norm_numeric(op)? * (op.dim() as f64).sqrt())
}

pub(crate) fn sz_diagonal(n: usize) -> Vec<f64> {
    (0..1usize << n)
        .map(|i| 2.0 * (i.count_ones() as f64) - n as f64)
        .collect()
}

pub(crate) fn zz_diagonal(lat: &SpinLattice) -> Vec<f64> {
    let n = lat.n_spins();
    (0..1usize << n)
        .map(|i| {
            lat.edges()
                .iter()
                .map(|&(j, k)| if ((i >> j) ^ (i >> k)) & 1 == 0 { 1.0 } else { -1.0 })
                .sum()
        })
        .collect()
}

/// Matrix-free form of the driving Hamiltonian. The diagonal parts are
/// tabulated once; `S_x` is applied by bit flips.
#[derive(Debug, Clone)]
pub struct IsingTerms {
    n: usize,
    sz: Vec<f64>,
    zz: Vec<f64>,
    /// Coupling diagonal for the cross-talk bias when it acts on a different
    /// pair set than the lattice.
    zz_bias: Option<Vec<f64>>,
    n_couplings: usize,
}

impl IsingTerms {
    pub fn new(lat: &SpinLattice, crosstalk: CrosstalkMode) -> Result<Self> {
        let n = lat.n_spins();
        check_spins(n)?;
        let zz_bias = match crosstalk {
            CrosstalkMode::EdgeSet => None,
            CrosstalkMode::AllPairs => Some(zz_diagonal(&lat.all_pairs())),
        };
        Ok(IsingTerms {
            n,
            sz: sz_diagonal(n),
            zz: zz_diagonal(lat),
            zz_bias,
            n_couplings: lat.n_couplings(),
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn n_couplings(&self) -> usize {
        self.n_couplings
    }

    pub fn sz(&self) -> &[f64] {
        &self.sz
    }

    /// Diagonal of `Bz S_z + (Jc + bias) C` (or `Jc C + bias C_all`).
    pub fn diagonal(&self, c: &Coefficients, bias: f64) -> Vec<f64> {
        let mut d = vec![0.0; self.dim()];
        self.fill_diagonal(c, bias, &mut d);
        d
    }

    pub fn fill_diagonal(&self, c: &Coefficients, bias: f64, out: &mut [f64]) {
        match &self.zz_bias {
            None => {
                let jz = c.jc + bias;
                for ((o, &s), &z) in out.iter_mut().zip(&self.sz).zip(&self.zz) {
                    *o = c.bz * s + jz * z;
                }
            }
            Some(zb) => {
                for (((o, &s), &z), &b) in out.iter_mut().zip(&self.sz).zip(&self.zz).zip(zb) {
                    *o = c.bz * s + c.jc * z + bias * b;
                }
            }
        }
    }

    /// Upper bound on the spectral radius of `bx S_x + diag(diag)`.
    pub fn norm_bound(&self, bx: f64, diag: &[f64]) -> f64 {
        let dmax = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        dmax + bx.abs() * self.n as f64
    }

    /// `out = (bx S_x + diag(diag)) x`.
    pub fn apply(&self, bx: f64, diag: &[f64], x: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let row = |i: usize| -> Complex64 {
            let mut acc = x[i] * diag[i];
            if bx != 0.0 {
                let mut flip = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    flip += x[i ^ (1 << k)];
                }
                acc += flip * bx;
            }
            acc
        };
        if x.len() >= crate::par::PAR_MIN_LEN {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
        } else {
            out.iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
        }
    }
}
