//! Time evolution under the driving Hamiltonian.
//!
//! Pure states are stepped with `psi <- exp(-i c H(t*) dt) psi`, where `c`
//! is the schedule's phase constant and `t*` the sampling point of the step
//! (midpoint by default). Density matrices follow the Lindblad equation with
//! single-site `sigma^x` jump operators.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::expm_action;
use crate::lattice::SpinLattice;
use crate::observables;
use crate::operators::{check_spins, CrosstalkMode, IsingTerms};
use crate::par::*;
use crate::schedule::ProtocolSchedule;

/// Largest spin count for density-matrix evolution.
pub const MAX_LINDBLAD_SPINS: usize = 6;
/// Default step, matching the reference exact-propagation runs.
pub const DEFAULT_DT: f64 = 0.01;

/// Largest `h * radius` an RK4 substep may take.
const RK4_REACH: f64 = 0.1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Normalised amplitude vector on `2^N` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::Domain(format!("state length {dim} is not 2^N with N >= 1")));
        }
        let n = dim.trailing_zeros() as usize;
        check_spins(n)?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("state norm {norm} differs from 1")));
        }
        Ok(PureState { n, amps })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_spins(n)?;
        let mut amps = vec![ZERO; 1 << n];
        *amps
            .get_mut(index)
            .ok_or_else(|| Error::Domain(format!("basis index {index} out of range")))? = Complex64::new(1.0, 0.0);
        Ok(PureState { n, amps })
    }

    /// `cos(theta) |1...1> + sin(theta) |0...0>`.
    pub fn ghz(n: usize, theta: f64) -> Result<Self> {
        check_spins(n)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[(1 << n) - 1] += Complex64::new(theta.cos(), 0.0);
        amps[0] += Complex64::new(theta.sin(), 0.0);
        Ok(PureState { n, amps })
    }

    /// Every spin along `+x`.
    pub fn x_polarized(n: usize) -> Result<Self> {
        check_spins(n)?;
        let a = Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
        Ok(PureState {
            n,
            amps: vec![a; 1 << n],
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// All spins down: amplitude 1 on basis index 0.
pub fn ground_state(n: usize) -> Result<PureState> {
    PureState::basis(n, 0)
}

/// Density matrix, row-major `2^N x 2^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    n: usize,
    data: Vec<Complex64>,
}

impl DensityState {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        let rho = Self::unchecked(n, data)?;
        rho.check(1e-9, 1e-7)?;
        Ok(rho)
    }

    fn unchecked(n: usize, data: Vec<Complex64>) -> Result<Self> {
        check_spins(n)?;
        let dim = 1usize << n;
        if data.len() != dim * dim {
            return Err(Error::Domain(format!(
                "density matrix has {} entries, expected {}",
                data.len(),
                dim * dim
            )));
        }
        Ok(DensityState { n, data })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let a = psi.amplitudes();
        let dim = a.len();
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = a[i] * a[j].conj();
            }
        }
        DensityState { n: psi.n, data }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_spins(n)?;
        let dim = 1usize << n;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(DensityState { n, data })
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        let m = DMatrix::from_row_slice(dim, dim, &self.data);
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with(&self, psi: &PureState) -> f64 {
        let a = psi.amplitudes();
        let dim = self.dim();
        let mut acc = ZERO;
        for i in 0..dim {
            for j in 0..dim {
                acc += a[i].conj() * self.data[i * dim + j] * a[j];
            }
        }
        acc.re
    }

    fn symmetrize(&mut self) {
        let dim = self.dim();
        for i in 0..dim {
            self.data[i * dim + i].im = 0.0;
            for j in i + 1..dim {
                let avg = (self.data[i * dim + j] + self.data[j * dim + i].conj()) * 0.5;
                self.data[i * dim + j] = avg;
                self.data[j * dim + i] = avg.conj();
            }
        }
    }

    fn check(&self, trace_tol: f64, positivity_tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::Domain(format!("density trace {tr} differs from 1")));
        }
        let defect = self.hermiticity_defect();
        if defect > 1e-9 {
            return Err(Error::Domain(format!("density matrix not Hermitian (defect {defect})")));
        }
        let min = self.min_eigenvalue();
        if min < -positivity_tol {
            return Err(Error::Domain(format!("density matrix has eigenvalue {min}")));
        }
        Ok(())
    }
}

/// Where the Hamiltonian is sampled within each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    #[default]
    Midpoint,
    Left,
}

/// Density-matrix integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LindbladScheme {
    /// Exact dissipator halves around the sampled unitary step; positive by
    /// construction and identical to pure-state stepping at `gamma = 0`.
    #[default]
    Split,
    /// Explicit RK4 on the full generator with continuous `H(t)`.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub dt: f64,
    pub sampling: Sampling,
    pub crosstalk: CrosstalkMode,
    /// Record a trajectory sample every this many steps (the final step is
    /// always recorded).
    pub record_every: usize,
    pub lindblad: LindbladScheme,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            dt: DEFAULT_DT,
            sampling: Sampling::Midpoint,
            crosstalk: CrosstalkMode::EdgeSet,
            record_every: 1,
            lindblad: LindbladScheme::Split,
        }
    }
}

/// Per-step summary of an evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub mu: f64,
    pub sigma: f64,
    /// State norm (pure) or trace (density).
    pub norm_or_trace: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub samples: Vec<TrajectorySample>,
    pub final_state: S,
}

impl<S> Trajectory<S> {
    pub fn final_sample(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory always holds t = 0")
    }

    /// Writes `t,mu,sigma,norm_or_trace` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_samples_csv(&self.samples, out)
    }
}

/// Writes trajectory samples as `t,mu,sigma,norm_or_trace` rows.
pub fn write_samples_csv<W: Write>(samples: &[TrajectorySample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io("<trajectory>", e))?;
    Ok(())
}

fn step_count(tau: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let steps = (tau / dt).round();
    if steps < 1.0 || (steps * dt - tau).abs() > 1e-9 * tau.max(1.0) {
        return Err(Error::Domain(format!("dt = {dt} does not divide tau = {tau}")));
    }
    Ok(steps as usize)
}

fn sample_point(k: usize, dt: f64, tau: f64, sampling: Sampling) -> f64 {
    let t = match sampling {
        Sampling::Midpoint => (k as f64 + 0.5) * dt,
        Sampling::Left => k as f64 * dt,
    };
    t.min(tau)
}

fn pure_sample(t: f64, psi: &PureState) -> TrajectorySample {
    let probs = psi.probabilities();
    let (mu, sigma) = observables::moments_from_probabilities(psi.n_spins(), &probs);
    TrajectorySample {
        t,
        mu,
        sigma,
        norm_or_trace: psi.norm(),
    }
}

/// Evolves a pure state over one full schedule, calling `observe` after
/// every step with the current time and state.
pub fn evolve_unitary_with<F>(
    psi: &PureState,
    sched: &ProtocolSchedule,
    lat: &SpinLattice,
    opts: &PropagationOptions,
    mut observe: F,
) -> Result<PureState>
where
    F: FnMut(f64, &PureState),
{
    sched.validate()?;
    if lat.n_spins() != psi.n_spins() {
        return Err(Error::Domain(format!(
            "state has {} spins, lattice has {}",
            psi.n_spins(),
            lat.n_spins()
        )));
    }
    let steps = step_count(sched.tau, opts.dt)?;
    let terms = IsingTerms::new(lat, opts.crosstalk)?;
    let mut state = psi.clone();
    let mut diag = vec![0.0; terms.dim()];
    let start_norm = state.norm();
    observe(0.0, &state);
    for k in 0..steps {
        let ts = sample_point(k, opts.dt, sched.tau, opts.sampling);
        let c = sched.coefficients(ts)?;
        let bias = sched.crosstalk_bias(ts)?;
        terms.fill_diagonal(&c, bias, &mut diag);
        let theta = sched.phase * opts.dt;
        let before = state.norm();
        if c.bx == 0.0 {
            // diagonal Hamiltonian: exact phase rotation
            state
                .amps
                .iter_mut()
                .zip(&diag)
                .for_each(|(a, &d)| *a *= Complex64::from_polar(1.0, -theta * d));
        } else {
            let apply = |x: &[Complex64], out: &mut [Complex64]| terms.apply(c.bx, &diag, x, out);
            state.amps = expm_action(&apply, &state.amps, theta)?;
        }
        let after = state.norm();
        if (after - start_norm).abs() > 1e-6 {
            return Err(Error::IntegratorFailure(format!(
                "norm drifted to {after} at step {k} (step drift {:e})",
                after - before
            )));
        }
        let t = if k + 1 == steps {
            sched.tau
        } else {
            (k + 1) as f64 * opts.dt
        };
        observe(t, &state);
    }
    Ok(state)
}

/// Evolves a pure state over one schedule and records magnetization,
/// fluctuation and norm along the way.
pub fn evolve_unitary(
    psi: &PureState,
    sched: &ProtocolSchedule,
    lat: &SpinLattice,
    opts: &PropagationOptions,
) -> Result<Trajectory<PureState>> {
    let every = opts.record_every.max(1);
    let steps = step_count(sched.tau, opts.dt)?;
    let mut samples = Vec::with_capacity(steps / every + 2);
    let mut k = 0usize;
    let final_state = evolve_unitary_with(psi, sched, lat, opts, |t, s| {
        if k.is_multiple_of(every) || k == steps {
            samples.push(pure_sample(t, s));
        }
        k += 1;
    })?;
    Ok(Trajectory { samples, final_state })
}

/// Right-hand side of the Lindblad equation,
/// `-i c [H, rho] + gamma sum_k (X_k rho X_k - rho)`.
struct LindbladRhs<'a> {
    terms: &'a IsingTerms,
    phase: f64,
    gamma: f64,
}

impl LindbladRhs<'_> {
    fn eval(&self, bx: f64, diag: &[f64], rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.terms.n_spins();
        let dim = self.terms.dim();
        let mi = Complex64::new(0.0, -self.phase);
        let n_f = n as f64;
        out.par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
            for (j, o) in row.iter_mut().enumerate() {
                let r = rho[i * dim + j];
                let mut comm = r * (diag[i] - diag[j]);
                let mut jump = ZERO;
                for k in 0..n {
                    let bit = 1 << k;
                    if bx != 0.0 {
                        comm += (rho[(i ^ bit) * dim + j] - rho[i * dim + (j ^ bit)]) * bx;
                    }
                    jump += rho[(i ^ bit) * dim + (j ^ bit)];
                }
                *o = mi * comm + (jump - r * n_f) * self.gamma;
            }
        });
    }
}

fn density_sample(t: f64, rho: &DensityState) -> TrajectorySample {
    let (mu, sigma) = observables::moments_from_probabilities(rho.n, &rho.diagonal());
    TrajectorySample {
        t,
        mu,
        sigma,
        norm_or_trace: rho.trace().re,
    }
}

type Stepper<'a> = dyn FnMut(usize, &mut DensityState) -> Result<()> + 'a;

/// Integrates the Lindblad equation over one schedule with local `sigma^x`
/// jump operators at rate `gamma`, using the scheme in `opts.lindblad`.
pub fn evolve_lindblad(
    rho: &DensityState,
    sched: &ProtocolSchedule,
    lat: &SpinLattice,
    gamma: f64,
    opts: &PropagationOptions,
) -> Result<Trajectory<DensityState>> {
    sched.validate()?;
    let n = rho.n_spins();
    if n > MAX_LINDBLAD_SPINS {
        return Err(Error::Capacity {
            what: "spins for density-matrix evolution",
            value: n,
            limit: MAX_LINDBLAD_SPINS,
        });
    }
    if lat.n_spins() != n {
        return Err(Error::Domain(format!(
            "state has {n} spins, lattice has {}",
            lat.n_spins()
        )));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be >= 0, got {gamma}")));
    }
    let steps = step_count(sched.tau, opts.dt)?;
    let terms = IsingTerms::new(lat, opts.crosstalk)?;
    let every = opts.record_every.max(1);
    let mut stepper: Box<Stepper<'_>> = match opts.lindblad {
        LindbladScheme::Split => Box::new(split_stepper(sched, &terms, gamma, opts)),
        LindbladScheme::Rk4 => Box::new(rk4_stepper(sched, &terms, gamma, opts)?),
    };

    let mut state = rho.clone();
    let mut samples = vec![density_sample(0.0, &state)];
    for step in 0..steps {
        stepper(step, &mut state)?;
        state.symmetrize();
        let tr = state.trace();
        if (tr.re - 1.0).abs() > 1e-9 {
            return Err(Error::IntegratorFailure(format!(
                "trace drifted to {} at step {step}",
                tr.re
            )));
        }
        let last = step + 1 == steps;
        if (step + 1) % every == 0 || last {
            let t = if last { sched.tau } else { (step + 1) as f64 * opts.dt };
            samples.push(density_sample(t, &state));
        }
    }
    let min = state.min_eigenvalue();
    if min < -1e-7 {
        return Err(Error::IntegratorFailure(format!(
            "final density matrix lost positivity (eigenvalue {min})"
        )));
    }
    Ok(Trajectory {
        samples,
        final_state: state,
    })
}

/// Exact action of `exp(t D)` for the dissipator: each site mixes `rho`
/// with `X_k rho X_k`.
fn apply_dissipator(rho: &mut DensityState, gamma: f64, t: f64, scratch: &mut Vec<Complex64>) {
    if gamma == 0.0 {
        return;
    }
    let decay = (-2.0 * gamma * t).exp();
    let (keep, flip) = ((1.0 + decay) / 2.0, (1.0 - decay) / 2.0);
    let dim = rho.dim();
    for k in 0..rho.n {
        let m = 1usize << k;
        scratch.clear();
        scratch.extend_from_slice(&rho.data);
        rho.data.par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
            for (j, x) in row.iter_mut().enumerate() {
                *x = scratch[i * dim + j] * keep + scratch[(i ^ m) * dim + (j ^ m)] * flip;
            }
        });
    }
}

/// Strang splitting: half a dissipator step, the same sampled-Hamiltonian
/// exponential used for pure states applied as `U rho U^dagger`, then the
/// other half. Every factor is completely positive.
fn split_stepper<'a>(
    sched: &'a ProtocolSchedule,
    terms: &'a IsingTerms,
    gamma: f64,
    opts: &'a PropagationOptions,
) -> impl FnMut(usize, &mut DensityState) -> Result<()> + 'a {
    let dim = terms.dim();
    let mut diag = vec![0.0; dim];
    let mut scratch = Vec::with_capacity(dim * dim);
    move |k, rho| {
        apply_dissipator(rho, gamma, opts.dt / 2.0, &mut scratch);
        let ts = sample_point(k, opts.dt, sched.tau, opts.sampling);
        let c = sched.coefficients(ts)?;
        terms.fill_diagonal(&c, sched.crosstalk_bias(ts)?, &mut diag);
        let theta = sched.phase * opts.dt;
        let diag = &diag;
        let evolve = |col: Vec<Complex64>| -> Result<Vec<Complex64>> {
            if c.bx == 0.0 {
                Ok(col
                    .iter()
                    .zip(diag)
                    .map(|(a, &d)| a * Complex64::from_polar(1.0, -theta * d))
                    .collect())
            } else {
                let apply = |x: &[Complex64], out: &mut [Complex64]| terms.apply(c.bx, diag, x, out);
                expm_action(&apply, &col, theta)
            }
        };
        // columns of U rho; rho is Hermitian so column j is conj(row j)
        let u_rho: Vec<Vec<Complex64>> = (0..dim)
            .into_par_iter()
            .map(|j| evolve(rho.data[j * dim..(j + 1) * dim].iter().map(|x| x.conj()).collect()))
            .collect::<Result<_>>()?;
        // column j of (U rho)^dagger is conj(row j of U rho)
        let full: Vec<Vec<Complex64>> = (0..dim)
            .into_par_iter()
            .map(|j| evolve((0..dim).map(|i| u_rho[i][j].conj()).collect()))
            .collect::<Result<_>>()?;
        for (j, col) in full.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                rho.data[i * dim + j] = *x;
            }
        }
        apply_dissipator(rho, gamma, opts.dt / 2.0, &mut scratch);
        Ok(())
    }
}

/// Classical RK4 on the full generator with `H(t)` evaluated continuously.
/// Substeps keep `h * radius` inside the stability region.
fn rk4_stepper<'a>(
    sched: &'a ProtocolSchedule,
    terms: &'a IsingTerms,
    gamma: f64,
    opts: &'a PropagationOptions,
) -> Result<impl FnMut(usize, &mut DensityState) -> Result<()> + 'a> {
    let rhs = LindbladRhs {
        terms,
        phase: sched.phase,
        gamma,
    };
    let dim = terms.dim();
    let len = dim * dim;
    // spectral radius of the generator is at most 2 c |H| + 2 gamma N
    let mut h_bound = 0.0f64;
    for &t in sched.breakpoints().iter().chain([0.0, sched.tau / 2.0].iter()) {
        let c = sched.coefficients(t)?;
        let bias = sched.crosstalk_bias(t)?.abs();
        let d = terms.diagonal(
            &crate::schedule::Coefficients {
                bx: c.bx,
                bz: c.bz.abs().max(sched.h.abs() * sched.table.b_at_one() / 2.0),
                jc: c.jc,
            },
            bias,
        );
        h_bound = h_bound.max(terms.norm_bound(c.bx, &d));
    }
    let radius = 2.0 * sched.phase * h_bound + 2.0 * gamma * terms.n_spins() as f64;
    let substeps = ((radius * opts.dt / RK4_REACH).ceil() as usize).max(1);
    let h = opts.dt / substeps as f64;
    let mut k1 = vec![ZERO; len];
    let mut k2 = vec![ZERO; len];
    let mut k3 = vec![ZERO; len];
    let mut k4 = vec![ZERO; len];
    let mut tmp = vec![ZERO; len];
    let mut diag = vec![0.0; dim];
    let eval_at = move |t: f64, x: &[Complex64], out: &mut [Complex64], diag: &mut [f64]| -> Result<()> {
        let t = t.min(sched.tau);
        let c = sched.coefficients(t)?;
        terms.fill_diagonal(&c, sched.crosstalk_bias(t)?, diag);
        rhs.eval(c.bx, diag, x, out);
        Ok(())
    };
    Ok(move |step: usize, state: &mut DensityState| -> Result<()> {
        for sub in 0..substeps {
            let t0 = step as f64 * opts.dt + sub as f64 * h;
            let x = &state.data;
            eval_at(t0, x, &mut k1, &mut diag)?;
            for i in 0..len {
                tmp[i] = x[i] + k1[i] * (h / 2.0);
            }
            eval_at(t0 + h / 2.0, &tmp, &mut k2, &mut diag)?;
            for i in 0..len {
                tmp[i] = x[i] + k2[i] * (h / 2.0);
            }
            eval_at(t0 + h / 2.0, &tmp, &mut k3, &mut diag)?;
            for i in 0..len {
                tmp[i] = x[i] + k3[i] * h;
            }
            eval_at(t0 + h, &tmp, &mut k4, &mut diag)?;
            for i in 0..len {
                state.data[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{EnergyTable, Mode, Preset};

    fn zero_field_schedule(tau: f64) -> ProtocolSchedule {
        let mut s = Preset::Numerics.schedule(Mode::Cooperative);
        s.tau = tau;
        s.table = EnergyTable::new(vec![(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]).unwrap();
        s
    }

    /// Schedule whose Hamiltonian is the constant `f sigma^x` on one spin.
    fn constant_x_schedule(f: f64, tau: f64) -> ProtocolSchedule {
        let mut s = Preset::Numerics.schedule(Mode::Local);
        s.tau = tau;
        s.h = 0.0;
        // Bx = -A/2 = -f for every s
        s.table = EnergyTable::new(vec![(0.0, 2.0 * f, 0.0), (1.0, 2.0 * f, 0.0)]).unwrap();
        s
    }

    #[test]
    fn ground_state_shape() {
        let g = ground_state(2).unwrap();
        assert_eq!(g.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(g.amplitudes()[1..].iter().all(|a| *a == ZERO));
    }

    #[test]
    fn state_validation() {
        assert!(PureState::new(vec![Complex64::new(1.0, 0.0); 3]).is_err());
        assert!(PureState::new(vec![Complex64::new(1.0, 0.0); 2]).is_err());
        assert!(DensityState::new(1, vec![Complex64::new(0.5, 0.0); 4]).is_ok());
        assert!(DensityState::new(1, vec![Complex64::new(1.5, 0.0), ZERO, ZERO, Complex64::new(-0.5, 0.0)]).is_err());
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let lat = SpinLattice::ring(3).unwrap();
        let psi = PureState::x_polarized(3).unwrap();
        let traj = evolve_unitary(&psi, &zero_field_schedule(1.0), &lat, &Default::default()).unwrap();
        assert_eq!(traj.final_state, psi);
        assert_eq!(traj.samples.first().unwrap().t, 0.0);
        assert_eq!(traj.final_sample().t, 1.0);
        assert_eq!(traj.samples.len(), 101);
    }

    #[test]
    fn rabi_oscillation() {
        // H = f sigma^x from |0>: P(|1>)(t) = sin^2(f t) with unit phase
        let f = 0.8;
        let lat = SpinLattice::new(1, [], "single").unwrap();
        let sched = constant_x_schedule(f, 3.0);
        let bx = sched.coefficients(0.0).unwrap().bx;
        let traj = evolve_unitary(&ground_state(1).unwrap(), &sched, &lat, &Default::default()).unwrap();
        for s in &traj.samples {
            let p_up = (s.mu + 1.0) / 2.0;
            let expect = (bx * sched.phase * s.t).sin().powi(2);
            assert!((p_up - expect).abs() < 1e-8, "t={} {p_up} vs {expect}", s.t);
        }
    }

    #[test]
    fn rabi_oscillation_ghz_units() {
        let f = 0.3;
        let lat = SpinLattice::new(1, [], "single").unwrap();
        let mut sched = constant_x_schedule(f, 2.0);
        sched.phase = 2.0 * std::f64::consts::PI;
        let bx = sched.coefficients(0.0).unwrap().bx;
        let opts = PropagationOptions {
            dt: 0.001,
            ..Default::default()
        };
        let traj = evolve_unitary(&ground_state(1).unwrap(), &sched, &lat, &opts).unwrap();
        let s = traj.final_sample();
        let expect = (2.0 * std::f64::consts::PI * bx * 2.0).sin().powi(2);
        assert!(((s.mu + 1.0) / 2.0 - expect).abs() < 1e-8);
    }

    #[test]
    fn step_must_divide_tau() {
        let lat = SpinLattice::ring(2).unwrap();
        let sched = zero_field_schedule(1.0);
        let opts = PropagationOptions {
            dt: 0.3,
            ..Default::default()
        };
        assert!(evolve_unitary(&ground_state(2).unwrap(), &sched, &lat, &opts).is_err());
    }

    #[test]
    fn lindblad_single_spin_decay() {
        let gamma = 0.2;
        let lat = SpinLattice::new(1, [], "single").unwrap();
        let rho = DensityState::from_pure(&PureState::basis(1, 1).unwrap());
        let traj = evolve_lindblad(&rho, &zero_field_schedule(2.0), &lat, gamma, &Default::default()).unwrap();
        for s in &traj.samples {
            assert!((s.mu - (-2.0 * gamma * s.t).exp()).abs() < 1e-6);
            assert!((s.norm_or_trace - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lindblad_mixed_state_is_stationary() {
        let lat = SpinLattice::new(1, [], "single").unwrap();
        let rho = DensityState::maximally_mixed(1).unwrap();
        let traj = evolve_lindblad(&rho, &zero_field_schedule(1.0), &lat, 0.5, &Default::default()).unwrap();
        for (a, b) in traj.final_state.data().iter().zip(rho.data()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn lindblad_caps() {
        let lat = SpinLattice::ring(7).unwrap();
        let sched = zero_field_schedule(1.0);
        let rho = DensityState::maximally_mixed(7).unwrap();
        assert!(matches!(
            evolve_lindblad(&rho, &sched, &lat, 0.0, &Default::default()),
            Err(Error::Capacity { .. })
        ));
        let lat = SpinLattice::ring(2).unwrap();
        let rho = DensityState::maximally_mixed(2).unwrap();
        assert!(evolve_lindblad(&rho, &sched, &lat, -1.0, &Default::default()).is_err());
    }
}
