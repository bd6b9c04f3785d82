use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FitSource, LatticeSpec, ResolvedRun};
use crate::error::{Error, Result};
use crate::models::{bhatia_davis_bound, fit_scaling, ScalingFit};
use crate::observables::{distribution, sample_shots, sample_stats, stored_power, ShotRecord};
use crate::operators::hs_norm_closed_form;
use crate::par::*;
use crate::propagate::{
    evolve_lindblad, evolve_unitary, ground_state, DensityState, PropagationOptions, TrajectorySample,
};
use crate::schedule::{Mode, ProtocolSchedule};

/// Starting cycle time of the calibration ladder.
pub const CALIBRATION_TAU_START: f64 = 10.0;
/// Longest cycle time the calibration will try.
pub const CALIBRATION_TAU_CAP: f64 = 2560.0;
/// Change in `mu` and `sigma` between doublings regarded as converged.
pub const CALIBRATION_TOLERANCE: f64 = 0.02;
/// Relative tolerance of the per-time norm audit.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// Outcome of one experiment point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub preset: String,
    pub mode: String,
    pub lattice: String,
    pub n: usize,
    pub n_c: usize,
    pub tau: f64,
    pub dt: f64,
    pub gamma: f64,
    pub j_crosstalk: f64,
    pub h_used: f64,
    pub j_used: f64,
    pub mu_exact: f64,
    pub sigma_exact: f64,
    pub mu_bar: f64,
    pub sigma_bar: f64,
    pub nu: usize,
    pub seed: u64,
    pub energy_j: f64,
    pub power_w: f64,
    pub calibrated_tau: Option<f64>,
    /// Largest relative norm mismatch against the cooperative reference.
    pub hs_audit: Option<f64>,
    pub bhatia_davis_ok: bool,
    pub wall_time_s: f64,
    pub version: String,
    pub config: ExperimentConfig,
}

/// Trajectory and shots of a single run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub trajectory: Vec<TrajectorySample>,
    pub shots: ShotRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStep {
    pub tau: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tau: f64,
    pub converged: bool,
    pub history: Vec<CalibrationStep>,
}

/// Doubles `tau` on the four-spin cooperative run until the final `mu`
/// and `sigma` both move by at most [`CALIBRATION_TOLERANCE`], returning the
/// longer of the last two times.
pub fn calibrate_tau(cfg: &ExperimentConfig) -> Result<Calibration> {
    let probe = ExperimentConfig {
        mode: Mode::Cooperative,
        lattice: LatticeSpec::Auto { n: 4 },
        gamma: 0.0,
        j_crosstalk: 0.0,
        ..cfg.clone()
    };
    let mut history: Vec<CalibrationStep> = Vec::new();
    let mut tau = CALIBRATION_TAU_START;
    while tau <= CALIBRATION_TAU_CAP {
        let run = probe.resolve(Some(tau))?;
        let opts = PropagationOptions {
            record_every: usize::MAX,
            ..run.options
        };
        let traj = evolve_unitary(&ground_state(4)?, &run.schedule, &run.lattice, &opts)?;
        let last = traj.final_sample();
        history.push(CalibrationStep {
            tau,
            mu: last.mu,
            sigma: last.sigma,
        });
        if let [.., a, b] = history.as_slice() {
            if (a.mu - b.mu).abs() <= CALIBRATION_TOLERANCE && (a.sigma - b.sigma).abs() <= CALIBRATION_TOLERANCE {
                return Ok(Calibration {
                    tau,
                    converged: true,
                    history,
                });
            }
        }
        tau *= 2.0;
    }
    Ok(Calibration {
        tau: tau / 2.0,
        converged: false,
        history,
    })
}

/// Largest relative gap between the normalized Hilbert-Schmidt norms of the
/// local and cooperative Hamiltonians, over every propagation sample time
/// and both endpoints. Cross-talk is excluded on both sides.
pub fn equalization_audit(
    local: &ProtocolSchedule,
    reference: &ProtocolSchedule,
    n: usize,
    n_c: usize,
    opts: &PropagationOptions,
) -> Result<f64> {
    let steps = (local.tau / opts.dt).round() as usize;
    let mut worst: f64 = 0.0;
    let times = (0..steps)
        .map(|k| ((k as f64 + 0.5) * opts.dt).min(local.tau))
        .chain([0.0, local.tau]);
    for t in times {
        let l = local.coefficients(t)?;
        let c = reference.coefficients(t)?;
        let nl = hs_norm_closed_form(l.bx, l.bz, l.jc, n, n_c);
        let nc = hs_norm_closed_form(c.bx, c.bz, c.jc, n, n_c);
        let scale = nc.abs().max(nl.abs());
        if scale > 0.0 {
            worst = worst.max((nl - nc).abs() / scale);
        }
    }
    Ok(worst)
}

fn propagate(run: &ResolvedRun, gamma: f64, record_every: usize) -> Result<(Vec<TrajectorySample>, DensityOrPure)> {
    let n = run.lattice.n_spins();
    let psi0 = ground_state(n)?;
    let opts = PropagationOptions {
        record_every,
        ..run.options
    };
    if gamma > 0.0 {
        let traj = evolve_lindblad(
            &DensityState::from_pure(&psi0),
            &run.schedule,
            &run.lattice,
            gamma,
            &opts,
        )?;
        Ok((traj.samples, DensityOrPure::Density(traj.final_state)))
    } else {
        let traj = evolve_unitary(&psi0, &run.schedule, &run.lattice, &opts)?;
        Ok((traj.samples, DensityOrPure::Pure(traj.final_state)))
    }
}

enum DensityOrPure {
    Pure(crate::propagate::PureState),
    Density(DensityState),
}

fn execute(cfg: &ExperimentConfig, tau: Option<f64>, record_every: usize) -> Result<(RunResult, RunArtifacts)> {
    let started = Instant::now();
    let run = cfg.resolve(tau)?;
    let n = run.lattice.n_spins();
    let n_c = run.lattice.n_couplings();
    let hs_audit = match &run.reference {
        Some(reference) => {
            let gap = equalization_audit(&run.schedule, reference, n, n_c, &run.options)?;
            if run.schedule.equalization.is_some() && gap > AUDIT_TOLERANCE {
                return Err(Error::Precondition(format!(
                    "equalized norms differ by {gap:e} (limit {AUDIT_TOLERANCE:e})"
                )));
            }
            Some(gap)
        }
        None => None,
    };
    let (trajectory, state) = propagate(&run, cfg.gamma, record_every)?;
    let dist = match &state {
        DensityOrPure::Pure(psi) => distribution(psi),
        DensityOrPure::Density(rho) => distribution(rho),
    };
    let (mu, var) = (dist.mean(), dist.variance());
    let mu = mu.clamp(-1.0, 1.0);
    let sigma = var.max(0.0).sqrt();
    let shots = sample_shots(&dist, cfg.nu, cfg.seed)?;
    let (mu_bar, sigma_bar) = sample_stats(&shots)?;
    let sched = &run.schedule;
    let power = stored_power(mu, n, sched.table.b_at_one(), sched.tau * sched.time_unit_seconds())?;
    let bhatia_davis_ok = sigma * sigma <= bhatia_davis_bound(mu)? + 1e-10;
    let result = RunResult {
        preset: cfg.preset.as_str().to_string(),
        mode: cfg.mode.as_str().to_string(),
        lattice: run.lattice.label().to_string(),
        n,
        n_c,
        tau: sched.tau,
        dt: run.options.dt,
        gamma: cfg.gamma,
        j_crosstalk: cfg.j_crosstalk,
        h_used: run.h_used,
        j_used: sched.j,
        mu_exact: mu,
        sigma_exact: sigma,
        mu_bar,
        sigma_bar,
        nu: cfg.nu,
        seed: cfg.seed,
        energy_j: power.energy_j,
        power_w: power.power_w,
        calibrated_tau: tau,
        hs_audit,
        bhatia_davis_ok,
        wall_time_s: started.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
    };
    Ok((result, RunArtifacts { trajectory, shots }))
}

/// Runs one configuration (calibrating `tau` first if requested) and
/// returns its result with the recorded trajectory and shots.
pub fn run_single_detailed(cfg: &ExperimentConfig) -> Result<(RunResult, RunArtifacts)> {
    let tau = if cfg.wants_calibration() {
        Some(calibrate_tau(cfg)?.tau)
    } else {
        None
    };
    execute(cfg, tau, cfg.record_every)
}

pub fn run_single(cfg: &ExperimentConfig) -> Result<RunResult> {
    run_single_detailed(cfg).map(|(r, _)| r)
}

/// Sweep coordinates of one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: Option<usize>,
    pub gamma: f64,
    pub j_crosstalk: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub point: SweepPoint,
    pub class: String,
    pub message: String,
}

/// Scaling fit of one `(gamma, j_crosstalk)` slice of an N sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub mode: String,
    pub gamma: f64,
    pub j_crosstalk: f64,
    #[serde(flatten)]
    pub fit: ScalingFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    /// Successful points sorted by `(N, gamma, j_crosstalk)`.
    pub results: Vec<RunResult>,
    pub failures: Vec<SweepFailure>,
    pub fits: Vec<GroupFit>,
    pub calibration: Option<Calibration>,
}

fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let ns: Vec<Option<usize>> = if cfg.sweep.n.is_empty() {
        vec![None]
    } else {
        let mut v = cfg.sweep.n.clone();
        v.sort_unstable();
        v.dedup();
        v.into_iter().map(Some).collect()
    };
    let sorted = |axis: &[f64], fallback: f64| {
        let mut v = if axis.is_empty() { vec![fallback] } else { axis.to_vec() };
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let gammas = sorted(&cfg.sweep.gamma, cfg.gamma);
    let jcts = sorted(&cfg.sweep.j_crosstalk, cfg.j_crosstalk);
    let mut points = Vec::new();
    for &n in &ns {
        for &gamma in &gammas {
            for &j_crosstalk in &jcts {
                let seed = cfg.seed.wrapping_add(points.len() as u64);
                points.push(SweepPoint {
                    n,
                    gamma,
                    j_crosstalk,
                    seed,
                });
            }
        }
    }
    points
}

fn point_config(cfg: &ExperimentConfig, p: &SweepPoint) -> Result<ExperimentConfig> {
    let lattice = match p.n {
        Some(n) => cfg.lattice.resized(n)?,
        None => cfg.lattice.clone(),
    };
    Ok(ExperimentConfig {
        lattice,
        gamma: p.gamma,
        j_crosstalk: p.j_crosstalk,
        seed: p.seed,
        sweep: Default::default(),
        ..cfg.clone()
    })
}

/// Fits every `(gamma, j_crosstalk)` slice that has at least three sizes.
pub fn fit_groups(results: &[RunResult], source: FitSource) -> Vec<GroupFit> {
    let mut keys: Vec<(String, f64, f64)> = Vec::new();
    for r in results {
        let key = (r.mode.clone(), r.gamma, r.j_crosstalk);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .filter_map(|(mode, gamma, j_crosstalk)| {
            let points: Vec<(f64, f64)> = results
                .iter()
                .filter(|r| r.mode == mode && r.gamma == gamma && r.j_crosstalk == j_crosstalk)
                .map(|r| {
                    let sigma = match source {
                        FitSource::Exact => r.sigma_exact,
                        FitSource::HardwareEmulation => r.sigma_bar,
                    };
                    (r.n as f64, sigma)
                })
                .collect();
            let fit = fit_scaling(&points).ok()?;
            Some(GroupFit {
                mode,
                gamma,
                j_crosstalk,
                fit,
            })
        })
        .collect()
}

fn build_pool(workers: Option<usize>) -> Result<Option<rayon_pool::Pool>> {
    rayon_pool::build(workers)
}

#[cfg(feature = "parallel")]
mod rayon_pool {
    use crate::error::{Error, Result};
    pub type Pool = rayon::ThreadPool;

    pub fn build(workers: Option<usize>) -> Result<Option<Pool>> {
        match workers {
            None => Ok(None),
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map(Some)
                .map_err(|e| Error::Config(format!("worker pool: {e}"))),
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod rayon_pool {
    use crate::error::Result;
    pub struct Pool;

    impl Pool {
        pub fn install<R>(&self, f: impl FnOnce() -> R) -> R {
            f()
        }
    }

    pub fn build(_workers: Option<usize>) -> Result<Option<Pool>> {
        Ok(None)
    }
}

/// Runs every sweep point over a bounded worker pool. Failing points are
/// collected rather than aborting the sweep.
pub fn run_sweep(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SweepOutcome> {
    cfg.validate()?;
    if cfg.sweep.is_empty() {
        return Err(Error::Precondition("sweep needs at least one nonempty axis".into()));
    }
    let calibration = if cfg.wants_calibration() {
        Some(calibrate_tau(cfg)?)
    } else {
        None
    };
    let tau = calibration.as_ref().map(|c| c.tau);
    let points = sweep_points(cfg);
    let work = || -> Vec<(SweepPoint, Result<RunResult>)> {
        points
            .par_iter()
            .map(|p| {
                let outcome = catch_unwind(AssertUnwindSafe(|| {
                    let pc = point_config(cfg, p)?;
                    execute(&pc, tau, usize::MAX).map(|(r, _)| r)
                }))
                .unwrap_or_else(|_| Err(Error::IntegratorFailure("sweep point panicked".into())));
                (*p, outcome)
            })
            .collect()
    };
    let outcomes = match build_pool(workers)? {
        Some(pool) => pool.install(work),
        None => work(),
    };
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (point, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => failures.push(SweepFailure {
                point,
                class: e.class().to_string(),
                message: e.to_string(),
            }),
        }
    }
    let fits = if cfg.sweep.n.is_empty() {
        Vec::new()
    } else {
        fit_groups(&results, cfg.fit_source)
    };
    Ok(SweepOutcome {
        results,
        failures,
        fits,
        calibration,
    })
}
