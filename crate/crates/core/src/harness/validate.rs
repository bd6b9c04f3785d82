//! Fast self-checks of the invariants the simulator relies on.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::lattice::{default_lattice, SpinLattice};
use crate::models::{bhatia_davis_bound, cooperative_model, local_model, CooperativeModelParams, LocalModelParams};
use crate::observables::{distribution, magnetization, stored_power};
use crate::operators::{build_h, hs_norm_closed_form, hs_norm_numeric, CrosstalkMode};
use crate::propagate::{evolve_lindblad, evolve_unitary, ground_state, DensityState, PropagationOptions, PureState};
use crate::schedule::{equalized_local_field, EnergyTable, Equalization, Mode, Preset, ProtocolSchedule};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn lattice_counts() -> Result<Check> {
    let got = [
        SpinLattice::ring(5)?.n_couplings(),
        SpinLattice::torus(3, 3)?.n_couplings(),
        SpinLattice::torus(2, 2)?.n_couplings(),
        default_lattice(12)?.n_couplings(),
    ];
    Ok(check(
        "lattice coupling counts",
        got == [5, 18, 4, 24],
        format!("{got:?}"),
    ))
}

fn norm_closed_form() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let lat = if n == 1 {
            SpinLattice::new(1, [], "single")?
        } else {
            default_lattice(n)?
        };
        for _ in 0..4 {
            let mut sched = Preset::Numerics.schedule(Mode::Cooperative);
            sched.h = rng.random_range(-2.0..2.0);
            sched.j = rng.random_range(-2.0..2.0);
            let t = rng.random_range(0.0..sched.tau);
            let h = build_h(t, &sched, &lat, CrosstalkMode::EdgeSet)?;
            let c = sched.coefficients(t)?;
            let closed = hs_norm_closed_form(c.bx, c.bz, c.jc, n, lat.n_couplings());
            let numeric = hs_norm_numeric(&h)?;
            if closed > 0.0 {
                worst = worst.max((closed - numeric).abs() / closed);
            }
        }
    }
    Ok(check(
        "norm closed form vs numeric",
        worst <= 1e-10,
        format!("max rel {worst:.2e}"),
    ))
}

fn equalization() -> Result<Check> {
    let h_l = equalized_local_field(0.5, 0.2, 7.0, 1.0)?;
    let coop = Preset::Numerics.schedule(Mode::Cooperative);
    let (n, n_c) = (9usize, 18usize);
    let mut local = Preset::Numerics.schedule(Mode::Local);
    local.equalization = Some(Equalization {
        h_c: coop.h,
        j_c: coop.j,
        ratio: n_c as f64 / n as f64,
    });
    let mut worst: f64 = 0.0;
    for k in 0..=500 {
        let t = coop.tau * k as f64 / 500.0;
        let l = local.coefficients(t)?;
        let c = coop.coefficients(t)?;
        let a = hs_norm_closed_form(l.bx, l.bz, l.jc, n, n_c);
        let b = hs_norm_closed_form(c.bx, c.bz, c.jc, n, n_c);
        worst = worst.max((a - b).abs() / b.max(f64::MIN_POSITIVE));
    }
    Ok(check(
        "field equalization",
        (h_l - 0.73).abs() <= 0.005 && worst <= 1e-12,
        format!("h_L = {h_l:.4}, pointwise max rel {worst:.2e}"),
    ))
}

fn product_density(single: [[f64; 2]; 2], n: usize) -> Result<DensityState> {
    let mut data = vec![Complex64::new(1.0, 0.0)];
    let mut d = 1;
    for _ in 0..n {
        let nd = 2 * d;
        let mut next = vec![Complex64::new(0.0, 0.0); nd * nd];
        // the new spin becomes the highest bit
        for (bi, row) in single.iter().enumerate() {
            for (bj, &x) in row.iter().enumerate() {
                for i in 0..d {
                    for j in 0..d {
                        next[(bi * d + i) * nd + (bj * d + j)] = data[i * d + j] * x;
                    }
                }
            }
        }
        data = next;
        d = nd;
    }
    DensityState::new(n, data)
}

fn analytic_models() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        for &(p, theta) in &[(0.0, 0.0), (0.3, 0.2), (0.7, 1.1), (1.0, 0.5)] {
            let (s, c) = f64::sin_cos(theta);
            let coh = (1.0 - p) * 0.4 * s * c;
            let single = [[p / 2.0 + (1.0 - p) * s * s, coh], [coh, p / 2.0 + (1.0 - p) * c * c]];
            let dist = distribution(&product_density(single, n)?);
            let (mu, var) = local_model(&LocalModelParams { p, theta, delta: 0.6 }, n)?;
            worst = worst.max((dist.mean() - mu).abs()).max((dist.variance() - var).abs());

            let ghz = DensityState::from_pure(&PureState::ghz(n, theta)?);
            let mixed = DensityState::maximally_mixed(n)?;
            let data = ghz
                .data()
                .iter()
                .zip(mixed.data())
                .map(|(a, b)| a * (1.0 - p) + b * p)
                .collect();
            let dist = distribution(&DensityState::new(n, data)?);
            let (mu, var) = cooperative_model(&CooperativeModelParams { p, theta }, n)?;
            worst = worst.max((dist.mean() - mu).abs()).max((dist.variance() - var).abs());
        }
    }
    Ok(check(
        "analytic models vs density matrices",
        worst <= 1e-10,
        format!("max abs {worst:.2e}"),
    ))
}

fn lindblad_limits() -> Result<Check> {
    let lat = SpinLattice::ring(3)?;
    let mut sched = Preset::Numerics.schedule(Mode::Cooperative);
    sched.tau = 3.0;
    let opts = PropagationOptions {
        record_every: usize::MAX,
        ..Default::default()
    };
    let psi = evolve_unitary(&ground_state(3)?, &sched, &lat, &opts)?.final_state;
    let rho = evolve_lindblad(&DensityState::from_pure(&ground_state(3)?), &sched, &lat, 0.0, &opts)?.final_state;
    let fidelity = rho.fidelity_with(&psi);

    let gamma = 0.05;
    let mut quiet = Preset::Numerics.schedule(Mode::Local);
    quiet.tau = 4.0;
    quiet.table = EnergyTable::new(vec![(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)])?;
    let single = SpinLattice::new(1, [], "single")?;
    let up = DensityState::from_pure(&PureState::basis(1, 1)?);
    let decay = evolve_lindblad(&up, &quiet, &single, gamma, &PropagationOptions::default())?;
    let worst = decay
        .samples
        .iter()
        .map(|s| (s.mu - (-2.0 * gamma * s.t).exp()).abs())
        .fold(0.0, f64::max);
    let mu_end = magnetization(&decay.final_state);
    Ok(check(
        "open dynamics limits",
        fidelity >= 1.0 - 1e-8 && worst <= 1e-6,
        format!("unitary-limit fidelity {fidelity:.12}, decay error {worst:.2e}, final {mu_end:.6}"),
    ))
}

fn power_and_bound() -> Result<Check> {
    let pc = stored_power(0.999, 5612, 7.57, 60e-6)?.power_w;
    let pl = stored_power(0.833, 5612, 7.57, 60e-6)?.power_w;
    let rel = ((pc - 2.344e-16) / 2.344e-16)
        .abs()
        .max(((pl - 2.151e-16) / 2.151e-16).abs());
    let bd = bhatia_davis_bound(0.99)?;
    Ok(check(
        "power arithmetic and variance bound",
        rel <= 1e-3 && (bd - 0.0199).abs() < 1e-12,
        format!("P_C = {pc:.4e} W, P_L = {pl:.4e} W"),
    ))
}

fn local_schedule_shape() -> Result<Check> {
    let lat = default_lattice(4)?;
    let coop = Preset::Numerics.schedule(Mode::Cooperative);
    let local = ProtocolSchedule {
        j: 0.0,
        mode: Mode::Local,
        equalization: Some(Equalization {
            h_c: coop.h,
            j_c: coop.j,
            ratio: lat.connectivity_ratio(),
        }),
        ..coop.clone()
    };
    let t = coop.tau / 2.0;
    let h = build_h(t, &local, &lat, CrosstalkMode::EdgeSet)?;
    let bz = local.coefficients(t)?.bz;
    // all-down and all-up diagonals carry only the field when couplings are off
    let down = h.get(0, 0).re;
    let up = h.get(h.dim() - 1, h.dim() - 1).re;
    let n = lat.n_spins() as f64;
    Ok(check(
        "local Hamiltonian has no couplings",
        h.is_hermitian() && local.validate().is_ok() && (down + n * bz).abs() < 1e-12 && (up - n * bz).abs() < 1e-12,
        format!("diagonal ends {down:.6}, {up:.6}"),
    ))
}

type CheckFn = fn() -> Result<Check>;

/// Runs every check; errors inside a check are reported as failures.
pub fn validate_all() -> Vec<Check> {
    let suite: [(&'static str, CheckFn); 7] = [
        ("lattice coupling counts", lattice_counts),
        ("norm closed form vs numeric", norm_closed_form),
        ("field equalization", equalization),
        ("analytic models vs density matrices", analytic_models),
        ("open dynamics limits", lindblad_limits),
        ("power arithmetic and variance bound", power_and_bound),
        ("local Hamiltonian has no couplings", local_schedule_shape),
    ];
    suite
        .iter()
        .map(|(name, f)| f().unwrap_or_else(|e| check(name, false, e.to_string())))
        .collect()
}
