//! Magnetization, its quantum fluctuations, shot sampling and stored power.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagate::{DensityState, PureState};

/// Name of the generator behind [`sample_shots`], recorded with every run.
pub const SHOT_RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9)";

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Anything with a computational-basis probability distribution.
pub trait SpinState {
    fn n_spins(&self) -> usize;
    fn basis_probabilities(&self) -> Vec<f64>;
}

impl SpinState for PureState {
    fn n_spins(&self) -> usize {
        PureState::n_spins(self)
    }

    fn basis_probabilities(&self) -> Vec<f64> {
        self.probabilities()
    }
}

impl SpinState for DensityState {
    fn n_spins(&self) -> usize {
        DensityState::n_spins(self)
    }

    fn basis_probabilities(&self) -> Vec<f64> {
        self.diagonal()
    }
}

/// `(mu, sigma)` from basis-state probabilities.
pub(crate) fn moments_from_probabilities(n: usize, probs: &[f64]) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        let sz = 2.0 * i.count_ones() as f64 - n as f64;
        m1 += p * sz;
        m2 += p * sz * sz;
    }
    let nf = n as f64;
    let var = ((m2 - m1 * m1) / (nf * nf)).max(0.0);
    (m1 / nf, var.sqrt())
}

/// `mu = <S_z> / N`.
pub fn magnetization<S: SpinState>(state: &S) -> f64 {
    moments_from_probabilities(state.n_spins(), &state.basis_probabilities()).0
}

/// `sigma = sqrt(<S_z^2> - <S_z>^2) / N`, clamped at zero.
pub fn fluctuation<S: SpinState>(state: &S) -> f64 {
    moments_from_probabilities(state.n_spins(), &state.basis_probabilities()).1
}

/// Probability of each `S_z` eigenvalue `-N, -N+2, ..., N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationDistribution {
    n_spins: usize,
    probabilities: Vec<f64>,
}

impl MagnetizationDistribution {
    pub fn new(n_spins: usize, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != n_spins + 1 {
            return Err(Error::Domain(format!(
                "distribution over {n_spins} spins needs {} probabilities",
                n_spins + 1
            )));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Domain("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        Ok(MagnetizationDistribution { n_spins, probabilities })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// `S_z` eigenvalues in increasing order.
    pub fn support(&self) -> Vec<i64> {
        let n = self.n_spins as i64;
        (0..=n).map(|k| 2 * k - n).collect()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `P(S_z = m)`; zero outside the support.
    pub fn prob(&self, m: i64) -> f64 {
        let n = self.n_spins as i64;
        if (m + n) % 2 != 0 || m < -n || m > n {
            return 0.0;
        }
        self.probabilities[((m + n) / 2) as usize]
    }

    /// Mean per-spin magnetization.
    pub fn mean(&self) -> f64 {
        let n = self.n_spins as f64;
        self.support()
            .iter()
            .zip(&self.probabilities)
            .map(|(&m, p)| p * m as f64 / n)
            .sum()
    }

    /// Variance of the per-spin magnetization.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let n = self.n_spins as f64;
        self.support()
            .iter()
            .zip(&self.probabilities)
            .map(|(&m, p)| p * (m as f64 / n - mean).powi(2))
            .sum()
    }
}

pub fn distribution<S: SpinState>(state: &S) -> MagnetizationDistribution {
    let n = state.n_spins();
    let mut probabilities = vec![0.0; n + 1];
    for (i, p) in state.basis_probabilities().into_iter().enumerate() {
        probabilities[i.count_ones() as usize] += p;
    }
    // absorb round-off so the sum invariant holds exactly enough
    let total: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|p| *p = p.max(0.0) / total);
    MagnetizationDistribution {
        n_spins: n,
        probabilities,
    }
}

/// Per-shot magnetizations drawn from a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub nu: usize,
    pub seed: u64,
    pub generator: String,
    pub samples: Vec<f64>,
}

impl ShotRecord {
    /// One `mu_i` per row after a `#`-prefixed metadata header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<shots>", e);
        writeln!(out, "# seed={} nu={} generator={}", self.seed, self.nu, self.generator).map_err(io)?;
        writeln!(out, "mu").map_err(io)?;
        for s in &self.samples {
            writeln!(out, "{s}").map_err(io)?;
        }
        Ok(())
    }
}

/// Draws `nu` independent shots by inverse-CDF sampling.
pub fn sample_shots(dist: &MagnetizationDistribution, nu: usize, seed: u64) -> Result<ShotRecord> {
    if nu == 0 {
        return Err(Error::Domain("need at least one shot".into()));
    }
    let n = dist.n_spins as f64;
    let support = dist.support();
    let mut cdf = Vec::with_capacity(support.len());
    let mut acc = 0.0;
    for p in &dist.probabilities {
        acc += p;
        cdf.push(acc);
    }
    let last_nonzero = dist
        .probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(support.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..nu)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let k = cdf.partition_point(|&c| c <= u).min(last_nonzero);
            support[k] as f64 / n
        })
        .collect();
    Ok(ShotRecord {
        nu,
        seed,
        generator: SHOT_RNG_NAME.to_string(),
        samples,
    })
}

/// Bessel-corrected sample variance of the shots.
pub fn sample_variance(rec: &ShotRecord) -> Result<f64> {
    let nu = rec.samples.len();
    if nu < 2 {
        return Err(Error::UndefinedDeviation(nu));
    }
    let mean = rec.samples.iter().sum::<f64>() / nu as f64;
    Ok(rec.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nu - 1) as f64)
}

/// `(mean, Bessel-corrected standard deviation)` of the shots.
pub fn sample_stats(rec: &ShotRecord) -> Result<(f64, f64)> {
    let var = sample_variance(rec)?;
    let mean = rec.samples.iter().sum::<f64>() / rec.samples.len() as f64;
    Ok((mean, var.sqrt()))
}

/// Energy injected and average charging power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoredPower {
    pub initial_energy_j: f64,
    pub final_energy_j: f64,
    /// `E_tau - E_0`.
    pub energy_j: f64,
    pub power_w: f64,
}

/// `E_0 = -(B(1)/2) N`, `E_tau = (1 - f) E_0` with `f = (mu + 1)/2`, and
/// `P = (E_tau - E_0) / tau`. `b1_ghz` is converted to joules with the
/// Planck constant.
///
/// Full inversion maps to zero final energy rather than `+|E_0|`; the
/// formula is kept as is because it is the accounting behind the published
/// wattages.
pub fn stored_power(mu_final: f64, n: usize, b1_ghz: f64, tau_seconds: f64) -> Result<StoredPower> {
    if !(-1.0..=1.0).contains(&mu_final) {
        return Err(Error::Domain(format!("magnetization {mu_final} outside [-1, 1]")));
    }
    if !(tau_seconds > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau_seconds}")));
    }
    let b1_j = b1_ghz * 1e9 * PLANCK;
    let e0 = -(b1_j / 2.0) * n as f64;
    let f = (mu_final + 1.0) / 2.0;
    let e_tau = (1.0 - f) * e0;
    Ok(StoredPower {
        initial_energy_j: e0,
        final_energy_j: e_tau,
        energy_j: e_tau - e0,
        power_w: (e_tau - e0) / tau_seconds,
    })
}
