use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{default_lattice, SpinLattice};
use crate::operators::{CrosstalkMode, MAX_SPINS};
use crate::propagate::{LindbladScheme, PropagationOptions, Sampling, DEFAULT_DT, MAX_LINDBLAD_SPINS};
use crate::schedule::{equalized_local_field, EnergyTable, Equalization, Mode, Preset, ProtocolSchedule};

/// Largest lattice accepted for pure-state runs.
pub const MAX_UNITARY_SPINS: usize = 14;

/// Lattice selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LatticeSpec {
    /// Most nearly square periodic torus, or a ring when `n` is prime.
    Auto {
        n: usize,
    },
    Ring {
        n: usize,
    },
    Torus {
        rows: usize,
        cols: usize,
    },
    EdgeList {
        path: PathBuf,
    },
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec::Auto { n: 4 }
    }
}

impl LatticeSpec {
    pub fn build(&self) -> Result<SpinLattice> {
        match self {
            LatticeSpec::Auto { n } => default_lattice(*n),
            LatticeSpec::Ring { n } => SpinLattice::ring(*n),
            LatticeSpec::Torus { rows, cols } => SpinLattice::torus(*rows, *cols),
            LatticeSpec::EdgeList { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                SpinLattice::from_edge_list(&text)
            }
        }
    }

    /// The same family at a different size, used by N-sweeps.
    pub fn resized(&self, n: usize) -> Result<LatticeSpec> {
        match self {
            LatticeSpec::Ring { .. } => Ok(LatticeSpec::Ring { n }),
            LatticeSpec::Auto { .. } | LatticeSpec::Torus { .. } => Ok(LatticeSpec::Auto { n }),
            LatticeSpec::EdgeList { path } => Err(Error::Config(format!(
                "edge-list lattice {} cannot be resized for an N sweep",
                path.display()
            ))),
        }
    }
}

/// How the local field is matched to the cooperative Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualizationMode {
    /// Constant field computed with the scalar `g`.
    #[default]
    Constant,
    /// Field tracks the instantaneous `g(t)`; norms agree at every time.
    TimeResolved,
    Off,
}

/// Which fluctuation enters scaling fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitSource {
    #[default]
    Exact,
    /// Shot-sampled deviation, as a finite-shot experiment would see it.
    HardwareEmulation,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub n: Vec<usize>,
    pub gamma: Vec<f64>,
    pub j_crosstalk: Vec<f64>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        self.n.is_empty() && self.gamma.is_empty() && self.j_crosstalk.is_empty()
    }
}

/// One experiment. Unset schedule parameters inherit from `preset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub mode: Mode,
    pub lattice: LatticeSpec,
    pub tau: Option<f64>,
    pub dt: f64,
    pub h: Option<f64>,
    pub j: Option<f64>,
    pub eta: f64,
    pub phase: Option<f64>,
    pub table: Option<PathBuf>,
    pub equalization: EqualizationMode,
    /// Slope used by constant equalization.
    pub g: f64,
    pub gamma: f64,
    pub j_crosstalk: f64,
    pub crosstalk: CrosstalkMode,
    pub sampling: Sampling,
    pub lindblad: LindbladScheme,
    pub nu: usize,
    pub seed: u64,
    /// Calibrate `tau` on the four-spin cooperative run. Defaults to true
    /// for the numerics preset when `tau` is unset.
    pub calibrate_tau: Option<bool>,
    pub fit_source: FitSource,
    /// Trajectory sampling stride for single runs.
    pub record_every: usize,
    pub sweep: SweepAxes,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: Preset::Numerics,
            mode: Mode::Cooperative,
            lattice: LatticeSpec::default(),
            tau: None,
            dt: DEFAULT_DT,
            h: None,
            j: None,
            eta: 1.0,
            phase: None,
            table: None,
            equalization: EqualizationMode::default(),
            g: 1.0,
            gamma: 0.0,
            j_crosstalk: 0.0,
            crosstalk: CrosstalkMode::default(),
            sampling: Sampling::default(),
            lindblad: LindbladScheme::default(),
            nu: 1000,
            seed: 0,
            calibrate_tau: None,
            fit_source: FitSource::default(),
            record_every: 10,
            sweep: SweepAxes::default(),
            output: None,
        }
    }
}

/// Everything needed to propagate one point.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub lattice: SpinLattice,
    pub schedule: ProtocolSchedule,
    /// Cooperative Hamiltonian the local one is equalized against.
    pub reference: Option<ProtocolSchedule>,
    pub options: PropagationOptions,
    /// Field reported for the run: the constant field, or the time-resolved
    /// field evaluated at `g = 1`.
    pub h_used: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || self.sweep.gamma.iter().any(|&g| !(g >= 0.0)) {
            return Err(Error::Config("gamma must be >= 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.nu < 2 {
            return Err(Error::Config(format!("nu must be at least 2, got {}", self.nu)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be positive".into()));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) {
                return Err(Error::Config(format!("tau must be positive, got {tau}")));
            }
        }
        Ok(())
    }

    /// `(tau, h, J, phase)` after preset inheritance.
    pub fn parameters(&self) -> (f64, f64, f64, f64) {
        let (tau, h, j, phase) = self.preset.parameters();
        (
            self.tau.unwrap_or(tau),
            self.h.unwrap_or(h),
            self.j.unwrap_or(j),
            self.phase.unwrap_or(phase),
        )
    }

    pub fn wants_calibration(&self) -> bool {
        self.calibrate_tau
            .unwrap_or(self.tau.is_none() && self.preset == Preset::Numerics)
    }

    pub fn energy_table(&self) -> Result<EnergyTable> {
        match &self.table {
            Some(path) => EnergyTable::load(path),
            None => Ok(EnergyTable::default()),
        }
    }

    /// Builds lattice, schedule and options, applying `tau` if given.
    pub fn resolve(&self, tau_override: Option<f64>) -> Result<ResolvedRun> {
        self.validate()?;
        let lattice = self.lattice.build()?;
        let n = lattice.n_spins();
        if n > MAX_UNITARY_SPINS.min(MAX_SPINS) {
            return Err(Error::Capacity {
                what: "spins",
                value: n,
                limit: MAX_UNITARY_SPINS,
            });
        }
        if self.gamma > 0.0 && n > MAX_LINDBLAD_SPINS {
            return Err(Error::Capacity {
                what: "spins for density-matrix evolution",
                value: n,
                limit: MAX_LINDBLAD_SPINS,
            });
        }
        let (tau, h_c, j_c, phase) = self.parameters();
        let cooperative = ProtocolSchedule {
            tau: tau_override.unwrap_or(tau),
            h: h_c,
            j: j_c,
            j_crosstalk: 0.0,
            eta: self.eta,
            mode: Mode::Cooperative,
            phase,
            table: self.energy_table()?,
            equalization: None,
        };
        let ratio = lattice.connectivity_ratio();
        let (mut schedule, reference, h_used) = match (self.mode, self.equalization) {
            (Mode::Cooperative, _) => (cooperative.clone(), None, h_c),
            (Mode::Local, EqualizationMode::Off) => {
                let s = ProtocolSchedule {
                    j: 0.0,
                    mode: Mode::Local,
                    ..cooperative.clone()
                };
                (s, None, h_c)
            }
            (Mode::Local, EqualizationMode::Constant) => {
                let h_l = equalized_local_field(h_c, j_c, ratio, self.g)?;
                let s = ProtocolSchedule {
                    h: h_l,
                    j: 0.0,
                    mode: Mode::Local,
                    ..cooperative.clone()
                };
                (s, Some(cooperative), h_l)
            }
            (Mode::Local, EqualizationMode::TimeResolved) => {
                let h_l = equalized_local_field(h_c, j_c, ratio, 1.0)?;
                let s = ProtocolSchedule {
                    h: h_l,
                    j: 0.0,
                    mode: Mode::Local,
                    equalization: Some(Equalization { h_c, j_c, ratio }),
                    ..cooperative.clone()
                };
                (s, Some(cooperative), h_l)
            }
        };
        schedule.j_crosstalk = self.j_crosstalk;
        schedule.validate()?;
        let options = PropagationOptions {
            dt: self.dt,
            sampling: self.sampling,
            crosstalk: self.crosstalk,
            record_every: self.record_every,
            lindblad: self.lindblad,
        };
        Ok(ResolvedRun {
            lattice,
            schedule,
            reference,
            options,
            h_used,
        })
    }
}
