//! Annealing schedules and their mapping onto Hamiltonian coefficients.
//!
//! One charging cycle of length `tau` runs three equal segments: the
//! annealing parameter `s` ramps from 1 down to 0.35, holds while the
//! longitudinal-field envelope `g` ramps up to 1, then both return to their
//! initial values so the protocol is cyclic.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value of `s` during the middle segment.
pub const S_PLATEAU: f64 = 0.35;
/// Slope of `s` in the first and last segments, in units of `1 / tau`.
pub const S_SLOPE: f64 = 1.95;

/// Default peak transverse energy of the surrogate table, GHz.
pub const DEFAULT_A_MAX: f64 = 11.0;
/// Default `B(s = 1)` of the surrogate table, GHz.
pub const DEFAULT_B_MAX: f64 = 7.57;

fn check_time(t: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    // tolerate accumulated rounding on the grid endpoints
    let slack = 1e-12 * tau;
    if !(t >= -slack && t <= tau + slack) {
        return Err(Error::Domain(format!("t = {t} outside [0, {tau}]")));
    }
    Ok(t.clamp(0.0, tau))
}

/// Annealing parameter `s(t)`.
pub fn s_of_t(t: f64, tau: f64) -> Result<f64> {
    let t = check_time(t, tau)?;
    let x = t / tau;
    Ok(if x <= 1.0 / 3.0 {
        1.0 - S_SLOPE * x
    } else if x <= 2.0 / 3.0 {
        S_PLATEAU
    } else {
        -0.95 + S_SLOPE * x
    })
}

/// Longitudinal-field envelope `g(t)`, peaking at 1 when `t = 2 tau / 3`.
pub fn g_of_t(t: f64, tau: f64) -> Result<f64> {
    let t = check_time(t, tau)?;
    let x = t / tau;
    Ok(if x <= 1.0 / 3.0 {
        0.0
    } else if x <= 2.0 / 3.0 {
        -1.0 + 3.0 * x
    } else {
        3.0 - 3.0 * x
    })
}

/// Tabulated annealer energy functions `A(s)` and `B(s)` in GHz, linearly
/// interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    samples: Vec<(f64, f64, f64)>,
}

impl EnergyTable {
    pub fn new(samples: Vec<(f64, f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Config("energy table needs at least two rows".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Config(
                "energy table s values must be strictly increasing".into(),
            ));
        }
        let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
        if first != 0.0 || last != 1.0 {
            return Err(Error::Config(format!(
                "energy table must cover s in [0, 1], covers [{first}, {last}]"
            )));
        }
        if let Some(row) = samples
            .iter()
            .find(|(_, a, b)| !(*a >= 0.0 && *b >= 0.0) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::Config(format!("negative or non-finite energy in row {row:?}")));
        }
        Ok(EnergyTable { samples })
    }

    /// Piecewise-linear stand-in for the vendor tables:
    /// `A(s) = a_max * max(0, 1 - 2s)`, `B(s) = b_max * s`.
    /// The transverse field vanishes for `s >= 0.5`.
    pub fn surrogate(a_max: f64, b_max: f64) -> Result<Self> {
        Self::new(vec![(0.0, a_max, 0.0), (0.5, 0.0, 0.5 * b_max), (1.0, 0.0, b_max)])
    }

    /// Parses `s,A,B` CSV with a header row.
    pub fn from_csv(source: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source.as_bytes());
        let header = reader.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["s", "A", "B"] {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "expected header `s,A,B`, got `{}`",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut samples = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record?;
            if record.len() != 3 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 3 fields, got {}", record.len()),
                });
            }
            let field = |k: usize| {
                record[k].parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad number `{}`", &record[k]),
                })
            };
            samples.push((field(0)?, field(1)?, field(2)?));
        }
        Self::new(samples)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    pub fn samples(&self) -> &[(f64, f64, f64)] {
        &self.samples
    }

    /// `(A(s), B(s))`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Interpolation(s));
        }
        let i = self.samples.partition_point(|row| row.0 <= s);
        if i == 0 {
            return Err(Error::Interpolation(s));
        }
        if i == self.samples.len() {
            let (_, a, b) = self.samples[i - 1];
            return Ok((a, b));
        }
        let (s0, a0, b0) = self.samples[i - 1];
        let (s1, a1, b1) = self.samples[i];
        let w = (s - s0) / (s1 - s0);
        Ok((a0 + w * (a1 - a0), b0 + w * (b1 - b0)))
    }

    pub fn b_at_one(&self) -> f64 {
        self.samples[self.samples.len() - 1].2
    }
}

impl Default for EnergyTable {
    fn default() -> Self {
        Self::surrogate(DEFAULT_A_MAX, DEFAULT_B_MAX).expect("default surrogate table is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Local,
    Cooperative,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Local => "local",
            Mode::Cooperative => "cooperative",
        }
    }
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Hardware parameters: `h_C = 0.5`, `J = 0.2`, `tau = 60 us` expressed
    /// in ns, GHz phase convention (`2 pi`).
    Dwave,
    /// Dimensionless exact-simulation parameters: `h_C = -0.5`, `J = -0.2`,
    /// unit phase convention, `tau` calibrated at run time.
    Numerics,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Dwave => "dwave",
            Preset::Numerics => "numerics",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "dwave" => Ok(Preset::Dwave),
            "numerics" => Ok(Preset::Numerics),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    /// `(tau, h, J, phase)` for this preset.
    pub fn parameters(self) -> (f64, f64, f64, f64) {
        match self {
            Preset::Dwave => (60_000.0, 0.5, 0.2, 2.0 * PI),
            Preset::Numerics => (10.0, -0.5, -0.2, 1.0),
        }
    }

    pub fn schedule(self, mode: Mode) -> ProtocolSchedule {
        let (tau, h, j, phase) = self.parameters();
        let j = if mode == Mode::Local { 0.0 } else { j };
        ProtocolSchedule {
            tau,
            h,
            j,
            j_crosstalk: 0.0,
            eta: 1.0,
            mode,
            phase,
            table: EnergyTable::default(),
            equalization: None,
        }
    }
}

/// Cooperative reference for a local schedule whose field tracks `g(t)` so
/// that its Hilbert-Schmidt norm matches the cooperative one at every time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equalization {
    pub h_c: f64,
    pub j_c: f64,
    /// `n_C / N` of the cooperative lattice.
    pub ratio: f64,
}

/// Hamiltonian coefficients at one instant, GHz.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coefficients {
    pub bx: f64,
    pub bz: f64,
    pub jc: f64,
}

/// Control functions and physical parameters of one charging cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub tau: f64,
    pub h: f64,
    pub j: f64,
    pub j_crosstalk: f64,
    pub eta: f64,
    pub mode: Mode,
    /// Phase accumulated per unit energy and time: `2 pi` when energies are
    /// in GHz and times in ns, 1 for dimensionless runs.
    pub phase: f64,
    pub table: EnergyTable,
    /// When set (local mode only), `Bz` follows `g(t) h_L(t) B / 2` with
    /// `h_L(t)` equalized at the instantaneous `g(t)`; `h` is then unused.
    #[serde(default)]
    pub equalization: Option<Equalization>,
}

impl ProtocolSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.phase > 0.0) {
            return Err(Error::Config(format!(
                "phase constant must be positive, got {}",
                self.phase
            )));
        }
        if self.mode == Mode::Local && self.j != 0.0 {
            return Err(Error::Config(format!("local mode requires J = 0, got {}", self.j)));
        }
        if let Some(eq) = &self.equalization {
            if self.mode != Mode::Local {
                return Err(Error::Config("equalization applies to local mode only".into()));
            }
            if !(eq.ratio >= 0.0) || !eq.h_c.is_finite() || !eq.j_c.is_finite() {
                return Err(Error::Config(format!("invalid equalization {eq:?}")));
            }
        }
        Ok(())
    }

    /// `(Bx, Bz, Jc)` at time `t`; cross-talk is reported separately by
    /// [`ProtocolSchedule::crosstalk_bias`].
    pub fn coefficients(&self, t: f64) -> Result<Coefficients> {
        let s = s_of_t(t, self.tau)?;
        let g = g_of_t(t, self.tau)?;
        let (a, b) = self.table.eval(s)?;
        let gh = match &self.equalization {
            // g h_L(g) = sign(h_C) sqrt(g^2 h_C^2 + ratio J^2), finite at g = 0
            Some(eq) => {
                let m = (g * g * eq.h_c * eq.h_c + eq.ratio * eq.j_c * eq.j_c).sqrt();
                if eq.h_c < 0.0 {
                    -m
                } else {
                    m
                }
            }
            None => g * self.h,
        };
        Ok(Coefficients {
            bx: -a / 2.0,
            bz: gh * b / 2.0,
            jc: self.j * b / 2.0,
        })
    }

    /// Uniform coupling bias `J_CT * B(s(t)) / 2`.
    pub fn crosstalk_bias(&self, t: f64) -> Result<f64> {
        if self.j_crosstalk == 0.0 {
            check_time(t, self.tau)?;
            return Ok(0.0);
        }
        let (_, b) = self.table.eval(s_of_t(t, self.tau)?)?;
        Ok(self.j_crosstalk * b / 2.0)
    }

    /// Seconds represented by one unit of schedule time.
    pub fn time_unit_seconds(&self) -> f64 {
        self.phase / (2.0 * PI) * 1e-9
    }

    /// Times in `[0, tau]` at which a coefficient has a kink.
    pub fn breakpoints(&self) -> [f64; 5] {
        let tau = self.tau;
        // s crosses 0.5 where the transverse field of the surrogate switches off
        let s_half = (1.0 - 0.5) / S_SLOPE * tau;
        [s_half, tau / 3.0, 2.0 * tau / 3.0, tau - s_half, tau]
    }
}

/// Local field that gives the local protocol the same Hilbert-Schmidt norm
/// as a cooperative one: `sqrt(h_C^2 + ratio * J^2 / g^2)` with
/// `ratio = n_C / N`. The sign of `h_C` is kept so both protocols push the
/// same way.
pub fn equalized_local_field(h_c: f64, j: f64, ratio: f64, g: f64) -> Result<f64> {
    if g == 0.0 {
        return Err(Error::Division("g = 0 in field equalization"));
    }
    if !(ratio >= 0.0) {
        return Err(Error::Domain(format!("connectivity ratio must be >= 0, got {ratio}")));
    }
    let magnitude = (h_c * h_c + ratio * j * j / (g * g)).sqrt();
    Ok(if h_c < 0.0 { -magnitude } else { magnitude })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn s_schedule_values() {
        let tau = 7.0;
        assert_eq!(s_of_t(0.0, tau).unwrap(), 1.0);
        assert_relative_eq!(s_of_t(tau / 3.0, tau).unwrap(), 0.35, epsilon = 1e-12);
        assert_relative_eq!(s_of_t(tau, tau).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(s_of_t(-0.1, tau), Err(Error::Domain(_))));
        assert!(matches!(s_of_t(7.1, tau), Err(Error::Domain(_))));
    }

    #[test]
    fn g_schedule_values() {
        let tau = 3.0;
        assert_eq!(g_of_t(tau / 3.0, tau).unwrap(), 0.0);
        assert_relative_eq!(g_of_t(2.0 * tau / 3.0, tau).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(g_of_t(tau, tau).unwrap(), 0.0, epsilon = 1e-12);
        assert!(g_of_t(4.0, tau).is_err());
    }

    #[test]
    fn schedules_continuous_at_breakpoints() {
        let tau = 9.0;
        for &bp in &[tau / 3.0, 2.0 * tau / 3.0] {
            let eps = 1e-13;
            for f in [s_of_t, g_of_t] {
                let l = f(bp - eps, tau).unwrap();
                let r = f(bp + eps, tau).unwrap();
                assert!((l - r).abs() < 1e-12, "{l} vs {r} at {bp}");
            }
        }
    }

    #[test]
    fn surrogate_table_anchor_points() {
        let table = EnergyTable::default();
        assert_eq!(table.eval(1.0).unwrap(), (0.0, 7.57));
        assert_eq!(table.eval(0.0).unwrap(), (11.0, 0.0));
        let (a, _) = table.eval(0.7).unwrap();
        assert_eq!(a, 0.0);
        let (a, b) = table.eval(0.35).unwrap();
        assert_relative_eq!(a, 11.0 * 0.3, epsilon = 1e-12);
        assert_relative_eq!(b, 7.57 * 0.35, epsilon = 1e-12);
        assert!(matches!(table.eval(1.5), Err(Error::Interpolation(_))));
    }

    #[test]
    fn table_csv() {
        let t = EnergyTable::from_csv("s,A,B\n0,4,0\n0.5,1,2\n1,0,5\n").unwrap();
        assert_eq!(t.eval(0.25).unwrap(), (2.5, 1.0));
        assert!(matches!(
            EnergyTable::from_csv("s,A,B\n0,4,0\n0.5,x,2\n1,0,5\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(EnergyTable::from_csv("s,A\n0,1\n1,1\n").is_err());
        assert!(EnergyTable::from_csv("s,A,B\n0,1,1\n0.9,1,1\n").is_err());
        assert!(EnergyTable::from_csv("s,A,B\n0,1,1\n1,-1,1\n").is_err());
    }

    #[test]
    fn coefficient_mapping() {
        let mut sched = Preset::Numerics.schedule(Mode::Cooperative);
        sched.h = 0.5;
        sched.j = 0.2;
        let c0 = sched.coefficients(0.0).unwrap();
        assert_eq!(c0.bx, 0.0);
        assert_eq!(c0.bz, 0.0);
        assert_relative_eq!(c0.jc, 0.2 * 7.57 / 2.0, epsilon = 1e-12);

        let t = 2.0 * sched.tau / 3.0;
        let (a, b) = sched.table.eval(0.35).unwrap();
        let c = sched.coefficients(t).unwrap();
        assert_relative_eq!(c.bx, -a / 2.0, epsilon = 1e-12);
        assert_relative_eq!(c.bz, 0.25 * b, epsilon = 1e-12);
        assert_relative_eq!(c.jc, 0.1 * b, epsilon = 1e-12);
    }

    #[test]
    fn cycle_returns_to_start() {
        let mut sched = Preset::Numerics.schedule(Mode::Cooperative);
        sched.j_crosstalk = 0.01;
        let a = sched.coefficients(0.0).unwrap();
        let b = sched.coefficients(sched.tau).unwrap();
        assert_relative_eq!(a.bx, b.bx, epsilon = 1e-12);
        assert!(b.bz.abs() < 1e-12);
        assert_relative_eq!(a.jc, b.jc, epsilon = 1e-12);
        assert_relative_eq!(
            sched.crosstalk_bias(0.0).unwrap(),
            sched.crosstalk_bias(sched.tau).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn equalized_field_values() {
        let h = equalized_local_field(0.5, 0.2, 7.0, 1.0).unwrap();
        assert!((h - 0.73).abs() < 0.005, "{h}");
        assert_eq!(equalized_local_field(0.5, 0.0, 3.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(equalized_local_field(0.0, 1.0, 4.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            equalized_local_field(-0.5, -0.2, 2.0, 1.0).unwrap(),
            -(0.25f64 + 0.08).sqrt(),
            epsilon = 1e-15
        );
        assert!(matches!(
            equalized_local_field(0.5, 0.2, 1.0, 0.0),
            Err(Error::Division(_))
        ));
    }

    #[test]
    fn pointwise_norm_identity() {
        // N (Bx^2 + Bz_L^2) = N (Bx^2 + Bz_C^2) + n_C Jc^2 whenever g(t) != 0
        let (n, n_c) = (9.0, 18.0);
        let coop = Preset::Numerics.schedule(Mode::Cooperative);
        for k in 1..200 {
            let t = coop.tau * k as f64 / 200.0;
            let g = g_of_t(t, coop.tau).unwrap();
            if g == 0.0 {
                continue;
            }
            let mut local = Preset::Numerics.schedule(Mode::Local);
            local.h = equalized_local_field(coop.h, coop.j, n_c / n, g).unwrap();
            let c = coop.coefficients(t).unwrap();
            let l = local.coefficients(t).unwrap();
            let lhs = n * (l.bx * l.bx + l.bz * l.bz);
            let rhs = n * (c.bx * c.bx + c.bz * c.bz) + n_c * c.jc * c.jc;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300), "t={t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn time_resolved_equalization_holds_everywhere() {
        let (n, n_c) = (6.0, 9.0);
        let coop = Preset::Numerics.schedule(Mode::Cooperative);
        let mut local = Preset::Numerics.schedule(Mode::Local);
        local.equalization = Some(Equalization {
            h_c: coop.h,
            j_c: coop.j,
            ratio: n_c / n,
        });
        local.validate().unwrap();
        for k in 0..=300 {
            let t = coop.tau * k as f64 / 300.0;
            let c = coop.coefficients(t).unwrap();
            let l = local.coefficients(t).unwrap();
            let lhs = n * (l.bx * l.bx + l.bz * l.bz);
            let rhs = n * (c.bx * c.bx + c.bz * c.bz) + n_c * c.jc * c.jc;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300), "t={t}: {lhs} vs {rhs}");
            assert!(l.bz <= 0.0);
        }
        let mut bad = coop.clone();
        bad.equalization = local.equalization;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn local_mode_rejects_couplings() {
        let mut s = Preset::Numerics.schedule(Mode::Local);
        assert!(s.validate().is_ok());
        s.j = 0.1;
        assert!(s.validate().is_err());
    }
}
