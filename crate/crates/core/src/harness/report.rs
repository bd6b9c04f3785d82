use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::FitSource;
use super::run::{fit_groups, GroupFit, RunResult, SweepFailure};
use crate::error::{Error, Result};

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ResultRow {
    pub preset: String,
    pub mode: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub n_C: usize,
    pub tau: f64,
    pub dt: f64,
    pub gamma: f64,
    pub j_crosstalk: f64,
    pub h_used: f64,
    pub J_used: f64,
    pub mu_exact: f64,
    pub sigma_exact: f64,
    pub mu_bar: f64,
    pub sigma_bar: f64,
    pub nu: usize,
    pub seed: u64,
    pub energy_J: f64,
    pub power_W: f64,
}

impl From<&RunResult> for ResultRow {
    fn from(r: &RunResult) -> Self {
        ResultRow {
            preset: r.preset.clone(),
            mode: r.mode.clone(),
            n: r.n,
            n_C: r.n_c,
            tau: r.tau,
            dt: r.dt,
            gamma: r.gamma,
            j_crosstalk: r.j_crosstalk,
            h_used: r.h_used,
            J_used: r.j_used,
            mu_exact: r.mu_exact,
            sigma_exact: r.sigma_exact,
            mu_bar: r.mu_bar,
            sigma_bar: r.sigma_bar,
            nu: r.nu,
            seed: r.seed,
            energy_J: r.energy_j,
            power_W: r.power_w,
        }
    }
}

/// Columns for magnetization and precision plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub mode: String,
    pub gamma: f64,
    pub j_crosstalk: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub mu_bar: f64,
    pub sigma_bar: f64,
    pub inv_var_bar: f64,
    pub mu_exact: f64,
    pub sigma_exact: f64,
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results_csv: PathBuf,
    pub plot_csv: PathBuf,
    pub runs_jsonl: PathBuf,
    pub fit_json: Option<PathBuf>,
    pub failures_json: Option<PathBuf>,
}

fn sort_rows(results: &mut [RunResult]) {
    results.sort_by(|a, b| {
        (a.mode.as_str(), a.n)
            .cmp(&(b.mode.as_str(), b.n))
            .then(a.gamma.total_cmp(&b.gamma))
            .then(a.j_crosstalk.total_cmp(&b.j_crosstalk))
    });
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes the fit summary: a single object for one slice, an array
/// otherwise.
pub fn write_fits(path: &Path, fits: &[GroupFit]) -> Result<()> {
    let text = match fits {
        [one] => serde_json::to_string_pretty(&one.fit)?,
        many => serde_json::to_string_pretty(many)?,
    };
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes `results.csv`, `plot.csv`, `runs.jsonl` and, when present,
/// `fit.json` and `failures.json` into `dir`. Rows are sorted by sweep key
/// so the files do not depend on completion order.
pub fn emit_report(
    dir: &Path,
    results: &[RunResult],
    fits: &[GroupFit],
    failures: &[SweepFailure],
) -> Result<ReportFiles> {
    if results.is_empty() {
        return Err(Error::Precondition("no results to report".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sorted = results.to_vec();
    sort_rows(&mut sorted);

    let results_csv = dir.join("results.csv");
    let mut w = csv::Writer::from_writer(create(&results_csv)?);
    for r in &sorted {
        w.serialize(ResultRow::from(r))?;
    }
    w.flush().map_err(|e| Error::io(&results_csv, e))?;

    let plot_csv = dir.join("plot.csv");
    let mut w = csv::Writer::from_writer(create(&plot_csv)?);
    for r in &sorted {
        w.serialize(PlotRow {
            mode: r.mode.clone(),
            gamma: r.gamma,
            j_crosstalk: r.j_crosstalk,
            n: r.n,
            mu_bar: r.mu_bar,
            sigma_bar: r.sigma_bar,
            inv_var_bar: 1.0 / (r.sigma_bar * r.sigma_bar),
            mu_exact: r.mu_exact,
            sigma_exact: r.sigma_exact,
        })?;
    }
    w.flush().map_err(|e| Error::io(&plot_csv, e))?;

    let runs_jsonl = dir.join("runs.jsonl");
    let mut f = create(&runs_jsonl)?;
    for r in &sorted {
        writeln!(f, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(&runs_jsonl, e))?;
    }

    let fit_json = if fits.is_empty() {
        None
    } else {
        let path = dir.join("fit.json");
        write_fits(&path, fits)?;
        Some(path)
    };
    let failures_json = if failures.is_empty() {
        None
    } else {
        let path = dir.join("failures.json");
        fs::write(&path, serde_json::to_string_pretty(failures)? + "\n").map_err(|e| Error::io(&path, e))?;
        Some(path)
    };
    Ok(ReportFiles {
        results_csv,
        plot_csv,
        runs_jsonl,
        fit_json,
        failures_json,
    })
}

/// Reads a results table written by [`emit_report`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Refits a results table, one fit per `(mode, gamma, j_crosstalk)` slice.
pub fn refit(rows: &[ResultRow], source: FitSource) -> Result<Vec<GroupFit>> {
    let as_results: Vec<RunResult> = rows
        .iter()
        .map(|r| RunResult {
            preset: r.preset.clone(),
            mode: r.mode.clone(),
            lattice: String::new(),
            n: r.n,
            n_c: r.n_C,
            tau: r.tau,
            dt: r.dt,
            gamma: r.gamma,
            j_crosstalk: r.j_crosstalk,
            h_used: r.h_used,
            j_used: r.J_used,
            mu_exact: r.mu_exact,
            sigma_exact: r.sigma_exact,
            mu_bar: r.mu_bar,
            sigma_bar: r.sigma_bar,
            nu: r.nu,
            seed: r.seed,
            energy_j: r.energy_J,
            power_w: r.power_W,
            calibrated_tau: None,
            hs_audit: None,
            bhatia_davis_ok: true,
            wall_time_s: 0.0,
            version: String::new(),
            config: Default::default(),
        })
        .collect();
    let fits = fit_groups(&as_results, source);
    if fits.is_empty() {
        return Err(Error::InsufficientData {
            needed: 3,
            got: rows.len(),
        });
    }
    Ok(fits)
}
