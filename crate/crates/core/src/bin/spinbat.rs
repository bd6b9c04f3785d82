use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spinbat::harness::{
    emit_report, read_results, refit, run_single_detailed, run_sweep, validate_all, ExperimentConfig, FitSource,
};
use spinbat::schedule::Preset;
use spinbat::Error;

#[derive(Parser)]
#[command(
    name = "spinbat",
    version,
    about = "Charge Ising spin batteries and fit their precision scaling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the shot-sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Parameter preset (dwave or numerics).
    #[arg(long)]
    preset: Option<String>,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its trajectory, shots and result row.
    Run(Common),
    /// Run every point of the configured sweep and fit the N scaling.
    Sweep(Common),
    /// Refit an existing results table.
    Fit {
        /// results.csv written by `run` or `sweep`.
        results: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Fit the shot-sampled deviations instead of the exact ones.
        #[arg(long)]
        sampled: bool,
    },
    /// Run the invariant self-checks.
    Validate,
}

fn load_config(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &c.preset {
        cfg.preset = Preset::parse(p)?;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(c: &Common, cfg: &ExperimentConfig) -> PathBuf {
    match (&cfg.output, c.out.as_path() == Path::new("out")) {
        (Some(p), true) => p.clone(),
        _ => c.out.clone(),
    }
}

fn create(path: &Path) -> Result<fs::File, Error> {
    fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(c: &Common) -> Result<(), Error> {
    let cfg = load_config(c)?;
    let dir = out_dir(c, &cfg);
    let (result, artifacts) = run_single_detailed(&cfg)?;
    let files = emit_report(&dir, std::slice::from_ref(&result), &[], &[])?;
    let traj = dir.join("trajectory.csv");
    spinbat::propagate::write_samples_csv(&artifacts.trajectory, create(&traj)?)?;
    let shots = dir.join("shots.csv");
    artifacts.shots.write_csv(create(&shots)?)?;
    println!(
        "{} N={} tau={} mu={:.6} sigma={:.6} mu_bar={:.4} sigma_bar={:.4} P={:.4e} W",
        result.mode,
        result.n,
        result.tau,
        result.mu_exact,
        result.sigma_exact,
        result.mu_bar,
        result.sigma_bar,
        result.power_w
    );
    println!(
        "wrote {}, {}, {}",
        files.results_csv.display(),
        traj.display(),
        shots.display()
    );
    Ok(())
}

fn sweep(c: &Common) -> Result<(), Error> {
    let cfg = load_config(c)?;
    let dir = out_dir(c, &cfg);
    let outcome = run_sweep(&cfg, c.workers)?;
    for f in &outcome.failures {
        eprintln!("point {:?} failed ({}): {}", f.point, f.class, f.message);
    }
    if let Some(cal) = &outcome.calibration {
        fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        let path = dir.join("calibration.json");
        fs::write(&path, serde_json::to_string_pretty(cal)? + "\n").map_err(|e| Error::Io { path, source: e })?;
        println!("calibrated tau = {} (converged: {})", cal.tau, cal.converged);
    }
    let files = emit_report(&dir, &outcome.results, &outcome.fits, &outcome.failures)?;
    for r in &outcome.results {
        println!(
            "{:<11} N={:<2} gamma={:<8} jct={:<7} mu={:.5} sigma={:.5} sigma_bar={:.5}",
            r.mode, r.n, r.gamma, r.j_crosstalk, r.mu_exact, r.sigma_exact, r.sigma_bar
        );
    }
    for g in &outcome.fits {
        println!(
            "fit {} gamma={} jct={}: alpha = {:.4} +- {:.4}, c = {:.4} +- {:.4}",
            g.mode, g.gamma, g.j_crosstalk, g.fit.alpha, g.fit.alpha_err, g.fit.c, g.fit.c_err
        );
    }
    println!("wrote {}", files.results_csv.display());
    Ok(())
}

fn fit(results: &Path, out: &Path, sampled: bool) -> Result<(), Error> {
    let rows = read_results(results)?;
    let source = if sampled {
        FitSource::HardwareEmulation
    } else {
        FitSource::Exact
    };
    let fits = refit(&rows, source)?;
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    spinbat::harness::report::write_fits(&out.join("fit.json"), &fits)?;
    for g in &fits {
        println!(
            "{} gamma={} jct={}: alpha = {:.4} +- {:.4}, c = {:.4} +- {:.4} ({} points)",
            g.mode, g.gamma, g.j_crosstalk, g.fit.alpha, g.fit.alpha_err, g.fit.c, g.fit.c_err, g.fit.n_points
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep(c) => sweep(c),
        Command::Fit { results, out, sampled } => fit(results, out, *sampled),
        Command::Validate => {
            let checks = validate_all();
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.class());
            ExitCode::from(2)
        }
    }
}
