//! Closed-form fluctuation models and the power-law fit of charging
//! precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Product state of identical single-spin states with depolarization `p`,
/// rotation `theta` away from the magnetization axis and dephasing `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalModelParams {
    pub p: f64,
    pub theta: f64,
    pub delta: f64,
}

/// Globally depolarized GHZ state with rotation `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CooperativeModelParams {
    pub p: f64,
    pub theta: f64,
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

fn check_angle(x: f64) -> Result<()> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&x) {
        return Err(Error::Domain(format!("angle {x} outside [0, pi/2]")));
    }
    Ok(())
}

impl LocalModelParams {
    pub fn validate(&self) -> Result<()> {
        check_unit("p", self.p)?;
        check_angle(self.theta)?;
        check_unit("delta", self.delta)
    }
}

impl CooperativeModelParams {
    pub fn validate(&self) -> Result<()> {
        check_unit("P", self.p)?;
        check_angle(self.theta)
    }
}

/// `(mu, sigma^2)` of the local product state. Dephasing does not enter.
pub fn local_model(params: &LocalModelParams, n: usize) -> Result<(f64, f64)> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Domain("spin count must be positive".into()));
    }
    let r = (1.0 - params.p) * (2.0 * params.theta).cos();
    Ok((r, (1.0 - r * r) / n as f64))
}

/// `(mu, sigma^2)` of the depolarized GHZ state.
pub fn cooperative_model(params: &CooperativeModelParams, n: usize) -> Result<(f64, f64)> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Domain("spin count must be positive".into()));
    }
    let p = params.p;
    let (s2, c2) = (2.0 * params.theta).sin_cos();
    let mu = (1.0 - p) * c2;
    // 1 - (1-P) cos^2(2 Theta) written without cancellation
    let inner = s2 * s2 + p * c2 * c2;
    Ok((mu, p / n as f64 + (1.0 - p) * inner))
}

/// `N * sigma_C(N)` for `Theta = a / N`, `P = b / N^2`, `N = 2..=n_max`.
/// Bounded output indicates Heisenberg scaling.
pub fn heisenberg_limit_check(a: f64, b: f64, n_max: usize) -> Result<Vec<(usize, f64)>> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::Domain(format!(
            "scales must be non-negative, got a = {a}, b = {b}"
        )));
    }
    (2..=n_max)
        .map(|n| {
            let nf = n as f64;
            let params = CooperativeModelParams {
                p: (b / (nf * nf)).min(1.0),
                theta: (a / nf).min(std::f64::consts::FRAC_PI_2),
            };
            let (_, var) = cooperative_model(&params, n)?;
            Ok((n, nf * var.sqrt()))
        })
        .collect()
}

/// Upper bound `(1 - mu)(1 + mu)` on the variance of a per-spin
/// magnetization with mean `mu`.
pub fn bhatia_davis_bound(mu: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!("magnetization {mu} outside [-1, 1]")));
    }
    Ok((1.0 - mu) * (1.0 + mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// Ordinary least squares on `log(1/sigma^2)` against `log N`.
    #[default]
    LogLogOls,
    /// Weighted least squares, weights supplied per point.
    LogLogWls,
}

/// Fit of `1/sigma^2 = c N^alpha` with one-standard-error uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub c: f64,
    pub alpha: f64,
    pub c_err: f64,
    pub alpha_err: f64,
    pub n_points: usize,
    pub method: FitMethod,
}

/// Fits `1/sigma^2 = c N^alpha` to `(N, sigma)` points.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    fit_scaling_weighted(points, None)
}

/// As [`fit_scaling`], with optional weights on the log-space residuals
/// (typically inverse variances of `log(1/sigma^2)`).
pub fn fit_scaling_weighted(points: &[(f64, f64)], weights: Option<&[f64]>) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != points.len() || w.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Domain("weights must be positive, one per point".into()));
        }
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, sigma) in points {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma} at N = {n}")));
        }
        if !(n > 0.0) {
            return Err(Error::Domain(format!("N must be positive, got {n}")));
        }
        xs.push(n.ln());
        ys.push(-2.0 * sigma.ln());
    }
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("N values must be distinct".into()));
    }

    let ones = vec![1.0; xs.len()];
    let w = weights.unwrap_or(&ones);
    let sw: f64 = w.iter().sum();
    let xbar = xs.iter().zip(w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ybar = ys.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(w).map(|(x, w)| w * (x - xbar).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .zip(w)
        .map(|((x, y), w)| w * (x - xbar) * (y - ybar))
        .sum();
    let alpha = sxy / sxx;
    let intercept = ybar - alpha * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .zip(w)
        .map(|((x, y), w)| w * (y - intercept - alpha * x).powi(2))
        .sum();
    let dof = (xs.len() - 2) as f64;
    // normalise weights so the residual variance is on the unweighted scale
    let s2 = ssr / dof * (xs.len() as f64 / sw);
    let alpha_err = (s2 / sxx * (sw / xs.len() as f64)).sqrt();
    let intercept_err = (s2 * (1.0 / sw + xbar * xbar / sxx) * (sw / xs.len() as f64)).sqrt();
    let c = intercept.exp();
    Ok(ScalingFit {
        c,
        alpha,
        c_err: c * intercept_err,
        alpha_err,
        n_points: xs.len(),
        method: if weights.is_some() {
            FitMethod::LogLogWls
        } else {
            FitMethod::LogLogOls
        },
    })
}
