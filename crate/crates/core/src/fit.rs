//! Least-squares fitting of counting series: log N = delta*T + beta*log T + c,
//! with optional frozen polynomial exponent, plus the direct Poincare-series
//! abscissa estimator used as an independent oracle.

use crate::count::CountRecord;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::words::OrbitTable;
use serde::Serialize;

/// Fit window policy derived from the reliable counting range of a ball: a
/// depth-L ball undercounts beyond `t_max_factor * L * min_letter_norm`, and
/// the window starts at `window_lo_factor` of that.
#[derive(Clone, Debug, Serialize)]
pub struct WindowPolicy {
    pub t_max_factor: f64,
    pub window_lo_factor: f64,
    /// Shot-noise floor: grid points with N below this are excluded.
    pub min_count: u64,
    /// Minimum number of usable grid points.
    pub min_points: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy {
            t_max_factor: 0.8,
            window_lo_factor: 0.4,
            min_count: 30,
            min_points: 10,
        }
    }
}

impl WindowPolicy {
    pub fn t_max(&self, depth: u32, min_letter_norm: f64) -> f64 {
        self.t_max_factor * depth as f64 * min_letter_norm
    }

    pub fn window(&self, depth: u32, min_letter_norm: f64) -> (f64, f64) {
        let hi = self.t_max(depth, min_letter_norm);
        (self.window_lo_factor * hi, hi)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    /// Exponential rate estimate.
    pub delta: f64,
    /// Coefficient of log T (frozen when `beta_frozen`).
    pub beta: f64,
    pub beta_frozen: bool,
    /// Constant term.
    pub c: f64,
    pub window: (f64, f64),
    pub residual_rms: f64,
    pub stderr_delta: f64,
    pub stderr_beta: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug)]
pub enum FitModel {
    /// log N = delta T + c
    Exponential,
    /// log N = delta T + beta log T + c
    ExponentialPolynomial,
    /// log N = delta T + beta0 log T + c with beta0 fixed
    FrozenBeta(f64),
}

/// Plain least squares of y on x. Returns (slope, intercept, rms, stderr_slope).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let nf = n as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = nf * sxx - sx * sx;
    if denom.abs() < 1e-12 * (1.0 + sxx.abs()) {
        return Err(Error::Fit("degenerate abscissa".into()));
    }
    let slope = (nf * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / nf;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - slope * x - intercept;
        ss += r * r;
    }
    let rms = (ss / nf).sqrt();
    let var = if n > 2 { ss / (nf - 2.0) } else { 0.0 };
    let stderr = (var * nf / denom).sqrt();
    Ok((slope, intercept, rms, stderr))
}

/// Ordinary least squares of (T, log N) over the window, with the polynomial
/// term optional or frozen.
pub fn fit_exponential_polynomial(
    record: &CountRecord,
    model: &FitModel,
    window: (f64, f64),
    policy: &WindowPolicy,
) -> Result<FitResult> {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (&t, &n) in record.t_grid.iter().zip(&record.counts) {
        if t < window.0 || t > window.1 || n < policy.min_count || t <= 0.0 {
            continue;
        }
        xs.push(t);
        ys.push((n as f64).ln());
    }
    if xs.len() < policy.min_points {
        return Err(Error::Fit(format!(
            "window [{:.2}, {:.2}] has {} usable points, need {}",
            window.0,
            window.1,
            xs.len(),
            policy.min_points
        )));
    }
    let n = xs.len();
    let nf = n as f64;
    match model {
        FitModel::Exponential => {
            let (delta, c, rms, stderr) = linear_fit(&xs, &ys)?;
            Ok(FitResult {
                delta,
                beta: 0.0,
                beta_frozen: true,
                c,
                window,
                residual_rms: rms,
                stderr_delta: stderr,
                stderr_beta: 0.0,
                n_points: n,
            })
        }
        FitModel::FrozenBeta(beta0) => {
            let adjusted: Vec<f64> =
                ys.iter().zip(&xs).map(|(y, x)| y - beta0 * x.ln()).collect();
            let (delta, c, rms, stderr) = linear_fit(&xs, &adjusted)?;
            Ok(FitResult {
                delta,
                beta: *beta0,
                beta_frozen: true,
                c,
                window,
                residual_rms: rms,
                stderr_delta: stderr,
                stderr_beta: 0.0,
                n_points: n,
            })
        }
        FitModel::ExponentialPolynomial => {
            // Normal equations for [T, log T, 1].
            let mut xtx = Mat::zeros(3, 3);
            let mut xty = [0.0; 3];
            for (x, y) in xs.iter().zip(&ys) {
                let row = [*x, x.ln(), 1.0];
                for i in 0..3 {
                    for j in 0..3 {
                        xtx[(i, j)] += row[i] * row[j];
                    }
                    xty[i] += row[i] * y;
                }
            }
            let inv = xtx
                .inverse()
                .ok_or_else(|| Error::Fit("singular normal equations".into()))?;
            let mut beta_hat = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    beta_hat[i] += inv[(i, j)] * xty[j];
                }
            }
            let mut ss = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                let fit = beta_hat[0] * x + beta_hat[1] * x.ln() + beta_hat[2];
                ss += (y - fit) * (y - fit);
            }
            let sigma2 = if n > 3 { ss / (nf - 3.0) } else { 0.0 };
            Ok(FitResult {
                delta: beta_hat[0],
                beta: beta_hat[1],
                beta_frozen: false,
                c: beta_hat[2],
                window,
                residual_rms: (ss / nf).sqrt(),
                stderr_delta: (sigma2 * inv[(0, 0)]).max(0.0).sqrt(),
                stderr_beta: (sigma2 * inv[(1, 1)]).max(0.0).sqrt(),
                n_points: n,
            })
        }
    }
}

/// Direct Poincare-series abscissa: the value of s at which the last two
/// word-length shells carry equal mass sum e^{-s ||mu||}, found by bisection.
/// Independent of the window-based fits.
pub fn poincare_abscissa(table: &OrbitTable) -> Result<f64> {
    let depth = table.depth;
    if depth < 2 {
        return Err(Error::InsufficientData("need depth >= 2 for the abscissa".into()));
    }
    let shell_norms = |k: usize| -> Vec<f64> {
        table
            .rows
            .iter()
            .filter(|r| r.word.len() == k)
            .map(|r| r.mu.norm())
            .collect()
    };
    let last = shell_norms(depth as usize);
    let prev = shell_norms(depth as usize - 1);
    if last.is_empty() || prev.is_empty() {
        return Err(Error::InsufficientData("missing word-length shells".into()));
    }
    let ratio = |s: f64| -> f64 {
        let mass = |norms: &[f64]| norms.iter().map(|n| (-s * n).exp()).sum::<f64>();
        mass(&last) / mass(&prev)
    };
    let mut lo = 0.0;
    let mut hi = 8.0;
    if ratio(lo) < 1.0 {
        return Err(Error::InsufficientData("shells shrink even at s = 0".into()));
    }
    while ratio(hi) > 1.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Numerical("abscissa bisection diverged".into()));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::CountRecord;

    fn synthetic_record(f: impl Fn(f64) -> f64, t_lo: f64, t_hi: f64) -> CountRecord {
        let mut t_grid = Vec::new();
        let mut counts = Vec::new();
        let mut t = 0.0;
        while t <= t_hi {
            t_grid.push(t);
            counts.push(if t < t_lo { 0 } else { f(t).round().max(0.0) as u64 });
            t += 0.1;
        }
        CountRecord {
            t_grid,
            counts,
            depth: 0,
            region_label: "synthetic".into(),
            dedup_mode: "none".into(),
        }
    }

    #[test]
    fn recovers_pure_exponential() {
        let rec = synthetic_record(|t| (2.0 * t).exp(), 2.0, 12.0);
        let fit = fit_exponential_polynomial(
            &rec,
            &FitModel::ExponentialPolynomial,
            (4.0, 12.0),
            &WindowPolicy::default(),
        )
        .unwrap();
        assert!((fit.delta - 2.0).abs() < 1e-3, "delta = {}", fit.delta);
        assert!(fit.beta.abs() < 0.05, "beta = {}", fit.beta);
    }

    #[test]
    fn recovers_polynomial_correction() {
        let rec = synthetic_record(|t| (1.5 * t).exp() * t.powf(-0.5), 5.0, 30.0);
        let fit = fit_exponential_polynomial(
            &rec,
            &FitModel::ExponentialPolynomial,
            (10.0, 30.0),
            &WindowPolicy::default(),
        )
        .unwrap();
        assert!((fit.delta - 1.5).abs() < 1e-2, "delta = {}", fit.delta);
        assert!((fit.beta + 0.5).abs() < 1e-1, "beta = {}", fit.beta);

        let frozen = fit_exponential_polynomial(
            &rec,
            &FitModel::FrozenBeta(-0.5),
            (10.0, 30.0),
            &WindowPolicy::default(),
        )
        .unwrap();
        assert!((frozen.delta - 1.5).abs() < 1e-3, "delta = {}", frozen.delta);
    }

    #[test]
    fn degenerate_window_is_an_error() {
        let rec = synthetic_record(|t| (2.0 * t).exp(), 2.0, 12.0);
        let err = fit_exponential_polynomial(
            &rec,
            &FitModel::Exponential,
            (11.9, 12.0),
            &WindowPolicy::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Fit(_)));
    }
}
