//! Log-log fits of the class-level complexity estimate against `n`.

use super::alg1::collapsed_estimate;
use super::baseline::baseline_collapsed;
use super::schedule::Schedule;
use super::StageParams;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    /// The uniform construction with `r = round(n^{k/(k+1)})`.
    Baseline,
    /// The staged construction with `r_i = round(n^{rho_i})`.
    Alg1Collapsed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    /// `(n, estimate)` per grid point.
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// `ln estimate - (intercept + slope ln n)` per grid point.
    pub residuals: Vec<f64>,
    /// Grid points where the asymptotic parameter conditions fail.
    pub warnings: Vec<String>,
}

/// Estimate `sum_i sqrt(T_i)` at one `n`, plus parameter warnings.
pub fn estimate_at(construction: Construction, k: usize, n: usize) -> Result<(f64, Vec<String>)> {
    match construction {
        Construction::Baseline => {
            let r = ((n as f64).powf(k as f64 / (k + 1) as f64).round() as usize).max(1);
            Ok((baseline_collapsed(k, n, r, false)?.estimate, Vec::new()))
        }
        Construction::Alg1Collapsed => {
            let params = StageParams::from_exponents(k, n)?;
            let warnings = params.asymptotic_warnings();
            let schedule = Schedule::uncapped(params);
            Ok((collapsed_estimate(&schedule, None, usize::MAX)?.estimate, warnings))
        }
    }
}

pub fn scaling_experiment(construction: Construction, k: usize, grid: &[usize]) -> Result<ScalingFit> {
    let mut ns = grid.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 5 {
        return Err(Error::input(format!(
            "a scaling fit needs at least 5 distinct values of n, got {}",
            ns.len()
        )));
    }
    if ns[0] < 2 {
        return Err(Error::input("grid values of n must be at least 2"));
    }
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for &n in &ns {
        let (est, w) = estimate_at(construction, k, n)?;
        points.push((n, est));
        warnings.extend(w.into_iter().map(|w| format!("n = {n}: {w}")));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys)?;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(ScalingFit {
        points,
        slope,
        intercept,
        residuals,
        warnings,
    })
}

/// Ordinary least squares `y = a + b x`, returning `(b, a)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::input("regression needs at least two distinct abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Ok((b, my - b * mx))
}
