//! Curve fits behind the calibration pipeline.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::lsq::{fit_line, gauss_newton};
use super::FitError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    /// Infinite values (an unbounded `T1`) are written as `null`.
    #[serde(with = "crate::device::infinite_as_null")]
    pub value: f64,
    #[serde(with = "crate::device::infinite_as_null")]
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    pub rss: f64,
    /// `rss / (n − p)` with unit weights; absent when there are no
    /// degrees of freedom.
    pub reduced_chi2: Option<f64>,
    pub converged: bool,
    pub iterations: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl FitResult {
    fn new(names: &[&str], values: &[f64], std_errors: &[f64], rss: f64, n: usize) -> Self {
        let params = names
            .iter()
            .zip(values)
            .zip(std_errors)
            .map(|((name, &value), &std_error)| FitParam {
                name: (*name).to_owned(),
                value,
                std_error,
            })
            .collect();
        let dof = n.saturating_sub(names.len());
        Self {
            params,
            rss,
            reduced_chi2: (dof > 0).then(|| rss / dof as f64),
            converged: true,
            iterations: 0,
            diagnostics: Vec::new(),
        }
    }

    /// Value of the named parameter.
    ///
    /// # Panics
    ///
    /// If no parameter has that name.
    pub fn value(&self, name: &str) -> f64 {
        self.param(name)
            .unwrap_or_else(|| panic!("fit has no parameter `{name}`"))
            .value
    }

    pub fn std_error(&self, name: &str) -> f64 {
        self.param(name)
            .unwrap_or_else(|| panic!("fit has no parameter `{name}`"))
            .std_error
    }

    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    fn flag(&mut self, message: impl Into<String>) {
        self.converged = false;
        self.diagnostics.push(message.into());
    }
}

fn check_series(times: &[f64], values: &[f64], need: usize) -> Result<(), FitError> {
    if times.len() != values.len() {
        return Err(FitError::Domain(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if times.len() < need {
        return Err(FitError::TooFewPoints {
            need,
            got: times.len(),
        });
    }
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(FitError::Domain("series contains non-finite values".into()));
    }
    Ok(())
}

/// Fits `offset + amplitude·sin²(2πt/period + phase)`.
///
/// The frequency is located by scanning the least-squares periodogram of
/// the equivalent `c₀ + c₁cos(4πt/P) + c₂sin(4πt/P)` model up to the
/// Nyquist limit of the sampling, then all four parameters are refined by
/// Gauss–Newton. The result is normalized to `amplitude ≥ 0` and
/// `phase ∈ [0, π)`. Fits spanning less than 1.5 periods or with a
/// vanishing amplitude are flagged as not converged.
pub fn fit_sinusoid(times: &[f64], values: &[f64]) -> Result<FitResult, FitError> {
    check_series(times, values, 8)?;
    let n = times.len();
    let (t_min, t_max) = times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        });
    let span = t_max - t_min;
    if !(span > 0.0) {
        return Err(FitError::Degenerate("all sample times coincide".into()));
    }
    let (v_min, v_max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mean = values.iter().sum::<f64>() / n as f64;
    if v_max - v_min <= 1e-12 * mean.abs().max(1.0) {
        return Err(FitError::Degenerate(
            "constant series has no oscillation".into(),
        ));
    }

    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|g| *g > 0.0)
        .collect();
    gaps.sort_by(f64::total_cmp);
    let typical_gap = gaps[gaps.len() / 2];
    let f_max = 0.5 / typical_gap;
    let f_min = 1.0 / span;
    let df = 1.0 / (8.0 * span);

    // centered time keeps the phase and period weakly correlated
    let t0 = 0.5 * (t_min + t_max);
    let centered: Vec<f64> = times.iter().map(|t| t - t0).collect();

    let mut best: Option<(f64, f64, Vector3<f64>)> = None;
    let mut f = f_min;
    while f <= f_max {
        if let Some((rss, c)) = harmonic_fit(&centered, values, f) {
            if best.as_ref().is_none_or(|b| rss < b.0) {
                best = Some((rss, f, c));
            }
        }
        f += df;
    }
    let Some((_, f_best, c)) = best else {
        return Err(FitError::Degenerate(
            "no usable frequency in the sampling band".into(),
        ));
    };

    // c1·cos θ + c2·sin θ = −(A/2)·cos(θ + 2φ)
    let half = c[1].hypot(c[2]);
    let init = [
        c[0] - half,
        2.0 * half,
        2.0 / f_best,
        0.5 * f64::atan2(c[2], -c[1]),
    ];
    let gn = gauss_newton(
        &init,
        n,
        |p, r| {
            for i in 0..n {
                let s = (2.0 * PI * centered[i] / p[2] + p[3]).sin();
                r[i] = values[i] - p[0] - p[1] * s * s;
            }
        },
        |p, j| {
            for i in 0..n {
                let u = 2.0 * PI * centered[i] / p[2] + p[3];
                let s2u = (2.0 * u).sin();
                let s = u.sin();
                j[(i, 0)] = 1.0;
                j[(i, 1)] = s * s;
                j[(i, 2)] = -p[1] * s2u * 2.0 * PI * centered[i] / (p[2] * p[2]);
                j[(i, 3)] = p[1] * s2u;
            }
        },
    );

    let [mut offset, mut amplitude, period, mut phase] =
        [gn.params[0], gn.params[1], gn.params[2], gn.params[3]];
    if amplitude < 0.0 {
        // A·sin²u = A − A·sin²(u + π/2)
        offset += amplitude;
        amplitude = -amplitude;
        phase += 0.5 * PI;
    }
    let period = period.abs();
    // back to the uncentered time origin
    phase = (phase - 2.0 * PI * t0 / period).rem_euclid(PI);

    let mut fit = FitResult::new(
        &["offset", "amplitude", "period", "phase"],
        &[offset, amplitude, period, phase],
        &gn.std_errors,
        gn.rss,
        n,
    );
    fit.iterations = gn.iterations;
    if !gn.converged {
        fit.flag(format!(
            "Gauss-Newton did not converge in {} iterations",
            gn.iterations
        ));
    }
    if span < 1.5 * period {
        fit.flag(format!("samples span {span} < 1.5 periods of {period}"));
    }
    if amplitude <= 1e-9 * (v_max - v_min) {
        fit.flag("fitted amplitude vanishes");
    }
    Ok(fit)
}

fn harmonic_fit(t: &[f64], y: &[f64], freq: f64) -> Option<(f64, Vector3<f64>)> {
    let w = 2.0 * PI * freq;
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let (s, c) = (w * ti).sin_cos();
        let row = Vector3::new(1.0, c, s);
        ata += row * row.transpose();
        aty += row * yi;
    }
    let coef = ata.cholesky()?.solve(&aty);
    let rss = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let (s, c) = (w * ti).sin_cos();
            (yi - coef[0] - coef[1] * c - coef[2] * s).powi(2)
        })
        .sum();
    Some((rss, coef))
}

/// Fits `τ = a·Γ^b` by linear regression of `ln τ` on `ln Γ`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints {
            need: 3,
            got: points.len(),
        });
    }
    if let Some(&(g, t)) = points
        .iter()
        .find(|(g, t)| !(*g > 0.0 && *t > 0.0 && g.is_finite() && t.is_finite()))
    {
        return Err(FitError::Domain(format!(
            "power law needs positive data, got ({g}, {t})"
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&x, &y).ok_or(FitError::RankDeficient("all amplitudes are equal"))?;
    let a = line.intercept.exp();
    Ok(FitResult::new(
        &["a", "b"],
        &[a, line.slope],
        &[a * line.intercept_se, line.slope_se],
        line.rss,
        points.len(),
    ))
}

/// Fits `A·exp(−rate·t)`: log-linear regression, then (with `refine`) a
/// Gauss–Newton polish in linear space.
pub fn fit_exponential_decay(
    times: &[f64],
    values: &[f64],
    refine: bool,
) -> Result<FitResult, FitError> {
    check_series(times, values, 3)?;
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(FitError::Domain(format!(
            "exponential fit needs positive values, got {v}"
        )));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let line =
        fit_line(times, &logs).ok_or(FitError::RankDeficient("all sample times are equal"))?;
    let amplitude = line.intercept.exp();
    let rate = -line.slope;
    let n = times.len();
    let linear_rss = |a: f64, k: f64| -> f64 {
        times
            .iter()
            .zip(values)
            .map(|(t, v)| (v - a * (-k * t).exp()).powi(2))
            .sum()
    };

    if !refine || linear_rss(amplitude, rate) == 0.0 {
        return Ok(FitResult::new(
            &["amplitude", "rate"],
            &[amplitude, rate],
            &[amplitude * line.intercept_se, line.slope_se],
            linear_rss(amplitude, rate),
            n,
        ));
    }

    let gn = gauss_newton(
        &[amplitude, rate],
        n,
        |p, r| {
            for i in 0..n {
                r[i] = values[i] - p[0] * (-p[1] * times[i]).exp();
            }
        },
        |p, j| {
            for i in 0..n {
                let e = (-p[1] * times[i]).exp();
                j[(i, 0)] = e;
                j[(i, 1)] = -p[0] * times[i] * e;
            }
        },
    );
    let mut fit = FitResult::new(
        &["amplitude", "rate"],
        &gn.params,
        &gn.std_errors,
        gn.rss,
        n,
    );
    fit.iterations = gn.iterations;
    if !gn.converged {
        fit.flag(format!(
            "Gauss-Newton did not converge in {} iterations",
            gn.iterations
        ));
    }
    Ok(fit)
}

/// Relaxation time from an undriven decay series `P₁(t)` started in `|1⟩`.
///
/// A non-positive fitted rate reports `T1 = ∞`.
pub fn measure_t1(times: &[f64], populations: &[f64]) -> Result<FitResult, FitError> {
    let decay = fit_exponential_decay(times, populations, true)?;
    let rate = decay.value("rate");
    let rate_se = decay.std_error("rate");
    let (t1, t1_se) = if rate > 0.0 {
        (1.0 / rate, rate_se / (rate * rate))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let mut fit = decay;
    fit.params.insert(
        0,
        FitParam {
            name: "t1".into(),
            value: t1,
            std_error: t1_se,
        },
    );
    if rate < 0.0 {
        fit.diagnostics.push(format!(
            "negative relaxation rate {rate} treated as no decay"
        ));
    }
    Ok(fit)
}

/// Linear law `γ̃(Γ) − 1/T1 = κ0 + κ1·Γ` by ordinary least squares.
pub fn extract_amplitude_noise(rates: &[(f64, f64)], t1: f64) -> Result<FitResult, FitError> {
    if rates.len() < 2 {
        return Err(FitError::TooFewPoints {
            need: 2,
            got: rates.len(),
        });
    }
    if !(t1 > 0.0) {
        return Err(FitError::Domain(format!("T1 must be positive, got {t1}")));
    }
    let x: Vec<f64> = rates.iter().map(|r| r.0).collect();
    let y: Vec<f64> = rates.iter().map(|r| r.1 - 1.0 / t1).collect();
    let line = fit_line(&x, &y).ok_or(FitError::RankDeficient(
        "need at least two distinct amplitudes",
    ))?;
    Ok(FitResult::new(
        &["kappa0", "kappa1"],
        &[line.intercept, line.slope],
        &[line.intercept_se, line.slope_se],
        line.rss,
        rates.len(),
    ))
}
