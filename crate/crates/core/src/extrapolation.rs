//! Zero-noise extrapolation: Richardson eliminator weights, the weighted
//! linear estimator, shot-variance propagation and the estimator error.
//!
//! Both estimators are written as a linear combination `Σ bᵢ·yᵢ` of the
//! measured values, so the propagated variance is always `Σ bᵢ²·varᵢ` and
//! the sampling overhead is `Σ bᵢ²`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Richardson orders above this are reported with a cost warning.
pub const HIGH_ORDER: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtrapolationError {
    #[error("no noise points supplied")]
    Empty,
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("noise factor {0} must be positive and finite")]
    NoiseFactor(f64),
    #[error("duplicate scale factor {0} makes the eliminator system singular")]
    Singular(f64),
    #[error("variance {0} must be non-negative")]
    NegativeVariance(f64),
    #[error("all noise factors coincide; the regression is rank deficient")]
    RankDeficient,
}

/// One measured expectation value at effective noise level `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub noise_factor: f64,
    pub value: f64,
    /// Variance of `value`; `None` when unknown.
    pub variance: Option<f64>,
}

impl NoisePoint {
    pub fn new(noise_factor: f64, value: f64, variance: Option<f64>) -> Self {
        Self {
            noise_factor,
            value,
            variance,
        }
    }

    fn validate(&self) -> Result<(), ExtrapolationError> {
        if !(self.noise_factor > 0.0 && self.noise_factor.is_finite()) {
            return Err(ExtrapolationError::NoiseFactor(self.noise_factor));
        }
        match self.variance {
            Some(v) if !(v >= 0.0) => Err(ExtrapolationError::NegativeVariance(v)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact `n`-point eliminator, cancels orders `1..n−1`.
    Richardson(usize),
    /// Least-squares straight line, intercept at `ε = 0`.
    LinearLsq,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Richardson(n) => write!(f, "richardson-{n}"),
            Method::LinearLsq => f.write_str("linear-lsq"),
        }
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "linear-lsq" {
            return Ok(Method::LinearLsq);
        }
        s.strip_prefix("richardson-")
            .and_then(|n| n.parse().ok())
            .map(Method::Richardson)
            .ok_or_else(|| format!("unknown extrapolation method `{s}`"))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Method::try_from(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Whether shot variances entered the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    ShotVariance,
    /// Some variance was missing (or zero, for the regression); the
    /// propagated variance carries no shot-noise term.
    Unweighted,
}

/// Regression weighting requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearWeighting {
    /// Inverse-variance weights when every variance is known and positive.
    #[default]
    Auto,
    Unweighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    pub method: Method,
    /// `aᵢ = εᵢ / min ε`, in input order.
    pub scale_factors: Vec<f64>,
    pub weights: Vec<f64>,
    pub estimate: f64,
    /// `Σ bᵢ²·varᵢ` over the known variances.
    pub variance: f64,
    pub variance_amplification: f64,
    pub std_error: f64,
    pub weighting: Weighting,
    /// Slope `d⟨A⟩/dε` of the fitted line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    /// Reduced chi-square of a weighted line with more than two points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_chi2: Option<f64>,
    #[serde(default)]
    pub high_order: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator_error: Option<f64>,
}

impl ExtrapolationResult {
    pub fn with_estimator_error(mut self, ideal: f64) -> Self {
        estimator_error(ideal, &mut self);
        self
    }
}

/// Eliminator weights `bᵢ = Π_{j≠i} aⱼ/(aⱼ − aᵢ)`: the Lagrange basis
/// polynomials on the nodes `aᵢ` evaluated at zero. They satisfy
/// `Σ bᵢ = 1` and `Σ bᵢ·aᵢᵏ = 0` for `k = 1..n−1`.
pub fn richardson_weights(scale_factors: &[f64]) -> Result<Vec<f64>, ExtrapolationError> {
    if scale_factors.is_empty() {
        return Err(ExtrapolationError::Empty);
    }
    for &a in scale_factors {
        if !(a > 0.0 && a.is_finite()) {
            return Err(ExtrapolationError::NoiseFactor(a));
        }
    }
    for (i, &a) in scale_factors.iter().enumerate() {
        if scale_factors[..i].contains(&a) {
            return Err(ExtrapolationError::Singular(a));
        }
    }
    Ok(scale_factors
        .iter()
        .enumerate()
        .map(|(i, &ai)| {
            scale_factors
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &aj)| aj / (aj - ai))
                .product()
        })
        .collect())
}

/// `Σ bᵢ²`, the factor by which the shot budget must grow to keep the
/// variance of a single unmitigated estimate.
pub fn variance_amplification(weights: &[f64]) -> f64 {
    weights.iter().map(|b| b * b).sum()
}

/// `Δ_A = |⟨A⟩_I − ⟨A⟩_E|`, also stored on `result`.
pub fn estimator_error(ideal: f64, result: &mut ExtrapolationResult) -> f64 {
    let delta = (ideal - result.estimate).abs();
    result.estimator_error = Some(delta);
    delta
}

fn scale_factors(points: &[NoisePoint]) -> Result<Vec<f64>, ExtrapolationError> {
    if points.is_empty() {
        return Err(ExtrapolationError::Empty);
    }
    for p in points {
        p.validate()?;
    }
    let base = points
        .iter()
        .map(|p| p.noise_factor)
        .fold(f64::INFINITY, f64::min);
    Ok(points.iter().map(|p| p.noise_factor / base).collect())
}

fn propagate(points: &[NoisePoint], weights: &[f64]) -> (f64, Weighting) {
    let mut variance = 0.0;
    let mut weighting = Weighting::ShotVariance;
    for (p, b) in points.iter().zip(weights) {
        match p.variance {
            Some(v) => variance += b * b * v,
            None => weighting = Weighting::Unweighted,
        }
    }
    (variance, weighting)
}

/// Exact `n`-point Richardson estimate `Σ bᵢ·yᵢ`, with the least noisy
/// point as the reference (`a₀ = 1`).
pub fn richardson_estimate(
    points: &[NoisePoint],
) -> Result<ExtrapolationResult, ExtrapolationError> {
    let a = scale_factors(points)?;
    let weights = richardson_weights(&a)?;
    let estimate = points.iter().zip(&weights).map(|(p, b)| b * p.value).sum();
    let (variance, weighting) = propagate(points, &weights);
    let n = points.len();
    Ok(ExtrapolationResult {
        method: Method::Richardson(n),
        variance_amplification: variance_amplification(&weights),
        std_error: variance.sqrt(),
        scale_factors: a,
        weights,
        estimate,
        variance,
        weighting,
        slope: None,
        reduced_chi2: None,
        high_order: n > HIGH_ORDER,
        estimator_error: None,
    })
}

/// Straight-line fit `y = m·ε + y₀` returning the intercept `y₀`.
///
/// With [`LinearWeighting::Auto`] the fit is inverse-variance weighted when
/// all variances are known and positive, and ordinary least squares
/// otherwise. The standard error is the propagated shot noise in the
/// weighted case and the residual-based OLS error in the unweighted one.
pub fn linear_extrapolate(
    points: &[NoisePoint],
    weighting: LinearWeighting,
) -> Result<ExtrapolationResult, ExtrapolationError> {
    if points.len() < 2 {
        return Err(ExtrapolationError::TooFewPoints {
            need: 2,
            got: points.len(),
        });
    }
    let a = scale_factors(points)?;
    let weighted = weighting == LinearWeighting::Auto
        && points
            .iter()
            .all(|p| matches!(p.variance, Some(v) if v > 0.0));
    let w: Vec<f64> = points
        .iter()
        .map(|p| {
            if weighted {
                1.0 / p.variance.unwrap()
            } else {
                1.0
            }
        })
        .collect();

    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((wi, xi), p) in w.iter().zip(&a).zip(points) {
        s += wi;
        sx += wi * xi;
        sy += wi * p.value;
        sxx += wi * xi * xi;
        sxy += wi * xi * p.value;
    }
    // centered second moment, immune to cancellation in s·sxx − sx²
    let mean_x = sx / s;
    let spread: f64 = w
        .iter()
        .zip(&a)
        .map(|(wi, xi)| wi * (xi - mean_x).powi(2))
        .sum();
    if !(spread > 1e-14 * s * mean_x * mean_x) {
        return Err(ExtrapolationError::RankDeficient);
    }
    let det = s * spread;
    let weights: Vec<f64> = w
        .iter()
        .zip(&a)
        .map(|(wi, xi)| wi * (sxx - sx * xi) / det)
        .collect();
    let estimate: f64 = weights.iter().zip(points).map(|(b, p)| b * p.value).sum();
    let slope_a = (s * sxy - sx * sy) / det;

    let n = points.len();
    let residuals: Vec<f64> = a
        .iter()
        .zip(points)
        .map(|(xi, p)| p.value - estimate - slope_a * xi)
        .collect();
    let amplification = variance_amplification(&weights);
    let (variance, weighting) = if weighted {
        (
            weights
                .iter()
                .zip(points)
                .map(|(b, p)| b * b * p.variance.unwrap())
                .sum(),
            Weighting::ShotVariance,
        )
    } else {
        (0.0, Weighting::Unweighted)
    };
    let reduced_chi2 = (weighted && n > 2).then(|| {
        residuals
            .iter()
            .zip(&w)
            .map(|(r, wi)| r * r * wi)
            .sum::<f64>()
            / (n - 2) as f64
    });
    let std_error = if weighted {
        variance.sqrt()
    } else if n > 2 {
        let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / (n - 2) as f64;
        (s2 * amplification).sqrt()
    } else {
        0.0
    };
    let base = points
        .iter()
        .map(|p| p.noise_factor)
        .fold(f64::INFINITY, f64::min);

    Ok(ExtrapolationResult {
        method: Method::LinearLsq,
        scale_factors: a,
        weights,
        estimate,
        variance,
        variance_amplification: amplification,
        std_error,
        weighting,
        slope: Some(slope_a / base),
        reduced_chi2,
        high_order: false,
        estimator_error: None,
    })
}

/// Linear extrapolations using the `D` least noisy points, `D = 2..n`.
pub fn convergence_series(
    points: &[NoisePoint],
    weighting: LinearWeighting,
) -> Result<Vec<ExtrapolationResult>, ExtrapolationError> {
    if points.len() < 2 {
        return Err(ExtrapolationError::TooFewPoints {
            need: 2,
            got: points.len(),
        });
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|p, q| p.noise_factor.total_cmp(&q.noise_factor));
    (2..=sorted.len())
        .map(|d| linear_extrapolate(&sorted[..d], weighting))
        .collect()
}
