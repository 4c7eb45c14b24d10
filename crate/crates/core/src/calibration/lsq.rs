//! Small dense least-squares helpers: ordinary linear regression on one
//! regressor and a Gauss–Newton solver with step halving.

use nalgebra::{DMatrix, DVector};

pub const MAX_ITERATIONS: u32 = 100;
pub const PARAM_TOLERANCE: f64 = 1e-10;

/// Straight line `y = intercept + slope·x` fitted by ordinary least squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
    pub rss: f64,
    pub dof: usize,
}

/// Returns `None` when the regressor has no spread.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 1e-300 && sxx > 1e-24 * x.iter().map(|v| v * v).sum::<f64>()) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let dof = n - 2;
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    Some(LineFit {
        intercept,
        slope,
        intercept_se: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        slope_se: (s2 / sxx).sqrt(),
        rss,
        dof,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussNewtonFit {
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rss: f64,
    pub iterations: u32,
    pub converged: bool,
}

/// Minimizes `Σ rᵢ(p)²` starting from `initial`.
///
/// `residuals` writes `rᵢ = yᵢ − f(tᵢ; p)` and `jacobian` writes
/// `∂f/∂pⱼ` (the model derivative, not the residual derivative) as an
/// `n × m` matrix. Steps are halved until the residual sum decreases.
pub fn gauss_newton<R, J>(
    initial: &[f64],
    n: usize,
    mut residuals: R,
    mut jacobian: J,
) -> GaussNewtonFit
where
    R: FnMut(&[f64], &mut DVector<f64>),
    J: FnMut(&[f64], &mut DMatrix<f64>),
{
    let m = initial.len();
    let mut p = initial.to_vec();
    let mut r = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, m);
    residuals(&p, &mut r);
    let mut rss = r.norm_squared();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        jacobian(&p, &mut jac);
        let Ok(step) = jac.clone().svd(true, true).solve(&r, 1e-14) else {
            break;
        };
        let mut scale = 1.0;
        let mut accepted = false;
        let mut trial = p.clone();
        let mut trial_r = DVector::zeros(n);
        for _ in 0..40 {
            for j in 0..m {
                trial[j] = p[j] + scale * step[j];
            }
            residuals(&trial, &mut trial_r);
            let trial_rss = trial_r.norm_squared();
            if trial_rss.is_finite() && trial_rss <= rss {
                accepted = true;
                rss = trial_rss;
                break;
            }
            scale *= 0.5;
        }
        let rel_change = (0..m)
            .map(|j| (scale * step[j]).abs() / p[j].abs().max(1e-300))
            .fold(0.0, f64::max);
        if !accepted {
            // no descent direction left: at a minimum up to rounding
            converged = rel_change < 1e-6 || rss <= 1e-28;
            break;
        }
        p.clone_from(&trial);
        r.copy_from(&trial_r);
        if rel_change < PARAM_TOLERANCE || rss == 0.0 {
            converged = true;
            break;
        }
    }

    jacobian(&p, &mut jac);
    let dof = n.saturating_sub(m);
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let jtj = jac.transpose() * &jac;
    let std_errors = match jtj.try_inverse() {
        Some(cov) => (0..m).map(|j| (s2 * cov[(j, j)]).max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; m],
    };
    GaussNewtonFit {
        params: p,
        std_errors,
        rss,
        iterations,
        converged,
    }
}
