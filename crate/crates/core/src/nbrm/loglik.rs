//! NB2 log-likelihood and its derivatives in `(beta, ln alpha)`.
//!
//! For a single observation with mean `mu = exp(eta)` and `u = alpha * mu`,
//! the log-likelihood is evaluated in the rearranged form
//!
//! ```text
//! sum_{j<y} ln(1 + j*alpha) - ln y! + y*eta - y*ln(1+u) - ln(1+u)/alpha
//! ```
//!
//! which equals the usual gamma-function expression exactly for integer `y`
//! and stays accurate as `alpha -> 0` (the Poisson limit).

use nalgebra::{DMatrix, DVector};
use statrs::function::factorial::ln_factorial;

use super::{NbrmError, RegressionInput};

/// Log-likelihood, gradient and Hessian of one observation with respect to
/// the linear predictor `eta` and `theta = ln alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ObsTerms {
    pub ll: f64,
    pub g_eta: f64,
    pub g_theta: f64,
    pub h_eta_eta: f64,
    pub h_eta_theta: f64,
    pub h_theta_theta: f64,
}

/// `u * d/du [ln(1+u)/u]`.
fn psi1(u: f64) -> f64 {
    if u < 1e-2 {
        // sum_{k>=1} (-1)^k k/(k+1) u^k
        let mut acc = 0.0;
        let mut pow = 1.0;
        for k in 1..=14 {
            pow *= -u;
            acc += pow * k as f64 / (k + 1) as f64;
        }
        acc
    } else {
        1.0 / (1.0 + u) - u.ln_1p() / u
    }
}

/// `u * d/du psi1(u)`.
fn psi2(u: f64) -> f64 {
    if u < 1e-2 {
        // sum_{k>=1} (-1)^k k^2/(k+1) u^k
        let mut acc = 0.0;
        let mut pow = 1.0;
        for k in 1..=14 {
            pow *= -u;
            acc += pow * (k * k) as f64 / (k + 1) as f64;
        }
        acc
    } else {
        -u / ((1.0 + u) * (1.0 + u)) - psi1(u)
    }
}

pub(crate) fn obs_terms(y: u64, eta: f64, alpha: f64, ln_y_fact: f64) -> ObsTerms {
    let mu = eta.exp();
    let u = alpha * mu;
    let yf = y as f64;

    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for j in 1..y {
        let ja = j as f64 * alpha;
        let q = 1.0 + ja;
        s0 += ja.ln_1p();
        s1 += ja / q;
        s2 += ja / (q * q);
    }

    let l1u = u.ln_1p();
    let opu = 1.0 + u;
    ObsTerms {
        ll: s0 - ln_y_fact + yf * eta - yf * l1u - l1u / alpha,
        g_eta: (yf - mu) / opu,
        g_theta: s1 - yf * u / opu - mu * psi1(u),
        h_eta_eta: -(mu + yf * u) / (opu * opu),
        h_eta_theta: -(yf - mu) * u / (opu * opu),
        h_theta_theta: s2 - yf * u / (opu * opu) - mu * psi2(u),
    }
}

fn check_alpha(alpha: f64) -> Result<(), NbrmError> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(NbrmError::InvalidAlpha(alpha))
    }
}

fn linear_predictor(beta: &[f64], input: &RegressionInput) -> Result<DVector<f64>, NbrmError> {
    if beta.len() != input.n_params() {
        return Err(NbrmError::DimensionMismatch {
            expected: input.n_params(),
            got: beta.len(),
        });
    }
    let eta = input.x() * DVector::from_column_slice(beta);
    match eta.iter().position(|v| !v.is_finite() || v.abs() > 700.0) {
        Some(row) => Err(NbrmError::NonFiniteLinearPredictor { row }),
        None => Ok(eta),
    }
}

/// NB2 log-likelihood at `(beta, alpha)`.
pub fn nb2_loglik(beta: &[f64], alpha: f64, input: &RegressionInput) -> Result<f64, NbrmError> {
    check_alpha(alpha)?;
    let eta = linear_predictor(beta, input)?;
    Ok(input
        .y()
        .iter()
        .zip(eta.iter())
        .map(|(&y, &e)| obs_terms(y, e, alpha, ln_factorial(y)).ll)
        .sum())
}

/// Poisson log-likelihood at `beta`.
pub fn poisson_loglik(beta: &[f64], input: &RegressionInput) -> Result<f64, NbrmError> {
    let eta = linear_predictor(beta, input)?;
    Ok(input
        .y()
        .iter()
        .zip(eta.iter())
        .map(|(&y, &e)| y as f64 * e - e.exp() - ln_factorial(y))
        .sum())
}

/// Log-likelihood with gradient and Hessian over the stacked parameter
/// vector `[beta..., ln alpha]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub loglik: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

pub fn nb2_derivatives(
    beta: &[f64],
    ln_alpha: f64,
    input: &RegressionInput,
) -> Result<Derivatives, NbrmError> {
    let alpha = ln_alpha.exp();
    check_alpha(alpha)?;
    let eta = linear_predictor(beta, input)?;
    let p = input.n_params();
    let x = input.x();

    let mut loglik = 0.0;
    let mut gradient = DVector::zeros(p + 1);
    let mut hessian = DMatrix::zeros(p + 1, p + 1);
    for (i, &y) in input.y().iter().enumerate() {
        let t = obs_terms(y, eta[i], alpha, ln_factorial(y));
        loglik += t.ll;
        for a in 0..p {
            let xa = x[(i, a)];
            gradient[a] += t.g_eta * xa;
            hessian[(a, p)] += t.h_eta_theta * xa;
            for b in 0..=a {
                hessian[(a, b)] += t.h_eta_eta * xa * x[(i, b)];
            }
        }
        gradient[p] += t.g_theta;
        hessian[(p, p)] += t.h_theta_theta;
    }
    for a in 0..p {
        hessian[(p, a)] = hessian[(a, p)];
        for b in 0..a {
            hessian[(b, a)] = hessian[(a, b)];
        }
    }
    Ok(Derivatives {
        loglik,
        gradient,
        hessian,
    })
}
