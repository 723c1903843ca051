//! Maximum-likelihood NB2 fit by damped Newton-Raphson on `(beta, ln alpha)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::loglik::{nb2_derivatives, nb2_loglik, Derivatives};
use super::{NbrmError, RegressionInput};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Relative log-likelihood change between iterations.
    pub tol_loglik: f64,
    /// Gradient infinity norm, scaled by `max(1, |loglik|)`.
    pub tol_grad: f64,
    /// Largest remaining Newton step, relative to `max(1, |param|)` for beta
    /// and to `max(1, alpha)` for the change in alpha.
    pub tol_step: f64,
    /// Armijo sufficient-increase constant for the backtracking line search.
    pub armijo: f64,
    /// Also fit the intercept-only model for the pseudo-R².
    pub null_model: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol_loglik: 1e-10,
            tol_grad: 1e-6,
            tol_step: 1e-10,
            armijo: 1e-4,
            null_model: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub columns: Vec<String>,
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub se: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub stars: Vec<String>,
    pub pct_change: Vec<f64>,
    pub loglik: f64,
    pub loglik_null: Option<f64>,
    pub pseudo_r2: Option<f64>,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Fitted means `exp(x_i' beta)` for `input`.
    pub fn fitted_means(&self, input: &RegressionInput) -> Vec<f64> {
        let eta = input.x() * DVector::from_column_slice(&self.beta);
        eta.iter().map(|e| e.exp()).collect()
    }
}

/// `100 (e^beta - 1)`: percent change of the expected count per unit increase.
pub fn percent_change(beta: f64) -> f64 {
    100.0 * beta.exp_m1()
}

/// Significance marker for a two-sided p-value.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaldStats {
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub stars: Vec<&'static str>,
}

pub fn wald_stats(beta: &[f64], se: &[f64]) -> WaldStats {
    let z: Vec<f64> = beta.iter().zip(se).map(|(b, s)| b / s).collect();
    let p: Vec<f64> = z
        .iter()
        .map(|z| libm::erfc(z.abs() / std::f64::consts::SQRT_2))
        .collect();
    let stars = p.iter().map(|&p| stars(p)).collect();
    WaldStats { z, p, stars }
}

/// McFadden pseudo-R²: `1 - loglik / loglik_null`.
pub fn pseudo_r2(loglik: f64, loglik_null: f64) -> Result<f64, NbrmError> {
    if loglik_null == 0.0 {
        return Err(NbrmError::ZeroNullLoglik);
    }
    Ok(1.0 - loglik / loglik_null)
}

fn check_rank(input: &RegressionInput) -> Result<(), NbrmError> {
    let x = input.x();
    let p = x.ncols();
    let mut normalized = x.clone();
    for mut col in normalized.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let gram = normalized.tr_mul(&normalized);
    let eig = SymmetricEigen::new(gram);
    let (min_idx, min) =
        eig.eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if max > 0.0 && min > 1e-12 * max {
        return Ok(());
    }
    let involved: Vec<&str> = (0..p)
        .filter(|&j| eig.eigenvectors[(j, min_idx)].abs() > 0.1)
        .map(|j| input.columns()[j].as_str())
        .collect();
    Err(NbrmError::RankDeficient(involved.join(", ")))
}

/// Poisson coefficients by iteratively reweighted least squares.
fn poisson_irls(input: &RegressionInput) -> Option<DVector<f64>> {
    let x = input.x();
    let y: Vec<f64> = input.y().iter().map(|&v| v as f64).collect();
    let n = y.len();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut mu: Vec<f64> = y.iter().map(|&v| ((v + ybar) / 2.0).max(0.1)).collect();
    let mut eta: Vec<f64> = mu.iter().map(|m| m.ln()).collect();
    let mut beta = None;
    let mut deviance = f64::INFINITY;
    for _ in 0..50 {
        let w = DVector::from_vec(mu.clone());
        let z = DVector::from_iterator(n, (0..n).map(|i| eta[i] + (y[i] - mu[i]) / mu[i]));
        let mut xw = x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let xtwx = x.tr_mul(&xw);
        let xtwz = xw.tr_mul(&z);
        let b = xtwx.cholesky()?.solve(&xtwz);
        let new_eta = x * &b;
        eta = new_eta.iter().map(|e| e.clamp(-50.0, 50.0)).collect();
        mu = eta.iter().map(|e| e.exp()).collect();
        let dev: f64 = 2.0
            * y.iter()
                .zip(&mu)
                .map(|(&yi, &m)| {
                    let t = if yi > 0.0 { yi * (yi / m).ln() } else { 0.0 };
                    t - (yi - m)
                })
                .sum::<f64>();
        beta = Some(b);
        if (dev - deviance).abs() < 1e-8 * (dev.abs() + 0.1) {
            break;
        }
        deviance = dev;
    }
    beta
}

/// Method-of-moments dispersion from Poisson residuals.
fn moment_alpha(input: &RegressionInput, beta: &DVector<f64>) -> f64 {
    let eta = input.x() * beta;
    let n = input.n_obs();
    let dof = (n.saturating_sub(input.n_params())).max(1) as f64;
    let sum: f64 = input
        .y()
        .iter()
        .zip(eta.iter())
        .map(|(&y, &e)| {
            let mu = e.exp();
            let r = y as f64 - mu;
            (r * r - y as f64) / (mu * mu)
        })
        .sum();
    let alpha = sum / dof;
    if alpha.is_finite() {
        alpha.clamp(1e-4, 10.0)
    } else {
        1.0
    }
}

/// Ascent direction solving `(-H + tau I) d = g`, with the smallest tau that
/// makes the system positive definite.
fn newton_direction(d: &Derivatives) -> DVector<f64> {
    let neg_h = -&d.hessian;
    if let Some(chol) = neg_h.clone().cholesky() {
        return chol.solve(&d.gradient);
    }
    let scale = neg_h.diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut tau = 1e-8 * scale;
    for _ in 0..24 {
        let shifted = &neg_h + DMatrix::identity(neg_h.nrows(), neg_h.ncols()) * tau;
        if let Some(chol) = shifted.cholesky() {
            return chol.solve(&d.gradient);
        }
        tau *= 10.0;
    }
    &d.gradient / scale
}

fn split(params: &DVector<f64>) -> (&[f64], f64) {
    let p = params.len() - 1;
    (&params.as_slice()[..p], params[p])
}

fn loglik_at(params: &DVector<f64>, input: &RegressionInput) -> Option<f64> {
    let (beta, theta) = split(params);
    nb2_loglik(beta, theta.exp(), input)
        .ok()
        .filter(|v| v.is_finite())
}

struct NewtonOutcome {
    params: DVector<f64>,
    derivatives: Derivatives,
    iterations: usize,
    converged: bool,
}

fn newton(
    input: &RegressionInput,
    start: DVector<f64>,
    options: &FitOptions,
) -> Result<NewtonOutcome, NbrmError> {
    let p = input.n_params();
    let mut params = start;
    let (beta, theta) = split(&params);
    let mut d = nb2_derivatives(beta, theta, input)?;
    let mut rel_change = f64::INFINITY;

    for iteration in 0..options.max_iter {
        let scale = d.loglik.abs().max(1.0);
        let grad_ok = d.gradient.amax() < options.tol_grad * scale;
        let dir = newton_direction(&d);

        let alpha = params[p].exp();
        let beta_step = (0..p)
            .map(|k| dir[k].abs() / params[k].abs().max(1.0))
            .fold(0.0, f64::max);
        let alpha_step = (alpha * dir[p].exp_m1()).abs() / alpha.max(1.0);
        let step_ok = beta_step.max(alpha_step) < options.tol_step;

        if grad_ok && step_ok && rel_change < options.tol_loglik {
            return Ok(NewtonOutcome {
                params,
                derivatives: d,
                iterations: iteration,
                converged: true,
            });
        }

        let slope = d.gradient.dot(&dir);
        // Once the predicted gain is below the rounding noise of the summed
        // log-likelihood the line search cannot discriminate; the quadratic
        // model is the better guide there.
        let resolvable = slope > 1e3 * f64::EPSILON * scale;
        let mut t = 1.0;
        let accepted = loop {
            if !resolvable {
                break Some(&params + &dir);
            }
            let trial = &params + &dir * t;
            if let Some(ll) = loglik_at(&trial, input) {
                if ll >= d.loglik + options.armijo * t * slope {
                    break Some(trial);
                }
            }
            t *= 0.5;
            if t < 1e-14 {
                break None;
            }
        };

        let Some(next) = accepted else {
            // No further ascent is representable; accept if already stationary.
            return Ok(NewtonOutcome {
                params,
                derivatives: d,
                iterations: iteration,
                converged: grad_ok,
            });
        };
        let (beta, theta) = split(&next);
        let next_d = nb2_derivatives(beta, theta, input)?;
        rel_change = (next_d.loglik - d.loglik).abs() / scale;
        params = next;
        d = next_d;
    }
    Ok(NewtonOutcome {
        params,
        derivatives: d,
        iterations: options.max_iter,
        converged: false,
    })
}

/// Fits the NB2 model. Standard errors come from the inverse observed
/// information over `(beta, ln alpha)`; the beta block is reported.
pub fn nb2_fit(input: &RegressionInput, options: &FitOptions) -> Result<FitResult, NbrmError> {
    let n = input.n_obs();
    let p = input.n_params();
    if n <= p + 1 {
        return Err(NbrmError::TooFewObservations {
            n_obs: n,
            n_params: p + 1,
        });
    }
    input.check_constant_columns()?;
    check_rank(input)?;

    let beta0 = poisson_irls(input).unwrap_or_else(|| {
        let ybar = input.y().iter().sum::<u64>() as f64 / n as f64;
        let mut b = DVector::zeros(p);
        if let Some(j) = (0..p).find(|&j| input.is_intercept(j)) {
            b[j] = (ybar + 0.1).ln();
        }
        b
    });
    let alpha0 = moment_alpha(input, &beta0);
    let mut start = DVector::zeros(p + 1);
    start.rows_mut(0, p).copy_from(&beta0);
    start[p] = alpha0.ln();

    let outcome = newton(input, start, options)?;
    let beta: Vec<f64> = outcome.params.as_slice()[..p].to_vec();
    let alpha = outcome.params[p].exp();
    let loglik = outcome.derivatives.loglik;

    let covariance = (-&outcome.derivatives.hessian)
        .cholesky()
        .map(|c| c.inverse());
    let se: Vec<f64> = match &covariance {
        Some(cov) => (0..p).map(|k| cov[(k, k)].sqrt()).collect(),
        None => vec![f64::NAN; p],
    };
    let wald = wald_stats(&beta, &se);
    let mut result = FitResult {
        columns: input.columns().to_vec(),
        pct_change: beta.iter().map(|&b| percent_change(b)).collect(),
        beta,
        alpha,
        se,
        z: wald.z,
        p: wald.p,
        stars: wald.stars.iter().map(|s| s.to_string()).collect(),
        loglik,
        loglik_null: None,
        pseudo_r2: None,
        n_obs: n,
        converged: outcome.converged,
        iterations: outcome.iterations,
    };

    if !outcome.converged {
        return Err(NbrmError::NotConverged {
            iterations: outcome.iterations,
            partial: Box::new(result),
        });
    }
    if covariance.is_none() {
        return Err(NbrmError::IndefiniteHessian);
    }

    if options.null_model {
        let null_options = FitOptions {
            null_model: false,
            ..*options
        };
        match nb2_fit(&input.null_model(), &null_options) {
            Ok(null) => {
                result.loglik_null = Some(null.loglik);
                result.pseudo_r2 = pseudo_r2(loglik, null.loglik).ok();
            }
            Err(e) => log::warn!("intercept-only fit failed: {e}"),
        }
    }
    Ok(result)
}
