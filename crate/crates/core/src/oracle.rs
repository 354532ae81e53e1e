//! Exact references and statistical comparators.
//!
//! The linear-Gaussian model has closed-form filtering and smoothing
//! marginals (Kalman filter plus Rauch–Tung–Striebel backward pass); the
//! other models are checked against full-trajectory rejection draws using the
//! z-score and Kolmogorov–Smirnov helpers below.

use crate::density::normal_logpdf;
use crate::error::{Error, Result};
use crate::hmm::Ensemble;
use crate::models::LinearGaussianParams;

/// Gaussian marginals `x_i | data` for `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMarginals {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// `log p(y_{1:n})`.
    pub log_marginal_likelihood: f64,
}

#[derive(Debug, Clone)]
struct ForwardPass {
    filtered: GaussianMarginals,
    predicted_means: Vec<f64>,
    predicted_variances: Vec<f64>,
}

fn forward(p: &LinearGaussianParams, y: &[f64]) -> ForwardPass {
    let n = y.len();
    let q = p.sigma_x * p.sigma_x;
    let r = p.sigma_y * p.sigma_y;
    let mut means = Vec::with_capacity(n + 1);
    let mut vars = Vec::with_capacity(n + 1);
    let mut pred_means = Vec::with_capacity(n + 1);
    let mut pred_vars = Vec::with_capacity(n + 1);
    means.push(p.mu0);
    vars.push(p.sigma0 * p.sigma0);
    pred_means.push(p.mu0);
    pred_vars.push(p.sigma0 * p.sigma0);
    let mut loglik = 0.0;
    for (k, &yi) in y.iter().enumerate() {
        let m_pred = p.a * means[k];
        let v_pred = p.a * p.a * vars[k] + q;
        let s = p.b * p.b * v_pred + r;
        loglik += normal_logpdf(yi, p.b * m_pred, s.sqrt());
        let gain = v_pred * p.b / s;
        means.push(m_pred + gain * (yi - p.b * m_pred));
        vars.push((1.0 - gain * p.b) * v_pred);
        pred_means.push(m_pred);
        pred_vars.push(v_pred);
    }
    ForwardPass {
        filtered: GaussianMarginals {
            means,
            variances: vars,
            log_marginal_likelihood: loglik,
        },
        predicted_means: pred_means,
        predicted_variances: pred_vars,
    }
}

/// Filtering marginals `x_i | y_{1:i}` for every `i`.
pub fn kalman_filter(p: &LinearGaussianParams, y: &[f64]) -> GaussianMarginals {
    forward(p, y).filtered
}

/// `E[x_i | y_{1:i}]`.
pub fn kalman_filter_mean(p: &LinearGaussianParams, y: &[f64], i: usize) -> Result<f64> {
    if i > y.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: y.len() + 1,
        });
    }
    Ok(forward(p, &y[..i]).filtered.means[i])
}

/// Smoothing marginals `x_i | y_{1:n}` for every `i`, plus `log p(y_{1:n})`.
pub fn kalman_smoother(p: &LinearGaussianParams, y: &[f64]) -> GaussianMarginals {
    let fwd = forward(p, y);
    let n = y.len();
    let mut means = fwd.filtered.means.clone();
    let mut vars = fwd.filtered.variances.clone();
    for i in (0..n).rev() {
        let g = fwd.filtered.variances[i] * p.a / fwd.predicted_variances[i + 1];
        means[i] = fwd.filtered.means[i] + g * (means[i + 1] - fwd.predicted_means[i + 1]);
        vars[i] =
            fwd.filtered.variances[i] + g * g * (vars[i + 1] - fwd.predicted_variances[i + 1]);
    }
    GaussianMarginals {
        means,
        variances: vars,
        log_marginal_likelihood: fwd.filtered.log_marginal_likelihood,
    }
}

/// Exact marginals of the windowed rejection sampler's *output* for the
/// linear-Gaussian model at window length `w`.
///
/// Every window draws from a Gaussian conditional whose mean is affine in the
/// retained state before it, so the sampler's marginals follow from one
/// Kalman smoothing pass per window. When `w > n` this is the smoother itself.
pub fn windowed_marginals(
    p: &LinearGaussianParams,
    y: &[f64],
    w: usize,
) -> Result<GaussianMarginals> {
    if w == 0 {
        return Err(Error::InvalidParameter {
            name: "w",
            reason: "window length must be at least 1".into(),
        });
    }
    let n = y.len();
    let full = kalman_smoother(p, y);
    if w > n {
        return Ok(full);
    }
    let first = kalman_smoother(p, &y[..w - 1]);
    let mut means = vec![first.means[0]];
    let mut vars = vec![first.variances[0]];
    for m in 1..=n - w + 1 {
        let window = &y[m - 1..m - 1 + w];
        let pinned = |x_prev: f64| LinearGaussianParams {
            mu0: x_prev,
            sigma0: 0.0,
            ..*p
        };
        let at0 = kalman_smoother(&pinned(0.0), window);
        let at1 = kalman_smoother(&pinned(1.0), window);
        let keep = if m + w - 1 == n { w } else { 1 };
        let (prev_mean, prev_var) = (means[m - 1], vars[m - 1]);
        for k in 1..=keep {
            let slope = at1.means[k] - at0.means[k];
            means.push(at0.means[k] + slope * prev_mean);
            vars.push(at0.variances[k] + slope * slope * prev_var);
        }
    }
    Ok(GaussianMarginals {
        means,
        variances: vars,
        log_marginal_likelihood: full.log_marginal_likelihood,
    })
}

/// What an ensemble's marginal means are compared against.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    /// Exact means; no sampling error on the reference side.
    Exact(&'a GaussianMarginals),
    /// Another sample; its standard error is combined with the ensemble's.
    Sample(&'a Ensemble),
}

/// Per-index `(X̄_i − μ̂_i) / SE_i`.
///
/// `SE_i = S_i / sqrt(N_eff)` for an exact reference and
/// `sqrt(S_i²/N_eff + S_ref,i²/N_ref)` against another sample. A zero standard
/// error with unequal means yields `±inf`.
pub fn mean_z_scores(e: &Ensemble, reference: Reference<'_>) -> Result<Vec<f64>> {
    let len = e.trajectory_len();
    let ref_len = match reference {
        Reference::Exact(g) => g.means.len(),
        Reference::Sample(r) => r.trajectory_len(),
    };
    if len != ref_len {
        return Err(Error::LengthMismatch {
            left: len,
            right: ref_len,
        });
    }
    let n_eff = e.effective_size();
    (0..len)
        .map(|i| {
            let mean = e.marginal_mean(i)?;
            let mut se2 = e.marginal_variance(i)? / n_eff;
            let ref_mean = match reference {
                Reference::Exact(g) => g.means[i],
                Reference::Sample(r) => {
                    se2 += r.marginal_variance(i)? / r.effective_size();
                    r.marginal_mean(i)?
                }
            };
            Ok(z_score(mean - ref_mean, se2.sqrt()))
        })
        .collect()
}

pub(crate) fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample KS critical value at level `alpha`:
/// `c(α) sqrt((n + m) / (n m))` with `c(α) = sqrt(−ln(α/2) / 2)`.
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}
