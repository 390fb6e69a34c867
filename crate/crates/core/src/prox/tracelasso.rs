use super::dual::{self, SupportOracle};
use super::{check_gamma, InnerOptions, InnerStepRule, ProxResult, WarmStart};
use crate::error::{check_dim, Result};
use crate::numerics::{singular_values, svd, DenseMatrix, DenseVector};
use crate::regularizers::TraceLassoPenalty;

struct TraceLassoOracle<'a>(&'a TraceLassoPenalty);

impl SupportOracle for TraceLassoOracle<'_> {
    fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.0.value_and_subgradient(x)
    }
}

/// Inexact trace-Lasso proximal operator.
///
/// With `C` the compressed design (`CᵀC = XᵀX`), the default rule runs ADMM on
/// `Z = C Diag(x)`: a diagonal solve for `x`, singular value thresholding for
/// `Z`. The multiplier `Λ` always satisfies `‖Λ‖₂ ≤ λ`, so `u = diag(CᵀΛ)` is
/// dual feasible and `⟨u, y⟩ − γ‖u‖²/2` bounds `min Q` from below. Both the ADMM
/// iterate and `y − γu` are scored; the certificate is `Q(best) − best bound`.
///
/// The diminishing rule runs plain subgradient steps with the strong-convexity
/// bound.
pub fn prox_tracelasso_inexact(
    y: &DenseVector,
    gamma: f64,
    p: &TraceLassoPenalty,
    eps_target: f64,
    opts: &InnerOptions,
    warm: &WarmStart,
) -> Result<ProxResult> {
    check_gamma(gamma)?;
    check_dim(p.design().cols(), y.len())?;
    if p.lambda == 0.0 || p.core().frobenius_norm_sq() == 0.0 {
        let mut r = ProxResult::exact(y.clone());
        r.gap_history.push(0.0);
        return Ok(r);
    }
    match opts.rule {
        InnerStepRule::PairwiseLineSearch => admm(y, gamma, p, eps_target, opts.max_inner, warm),
        InnerStepRule::Diminishing { .. } => {
            dual::solve(&TraceLassoOracle(p), y, gamma, eps_target, opts, warm)
        }
    }
}

fn admm(
    y: &DenseVector,
    gamma: f64,
    p: &TraceLassoPenalty,
    eps: f64,
    max_inner: usize,
    warm: &WarmStart,
) -> Result<ProxResult> {
    let c = p.core();
    let (k, d) = c.shape();
    let lambda = p.lambda;
    let col_sq: Vec<f64> = (0..d).map(|j| (0..k).map(|i| c[(i, j)].powi(2)).sum()).collect();
    let rho = d as f64 / (gamma * col_sq.iter().sum::<f64>());
    let tau = lambda / rho;
    let value = |x: &[f64]| -> Result<f64> {
        let h = lambda * singular_values(&c.scale_columns(x)?).iter().sum::<f64>();
        let dist: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(dist / (2.0 * gamma) + h)
    };

    // Scaled multiplier W = Λ/ρ.
    let (mut z, mut w) = match warm {
        WarmStart::Split { z, multiplier } if z.shape() == (k, d) && multiplier.shape() == (k, d) => {
            (z.clone(), multiplier.scaled(1.0 / rho))
        }
        _ => (c.scale_columns(y.as_slice())?, DenseMatrix::zeros(k, d)),
    };
    let mut best = (f64::INFINITY, y.as_slice().to_vec());
    let mut lower = f64::NEG_INFINITY;
    let mut history = Vec::new();
    let mut x = vec![0.0; d];
    let mut iters = 0;
    while iters < max_inner {
        iters += 1;
        for (j, xj) in x.iter_mut().enumerate() {
            let pull: f64 = (0..k).map(|i| c[(i, j)] * (z[(i, j)] - w[(i, j)])).sum();
            *xj = (y[j] / gamma + rho * pull) / (1.0 / gamma + rho * col_sq[j]);
        }
        let f = svd(&c.scale_columns(&x)?.add(&w)?);
        let shrunk: Vec<f64> = f.singular_values.iter().map(|s| (s - tau).max(0.0)).collect();
        let clipped: Vec<f64> = f.singular_values.iter().map(|s| s.min(tau)).collect();
        z = f.u.scale_columns(&shrunk)?.matmul(&f.v.transpose())?;
        w = f.u.scale_columns(&clipped)?.matmul(&f.v.transpose())?;

        let u: Vec<f64> = (0..d)
            .map(|j| rho * (0..k).map(|i| c[(i, j)] * w[(i, j)]).sum::<f64>())
            .collect();
        let uy: f64 = u.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        let uu: f64 = u.iter().map(|a| a * a).sum();
        lower = lower.max(uy - 0.5 * gamma * uu);
        let from_dual: Vec<f64> = y.iter().zip(&u).map(|(yi, ui)| yi - gamma * ui).collect();
        let mut here = f64::INFINITY;
        for cand in [&x, &from_dual] {
            let q = value(cand)?;
            here = here.min(q);
            if q < best.0 {
                best = (q, cand.clone());
            }
        }
        history.push((here - lower).max(0.0));
        if best.0 - lower <= eps {
            break;
        }
    }
    let certified_eps = (best.0 - lower).max(0.0);
    Ok(ProxResult {
        point: DenseVector::new(best.1)?,
        certified_eps,
        inner_iters: iters,
        gap_history: history,
        converged: certified_eps <= eps,
        heuristic: false,
        warm: WarmStart::Split { z, multiplier: w.scaled(rho) },
    })
}
