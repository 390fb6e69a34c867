use super::dual::{self, scaled_dual_value, SupportOracle};
use super::{check_eps, check_gamma, subproblem_value, InnerOptions, ProxResult, WarmStart};
use crate::error::{check_dim, invalid, Result};
use crate::numerics::DenseVector;
use crate::regularizers::OscarPenalty;

/// Exact OSCAR proximal operator.
///
/// Sort `|y|` descending, subtract the matching weights `γ(λ₁ + λ₂(N − i))`,
/// project onto non-increasing sequences by pool-adjacent-violators, clamp at
/// zero, then restore signs and positions.
pub fn prox_oscar_exact(y: &DenseVector, gamma: f64, p: &OscarPenalty) -> Result<DenseVector> {
    check_gamma(gamma)?;
    let n = y.len();
    let mut desc: Vec<usize> = (0..n).collect();
    desc.sort_by(|&a, &b| y[b].abs().total_cmp(&y[a].abs()).then(a.cmp(&b)));

    // (sum, count) blocks; block means must be non-increasing.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, &j) in desc.iter().enumerate() {
        let weight = gamma * p.weight(n - i);
        blocks.push((y[j].abs() - weight, 1));
        while blocks.len() >= 2 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 <= s1 / c1 as f64 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    let mut out = vec![0.0; n];
    let mut pos = 0;
    for (sum, count) in blocks {
        let level = (sum / count as f64).max(0.0);
        for &j in &desc[pos..pos + count] {
            out[j] = y[j].signum() * level;
        }
        pos += count;
    }
    DenseVector::new(out)
}

/// Dual norm of the OSCAR penalty,
/// `r*(ξ) = max_j Σ_{i≤j} |ξ|_(i) / Σ_{i≤j} w_(i)` with both `|ξ|` and the weights
/// sorted in descending order.
pub fn oscar_dual_norm(xi: &[f64], p: &OscarPenalty) -> Result<f64> {
    if p.lambda1 == 0.0 && p.lambda2 == 0.0 {
        return Err(invalid("OSCAR dual norm is undefined when lambda1 = lambda2 = 0"));
    }
    let n = xi.len();
    let mut mags: Vec<f64> = xi.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut num = 0.0;
    let mut den = 0.0;
    let mut best = 0.0f64;
    for (i, m) in mags.iter().enumerate() {
        num += m;
        den += p.weight(n - i);
        if den > 0.0 {
            best = best.max(num / den);
        } else if num > 0.0 {
            // Leading weight is zero only when λ₁ = 0; the ratio is unbounded.
            best = f64::INFINITY;
        }
    }
    Ok(best)
}

/// Dual value `Q̃(α) = −γ‖α‖²/2 − ⟨α, y⟩` at `α = min(1, 1/r*(ξ)) ξ`, where
/// `ξ = (x − y)/γ` is the gradient of the quadratic part at `x`.
pub fn oscar_dual_value(x: &DenseVector, anchor: &DenseVector, gamma: f64, p: &OscarPenalty) -> Result<f64> {
    check_dim(anchor.len(), x.len())?;
    check_gamma(gamma)?;
    let xi: Vec<f64> = x.iter().zip(anchor.iter()).map(|(a, b)| (a - b) / gamma).collect();
    let r = oscar_dual_norm(&xi, p)?;
    Ok(scaled_dual_value(x.as_slice(), anchor.as_slice(), gamma, r))
}

/// Duality gap `Q(x) − Q̃(α)` of the OSCAR proximal subproblem at `x`; an upper
/// bound on `Q(x) − min Q`.
pub fn oscar_dual_gap(x: &DenseVector, anchor: &DenseVector, gamma: f64, p: &OscarPenalty) -> Result<f64> {
    let dual = oscar_dual_value(x, anchor, gamma, p)?;
    let primal = subproblem_value(x, anchor, gamma, p.oscar_value(x.as_slice()));
    Ok((primal - dual).max(0.0))
}

struct OscarOracle(OscarPenalty);

impl SupportOracle for OscarOracle {
    fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.0.oscar_value(x), self.0.oscar_subgradient(x)))
    }

    fn scaled_dual_bound(&self, x: &[f64], anchor: &[f64], gamma: f64) -> Option<f64> {
        let xi: Vec<f64> = x.iter().zip(anchor).map(|(a, b)| (a - b) / gamma).collect();
        let r = oscar_dual_norm(&xi, &self.0).ok()?;
        Some(scaled_dual_value(x, anchor, gamma, r))
    }
}

/// Inexact OSCAR proximal operator by subgradient iterations on the subproblem,
/// stopped once the duality gap certificate drops to `eps_target`. Returns the
/// best iterate; a result with `converged == false` exhausted `opts.max_inner`.
pub fn prox_oscar_inexact(
    y: &DenseVector,
    gamma: f64,
    p: &OscarPenalty,
    eps_target: f64,
    opts: &InnerOptions,
    warm: &WarmStart,
) -> Result<ProxResult> {
    check_gamma(gamma)?;
    check_eps(eps_target)?;
    if p.lambda1 == 0.0 && p.lambda2 == 0.0 {
        return Ok(ProxResult::exact(y.clone()));
    }
    dual::solve(&OscarOracle(*p), y, gamma, eps_target, opts, warm)
}
