use super::{check_eps, check_gamma, InnerOptions, ProxResult, ProximalTerm, WarmStart};
use crate::error::{invalid, Error, Result};
use crate::numerics::{
    gaussian_start, singular_values, svd, truncated_svd_power_from, DenseMatrix, DenseVector,
    SvdFactors,
};
use crate::regularizers::{RankConstraint, Regularizer};

/// Largest matrix (in entries) for which power-mode results are certified
/// against an exact SVD reference.
pub const EXACT_REFERENCE_LIMIT: usize = 500 * 500;

/// How the rank-`r` projection is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankProxMode {
    Exact,
    Power { iters: usize, seed: u64 },
}

fn check_rank(y: &DenseMatrix, r: usize) -> Result<()> {
    let max_rank = y.rows().min(y.cols());
    if r == 0 || r > max_rank {
        return Err(invalid(format!(
            "rank {r} must satisfy 1 <= r <= min(rows, cols) = {max_rank}"
        )));
    }
    Ok(())
}

fn negligible(singular: &[f64], r: usize) -> bool {
    let top = singular.first().copied().unwrap_or(0.0);
    singular.get(r).is_none_or(|&s| s <= 1e-12 * top)
}

fn truncate(f: SvdFactors, r: usize) -> SvdFactors {
    let keep = |m: &DenseMatrix| DenseMatrix::from_fn(m.rows(), r, |i, k| m[(i, k)]);
    SvdFactors {
        u: keep(&f.u),
        singular_values: f.singular_values[..r].to_vec(),
        v: keep(&f.v),
    }
}

/// Projection onto `{X : rank(X) ≤ r}` in Frobenius norm, i.e. the minimizer of
/// `‖X − Y‖²_F` over the constraint set.
///
/// In power mode `certified_eps = ‖Y − X_power‖²_F − ‖Y − X_exact‖²_F` whenever
/// `Y` has at most [`EXACT_REFERENCE_LIMIT`] entries; above that the sum of
/// squared singular-triplet residuals of the power subspace is reported instead
/// and the result is flagged `heuristic`.
pub fn prox_rank(y: &DenseMatrix, r: usize, mode: RankProxMode) -> Result<ProxResult<DenseMatrix>> {
    check_rank(y, r)?;
    match mode {
        RankProxMode::Exact => {
            let f = svd(y);
            if negligible(&f.singular_values, r) {
                return Ok(ProxResult::exact(y.clone()));
            }
            Ok(ProxResult::exact(truncate(f, r).reconstruct()))
        }
        RankProxMode::Power { iters, seed } => {
            if iters == 0 {
                return Err(invalid("power mode needs at least one iteration"));
            }
            prox_rank_from(y, iters, &gaussian_start(y.cols(), r, seed))
        }
    }
}

/// Power-mode rank projection started from the `cols x r` block `start`.
pub fn prox_rank_from(y: &DenseMatrix, iters: usize, start: &DenseMatrix) -> Result<ProxResult<DenseMatrix>> {
    let r = start.cols();
    check_rank(y, r)?;
    let f = truncated_svd_power_from(y, iters, start)?;
    let approx = f.reconstruct();
    let warm = WarmStart::Subspace(f.v.clone());
    let (certified_eps, heuristic) = if y.rows() * y.cols() <= EXACT_REFERENCE_LIMIT {
        let s = singular_values(y);
        if negligible(&s, r) {
            let mut out = ProxResult::exact(y.clone());
            out.inner_iters = iters;
            out.warm = warm;
            return Ok(out);
        }
        let optimal_residual: f64 = s[r..].iter().map(|v| v * v).sum();
        let residual = y.frobenius_distance_sq(&approx);
        ((residual - optimal_residual).max(0.0), false)
    } else {
        (triplet_residual(y, &f), true)
    };
    Ok(ProxResult {
        point: approx,
        certified_eps,
        inner_iters: iters,
        gap_history: vec![certified_eps],
        converged: true,
        heuristic,
        warm,
    })
}

/// `Σ_k ‖A v_k − σ_k u_k‖² + ‖A^T u_k − σ_k v_k‖²`.
fn triplet_residual(a: &DenseMatrix, f: &SvdFactors) -> f64 {
    let mut total = 0.0;
    for k in 0..f.rank() {
        let s = f.singular_values[k];
        let v = DenseVector::from_vec_unchecked(f.v.column(k));
        let u = DenseVector::from_vec_unchecked(f.u.column(k));
        let av = a.matvec(&v).expect("shapes agree");
        let atu = a.matvec_transpose(&u).expect("shapes agree");
        total += av.distance_sq(&u.scaled(s)) + atu.distance_sq(&v.scaled(s));
    }
    total
}

/// The rank constraint acting on a row-major flattened `rows x cols` variable,
/// so the vector solvers can drive matrix problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixRankConstraint {
    pub constraint: RankConstraint,
    pub rows: usize,
    pub cols: usize,
    /// Power iterations per inexact proximal call.
    pub power_iters: usize,
}

impl MatrixRankConstraint {
    pub fn new(constraint: RankConstraint, rows: usize, cols: usize, power_iters: usize) -> Result<Self> {
        if constraint.r > rows.min(cols) {
            return Err(invalid(format!(
                "rank {} exceeds min({rows}, {cols})",
                constraint.r
            )));
        }
        if power_iters == 0 {
            return Err(invalid("power_iters must be positive"));
        }
        Ok(Self { constraint, rows, cols, power_iters })
    }

    fn reshape(&self, x: &DenseVector) -> Result<DenseMatrix> {
        DenseMatrix::from_vector(self.rows, self.cols, x)
    }
}

impl Regularizer for MatrixRankConstraint {
    fn name(&self) -> &'static str {
        "rank"
    }

    /// Indicator: `0` when feasible (within `1e-9` relative), `+∞` otherwise.
    fn value(&self, x: &DenseVector) -> Result<f64> {
        let s = singular_values(&self.reshape(x)?);
        let tol = 1e-9 * s.first().copied().unwrap_or(0.0).max(1.0);
        Ok(match s.get(self.constraint.r) {
            Some(&next) if next > tol => f64::INFINITY,
            _ => 0.0,
        })
    }

    fn is_convex(&self) -> bool {
        false
    }

    fn subgradient(&self, _x: &DenseVector) -> Result<DenseVector> {
        Err(Error::UnsupportedRegularizer(
            "the rank constraint is non-convex and has no subgradient oracle".into(),
        ))
    }
}

impl ProximalTerm for MatrixRankConstraint {
    fn prox_exact(&self, anchor: &DenseVector, gamma: f64) -> Result<ProxResult> {
        check_gamma(gamma)?;
        let res = prox_rank(&self.reshape(anchor)?, self.constraint.r, RankProxMode::Exact)?;
        Ok(ProxResult::exact(res.point.to_vector()))
    }

    /// Power-mode projection warm-started from the previous right subspace. The
    /// Frobenius certificate is divided by `2γ` to match the subproblem scaling.
    fn prox_inexact(
        &self,
        anchor: &DenseVector,
        gamma: f64,
        eps_target: f64,
        opts: &InnerOptions,
        warm: &WarmStart,
    ) -> Result<ProxResult> {
        check_gamma(gamma)?;
        check_eps(eps_target)?;
        let y = self.reshape(anchor)?;
        let r = self.constraint.r;
        let start = match warm {
            WarmStart::Subspace(v) if v.shape() == (self.cols, r) => v.clone(),
            _ => gaussian_start(self.cols, r, opts.seed),
        };
        let res = prox_rank_from(&y, self.power_iters, &start)?;
        let certified_eps = res.certified_eps / (2.0 * gamma);
        Ok(ProxResult {
            point: res.point.to_vector(),
            certified_eps,
            inner_iters: res.inner_iters,
            gap_history: vec![certified_eps],
            converged: certified_eps <= eps_target,
            heuristic: res.heuristic,
            warm: res.warm,
        })
    }
}
