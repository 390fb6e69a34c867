//! Non-smooth terms `h(x)`: values, subgradient oracles and a sampled
//! epsilon-subgradient membership test.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, invalid, Error, Result};
use crate::numerics::{seeded_rng, singular_values, svd, DenseMatrix, DenseVector};

/// A non-smooth term of a composite objective.
pub trait Regularizer {
    fn name(&self) -> &'static str;

    fn value(&self, x: &DenseVector) -> Result<f64>;

    /// Whether `h` is convex; the epsilon-subgradient test only applies then.
    fn is_convex(&self) -> bool;

    /// One member of the subdifferential at `x`.
    fn subgradient(&self, x: &DenseVector) -> Result<DenseVector>;
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be non-negative, got {v}")))
    }
}

/// `h = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroRegularizer;

impl Regularizer for ZeroRegularizer {
    fn name(&self) -> &'static str {
        "none"
    }

    fn value(&self, _x: &DenseVector) -> Result<f64> {
        Ok(0.0)
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn subgradient(&self, x: &DenseVector) -> Result<DenseVector> {
        Ok(DenseVector::zeros(x.len()))
    }
}

/// `λ‖x‖₁`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Penalty {
    pub lambda: f64,
}

impl L1Penalty {
    pub fn new(lambda: f64) -> Result<Self> {
        check_non_negative("lambda", lambda)?;
        Ok(Self { lambda })
    }
}

impl Regularizer for L1Penalty {
    fn name(&self) -> &'static str {
        "l1"
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        Ok(self.lambda * x.norm_l1())
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn subgradient(&self, x: &DenseVector) -> Result<DenseVector> {
        Ok(x.map(|v| self.lambda * sign(v)))
    }
}

/// Ascending magnitude rank of each coordinate: `order[j] = o(j) ∈ 1..=N`, so
/// that `o(j₁) < o(j₂)` implies `|x_{j₁}| ≤ |x_{j₂}|`. Ties are broken by
/// coordinate index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MagnitudeOrder {
    order: Vec<usize>,
}

impl MagnitudeOrder {
    pub fn of(x: &[f64]) -> Self {
        let ascending = ascending_by_magnitude(x);
        let mut order = vec![0; x.len()];
        for (rank, &j) in ascending.iter().enumerate() {
            order[j] = rank + 1;
        }
        Self { order }
    }

    /// `o(j)`, one-based.
    pub fn rank(&self, j: usize) -> usize {
        self.order[j]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }
}

/// Coordinate indices sorted by ascending `|x_j|`, ties by index.
pub(crate) fn ascending_by_magnitude(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()).then(a.cmp(&b)));
    idx
}

/// OSCAR: `λ₁‖x‖₁ + λ₂ Σ_{i<j} max(|x_i|, |x_j|)`.
///
/// Equivalently a sorted-weight norm `Σ_j (λ₁ + λ₂(o(j) − 1)) |x_j|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscarPenalty {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl OscarPenalty {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        check_non_negative("lambda1", lambda1)?;
        check_non_negative("lambda2", lambda2)?;
        Ok(Self { lambda1, lambda2 })
    }

    /// Weight attached to the coordinate of ascending rank `rank` (one-based).
    pub fn weight(&self, rank: usize) -> f64 {
        self.lambda1 + self.lambda2 * (rank as f64 - 1.0)
    }

    /// Weights `λ₁ + λ₂(i − 1)`, `i = 1..=n`, ascending.
    pub fn weights_ascending(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|i| self.weight(i)).collect()
    }

    pub fn oscar_value(&self, x: &[f64]) -> f64 {
        ascending_by_magnitude(x)
            .iter()
            .enumerate()
            .map(|(rank, &j)| self.weight(rank + 1) * x[j].abs())
            .sum()
    }

    /// Subgradient with entry `j = (λ₁ + λ₂(o(j) − 1)) sign(x_j)`, `sign(0) = 0`.
    pub fn oscar_subgradient(&self, x: &[f64]) -> Vec<f64> {
        let order = MagnitudeOrder::of(x);
        x.iter()
            .enumerate()
            .map(|(j, &v)| self.weight(order.rank(j)) * sign(v))
            .collect()
    }
}

impl Regularizer for OscarPenalty {
    fn name(&self) -> &'static str {
        "oscar"
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        Ok(self.oscar_value(x.as_slice()))
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn subgradient(&self, x: &DenseVector) -> Result<DenseVector> {
        Ok(DenseVector::from_fn(x.len(), {
            let s = self.oscar_subgradient(x.as_slice());
            move |j| s[j]
        }))
    }
}

/// Relative threshold below which singular values of `X Diag(x)` are treated as zero.
pub const TRACE_LASSO_RANK_TOL: f64 = 1e-10;

/// Trace Lasso `λ‖X Diag(x)‖_*`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLassoPenalty {
    pub lambda: f64,
    design: DenseMatrix,
    /// `C = Σ Vᵀ` from the thin SVD of `X`. `CᵀC = XᵀX`, so `C Diag(x)` has the
    /// singular values and right singular vectors of `X Diag(x)` while having at
    /// most `min(l, N)` rows.
    core: DenseMatrix,
}

impl TraceLassoPenalty {
    pub fn new(lambda: f64, design: DenseMatrix) -> Result<Self> {
        check_non_negative("lambda", lambda)?;
        let f = svd(&design);
        let core = f.v.transpose();
        let core = DenseMatrix::from_fn(core.rows(), core.cols(), |k, j| {
            f.singular_values[k] * core[(k, j)]
        });
        Ok(Self { lambda, design, core })
    }

    pub fn design(&self) -> &DenseMatrix {
        &self.design
    }

    pub(crate) fn core(&self) -> &DenseMatrix {
        &self.core
    }

    pub fn tracelasso_value(&self, x: &DenseVector) -> Result<f64> {
        check_dim(self.design.cols(), x.len())?;
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        let b = self.core.scale_columns(x.as_slice())?;
        Ok(self.lambda * singular_values(&b).iter().sum::<f64>())
    }

    /// `λ Diag(X^T U V^T)`, the member of the subdifferential with `M = 0`, where
    /// `U, V` span the singular directions above the numerical-rank threshold.
    pub fn tracelasso_subgradient(&self, x: &DenseVector) -> Result<DenseVector> {
        check_dim(self.design.cols(), x.len())?;
        Ok(DenseVector::from_vec_unchecked(self.value_and_subgradient(x.as_slice())?.1))
    }

    /// Value and subgradient from a single SVD.
    pub(crate) fn value_and_subgradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = self.design.cols();
        if self.lambda == 0.0 {
            return Ok((0.0, vec![0.0; d]));
        }
        // X = U_x C, so X Diag(x) = U_x (C Diag(x)) and X^T U V^T = C^T U_c V^T.
        let b = self.core.scale_columns(x)?;
        let f = svd(&b);
        let value = self.lambda * f.singular_values.iter().sum::<f64>();
        let smax = f.singular_values.first().copied().unwrap_or(0.0);
        let mut out = vec![0.0; d];
        for (k, &sk) in f.singular_values.iter().enumerate() {
            if !(sk > TRACE_LASSO_RANK_TOL * smax && sk > 0.0) {
                break;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let ctu: f64 = (0..self.core.rows()).map(|i| self.core[(i, j)] * f.u[(i, k)]).sum();
                *o += self.lambda * ctu * f.v[(j, k)];
            }
        }
        Ok((value, out))
    }
}

impl Regularizer for TraceLassoPenalty {
    fn name(&self) -> &'static str {
        "tracelasso"
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        self.tracelasso_value(x)
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn subgradient(&self, x: &DenseVector) -> Result<DenseVector> {
        self.tracelasso_subgradient(x)
    }
}

/// `rank(X) ≤ r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankConstraint {
    pub r: usize,
}

impl RankConstraint {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(invalid("rank bound must be at least 1"));
        }
        Ok(Self { r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

/// Feasible iff the `(r+1)`-th singular value of `x` is at most `tol`.
pub fn rank_indicator(c: &RankConstraint, x: &DenseMatrix, tol: f64) -> Feasibility {
    let s = singular_values(x);
    match s.get(c.r) {
        Some(&next) if next > tol => Feasibility::Infeasible,
        _ => Feasibility::Feasible,
    }
}

/// Outcome of a sampled epsilon-subgradient test.
#[derive(Debug, Clone, PartialEq)]
pub enum SubgradientCheck {
    /// No sampled point violated the inequality.
    Pass,
    /// `witness` violates `h(y) ≥ h(x) + ⟨d, y − x⟩ − ε` by `violation`.
    Fail { witness: DenseVector, violation: f64 },
}

impl SubgradientCheck {
    pub fn passed(&self) -> bool {
        matches!(self, SubgradientCheck::Pass)
    }
}

/// Radii at which the test samples around `x`.
const CHECK_RADII: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0];

/// Samples `n_samples` Gaussian points around `x` at several radii and checks
/// `h(y) ≥ h(x) + ⟨d, y − x⟩ − ε` at each. A pass is evidence of membership
/// `d ∈ ∂_ε h(x)`; a failure returns the most violating sample as a certificate.
pub fn epsilon_subgradient_check(
    h: &dyn Regularizer,
    x: &DenseVector,
    d: &DenseVector,
    eps: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SubgradientCheck> {
    if !h.is_convex() {
        return Err(Error::UnsupportedRegularizer(format!(
            "{} is not convex; epsilon-subdifferentials are undefined",
            h.name()
        )));
    }
    check_dim(x.len(), d.len())?;
    if eps.is_nan() || eps < 0.0 {
        return Err(invalid(format!("eps must be non-negative, got {eps}")));
    }
    let hx = h.value(x)?;
    let mut rng = seeded_rng(seed);
    let mut worst: Option<(DenseVector, f64)> = None;
    for s in 0..n_samples {
        let radius = CHECK_RADII[s % CHECK_RADII.len()];
        let step = DenseVector::from_fn(x.len(), |_| {
            radius * Distribution::<f64>::sample(&StandardNormal, &mut rng)
        });
        let y = x + &step;
        let hy = h.value(&y)?;
        let lower = hx + d.dot(&step) - eps;
        // Relative slack absorbs rounding in the two evaluations of h.
        let slack = 1e-12 * (1.0 + hy.abs() + lower.abs());
        let violation = lower - hy;
        if violation > slack && worst.as_ref().is_none_or(|(_, w)| violation > *w) {
            worst = Some((y, violation));
        }
    }
    Ok(match worst {
        None => SubgradientCheck::Pass,
        Some((witness, violation)) => SubgradientCheck::Fail { witness, violation },
    })
}
