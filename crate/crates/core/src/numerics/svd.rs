//! Singular value decompositions.
//!
//! The exact path is a one-sided (Hestenes) Jacobi SVD, which is deterministic and
//! accurate to working precision for the desk-scale dense matrices used here. The
//! approximate path is seeded subspace (power) iteration with a Rayleigh-Ritz step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::DenseMatrix;
use super::vector::dot;
use crate::error::{invalid, Result};

const MAX_SWEEPS: usize = 80;

/// Top singular triplets of a matrix: `A ≈ U Diag(s) V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `rows x r`, orthonormal columns.
    pub u: DenseMatrix,
    /// Non-negative, non-increasing.
    pub singular_values: Vec<f64>,
    /// `cols x r`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U Diag(s) V^T`
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, r) = self.u.shape();
        let n = self.v.rows();
        let mut out = vec![0.0; m * n];
        for k in 0..r {
            let s = self.singular_values[k];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let uis = self.u[(i, k)] * s;
                if uis == 0.0 {
                    continue;
                }
                let row = &mut out[i * n..(i + 1) * n];
                for (j, o) in row.iter_mut().enumerate() {
                    *o += uis * self.v[(j, k)];
                }
            }
        }
        DenseMatrix::from_vec_unchecked(m, n, out)
    }
}

/// Thin SVD of `a` via one-sided Jacobi: returns columns of `U` and `V` and the
/// singular values, all `min(rows, cols)` of them, sorted non-increasing.
fn jacobi_thin(a: &DenseMatrix) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let (m, n) = a.shape();
    if m < n {
        let (v, s, u) = jacobi_thin(&a.transpose());
        return (u, s, v);
    }
    // m >= n: orthogonalize the n columns of A.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let smax = order.first().map_or(0.0, |&i| sigma[i]);
    let negligible = smax * f64::EPSILON * (m as f64);
    let mut u_cols = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    let mut s_sorted = Vec::with_capacity(n);
    for &j in &order {
        let s = sigma[j];
        if s > negligible && s > 0.0 {
            u_cols.push(w[j].iter().map(|x| x / s).collect::<Vec<_>>());
            s_sorted.push(s);
        } else {
            // Left vector is undefined; completed below.
            u_cols.push(vec![0.0; m]);
            s_sorted.push(0.0);
        }
        v_cols.push(std::mem::take(&mut v[j]));
    }
    orthonormalize_columns(&mut u_cols, m);
    orthonormalize_columns(&mut v_cols, n);
    (u_cols, s_sorted, v_cols)
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns that are
/// (numerically) dependent on their predecessors are replaced by the first
/// standard basis vector that is not, so the result is always orthonormal.
pub(crate) fn orthonormalize_columns(cols: &mut [Vec<f64>], dim: usize) {
    let mut next_basis = 0usize;
    for k in 0..cols.len() {
        let original = dot(&cols[k], &cols[k]).sqrt();
        let mut norm = project_out(cols, k);
        if original == 0.0 || norm <= 1e-10 * original {
            loop {
                assert!(next_basis < dim, "cannot complete an orthonormal basis");
                let mut e = vec![0.0; dim];
                e[next_basis] = 1.0;
                next_basis += 1;
                cols[k] = e;
                norm = project_out(cols, k);
                if norm > 1e-6 {
                    break;
                }
            }
        }
        for x in cols[k].iter_mut() {
            *x /= norm;
        }
    }
}

fn project_out(cols: &mut [Vec<f64>], k: usize) -> f64 {
    let (done, rest) = cols.split_at_mut(k);
    let c = &mut rest[0];
    for _ in 0..2 {
        for prev in done.iter() {
            let proj = dot(prev, c);
            for (x, p) in c.iter_mut().zip(prev) {
                *x -= proj * p;
            }
        }
    }
    dot(c, c).sqrt()
}

/// Flips each triplet so the largest-magnitude entry of its `U` column is
/// non-negative (first such entry on ties).
fn apply_sign_convention(u_cols: &mut [Vec<f64>], v_cols: &mut [Vec<f64>]) {
    for (u, v) in u_cols.iter_mut().zip(v_cols.iter_mut()) {
        let mut best = 0usize;
        for (i, x) in u.iter().enumerate() {
            if x.abs() > u[best].abs() {
                best = i;
            }
        }
        if u.get(best).is_some_and(|&x| x < 0.0) {
            u.iter_mut().for_each(|x| *x = -*x);
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn check_rank(a: &DenseMatrix, r: usize) -> Result<()> {
    let max_rank = a.rows().min(a.cols());
    if r == 0 || r > max_rank {
        return Err(invalid(format!(
            "rank {r} must satisfy 1 <= r <= min(rows, cols) = {max_rank}"
        )));
    }
    Ok(())
}

/// All `min(rows, cols)` singular values, non-increasing.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Vec::new();
    }
    jacobi_thin(a).1
}

/// Full thin SVD (`r = min(rows, cols)`).
pub fn svd(a: &DenseMatrix) -> SvdFactors {
    let r = a.rows().min(a.cols());
    let (mut u, s, mut v) = jacobi_thin(a);
    apply_sign_convention(&mut u, &mut v);
    SvdFactors {
        u: DenseMatrix::from_columns(a.rows(), &u[..r]),
        singular_values: s,
        v: DenseMatrix::from_columns(a.cols(), &v[..r]),
    }
}

/// Top-`r` singular triplets computed from the exact (Jacobi) SVD.
pub fn truncated_svd_exact(a: &DenseMatrix, r: usize) -> Result<SvdFactors> {
    check_rank(a, r)?;
    let (mut u, s, mut v) = jacobi_thin(a);
    u.truncate(r);
    v.truncate(r);
    apply_sign_convention(&mut u, &mut v);
    Ok(SvdFactors {
        u: DenseMatrix::from_columns(a.rows(), &u),
        singular_values: s[..r].to_vec(),
        v: DenseMatrix::from_columns(a.cols(), &v),
    })
}

/// Seeded Gaussian `cols x r` start block for subspace iteration.
pub fn gaussian_start(cols: usize, r: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(cols, r, |_, _| StandardNormal.sample(&mut rng))
}

/// Approximate top-`r` triplets by `power_iters` sweeps of subspace iteration from
/// a seeded Gaussian start.
pub fn truncated_svd_power(
    a: &DenseMatrix,
    r: usize,
    power_iters: usize,
    seed: u64,
) -> Result<SvdFactors> {
    check_rank(a, r)?;
    if power_iters == 0 {
        return Err(invalid("power_iters must be positive"));
    }
    truncated_svd_power_from(a, power_iters, &gaussian_start(a.cols(), r, seed))
}

/// Subspace iteration from an explicit `cols x r` start block (used for warm
/// starts). Each sweep re-orthonormalizes both blocks, then a Rayleigh-Ritz step
/// on `P^T A Q` produces the triplets.
pub fn truncated_svd_power_from(
    a: &DenseMatrix,
    power_iters: usize,
    start: &DenseMatrix,
) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    let r = start.cols();
    check_rank(a, r)?;
    if start.rows() != n {
        return Err(invalid(format!(
            "start block has {} rows, expected {n}",
            start.rows()
        )));
    }
    let at = a.transpose();
    let mut q: Vec<Vec<f64>> = (0..r).map(|k| start.column(k)).collect();
    orthonormalize_columns(&mut q, n);
    let mut p: Vec<Vec<f64>> = apply_to_columns(a, &q);
    orthonormalize_columns(&mut p, m);
    for _ in 0..power_iters {
        q = apply_to_columns(&at, &p);
        orthonormalize_columns(&mut q, n);
        p = apply_to_columns(a, &q);
        orthonormalize_columns(&mut p, m);
    }
    // Rayleigh-Ritz: B = P^T A Q (r x r).
    let aq = apply_to_columns(a, &q);
    let b = DenseMatrix::from_fn(r, r, |i, j| dot(&p[i], &aq[j]));
    let (ub, s, vb) = jacobi_thin(&b);
    let mut u_cols: Vec<Vec<f64>> = ub.iter().map(|c| combine(&p, c, m)).collect();
    let mut v_cols: Vec<Vec<f64>> = vb.iter().map(|c| combine(&q, c, n)).collect();
    orthonormalize_columns(&mut u_cols, m);
    orthonormalize_columns(&mut v_cols, n);
    apply_sign_convention(&mut u_cols, &mut v_cols);
    Ok(SvdFactors {
        u: DenseMatrix::from_columns(m, &u_cols),
        singular_values: s,
        v: DenseMatrix::from_columns(n, &v_cols),
    })
}

fn apply_to_columns(a: &DenseMatrix, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cols.iter()
        .map(|c| (0..a.rows()).map(|i| dot(a.row(i), c)).collect())
        .collect()
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (b, &c) in basis.iter().zip(coeffs) {
        for (o, x) in out.iter_mut().zip(b) {
            *o += c * x;
        }
    }
    out
}

/// `‖A‖₂²`, the largest eigenvalue of `A^T A`, by power iteration.
pub fn spectral_norm_sq(a: &DenseMatrix) -> f64 {
    let (m, n) = a.shape();
    if m == 0 || n == 0 || a.max_abs() == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    let mut stable = 0;
    for _ in 0..50_000 {
        let w: Vec<f64> = (0..m).map(|i| dot(a.row(i), &v)).collect();
        let next = dot(&w, &w);
        let mut z = vec![0.0; n];
        for (i, wi) in w.iter().enumerate() {
            for (zj, aij) in z.iter_mut().zip(a.row(i)) {
                *zj += aij * wi;
            }
        }
        let nz = dot(&z, &z).sqrt();
        if nz == 0.0 {
            return next;
        }
        z.iter_mut().for_each(|x| *x /= nz);
        v = z;
        if (next - lambda).abs() <= 1e-15 * next {
            stable += 1;
            if stable >= 3 {
                return next.max(lambda);
            }
        } else {
            stable = 0;
        }
        lambda = next;
    }
    lambda
}
