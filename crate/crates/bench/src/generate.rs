//! Seeded synthetic instances. Every generator is a pure function of its
//! arguments.

use iprox::numerics::seeded_rng;
use iprox::objectives::{ObservedSignMatrix, RegressionDataset};
use iprox::{DenseMatrix, DenseVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// A regression dataset with the coefficients that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    pub dataset: RegressionDataset,
    pub truth: DenseVector,
}

/// Observed signs of a low-rank matrix together with the matrix itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SignInstance {
    pub observed: ObservedSignMatrix,
    pub truth: DenseMatrix,
}

impl SignInstance {
    /// Fraction of unobserved entries whose sign `x` predicts correctly.
    /// Entries where `x` is exactly zero count as wrong.
    pub fn held_out_accuracy(&self, x: &DenseMatrix) -> f64 {
        let n = self.observed.n_users();
        let mut seen = vec![false; n * n];
        for &(i, j, _) in self.observed.observations() {
            seen[i * n + j] = true;
        }
        let (mut hits, mut total) = (0usize, 0usize);
        for i in 0..n {
            for j in 0..n {
                if seen[i * n + j] {
                    continue;
                }
                total += 1;
                if x[(i, j)] * self.truth[(i, j)] > 0.0 {
                    hits += 1;
                }
            }
        }
        if total == 0 {
            1.0
        } else {
            hits as f64 / total as f64
        }
    }
}

fn check_fraction(name: &str, v: f64, allow_zero: bool, allow_one: bool) -> Result<()> {
    let lo = if allow_zero { v >= 0.0 } else { v > 0.0 };
    let hi = if allow_one { v <= 1.0 } else { v < 1.0 };
    if v.is_finite() && lo && hi {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} is out of range")))
    }
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(invalid(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

fn check_noise(noise_sd: f64) -> Result<()> {
    if noise_sd.is_finite() && noise_sd >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("noise_sd must be non-negative, got {noise_sd}")))
    }
}

/// `X x† + noise`, then `round(outlier_frac · n)` targets shifted by
/// `10 · max|target|`.
fn make_targets<R: Rng>(
    rng: &mut R,
    design: &DenseMatrix,
    truth: &DenseVector,
    noise_sd: f64,
    outlier_frac: f64,
) -> Result<DenseVector> {
    let clean = design.matvec(truth)?;
    let mut y: Vec<f64> = clean
        .iter()
        .map(|v| v + noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let n = y.len();
    let n_out = (outlier_frac * n as f64).round() as usize;
    if n_out > 0 {
        let shift = 10.0 * y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        for &i in &idx[..n_out] {
            y[i] += shift;
        }
    }
    Ok(DenseVector::new(y)?)
}

/// Gaussian design with piecewise-constant coefficients over `n_groups`
/// contiguous groups; every odd-numbered group is zero.
pub fn gen_grouped_regression(
    n: usize,
    d: usize,
    n_groups: usize,
    outlier_frac: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<RegressionInstance> {
    check_positive("n", n)?;
    check_positive("d", d)?;
    check_positive("n_groups", n_groups)?;
    if n_groups > d {
        return Err(invalid(format!("n_groups = {n_groups} exceeds d = {d}")));
    }
    check_fraction("outlier_frac", outlier_frac, true, false)?;
    check_noise(noise_sd)?;
    let mut rng = seeded_rng(seed);
    let levels: Vec<f64> = (0..n_groups)
        .map(|g| {
            if g % 2 == 1 {
                0.0
            } else {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * rng.random_range(1.0..3.0)
            }
        })
        .collect();
    let truth = DenseVector::from_fn(d, |j| levels[j * n_groups / d]);
    let design = DenseMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal));
    let targets = make_targets(&mut rng, &design, &truth, noise_sd, outlier_frac)?;
    Ok(RegressionInstance { dataset: RegressionDataset::new(design, targets)?, truth })
}

/// `Z = A Bᵀ/√r` with Gaussian factors, observed through its signs on a uniform
/// subset of `round(obs_frac · n²)` entries. `Z` is rescaled so that every
/// observed entry has magnitude at least `margin`.
pub fn gen_signed_lowrank(
    n_users: usize,
    true_rank: usize,
    obs_frac: f64,
    margin: f64,
    seed: u64,
) -> Result<SignInstance> {
    check_positive("n_users", n_users)?;
    check_positive("true_rank", true_rank)?;
    if true_rank > n_users {
        return Err(invalid(format!("true_rank = {true_rank} exceeds n_users = {n_users}")));
    }
    check_fraction("obs_frac", obs_frac, false, true)?;
    if !(margin.is_finite() && margin > 0.0) {
        return Err(invalid(format!("margin must be positive, got {margin}")));
    }
    let mut rng = seeded_rng(seed);
    let a = DenseMatrix::from_fn(n_users, true_rank, |_, _| rng.sample(StandardNormal));
    let b = DenseMatrix::from_fn(n_users, true_rank, |_, _| rng.sample(StandardNormal));
    let z = a.matmul(&b.transpose())?.scaled(1.0 / (true_rank as f64).sqrt());

    let mut cells: Vec<usize> = (0..n_users * n_users).collect();
    cells.shuffle(&mut rng);
    let n_obs = ((obs_frac * cells.len() as f64).round() as usize).clamp(1, cells.len());
    let mut chosen = cells[..n_obs].to_vec();
    chosen.sort_unstable();

    let smallest = chosen
        .iter()
        .map(|&c| z.as_slice()[c].abs())
        .fold(f64::INFINITY, f64::min);
    if smallest == 0.0 {
        return Err(invalid("an observed entry of the low-rank matrix is exactly zero"));
    }
    let truth = z.scaled((margin / smallest).max(1.0));
    let observations = chosen
        .into_iter()
        .map(|c| {
            let (i, j) = (c / n_users, c % n_users);
            (i, j, if truth[(i, j)] > 0.0 { 1 } else { -1 })
        })
        .collect();
    Ok(SignInstance { observed: ObservedSignMatrix::new(n_users, observations)?, truth })
}

/// Rows drawn with pairwise feature correlation `rho` (one shared Gaussian factor
/// per row), columns normalized to unit length, and `max(1, round(sparsity · d))`
/// non-zero coefficients.
pub fn gen_correlated_design(
    n: usize,
    d: usize,
    rho: f64,
    sparsity: f64,
    noise_sd: f64,
    outlier_frac: f64,
    seed: u64,
) -> Result<RegressionInstance> {
    check_positive("n", n)?;
    check_positive("d", d)?;
    check_fraction("rho", rho, true, false)?;
    check_fraction("sparsity", sparsity, false, true)?;
    check_fraction("outlier_frac", outlier_frac, true, false)?;
    check_noise(noise_sd)?;
    let mut rng = seeded_rng(seed);
    let (shared, own) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut design = DenseMatrix::zeros(n, d);
    for i in 0..n {
        let common: f64 = rng.sample(StandardNormal);
        for j in 0..d {
            let e: f64 = rng.sample(StandardNormal);
            design.as_mut_slice()[i * d + j] = shared * common + own * e;
        }
    }
    let norms: Vec<f64> = (0..d)
        .map(|j| design.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let inv: Vec<f64> = norms.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 }).collect();
    let design = design.scale_columns(&inv)?;

    let k = ((sparsity * d as f64).round() as usize).clamp(1, d);
    let mut support: Vec<usize> = (0..d).collect();
    support.shuffle(&mut rng);
    let mut coef = vec![0.0; d];
    for &j in &support[..k] {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        coef[j] = sign * rng.random_range(1.0..3.0);
    }
    let truth = DenseVector::new(coef)?;
    let targets = make_targets(&mut rng, &design, &truth, noise_sd, outlier_frac)?;
    Ok(RegressionInstance { dataset: RegressionDataset::new(design, targets)?, truth })
}

/// `1.4826 · median(|y − median(y)|)`, falling back to the RMS of `y` when the
/// MAD vanishes and to 1 for an all-zero target.
pub fn robust_scale(y: &DenseVector) -> f64 {
    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
    if y.is_empty() {
        return 1.0;
    }
    let m = median(y.as_slice().to_vec());
    let mad = 1.4826 * median(y.iter().map(|v| (v - m).abs()).collect());
    if mad > 0.0 {
        return mad;
    }
    let rms = (y.norm_sq() / y.len() as f64).sqrt();
    if rms > 0.0 {
        rms
    } else {
        1.0
    }
}
