//! Smooth loss terms `g(x)`.
//!
//! Each loss supplies its value, gradient and an upper bound on the Lipschitz
//! constant of the gradient. The solvers refuse to run without that bound.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::error::{check_dim, invalid, Result};
use crate::numerics::{spectral_norm_sq, DenseMatrix, DenseVector};

/// A smooth term of a composite objective.
pub trait SmoothObjective {
    /// Length of the (flattened) variable.
    fn dim(&self) -> usize;

    fn value_and_gradient(&self, x: &DenseVector) -> Result<(f64, DenseVector)>;

    fn value(&self, x: &DenseVector) -> Result<f64> {
        Ok(self.value_and_gradient(x)?.0)
    }

    /// Upper bound on the Lipschitz constant of the gradient, when one is known.
    fn lipschitz(&self) -> Option<f64>;
}

/// Design matrix (`l` samples by `N` features) with its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    design: DenseMatrix,
    targets: DenseVector,
}

impl RegressionDataset {
    pub fn new(design: DenseMatrix, targets: DenseVector) -> Result<Self> {
        if design.rows() != targets.len() {
            return Err(invalid(format!(
                "design has {} rows but there are {} targets",
                design.rows(),
                targets.len()
            )));
        }
        Ok(Self { design, targets })
    }

    pub fn design(&self) -> &DenseMatrix {
        &self.design
    }

    pub fn targets(&self) -> &DenseVector {
        &self.targets
    }

    pub fn n_samples(&self) -> usize {
        self.design.rows()
    }

    pub fn n_features(&self) -> usize {
        self.design.cols()
    }

    /// `y - X x`
    pub fn residuals(&self, x: &DenseVector) -> Result<DenseVector> {
        let fitted = self.design.matvec(x)?;
        Ok(&self.targets - &fitted)
    }

    /// Divides the targets by `scale`, returning the rescaled dataset.
    pub fn with_scaled_targets(&self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid(format!("target scale must be positive, got {scale}")));
        }
        Self::new(self.design.clone(), self.targets.scaled(1.0 / scale))
    }
}

/// Correntropy-induced loss `σ²/2 Σ (1 - exp(-(y_i - X_i x)²/σ²))`.
#[derive(Debug, Clone)]
pub struct CorrentropyLoss {
    dataset: RegressionDataset,
    sigma: f64,
    lipschitz: OnceLock<f64>,
}

impl CorrentropyLoss {
    pub fn new(dataset: RegressionDataset, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!("bandwidth sigma must be positive, got {sigma}")));
        }
        Ok(Self { dataset, sigma, lipschitz: OnceLock::new() })
    }

    pub fn dataset(&self) -> &RegressionDataset {
        &self.dataset
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eval(&self, x: &DenseVector) -> Result<(f64, DenseVector)> {
        check_dim(self.dataset.n_features(), x.len())?;
        let s2 = self.sigma * self.sigma;
        let residuals = self.dataset.residuals(x)?;
        let mut value = 0.0;
        // gradient = X^T w with w_i = −exp(−r_i²/σ²) r_i
        let mut weights = DenseVector::zeros(residuals.len());
        for (w, &r) in weights.as_mut_slice().iter_mut().zip(residuals.iter()) {
            let e = (-r * r / s2).exp();
            value += 0.5 * s2 * (1.0 - e);
            *w = -e * r;
        }
        let gradient = self.dataset.design.matvec_transpose(&weights)?;
        Ok((value, gradient))
    }

    /// `λ_max(X^T X)`: each per-sample term has second derivative bounded by 1 in
    /// magnitude (attained at zero residual).
    pub fn lipschitz(&self) -> f64 {
        *self
            .lipschitz
            .get_or_init(|| spectral_norm_sq(self.dataset.design()))
    }
}

impl SmoothObjective for CorrentropyLoss {
    fn dim(&self) -> usize {
        self.dataset.n_features()
    }

    fn value_and_gradient(&self, x: &DenseVector) -> Result<(f64, DenseVector)> {
        self.eval(x)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(CorrentropyLoss::lipschitz(self))
    }
}

/// `½‖X x − y‖²`
#[derive(Debug, Clone)]
pub struct SquareLoss {
    dataset: RegressionDataset,
    lipschitz: OnceLock<f64>,
}

impl SquareLoss {
    pub fn new(dataset: RegressionDataset) -> Self {
        Self { dataset, lipschitz: OnceLock::new() }
    }

    pub fn dataset(&self) -> &RegressionDataset {
        &self.dataset
    }

    pub fn eval(&self, x: &DenseVector) -> Result<(f64, DenseVector)> {
        check_dim(self.dataset.n_features(), x.len())?;
        let fitted = self.dataset.design.matvec(x)?;
        let r = &fitted - &self.dataset.targets;
        let gradient = self.dataset.design.matvec_transpose(&r)?;
        Ok((0.5 * r.norm_sq(), gradient))
    }

    pub fn lipschitz(&self) -> f64 {
        *self
            .lipschitz
            .get_or_init(|| spectral_norm_sq(self.dataset.design()))
    }
}

impl SmoothObjective for SquareLoss {
    fn dim(&self) -> usize {
        self.dataset.n_features()
    }

    fn value_and_gradient(&self, x: &DenseVector) -> Result<(f64, DenseVector)> {
        self.eval(x)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(SquareLoss::lipschitz(self))
    }
}

/// A square `n_users x n_users` sign matrix observed on a subset of entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSignMatrix {
    n_users: usize,
    observations: Vec<(usize, usize, i8)>,
}

impl ObservedSignMatrix {
    pub fn new(n_users: usize, observations: Vec<(usize, usize, i8)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(observations.len());
        for (idx, &(i, j, s)) in observations.iter().enumerate() {
            if i >= n_users || j >= n_users {
                return Err(invalid(format!(
                    "observation {idx} at ({i}, {j}) is outside a {n_users}x{n_users} matrix"
                )));
            }
            if s != 1 && s != -1 {
                return Err(invalid(format!("observation {idx} has sign {s}, expected +1 or -1")));
            }
            if !seen.insert((i, j)) {
                return Err(invalid(format!("observation {idx} duplicates entry ({i}, {j})")));
            }
        }
        Ok(Self { n_users, observations })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn observations(&self) -> &[(usize, usize, i8)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// `½ Σ_{(i,j)∈Ω} log(1 + exp(−X_ij M_ij))` over a square matrix variable.
#[derive(Debug, Clone)]
pub struct MaskedLogisticLoss {
    matrix: ObservedSignMatrix,
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(−z))` without overflow.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl MaskedLogisticLoss {
    pub fn new(matrix: ObservedSignMatrix) -> Result<Self> {
        if matrix.is_empty() {
            return Err(invalid("masked logistic loss needs at least one observation"));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ObservedSignMatrix {
        &self.matrix
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.matrix.n_users, self.matrix.n_users)
    }

    pub fn eval(&self, x: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
        if x.shape() != self.shape() {
            return Err(invalid(format!(
                "variable is {:?}, observations index a {:?} matrix",
                x.shape(),
                self.shape()
            )));
        }
        let mut value = 0.0;
        let mut grad = DenseMatrix::zeros(x.rows(), x.cols());
        for &(i, j, s) in &self.matrix.observations {
            let m = f64::from(s);
            let margin = x[(i, j)] * m;
            value += 0.5 * softplus(-margin);
            grad[(i, j)] = -0.5 * m * sigmoid(-margin);
        }
        Ok((value, grad))
    }

    /// `1/8`: the scalar map `t ↦ ½ log(1 + e^{−t})` has curvature at most `1/8`
    /// and the loss is entrywise separable.
    pub fn lipschitz(&self) -> f64 {
        0.125
    }
}

impl SmoothObjective for MaskedLogisticLoss {
    fn dim(&self) -> usize {
        self.matrix.n_users * self.matrix.n_users
    }

    fn value_and_gradient(&self, x: &DenseVector) -> Result<(f64, DenseVector)> {
        let (rows, cols) = self.shape();
        let xm = DenseMatrix::from_vector(rows, cols, x)?;
        let (value, grad) = self.eval(&xm)?;
        Ok((value, grad.to_vector()))
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(MaskedLogisticLoss::lipschitz(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: &[Vec<f64>], y: &[f64]) -> RegressionDataset {
        RegressionDataset::new(
            DenseMatrix::from_rows(rows).unwrap(),
            DenseVector::new(y.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn correntropy_zero_residual() {
        let ds = dataset(&[vec![1.0, 0.0], vec![0.0, 2.0]], &[1.0, 4.0]);
        let loss = CorrentropyLoss::new(ds, 0.7).unwrap();
        let (v, g) = loss.eval(&DenseVector::new(vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn correntropy_square_loss_limit() {
        let ds = dataset(&[vec![1.0]], &[1.0]);
        let loss = CorrentropyLoss::new(ds, 1000.0).unwrap();
        let (v, _) = loss.eval(&DenseVector::zeros(1)).unwrap();
        // σ²/2 (1 − e^{−1/σ²}) = ½ − 1/(4σ²) + …
        assert!((v - 0.5).abs() < 1e-3);
    }

    #[test]
    fn correntropy_rejects_bad_inputs() {
        let ds = dataset(&[vec![1.0]], &[1.0]);
        assert!(CorrentropyLoss::new(ds.clone(), 0.0).is_err());
        let loss = CorrentropyLoss::new(ds, 1.0).unwrap();
        assert!(loss.eval(&DenseVector::zeros(2)).is_err());
    }

    #[test]
    fn correntropy_lipschitz_scaling() {
        let ds = dataset(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0]);
        let loss = CorrentropyLoss::new(ds, 0.3).unwrap();
        assert!((loss.lipschitz() - 1.0).abs() < 1e-12);
        let ds3 = dataset(&[vec![3.0, 0.0], vec![0.0, 3.0]], &[0.0, 0.0]);
        let loss3 = CorrentropyLoss::new(ds3, 0.3).unwrap();
        assert!((loss3.lipschitz() - 9.0).abs() < 1e-10);
    }

    #[test]
    fn square_loss_identity() {
        let ds = dataset(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0]);
        let loss = SquareLoss::new(ds);
        let (v, g) = loss.eval(&DenseVector::new(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(g.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn logistic_at_zero_and_saturation() {
        let obs = ObservedSignMatrix::new(3, vec![(0, 0, 1), (1, 2, -1), (2, 1, 1)]).unwrap();
        let loss = MaskedLogisticLoss::new(obs).unwrap();
        let (v, g) = loss.eval(&DenseMatrix::zeros(3, 3)).unwrap();
        assert!((v - 1.5 * std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);
        assert_eq!(g[(0, 0)], -0.25);
        assert_eq!(g[(1, 2)], 0.25);

        let single = MaskedLogisticLoss::new(ObservedSignMatrix::new(1, vec![(0, 0, 1)]).unwrap())
            .unwrap();
        let mut x = DenseMatrix::zeros(1, 1);
        x[(0, 0)] = 800.0;
        let (v, g) = single.eval(&x).unwrap();
        assert!(v < 1e-300 && g[(0, 0)].abs() < 1e-300);
        x[(0, 0)] = -800.0;
        let (v, g) = single.eval(&x).unwrap();
        assert!((v - 400.0).abs() < 1e-9 && (g[(0, 0)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn sign_matrix_invariants() {
        assert!(ObservedSignMatrix::new(2, vec![(0, 2, 1)]).is_err());
        assert!(ObservedSignMatrix::new(2, vec![(0, 1, 0)]).is_err());
        assert!(ObservedSignMatrix::new(2, vec![(0, 1, 1), (0, 1, -1)]).is_err());
        assert!(MaskedLogisticLoss::new(ObservedSignMatrix::new(2, vec![]).unwrap()).is_err());
    }
}
