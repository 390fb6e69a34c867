use crate::numerics::DenseVector;

/// `t_{k+1} = (√(4t_k² + 1) + 1)/2`.
pub fn momentum_next(t: f64) -> f64 {
    ((4.0 * t * t + 1.0).sqrt() + 1.0) / 2.0
}

/// `x_k`, `x_{k−1}`, `z_k`, `t_k`, `t_{k−1}` of the accelerated methods.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub t_prev: f64,
    pub t_curr: f64,
    pub x_prev: DenseVector,
    pub x_curr: DenseVector,
    pub z_curr: DenseVector,
}

impl MomentumState {
    /// `t₀ = 0`, `t₁ = 1`, `x₀ = x₁ = z₁ = x0`.
    pub fn new(x0: DenseVector) -> Self {
        Self {
            t_prev: 0.0,
            t_curr: 1.0,
            x_prev: x0.clone(),
            z_curr: x0.clone(),
            x_curr: x0,
        }
    }

    pub fn advance(&mut self, x_next: DenseVector, z_next: DenseVector) {
        self.t_prev = self.t_curr;
        self.t_curr = momentum_next(self.t_curr);
        self.x_prev = std::mem::replace(&mut self.x_curr, x_next);
        self.z_curr = z_next;
    }
}

/// `y_k = x_k + (t_{k−1}/t_k)(z_k − x_k) + ((t_{k−1} − 1)/t_k)(x_k − x_{k−1})`.
pub fn extrapolate(state: &MomentumState) -> DenseVector {
    let a = state.t_prev / state.t_curr;
    let b = (state.t_prev - 1.0) / state.t_curr;
    let x = state.x_curr.as_slice();
    let z = state.z_curr.as_slice();
    let xp = state.x_prev.as_slice();
    DenseVector::from_fn(x.len(), |i| x[i] + a * (z[i] - x[i]) + b * (x[i] - xp[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_values() {
        assert_eq!(momentum_next(0.0), 1.0);
        assert!((momentum_next(1.0) - 1.618_033_988_7).abs() < 1e-10);
        let t = momentum_next(1.618_033_988_7);
        assert!((t - 2.193_527_085_3).abs() < 1e-9);
        assert!((t * t - t - 1.618_033_988_7f64.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn first_step_has_no_momentum() {
        let x0 = DenseVector::new(vec![0.3, -1.0]).unwrap();
        let s = MomentumState::new(x0.clone());
        assert_eq!(extrapolate(&s), x0);
    }

    #[test]
    fn stationary_state() {
        let x = DenseVector::new(vec![2.0, 5.0]).unwrap();
        let mut s = MomentumState::new(x.clone());
        for _ in 0..5 {
            s.advance(x.clone(), x.clone());
        }
        assert_eq!(extrapolate(&s), x);
    }
}
