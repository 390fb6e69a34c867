//! Certified subgradient solver for `min_z ‖z − y‖²/(2γ) + h(z)` when `h` is a
//! norm-like support function `h(z) = max_{u ∈ B} ⟨u, z⟩` (L1, OSCAR, trace Lasso).
//!
//! Every subgradient of `h` lies in `B`, so any convex combination `u` of
//! subgradients is dual feasible and `D(u) = ⟨u, y⟩ − γ‖u‖²/2 ≤ min Q`. The primal
//! iterate is always `x = y − γu`; a step `u ← u + η(s − u)` with `s ∈ ∂h(x)` is
//! exactly the subgradient step `x ← x − ηγ q` with `q = (x − y)/γ + s ∈ ∂Q(x)`.

use super::{InnerOptions, InnerStepRule, ProxResult, WarmStart};
use crate::error::Result;
use crate::numerics::{dot, DenseVector};
use crate::regularizers::L1Penalty;

/// A subgradient with its barycentric weight in the dual iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

pub(crate) trait SupportOracle {
    /// `h(x)` and a subgradient `s` with `⟨s, x⟩ = h(x)`.
    fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Dual lower bound built from `x` alone by rescaling `(x − y)/γ` into `B`,
    /// when the dual norm is cheap to evaluate.
    fn scaled_dual_bound(&self, _x: &[f64], _anchor: &[f64], _gamma: f64) -> Option<f64> {
        None
    }
}

/// `−γ‖α‖²/2 − ⟨α, y⟩` at `α = scale · (x − y)/γ`.
pub(crate) fn scaled_dual_value(x: &[f64], anchor: &[f64], gamma: f64, dual_norm: f64) -> f64 {
    let scale = if dual_norm > 1.0 { 1.0 / dual_norm } else { 1.0 };
    let mut norm_sq = 0.0;
    let mut inner = 0.0;
    for (xi, yi) in x.iter().zip(anchor) {
        let alpha = scale * (xi - yi) / gamma;
        norm_sq += alpha * alpha;
        inner += alpha * yi;
    }
    -0.5 * gamma * norm_sq - inner
}

pub(crate) struct L1Oracle(pub L1Penalty);

impl SupportOracle for L1Oracle {
    fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let lambda = self.0.lambda;
        let s: Vec<f64> = x
            .iter()
            .map(|&v| if v > 0.0 { lambda } else if v < 0.0 { -lambda } else { 0.0 })
            .collect();
        Ok((lambda * x.iter().map(|v| v.abs()).sum::<f64>(), s))
    }

    fn scaled_dual_bound(&self, x: &[f64], anchor: &[f64], gamma: f64) -> Option<f64> {
        let lambda = self.0.lambda;
        let sup = x
            .iter()
            .zip(anchor)
            .fold(0.0f64, |m, (xi, yi)| m.max(((xi - yi) / gamma).abs()));
        Some(scaled_dual_value(x, anchor, gamma, sup / lambda))
    }
}

struct Tracker {
    best_value: f64,
    best_point: Vec<f64>,
    best_lower: f64,
    history: Vec<f64>,
}

impl Tracker {
    fn new(n: usize) -> Self {
        Self {
            best_value: f64::INFINITY,
            best_point: vec![0.0; n],
            best_lower: f64::NEG_INFINITY,
            history: Vec::new(),
        }
    }

    fn observe(&mut self, x: &[f64], value: f64, lower: f64) {
        if value < self.best_value {
            self.best_value = value;
            self.best_point.copy_from_slice(x);
        }
        self.best_lower = self.best_lower.max(lower);
        self.history.push((value - lower).max(0.0));
    }

    fn certified(&self) -> f64 {
        (self.best_value - self.best_lower).max(0.0)
    }

    fn finish(self, eps: f64, iters: usize, warm: WarmStart) -> ProxResult {
        let certified_eps = self.certified();
        ProxResult {
            point: DenseVector::from_vec_unchecked(self.best_point),
            certified_eps,
            inner_iters: iters,
            gap_history: self.history,
            converged: certified_eps <= eps,
            heuristic: false,
            warm,
        }
    }
}

/// Lower bound from `(1/γ)`-strong convexity: `Q(x) − γ‖q‖²/2`, `q ∈ ∂Q(x)`.
fn strong_convexity_bound(x: &[f64], s: &[f64], anchor: &[f64], gamma: f64, value: f64) -> f64 {
    let q_sq: f64 = x
        .iter()
        .zip(anchor)
        .zip(s)
        .map(|((xi, yi), si)| {
            let q = (xi - yi) / gamma + si;
            q * q
        })
        .sum();
    value - 0.5 * gamma * q_sq
}

fn subproblem(x: &[f64], anchor: &[f64], gamma: f64, h: f64) -> f64 {
    let d: f64 = x.iter().zip(anchor).map(|(a, b)| (a - b) * (a - b)).sum();
    d / (2.0 * gamma) + h
}

pub(crate) fn solve<O: SupportOracle>(
    oracle: &O,
    anchor: &DenseVector,
    gamma: f64,
    eps: f64,
    opts: &InnerOptions,
    warm: &WarmStart,
) -> Result<ProxResult> {
    match opts.rule {
        InnerStepRule::PairwiseLineSearch => pairwise(oracle, anchor, gamma, eps, opts, warm),
        InnerStepRule::Diminishing { step0 } => {
            diminishing(oracle, anchor, gamma, eps, opts, warm, step0.unwrap_or(gamma))
        }
    }
}

fn pairwise<O: SupportOracle>(
    oracle: &O,
    anchor: &DenseVector,
    gamma: f64,
    eps: f64,
    opts: &InnerOptions,
    warm: &WarmStart,
) -> Result<ProxResult> {
    let y = anchor.as_slice();
    let n = y.len();
    let mut atoms = match warm {
        WarmStart::Atoms(prev)
            if !prev.is_empty() && prev.iter().all(|a| a.direction.len() == n) =>
        {
            prev.clone()
        }
        _ => {
            let (_, s) = oracle.evaluate(y)?;
            vec![Atom { direction: s, weight: 1.0 }]
        }
    };
    let mut tracker = Tracker::new(n);
    let mut u = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut steps = 0;
    loop {
        u.iter_mut().for_each(|v| *v = 0.0);
        for atom in &atoms {
            for (ui, di) in u.iter_mut().zip(&atom.direction) {
                *ui += atom.weight * di;
            }
        }
        for ((xi, yi), ui) in x.iter_mut().zip(y).zip(&u) {
            *xi = yi - gamma * ui;
        }
        let (hx, s) = oracle.evaluate(&x)?;
        let value = subproblem(&x, y, gamma, hx);
        let mut lower = dot(&u, y) - 0.5 * gamma * dot(&u, &u);
        lower = lower.max(strong_convexity_bound(&x, &s, y, gamma, value));
        if let Some(b) = oracle.scaled_dual_bound(&x, y, gamma) {
            lower = lower.max(b);
        }
        tracker.observe(&x, value, lower);
        if tracker.certified() <= eps || steps >= opts.max_inner {
            break;
        }

        // Away atom: the active subgradient least aligned with x.
        let (away, away_score) = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (i, dot(&a.direction, &x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("active set is never empty");
        let gain = dot(&s, &x) - away_score;
        let dist_sq: f64 = s
            .iter()
            .zip(&atoms[away].direction)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if !(gain > 0.0 && dist_sq > 0.0) {
            break;
        }
        let max_step = atoms[away].weight;
        let eta = (gain / (gamma * dist_sq)).min(max_step);
        if eta >= max_step {
            atoms.remove(away);
        } else {
            atoms[away].weight -= eta;
        }
        match atoms.iter_mut().find(|a| a.direction == s) {
            Some(existing) => existing.weight += eta,
            None => atoms.push(Atom { direction: s, weight: eta }),
        }
        steps += 1;
    }
    Ok(tracker.finish(eps, steps, WarmStart::Atoms(atoms)))
}

fn diminishing<O: SupportOracle>(
    oracle: &O,
    anchor: &DenseVector,
    gamma: f64,
    eps: f64,
    opts: &InnerOptions,
    warm: &WarmStart,
    step0: f64,
) -> Result<ProxResult> {
    let y = anchor.as_slice();
    let n = y.len();
    let mut x = match warm {
        WarmStart::Point(p) if p.len() == n => p.as_slice().to_vec(),
        _ => y.to_vec(),
    };
    let mut tracker = Tracker::new(n);
    let mut steps = 0;
    loop {
        let (hx, s) = oracle.evaluate(&x)?;
        let value = subproblem(&x, y, gamma, hx);
        let mut lower = strong_convexity_bound(&x, &s, y, gamma, value);
        if let Some(b) = oracle.scaled_dual_bound(&x, y, gamma) {
            lower = lower.max(b);
        }
        tracker.observe(&x, value, lower);
        if tracker.certified() <= eps || steps >= opts.max_inner {
            break;
        }
        let step = step0 / ((steps + 1) as f64).sqrt();
        for ((xi, yi), si) in x.iter_mut().zip(y).zip(&s) {
            let q = (*xi - yi) / gamma + si;
            *xi -= step * q;
        }
        steps += 1;
    }
    let warm = WarmStart::Point(DenseVector::from_vec_unchecked(tracker.best_point.clone()));
    Ok(tracker.finish(eps, steps, warm))
}
