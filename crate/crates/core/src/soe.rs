//! Sum-of-exponentials approximation of the Caputo kernel.
//!
//! `ω_{1-α}(t) = t^{-α} / Γ(1-α)` has the Laplace representation
//!
//! ```text
//! ω_{1-α}(t) = sin(πα)/π · ∫_0^∞ e^{-st} s^{α-1} ds ,
//! ```
//!
//! which is discretised by a dyadic composite rule: Gauss–Jacobi with weight `s^{α-1}`
//! on `[0, 2^{j0}]` and Gauss–Legendre panels on `[2^j, 2^{j+1}]` up to a cut-off that
//! makes the truncated tail negligible for `t >= Δt`. The order of each piece is the
//! smallest one that meets that piece's share of the error budget on a geometric
//! sample of `[Δt, T]`; the assembled sum is then certified on a denser sample.

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::special::omega;

/// Samples used by the certification sweep inside [`SoeApproximation::build`].
pub const CERTIFICATION_SAMPLES: usize = 10_000;

/// Rounding allowance (in units of `f64::EPSILON · ω(t)`) granted by the certification
/// sweep on top of `ε`. Summing a few hundred positive terms cannot do better than a
/// handful of ulps of the kernel value, which dominates `ε` when `Δt` is tiny.
pub const ROUNDOFF_ULPS: f64 = 16.0;

const ORDER_SAMPLES: usize = 200;
const MAX_PIECE_ORDER: usize = 64;
const REFERENCE_SUBPANELS: usize = 64;
const REFERENCE_ORDER: usize = 24;

/// Nodes `s^l` and weights `ϖ^l` with `|ω_{1-α}(t) - Σ_l ϖ^l e^{-s^l t}| <= ε` on `[Δt, T]`.
///
/// Immutable after construction; nodes are strictly increasing and all weights positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SoeApproximation {
    alpha: f64,
    epsilon: f64,
    delta_t: f64,
    horizon: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn validate_params(alpha: f64, epsilon: f64, delta_t: f64, horizon: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    if !(delta_t > 0.0 && delta_t.is_finite()) {
        return Err(invalid(
            "delta_t",
            format!("must be positive, got {delta_t}"),
        ));
    }
    if !(horizon > delta_t && horizon.is_finite()) {
        return Err(invalid(
            "horizon",
            format!("must exceed delta_t = {delta_t}, got {horizon}"),
        ));
    }
    Ok(())
}

/// Geometric sample of `[lo, hi]` with `n >= 2` points including both endpoints.
fn geometric_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == n - 1 {
                hi
            } else {
                lo * (ratio * j as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Compensated (Neumaier) sum of `Σ w_l e^{-s_l t}`.
fn exp_sum(nodes: &[f64], weights: &[f64], t: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (s, w) in nodes.iter().zip(weights) {
        let term = w * (-s * t).exp();
        let next = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - next) + term;
        } else {
            comp += (term - next) + sum;
        }
        sum = next;
    }
    sum + comp
}

/// One piece of the composite rule, in un-normalised Laplace units (no `sin(πα)/π`).
struct Piece {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `∫_0^{s0} e^{-st} s^{α-1} ds` by its power series; converges fast for `s0 t <= 1`.
fn jacobi_piece_reference(alpha: f64, s0: f64, t: f64) -> f64 {
    let x = s0 * t;
    let mut term = 1.0; // (-x)^k / k!
    let mut sum = 0.0;
    for k in 0..80 {
        if k > 0 {
            term *= -x / k as f64;
        }
        let c = term / (k as f64 + alpha);
        sum += c;
        if c.abs() < 1e-20 * sum.abs() {
            break;
        }
    }
    s0.powf(alpha) * sum
}

fn jacobi_piece(alpha: f64, s0: f64, n: usize) -> Piece {
    let rule = gauss_jacobi(n, 0.0, alpha - 1.0);
    let scale = (0.5 * s0).powf(alpha);
    Piece {
        nodes: rule.nodes.iter().map(|x| 0.5 * s0 * (1.0 + x)).collect(),
        weights: rule.weights.iter().map(|w| w * scale).collect(),
    }
}

fn legendre_piece(alpha: f64, lo: f64, n: usize) -> Piece {
    let rule = gauss_legendre(n);
    let half = 0.5 * lo;
    let nodes: Vec<f64> = rule.nodes.iter().map(|x| lo * (3.0 + x) * 0.5).collect();
    let weights = rule
        .weights
        .iter()
        .zip(&nodes)
        .map(|(w, s)| w * half * s.powf(alpha - 1.0))
        .collect();
    Piece { nodes, weights }
}

/// High-accuracy composite reference for `∫_lo^{2 lo} e^{-st} s^{α-1} ds`.
fn legendre_reference_piece(alpha: f64, lo: f64) -> Piece {
    let rule = gauss_legendre(REFERENCE_ORDER);
    let width = lo / REFERENCE_SUBPANELS as f64;
    let mut nodes = Vec::with_capacity(REFERENCE_SUBPANELS * REFERENCE_ORDER);
    let mut weights = Vec::with_capacity(REFERENCE_SUBPANELS * REFERENCE_ORDER);
    for p in 0..REFERENCE_SUBPANELS {
        let a = lo + width * p as f64;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let s = a + 0.5 * width * (1.0 + x);
            nodes.push(s);
            weights.push(w * 0.5 * width * s.powf(alpha - 1.0));
        }
    }
    Piece { nodes, weights }
}

/// Smallest order whose rule matches `reference` within the per-sample budget.
fn select_order(
    samples: &[f64],
    reference: &[f64],
    abs_budget: f64,
    kappa: f64,
    make: impl Fn(usize) -> Piece,
) -> Piece {
    for n in 1..=MAX_PIECE_ORDER {
        let piece = make(n);
        let ok = samples.iter().zip(reference).all(|(&t, &r)| {
            let v = exp_sum(&piece.nodes, &piece.weights, t);
            kappa * (v - r).abs() <= abs_budget + 4.0 * f64::EPSILON * kappa * r.abs()
        });
        if ok {
            return piece;
        }
    }
    make(MAX_PIECE_ORDER)
}

fn construct(alpha: f64, budget: f64, delta_t: f64, horizon: f64) -> (Vec<f64>, Vec<f64>) {
    let kappa = (std::f64::consts::PI * alpha).sin() / std::f64::consts::PI;

    // [0, s0] with s0 * T <= 1 keeps e^{-st} smooth on the Jacobi piece.
    let j0 = (1.0 / horizon).log2().floor() as i32;
    let s0 = 2f64.powi(j0);

    // Tail ∫_S^∞ e^{-sΔt} s^{α-1} ds <= S^{α-1} e^{-SΔt} / Δt.
    let min_cutoff = (1.0 / budget).ln() / delta_t;
    let mut top = j0;
    loop {
        let s = 2f64.powi(top + 1);
        let tail = kappa * s.powf(alpha - 1.0) * (-s * delta_t).exp() / delta_t;
        if s >= min_cutoff && tail <= 0.25 * budget {
            break;
        }
        top += 1;
    }

    let n_pieces = (top - j0 + 2) as f64;
    let piece_budget = 0.25 * budget / n_pieces;
    let samples = geometric_samples(delta_t, horizon, ORDER_SAMPLES);

    let mut nodes = Vec::new();
    let mut weights = Vec::new();

    let reference: Vec<f64> = samples
        .iter()
        .map(|&t| jacobi_piece_reference(alpha, s0, t))
        .collect();
    let piece = select_order(&samples, &reference, piece_budget, kappa, |n| {
        jacobi_piece(alpha, s0, n)
    });
    nodes.extend(piece.nodes);
    weights.extend(piece.weights);

    for j in j0..=top {
        let lo = 2f64.powi(j);
        let refpiece = legendre_reference_piece(alpha, lo);
        let reference: Vec<f64> = samples
            .iter()
            .map(|&t| exp_sum(&refpiece.nodes, &refpiece.weights, t))
            .collect();
        let piece = select_order(&samples, &reference, piece_budget, kappa, |n| {
            legendre_piece(alpha, lo, n)
        });
        nodes.extend(piece.nodes);
        weights.extend(piece.weights);
    }

    for w in &mut weights {
        *w *= kappa;
    }
    (nodes, weights)
}

impl SoeApproximation {
    /// Build and certify an approximation of `ω_{1-α}` on `[delta_t, horizon]`.
    ///
    /// The certification sweep checks `|ω - Σ| <= ε + ROUNDOFF_ULPS · u · ω(t)` on
    /// [`CERTIFICATION_SAMPLES`] geometric points; if it fails the per-piece budgets are
    /// tightened and the construction repeated a few times before giving up.
    pub fn build(alpha: f64, epsilon: f64, delta_t: f64, horizon: f64) -> Result<Self> {
        validate_params(alpha, epsilon, delta_t, horizon)?;
        let mut budget = epsilon;
        let mut worst = (0.0, 0.0);
        for _ in 0..4 {
            let (nodes, weights) = construct(alpha, budget, delta_t, horizon);
            let soe = SoeApproximation {
                alpha,
                epsilon,
                delta_t,
                horizon,
                nodes,
                weights,
            };
            match soe.certification_excess(CERTIFICATION_SAMPLES) {
                None => return Ok(soe),
                Some(excess) => worst = excess,
            }
            budget *= 0.1;
        }
        Err(Error::CertificationFailure {
            max_error: worst.0,
            allowed: worst.1,
        })
    }

    /// Wrap caller-supplied nodes and weights without certifying them.
    ///
    /// Nodes must be strictly increasing and positive, weights positive.
    pub fn from_parts(
        alpha: f64,
        epsilon: f64,
        delta_t: f64,
        horizon: f64,
        nodes: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        validate_params(alpha, epsilon, delta_t, horizon)?;
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if nodes.first().is_some_and(|&s| s <= 0.0) || nodes.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("nodes", "must be positive and strictly increasing"));
        }
        if weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(invalid("weights", "must be positive"));
        }
        Ok(SoeApproximation {
            alpha,
            epsilon,
            delta_t,
            horizon,
            nodes,
            weights,
        })
    }

    /// Keep only the first `count` nodes (the smallest exponents).
    pub fn truncated(&self, count: usize) -> SoeApproximation {
        let count = count.min(self.nodes.len());
        SoeApproximation {
            nodes: self.nodes[..count].to_vec(),
            weights: self.weights[..count].to_vec(),
            ..self.clone()
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of exponentials `N_q`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_l ϖ^l e^{-s^l t}`; fails below `Δt` where the sum is not certified.
    pub fn eval(&self, t: f64) -> Result<f64> {
        // Tiny slack so mesh arithmetic landing a rounding error below Δt is accepted.
        if !(t >= self.delta_t * (1.0 - 1e-12)) {
            return Err(Error::OutOfDomain {
                t,
                lower: self.delta_t,
                upper: self.horizon,
            });
        }
        Ok(self.eval_unchecked(t))
    }

    /// `Σ_l ϖ^l e^{-s^l t}` without the domain check.
    pub fn eval_unchecked(&self, t: f64) -> f64 {
        exp_sum(&self.nodes, &self.weights, t)
    }

    /// Maximum of `|ω_{1-α}(t) - Σ|` over `n_samples` geometric points of `[Δt, T]`.
    pub fn max_error(&self, n_samples: usize) -> f64 {
        let n = n_samples.max(2);
        geometric_samples(self.delta_t, self.horizon, n)
            .into_iter()
            .map(|t| (omega(1.0 - self.alpha, t) - self.eval_unchecked(t)).abs())
            .fold(0.0, f64::max)
    }

    /// `None` when every sample satisfies the certification bound, otherwise the worst
    /// `(error, allowed)` pair.
    fn certification_excess(&self, n_samples: usize) -> Option<(f64, f64)> {
        let mut worst: Option<(f64, f64)> = None;
        let mut worst_ratio = 1.0;
        for t in geometric_samples(self.delta_t, self.horizon, n_samples) {
            let exact = omega(1.0 - self.alpha, t);
            let err = (exact - self.eval_unchecked(t)).abs();
            let allowed = self.epsilon + ROUNDOFF_ULPS * f64::EPSILON * exact;
            if !(err <= allowed) || !err.is_finite() {
                let ratio = err / allowed;
                if worst.is_none() || ratio > worst_ratio || ratio.is_nan() {
                    worst_ratio = ratio;
                    worst = Some((err, allowed));
                }
            }
        }
        worst
    }
}
