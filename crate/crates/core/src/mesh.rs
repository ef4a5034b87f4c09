//! Temporal and spatial meshes.
//!
//! Time levels are indexed the usual way: `t_0 = 0 < t_1 < … < t_N = T`, step
//! `τ_k = t_k - t_{k-1}` for `1 <= k <= N`, ratio `ρ_k = τ_k / τ_{k+1}` for
//! `1 <= k <= N-1` and off-set point `t_{n-θ} = θ t_{n-1} + (1-θ) t_n` with `θ = α/2`.
//! The accessors below use these 1-based indices directly.

use crate::error::{invalid, Result};

/// Largest step-size ratio `ρ_k` under which the kernel properties are guaranteed.
pub const MAX_STEP_RATIO: f64 = 7.0 / 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMesh {
    alpha: f64,
    points: Vec<f64>,
    steps: Vec<f64>,
}

/// Outcome of the step-ratio check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCheck {
    pub rho_max: f64,
    pub ok: bool,
}

impl TemporalMesh {
    /// Graded mesh `t_k = T (k/N)^γ`. For `γ >= 1` the steps are nondecreasing.
    pub fn graded(horizon: f64, n: usize, gamma: f64, alpha: f64) -> Result<Self> {
        if n < 1 {
            return Err(invalid("N", "need at least one time step"));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(invalid(
                "gamma",
                format!("grading exponent must be >= 1, got {gamma}"),
            ));
        }
        let points = (0..=n)
            .map(|k| {
                if k == n {
                    horizon
                } else {
                    horizon * (k as f64 / n as f64).powf(gamma)
                }
            })
            .collect();
        Self::from_points(points, alpha)
    }

    /// Uniform mesh with `n` steps.
    pub fn uniform(horizon: f64, n: usize, alpha: f64) -> Result<Self> {
        if n < 1 {
            return Err(invalid("N", "need at least one time step"));
        }
        let points = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
        Self::from_points(points, alpha)
    }

    /// User-supplied time points. Only monotonicity is validated; see [`Self::check_m1`].
    pub fn from_points(points: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        if points.len() < 2 {
            return Err(invalid("points", "need t_0 and at least one more level"));
        }
        if points[0] != 0.0 {
            return Err(invalid(
                "points",
                format!("t_0 must be 0, got {}", points[0]),
            ));
        }
        if points.iter().any(|t| !t.is_finite()) || points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid(
                "points",
                "time levels must be finite and strictly increasing",
            ));
        }
        let steps = points.windows(2).map(|p| p[1] - p[0]).collect();
        Ok(TemporalMesh {
            alpha,
            points,
            steps,
        })
    }

    /// Mesh from step sizes `τ_1, …, τ_N` (accumulated from `t_0 = 0`).
    pub fn from_steps(steps: &[f64], alpha: f64) -> Result<Self> {
        if steps.iter().any(|&s| !(s > 0.0)) {
            return Err(invalid("steps", "step sizes must be positive"));
        }
        let mut points = Vec::with_capacity(steps.len() + 1);
        let mut t = 0.0;
        points.push(t);
        for s in steps {
            t += s;
            points.push(t);
        }
        Self::from_points(points, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Off-set parameter `θ = α/2`.
    pub fn theta(&self) -> f64 {
        0.5 * self.alpha
    }

    /// Number of steps `N`.
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn horizon(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `τ_1, …, τ_N` (0-based storage).
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// `t_k`, `0 <= k <= N`.
    pub fn t(&self, k: usize) -> f64 {
        self.points[k]
    }

    /// `τ_k`, `1 <= k <= N`.
    pub fn tau(&self, k: usize) -> f64 {
        self.steps[k - 1]
    }

    /// `ρ_k = τ_k / τ_{k+1}`, `1 <= k <= N-1`.
    pub fn rho(&self, k: usize) -> f64 {
        self.steps[k - 1] / self.steps[k]
    }

    /// All ratios `ρ_1, …, ρ_{N-1}`.
    pub fn ratios(&self) -> Vec<f64> {
        self.steps.windows(2).map(|p| p[0] / p[1]).collect()
    }

    /// `t_{n-θ} = θ t_{n-1} + (1-θ) t_n`, `1 <= n <= N`.
    pub fn t_offset(&self, n: usize) -> f64 {
        self.points[n - 1] + (1.0 - self.theta()) * self.steps[n - 1]
    }

    /// All off-set points `t_{1-θ}, …, t_{N-θ}`.
    pub fn offsets(&self) -> Vec<f64> {
        (1..=self.n_steps()).map(|n| self.t_offset(n)).collect()
    }

    pub fn min_step(&self) -> f64 {
        self.steps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum step `τ = max_{1<=k<=N-1} τ_k` (the last step is excluded; `τ_1` when `N = 1`).
    pub fn max_step(&self) -> f64 {
        let n = self.steps.len();
        let upto = if n > 1 { n - 1 } else { 1 };
        self.steps[..upto].iter().copied().fold(0.0, f64::max)
    }

    /// Step-ratio condition `max_k ρ_k <= 7/4` (M1).
    pub fn check_m1(&self) -> RatioCheck {
        let rho_max = self.ratios().into_iter().fold(0.0, f64::max);
        RatioCheck {
            rho_max,
            ok: rho_max <= MAX_STEP_RATIO,
        }
    }

    /// Grading condition M2 with constant `c_gamma`:
    /// `τ_k <= C τ min{1, t_k^{1-1/γ}}` for all `k`, and for `k >= 2`
    /// `t_k <= C t_{k-1}` and `τ_k / t_k <= C τ_{k-1} / t_{k-1}`.
    pub fn check_m2(&self, gamma: f64, c_gamma: f64) -> bool {
        let tau = self.max_step();
        let n = self.n_steps();
        (1..=n).all(|k| {
            let tk = self.t(k);
            let cap = c_gamma * tau * tk.powf(1.0 - 1.0 / gamma).min(1.0);
            self.tau(k) <= cap
        }) && (2..=n).all(|k| {
            let (tk, tkm1) = (self.t(k), self.t(k - 1));
            tk <= c_gamma * tkm1 && self.tau(k) / tk <= c_gamma * self.tau(k - 1) / tkm1
        })
    }
}

/// Uniform spatial grid `x_i = x_l + i h`, `h = (x_r - x_l)/M`; interior nodes `1..M-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialMesh {
    x_left: f64,
    x_right: f64,
    m: usize,
}

impl SpatialMesh {
    pub fn new(x_left: f64, x_right: f64, m: usize) -> Result<Self> {
        if !(x_right > x_left) || !x_left.is_finite() || !x_right.is_finite() {
            return Err(invalid(
                "domain",
                format!("need x_l < x_r, got [{x_left}, {x_right}]"),
            ));
        }
        if m < 4 {
            return Err(invalid("M", format!("need at least 4 intervals, got {m}")));
        }
        Ok(SpatialMesh { x_left, x_right, m })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        self.m
    }

    /// Number of interior unknowns `M - 1`.
    pub fn interior_len(&self) -> usize {
        self.m - 1
    }

    pub fn h(&self) -> f64 {
        (self.x_right - self.x_left) / self.m as f64
    }

    /// `x_i` for `0 <= i <= M`.
    pub fn x(&self, i: usize) -> f64 {
        if i == self.m {
            self.x_right
        } else {
            self.x_left + i as f64 * self.h()
        }
    }

    /// Interior nodes `x_1, …, x_{M-1}`.
    pub fn interior(&self) -> Vec<f64> {
        (1..self.m).map(|i| self.x(i)).collect()
    }
}
