//! Fully discrete scheme.
//!
//! At level `n` the compact scheme reads
//!
//! ```text
//! H D_τ^α u^{n-θ} + L u^{n-θ} = H f^{n-θ} + f̂^{n-θ},   L = cH - (a/h² + b²/(12a)) A - (b/(2h)) S,
//! ```
//!
//! with `u^{n-θ} = θ u^{n-1} + (1-θ) u^n` and `D_τ^α u^{n-θ} = K (u^n - u^{n-1}) + history`,
//! `K = A_0^{(n)}`. This gives the tridiagonal system
//!
//! ```text
//! [K H + (1-θ) L] u^n = K H u^{n-1} - H history - θ L u^{n-1} + H f^{n-θ} + f̂^{n-θ}.
//! ```

use std::time::{Duration, Instant};

use crate::caputo::{assemble_direct_kernel_row, local_coeff_a0, FastHistory, KernelMode};
use crate::error::{Error, Result};
use crate::mesh::{SpatialMesh, TemporalMesh};
use crate::problem::HomogenizedSpec;
use crate::soe::SoeApproximation;
use crate::spatial::{thomas_solve, CompactOperator, TriDiag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub mode: KernelMode,
    /// SOE tolerance (fast mode only).
    pub epsilon: f64,
    /// Run even if the step-ratio condition `ρ_k <= 7/4` fails.
    pub allow_m1_violation: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mode: KernelMode::Fast,
            epsilon: 1e-12,
            allow_m1_violation: false,
        }
    }
}

/// Numerical solution on all time levels, interior nodes only (boundary values are zero).
#[derive(Debug, Clone)]
pub struct SolutionGrid {
    tmesh: TemporalMesh,
    smesh: SpatialMesh,
    mode: KernelMode,
    levels: Vec<Vec<f64>>,
    soe_len: Option<usize>,
    epsilon: Option<f64>,
    elapsed: Duration,
}

impl SolutionGrid {
    pub fn temporal_mesh(&self) -> &TemporalMesh {
        &self.tmesh
    }

    pub fn spatial_mesh(&self) -> &SpatialMesh {
        &self.smesh
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// Number of SOE exponentials (fast mode).
    pub fn soe_len(&self) -> Option<usize> {
        self.soe_len
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// Wall time of the time loop including SOE construction.
    pub fn elapsed(&self) -> Duration {
        self.elapsed
    }

    /// `N + 1` levels `u^0, …, u^N`.
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Interior values `u_1^n, …, u_{M-1}^n`.
    pub fn level(&self, n: usize) -> &[f64] {
        &self.levels[n]
    }

    pub fn final_level(&self) -> &[f64] {
        self.levels
            .last()
            .expect("grid has at least the initial level")
    }
}

/// `K H + (1-θ) L`.
pub fn assemble_system(kernel_diag: f64, op: &CompactOperator, c: f64, theta: f64) -> TriDiag {
    op.averaging()
        .combine(kernel_diag, &op.scheme_operator(c), 1.0 - theta)
}

/// Right-hand side `H(K u^{n-1} - history + f) + f̂ - θ L u^{n-1}`;
/// `f_bounds` are the source values at `x_l` and `x_r`.
#[allow(clippy::too_many_arguments)]
pub fn rhs(
    kernel_diag: f64,
    history: &[f64],
    u_prev: &[f64],
    f_interior: &[f64],
    f_bounds: (f64, f64),
    op: &CompactOperator,
    c: f64,
    theta: f64,
) -> Result<Vec<f64>> {
    let n = op.interior_len();
    for len in [history.len(), u_prev.len(), f_interior.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let w: Vec<f64> = u_prev
        .iter()
        .zip(history)
        .zip(f_interior)
        .map(|((u, h), f)| kernel_diag * u - h + f)
        .collect();
    let mut out = op.apply_h(&w, f_bounds.0, f_bounds.1)?;
    let lu = op.scheme_operator(c).matvec(u_prev)?;
    for (o, l) in out.iter_mut().zip(&lu) {
        *o -= theta * l;
    }
    Ok(out)
}

fn check_inputs(
    problem: &HomogenizedSpec,
    tmesh: &TemporalMesh,
    smesh: &SpatialMesh,
    options: &SolverOptions,
) -> Result<()> {
    problem.validate()?;
    if (problem.alpha - tmesh.alpha()).abs() > 1e-15 {
        return Err(crate::error::invalid(
            "alpha",
            format!("problem has {}, mesh has {}", problem.alpha, tmesh.alpha()),
        ));
    }
    if (tmesh.horizon() - problem.horizon).abs() > 1e-12 * problem.horizon {
        return Err(Error::IncompatibleGrids(format!(
            "mesh ends at {}, problem horizon is {}",
            tmesh.horizon(),
            problem.horizon
        )));
    }
    let span = problem.x_right - problem.x_left;
    if (smesh.x_left() - problem.x_left).abs() > 1e-12 * span
        || (smesh.x_right() - problem.x_right).abs() > 1e-12 * span
    {
        return Err(Error::IncompatibleGrids(
            "spatial grid does not cover the problem domain".into(),
        ));
    }
    let ratios = tmesh.check_m1();
    if !ratios.ok && !options.allow_m1_violation {
        return Err(Error::StepRatio {
            rho_max: ratios.rho_max,
        });
    }
    Ok(())
}

/// Run the scheme on `tmesh × smesh`.
pub fn solve(
    problem: &HomogenizedSpec,
    tmesh: &TemporalMesh,
    smesh: &SpatialMesh,
    options: &SolverOptions,
) -> Result<SolutionGrid> {
    check_inputs(problem, tmesh, smesh, options)?;
    let start = Instant::now();
    let op = CompactOperator::new(problem.a, problem.b, smesh.h(), smesh.intervals())?;
    let theta = tmesh.theta();
    let c = problem.c;
    let xs = smesh.interior();
    let m = xs.len();
    let (xl, xr) = (smesh.x_left(), smesh.x_right());

    let soe = match options.mode {
        KernelMode::Fast => {
            let dt = (1.0 - theta) * tmesh.min_step();
            Some(SoeApproximation::build(
                tmesh.alpha(),
                options.epsilon,
                dt,
                tmesh.horizon(),
            )?)
        }
        KernelMode::Direct => None,
    };
    let mut fast = soe.as_ref().map(|s| FastHistory::new(s.len(), m));

    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(tmesh.n_steps() + 1);
    levels.push(xs.iter().map(|&x| (problem.initial)(x)).collect());
    // Increments ∇_τ u^k, kept only in direct mode.
    let mut increments: Vec<Vec<f64>> = Vec::new();
    let mut grad_prev = vec![0.0; m];

    for n in 1..=tmesh.n_steps() {
        let (kernel_diag, history) = match (options.mode, soe.as_ref(), fast.as_mut()) {
            (KernelMode::Fast, Some(soe), Some(state)) => {
                let a0 = local_coeff_a0(tmesh, n);
                if n == 1 {
                    (a0, vec![0.0; m])
                } else {
                    let terms = state.begin(tmesh, n, soe, &grad_prev)?;
                    (a0 + terms.unknown_coeff, terms.known)
                }
            }
            _ => {
                let row = assemble_direct_kernel_row(tmesh, n)?;
                let mut hist = vec![0.0; m];
                for (k, inc) in increments.iter().enumerate() {
                    let w = row.coeff(k + 1);
                    for (h, g) in hist.iter_mut().zip(inc) {
                        *h += w * g;
                    }
                }
                (row.diagonal(), hist)
            }
        };

        let t = tmesh.t_offset(n);
        let f: Vec<f64> = xs.iter().map(|&x| (problem.source)(x, t)).collect();
        let bounds = ((problem.source)(xl, t), (problem.source)(xr, t));
        let u_prev = &levels[n - 1];
        let system = assemble_system(kernel_diag, &op, c, theta);
        let b = rhs(kernel_diag, &history, u_prev, &f, bounds, &op, c, theta)?;
        let u = thomas_solve(&system, &b)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { level: n });
        }
        let grad: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| a - b).collect();
        if let Some(state) = fast.as_mut() {
            if n >= 2 {
                state.complete(&grad)?;
            }
        } else {
            increments.push(grad.clone());
        }
        grad_prev = grad;
        levels.push(u);
    }

    Ok(SolutionGrid {
        tmesh: tmesh.clone(),
        smesh: *smesh,
        mode: options.mode,
        levels,
        soe_len: soe.as_ref().map(|s| s.len()),
        epsilon: soe.as_ref().map(|s| s.epsilon()),
        elapsed: start.elapsed(),
    })
}
