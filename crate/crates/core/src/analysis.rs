//! Error norms, convergence studies and kernel verification sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::caputo::{
    admissible_epsilon, assemble_direct_kernel_row, assemble_fast_kernel_row,
    complementary_kernels, KernelRow, PI_A,
};
use crate::error::{Error, Result};
use crate::mesh::{SpatialMesh, TemporalMesh};
use crate::problem::{FieldFn, HomogenizedSpec};
use crate::soe::SoeApproximation;
use crate::stepper::{solve, SolutionGrid, SolverOptions};

/// Refinement direction of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Time,
    Space,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Axis::Time),
            "space" => Ok(Axis::Space),
            other => Err(crate::error::invalid(
                "axis",
                format!("expected 'time' or 'space', got '{other}'"),
            )),
        }
    }
}

/// `√(h Σ v_i²)`.
pub fn discrete_l2(h: f64, v: impl IntoIterator<Item = f64>) -> f64 {
    (h * v.into_iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// `max_{1<=n<=N} ‖u(·,t_n) - u^n‖`.
pub fn l2_error_max(grid: &SolutionGrid, exact: &FieldFn) -> f64 {
    let smesh = grid.spatial_mesh();
    let tmesh = grid.temporal_mesh();
    let xs = smesh.interior();
    (1..grid.n_levels())
        .map(|n| {
            let t = tmesh.t(n);
            discrete_l2(
                smesh.h(),
                grid.level(n).iter().zip(&xs).map(|(u, &x)| u - exact(x, t)),
            )
        })
        .fold(0.0, f64::max)
}

/// Final-level distance between a coarse solution and a refined reference, on the
/// coarse spatial nodes.
pub fn self_reference_error(coarse: &SolutionGrid, fine: &SolutionGrid, axis: Axis) -> Result<f64> {
    let (cs, fs) = (coarse.spatial_mesh(), fine.spatial_mesh());
    let (ct, ft) = (coarse.temporal_mesh(), fine.temporal_mesh());
    if (ct.horizon() - ft.horizon()).abs() > 1e-12 * ct.horizon() {
        return Err(Error::IncompatibleGrids("final times differ".into()));
    }
    if (cs.x_left() - fs.x_left()).abs() > 0.0 || (cs.x_right() - fs.x_right()).abs() > 0.0 {
        return Err(Error::IncompatibleGrids("spatial domains differ".into()));
    }
    let stride = match axis {
        Axis::Time => {
            if cs.intervals() != fs.intervals() {
                return Err(Error::IncompatibleGrids(format!(
                    "temporal comparison needs equal spatial grids, got M = {} and {}",
                    cs.intervals(),
                    fs.intervals()
                )));
            }
            1
        }
        Axis::Space => {
            if fs.intervals() % cs.intervals() != 0 {
                return Err(Error::IncompatibleGrids(format!(
                    "M = {} does not divide M = {}",
                    cs.intervals(),
                    fs.intervals()
                )));
            }
            fs.intervals() / cs.intervals()
        }
    };
    let (uc, uf) = (coarse.final_level(), fine.final_level());
    // Interior node i of the coarse grid is interior node i·stride of the fine grid.
    let diff = uc
        .iter()
        .enumerate()
        .map(|(i, u)| u - uf[(i + 1) * stride - 1]);
    Ok(discrete_l2(cs.h(), diff))
}

/// One line of a convergence table; `size` is `N` or `M` depending on the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub size: usize,
    pub error: f64,
    pub rate: Option<f64>,
}

/// Attach `log2(e_prev/e_curr)` rates to a list of `(size, error)` pairs.
pub fn with_rates(points: &[(usize, f64)]) -> Vec<ConvergenceRow> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(size, error))| ConvergenceRow {
            size,
            error,
            rate: (i > 0).then(|| (points[i - 1].1 / error).log2()),
        })
        .collect()
}

/// Parameters of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub axis: Axis,
    /// `N` (time studies: first row; space studies: fixed).
    pub base_n: usize,
    /// `M` (space studies: first row; time studies: fixed).
    pub base_m: usize,
    pub doublings: usize,
    /// Grading exponent of `t_k = T (k/N)^γ`.
    pub gamma: f64,
    pub solver: SolverOptions,
    /// Reference resolution for problems without an exact solution.
    pub reference: usize,
}

fn run(
    problem: &HomogenizedSpec,
    n: usize,
    m: usize,
    gamma: f64,
    options: &SolverOptions,
) -> Result<SolutionGrid> {
    let tmesh = TemporalMesh::graded(problem.horizon, n, gamma, problem.alpha)?;
    let smesh = SpatialMesh::new(problem.x_left, problem.x_right, m)?;
    solve(problem, &tmesh, &smesh, options)
}

/// Errors and observed rates for `doublings + 1` successive refinements.
///
/// With an exact solution the error is `E_2`; otherwise it is the final-level distance to
/// a reference run with `reference` steps (time) or intervals (space).
pub fn convergence_study(
    problem: &HomogenizedSpec,
    cfg: &StudyConfig,
) -> Result<Vec<ConvergenceRow>> {
    if cfg.base_n == 0 || cfg.base_m == 0 {
        return Err(crate::error::invalid("N/M", "base sizes must be positive"));
    }
    let sizes: Vec<usize> = (0..=cfg.doublings)
        .map(|j| match cfg.axis {
            Axis::Time => cfg.base_n << j,
            Axis::Space => cfg.base_m << j,
        })
        .collect();
    let dims = |size: usize| match cfg.axis {
        Axis::Time => (size, cfg.base_m),
        Axis::Space => (cfg.base_n, size),
    };
    let reference = match &problem.exact {
        Some(_) => None,
        None => {
            let (n, m) = dims(cfg.reference);
            Some(run(problem, n, m, cfg.gamma, &cfg.solver)?)
        }
    };
    let errors: Vec<(usize, f64)> = sizes
        .par_iter()
        .map(|&size| {
            let (n, m) = dims(size);
            let grid = run(problem, n, m, cfg.gamma, &cfg.solver)?;
            let err = match (&problem.exact, &reference) {
                (Some(exact), _) => l2_error_max(&grid, exact),
                (None, Some(fine)) => self_reference_error(&grid, fine, cfg.axis)?,
                (None, None) => unreachable!("reference is built when no exact solution exists"),
            };
            Ok((size, err))
        })
        .collect::<Result<_>>()?;
    Ok(with_rates(&errors))
}

/// Kernel checks for one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshKernelReport {
    pub n_steps: usize,
    pub rho_max: f64,
    pub a1_fast: bool,
    pub a2_fast: bool,
    pub a1_direct: bool,
    pub a2_direct: bool,
    /// `max |A_fast - A_direct|` over all rows.
    pub fast_direct_gap: f64,
    /// Largest ratio of a row's gap to its allowance `10 ε N_q + 32 u A_0`, with `u` the
    /// unit roundoff; the second term covers rounding in rows with very large kernels.
    pub gap_ratio: f64,
    /// `max |Σ P A - 1|`.
    pub identity_residual: f64,
    pub sum_bound: bool,
    /// Set when a row could not be assembled (e.g. inadmissible tolerance).
    pub failure: Option<String>,
}

impl MeshKernelReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
            && self.a1_fast
            && self.a2_fast
            && self.a1_direct
            && self.a2_direct
            && self.gap_ratio <= 1.0
            && self.identity_residual <= 1e-10
            && self.sum_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub soe_len: usize,
    pub meshes: Vec<MeshKernelReport>,
}

impl KernelReport {
    pub fn failures(&self) -> usize {
        self.meshes.iter().filter(|m| !m.passed()).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

fn check_mesh(mesh: &TemporalMesh, soe: &SoeApproximation) -> MeshKernelReport {
    let n = mesh.n_steps();
    let mut report = MeshKernelReport {
        n_steps: n,
        rho_max: mesh.check_m1().rho_max,
        a1_fast: true,
        a2_fast: true,
        a1_direct: true,
        a2_direct: true,
        fast_direct_gap: 0.0,
        gap_ratio: 0.0,
        identity_residual: 0.0,
        sum_bound: true,
        failure: None,
    };
    let soe_allowance = 10.0 * soe.epsilon() * soe.len() as f64;
    let mut fast_rows: Vec<KernelRow> = Vec::with_capacity(n);
    for level in 1..=n {
        let (fast, direct) = match (
            assemble_fast_kernel_row(mesh, level, soe),
            assemble_direct_kernel_row(mesh, level),
        ) {
            (Ok(f), Ok(d)) => (f, d),
            (Err(e), _) | (_, Err(e)) => {
                report.failure = Some(e.to_string());
                return report;
            }
        };
        report.a1_fast &= fast.satisfies_lower_bound(mesh, PI_A);
        report.a2_fast &= fast.is_positive_monotone();
        report.a1_direct &= direct.satisfies_lower_bound(mesh, PI_A);
        report.a2_direct &= direct.is_positive_monotone();
        let gap = fast
            .values()
            .iter()
            .zip(direct.values())
            .map(|(f, d)| (f - d).abs())
            .fold(0.0, f64::max);
        report.fast_direct_gap = report.fast_direct_gap.max(gap);
        let allowance = soe_allowance + 32.0 * f64::EPSILON * direct.diagonal().abs();
        report.gap_ratio = report.gap_ratio.max(gap / allowance);
        fast_rows.push(fast);
    }
    match complementary_kernels(&fast_rows) {
        Ok(p) => {
            report.identity_residual = p.identity_residual(&fast_rows);
            report.sum_bound = p.all_nonnegative()
                && p.satisfies_sum_bound(mesh, 0)
                && p.satisfies_sum_bound(mesh, 1);
        }
        Err(e) => report.failure = Some(e.to_string()),
    }
    report
}

/// A1, A2, fast/direct agreement and the complementary-kernel properties on every mesh.
///
/// One SOE is built for all meshes, valid down to the smallest `(1-θ)τ_k` among them.
/// Failures are recorded in the report rather than returned as errors.
pub fn verify_kernel_properties(
    alpha: f64,
    meshes: &[TemporalMesh],
    epsilon: f64,
) -> Result<KernelReport> {
    if meshes.is_empty() {
        return Err(crate::error::invalid("meshes", "need at least one mesh"));
    }
    let theta = 0.5 * alpha;
    let mut dt = f64::INFINITY;
    let mut horizon: f64 = 0.0;
    for m in meshes {
        if (m.alpha() - alpha).abs() > 1e-15 {
            return Err(crate::error::invalid(
                "alpha",
                "meshes must share the order alpha",
            ));
        }
        dt = dt.min((1.0 - theta) * m.min_step());
        horizon = horizon.max(m.horizon());
    }
    let bound = admissible_epsilon(alpha, horizon);
    if epsilon > bound {
        return Err(Error::ToleranceViolation { epsilon, bound });
    }
    let horizon = if dt < horizon { horizon } else { 2.0 * dt };
    let soe = SoeApproximation::build(alpha, epsilon, dt, horizon)?;
    let reports = meshes.par_iter().map(|m| check_mesh(m, &soe)).collect();
    Ok(KernelReport {
        alpha,
        epsilon,
        soe_len: soe.len(),
        meshes: reports,
    })
}

/// Seeded random meshes on `[0, horizon]` with `2 <= N <= max_n` and every ratio
/// `ρ_k = τ_k/τ_{k+1}` drawn from `[1/5, 1.74]`, so M1 holds with a little margin.
pub fn random_m1_meshes(
    alpha: f64,
    horizon: f64,
    count: usize,
    max_n: usize,
    seed: u64,
) -> Result<Vec<TemporalMesh>> {
    if max_n < 2 {
        return Err(crate::error::invalid("max_n", "need at least two steps"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(2..=max_n);
            let mut steps = Vec::with_capacity(n);
            steps.push(1.0_f64);
            for _ in 1..n {
                let rho: f64 = rng.gen_range(0.2..=1.74);
                let last = *steps.last().unwrap();
                steps.push(last / rho);
            }
            let total: f64 = steps.iter().sum();
            steps.iter_mut().for_each(|s| *s *= horizon / total);
            TemporalMesh::from_steps(&steps, alpha)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::example1;
    use std::sync::Arc;

    #[test]
    fn rates_from_errors() {
        let rows = with_rates(&[(8, 4.0), (16, 1.0), (32, 0.5)]);
        assert_eq!(rows[0].rate, None);
        assert_eq!(rows[1].rate, Some(2.0));
        assert_eq!(rows[2].rate, Some(1.0));
    }

    #[test]
    fn exact_grid_has_zero_error() {
        let p = example1(0.5).unwrap();
        let tmesh = TemporalMesh::graded(1.0, 4, 4.0, 0.5).unwrap();
        let smesh = SpatialMesh::new(0.0, 1.0, 8).unwrap();
        let grid = solve(&p, &tmesh, &smesh, &SolverOptions::default()).unwrap();
        let zero: FieldFn = Arc::new(|_, _| 0.0);
        let e = l2_error_max(&grid, &zero);
        assert!(e > 0.0);
        assert_eq!(self_reference_error(&grid, &grid, Axis::Time).unwrap(), 0.0);
        assert_eq!(
            self_reference_error(&grid, &grid, Axis::Space).unwrap(),
            0.0
        );
    }

    #[test]
    fn incompatible_spatial_grids() {
        let p = example1(0.5).unwrap();
        let tmesh = TemporalMesh::graded(1.0, 4, 4.0, 0.5).unwrap();
        let a = solve(
            &p,
            &tmesh,
            &SpatialMesh::new(0.0, 1.0, 6).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        let b = solve(
            &p,
            &tmesh,
            &SpatialMesh::new(0.0, 1.0, 8).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(matches!(
            self_reference_error(&a, &b, Axis::Space),
            Err(Error::IncompatibleGrids(_))
        ));
        assert!(matches!(
            self_reference_error(&a, &b, Axis::Time),
            Err(Error::IncompatibleGrids(_))
        ));
    }

    #[test]
    fn kernel_report_single_step() {
        let mesh = TemporalMesh::uniform(1.0, 1, 0.5).unwrap();
        let rep = verify_kernel_properties(0.5, &[mesh], 1e-12).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn random_meshes_respect_ratio_bound() {
        let meshes = random_m1_meshes(0.5, 1.0, 50, 64, 7).unwrap();
        assert_eq!(meshes.len(), 50);
        for m in &meshes {
            assert!(m.check_m1().ok);
            assert!((2..=64).contains(&m.n_steps()));
            assert!((m.horizon() - 1.0).abs() < 1e-12);
        }
        assert_eq!(meshes, random_m1_meshes(0.5, 1.0, 50, 64, 7).unwrap());
    }

    #[test]
    fn kernel_report_graded_meshes() {
        let meshes: Vec<TemporalMesh> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&g| TemporalMesh::graded(1.0, 32, g, 0.5).unwrap())
            .collect();
        let rep = verify_kernel_properties(0.5, &meshes, 1e-12).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
