//! Discrete Caputo derivative on nonuniform meshes (nonuniform Alikhanov formula).
//!
//! At the off-set point `t_{n-θ}` the derivative is split into a local part on
//! `[t_{n-1}, t_{n-θ}]`, discretised by linear interpolation, and a history part on
//! `[0, t_{n-1}]`, discretised by quadratic interpolation on each `[t_{k-1}, t_k]` through
//! `t_{k-1}, t_k, t_{k+1}`. The result is the convolution form
//!
//! ```text
//! (D_τ^α u)^{n-θ} = Σ_{k=1}^{n} A_{n-k}^{(n)} ∇_τ u^k .
//! ```
//!
//! In the fast variant the history kernel is replaced by its SOE approximation, so each
//! exponential carries an accumulator `Q^l` updated by a two-term recursion and the
//! per-step cost no longer grows with `n`. The direct variant integrates the exact
//! kernel and is kept as an oracle.

use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::quadrature::gauss_legendre;
use crate::soe::SoeApproximation;
use crate::special::{centered_moment, gamma, omega, phi1};

/// Points per subinterval used by the direct (exact-kernel) path.
pub const DIRECT_QUADRATURE_POINTS: usize = 64;

/// Constant `π_A` in the kernel lower bound (A1).
pub const PI_A: f64 = 11.0 / 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelMode {
    Fast,
    Direct,
}

/// The kernels `A_{n-k}^{(n)}` of one time level, stored for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    level: usize,
    values: Vec<f64>,
    mode: KernelMode,
}

impl KernelRow {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// `A_{n-1}^{(n)}, …, A_0^{(n)}`: entry `k-1` multiplies `∇_τ u^k`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `A_{n-k}^{(n)}` for `1 <= k <= n`.
    pub fn coeff(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    /// The diagonal entry `A_0^{(n)}`.
    pub fn diagonal(&self) -> f64 {
        self.values[self.level - 1]
    }

    /// `Σ_k A_{n-k}^{(n)} ∇_τ u^k` for scalar increments.
    pub fn apply(&self, increments: &[f64]) -> f64 {
        self.values.iter().zip(increments).map(|(a, g)| a * g).sum()
    }

    /// A2: `A_0 >= A_1 >= … >= A_{n-1} > 0`.
    pub fn is_positive_monotone(&self) -> bool {
        self.values[0] > 0.0 && self.values.windows(2).all(|p| p[1] >= p[0])
    }

    /// A1 with constant `pi_a`: `A_{n-k} >= (1/(π_A τ_k)) ∫_{t_{k-1}}^{t_k} ω_{1-α}(t_n - s) ds`.
    pub fn satisfies_lower_bound(&self, mesh: &TemporalMesh, pi_a: f64) -> bool {
        let n = self.level;
        (1..=n).all(|k| self.coeff(k) >= lower_bound_integral(mesh, n, k) / pi_a)
    }
}

/// `(1/τ_k) ∫_{t_{k-1}}^{t_k} ω_{1-α}(t_n - s) ds` in closed form.
pub fn lower_bound_integral(mesh: &TemporalMesh, n: usize, k: usize) -> f64 {
    let alpha = mesh.alpha();
    let far = mesh.t(n) - mesh.t(k - 1);
    let near = mesh.t(n) - mesh.t(k);
    (far.powf(1.0 - alpha) - near.max(0.0).powf(1.0 - alpha)) / (mesh.tau(k) * gamma(2.0 - alpha))
}

/// Largest SOE tolerance for which the kernel properties hold:
/// `min{7/11, θ/(1-α)} · ω_{1-α}(T)`.
pub fn admissible_epsilon(alpha: f64, horizon: f64) -> f64 {
    let theta = 0.5 * alpha;
    (7.0_f64 / 11.0).min(theta / (1.0 - alpha)) * omega(1.0 - alpha, horizon)
}

/// Local coefficient `a_0^{(n)} = ((1-θ)τ_n)^{1-α} / (τ_n Γ(2-α))`.
pub fn local_coeff_a0(mesh: &TemporalMesh, n: usize) -> f64 {
    let alpha = mesh.alpha();
    let tau = mesh.tau(n);
    ((1.0 - mesh.theta()) * tau).powf(1.0 - alpha) / (tau * gamma(2.0 - alpha))
}

/// Distance `t_{n-θ} - t_k` computed without cancellation.
fn offset_distance(mesh: &TemporalMesh, n: usize, k: usize) -> f64 {
    (mesh.t(n - 1) - mesh.t(k)) + (1.0 - mesh.theta()) * mesh.tau(n)
}

/// Closed forms of `c^{(k,l)}` and `d^{(k,l)}` for one exponent `s`:
///
/// `c = E φ₁(sτ_k)` and `d = E · 2ρ_k/(1+ρ_k) · g(sτ_k)` with `E = e^{-s(t_{n-θ}-t_k)}`,
/// `φ₁(x) = (1-e^{-x})/x` and `g(λ) = ∫_0^1 e^{-λy}(1/2-y) dy`.
fn cd_pair(s: f64, distance: f64, tau_k: f64, rho_k: f64) -> (f64, f64) {
    let e = (-s * distance).exp();
    let lambda = s * tau_k;
    let c = e * phi1(lambda);
    let d = e * (2.0 * rho_k / (1.0 + rho_k)) * centered_moment(lambda);
    (c, d)
}

/// Per-node history coefficients `c^{(k,l)}`, `d^{(k,l)}` for level `n`, `1 <= k <= n-1`.
pub fn history_coeffs(
    mesh: &TemporalMesh,
    n: usize,
    k: usize,
    soe: &SoeApproximation,
) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1 && k < n, "history coefficients need 1 <= k <= n-1");
    let dist = offset_distance(mesh, n, k);
    let (tau_k, rho_k) = (mesh.tau(k), mesh.rho(k));
    soe.nodes()
        .iter()
        .map(|&s| cd_pair(s, dist, tau_k, rho_k))
        .unzip()
}

/// Weighted sums `(Σ_l ϖ^l c^{(k,l)}, Σ_l ϖ^l d^{(k,l)})`.
fn weighted_cd(mesh: &TemporalMesh, n: usize, k: usize, soe: &SoeApproximation) -> (f64, f64) {
    let dist = offset_distance(mesh, n, k);
    let (tau_k, rho_k) = (mesh.tau(k), mesh.rho(k));
    let mut c_sum = 0.0;
    let mut d_sum = 0.0;
    for (&s, &w) in soe.nodes().iter().zip(soe.weights()) {
        let (c, d) = cd_pair(s, dist, tau_k, rho_k);
        c_sum += w * c;
        d_sum += w * d;
    }
    (c_sum, d_sum)
}

/// Exact-kernel counterparts of the weighted sums, by Gauss–Legendre quadrature:
/// `(1/τ_k) ∫ ω(t_{n-θ}-s) ds` and `∫ ω(t_{n-θ}-s) 2(s-t_{k-1/2})/(τ_k(τ_k+τ_{k+1})) ds`.
fn direct_cd(mesh: &TemporalMesh, n: usize, k: usize) -> (f64, f64) {
    let rule = gauss_legendre(DIRECT_QUADRATURE_POINTS);
    let beta = 1.0 - mesh.alpha();
    let g = gamma(beta);
    let dist = offset_distance(mesh, n, k);
    let tau_k = mesh.tau(k);
    let tau_next = mesh.tau(k + 1);
    let half = 0.5 * tau_k;
    let mut c = 0.0;
    let mut d = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        // s = t_{k-1/2} + half x; kernel argument measured from t_k to avoid cancellation.
        let arg = dist + half * (1.0 - x);
        let kern = arg.powf(beta - 1.0) / g;
        c += w * kern;
        d += w * kern * x;
    }
    let c = c * half / tau_k;
    let d = d * half * 2.0 * half / (tau_k * (tau_k + tau_next));
    (c, d)
}

fn assemble_row(
    mesh: &TemporalMesh,
    n: usize,
    mode: KernelMode,
    mut sums: impl FnMut(usize) -> (f64, f64),
) -> KernelRow {
    let a0 = local_coeff_a0(mesh, n);
    if n == 1 {
        return KernelRow {
            level: 1,
            values: vec![a0],
            mode,
        };
    }
    let cd: Vec<(f64, f64)> = (1..n).map(&mut sums).collect();
    let mut values = Vec::with_capacity(n);
    values.push(cd[0].0 - cd[0].1);
    for k in 2..n {
        let (c_k, d_k) = cd[k - 1];
        let d_prev = cd[k - 2].1;
        values.push(mesh.rho(k - 1) * d_prev + c_k - d_k);
    }
    values.push(a0 + mesh.rho(n - 1) * cd[n - 2].1);
    KernelRow {
        level: n,
        values,
        mode,
    }
}

fn check_level(mesh: &TemporalMesh, n: usize) -> Result<()> {
    if n < 1 || n > mesh.n_steps() {
        return Err(crate::error::invalid(
            "n",
            format!("level must lie in 1..={}, got {n}", mesh.n_steps()),
        ));
    }
    Ok(())
}

/// Check that the SOE is usable for level `n` of `mesh`.
fn check_soe(mesh: &TemporalMesh, n: usize, soe: &SoeApproximation) -> Result<()> {
    if (soe.alpha() - mesh.alpha()).abs() > 1e-15 {
        return Err(crate::error::invalid(
            "soe",
            format!(
                "built for alpha = {}, mesh has {}",
                soe.alpha(),
                mesh.alpha()
            ),
        ));
    }
    let bound = admissible_epsilon(mesh.alpha(), mesh.horizon());
    if soe.epsilon() > bound {
        return Err(Error::ToleranceViolation {
            epsilon: soe.epsilon(),
            bound,
        });
    }
    if n >= 2 {
        let lo = (1.0 - mesh.theta()) * mesh.tau(n);
        let hi = mesh.t_offset(n);
        if lo < soe.delta_t() * (1.0 - 1e-12) || hi > soe.horizon() * (1.0 + 1e-12) {
            let t = if lo < soe.delta_t() { lo } else { hi };
            return Err(Error::OutOfDomain {
                t,
                lower: soe.delta_t(),
                upper: soe.horizon(),
            });
        }
    }
    Ok(())
}

/// Kernel row of the fast (SOE) formula at level `n`.
pub fn assemble_fast_kernel_row(
    mesh: &TemporalMesh,
    n: usize,
    soe: &SoeApproximation,
) -> Result<KernelRow> {
    check_level(mesh, n)?;
    check_soe(mesh, n, soe)?;
    Ok(assemble_row(mesh, n, KernelMode::Fast, |k| {
        weighted_cd(mesh, n, k, soe)
    }))
}

/// Kernel row of the classical nonuniform Alikhanov formula (exact kernel) at level `n`.
pub fn assemble_direct_kernel_row(mesh: &TemporalMesh, n: usize) -> Result<KernelRow> {
    check_level(mesh, n)?;
    Ok(assemble_row(mesh, n, KernelMode::Direct, |k| {
        direct_cd(mesh, n, k)
    }))
}

/// All kernel rows `1..=N` for the given mode.
pub fn assemble_rows(
    mesh: &TemporalMesh,
    mode: KernelMode,
    soe: Option<&SoeApproximation>,
) -> Result<Vec<KernelRow>> {
    (1..=mesh.n_steps())
        .map(|n| match (mode, soe) {
            (KernelMode::Fast, Some(soe)) => assemble_fast_kernel_row(mesh, n, soe),
            (KernelMode::Fast, None) if n == 1 => {
                assemble_direct_kernel_row(mesh, 1).map(|r| KernelRow {
                    mode: KernelMode::Fast,
                    ..r
                })
            }
            (KernelMode::Fast, None) => Err(crate::error::invalid("soe", "fast mode needs an SOE")),
            (KernelMode::Direct, _) => assemble_direct_kernel_row(mesh, n),
        })
        .collect()
}

/// Output of one history step: the known part of the discrete derivative per spatial node
/// and the coefficient of the unknown increment contributed by the history term.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryTerms {
    pub known: Vec<f64>,
    pub unknown_coeff: f64,
}

/// Accumulators `Q^l` of the fast history recursion, one per (spatial node, exponential).
///
/// Usage per level `n >= 2`: [`FastHistory::begin`] with `∇_τ u^{n-1}`, solve for `u^n`,
/// then [`FastHistory::complete`] with `∇_τ u^n`. Level 1 has no history.
#[derive(Debug, Clone)]
pub struct FastHistory {
    n_q: usize,
    n_space: usize,
    q: Vec<f64>,
    pending: Vec<f64>,
    next: usize,
    open: bool,
}

impl FastHistory {
    /// Fresh state with `Q^l(t_0) = 0`.
    pub fn new(n_q: usize, n_space: usize) -> Self {
        FastHistory {
            n_q,
            n_space,
            q: vec![0.0; n_q * n_space],
            pending: vec![0.0; n_q],
            next: 2,
            open: false,
        }
    }

    /// Next level expected by [`Self::begin`].
    pub fn next_level(&self) -> usize {
        self.next
    }

    /// Advance `Q^l(t_{n-2}) → Q̂^l` and return the known history and the unknown coefficient:
    ///
    /// `Q̂^l = e^{-s^l(θτ_{n-1}+(1-θ)τ_n)} Q^l(t_{n-2}) + (a^{(n-1,l)} - b^{(n-1,l)}) ∇_τ u^{n-1}`,
    /// known `= Σ_l ϖ^l Q̂^l`, unknown coefficient `= ρ_{n-1} Σ_l ϖ^l b^{(n-1,l)}`.
    pub fn begin(
        &mut self,
        mesh: &TemporalMesh,
        n: usize,
        soe: &SoeApproximation,
        grad_prev: &[f64],
    ) -> Result<HistoryTerms> {
        if self.open || n != self.next {
            return Err(Error::StateOrder(format!(
                "begin({n}) called while expecting {}{}",
                if self.open {
                    "complete for level "
                } else {
                    "begin("
                },
                self.next
            )));
        }
        if soe.len() != self.n_q {
            return Err(Error::DimensionMismatch {
                expected: self.n_q,
                got: soe.len(),
            });
        }
        if grad_prev.len() != self.n_space {
            return Err(Error::DimensionMismatch {
                expected: self.n_space,
                got: grad_prev.len(),
            });
        }
        check_level(mesh, n)?;
        check_soe(mesh, n, soe)?;

        let theta = mesh.theta();
        let tau_prev = mesh.tau(n - 1);
        let tau_n = mesh.tau(n);
        let rho = mesh.rho(n - 1);
        let shift = theta * tau_prev + (1.0 - theta) * tau_n;
        let dist = (1.0 - theta) * tau_n;

        let n_q = self.n_q;
        let mut decay = Vec::with_capacity(n_q);
        let mut gain = Vec::with_capacity(n_q);
        let weights = soe.weights();
        let mut unknown = 0.0;
        for (l, &s) in soe.nodes().iter().enumerate() {
            let (a, b) = cd_pair(s, dist, tau_prev, rho);
            decay.push((-s * shift).exp());
            gain.push(a - b);
            self.pending[l] = rho * b;
            unknown += weights[l] * rho * b;
        }

        let mut known = vec![0.0; self.n_space];
        for (i, (row, &g)) in self.q.chunks_exact_mut(n_q).zip(grad_prev).enumerate() {
            let mut acc = 0.0;
            for l in 0..n_q {
                let v = decay[l] * row[l] + gain[l] * g;
                row[l] = v;
                acc += weights[l] * v;
            }
            known[i] = acc;
        }
        self.open = true;
        Ok(HistoryTerms {
            known,
            unknown_coeff: unknown,
        })
    }

    /// Finalise `Q^l(t_{n-1}) = Q̂^l + ρ_{n-1} b^{(n-1,l)} ∇_τ u^n` once `u^n` is known.
    pub fn complete(&mut self, grad: &[f64]) -> Result<()> {
        if !self.open {
            return Err(Error::StateOrder(format!(
                "complete called before begin({})",
                self.next
            )));
        }
        if grad.len() != self.n_space {
            return Err(Error::DimensionMismatch {
                expected: self.n_space,
                got: grad.len(),
            });
        }
        let n_q = self.n_q;
        for (row, &g) in self.q.chunks_exact_mut(n_q).zip(grad) {
            for (q, p) in row.iter_mut().zip(&self.pending) {
                *q += p * g;
            }
        }
        self.open = false;
        self.next += 1;
        Ok(())
    }
}

/// Complementary kernels `P_{n-j}^{(n)}` with `Σ_{j=k}^n P_{n-j}^{(n)} A_{j-k}^{(j)} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplementaryKernels {
    /// `p[n-1][j-1] = P_{n-j}^{(n)}`.
    p: Vec<Vec<f64>>,
}

impl ComplementaryKernels {
    pub fn levels(&self) -> usize {
        self.p.len()
    }

    /// `P_{n-j}^{(n)}` for `1 <= j <= n`.
    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.p[n - 1][j - 1]
    }

    pub fn all_nonnegative(&self) -> bool {
        self.p.iter().flatten().all(|&v| v >= 0.0)
    }

    /// `max_{n,k} |Σ_{j=k}^n P_{n-j}^{(n)} A_{j-k}^{(j)} - 1|`.
    pub fn identity_residual(&self, rows: &[KernelRow]) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 1..=self.levels() {
            for k in 1..=n {
                let s: f64 = (k..=n).map(|j| self.get(n, j) * rows[j - 1].coeff(k)).sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }

    /// `Σ_{j=1}^n P_{n-j}^{(n)} ω_{1+(m-1)α}(t_j) <= (11/4) ω_{1+mα}(t_n)` for every level.
    pub fn satisfies_sum_bound(&self, mesh: &TemporalMesh, m: u32) -> bool {
        let alpha = mesh.alpha();
        let m = f64::from(m);
        (1..=self.levels()).all(|n| {
            let lhs: f64 = (1..=n)
                .map(|j| self.get(n, j) * omega(1.0 + (m - 1.0) * alpha, mesh.t(j)))
                .sum();
            let rhs = PI_A * omega(1.0 + m * alpha, mesh.t(n));
            lhs <= rhs * (1.0 + 1e-12)
        })
    }
}

/// Complementary kernels from rows `1..=n` via
/// `P_{n-k}^{(n)} = (1/A_0^{(k)}) Σ_{j=k+1}^n P_{n-j}^{(n)} (A_{j-k-1}^{(j)} - A_{j-k}^{(j)})`.
pub fn complementary_kernels(rows: &[KernelRow]) -> Result<ComplementaryKernels> {
    for (idx, row) in rows.iter().enumerate() {
        if row.level() != idx + 1 {
            return Err(crate::error::invalid(
                "rows",
                "rows must be levels 1, 2, … in order",
            ));
        }
        if !(row.diagonal() > 0.0) {
            return Err(Error::SingularKernel { level: idx + 1 });
        }
    }
    let levels = rows.len();
    let mut p = Vec::with_capacity(levels);
    for n in 1..=levels {
        let mut pn = vec![0.0; n];
        pn[n - 1] = 1.0 / rows[n - 1].diagonal();
        for k in (1..n).rev() {
            let mut acc = 0.0;
            for j in (k + 1)..=n {
                let row = &rows[j - 1];
                acc += pn[j - 1] * (row.coeff(k + 1) - row.coeff(k));
            }
            pn[k - 1] = acc / rows[k - 1].diagonal();
        }
        p.push(pn);
    }
    Ok(ComplementaryKernels { p })
}
