//! Compact fourth-order discretisation of `a u_xx + b u_x` on a uniform grid.
//!
//! With `δ_x²` and `δ_x̂` the second and first central differences, the averaging operator
//! `H = (h²/12)(δ_x² + (b/a) δ_x̂) + 1` gives
//!
//! ```text
//! H (a u_xx + b u_x) = (a + h²b²/(12a)) δ_x² u + b δ_x̂ u + O(h⁴).
//! ```
//!
//! On the `M-1` interior nodes the matrices are `A = tridiag(1, -2, 1)`,
//! `S = tridiag(-1, 0, 1)` and `H = A/12 + (hb/(24a)) S + I`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tridiagonal matrix of order `n`; `sub[i]` sits at `(i+1, i)` and `sup[i]` at `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TriDiag {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(crate::error::invalid(
                "diag",
                "matrix order must be positive",
            ));
        }
        for side in [&sub, &sup] {
            if side.len() != n - 1 {
                return Err(Error::DimensionMismatch {
                    expected: n - 1,
                    got: side.len(),
                });
            }
        }
        Ok(TriDiag { sub, diag, sup })
    }

    /// Constant-band (Toeplitz) matrix of order `n`.
    pub fn constant(n: usize, lower: f64, centre: f64, upper: f64) -> Self {
        TriDiag {
            sub: vec![lower; n.saturating_sub(1)],
            diag: vec![centre; n],
            sup: vec![upper; n.saturating_sub(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(n, 0.0, 1.0, 0.0)
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &TriDiag, beta: f64) -> TriDiag {
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(p, q)| alpha * p + beta * q).collect()
        };
        TriDiag {
            sub: mix(&self.sub, &other.sub),
            diag: mix(&self.diag, &other.diag),
            sup: mix(&self.sup, &other.sup),
        }
    }

    /// `y = self · x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.order();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; n];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `y = self · x` without allocation; lengths must match.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.order();
        debug_assert!(x.len() == n && y.len() == n);
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * x[i + 1];
            }
            y[i] = v;
        }
    }

    /// Strict row diagonal dominance.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.order();
        (0..n).all(|i| {
            let mut off = 0.0;
            if i > 0 {
                off += self.sub[i - 1].abs();
            }
            if i + 1 < n {
                off += self.sup[i].abs();
            }
            self.diag[i].abs() > off
        })
    }

    /// Row-major dense copy, for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.order();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i > 0 {
                m[i][i - 1] = self.sub[i - 1];
            }
            if i + 1 < n {
                m[i][i + 1] = self.sup[i];
            }
        }
        m
    }
}

/// Solve `m x = rhs` by Thomas elimination (no pivoting).
pub fn thomas_solve(m: &TriDiag, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.order();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let mut upper = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = m.diag[0];
    if pivot == 0.0 {
        return Err(Error::ZeroPivot { row: 0 });
    }
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        upper[i - 1] = m.sup[i - 1] / pivot;
        pivot = m.diag[i] - m.sub[i - 1] * upper[i - 1];
        if pivot == 0.0 {
            return Err(Error::ZeroPivot { row: i });
        }
        x[i] = (rhs[i] - m.sub[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= upper[i] * x[i + 1];
    }
    Ok(x)
}

/// The matrices `A`, `S`, `H` for given `a`, `b`, `h` on `M-1` interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactOperator {
    a: f64,
    b: f64,
    h: f64,
    second: TriDiag,
    first: TriDiag,
    averaging: TriDiag,
}

impl CompactOperator {
    /// Requires `a > 0`, `h > 0`, `M >= 2` and `h < 2a/|b|`.
    pub fn new(a: f64, b: f64, h: f64, m: usize) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(crate::error::invalid(
                "a",
                format!("diffusion must be positive, got {a}"),
            ));
        }
        if !b.is_finite() {
            return Err(crate::error::invalid("b", "convection must be finite"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(crate::error::invalid(
                "h",
                format!("step must be positive, got {h}"),
            ));
        }
        if m < 2 {
            return Err(crate::error::invalid(
                "M",
                "need at least one interior node",
            ));
        }
        if b != 0.0 {
            let bound = 2.0 * a / b.abs();
            if h >= bound {
                return Err(Error::Inadmissible { h, bound });
            }
        }
        let n = m - 1;
        let second = TriDiag::constant(n, 1.0, -2.0, 1.0);
        let first = TriDiag::constant(n, -1.0, 0.0, 1.0);
        let skew = h * b / (24.0 * a);
        let averaging = TriDiag::constant(n, 1.0 / 12.0 - skew, 10.0 / 12.0, 1.0 / 12.0 + skew);
        Ok(CompactOperator {
            a,
            b,
            h,
            second,
            first,
            averaging,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior unknowns `M-1`.
    pub fn interior_len(&self) -> usize {
        self.averaging.order()
    }

    /// `A = tridiag(1, -2, 1)`.
    pub fn second_difference(&self) -> &TriDiag {
        &self.second
    }

    /// `S = tridiag(-1, 0, 1)`.
    pub fn first_difference(&self) -> &TriDiag {
        &self.first
    }

    /// `H = A/12 + (hb/(24a)) S + I`.
    pub fn averaging(&self) -> &TriDiag {
        &self.averaging
    }

    /// Weights `(1/12 - hb/(24a), 1/12 + hb/(24a))` of the boundary values in `H`.
    pub fn boundary_weights(&self) -> (f64, f64) {
        let skew = self.h * self.b / (24.0 * self.a);
        (1.0 / 12.0 - skew, 1.0 / 12.0 + skew)
    }

    /// `H v` including the boundary contributions of `v_left`, `v_right`.
    pub fn apply_h(&self, v: &[f64], v_left: f64, v_right: f64) -> Result<Vec<f64>> {
        let mut out = self.averaging.matvec(v)?;
        let (wl, wr) = self.boundary_weights();
        out[0] += wl * v_left;
        let last = out.len() - 1;
        out[last] += wr * v_right;
        Ok(out)
    }

    /// Spatial operator of the scheme with zero boundary values:
    /// `L = c H - (a/h² + b²/(12a)) A - (b/(2h)) S`.
    pub fn scheme_operator(&self, c: f64) -> TriDiag {
        let diff = self.a / (self.h * self.h) + self.b * self.b / (12.0 * self.a);
        let conv = self.b / (2.0 * self.h);
        self.averaging
            .combine(c, &self.second, -diff)
            .combine(1.0, &self.first, -conv)
    }
}

/// Rayleigh-quotient sweep over random unit vectors and the discrete sine modes.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPropertyReport {
    pub samples: usize,
    /// Extremes of `wᵀHᵀHw / wᵀw`.
    pub hth_min: f64,
    pub hth_max: f64,
    /// Largest `wᵀ(HᵀA + AH)w / wᵀw`.
    pub ha_max: f64,
    /// Largest `wᵀ[(a/h²)(HᵀA + AH) + (b/(2h))(HᵀS + SᵀH)]w / wᵀw`.
    pub combined_max: f64,
}

impl MatrixPropertyReport {
    pub fn hth_ok(&self, slack: f64) -> bool {
        self.hth_min >= 5.0 / 12.0 - slack && self.hth_max <= 1.0 + slack
    }

    pub fn ha_ok(&self, slack: f64) -> bool {
        self.ha_max <= slack
    }

    pub fn combined_ok(&self, slack: f64) -> bool {
        self.combined_max <= slack
    }

    pub fn passed(&self, slack: f64) -> bool {
        self.hth_ok(slack) && self.ha_ok(slack) && self.combined_ok(slack)
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}

/// Sweep `random_vectors` seeded random unit vectors plus all sine modes.
pub fn matrix_property_checks(
    op: &CompactOperator,
    random_vectors: usize,
    seed: u64,
) -> MatrixPropertyReport {
    let n = op.interior_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MatrixPropertyReport {
        samples: 0,
        hth_min: f64::INFINITY,
        hth_max: f64::NEG_INFINITY,
        ha_max: f64::NEG_INFINITY,
        combined_max: f64::NEG_INFINITY,
    };
    let (mut hw, mut aw, mut sw) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let scale_a = op.a / (op.h * op.h);
    let scale_s = op.b / (2.0 * op.h);
    let mut visit = |w: &[f64], report: &mut MatrixPropertyReport| {
        let norm2 = dot(w, w);
        if norm2 == 0.0 {
            return;
        }
        op.averaging.matvec_into(w, &mut hw);
        op.second.matvec_into(w, &mut aw);
        op.first.matvec_into(w, &mut sw);
        let hth = dot(&hw, &hw) / norm2;
        let ha = 2.0 * dot(&hw, &aw) / norm2;
        let hs = 2.0 * dot(&hw, &sw) / norm2;
        report.samples += 1;
        report.hth_min = report.hth_min.min(hth);
        report.hth_max = report.hth_max.max(hth);
        report.ha_max = report.ha_max.max(ha);
        report.combined_max = report.combined_max.max(scale_a * ha + scale_s * hs);
    };

    let mut w = vec![0.0; n];
    for _ in 0..random_vectors {
        for x in w.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        visit(&w, &mut report);
    }
    for mode in 1..=n {
        for (i, x) in w.iter_mut().enumerate() {
            *x = (std::f64::consts::PI * (mode * (i + 1)) as f64 / (n + 1) as f64).sin();
        }
        visit(&w, &mut report);
    }
    report
}
