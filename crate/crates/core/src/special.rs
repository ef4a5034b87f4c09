//! Gamma function and the power kernel `ω_β(t) = t^{β-1} / Γ(β)`.

/// Gamma function (libm `tgamma`, accurate to about one ulp on the ranges used here).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Power kernel `ω_β(t) = t^{β-1} / Γ(β)` for `t > 0`.
///
/// For `β = 1` this is identically one; the Caputo kernel of order `α` is `ω_{1-α}`.
pub fn omega(beta: f64, t: f64) -> f64 {
    t.powf(beta - 1.0) / gamma(beta)
}

/// `(1 - e^{-x}) / x`, stable for small `x >= 0`.
pub(crate) fn phi1(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// `∫_0^1 e^{-λy} (1/2 - y) dy`, stable for small `λ`.
///
/// Series for `λ < 1`: `Σ_{m>=1} (-λ)^m / m! · (-m) / (2 (m+1)(m+2))`.
pub(crate) fn centered_moment(lambda: f64) -> f64 {
    if lambda < 1.0 {
        let mut term = 1.0; // (-λ)^m / m!
        let mut sum = 0.0;
        for m in 1..40 {
            term *= -lambda / m as f64;
            let mf = m as f64;
            let contrib = term * (-mf) / (2.0 * (mf + 1.0) * (mf + 2.0));
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let em1 = -(-lambda).exp_m1(); // 1 - e^{-λ}
        (em1 * (0.5 * lambda - 1.0) + lambda * (-lambda).exp()) / (lambda * lambda)
    }
}
