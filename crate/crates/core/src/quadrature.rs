//! Gauss–Legendre and Gauss–Jacobi rules mapped to finite intervals.
//!
//! Node generation is delegated to `gauss-quad`; this module only owns the affine maps
//! and a small cache so hot loops do not rebuild rules.

use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

/// A quadrature rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f(s) ds` (times the rule's weight function, pulled back to `[a, b]`).
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }
}

fn legendre_uncached(n: usize) -> Rule {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("rule order must be positive"));
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Rule { nodes, weights }
}

/// Gauss–Legendre rule with `n` points, cached per order.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<Vec<Option<Arc<Rule>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    if guard.len() <= n {
        guard.resize(n + 1, None);
    }
    guard[n]
        .get_or_insert_with(|| Arc::new(legendre_uncached(n)))
        .clone()
}

/// Gauss–Jacobi rule with `n` points for the weight `(1 - x)^a (1 + x)^b` on `[-1, 1]`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    let rule = GaussJacobi::new(
        NonZeroUsize::new(n).expect("rule order must be positive"),
        FiniteAboveNegOneF64::new(a).expect("Jacobi exponent must exceed -1"),
        FiniteAboveNegOneF64::new(b).expect("Jacobi exponent must exceed -1"),
    );
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Rule { nodes, weights }
}
