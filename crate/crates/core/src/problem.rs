//! Problem formulations and the transformations between them.
//!
//! Three levels are represented:
//!
//! 1. [`BlackScholesSpec`]: the option-pricing equation in `(S, ζ)` with barrier rebates.
//! 2. [`ConstantCoeffSpec`]: after `x = ln S`, `t = T - ζ`,
//!    `D_t^α w = a w_xx + b w_x - c w` with `w(x_l,t) = p(t)`, `w(x_r,t) = q(t)`.
//! 3. [`HomogenizedSpec`]: after subtracting the linear lift
//!    `z = (q-p)(x-x_l)/(x_r-x_l) + p`, zero boundary values and a source term.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{invalid, Error, Result};
use crate::special::gamma;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `coeff · t^power`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub power: f64,
}

impl PowerTerm {
    pub fn new(coeff: f64, power: f64) -> Self {
        PowerTerm { coeff, power }
    }
}

fn power_sum(terms: &[PowerTerm], t: f64) -> f64 {
    terms.iter().map(|p| p.coeff * pow_or_one(t, p.power)).sum()
}

/// `t^μ` with `0^0 = 1`.
fn pow_or_one(t: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        1.0
    } else {
        t.powf(mu)
    }
}

/// Caputo derivative of `t^μ`: `Γ(μ+1)/Γ(μ+1-α) t^{μ-α}` for `μ > 0`, zero for `μ = 0`.
pub fn caputo_of_power(mu: f64, alpha: f64) -> Result<TimeFn> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid(
            "mu",
            format!("power must be finite and >= 0, got {mu}"),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if mu == 0.0 {
        return Ok(Arc::new(|_| 0.0));
    }
    let scale = gamma(mu + 1.0) / gamma(mu + 1.0 - alpha);
    let exponent = mu - alpha;
    Ok(Arc::new(move |t: f64| {
        if exponent == 0.0 {
            scale
        } else {
            scale * t.powf(exponent)
        }
    }))
}

/// Boundary data `t ↦ p(t)` together with what is needed for its Caputo derivative.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    /// `Σ coeff · t^power` with `power >= 0`.
    PowerSum(Vec<PowerTerm>),
    /// Arbitrary data; the Caputo derivative must be supplied for non-constant values.
    Custom {
        value: TimeFn,
        caputo: Option<TimeFn>,
    },
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Constant(v) => write!(f, "Constant({v})"),
            BoundaryData::PowerSum(t) => write!(f, "PowerSum({t:?})"),
            BoundaryData::Custom { caputo, .. } => {
                write!(
                    f,
                    "Custom {{ caputo: {} }}",
                    if caputo.is_some() { "Some" } else { "None" }
                )
            }
        }
    }
}

impl BoundaryData {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            BoundaryData::Constant(v) => *v,
            BoundaryData::PowerSum(terms) => power_sum(terms, t),
            BoundaryData::Custom { value, .. } => value(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BoundaryData::Constant(v) => *v == 0.0,
            BoundaryData::PowerSum(terms) => terms.iter().all(|p| p.coeff == 0.0),
            BoundaryData::Custom { .. } => false,
        }
    }

    /// Analytic Caputo derivative, or `None` when unavailable.
    pub fn caputo(&self, alpha: f64) -> Result<Option<TimeFn>> {
        match self {
            BoundaryData::Constant(_) => Ok(Some(Arc::new(|_| 0.0))),
            BoundaryData::PowerSum(terms) => {
                let parts = terms
                    .iter()
                    .map(|p| caputo_of_power(p.power, alpha).map(|f| (p.coeff, f)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(Arc::new(move |t| {
                    parts.iter().map(|(c, f)| c * f(t)).sum()
                })))
            }
            BoundaryData::Custom { caputo, .. } => Ok(caputo.clone()),
        }
    }
}

/// Rebate paid when a barrier is hit, as a function of calendar time `ζ`.
#[derive(Clone)]
pub struct Rebate {
    pub value: TimeFn,
    /// Caputo derivative of `t ↦ value(T - t)` in the time-to-expiry variable.
    pub caputo: Option<TimeFn>,
}

impl Rebate {
    pub fn constant(v: f64) -> Self {
        Rebate {
            value: Arc::new(move |_| v),
            caputo: Some(Arc::new(|_| 0.0)),
        }
    }
}

/// The fractional Black–Scholes equation for a double-barrier option.
#[derive(Clone)]
pub struct BlackScholesSpec {
    pub alpha: f64,
    pub s_left: f64,
    pub s_right: f64,
    pub expiry: f64,
    pub rate: f64,
    pub dividend: f64,
    pub volatility: f64,
    /// Payoff `R(S)` at `ζ = T`.
    pub payoff: SpaceFn,
    pub lower_rebate: Rebate,
    pub upper_rebate: Rebate,
}

impl BlackScholesSpec {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.s_left > 0.0 && self.s_left < self.s_right) {
            return Err(invalid(
                "barriers",
                format!(
                    "need 0 < S_l < S_r, got ({}, {})",
                    self.s_left, self.s_right
                ),
            ));
        }
        if !(self.volatility > 0.0) {
            return Err(invalid("volatility", "must be positive"));
        }
        if !(self.expiry > 0.0) {
            return Err(invalid("T", "expiry must be positive"));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

/// `D_t^α w = a w_xx + b w_x - c w` on `(x_l, x_r) × (0, T]`.
#[derive(Clone)]
pub struct ConstantCoeffSpec {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub horizon: f64,
    pub initial: SpaceFn,
    pub left: BoundaryData,
    pub right: BoundaryData,
}

/// Change variables `x = ln S`, `t = T - ζ`.
pub fn to_constant_coeff(spec: &BlackScholesSpec) -> Result<ConstantCoeffSpec> {
    spec.validate()?;
    let a = 0.5 * spec.volatility * spec.volatility;
    let expiry = spec.expiry;
    let payoff = spec.payoff.clone();
    let reverse = |r: &Rebate| {
        let value = r.value.clone();
        BoundaryData::Custom {
            value: Arc::new(move |t| value(expiry - t)),
            caputo: r.caputo.clone(),
        }
    };
    Ok(ConstantCoeffSpec {
        alpha: spec.alpha,
        a,
        b: spec.rate - a - spec.dividend,
        c: spec.rate,
        x_left: spec.s_left.ln(),
        x_right: spec.s_right.ln(),
        horizon: expiry,
        initial: Arc::new(move |x| payoff(x.exp())),
        left: reverse(&spec.lower_rebate),
        right: reverse(&spec.upper_rebate),
    })
}

/// Boundary data kept after homogenisation so that `w = u + z` can be rebuilt.
#[derive(Debug, Clone)]
pub struct Lift {
    pub left: BoundaryData,
    pub right: BoundaryData,
}

/// `D_t^α u = a u_xx + b u_x - c u + f` with zero boundary values and `u(x,0) = φ(x)`.
#[derive(Clone)]
pub struct HomogenizedSpec {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub horizon: f64,
    pub initial: SpaceFn,
    pub source: FieldFn,
    pub lift: Option<Lift>,
    pub exact: Option<FieldFn>,
}

impl fmt::Debug for HomogenizedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogenizedSpec")
            .field("alpha", &self.alpha)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("c", &self.c)
            .field("domain", &(self.x_left, self.x_right))
            .field("horizon", &self.horizon)
            .field("lift", &self.lift)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

/// Tolerance on `φ(x_l)`, `φ(x_r)`.
const BOUNDARY_TOLERANCE: f64 = 1e-12;

impl HomogenizedSpec {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.a > 0.0) {
            return Err(invalid(
                "a",
                format!("diffusion must be positive, got {}", self.a),
            ));
        }
        if !(self.x_left < self.x_right) {
            return Err(invalid("domain", "need x_l < x_r"));
        }
        if !(self.horizon > 0.0) {
            return Err(invalid("T", "horizon must be positive"));
        }
        let left = (self.initial)(self.x_left);
        let right = (self.initial)(self.x_right);
        if left.abs() > BOUNDARY_TOLERANCE || right.abs() > BOUNDARY_TOLERANCE {
            return Err(Error::IncompatibleData { left, right });
        }
        Ok(())
    }

    /// Lift `z(x,t)`; zero when the problem was posed with homogeneous data.
    pub fn lift_value(&self, x: f64, t: f64) -> f64 {
        match &self.lift {
            None => 0.0,
            Some(l) => {
                let p = l.left.value(t);
                let q = l.right.value(t);
                (q - p) * (x - self.x_left) / (self.x_right - self.x_left) + p
            }
        }
    }

    /// `w = u + z` at `(x, t)`.
    pub fn reconstruct(&self, x: f64, t: f64, u: f64) -> f64 {
        u + self.lift_value(x, t)
    }

    /// The problem with zero source, zero lift and the given initial data; used for
    /// stability checks.
    pub fn with_zero_source(&self, initial: SpaceFn) -> HomogenizedSpec {
        HomogenizedSpec {
            initial,
            source: Arc::new(|_, _| 0.0),
            lift: None,
            exact: None,
            ..self.clone()
        }
    }
}

/// Subtract the linear lift:
/// `f = b(q-p)/(x_r-x_l) - c z - D_t^α z`, `φ = w(·,0) - z(·,0)`.
pub fn homogenize(spec: &ConstantCoeffSpec) -> Result<HomogenizedSpec> {
    let alpha = spec.alpha;
    let caputo_left = spec
        .left
        .caputo(alpha)?
        .ok_or(Error::MissingCaputo { side: "left" })?;
    let caputo_right = spec
        .right
        .caputo(alpha)?
        .ok_or(Error::MissingCaputo { side: "right" })?;
    let (xl, xr) = (spec.x_left, spec.x_right);
    let width = xr - xl;
    let (b, c) = (spec.b, spec.c);
    let (left, right) = (spec.left.clone(), spec.right.clone());
    let (left_src, right_src) = (left.clone(), right.clone());
    let source: FieldFn = Arc::new(move |x, t| {
        let p = left_src.value(t);
        let q = right_src.value(t);
        let slope = (q - p) / width;
        let z = slope * (x - xl) + p;
        let dz = (caputo_right(t) - caputo_left(t)) * (x - xl) / width + caputo_left(t);
        b * slope - c * z - dz
    });
    let initial_w = spec.initial.clone();
    let (p0, q0) = (left.value(0.0), right.value(0.0));
    let initial: SpaceFn = Arc::new(move |x| initial_w(x) - (q0 - p0) * (x - xl) / width - p0);
    let out = HomogenizedSpec {
        alpha,
        a: spec.a,
        b,
        c,
        x_left: xl,
        x_right: xr,
        horizon: spec.horizon,
        initial,
        source,
        lift: if left.is_zero() && right.is_zero() {
            None
        } else {
            Some(Lift { left, right })
        },
        exact: None,
    };
    out.validate()?;
    Ok(out)
}

/// Manufactured problem with solution `x³(1-x)³(t^α + t + 1)` on `(0,1) × (0,1]`,
/// `a = 0.5`, `b = -0.45`, `c = 0.05`.
pub fn example1(alpha: f64) -> Result<HomogenizedSpec> {
    check_alpha(alpha)?;
    let (a, b, c) = (0.5, -0.45, 0.05);
    let g = |x: f64| x.powi(3) * (1.0 - x).powi(3);
    let dg = |x: f64| 3.0 * x * x * (1.0 - x).powi(2) * (1.0 - 2.0 * x);
    let d2g = |x: f64| 6.0 * x * (1.0 - x) * (1.0 - 5.0 * x + 5.0 * x * x);
    let g1 = gamma(2.0 - alpha);
    let ga = gamma(alpha + 1.0);
    let source: FieldFn = Arc::new(move |x, t| {
        let time = t.powf(alpha) + t + 1.0;
        let dt = t.powf(1.0 - alpha) / g1 + ga;
        g(x) * dt - (a * d2g(x) + b * dg(x) - c * g(x)) * time
    });
    let exact: FieldFn = Arc::new(move |x, t| g(x) * (t.powf(alpha) + t + 1.0));
    let spec = HomogenizedSpec {
        alpha,
        a,
        b,
        c,
        x_left: 0.0,
        x_right: 1.0,
        horizon: 1.0,
        initial: Arc::new(g),
        source,
        lift: None,
        exact: Some(exact),
    };
    spec.validate()?;
    Ok(spec)
}

/// Which coefficient set to use for the barrier-option example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example2Variant {
    /// Coefficients `a = 0.5`, `b = 0.5`, `c = 0.05` with the closed-form source.
    Printed,
    /// Full transformation of the option data (`ϱ = 1`, `r = 1`, `D = 0`), giving `c = 1`.
    Transformed,
}

impl std::str::FromStr for Example2Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Example2Variant::Printed),
            "transformed" => Ok(Example2Variant::Transformed),
            other => Err(invalid(
                "variant",
                format!("expected 'printed' or 'transformed', got '{other}'"),
            )),
        }
    }
}

/// `(t+1)^2 = t² + 2t + 1` as power terms.
fn shifted_square(scale: f64) -> Vec<PowerTerm> {
    vec![
        PowerTerm::new(scale, 2.0),
        PowerTerm::new(2.0 * scale, 1.0),
        PowerTerm::new(scale, 0.0),
    ]
}

/// Option data of the barrier example: payoff `(ln S)³ + (ln S)² + 1` on `S ∈ (1, e)`,
/// rebates `(T-ζ+1)²` and `3(T-ζ+1)²`, `T = 1`, `ϱ = 1`, `r = 1`, `D = 0`.
pub fn example2_market(alpha: f64) -> Result<BlackScholesSpec> {
    check_alpha(alpha)?;
    let expiry = 1.0;
    let rebate = |scale: f64| -> Result<Rebate> {
        let caputo = BoundaryData::PowerSum(shifted_square(scale)).caputo(alpha)?;
        Ok(Rebate {
            value: Arc::new(move |zeta: f64| scale * (expiry - zeta + 1.0).powi(2)),
            caputo,
        })
    };
    let spec = BlackScholesSpec {
        alpha,
        s_left: 1.0,
        s_right: std::f64::consts::E,
        expiry,
        rate: 1.0,
        dividend: 0.0,
        volatility: 1.0,
        payoff: Arc::new(|s: f64| {
            let l = s.ln();
            l.powi(3) + l.powi(2) + 1.0
        }),
        lower_rebate: rebate(1.0)?,
        upper_rebate: rebate(3.0)?,
    };
    spec.validate()?;
    Ok(spec)
}

/// The barrier-option example in homogenised form.
pub fn example2(alpha: f64, variant: Example2Variant) -> Result<HomogenizedSpec> {
    check_alpha(alpha)?;
    match variant {
        Example2Variant::Transformed => {
            let mut spec = homogenize(&to_constant_coeff(&example2_market(alpha)?)?)?;
            // ln e is not exactly 1 in floating point; pin the domain to the exact value.
            spec.x_right = 1.0;
            Ok(spec)
        }
        Example2Variant::Printed => {
            let (a, b, c) = (0.5, 0.5, 0.05);
            let g1 = gamma(2.0 - alpha);
            let g2 = gamma(3.0 - alpha);
            let source: FieldFn = Arc::new(move |x, t| {
                (2.0 * b - c - 2.0 * c * x) * (t + 1.0).powi(2)
                    - (4.0 * x + 2.0) * (t.powf(1.0 - alpha) / g1 + t.powf(2.0 - alpha) / g2)
            });
            let spec = HomogenizedSpec {
                alpha,
                a,
                b,
                c,
                x_left: 0.0,
                x_right: 1.0,
                horizon: 1.0,
                initial: Arc::new(|x| x.powi(3) + x.powi(2) - 2.0 * x),
                source,
                lift: Some(Lift {
                    left: BoundaryData::PowerSum(shifted_square(1.0)),
                    right: BoundaryData::PowerSum(shifted_square(3.0)),
                }),
                exact: None,
            };
            spec.validate()?;
            Ok(spec)
        }
    }
}

/// Declarative problem description read from TOML.
///
/// ```toml
/// horizon = 1.0
///
/// [coefficients]          # or: volatility, rate, dividend
/// a = 0.5
/// b = -0.45
/// c = 0.05
///
/// [domain]
/// x_left = 0.0
/// x_right = 1.0
///
/// initial = [{ coeff = 1.0, power = 2.0 }, { coeff = -1.0, power = 1.0 }]
/// left_boundary = []      # Σ coeff t^power
/// right_boundary = []
///
/// [[source]]              # Σ coeff x^x_power t^t_power
/// coeff = 1.0
/// x_power = 0.0
/// t_power = 1.0
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default = "unit_horizon")]
    pub horizon: f64,
    pub coefficients: Coefficients,
    pub domain: Domain,
    /// Initial value `w(x, 0)` as `Σ coeff x^power`.
    pub initial: Vec<PowerTerm>,
    #[serde(default)]
    pub left_boundary: Vec<PowerTerm>,
    #[serde(default)]
    pub right_boundary: Vec<PowerTerm>,
    #[serde(default)]
    pub source: Vec<SourceTerm>,
}

fn unit_horizon() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coefficients {
    Direct {
        a: f64,
        b: f64,
        c: f64,
    },
    Market {
        volatility: f64,
        rate: f64,
        dividend: f64,
    },
}

impl Coefficients {
    /// `(a, b, c)`; the market form uses `a = ϱ²/2`, `b = r - a - D`, `c = r`.
    pub fn resolve(&self) -> (f64, f64, f64) {
        match *self {
            Coefficients::Direct { a, b, c } => (a, b, c),
            Coefficients::Market {
                volatility,
                rate,
                dividend,
            } => {
                let a = 0.5 * volatility * volatility;
                (a, rate - a - dividend, rate)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub x_left: f64,
    pub x_right: f64,
}

/// `coeff · x^x_power · t^t_power`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceTerm {
    pub coeff: f64,
    #[serde(default)]
    pub x_power: f64,
    #[serde(default)]
    pub t_power: f64,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid("problem-file", e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("problem-file", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Homogenised problem for fractional order `alpha`.
    pub fn build(&self, alpha: f64) -> Result<HomogenizedSpec> {
        check_alpha(alpha)?;
        for t in self
            .initial
            .iter()
            .chain(&self.left_boundary)
            .chain(&self.right_boundary)
        {
            if !(t.power >= 0.0) {
                return Err(invalid(
                    "power",
                    format!("powers must be >= 0, got {}", t.power),
                ));
            }
        }
        let (a, b, c) = self.coefficients.resolve();
        let initial_terms = self.initial.clone();
        let base = ConstantCoeffSpec {
            alpha,
            a,
            b,
            c,
            x_left: self.domain.x_left,
            x_right: self.domain.x_right,
            horizon: self.horizon,
            initial: Arc::new(move |x| power_sum(&initial_terms, x)),
            left: BoundaryData::PowerSum(self.left_boundary.clone()),
            right: BoundaryData::PowerSum(self.right_boundary.clone()),
        };
        let mut spec = homogenize(&base)?;
        if !self.source.is_empty() {
            let lifted = spec.source.clone();
            let extra = self.source.clone();
            spec.source = Arc::new(move |x, t| {
                lifted(x, t)
                    + extra
                        .iter()
                        .map(|s| s.coeff * pow_or_one(x, s.x_power) * pow_or_one(t, s.t_power))
                        .sum::<f64>()
            });
        }
        Ok(spec)
    }
}
