//! Pointwise damping `g(u_t)` and source `h(u)` terms.
//!
//! The typical terms are `g(v) = |v|^{m-1} v` and `h(u) = |u|^{p-1} u`. Custom
//! terms are scalar callables carrying the growth metadata `(m, a, b)` and are
//! admitted through [`growth_envelope_check`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{odd_pow, pow_abs, Real};

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum Damping<T> {
    PowerLaw,
    /// Continuous, monotone increasing, `g(0) = 0`.
    Custom(ScalarFn<T>),
    Disabled,
}

#[derive(Clone)]
pub enum Source<T> {
    PowerLaw,
    /// `h` together with its antiderivative `H(u) = int_0^u h`. Without one
    /// the potential is integrated numerically.
    Custom { h: ScalarFn<T>, potential: Option<ScalarFn<T>> },
    Disabled,
}

impl<T> fmt::Debug for Damping<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Damping::PowerLaw => "PowerLaw",
            Damping::Custom(_) => "Custom",
            Damping::Disabled => "Disabled",
        })
    }
}

impl<T> fmt::Debug for Source<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::PowerLaw => "PowerLaw",
            Source::Custom { .. } => "Custom",
            Source::Disabled => "Disabled",
        })
    }
}

#[derive(Clone, Debug)]
pub struct NonlinearityParams<T> {
    /// Damping exponent.
    pub m: T,
    /// Source exponent.
    pub p: T,
    pub damping: Damping<T>,
    pub source: Source<T>,
    /// Lower growth constant for custom damping: `a|s|^{m+1} <= g(s)s`.
    pub a: T,
    /// Upper growth constant: `g(s)s <= b|s|^{m+1}`.
    pub b: T,
}

impl<T: Real> NonlinearityParams<T> {
    pub fn power_law(m: T, p: T) -> Result<Self> {
        let params = Self { m, p, damping: Damping::PowerLaw, source: Source::PowerLaw, a: T::one(), b: T::one() };
        params.validate()?;
        Ok(params)
    }

    /// Linear wave `u_tt = Delta u`; the exponents only enter the diagnostics.
    pub fn free_wave(m: T, p: T) -> Result<Self> {
        let params = Self { damping: Damping::Disabled, source: Source::Disabled, ..Self::power_law(m, p)? };
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= T::one()) {
            return Err(Error::InvalidExponent(format!("damping exponent m must be >= 1, got {}", self.m)));
        }
        if !(self.p >= T::one()) {
            return Err(Error::InvalidExponent(format!("source exponent p must be >= 1, got {}", self.p)));
        }
        if !(self.a > T::zero() && self.b >= self.a) {
            return Err(Error::InvalidArgument(format!(
                "growth constants need 0 < a <= b, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn damping_enabled(&self) -> bool {
        !matches!(self.damping, Damping::Disabled)
    }

    pub fn source_enabled(&self) -> bool {
        !matches!(self.source, Source::Disabled)
    }
}

/// `g(v)`.
pub fn damping_eval<T: Real>(v: T, params: &NonlinearityParams<T>) -> T {
    match &params.damping {
        Damping::PowerLaw => odd_pow(v, params.m),
        Damping::Custom(g) => g(v),
        Damping::Disabled => T::zero(),
    }
}

/// `h(u)`.
pub fn source_eval<T: Real>(u: T, params: &NonlinearityParams<T>) -> T {
    match &params.source {
        Source::PowerLaw => odd_pow(u, params.p),
        Source::Custom { h, .. } => h(u),
        Source::Disabled => T::zero(),
    }
}

/// Dissipation density `g(v) v`; equals `|v|^{m+1}` for the power law.
pub fn dissipation_density<T: Real>(v: T, params: &NonlinearityParams<T>) -> T {
    match &params.damping {
        Damping::PowerLaw => pow_abs(v, params.m + T::one()),
        _ => damping_eval(v, params) * v,
    }
}

/// Source potential `H(u) = int_0^u h(s) ds`.
pub fn source_potential<T: Real>(u: T, params: &NonlinearityParams<T>) -> T {
    match &params.source {
        Source::PowerLaw => pow_abs(u, params.p + T::one()) / (params.p + T::one()),
        Source::Custom { potential: Some(big_h), .. } => big_h(u),
        Source::Custom { h, potential: None } => simpson(|s| h(s), T::zero(), u, 64),
        Source::Disabled => T::zero(),
    }
}

fn simpson<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T, panels: usize) -> T {
    let n = panels + panels % 2;
    let h = (hi - lo) / T::lit(n as f64);
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        acc = acc + w * f(lo + h * T::lit(i as f64));
    }
    acc * h / T::lit(3.0)
}

/// Exact flow of `v' = -|v|^{m-1} v` over time `tau >= 0`.
///
/// Magnitudes below the smallest positive normal number are returned as exact zero.
pub fn damping_exact_flow<T: Real>(v0: T, m: T, tau: T) -> T {
    if v0 == T::zero() || tau == T::zero() {
        return v0;
    }
    let mag = if m == T::one() {
        v0.abs() * (-tau).exp()
    } else {
        let e = m - T::one();
        (pow_abs(v0, -e) + e * tau).powf(-T::one() / e)
    };
    if !(mag >= T::min_positive_value()) {
        return T::zero();
    }
    if v0 < T::zero() {
        -mag
    } else {
        mag
    }
}

/// Backward-Euler root `w + tau g(w) = v` for monotone `g`, by Newton's method
/// safeguarded with bisection on the bracket `[0, v]`.
pub fn backward_euler_damping<T: Real>(v: T, tau: T, g: &dyn Fn(T) -> T) -> T {
    if v == T::zero() || tau == T::zero() {
        return v;
    }
    let residual = |w: T| w + tau * g(w) - v;
    let (mut lo, mut hi) = if v > T::zero() { (T::zero(), v) } else { (v, T::zero()) };
    let tol = T::lit(1e-12) * T::one().max(v.abs());
    let mut w = v / (T::one() + tau);
    for _ in 0..200 {
        let r = residual(w);
        if r.abs() <= tol {
            break;
        }
        if r > T::zero() {
            hi = w;
        } else {
            lo = w;
        }
        if hi - lo <= tol {
            break;
        }
        let h = T::epsilon().sqrt() * T::one().max(w.abs());
        let slope = (residual(w + h) - residual(w - h)) / (h + h);
        let newton = w - r / slope;
        w = if slope > T::zero() && newton > lo && newton < hi { newton } else { (lo + hi) / T::lit(2.0) };
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeSide {
    /// `g(s)s < a|s|^{m+1}`.
    Lower,
    /// `g(s)s > b|s|^{m+1}`.
    Upper,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeViolation<T> {
    pub sample: T,
    pub side: EnvelopeSide,
    pub value: T,
    pub bound: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeReport<T> {
    pub checked: usize,
    pub first_violation: Option<EnvelopeViolation<T>>,
}

impl<T> EnvelopeReport<T> {
    pub fn pass(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `a|s|^{m+1} <= g(s)s <= b|s|^{m+1}` at each sample, with a relative
/// slack of a few ulps so that exact equality passes.
pub fn growth_envelope_check<T: Real>(params: &NonlinearityParams<T>, samples: &[T]) -> Result<EnvelopeReport<T>> {
    params.validate()?;
    let slack = T::lit(8.0) * T::epsilon();
    for (i, &s) in samples.iter().enumerate() {
        if s == T::zero() {
            return Err(Error::InvalidArgument("envelope samples must be nonzero".into()));
        }
        let value = damping_eval(s, params) * s;
        let scale = pow_abs(s, params.m + T::one());
        let (lower, upper) = (params.a * scale, params.b * scale);
        let violation = if value < lower * (T::one() - slack) {
            Some((EnvelopeSide::Lower, lower))
        } else if value > upper * (T::one() + slack) || !value.is_finite() {
            Some((EnvelopeSide::Upper, upper))
        } else {
            None
        };
        if let Some((side, bound)) = violation {
            return Ok(EnvelopeReport {
                checked: i + 1,
                first_violation: Some(EnvelopeViolation { sample: s, side, value, bound }),
            });
        }
    }
    Ok(EnvelopeReport { checked: samples.len(), first_violation: None })
}

/// Normalized monotonicity gap `(g(x) - g(y))(x - y) / |x - y|^{m+1}` of the power-law damping.
pub fn monotonicity_gap<T: Real>(x: T, y: T, m: T) -> Result<T> {
    if x == y {
        return Err(Error::InvalidArgument("monotonicity gap needs x != y".into()));
    }
    let d = x - y;
    Ok((odd_pow(x, m) - odd_pow(y, m)) * d / pow_abs(d, m + T::one()))
}

/// Candidate lower bound `c_0 = 2^{1-m}` for [`monotonicity_gap`], attained at `y = -x`.
pub fn monotonicity_constant<T: Real>(m: T) -> T {
    T::lit(2.0).powf(T::one() - m)
}
