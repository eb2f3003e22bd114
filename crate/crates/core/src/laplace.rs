//! Laplace transforms of the PME density and tail, their derivatives and
//! limits at the origin, a generic numerical transform, and an
//! Euler-accelerated Fourier-series inversion engine.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist_core::{factorial, PmeParams};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::quad::{integrate_breaks, integrate_semi_infinite, HorizonPolicy, QuadValue, Tolerance};

/// A transform evaluated at a real point `s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformValue {
    pub s: f64,
    pub value: ExtReal,
}

impl TransformValue {
    fn finite(s: f64, value: f64) -> Self {
        TransformValue {
            s,
            value: ExtReal::Finite(value),
        }
    }

    /// The finite value; panics on an infinite one.
    pub fn expect_finite(&self) -> f64 {
        self.value
            .finite()
            .unwrap_or_else(|| panic!("transform at s = {} is infinite", self.s))
    }
}

fn check_real_s(s: f64) -> Result<()> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::invalid(format!(
            "s must be non-negative on the real axis (got {s})"
        )));
    }
    Ok(())
}

fn check_complex_s(s: Complex64) -> Result<()> {
    if s.re.is_nan() || s.re <= 0.0 || !s.im.is_finite() || !s.re.is_finite() {
        return Err(Error::invalid(format!("complex s needs Re(s) > 0 (got {s})")));
    }
    Ok(())
}

/// Quadrature split points for integrands with a `1/(s+x)` factor.
fn pole_breaks(scale: f64, upper: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let knee = scale.max(1e-6);
    for k in [0.1, 1.0, 10.0] {
        let x = k * knee;
        if x < upper && x > 0.0 {
            pts.push(x);
        }
    }
    pts.push(upper);
    pts
}

/// `r x_m^r ∫₀^{1/x_m} x^power / (s+x)^order dx` for real or complex `s`.
fn kernel_integral<T>(p: &PmeParams, s: T, power: f64, order: i32, scale: f64) -> Result<T>
where
    T: QuadValue + std::ops::Add<f64, Output = T> + num_traits_like::PowI + num_traits_like::Recip,
{
    let upper = p.upper();
    let integral = integrate_breaks(
        |x: f64| (s + x).powi_(order).recip_() * x.powf(power),
        &pole_breaks(scale, upper),
        Tolerance::TIGHT,
    )?;
    Ok(integral.value * p.prefactor())
}

mod num_traits_like {
    use num_complex::Complex64;

    pub trait PowI {
        fn powi_(self, n: i32) -> Self;
    }
    pub trait Recip {
        fn recip_(self) -> Self;
    }
    impl PowI for f64 {
        fn powi_(self, n: i32) -> Self {
            self.powi(n)
        }
    }
    impl Recip for f64 {
        fn recip_(self) -> Self {
            1.0 / self
        }
    }
    impl PowI for Complex64 {
        fn powi_(self, n: i32) -> Self {
            self.powi(n)
        }
    }
    impl Recip for Complex64 {
        fn recip_(self) -> Self {
            self.inv()
        }
    }
}

/// PME density transform `ĝ_r(s) = r x_m^r ∫₀^{1/x_m} x^r/(s+x) dx`.
pub fn pme_lt(r: f64, s: f64) -> Result<TransformValue> {
    let p = PmeParams::new(r)?;
    check_real_s(s)?;
    if s == 0.0 {
        return Ok(TransformValue::finite(0.0, 1.0));
    }
    Ok(TransformValue::finite(s, kernel_integral(&p, s, r, 1, s)?))
}

/// `ĝ_r(s)` for `Re(s) > 0`.
pub fn pme_lt_complex(p: &PmeParams, s: Complex64) -> Result<Complex64> {
    check_complex_s(s)?;
    kernel_integral(p, s, p.r(), 1, s.norm())
}

/// PME tail transform `ĥ_r(s) = r x_m^r ∫₀^{1/x_m} x^{r-1}/(s+x) dx`.
pub fn pme_tail_lt(r: f64, s: f64) -> Result<TransformValue> {
    let p = PmeParams::new(r)?;
    check_real_s(s)?;
    if s == 0.0 {
        // tail of a unit-mean law integrates to 1
        return Ok(TransformValue::finite(0.0, 1.0));
    }
    Ok(TransformValue::finite(s, kernel_integral(&p, s, r - 1.0, 1, s)?))
}

/// `ĥ_r(s)` for `Re(s) > 0`.
pub fn pme_tail_lt_complex(p: &PmeParams, s: Complex64) -> Result<Complex64> {
    check_complex_s(s)?;
    kernel_integral(p, s, p.r() - 1.0, 1, s.norm())
}

/// `n`-th derivative `ĥ_r⁽ⁿ⁾(s) = (-1)ⁿ n! r x_m^r ∫ x^{r-1}/(s+x)^{n+1} dx`, `s > 0`.
pub fn pme_tail_lt_deriv(r: f64, s: f64, n: u32) -> Result<TransformValue> {
    let p = PmeParams::new(r)?;
    if s.is_nan() || s <= 0.0 {
        return Err(Error::invalid(format!(
            "derivative quadrature needs s > 0 (got {s}); use the limit at zero"
        )));
    }
    let order = i32::try_from(n + 1).map_err(|_| Error::invalid("derivative order too large"))?;
    let integral = kernel_integral(&p, s, r - 1.0, order, s)?;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(TransformValue::finite(s, sign * factorial(n) * integral))
}

/// Limit of `ĥ_r⁽ⁿ⁾(s)` as `s ↓ 0`.
///
/// Finite when `n < r - 1`:
/// `(-1)ⁿ n! r x_m^r (1/x_m)^{r-n-1} / (r-n-1)`. Otherwise the integral
/// `∫₀ x^{r-n-2} dx` diverges to `+∞` and the limit is `(-1)ⁿ ∞`.
pub fn pme_tail_lt_deriv_at_zero(r: f64, n: u32) -> Result<TransformValue> {
    let p = PmeParams::new(r)?;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let excess = r - n as f64 - 1.0;
    if excess <= 0.0 {
        return Ok(TransformValue {
            s: 0.0,
            value: ExtReal::signed_inf(sign),
        });
    }
    let value = sign * factorial(n) * p.prefactor() * p.upper().powf(excess) / excess;
    Ok(TransformValue::finite(0.0, value))
}

/// A numerically computed transform value with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericTransform<T> {
    pub value: T,
    pub quadrature_error: f64,
    pub truncation_error: f64,
    pub horizon: f64,
}

fn damped_policy(policy: HorizonPolicy, decay: f64) -> HorizonPolicy {
    if decay > 0.0 {
        HorizonPolicy {
            first: policy.first.min(1.0 / decay),
            ..policy
        }
    } else {
        policy
    }
}

/// `∫₀^∞ e^{-st} f(t) dt` for a density `f` and real `s ≥ 0`.
///
/// The horizon grows geometrically until the extrapolated remainder drops
/// below `policy.tol`; for `s > 0` the `e^{-st}` factor bounds it quickly.
pub fn lt_numeric<F>(f: F, s: f64, breaks: &[f64], policy: HorizonPolicy) -> Result<NumericTransform<f64>>
where
    F: Fn(f64) -> f64,
{
    check_real_s(s)?;
    let r = integrate_semi_infinite(
        |t: f64| {
            let w = (-s * t).exp();
            if w == 0.0 {
                0.0
            } else {
                w * f(t)
            }
        },
        breaks,
        damped_policy(policy, s),
        Tolerance::TIGHT,
    )?;
    Ok(NumericTransform {
        value: r.value,
        quadrature_error: r.abs_error,
        truncation_error: r.truncation_error,
        horizon: r.horizon,
    })
}

/// Complex-argument variant of [`lt_numeric`] for `Re(s) > 0`.
pub fn lt_numeric_complex<F>(
    f: F,
    s: Complex64,
    breaks: &[f64],
    policy: HorizonPolicy,
) -> Result<NumericTransform<Complex64>>
where
    F: Fn(f64) -> f64,
{
    check_complex_s(s)?;
    let r = integrate_semi_infinite(
        |t: f64| {
            let w = (-s * t).exp();
            if w.re == 0.0 && w.im == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                w * f(t)
            }
        },
        breaks,
        damped_policy(policy, s.re),
        Tolerance::TIGHT,
    )?;
    Ok(NumericTransform {
        value: r.value,
        quadrature_error: r.abs_error,
        truncation_error: r.truncation_error,
        horizon: r.horizon,
    })
}

/// Settings of the Euler-accelerated Fourier-series inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionConfig {
    series_terms: usize,
    euler_terms: usize,
    digits: u32,
}

impl InversionConfig {
    /// Largest `digits` whose roundoff amplification `e^{A/2} ε` still stays
    /// below the targeted discretization error `10^-digits`.
    pub fn max_digits() -> u32 {
        (-f64::EPSILON.log10() / 1.5).floor() as u32
    }

    pub fn new(series_terms: usize, euler_terms: usize, digits: u32) -> Result<Self> {
        if series_terms < 10 {
            return Err(Error::invalid("inversion needs at least 10 series terms"));
        }
        if euler_terms < 8 {
            return Err(Error::invalid("inversion needs at least 8 Euler terms"));
        }
        if digits == 0 || digits > Self::max_digits() {
            return Err(Error::invalid(format!(
                "inversion precision of {digits} digits is ill-conditioned in double precision (max {})",
                Self::max_digits()
            )));
        }
        Ok(InversionConfig {
            series_terms,
            euler_terms,
            digits,
        })
    }

    pub fn series_terms(&self) -> usize {
        self.series_terms
    }

    pub fn euler_terms(&self) -> usize {
        self.euler_terms
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            series_terms: 40,
            euler_terms: 14,
            digits: 10,
        }
    }
}

/// Inverts a Laplace transform at `t > 0`.
///
/// Trapezoidal discretization of the Bromwich integral on the line
/// `Re(s) = A/(2t)`, `A = digits · ln 10`, giving the alternating series
///
/// ```text
/// f(t) ≈ e^{A/2}/t · [ ½ Re F(A/2t) + Σ_{k≥1} (-1)^k Re F((A + 2kπi)/2t) ]
/// ```
///
/// whose tail is summed by binomial (Euler) averaging of the partial sums
/// `series_terms ..= series_terms + euler_terms`. `transform` must be analytic
/// for `Re(s) > 0`.
pub fn ilt<F>(transform: F, t: f64, cfg: &InversionConfig) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::invalid(format!("inversion needs t > 0 (got {t})")));
    }
    let a = cfg.digits as f64 * LN_10;
    let x = a / (2.0 * t);
    let h = PI / t;
    let total = cfg.series_terms + cfg.euler_terms;

    let terms: Vec<f64> = (0..=total)
        .into_par_iter()
        .map(|k| {
            let v = transform(Complex64::new(x, k as f64 * h))?;
            if !v.re.is_finite() {
                return Err(Error::Inversion {
                    t,
                    reason: format!("transform is not finite at k = {k}"),
                });
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            Ok(if k == 0 { 0.5 * v.re } else { sign * v.re })
        })
        .collect::<Result<_>>()?;

    let mut partial = 0.0;
    let mut partials = Vec::with_capacity(cfg.euler_terms + 1);
    for (k, term) in terms.iter().enumerate() {
        partial += term;
        if k >= cfg.series_terms {
            partials.push(partial);
        }
    }
    let m = cfg.euler_terms;
    let mut binom = 1.0;
    let mut euler = 0.0;
    for (j, s) in partials.iter().enumerate() {
        euler += binom * s;
        binom *= (m - j) as f64 / (j + 1) as f64;
    }
    euler *= 0.5f64.powi(m as i32);
    Ok((a / 2.0).exp() / t * euler)
}
