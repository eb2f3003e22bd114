//! Busy-period calculus of the M|G|∞ queue.
//!
//! With `M(t) = ∫₀^t [1 - G(v)] dv` the function
//!
//! ```text
//! Ψ(t) = λ (1 - G(t)) e^{-λ M(t)} = -d/dt e^{-λ M(t)}
//! ```
//!
//! has transform `ψ(s)` tied to the busy-period tail transform `u(s)` by
//! `ψ = λu / (λu + 1)`. The forward map computes `ψ` by quadrature and
//! rearranges to `u = ψ / (λ (1 - ψ))`. The inverse map starts from a busy
//! period law, inverts `φ = λu / (λu + 1)` to get `f = Ψ`, integrates it to
//! `F = 1 - e^{-λM}` and reads off `1 - G = f / (λ (1 - F))`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{cumulative_trapezoid, TailCurve};
use crate::dist_core::{PmeParams, ServiceModel};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::laplace::{ilt, lt_numeric, lt_numeric_complex, pme_tail_lt_complex, InversionConfig, NumericTransform};
use crate::quad::{integrate_semi_infinite, truncated_integrals, HorizonPolicy, Tolerance};

/// Largest tolerated excursion of an inverted tail outside `[0, 1]`.
pub const MAX_EXCURSION: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueParams {
    lambda: f64,
    service: ServiceModel,
}

impl QueueParams {
    pub fn new(lambda: f64, service: ServiceModel) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::invalid(format!("lambda must be positive (got {lambda})")));
        }
        let q = QueueParams { lambda, service };
        let rho = q.rho();
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::invalid(format!("traffic intensity must be finite and positive (got {rho})")));
        }
        Ok(q)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn service(&self) -> &ServiceModel {
        &self.service
    }

    /// `ρ = λ α`, always recomputed from the service model.
    pub fn rho(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    /// Mean busy period `(e^ρ - 1)/λ`.
    pub fn mean_busy_period(&self) -> f64 {
        self.rho().exp_m1() / self.lambda
    }

    /// Time scale used to size the first quadrature panel.
    fn scale(&self) -> f64 {
        let b = self.service.breakpoints().into_iter().fold(0.0, f64::max);
        self.service.mean().max(b).max(1e-3)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!("t must be non-negative (got {t})")));
    }
    Ok(())
}

/// `M(t) = ∫₀^t [1 - G(v)] dv`.
pub fn integrated_service_tail(q: &QueueParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(q.service.integrated_tail(t))
}

fn psi(q: &QueueParams, t: f64) -> f64 {
    let tail = q.service.tail(t);
    if tail == 0.0 {
        return 0.0;
    }
    q.lambda * tail * (-q.lambda * q.service.integrated_tail(t)).exp()
}

/// `Ψ(t) = λ (1 - G(t)) e^{-λ M(t)}`; integrates to `1 - e^{-ρ}`.
pub fn busy_start_density(q: &QueueParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(psi(q, t))
}

fn real_policy(q: &QueueParams) -> HorizonPolicy {
    HorizonPolicy {
        first: q.scale(),
        max: 1e18,
        tol: 1e-12,
    }
}

/// `ψ(s)`, the transform of `Ψ`, for real `s ≥ 0`.
pub fn busy_start_lt(q: &QueueParams, s: f64) -> Result<NumericTransform<f64>> {
    lt_numeric(|t| psi(q, t), s, &q.service.breakpoints(), real_policy(q))
}

/// `ψ(s)` for `Re(s) > 0`.
pub fn busy_start_lt_complex(q: &QueueParams, s: Complex64) -> Result<Complex64> {
    let policy = HorizonPolicy {
        tol: 1e-13 / (1.0 + s.norm()),
        ..real_policy(q)
    };
    Ok(lt_numeric_complex(|t| psi(q, t), s, &q.service.breakpoints(), policy)?.value)
}

fn tail_lt_from_psi(lambda: f64, psi: f64) -> Result<f64> {
    if psi.is_nan() || psi >= 1.0 {
        return Err(Error::NonConvergence {
            what: "busy-start transform (psi >= 1)",
            estimate: psi,
            error: f64::NAN,
        });
    }
    Ok(psi / (lambda * (1.0 - psi)))
}

/// Busy-period tail transform `u(s) = ψ(s) / (λ (1 - ψ(s)))`.
pub fn busy_tail_lt(q: &QueueParams, s: f64) -> Result<f64> {
    let psi = busy_start_lt(q, s)?.value;
    tail_lt_from_psi(q.lambda, psi)
}

/// `u(s)` for `Re(s) > 0`.
pub fn busy_tail_lt_complex(q: &QueueParams, s: Complex64) -> Result<Complex64> {
    let psi = busy_start_lt_complex(q, s)?;
    Ok(psi / ((1.0 - psi) * q.lambda))
}

/// Transform of the busy-period equilibrium law, `u(s) / u(0)`.
pub fn busy_equilibrium_lt(q: &QueueParams, s: f64) -> Result<f64> {
    let u0 = busy_tail_lt(q, 0.0)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    Ok(busy_tail_lt(q, s)? / u0)
}

/// A tail obtained by numerical inversion, after clamping into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusyTail {
    pub curve: TailCurve,
    /// Largest pre-clamp distance outside `[0, 1]`.
    pub excursion: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    if grid.iter().any(|&t| !t.is_finite() || t <= 0.0) {
        return Err(Error::invalid("time grid points must be positive"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

fn clamp_unit(v: f64) -> (f64, f64) {
    let c = v.clamp(0.0, 1.0);
    (c, (v - c).abs())
}

/// Busy-period tail `U(t) = P(B > t)` on `grid` by transform inversion.
pub fn busy_tail(q: &QueueParams, grid: &[f64], cfg: &InversionConfig) -> Result<BusyTail> {
    check_grid(grid)?;
    let raw: Vec<f64> = grid
        .par_iter()
        .map(|&t| ilt(|s| busy_tail_lt_complex(q, s), t, cfg))
        .collect::<Result<_>>()?;
    let mut excursion = 0.0f64;
    let values = raw
        .into_iter()
        .map(|v| {
            let (c, e) = clamp_unit(v);
            excursion = excursion.max(e);
            c
        })
        .collect();
    Ok(BusyTail {
        curve: TailCurve::new(grid.to_vec(), values)?,
        excursion,
    })
}

/// `∫₀^∞ tⁿ Ψ(t) dt`, which equals `(-1)ⁿ φ⁽ⁿ⁾(0)` for `φ = λu/(λu+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusyMoment {
    pub order: u32,
    pub value: ExtReal,
    /// `value / (1 - e^{-ρ})`: moment of the normalized busy-start density.
    pub normalized: ExtReal,
    pub truncation_error: f64,
    /// Truncated integrals at geometric horizons, filled when the integral diverged.
    pub evidence: Vec<(f64, f64)>,
}

pub fn busy_moment_from_transform(q: &QueueParams, n: u32) -> Result<BusyMoment> {
    let norm = -(-q.rho()).exp_m1();
    let pw = n as i32;
    let integrand = |t: f64| if n == 0 { psi(q, t) } else { t.powi(pw) * psi(q, t) };
    let breaks = q.service.breakpoints();
    let policy = HorizonPolicy {
        tol: 1e-10,
        ..real_policy(q)
    };
    match integrate_semi_infinite(integrand, &breaks, policy, Tolerance::DEFAULT) {
        Ok(r) => Ok(BusyMoment {
            order: n,
            value: ExtReal::Finite(r.value),
            normalized: ExtReal::Finite(r.value / norm),
            truncation_error: r.truncation_error,
            evidence: Vec::new(),
        }),
        Err(Error::NonConvergence { estimate, error, .. }) => {
            let base = 1e3 * q.scale();
            let horizons = [base, 2.0 * base, 4.0 * base, 8.0 * base];
            let values = truncated_integrals(integrand, &horizons, &breaks, Tolerance::DEFAULT)?;
            let evidence: Vec<(f64, f64)> = horizons.iter().copied().zip(values.iter().copied()).collect();
            match divergence_diagnostic(&[values[0], values[1], values[2], values[3]]) {
                MomentClass::Divergent => Ok(BusyMoment {
                    order: n,
                    value: ExtReal::PosInf,
                    normalized: ExtReal::PosInf,
                    truncation_error: f64::INFINITY,
                    evidence,
                }),
                _ => Err(Error::NonConvergence {
                    what: "busy-start moment",
                    estimate,
                    error,
                }),
            }
        }
        Err(e) => Err(e),
    }
}

/// Service law recovered from a busy-period transform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveredService {
    /// `1 - G(t)`, with `t = 0` prepended.
    pub tail: TailCurve,
    /// Inverted busy-start density `f = Ψ` on the same grid.
    pub density: Vec<f64>,
    /// `F(t) = ∫₀^t f`.
    pub cdf: Vec<f64>,
    pub excursion: f64,
    /// `α = -ln(1 - φ(0)) / λ`, implied by the transform at the origin.
    pub implied_mean: f64,
    /// Trapezoid integral of the recovered tail over the grid.
    pub integrated_mean: f64,
}

/// Generic recovery: invert `φ`, integrate, and apply `1 - G = f / (λ (1 - F))`.
///
/// `phi_at_zero` is `φ(0) = 1 - e^{-ρ}`. The density at `t = 0⁺` is `λ`
/// because `G(0) = 0`.
pub fn recover_service_tail<F>(
    phi: F,
    phi_at_zero: f64,
    lambda: f64,
    grid: &[f64],
    cfg: &InversionConfig,
) -> Result<RecoveredService>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid(format!("lambda must be positive (got {lambda})")));
    }
    if !(phi_at_zero > 0.0 && phi_at_zero < 1.0) {
        return Err(Error::invalid(format!("phi(0) must lie in (0, 1) (got {phi_at_zero})")));
    }
    check_grid(grid)?;

    let inverted: Vec<f64> = grid
        .par_iter()
        .map(|&t| ilt(&phi, t, cfg))
        .collect::<Result<_>>()?;

    let mut times = Vec::with_capacity(grid.len() + 1);
    times.push(0.0);
    times.extend_from_slice(grid);
    let mut density = Vec::with_capacity(times.len());
    density.push(lambda);
    density.extend(inverted);

    let cdf = cumulative_trapezoid(&times, &density);
    let eps = 1e-12;
    if let Some(i) = cdf.iter().position(|&c| c >= 1.0 - eps) {
        return Err(Error::Inversion {
            t: times[i],
            reason: format!("cumulative density reached {} before the horizon", cdf[i]),
        });
    }

    let mut excursion = 0.0f64;
    let tail: Vec<f64> = density
        .iter()
        .zip(&cdf)
        .map(|(f, c)| {
            let (v, e) = clamp_unit(f / (lambda * (1.0 - c)));
            excursion = excursion.max(e);
            v
        })
        .collect();
    if excursion >= MAX_EXCURSION {
        return Err(Error::Inversion {
            t: f64::NAN,
            reason: format!("recovered tail left [0, 1] by {excursion:.3e}"),
        });
    }
    let tail = TailCurve::new(times, tail)?;
    let integrated_mean = tail.moment_integral(0, tail.last_time());
    Ok(RecoveredService {
        tail,
        density,
        cdf,
        excursion,
        implied_mean: -(-phi_at_zero).ln_1p() / lambda,
        integrated_mean,
    })
}

/// Recovers the service tail for a queue whose busy period is PME(r):
/// `u = ĥ_r`, `φ = λĥ_r / (λĥ_r + 1)`, `φ(0) = λ/(λ+1)`, so `ρ = ln(1+λ)`.
pub fn recover_service_from_pme_busy(
    r: f64,
    lambda: f64,
    grid: &[f64],
    cfg: &InversionConfig,
) -> Result<RecoveredService> {
    let p = PmeParams::new(r)?;
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid(format!("lambda must be positive (got {lambda})")));
    }
    let phi = |s: Complex64| {
        let h = pme_tail_lt_complex(&p, s)? * lambda;
        Ok(h / (h + 1.0))
    };
    recover_service_tail(phi, lambda / (lambda + 1.0), lambda, grid, cfg)
}

/// Where an equilibrium moment is computed from.
#[derive(Debug, Clone, Copy)]
pub enum EquilibriumSource<'a> {
    Curve(&'a TailCurve),
    Model(&'a ServiceModel),
}

/// `∫₀^T tⁿ (1 - G(t)) / α dt`: trapezoid on curves, quadrature on models.
pub fn equilibrium_tail_moment(source: EquilibriumSource<'_>, n: u32, upto: f64) -> Result<f64> {
    if !upto.is_finite() || upto <= 0.0 {
        return Err(Error::invalid(format!("truncation time must be positive (got {upto})")));
    }
    match source {
        EquilibriumSource::Curve(c) => {
            if upto > c.last_time() {
                return Err(Error::invalid(format!(
                    "truncation time {upto} lies beyond the grid end {}",
                    c.last_time()
                )));
            }
            let mean = c.moment_integral(0, c.last_time());
            Ok(c.moment_integral(n, upto) / mean)
        }
        EquilibriumSource::Model(m) => {
            let pw = n as i32;
            let v = truncated_integrals(|t| t.powi(pw) * m.tail(t), &[upto], &m.breakpoints(), Tolerance::DEFAULT)?;
            Ok(v[0] / m.mean())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentClass {
    Finite,
    Divergent,
    Inconclusive,
}

impl MomentClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            MomentClass::Finite => "finite",
            MomentClass::Divergent => "divergent",
            MomentClass::Inconclusive => "inconclusive",
        }
    }
}

/// Classifies truncated moments taken at `T, 2T, 4T, 8T`: divergent when
/// every successive ratio is at least 1.1, finite when the last ratio is at
/// most 1.01, inconclusive otherwise.
pub fn divergence_diagnostic(values: &[f64; 4]) -> MomentClass {
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&q| q >= 1.1) {
        MomentClass::Divergent
    } else if ratios[2] <= 1.01 {
        MomentClass::Finite
    } else {
        MomentClass::Inconclusive
    }
}

/// Equilibrium moment of order `n` evaluated at `T, 2T, 4T, 8T` and classified.
pub fn classify_equilibrium_moment(source: EquilibriumSource<'_>, n: u32, base: f64) -> Result<(MomentClass, [f64; 4])> {
    let mut values = [0.0; 4];
    for (k, v) in values.iter_mut().enumerate() {
        *v = equilibrium_tail_moment(source, n, base * (1u32 << k) as f64)?;
    }
    Ok((divergence_diagnostic(&values), values))
}
