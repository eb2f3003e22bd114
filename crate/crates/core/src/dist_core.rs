//! The Pareto mixing law, the Pareto mixture of exponentials (PME) built on
//! it, and the service-time models used by the queue calculus.
//!
//! Both families are parameterized by a single shape `r > 1` with scale
//! `x_m = (r - 1) / r`, which pins the mean to 1. PME quantities are computed
//! after the substitution `x = 1/y`, which turns the infinite mixing range into
//! the finite interval `[0, 1/x_m]`:
//!
//! ```text
//! g_r(t)  = r x_m^r ∫₀^{1/x_m} x^r     e^{-tx} dx
//! H_r(t)  = r x_m^r ∫₀^{1/x_m} x^{r-1} e^{-tx} dx
//! ```

use rand::distr::OpenClosed01;
use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::curve::{cumulative_trapezoid, TailCurve};
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::quad::{integrate_breaks, Tolerance};

fn check_shape(r: f64) -> Result<()> {
    if !r.is_finite() || r <= 1.0 {
        return Err(Error::invalid(format!("r must exceed 1 (got {r})")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoParams {
    r: f64,
    x_m: f64,
}

impl ParetoParams {
    pub fn new(r: f64) -> Result<Self> {
        check_shape(r)?;
        Ok(ParetoParams { r, x_m: (r - 1.0) / r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn x_m(&self) -> f64 {
        self.x_m
    }

    pub fn mean(&self) -> f64 {
        self.r * self.x_m / (self.r - 1.0)
    }

    pub fn tail(&self, x: f64) -> f64 {
        if x < self.x_m {
            1.0
        } else {
            (self.x_m / x).powf(self.r)
        }
    }

    /// Inverse-CDF draw `x_m U^{-1/r}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(OpenClosed01);
        self.x_m * u.powf(-1.0 / self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmeParams {
    r: f64,
}

impl PmeParams {
    pub fn new(r: f64) -> Result<Self> {
        check_shape(r)?;
        Ok(PmeParams { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn x_m(&self) -> f64 {
        (self.r - 1.0) / self.r
    }

    /// Upper end `1/x_m` of the substituted mixing interval.
    pub(crate) fn upper(&self) -> f64 {
        self.r / (self.r - 1.0)
    }

    /// The constant `r x_m^r` in front of every mixing integral.
    pub(crate) fn prefactor(&self) -> f64 {
        self.r * self.x_m().powf(self.r)
    }

    pub fn mixing(&self) -> ParetoParams {
        ParetoParams {
            r: self.r,
            x_m: self.x_m(),
        }
    }
}

pub fn pareto_pdf(p: &ParetoParams, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("x must be finite (got {x})")));
    }
    if x < p.x_m {
        return Ok(0.0);
    }
    Ok(p.r * p.x_m.powf(p.r) * x.powf(-(p.r + 1.0)))
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!("t must be non-negative (got {t})")));
    }
    Ok(())
}

/// Split points on the scale `1/t` where `e^{-tx}` concentrates its mass.
fn decay_breaks(t: f64, upper: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    if t > 0.0 {
        for k in [1.0, 10.0, 100.0] {
            let x = k / t;
            if x < upper {
                pts.push(x);
            }
        }
    }
    pts.push(upper);
    pts
}

/// Absolute tolerance shrunk with the expected size `~ t^{-(power+1)}` so that
/// far-tail values keep relative accuracy.
fn scaled_tolerance(t: f64, power: f64) -> Tolerance {
    let scale = (1.0 + t).powf(-(power + 1.0)).min(1.0);
    Tolerance::new(Tolerance::DEFAULT.abs * scale, Tolerance::DEFAULT.rel)
}

fn mixing_integral(p: &PmeParams, t: f64, power: f64) -> Result<f64> {
    let upper = p.upper();
    let integral = integrate_breaks(
        |x: f64| x.powf(power) * (-t * x).exp(),
        &decay_breaks(t, upper),
        scaled_tolerance(t, power),
    )?;
    Ok(p.prefactor() * integral.value)
}

/// PME density `g_r(t)`.
pub fn pme_pdf(p: &PmeParams, t: f64) -> Result<f64> {
    check_time(t)?;
    mixing_integral(p, t, p.r)
}

/// PME tail `H_r(t) = P(B > t)`.
pub fn pme_tail(p: &PmeParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok(mixing_integral(p, t, p.r - 1.0)?.min(1.0))
}

/// `∫₀^t H_r(v) dv = r x_m^r ∫₀^{1/x_m} x^{r-2} (1 - e^{-tx}) dx`.
pub fn pme_integrated_tail(p: &PmeParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let upper = p.upper();
    let power = p.r - 2.0;
    let tol = Tolerance::new(Tolerance::DEFAULT.abs * t.min(1.0), Tolerance::DEFAULT.rel);
    let integral = integrate_breaks(
        |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                x.powf(power) * -(-t * x).exp_m1()
            }
        },
        &decay_breaks(t, upper),
        tol,
    )?;
    Ok(p.prefactor() * integral.value)
}

/// Raw moment `E[Bⁿ] = n! r/(r-n) x_mⁿ`, finite only for `n < r`.
pub fn pme_moment(p: &PmeParams, n: u32) -> Result<ExtReal> {
    if n == 0 {
        return Err(Error::invalid("moment order must be at least 1"));
    }
    let nf = n as f64;
    if nf >= p.r {
        return Ok(ExtReal::PosInf);
    }
    Ok(ExtReal::Finite(
        factorial(n) * p.r / (p.r - nf) * p.x_m().powi(n as i32),
    ))
}

/// Draws `Y = x_m U^{-1/r}`, then an exponential with mean `Y`.
pub fn pme_sample<R: Rng + ?Sized>(p: &PmeParams, rng: &mut R) -> f64 {
    let mean = p.mixing().sample(rng);
    let e: f64 = rng.sample(Exp1);
    mean * e
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::invalid(format!("rate must be positive (got {rate})")));
        }
        Ok(Exponential { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deterministic {
    duration: f64,
}

impl Deterministic {
    pub fn new(duration: f64) -> Result<Self> {
        if !duration.is_finite() || duration <= 0.0 {
            return Err(Error::invalid(format!(
                "duration must be positive (got {duration})"
            )));
        }
        Ok(Deterministic { duration })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }
}

/// A service tail known only on a grid: piecewise linear, forced
/// non-increasing and into `[0, 1]`, and zero past the last grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedTail {
    grid: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedTail {
    pub fn new(curve: &TailCurve) -> Result<Self> {
        if curve.grid()[0] != 0.0 || curve.len() < 2 {
            return Err(Error::invalid(
                "tabulated tail needs at least two points starting at t = 0",
            ));
        }
        let mut running = 1.0f64;
        let values: Vec<f64> = curve
            .values()
            .iter()
            .map(|&v| {
                running = running.min(v.clamp(0.0, 1.0));
                running
            })
            .collect();
        let grid = curve.grid().to_vec();
        let cumulative = cumulative_trapezoid(&grid, &values);
        if *cumulative.last().expect("non-empty") <= 0.0 {
            return Err(Error::invalid("tabulated tail has zero mean"));
        }
        Ok(TabulatedTail {
            grid,
            values,
            cumulative,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    fn end(&self) -> f64 {
        *self.grid.last().expect("non-empty")
    }

    fn tail(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        if t >= self.end() {
            return 0.0;
        }
        let i = self.grid.partition_point(|&x| x <= t);
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn integrated(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.end() {
            return *self.cumulative.last().expect("non-empty");
        }
        let i = self.grid.partition_point(|&x| x <= t);
        let t0 = self.grid[i - 1];
        self.cumulative[i - 1] + 0.5 * (t - t0) * (self.values[i - 1] + self.tail(t))
    }

    fn mean(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(OpenClosed01);
        // first grid index whose tail value drops to u or below
        let i = self.values.partition_point(|&v| v > u);
        if i == 0 {
            return 0.0;
        }
        if i == self.values.len() {
            return self.end();
        }
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        t0 + (t1 - t0) * (v0 - u) / (v0 - v1)
    }
}

/// Service-time distribution of the queue.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceModel {
    Exponential(Exponential),
    Deterministic(Deterministic),
    Pareto(ParetoParams),
    Pme(PmeParams),
    Tabulated(TabulatedTail),
}

impl ServiceModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(ServiceModel::Exponential(Exponential::new(rate)?))
    }

    pub fn deterministic(duration: f64) -> Result<Self> {
        Ok(ServiceModel::Deterministic(Deterministic::new(duration)?))
    }

    pub fn pareto(r: f64) -> Result<Self> {
        Ok(ServiceModel::Pareto(ParetoParams::new(r)?))
    }

    pub fn pme(r: f64) -> Result<Self> {
        Ok(ServiceModel::Pme(PmeParams::new(r)?))
    }

    pub fn tabulated(curve: &TailCurve) -> Result<Self> {
        Ok(ServiceModel::Tabulated(TabulatedTail::new(curve)?))
    }

    /// `P(S > t)`; equal to 1 for negative `t`.
    pub fn tail(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match self {
            ServiceModel::Exponential(e) => (-e.rate * t).exp(),
            ServiceModel::Deterministic(d) => {
                if t < d.duration {
                    1.0
                } else {
                    0.0
                }
            }
            ServiceModel::Pareto(p) => p.tail(t),
            ServiceModel::Pme(p) => pme_tail(p, t).unwrap_or(f64::NAN),
            ServiceModel::Tabulated(tab) => tab.tail(t),
        }
    }

    /// Density where one exists (`None` for the point mass and tabulated tails).
    pub fn density(&self, t: f64) -> Option<f64> {
        if t < 0.0 {
            return Some(0.0);
        }
        match self {
            ServiceModel::Exponential(e) => Some(e.rate * (-e.rate * t).exp()),
            ServiceModel::Deterministic(_) | ServiceModel::Tabulated(_) => None,
            ServiceModel::Pareto(p) => pareto_pdf(p, t).ok(),
            ServiceModel::Pme(p) => pme_pdf(p, t).ok(),
        }
    }

    /// Mean service time `α = ∫₀^∞ tail`.
    pub fn mean(&self) -> f64 {
        match self {
            ServiceModel::Exponential(e) => 1.0 / e.rate,
            ServiceModel::Deterministic(d) => d.duration,
            ServiceModel::Pareto(p) => p.mean(),
            ServiceModel::Pme(_) => 1.0,
            ServiceModel::Tabulated(tab) => tab.mean(),
        }
    }

    /// `∫₀^t tail(v) dv`.
    pub fn integrated_tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            ServiceModel::Exponential(e) => -(-e.rate * t).exp_m1() / e.rate,
            ServiceModel::Deterministic(d) => t.min(d.duration),
            ServiceModel::Pareto(p) => {
                let (r, xm) = (p.r, p.x_m);
                if t <= xm {
                    t
                } else {
                    xm + xm.powf(r) * (t.powf(1.0 - r) - xm.powf(1.0 - r)) / (1.0 - r)
                }
            }
            ServiceModel::Pme(p) => pme_integrated_tail(p, t).unwrap_or(f64::NAN),
            ServiceModel::Tabulated(tab) => tab.integrated(t),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ServiceModel::Exponential(e) => {
                let x: f64 = rng.sample(Exp1);
                x / e.rate
            }
            ServiceModel::Deterministic(d) => d.duration,
            ServiceModel::Pareto(p) => p.sample(rng),
            ServiceModel::Pme(p) => pme_sample(p, rng),
            ServiceModel::Tabulated(tab) => tab.sample(rng),
        }
    }

    /// Points where the tail has a jump or kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ServiceModel::Deterministic(d) => vec![d.duration],
            ServiceModel::Pareto(p) => vec![p.x_m],
            ServiceModel::Tabulated(tab) => tab.grid[1..].to_vec(),
            _ => Vec::new(),
        }
    }

    /// Short label such as `exp:1` or `pme:2.5`.
    pub fn label(&self) -> String {
        match self {
            ServiceModel::Exponential(e) => format!("exp:{}", e.rate),
            ServiceModel::Deterministic(d) => format!("det:{}", d.duration),
            ServiceModel::Pareto(p) => format!("pareto:{}", p.r),
            ServiceModel::Pme(p) => format!("pme:{}", p.r),
            ServiceModel::Tabulated(tab) => format!("tabulated:{}", tab.grid.len()),
        }
    }
}

impl std::str::FromStr for ServiceModel {
    type Err = Error;

    /// Parses `exp:RATE`, `det:D`, `pareto:R` or `pme:R`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("service must look like kind:value (got {s:?})")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad service parameter {value:?}")))?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "exp" | "exponential" => ServiceModel::exponential(v),
            "det" | "deterministic" => ServiceModel::deterministic(v),
            "pareto" => ServiceModel::pareto(v),
            "pme" => ServiceModel::pme(v),
            other => Err(Error::invalid(format!("unknown service kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_semi_infinite, HorizonPolicy};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_validation() {
        assert!(PmeParams::new(1.0).is_err());
        assert!(PmeParams::new(0.5).is_err());
        assert!(PmeParams::new(f64::NAN).is_err());
        assert!(ParetoParams::new(f64::INFINITY).is_err());
        let e = PmeParams::new(1.0).unwrap_err();
        assert!(e.to_string().contains("r must exceed 1"));
    }

    #[test]
    fn pareto_pdf_values() {
        let p = ParetoParams::new(2.0).unwrap();
        assert_eq!(p.x_m(), 0.5);
        assert_relative_eq!(pareto_pdf(&p, 1.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(pareto_pdf(&p, 0.4).unwrap(), 0.0);
        assert!(pareto_pdf(&p, f64::NAN).is_err());
        assert!(pareto_pdf(&p, f64::INFINITY).is_err());
    }

    #[test]
    fn pareto_normalization_and_unit_mean() {
        for r in [1.5, 2.0, 3.0, 7.5] {
            let p = ParetoParams::new(r).unwrap();
            assert_relative_eq!(p.mean(), 1.0, max_relative = 1e-14);
            let pol = HorizonPolicy { first: 1.0, tol: 1e-12, max: 1e30 };
            let mass = integrate_semi_infinite(
                |x: f64| pareto_pdf(&p, x + p.x_m()).unwrap(),
                &[],
                pol,
                Tolerance::DEFAULT,
            )
            .unwrap();
            assert!((mass.value - 1.0).abs() < 1e-8, "r={r}: {}", mass.value);
            if r > 2.0 {
                let mean = integrate_semi_infinite(
                    |x: f64| (x + p.x_m()) * pareto_pdf(&p, x + p.x_m()).unwrap(),
                    &[],
                    pol,
                    Tolerance::DEFAULT,
                )
                .unwrap();
                assert!((mean.value - 1.0).abs() < 1e-7, "r={r}: {}", mean.value);
            }
        }
    }

    #[test]
    fn pme_pdf_at_origin() {
        let p = PmeParams::new(2.0).unwrap();
        assert_relative_eq!(pme_pdf(&p, 0.0).unwrap(), 4.0 / 3.0, max_relative = 1e-12);
        assert!(pme_pdf(&p, -1.0).is_err());
        assert!(pme_tail(&p, -1e-9).is_err());
    }

    #[test]
    fn pme_tail_at_origin_and_mass() {
        for r in [1.5, 2.0, 3.0] {
            let p = PmeParams::new(r).unwrap();
            assert_eq!(pme_tail(&p, 0.0).unwrap(), 1.0);
            // density integrates to 1 - H(T)
            let t_end = 30.0;
            let mass = integrate(|t: f64| pme_pdf(&p, t).unwrap(), 0.0, t_end, Tolerance::DEFAULT).unwrap();
            let tail = pme_tail(&p, t_end).unwrap();
            assert!((mass.value - (1.0 - tail)).abs() < 1e-8, "r={r}");
        }
    }

    #[test]
    fn pme_integrated_tail_matches_tail_quadrature() {
        let p = PmeParams::new(1.5).unwrap();
        for t in [0.01, 0.5, 3.0, 40.0] {
            let direct = integrate(|v: f64| pme_tail(&p, v).unwrap(), 0.0, t, Tolerance::DEFAULT).unwrap();
            assert_relative_eq!(pme_integrated_tail(&p, t).unwrap(), direct.value, max_relative = 1e-8);
        }
    }

    #[test]
    fn pme_moments() {
        for r in [1.2, 2.0, 3.0, 10.0] {
            let p = PmeParams::new(r).unwrap();
            assert_relative_eq!(pme_moment(&p, 1).unwrap().finite().unwrap(), 1.0, max_relative = 1e-14);
        }
        let p3 = PmeParams::new(3.0).unwrap();
        assert_relative_eq!(pme_moment(&p3, 2).unwrap().finite().unwrap(), 8.0 / 3.0, max_relative = 1e-14);
        assert_eq!(pme_moment(&p3, 3).unwrap(), ExtReal::PosInf);
        assert_eq!(pme_moment(&PmeParams::new(2.0).unwrap(), 2).unwrap(), ExtReal::PosInf);
        assert!(pme_moment(&p3, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let p = PmeParams::new(2.5).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| pme_sample(&p, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn service_variants() {
        let d = ServiceModel::deterministic(1.0).unwrap();
        assert_eq!(d.tail(0.5), 1.0);
        assert_eq!(d.tail(1.5), 0.0);
        assert_eq!(d.mean(), 1.0);
        assert_eq!(ServiceModel::exponential(2.0).unwrap().mean(), 0.5);
        assert_eq!(ServiceModel::pme(2.0).unwrap().mean(), 1.0);
        assert!(ServiceModel::exponential(0.0).is_err());
        assert!(ServiceModel::deterministic(-1.0).is_err());
        assert!(ServiceModel::pareto(1.0).is_err());
        for m in [
            ServiceModel::exponential(1.3).unwrap(),
            ServiceModel::pareto(2.5).unwrap(),
            ServiceModel::pme(2.0).unwrap(),
        ] {
            assert_eq!(m.tail(0.0), 1.0);
            let pol = HorizonPolicy { first: 1.0, tol: 1e-9, max: 1e30 };
            let mean = integrate_semi_infinite(|t: f64| m.tail(t), &m.breakpoints(), pol, Tolerance::DEFAULT)
                .unwrap();
            assert!((mean.value - m.mean()).abs() < 1e-6, "{}: {}", m.label(), mean.value);
            for t in [0.2, 1.0, 4.0] {
                let direct = integrate_breaks(
                    |v: f64| m.tail(v),
                    &[vec![0.0], m.breakpoints().into_iter().filter(|&b| b < t).collect(), vec![t]].concat(),
                    Tolerance::DEFAULT,
                )
                .unwrap();
                assert_relative_eq!(m.integrated_tail(t), direct.value, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn service_parsing() {
        assert_eq!("exp:2".parse::<ServiceModel>().unwrap().mean(), 0.5);
        assert_eq!("det:1.5".parse::<ServiceModel>().unwrap().mean(), 1.5);
        assert!("pme:1".parse::<ServiceModel>().is_err());
        assert!("gamma:2".parse::<ServiceModel>().is_err());
        assert!("exp".parse::<ServiceModel>().is_err());
    }

    #[test]
    fn tabulated_tail_behaviour() {
        let curve = TailCurve::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0]).unwrap();
        let m = ServiceModel::tabulated(&curve).unwrap();
        assert_eq!(m.mean(), 1.0);
        assert_eq!(m.tail(0.5), 0.75);
        assert_eq!(m.tail(3.0), 0.0);
        assert_eq!(m.integrated_tail(1.0), 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mean = (0..n).map(|_| m.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }
}
