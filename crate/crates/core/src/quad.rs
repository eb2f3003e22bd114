//! Adaptive Gauss–Kronrod quadrature (21-point rule, global bisection) over
//! finite intervals, plus a geometric-panel driver for `[0, ∞)`.
//!
//! The integrand may be real or complex; anything implementing [`QuadValue`]
//! works. Error estimation follows the QUADPACK `qk21`/`qag` conventions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + AddAssign + Send + Sync
{
    const ZERO: Self;
    fn modulus(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl QuadValue for f64 {
    const ZERO: Self = 0.0;
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance {
        abs: 1e-10,
        rel: 1e-10,
        max_segments: 2000,
    };

    /// Used by the transform evaluations, where identities such as
    /// `(1 - g(s)) / s` amplify absolute errors by `1/s`.
    pub const TIGHT: Tolerance = Tolerance {
        abs: 1e-15,
        rel: 1e-14,
        max_segments: 4000,
    };

    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Tolerance::DEFAULT
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub abs_error: f64,
    /// Estimate of the integral of `|f|`.
    pub abs_value: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    abs_value: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> Segment<T> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = T::ZERO;
    let mut res_abs = fc.modulus() * WGK[10];
    let mut fv1 = [T::ZERO; 10];
    let mut fv2 = [T::ZERO; 10];

    for (j, &wg) in WG.iter().enumerate() {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += (f1 + f2) * wg;
        res_k += (f1 + f2) * WGK[jtw];
        res_abs += WGK[jtw] * (f1.modulus() + f2.modulus());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += (f1 + f2) * WGK[jtwm1];
        res_abs += WGK[jtwm1] * (f1.modulus() + f2.modulus());
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).modulus();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).modulus() + (fv2[j] - mean).modulus());
    }

    let scale = half.abs();
    let value = res_k * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut error = ((res_k - res_g) * half).modulus();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite_value() {
        error = f64::INFINITY;
    }
    Segment {
        a,
        b,
        value,
        error,
        abs_value: res_abs,
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_breaks(f, &[a, b], tol)
}

/// Integrates `f` over `[points[0], points[last]]`, seeding the adaptive
/// partition with every interior point (kinks, jumps, scale changes).
pub fn integrate_breaks<T, F>(f: F, points: &[f64], tol: Tolerance) -> Result<Integral<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if points.len() < 2 {
        return Err(Error::invalid("integration needs at least two points"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("integration points must be non-decreasing"));
    }

    let mut heap = BinaryHeap::new();
    let mut done: Vec<Segment<T>> = Vec::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&f, w[0], w[1]));
            evaluations += 21;
        }
    }

    loop {
        let (value, error) = totals(heap.iter().chain(done.iter()));
        let abs_value: f64 = heap.iter().chain(done.iter()).map(|s| s.abs_value).sum();
        // per-segment error estimates never drop below 50 ε ∫|f|
        let floor = 1.5 * 50.0 * f64::EPSILON * abs_value;
        let target = tol.abs.max(tol.rel * value.modulus()).max(floor);
        if error <= target || heap.is_empty() {
            if !value.is_finite_value() {
                return Err(Error::NonConvergence {
                    what: "quadrature",
                    estimate: f64::NAN,
                    error,
                });
            }
            return Ok(Integral {
                value,
                abs_error: error,
                abs_value,
                evaluations,
            });
        }
        if heap.len() + done.len() >= tol.max_segments {
            return Err(Error::NonConvergence {
                what: "quadrature",
                estimate: value.modulus(),
                error,
            });
        }

        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = mid <= worst.a || mid >= worst.b;
        if too_narrow {
            done.push(worst);
            continue;
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        evaluations += 42;

        let roundoff = 50.0 * f64::EPSILON * (left.abs_value + right.abs_value);
        let stalled = left.error + right.error >= worst.error && worst.error <= 4.0 * roundoff;
        if stalled {
            // roundoff-limited: park both halves
            done.push(left);
            done.push(right);
        } else {
            heap.push(left);
            heap.push(right);
        }
    }
}

fn totals<'a, T: QuadValue + 'a>(segments: impl Iterator<Item = &'a Segment<T>>) -> (T, f64) {
    let mut value = T::ZERO;
    let mut error = 0.0;
    for s in segments {
        value += s.value;
        error += s.error;
    }
    (value, error)
}

/// How far to integrate on `[0, ∞)`.
///
/// Panels `[0, first]`, `[first, 2 first]`, `[2 first, 4 first]`, ... are added
/// until the geometric extrapolation of the per-panel `∫|f|` predicts a
/// remainder below `tol`. Power-law tails make the panel integrals a geometric
/// sequence; once its ratio settles, the extrapolated remainder is added and
/// the run stops when that corrected total changes by less than `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonPolicy {
    pub first: f64,
    pub max: f64,
    pub tol: f64,
}

impl Default for HorizonPolicy {
    fn default() -> Self {
        HorizonPolicy {
            first: 1.0,
            max: 1e18,
            tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SemiInfinite<T> {
    pub value: T,
    /// Accumulated quadrature error over the panels.
    pub abs_error: f64,
    /// Estimated size of the neglected remainder past `horizon`.
    pub truncation_error: f64,
    pub horizon: f64,
    pub evaluations: usize,
}

/// Integrates `f` over `[0, ∞)` panel by panel. `breaks` are positive points
/// where `f` has a kink or jump; panels are split there.
pub fn integrate_semi_infinite<T, F>(
    f: F,
    breaks: &[f64],
    policy: HorizonPolicy,
    tol: Tolerance,
) -> Result<SemiInfinite<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if policy.first.is_nan() || policy.first <= 0.0 || policy.max.is_nan() || policy.max <= policy.first {
        return Err(Error::invalid("horizon policy needs 0 < first < max"));
    }
    let mut value = T::ZERO;
    let mut abs_error = 0.0;
    let mut evaluations = 0;
    let mut lo = 0.0;
    let mut hi = policy.first;
    let mut prev_abs: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut prev_extrapolated: Option<T> = None;
    let mut estimate = f64::INFINITY;

    loop {
        let panel = integrate_breaks(&f, &panel_points(lo, hi, breaks), tol)?;
        value += panel.value;
        abs_error += panel.abs_error;
        evaluations += panel.evaluations;

        if let Some(prev) = prev_abs {
            estimate = remainder_estimate(prev, panel.abs_value);
            if estimate <= policy.tol {
                return Ok(SemiInfinite {
                    value,
                    abs_error,
                    truncation_error: estimate,
                    horizon: hi,
                    evaluations,
                });
            }
            let q = panel.abs_value / prev;
            let settled = prev_ratio.is_some_and(|p| (q - p).abs() <= 1e-2 * q) && q <= MAX_TAIL_RATIO;
            if settled {
                let extrapolated = value + panel.value * (q / (1.0 - q));
                if let Some(e) = prev_extrapolated {
                    let change = (extrapolated - e).modulus();
                    if change <= policy.tol {
                        return Ok(SemiInfinite {
                            value: extrapolated,
                            abs_error,
                            truncation_error: change,
                            horizon: hi,
                            evaluations,
                        });
                    }
                }
                prev_extrapolated = Some(extrapolated);
            } else {
                prev_extrapolated = None;
            }
            prev_ratio = Some(q);
        }
        prev_abs = Some(panel.abs_value);
        if hi >= policy.max {
            return Err(Error::NonConvergence {
                what: "semi-infinite integral",
                estimate: value.modulus(),
                error: estimate,
            });
        }
        lo = hi;
        hi *= 2.0;
    }
}

/// Cumulative integrals of `f` over `[0, h]` for each increasing horizon `h`.
pub fn truncated_integrals<F>(f: F, horizons: &[f64], breaks: &[f64], tol: Tolerance) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    let mut out = Vec::with_capacity(horizons.len());
    let mut lo = 0.0;
    let mut acc = 0.0;
    for &h in horizons {
        if h < lo {
            return Err(Error::invalid("horizons must be increasing"));
        }
        // Geometric sub-panels keep a wide range resolvable.
        let mut a = lo;
        while a < h {
            let b = if a == 0.0 { h.min(1.0) } else { (2.0 * a).min(h) };
            acc += integrate_breaks(&f, &panel_points(a, b, breaks), tol)?.value;
            a = b;
        }
        lo = h;
        out.push(acc);
    }
    Ok(out)
}

/// Panel ratios closer to 1 than this are too slow to extrapolate reliably.
const MAX_TAIL_RATIO: f64 = 0.95;

fn remainder_estimate(prev: f64, last: f64) -> f64 {
    if last == 0.0 {
        return 0.0;
    }
    let q = last / prev;
    if q < 1.0 {
        last * q / (1.0 - q)
    } else {
        f64::INFINITY
    }
}

fn panel_points(lo: f64, hi: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts
}
