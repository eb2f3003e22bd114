//! Discrete-event simulation of the M|G|∞ queue.
//!
//! Arrivals are Poisson; every arrival gets its own server and schedules its
//! departure. A busy period opens when an arrival finds the system empty and
//! closes when the last scheduled departure leaves it empty again.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::busy_period::QueueParams;
use crate::curve::TailCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop after this many complete busy periods.
    BusyPeriods(usize),
    /// Stop at this simulated time; a busy period still open is discarded.
    Horizon(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub queue: QueueParams,
    pub stop: StopRule,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(queue: QueueParams, stop: StopRule, seed: u64) -> Result<Self> {
        match stop {
            StopRule::BusyPeriods(0) => return Err(Error::invalid("busy-period count must be at least 1")),
            StopRule::Horizon(h) if !(h > 0.0 && h.is_finite()) => {
                return Err(Error::invalid(format!("horizon must be positive (got {h})")))
            }
            _ => {}
        }
        Ok(SimConfig { queue, stop, seed })
    }

    /// Configuration of replicate `k`, which draws from stream `seed + k`.
    pub fn replicate(&self, k: u64) -> SimConfig {
        SimConfig {
            seed: self.seed.wrapping_add(k),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub busy_lengths: Vec<f64>,
    /// Empty intervals between consecutive busy periods.
    pub idle_lengths: Vec<f64>,
    /// Busy share of the observed time after the first regeneration.
    pub busy_fraction: f64,
    pub rng_draws: u64,
    pub customers: u64,
}

impl SimResult {
    pub fn empty_fraction(&self) -> f64 {
        1.0 - self.busy_fraction
    }

    pub fn mean_busy(&self) -> f64 {
        mean(&self.busy_lengths)
    }

    /// Standard error of the mean busy period.
    pub fn busy_std_error(&self) -> f64 {
        let n = self.busy_lengths.len() as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let m = self.mean_busy();
        let var = self.busy_lengths.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }

    pub fn total_time(&self) -> f64 {
        self.busy_lengths.iter().sum::<f64>() + self.idle_lengths.iter().sum::<f64>()
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// RNG wrapper counting 64-bit draws.
struct CountingRng<R> {
    inner: R,
    draws: u64,
}

impl<R: RngCore> RngCore for CountingRng<R> {
    fn next_u32(&mut self) -> u32 {
        self.draws += 1;
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.draws += dst.len().div_ceil(8) as u64;
        self.inner.fill_bytes(dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Departure(f64);

impl Eq for Departure {}
impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn simulate(cfg: &SimConfig) -> SimResult {
    let q = &cfg.queue;
    let lambda = q.lambda();
    let service = q.service();
    let mut rng = CountingRng {
        inner: ChaCha8Rng::seed_from_u64(cfg.seed),
        draws: 0,
    };
    let (target, horizon) = match cfg.stop {
        StopRule::BusyPeriods(n) => (n, f64::INFINITY),
        StopRule::Horizon(h) => (usize::MAX, h),
    };

    let mut departures: BinaryHeap<Reverse<Departure>> = BinaryHeap::new();
    let mut busy_lengths = Vec::new();
    let mut idle_lengths = Vec::new();
    let mut customers = 0u64;
    let mut busy_start: Option<f64> = None;
    let mut last_empty: Option<f64> = None;
    let mut next_arrival = rng.sample::<f64, _>(Exp1) / lambda;

    while busy_lengths.len() < target {
        let next_departure = departures.peek().map(|d| d.0 .0);
        match next_departure {
            Some(d) if d <= next_arrival => {
                if d > horizon {
                    break;
                }
                departures.pop();
                if departures.is_empty() {
                    let start = busy_start.take().expect("busy period open");
                    busy_lengths.push(d - start);
                    last_empty = Some(d);
                }
            }
            _ => {
                let t = next_arrival;
                if t > horizon {
                    break;
                }
                if departures.is_empty() {
                    if let Some(e) = last_empty {
                        idle_lengths.push(t - e);
                    }
                    busy_start = Some(t);
                }
                customers += 1;
                departures.push(Reverse(Departure(t + service.sample(&mut rng))));
                next_arrival = t + rng.sample::<f64, _>(Exp1) / lambda;
            }
        }
    }

    // an idle period followed by a busy period cut at the horizon is dropped
    idle_lengths.truncate(busy_lengths.len().saturating_sub(1));
    let busy: f64 = busy_lengths.iter().sum();
    let idle: f64 = idle_lengths.iter().sum();
    let busy_fraction = if busy + idle > 0.0 { busy / (busy + idle) } else { f64::NAN };
    SimResult {
        busy_lengths,
        idle_lengths,
        busy_fraction,
        rng_draws: rng.draws,
        customers,
    }
}

/// Fraction of samples strictly greater than each grid time.
pub fn empirical_tail(samples: &[f64], grid: &[f64]) -> Result<TailCurve> {
    if samples.is_empty() {
        return Err(Error::invalid("empirical tail needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let values = grid
        .iter()
        .map(|&t| (sorted.len() - sorted.partition_point(|&x| x <= t)) as f64 / n)
        .collect();
    TailCurve::new(grid.to_vec(), values)
}

/// Hill-type tail-index estimate from the top `k` order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailIndex {
    pub k: usize,
    /// Mean log-spacing `(1/k) Σ ln(x_(i) / x_(k+1))`.
    pub mean_log_spacing: f64,
    /// Reciprocal of the mean log-spacing: the estimated tail exponent.
    pub index: f64,
}

pub fn tail_index_estimate(samples: &[f64], k: usize) -> Result<TailIndex> {
    if k < 10 {
        return Err(Error::invalid(format!("k must be at least 10 (got {k})")));
    }
    if k >= samples.len() {
        return Err(Error::invalid(format!(
            "k = {k} must be below the sample count {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(Error::invalid("tail-index samples must be positive and finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k];
    let spacing = sorted[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    if spacing <= 0.0 {
        return Err(Error::invalid("degenerate samples: top order statistics are all equal"));
    }
    Ok(TailIndex {
        k,
        mean_log_spacing: spacing,
        index: 1.0 / spacing,
    })
}

/// Outcome of comparing tail-index estimates at `k` and `2k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTailCheck {
    pub at_k: TailIndex,
    pub at_2k: TailIndex,
    /// False ("no power tail") when the larger estimate exceeds the smaller by more than 25%.
    pub power_tail: bool,
}

pub fn power_tail_check(samples: &[f64], k: usize) -> Result<PowerTailCheck> {
    let at_k = tail_index_estimate(samples, k)?;
    let at_2k = tail_index_estimate(samples, 2 * k)?;
    let (lo, hi) = if at_k.index < at_2k.index {
        (at_k.index, at_2k.index)
    } else {
        (at_2k.index, at_k.index)
    };
    let drift = hi / lo - 1.0;
    Ok(PowerTailCheck {
        at_k,
        at_2k,
        power_tail: drift <= 0.25,
    })
}

/// Kolmogorov–Smirnov distance between samples and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
