//! Independent reference values: closed forms and incomplete-gamma expressions.

#![allow(dead_code)]

use statrs::function::gamma::{gamma, gamma_lr};

pub fn x_m(r: f64) -> f64 {
    (r - 1.0) / r
}

/// PME density through the regularized lower incomplete gamma function:
/// `∫₀^a x^r e^{-tx} dx = Γ(r+1) P(r+1, at) / t^{r+1}`.
pub fn pme_pdf_gamma(r: f64, t: f64) -> f64 {
    let (xm, a) = (x_m(r), 1.0 / x_m(r));
    r * xm.powf(r) * gamma(r + 1.0) * gamma_lr(r + 1.0, a * t) / t.powf(r + 1.0)
}

pub fn pme_tail_gamma(r: f64, t: f64) -> f64 {
    let (xm, a) = (x_m(r), 1.0 / x_m(r));
    r * xm.powf(r) * gamma(r) * gamma_lr(r, a * t) / t.powf(r)
}

/// `ĝ_2(s) = (2 - 2s + s² ln((s+2)/s)) / 2`.
pub fn g2_hat(s: f64) -> f64 {
    0.5 * (2.0 - 2.0 * s + s * s * ((s + 2.0) / s).ln())
}

/// `g_2(t) = ½ ∫₀² x² e^{-tx} dx`.
pub fn g2_pdf(t: f64) -> f64 {
    let e = (-2.0 * t).exp();
    0.5 * (2.0 / t.powi(3) - e * (4.0 / t + 4.0 / (t * t) + 2.0 / t.powi(3)))
}

/// `m_n = n! r/(r-n) x_m^n` for `n < r`.
pub fn pme_moment_formula(r: f64, n: u32) -> Option<f64> {
    if (n as f64) >= r {
        return None;
    }
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    Some(fact * r / (r - n as f64) * x_m(r).powi(n as i32))
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
