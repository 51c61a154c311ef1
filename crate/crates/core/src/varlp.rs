//! The variable exponent space `L^{p(.)}`: modular, Luxemburg–Nakano norm and
//! the dual-pairing (Orlicz type) norm.
//!
//! The solvers work on weighted atoms (`values`, `exponents`, `weights`), so
//! the grid versions and the lattice module share one implementation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ExponentField, GridFunction};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Target accuracy of `|m(f/lambda, p) - 1|` at the returned norm.
pub const MODULAR_TOL: f64 = 1e-12;

/// Relative slack used by the inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-8;

const MAX_ITER: usize = 2_000;

/// Outcome of a norm solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl NormResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
        }
    }
}

fn check_atoms(values: &[f64], exponents: &[f64], weights: &[f64]) -> Result<()> {
    if values.len() != exponents.len() || values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: values.len(),
            found: exponents.len().min(weights.len()),
        });
    }
    Ok(())
}

/// `sum_i w_i |f_i|^{p_i}`.
pub fn modular_atoms(values: &[f64], exponents: &[f64], weights: &[f64]) -> f64 {
    compensated_sum(
        values
            .iter()
            .zip(exponents)
            .zip(weights)
            .map(|((&f, &p), &w)| w * f.abs().powf(p)),
    )
}

/// `m(f / lambda)` computed as `sum w_i exp(p_i (ln|f_i| - ln lambda))`.
fn scaled_modular(log_abs: &[f64], exponents: &[f64], weights: &[f64], log_lambda: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for ((&la, &p), &w) in log_abs.iter().zip(exponents).zip(weights) {
        if la > f64::NEG_INFINITY {
            acc.add(w * (p * (la - log_lambda)).exp());
        }
    }
    acc.value()
}

/// Luxemburg–Nakano norm of weighted atoms: the `lambda` solving
/// `m(f/lambda, p) = 1`, found by geometric bracketing and bisection in
/// `ln lambda`.
pub fn luxemburg_atoms(values: &[f64], exponents: &[f64], weights: &[f64]) -> Result<NormResult> {
    check_atoms(values, exponents, weights)?;
    let log_abs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    if log_abs.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Ok(NormResult::zero());
    }
    let p_minus = exponents.iter().copied().fold(f64::INFINITY, f64::min);
    let m = |log_lambda: f64| scaled_modular(&log_abs, exponents, weights, log_lambda);

    // initial guess lambda_0 = m(f, p)^{1/p_-}
    let m0 = m(0.0);
    let mut guess = if m0.is_finite() && m0 > 0.0 {
        m0.ln() / p_minus
    } else {
        log_abs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    if !guess.is_finite() {
        guess = 0.0;
    }
    let step = std::f64::consts::LN_2;
    let mut iterations = 0;
    let (mut lo, mut hi) = (guess, guess);
    while m(hi) > 1.0 {
        hi += step;
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::NonConvergence {
                what: "luxemburg bracket",
                iterations,
                residual: m(hi) - 1.0,
            });
        }
    }
    while m(lo) <= 1.0 {
        lo -= step;
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::NonConvergence {
                what: "luxemburg bracket",
                iterations,
                residual: m(lo) - 1.0,
            });
        }
    }
    // invariant: m(lo) > 1 >= m(hi)
    while iterations < MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let residual = (m(hi) - 1.0).abs();
    if residual > MODULAR_TOL {
        return Err(Error::NonConvergence {
            what: "luxemburg bisection",
            iterations,
            residual,
        });
    }
    Ok(NormResult {
        value: hi.exp(),
        iterations,
        residual,
    })
}

/// Gradient of the Luxemburg norm with respect to `|f_i|` at `norm = ||f||`:
/// `w_i p_i |f_i|^{p_i-1} lambda^{-p_i} / sum_j w_j p_j |f_j|^{p_j} lambda^{-p_j-1}`.
pub fn luxemburg_gradient(
    values: &[f64],
    exponents: &[f64],
    weights: &[f64],
    norm: f64,
) -> Vec<f64> {
    if norm == 0.0 {
        return vec![0.0; values.len()];
    }
    let terms: Vec<f64> = values
        .iter()
        .zip(exponents)
        .map(|(&f, &p)| (f.abs() / norm).powf(p))
        .collect();
    let denom = compensated_sum(
        terms
            .iter()
            .zip(exponents)
            .zip(weights)
            .map(|((&t, &p), &w)| w * p * t),
    ) / norm;
    values
        .iter()
        .zip(exponents)
        .zip(weights)
        .zip(&terms)
        .map(|(((&f, &p), &w), &t)| {
            let a = f.abs();
            if a == 0.0 {
                0.0
            } else {
                w * p * t / a / denom
            }
        })
        .collect()
}

/// Dual-pairing norm `sup { sum w_i |f_i g_i| : m(g, p') <= 1 }` with its maximizer.
///
/// The constraint is a single smooth convex inequality and the objective is
/// linear, so the KKT point is the maximizer:
/// `g_i = (|f_i| / (nu q_i))^{p_i - 1}` with `q = p'` and the multiplier `nu`
/// fixed by `m(g, q) = 1`. Since `g_i^{q_i} = (|f_i|/(q_i nu))^{p_i}`, the
/// multiplier is the Luxemburg norm of `|f|/q`.
pub fn orlicz_atoms(
    values: &[f64],
    exponents: &[f64],
    weights: &[f64],
) -> Result<(NormResult, Vec<f64>)> {
    check_atoms(values, exponents, weights)?;
    if values.iter().all(|&v| v == 0.0) {
        return Ok((NormResult::zero(), vec![0.0; values.len()]));
    }
    let scaled: Vec<f64> = values
        .iter()
        .zip(exponents)
        .map(|(&f, &p)| f.abs() * (p - 1.0) / p)
        .collect();
    let nu = luxemburg_atoms(&scaled, exponents, weights)?;
    let maximizer: Vec<f64> = scaled
        .iter()
        .zip(exponents)
        .zip(values)
        .map(|((&s, &p), &f)| (s / nu.value).powf(p - 1.0).copysign(f))
        .collect();
    let conj: Vec<f64> = exponents.iter().map(|&p| p / (p - 1.0)).collect();
    let residual = (modular_atoms(&maximizer, &conj, weights) - 1.0).abs();
    let value = compensated_sum(
        values
            .iter()
            .zip(&maximizer)
            .zip(weights)
            .map(|((&f, &g), &w)| w * (f * g).abs()),
    );
    Ok((
        NormResult {
            value,
            iterations: nu.iterations,
            residual,
        },
        maximizer,
    ))
}

/// Classic weighted `L^q` norm, `q` in `[1, inf]`.
pub fn lq_atoms(values: &[f64], q: f64, weights: &[f64]) -> f64 {
    if q.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let s = compensated_sum(
        values
            .iter()
            .zip(weights)
            .map(|(&v, &w)| w * v.abs().powf(q)),
    );
    s.powf(1.0 / q)
}

fn grid_weights(f: &GridFunction) -> Vec<f64> {
    vec![f.grid().cell_measure(); f.len()]
}

/// `m(f, p) = int |f|^{p(x)} dx`.
pub fn modular(f: &GridFunction, p: &ExponentField) -> Result<f64> {
    f.check_grid(p.grid())?;
    Ok(modular_atoms(f.values(), p.values(), &grid_weights(f)))
}

/// `||f||_{L^{p(.)}} = inf { lambda > 0 : m(f/lambda, p) <= 1 }`.
pub fn luxemburg_norm(f: &GridFunction, p: &ExponentField) -> Result<NormResult> {
    f.check_grid(p.grid())?;
    luxemburg_atoms(f.values(), p.values(), &grid_weights(f))
}

/// `||f||^0 = sup { int |fg| : ||g||_{L^{p'(.)}} <= 1 }`.
pub fn orlicz_norm(f: &GridFunction, p: &ExponentField) -> Result<NormResult> {
    f.check_grid(p.grid())?;
    Ok(orlicz_atoms(f.values(), p.values(), &grid_weights(f))?.0)
}

/// Classic `L^q` norm of a grid function.
pub fn classic_norm(f: &GridFunction, q: f64) -> f64 {
    lq_atoms(f.values(), q, &grid_weights(f))
}

/// Both sides of `int |fg| <= r_p ||f||_{p(.)} ||g||_{p'(.)}`.
pub fn holder_pairing(f: &GridFunction, g: &GridFunction, p: &ExponentField) -> Result<(f64, f64)> {
    f.check_grid(p.grid())?;
    g.check_grid(p.grid())?;
    let lhs = f.abs_pairing(g)?;
    let nf = luxemburg_norm(f, p)?.value;
    let ng = luxemburg_norm(g, &p.conjugate())?.value;
    Ok((lhs, p.r_const() * nf * ng))
}

/// `(||f||, ||f||^0, r_p)`; the norms satisfy `||f|| <= ||f||^0 <= r_p ||f||`.
pub fn norm_equivalence_check(f: &GridFunction, p: &ExponentField) -> Result<(f64, f64, f64)> {
    let lux = luxemburg_norm(f, p)?.value;
    let orl = orlicz_norm(f, p)?.value;
    Ok((lux, orl, p.r_const()))
}
