//! Unconstrained smooth minimization: BFGS with a backtracking line search.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsConfig {
    pub max_iter: usize,
    /// Stop once `|f_k - f_{k+1}| <= rel_tol * max(|f_k|, 1)` twice in a row.
    pub rel_tol: f64,
    pub grad_tol: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            rel_tol: 1e-10,
            grad_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn bfgs<F>(mut f: F, x0: &[f64], cfg: &BfgsConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    if n == 0 {
        return Ok(Minimum {
            x,
            value: fx,
            iterations: 0,
            converged: true,
        });
    }
    // inverse Hessian approximation, row-major
    let mut h = vec![0.0; n * n];
    let reset = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    reset(&mut h);
    let mut small_steps = 0;
    for iter in 0..cfg.max_iter {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= cfg.grad_tol {
            return Ok(Minimum {
                x,
                value: fx,
                iterations: iter,
                converged: true,
            });
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            reset(&mut h);
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            match f(&trial) {
                Ok((ft, gt)) if ft.is_finite() && ft <= fx + 1e-4 * t * slope => {
                    break Some((trial, ft, gt))
                }
                _ => {}
            }
            t *= 0.5;
            if t < 1e-20 {
                break None;
            }
        };
        let Some((xn, fn_, gn)) = accepted else {
            return Ok(Minimum {
                x,
                value: fx,
                iterations: iter,
                converged: gnorm <= 1e-6,
            });
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            let c = (1.0 + rho * yhy) * rho;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        let change = (fx - fn_).abs();
        x = xn;
        g = gn;
        let scale = fx.abs().max(1.0);
        fx = fn_;
        if change <= cfg.rel_tol * scale {
            small_steps += 1;
            if small_steps >= 2 {
                return Ok(Minimum {
                    x,
                    value: fx,
                    iterations: iter + 1,
                    converged: true,
                });
            }
        } else {
            small_steps = 0;
        }
    }
    Ok(Minimum {
        x,
        value: fx,
        iterations: cfg.max_iter,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            Ok((
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
                vec![
                    -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                    200.0 * (b - a * a),
                ],
            ))
        };
        let m = bfgs(f, &[-1.2, 1.0], &BfgsConfig::default()).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn convex_quadratic() {
        let f = |x: &[f64]| {
            let v = x
                .iter()
                .enumerate()
                .map(|(i, a)| (i + 1) as f64 * (a - 1.0).powi(2))
                .sum();
            let g = x
                .iter()
                .enumerate()
                .map(|(i, a)| 2.0 * (i + 1) as f64 * (a - 1.0))
                .collect();
            Ok((v, g))
        };
        let m = bfgs(f, &[0.0; 6], &BfgsConfig::default()).unwrap();
        assert!(m.value < 1e-12);
    }
}
