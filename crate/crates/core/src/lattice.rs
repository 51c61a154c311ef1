//! Banach lattices on a finite atomic measure space: lattice norms, Köthe
//! duals, Calderón products, Lozanovskii factorization and operator norms.
//!
//! Norms are evaluated on coordinate vectors `f` with `f_i` the value on atom
//! `i` of measure `mu_i`; every norm depends on `|f|` only. Positive vectors
//! are optimized in log coordinates `f = exp(w)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::numeric::{compensated_sum, conjugate_exponent, le_with_slack};
use crate::optim::{bfgs, BfgsConfig};
use crate::varlp::{lq_atoms, luxemburg_atoms, luxemburg_gradient, modular_atoms, orlicz_atoms};

/// Finitely many atoms with positive measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicSpace {
    mu: Vec<f64>,
}

impl AtomicSpace {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::Empty("atomic space"));
        }
        if let Some(i) = mu.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "atom {i} has non-positive measure {}",
                mu[i]
            )));
        }
        Ok(Self { mu })
    }

    pub fn uniform(m: usize, measure: f64) -> Result<Self> {
        Self::new(vec![measure; m])
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `sum mu_i |f_i g_i|`.
    pub fn abs_pairing(&self, f: &[f64], g: &[f64]) -> f64 {
        compensated_sum(
            self.mu
                .iter()
                .zip(f)
                .zip(g)
                .map(|((m, a), b)| m * (a * b).abs()),
        )
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        if let Some(index) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(())
    }
}

/// How a computed value relates to the true one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    Exact,
    /// Attained by an explicit candidate of a supremum.
    Lower,
    /// Attained by an explicit candidate of an infimum.
    Upper,
    /// Combination of bounds in opposite directions.
    Estimate,
}

impl Bound {
    fn combine(self, other: Bound) -> Bound {
        use Bound::*;
        match (self, other) {
            (Exact, b) | (b, Exact) => b,
            (a, b) if a == b => a,
            _ => Estimate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub bound: Bound,
}

impl NormEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            bound: Bound::Exact,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.bound == Bound::Exact
    }
}

/// Budget of the randomized searches behind generic norms and operator norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Restarts for convex problems (Calderón products, factorizations).
    pub convex_restarts: usize,
    pub seed: u64,
    pub bfgs: BfgsConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            convex_restarts: 4,
            seed: 0x5eed,
            bfgs: BfgsConfig::default(),
        }
    }
}

/// A lattice norm on an [`AtomicSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LatticeNorm {
    /// `L^q(mu)`, `q` in `[1, inf]`.
    ClassicLq {
        q: f64,
    },
    /// `L^{p(.)}(mu)` with the Luxemburg–Nakano norm, one exponent per atom.
    VariableLp {
        p: Vec<f64>,
    },
    KotheDual(Box<LatticeNorm>),
    CalderonProduct {
        x0: Box<LatticeNorm>,
        x1: Box<LatticeNorm>,
        theta: f64,
    },
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl LatticeNorm {
    pub fn classic(q: f64) -> Self {
        Self::ClassicLq { q }
    }

    pub fn variable(p: Vec<f64>) -> Self {
        Self::VariableLp { p }
    }

    pub fn dual(x: LatticeNorm) -> Self {
        Self::KotheDual(Box::new(x))
    }

    pub fn calderon(x0: LatticeNorm, x1: LatticeNorm, theta: f64) -> Self {
        Self::CalderonProduct {
            x0: Box::new(x0),
            x1: Box::new(x1),
            theta,
        }
    }

    pub fn validate(&self, space: &AtomicSpace) -> Result<()> {
        match self {
            Self::ClassicLq { q } => {
                if *q >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::OutOfRange {
                        name: "q",
                        value: *q,
                        range: "[1, inf]",
                    })
                }
            }
            Self::VariableLp { p } => {
                space.check(p)?;
                let (lo, hi) = p
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
                if lo > 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidExponent {
                        p_minus: lo,
                        p_plus: hi,
                    })
                }
            }
            Self::KotheDual(x) => x.validate(space),
            Self::CalderonProduct { x0, x1, theta } => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return Err(Error::OutOfRange {
                        name: "theta",
                        value: *theta,
                        range: "(0, 1)",
                    });
                }
                x0.validate(space)?;
                x1.validate(space)
            }
        }
    }

    /// Whether [`LatticeNorm::norm`] is evaluated in closed form or by a
    /// convergent one-dimensional solve.
    pub fn is_analytic(&self) -> bool {
        match self {
            Self::ClassicLq { .. } | Self::VariableLp { .. } => true,
            Self::KotheDual(x) => matches!(**x, Self::ClassicLq { .. } | Self::VariableLp { .. }),
            Self::CalderonProduct { .. } => false,
        }
    }

    /// An isometrically equal norm with a closed form, when one is known:
    /// `(L^q)' = L^{q'}`, `X'' = X`, `X^{1-theta} X^theta = X`,
    /// `(L^{q0})^{1-theta} (L^{q1})^theta = L^{q_theta}` and
    /// `X^{1/2} (X')^{1/2} = L^2`.
    pub fn simplify(&self) -> LatticeNorm {
        match self {
            Self::KotheDual(x) => match x.simplify() {
                Self::ClassicLq { q } => Self::ClassicLq {
                    q: conjugate_exponent(q),
                },
                Self::KotheDual(inner) => *inner,
                other => Self::KotheDual(Box::new(other)),
            },
            Self::CalderonProduct { x0, x1, theta } => {
                let (a, b) = (x0.simplify(), x1.simplify());
                if a == b {
                    return a;
                }
                if let (Self::ClassicLq { q: q0 }, Self::ClassicLq { q: q1 }) = (&a, &b) {
                    let inv = (1.0 - theta) / q0 + theta / q1;
                    return Self::ClassicLq { q: 1.0 / inv };
                }
                let dual_pair = |u: &LatticeNorm, v: &LatticeNorm| matches!(v, Self::KotheDual(inner) if **inner == *u);
                if *theta == 0.5 && (dual_pair(&a, &b) || dual_pair(&b, &a)) {
                    return Self::ClassicLq { q: 2.0 };
                }
                Self::calderon(a, b, *theta)
            }
            other => other.clone(),
        }
    }

    pub fn norm(&self, space: &AtomicSpace, f: &[f64]) -> Result<NormEstimate> {
        Ok(self.norm_and_gradient(space, f)?.0)
    }

    /// The norm and its gradient with respect to `f` (a supergradient
    /// selection where the norm is not differentiable).
    pub fn norm_and_gradient(
        &self,
        space: &AtomicSpace,
        f: &[f64],
    ) -> Result<(NormEstimate, Vec<f64>)> {
        self.norm_and_gradient_with(space, f, &SearchConfig::default())
    }

    pub fn norm_and_gradient_with(
        &self,
        space: &AtomicSpace,
        f: &[f64],
        cfg: &SearchConfig,
    ) -> Result<(NormEstimate, Vec<f64>)> {
        space.check(f)?;
        let mu = space.mu();
        match self {
            Self::ClassicLq { q } => Ok(classic_norm_and_gradient(*q, mu, f)),
            Self::VariableLp { p } => {
                self.validate(space)?;
                let n = luxemburg_atoms(f, p, mu)?.value;
                let g = luxemburg_gradient(f, p, mu, n)
                    .into_iter()
                    .zip(f)
                    .map(|(g, &v)| g * sign(v))
                    .collect();
                Ok((NormEstimate::exact(n), g))
            }
            Self::KotheDual(x) => match &**x {
                Self::ClassicLq { q } => {
                    Ok(classic_norm_and_gradient(conjugate_exponent(*q), mu, f))
                }
                Self::VariableLp { p } => {
                    x.validate(space)?;
                    let conj: Vec<f64> = p.iter().map(|&v| conjugate_exponent(v)).collect();
                    let (res, g) = orlicz_atoms(f, &conj, mu)?;
                    let grad = g
                        .iter()
                        .zip(mu)
                        .zip(f)
                        .map(|((g, m), &v)| m * g.abs() * sign(v))
                        .collect();
                    Ok((NormEstimate::exact(res.value), grad))
                }
                inner => {
                    let r = kothe_dual_generic(inner, space, f, cfg)?;
                    let grad = r
                        .maximizer
                        .iter()
                        .zip(mu)
                        .zip(f)
                        .map(|((u, m), &v)| m * u * sign(v))
                        .collect();
                    Ok((r.estimate, grad))
                }
            },
            Self::CalderonProduct { x0, x1, theta } => {
                let r = calderon_generic(x0, x1, *theta, space, f, cfg)?;
                let grad = r
                    .gradient
                    .iter()
                    .zip(f)
                    .map(|(g, &v)| g * sign(v))
                    .collect();
                Ok((r.estimate, grad))
            }
        }
    }
}

fn classic_norm_and_gradient(q: f64, mu: &[f64], f: &[f64]) -> (NormEstimate, Vec<f64>) {
    let m = f.len();
    if q.is_infinite() {
        let (k, v) =
            f.iter().enumerate().fold(
                (0, 0.0f64),
                |(k, v), (i, x)| if x.abs() > v { (i, x.abs()) } else { (k, v) },
            );
        let mut g = vec![0.0; m];
        if v > 0.0 {
            g[k] = sign(f[k]);
        }
        return (NormEstimate::exact(v), g);
    }
    let n = lq_atoms(f, q, mu);
    if n == 0.0 {
        return (NormEstimate::exact(0.0), vec![0.0; m]);
    }
    let g = f
        .iter()
        .zip(mu)
        .map(|(&v, &w)| w * (v.abs() / n).powf(q - 1.0) * sign(v))
        .collect();
    (NormEstimate::exact(n), g)
}

fn support(f: &[f64]) -> Vec<usize> {
    (0..f.len()).filter(|&i| f[i] != 0.0).collect()
}

fn embed(len: usize, idx: &[usize], vals: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (&i, v) in idx.iter().zip(vals) {
        out[i] = v;
    }
    out
}

fn random_start(base: &[f64], restart: usize, seed: u64) -> Vec<f64> {
    if restart == 0 {
        return base.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
    base.iter().map(|b| b + rng.gen_range(-2.0..2.0)).collect()
}

/// Result of the generic Köthe dual ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSearch {
    pub estimate: NormEstimate,
    /// Best `f >= 0` found, normalized to `||f||_X = 1`.
    pub maximizer: Vec<f64>,
}

/// `sup { sum mu |f g| : ||f||_X <= 1 }` by ascent of
/// `ln sum mu |g| e^w - ln ||e^w||_X` over the support of `g`, with restarts.
/// A linear functional has no spurious local maxima on a convex set, and the
/// log map is a diffeomorphism of the open orthant, so each ascent approaches
/// the supremum; the result is still reported as a lower bound.
pub fn kothe_dual_generic(
    x: &LatticeNorm,
    space: &AtomicSpace,
    g: &[f64],
    cfg: &SearchConfig,
) -> Result<DualSearch> {
    space.check(g)?;
    let m = space.len();
    let idx = support(g);
    if idx.is_empty() {
        return Ok(DualSearch {
            estimate: NormEstimate::exact(0.0),
            maximizer: vec![0.0; m],
        });
    }
    let mu = space.mu();
    let weights: Vec<f64> = idx.iter().map(|&i| mu[i] * g[i].abs()).collect();
    let objective = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
        let shift = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|v| (v - shift).exp()).collect();
        let pairing: f64 = weights.iter().zip(&e).map(|(a, b)| a * b).sum();
        let full = embed(m, &idx, e.iter().copied());
        let (n, grad) = x.norm_and_gradient_with(space, &full, cfg)?;
        let value = -(pairing.ln() - n.value.ln());
        let gr = idx
            .iter()
            .enumerate()
            .map(|(k, &i)| -(weights[k] * e[k] / pairing - grad[i] * e[k] / n.value))
            .collect();
        Ok((value, gr))
    };
    let base = vec![0.0; idx.len()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..cfg.restarts.max(1) {
        let start = random_start(&base, r, cfg.seed);
        let res = bfgs(objective, &start, &cfg.bfgs)?;
        if best.as_ref().is_none_or(|(v, _)| res.value < *v) {
            best = Some((res.value, res.x));
        }
    }
    let (_, w) = best.expect("at least one restart");
    let shift = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f = embed(m, &idx, w.iter().map(|v| (v - shift).exp()));
    let n = x.norm_and_gradient_with(space, &f, cfg)?.0.value;
    let maximizer: Vec<f64> = f.iter().map(|v| v / n).collect();
    let value = space.abs_pairing(&maximizer, g);
    Ok(DualSearch {
        estimate: NormEstimate {
            value,
            bound: Bound::Lower,
        },
        maximizer,
    })
}

/// `||g||_{X'}`: closed form for classic and variable exponent norms, the
/// generic ascent otherwise.
pub fn kothe_dual_norm(x: &LatticeNorm, space: &AtomicSpace, g: &[f64]) -> Result<NormEstimate> {
    LatticeNorm::dual(x.clone()).norm(space, g)
}

/// Result of a Calderón product evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CalderonResult {
    pub estimate: NormEstimate,
    /// Optimal `f_0` with `||f_0||_{X0} = 1`.
    pub f0: Vec<f64>,
    /// Matching `f_1` with `|f| = lambda f_0^{1-theta} f_1^theta`.
    pub f1: Vec<f64>,
    /// Gradient of the norm with respect to `|f|`.
    pub gradient: Vec<f64>,
}

/// `||f||` in `X0^{1-theta} X1^theta`: the minimum over `f_0 = e^w` of
/// `||e^w||_{X0}^{1-theta} ||(|f| e^{(theta-1) w})^{1/theta}||_{X1}^theta`,
/// a convex function of `w`. Atoms where `f = 0` are excluded.
pub fn calderon_generic(
    x0: &LatticeNorm,
    x1: &LatticeNorm,
    theta: f64,
    space: &AtomicSpace,
    f: &[f64],
    cfg: &SearchConfig,
) -> Result<CalderonResult> {
    space.check(f)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            range: "(0, 1)",
        });
    }
    let m = space.len();
    let idx = support(f);
    if idx.is_empty() {
        return Ok(CalderonResult {
            estimate: NormEstimate::exact(0.0),
            f0: vec![0.0; m],
            f1: vec![0.0; m],
            gradient: vec![0.0; m],
        });
    }
    let log_f: Vec<f64> = idx.iter().map(|&i| f[i].abs().ln()).collect();
    let slope = (theta - 1.0) / theta;
    let parts = |w: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let e = embed(m, &idx, w.iter().map(|v| v.exp()));
        let v = embed(
            m,
            &idx,
            w.iter()
                .zip(&log_f)
                .map(|(wi, lf)| (lf / theta + slope * wi).exp()),
        );
        Ok((e, v))
    };
    let objective = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (e, v) = parts(w)?;
        let (n0, g0) = x0.norm_and_gradient_with(space, &e, cfg)?;
        let (n1, g1) = x1.norm_and_gradient_with(space, &v, cfg)?;
        let value = (1.0 - theta) * n0.value.ln() + theta * n1.value.ln();
        let grad = idx
            .iter()
            .map(|&i| (1.0 - theta) * (g0[i] * e[i] / n0.value - g1[i] * v[i] / n1.value))
            .collect();
        Ok((value, grad))
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..cfg.convex_restarts.max(1) {
        let start = random_start(&log_f, r, cfg.seed);
        let res = bfgs(objective, &start, &cfg.bfgs)?;
        if best.as_ref().is_none_or(|(v, _)| res.value < *v) {
            best = Some((res.value, res.x));
        }
    }
    let (_, w) = best.expect("at least one restart");
    let (e, v) = parts(&w)?;
    let (n0, _) = x0.norm_and_gradient_with(space, &e, cfg)?;
    let (n1, g1) = x1.norm_and_gradient_with(space, &v, cfg)?;
    let value = n0.value.powf(1.0 - theta) * n1.value.powf(theta);
    let f0: Vec<f64> = e.iter().map(|x| x / n0.value).collect();
    let f1: Vec<f64> = v.iter().map(|x| x / n1.value).collect();
    let gradient = (0..m)
        .map(|i| {
            if f[i] == 0.0 {
                0.0
            } else {
                value * g1[i] * v[i] / (f[i].abs() * n1.value)
            }
        })
        .collect();
    Ok(CalderonResult {
        estimate: NormEstimate {
            value,
            bound: Bound::Upper,
        },
        f0,
        f1,
        gradient,
    })
}

/// `||f||_{X0^{1-theta} X1^theta}` by the generic minimization.
pub fn calderon_product_norm(
    x0: &LatticeNorm,
    x1: &LatticeNorm,
    theta: f64,
    space: &AtomicSpace,
    f: &[f64],
) -> Result<CalderonResult> {
    calderon_generic(x0, x1, theta, space, f, &SearchConfig::default())
}

/// A splitting `h = u v` with `||u||_X` and `||v||_{X'}` close to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResult {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `||u||_X - 1`.
    pub u_residual: f64,
    /// `||v||_{X'} - 1`.
    pub v_residual: f64,
    /// `max |u_i v_i - h_i|`.
    pub product_residual: f64,
}

fn check_density(space: &AtomicSpace, h: &[f64]) -> Result<()> {
    space.check(h)?;
    if h.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter(
            "density must be non-negative".into(),
        ));
    }
    let total = compensated_sum(h.iter().zip(space.mu()).map(|(a, b)| a * b));
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "density has integral {total}, not 1"
        )));
    }
    Ok(())
}

/// Lozanovskii factorization of a density `h >= 0` with `sum mu h = 1`.
///
/// Classic `L^q`: `u = h^{1/q}`, `v = h^{1/q'}`. Variable exponent: with
/// `nu = sum mu h / p`, `u_i = (h_i / (nu p_i))^{1/p_i}` and `v = h / u`; then
/// `m(u, p) = 1` and `u` is the maximizer of the pairing with `v` over the unit
/// ball of `X`, so `||v||_{X'} = sum mu u v = 1`. Other norms: minimization
/// of `ln ||e^w||_X + ln ||h e^{-w}||_{X'}`. Atoms with `h_i = 0` get
/// `u_i = v_i = 0`.
pub fn lozanovskii_factorize(
    x: &LatticeNorm,
    space: &AtomicSpace,
    h: &[f64],
) -> Result<FactorizationResult> {
    lozanovskii_factorize_with(x, space, h, &SearchConfig::default())
}

pub fn lozanovskii_factorize_with(
    x: &LatticeNorm,
    space: &AtomicSpace,
    h: &[f64],
    cfg: &SearchConfig,
) -> Result<FactorizationResult> {
    check_density(space, h)?;
    x.validate(space)?;
    let (u, v) = match x {
        LatticeNorm::ClassicLq { q } => {
            let q = *q;
            let u: Vec<f64> = h
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        0.0
                    } else if q.is_infinite() {
                        1.0
                    } else {
                        t.powf(1.0 / q)
                    }
                })
                .collect();
            let v = h
                .iter()
                .zip(&u)
                .map(|(&t, &a)| if t == 0.0 { 0.0 } else { t / a })
                .collect();
            (u, v)
        }
        LatticeNorm::VariableLp { p } => {
            let nu = compensated_sum(
                h.iter()
                    .zip(p)
                    .zip(space.mu())
                    .map(|((t, pi), m)| m * t / pi),
            );
            let u: Vec<f64> = h
                .iter()
                .zip(p)
                .map(|(&t, &pi)| {
                    if t == 0.0 {
                        0.0
                    } else {
                        (t / (nu * pi)).powf(1.0 / pi)
                    }
                })
                .collect();
            let v = h
                .iter()
                .zip(&u)
                .map(|(&t, &a)| if t == 0.0 { 0.0 } else { t / a })
                .collect();
            (u, v)
        }
        other => factorize_generic(other, space, h, cfg)?,
    };
    let dual = LatticeNorm::dual(x.clone());
    let nu = x.norm_and_gradient_with(space, &u, cfg)?.0.value;
    let nv = dual.norm_and_gradient_with(space, &v, cfg)?.0.value;
    let product_residual = u
        .iter()
        .zip(&v)
        .zip(h)
        .map(|((a, b), t)| (a * b - t).abs())
        .fold(0.0, f64::max);
    Ok(FactorizationResult {
        u,
        v,
        u_residual: nu - 1.0,
        v_residual: nv - 1.0,
        product_residual,
    })
}

fn factorize_generic(
    x: &LatticeNorm,
    space: &AtomicSpace,
    h: &[f64],
    cfg: &SearchConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = space.len();
    let idx = support(h);
    let log_h: Vec<f64> = idx.iter().map(|&i| h[i].ln()).collect();
    let dual = LatticeNorm::dual(x.clone());
    let objective = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
        let e = embed(m, &idx, w.iter().map(|v| v.exp()));
        let r = embed(
            m,
            &idx,
            w.iter().zip(&log_h).map(|(wi, lh)| (lh - wi).exp()),
        );
        let (nu, gu) = x.norm_and_gradient_with(space, &e, cfg)?;
        let (nv, gv) = dual.norm_and_gradient_with(space, &r, cfg)?;
        let value = nu.value.ln() + nv.value.ln();
        let grad = idx
            .iter()
            .map(|&i| gu[i] * e[i] / nu.value - gv[i] * r[i] / nv.value)
            .collect();
        Ok((value, grad))
    };
    let base: Vec<f64> = log_h.iter().map(|l| 0.5 * l).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..cfg.convex_restarts.max(1) {
        let res = bfgs(objective, &random_start(&base, r, cfg.seed), &cfg.bfgs)?;
        if best.as_ref().is_none_or(|(v, _)| res.value < *v) {
            best = Some((res.value, res.x));
        }
    }
    let (_, w) = best.expect("at least one restart");
    let e = embed(m, &idx, w.iter().map(|v| v.exp()));
    let n = x.norm_and_gradient_with(space, &e, cfg)?.0.value;
    let u: Vec<f64> = e.iter().map(|v| v / n).collect();
    let v = h
        .iter()
        .zip(&u)
        .map(|(&t, &a)| if t == 0.0 { 0.0 } else { t / a })
        .collect();
    Ok((u, v))
}

/// The modular splitting `u = h^{1/p}`, `v = h^{1/p'}`: both modulars equal
/// `sum mu h = 1`, so both Luxemburg norms are one, but `||v||_{X'}` is the
/// dual-pairing norm of `v` and may exceed one (up to `r_p`).
pub fn modular_split(
    p: &[f64],
    space: &AtomicSpace,
    h: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
    check_density(space, h)?;
    space.check(p)?;
    let u: Vec<f64> = h.iter().zip(p).map(|(&t, &pi)| t.powf(1.0 / pi)).collect();
    let v: Vec<f64> = h
        .iter()
        .zip(p)
        .map(|(&t, &pi)| t.powf(1.0 - 1.0 / pi))
        .collect();
    let conj: Vec<f64> = p.iter().map(|&x| conjugate_exponent(x)).collect();
    let mu_ = modular_atoms(&u, p, space.mu());
    let mv = modular_atoms(&v, &conj, space.mu());
    Ok((u, v, mu_, mv))
}

/// A linear operator on the coordinate vectors of an atomic space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Operator {
    Dense(DenseMatrix),
    Diagonal(Vec<f64>),
    /// `f -> u (sum_j v_j f_j)`, the matrix `u v^T`.
    RankOne {
        u: Vec<f64>,
        v: Vec<f64>,
    },
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(a) => a.cols(),
            Self::Diagonal(d) => d.len(),
            Self::RankOne { v, .. } => v.len(),
        }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense(a) => a.matvec(f),
            Self::Diagonal(d) => d.iter().zip(f).map(|(a, b)| a * b).collect(),
            Self::RankOne { u, v } => {
                let s: f64 = v.iter().zip(f).map(|(a, b)| a * b).sum();
                u.iter().map(|a| a * s).collect()
            }
        }
    }

    /// `A^T y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense(a) => a.tmatvec(y),
            Self::Diagonal(d) => d.iter().zip(y).map(|(a, b)| a * b).collect(),
            Self::RankOne { u, v } => {
                let s: f64 = u.iter().zip(y).map(|(a, b)| a * b).sum();
                v.iter().map(|a| a * s).collect()
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Self::Dense(a) => a.clone(),
            Self::Diagonal(d) => DenseMatrix::diagonal(d),
            Self::RankOne { u, v } => DenseMatrix::outer(u, v),
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        match self {
            Self::Diagonal(d) => Some(d.clone()),
            Self::Dense(a) => a.as_diagonal(),
            Self::RankOne { .. } => None,
        }
    }
}

/// `||A||_{B(X)}` with its exactness: diagonal operators (any lattice norm),
/// rank-one operators with analytic norms, `L^1`, `L^2` and `L^inf` are
/// exact; everything else is a lower bound from power iteration.
pub fn operator_norm(a: &Operator, x: &LatticeNorm, space: &AtomicSpace) -> Result<NormEstimate> {
    operator_norm_with(a, x, space, &SearchConfig::default(), &[])
}

/// [`operator_norm`] with an explicit budget and extra starting vectors for
/// the power iteration.
pub fn operator_norm_with(
    a: &Operator,
    x: &LatticeNorm,
    space: &AtomicSpace,
    cfg: &SearchConfig,
    starts: &[Vec<f64>],
) -> Result<NormEstimate> {
    let m = space.len();
    if a.dim() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            found: a.dim(),
        });
    }
    x.validate(space)?;
    if let Some(d) = a.diagonal() {
        return Ok(NormEstimate::exact(
            d.iter().fold(0.0, |s, v| s.max(v.abs())),
        ));
    }
    if let Operator::RankOne { u, v } = a {
        let nu = x.norm_and_gradient_with(space, u, cfg)?.0;
        let density: Vec<f64> = v.iter().zip(space.mu()).map(|(a, b)| a / b).collect();
        let nv = LatticeNorm::dual(x.clone())
            .norm_and_gradient_with(space, &density, cfg)?
            .0;
        return Ok(NormEstimate {
            value: nu.value * nv.value,
            bound: nu.bound.combine(nv.bound),
        });
    }
    let mu = space.mu();
    if let LatticeNorm::ClassicLq { q } = x.simplify() {
        let dense = a.to_dense();
        if q == 2.0 {
            return Ok(NormEstimate::exact(dense.weighted_spectral_norm(mu)));
        }
        if q == 1.0 {
            let v = (0..m)
                .map(|j| (0..m).map(|i| mu[i] * dense.get(i, j).abs()).sum::<f64>() / mu[j])
                .fold(0.0, f64::max);
            return Ok(NormEstimate::exact(v));
        }
        if q.is_infinite() {
            let v = (0..m)
                .map(|i| dense.row(i).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            return Ok(NormEstimate::exact(v));
        }
    }
    let best = power_iteration(a, x, space, cfg, starts)?;
    Ok(NormEstimate {
        value: best.0,
        bound: Bound::Lower,
    })
}

/// Nonlinear power iteration for `sup ||A f||_X / ||f||_X`: with `g` the
/// norming functional of `A f` in `X'` and `z = A^* g`, the next iterate is
/// the unit vector of `X` norming `z`. Each step does not decrease the ratio.
/// Returns the best ratio and its vector over all starts.
pub fn power_iteration(
    a: &Operator,
    x: &LatticeNorm,
    space: &AtomicSpace,
    cfg: &SearchConfig,
    starts: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    let m = space.len();
    let mu = space.mu();
    let dual = LatticeNorm::dual(x.clone());
    let mut candidates: Vec<Vec<f64>> = starts.to_vec();
    candidates.push(vec![1.0; m]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 1..cfg.restarts.max(1) {
        candidates.push((0..m).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let mut best = (0.0f64, vec![0.0; m]);
    for start in candidates {
        let n0 = x.norm_and_gradient_with(space, &start, cfg)?.0.value;
        if n0 == 0.0 {
            continue;
        }
        let mut f: Vec<f64> = start.iter().map(|v| v / n0).collect();
        let mut value = 0.0f64;
        for _ in 0..cfg.bfgs.max_iter {
            let y = a.apply(&f);
            let (ny, gy) = x.norm_and_gradient_with(space, &y, cfg)?;
            if ny.value == 0.0 {
                break;
            }
            let change = ny.value - value;
            value = value.max(ny.value);
            if value > best.0 {
                best = (value, f.clone());
            }
            if change.abs() <= cfg.bfgs.rel_tol * value {
                break;
            }
            // gy is the norming functional's density times mu
            let z: Vec<f64> = a
                .apply_transpose(&gy)
                .iter()
                .zip(mu)
                .map(|(v, w)| v / w)
                .collect();
            let (_, gz) = dual.norm_and_gradient_with(space, &z, cfg)?;
            let next: Vec<f64> = gz.iter().zip(mu).map(|(v, w)| v / w).collect();
            let nn = x.norm_and_gradient_with(space, &next, cfg)?.0.value;
            if nn == 0.0 || !nn.is_finite() {
                break;
            }
            f = next.iter().map(|v| v / nn).collect();
        }
    }
    Ok(best)
}

/// Outcome of an interpolation inequality evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub lhs: NormEstimate,
    pub rhs: f64,
    /// Whether every factor of `rhs` is exact.
    pub rhs_exact: bool,
    pub ratio: f64,
    /// `Some` only when the inequality can be decided soundly.
    pub holds: Option<bool>,
}

fn decide(lhs: NormEstimate, rhs: f64, rhs_exact: bool) -> InterpolationReport {
    let sound = rhs_exact && matches!(lhs.bound, Bound::Exact | Bound::Lower);
    InterpolationReport {
        lhs,
        rhs,
        rhs_exact,
        ratio: if rhs > 0.0 { lhs.value / rhs } else { 0.0 },
        holds: sound.then(|| le_with_slack(lhs.value, rhs, 1e-8, 1e-300)),
    }
}

/// `||A||_{B(L^2)} <= 2 sqrt(r_p) ||A||_{B(L^{p(.)})}^{1/2} ||A||_{B(L^{p'(.)})}^{1/2}`.
pub fn interpolation_check(
    a: &Operator,
    p: &[f64],
    space: &AtomicSpace,
    cfg: &SearchConfig,
) -> Result<InterpolationReport> {
    let xp = LatticeNorm::variable(p.to_vec());
    xp.validate(space)?;
    let conj: Vec<f64> = p.iter().map(|&v| conjugate_exponent(v)).collect();
    let xq = LatticeNorm::variable(conj);
    let l2 = operator_norm_with(a, &LatticeNorm::classic(2.0), space, cfg, &[])?;
    let np = operator_norm_with(a, &xp, space, cfg, &[])?;
    let nq = operator_norm_with(a, &xq, space, cfg, &[])?;
    let (lo, hi) = p
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let r_p = 1.0 + (1.0 / lo - 1.0 / hi);
    let rhs = 2.0 * r_p.sqrt() * (np.value * nq.value).sqrt();
    Ok(decide(l2, rhs, np.is_exact() && nq.is_exact()))
}

/// `||A||_{B(X0^{1-theta} X1^theta)} <= 2 ||A||_{B(X0)}^{1-theta} ||A||_{B(X1)}^theta`,
/// with the product space replaced by its closed form when one is known.
pub fn calderon_interp_bound_check(
    a: &Operator,
    x0: &LatticeNorm,
    x1: &LatticeNorm,
    theta: f64,
    space: &AtomicSpace,
    cfg: &SearchConfig,
) -> Result<InterpolationReport> {
    let product = LatticeNorm::calderon(x0.clone(), x1.clone(), theta);
    product.validate(space)?;
    let lhs = operator_norm_with(a, &product.simplify(), space, cfg, &[])?;
    let n0 = operator_norm_with(a, x0, space, cfg, &[])?;
    let n1 = operator_norm_with(a, x1, space, cfg, &[])?;
    let rhs = 2.0 * n0.value.powf(1.0 - theta) * n1.value.powf(theta);
    Ok(decide(lhs, rhs, n0.is_exact() && n1.is_exact()))
}

/// Violation counts of the lattice norm axioms on random vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AxiomReport {
    pub monotonicity: usize,
    pub homogeneity: usize,
    pub triangle: usize,
}

impl AxiomReport {
    pub fn total(&self) -> usize {
        self.monotonicity + self.homogeneity + self.triangle
    }
}

/// Spot-checks monotonicity, homogeneity and the triangle inequality with
/// relative tolerance `tol` on `samples` random vectors.
pub fn check_axioms(
    x: &LatticeNorm,
    space: &AtomicSpace,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<AxiomReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = space.len();
    let mut report = AxiomReport::default();
    let n = |v: &[f64]| x.norm(space, v).map(|e| e.value);
    for _ in 0..samples {
        let f: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let shrink: Vec<f64> = f.iter().map(|v| v * rng.gen_range(-1.0..1.0)).collect();
        let c: f64 = rng.gen_range(-5.0..5.0);
        let (nf, ng) = (n(&f)?, n(&g)?);
        if !le_with_slack(n(&shrink)?, nf, tol, 0.0) {
            report.monotonicity += 1;
        }
        let scaled: Vec<f64> = f.iter().map(|v| c * v).collect();
        if (n(&scaled)? - c.abs() * nf).abs() > tol * c.abs().max(1.0) * nf {
            report.homogeneity += 1;
        }
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        if !le_with_slack(n(&sum)?, nf + ng, tol, 0.0) {
            report.triangle += 1;
        }
    }
    Ok(report)
}
