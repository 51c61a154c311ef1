//! Discretized Calderón–Zygmund operators `Tf = p.v. K * f` with homogeneous
//! kernels `K(z) = Omega(z/|z|) / |z|^n`, their truncations, the maximal
//! truncation and commutators `[b, T] f = b T(f) - T(b f)`.
//!
//! Operators act by midpoint quadrature: `(T_eps f)_i = sum_{|x_i - x_j| > eps} w(i - j) f_j`
//! with stencil weights `w(d) = K(d h) mu`. Odd kernels are evaluated through a
//! canonical representative of `{z, -z}`, so `w(-d) = -w(d)` holds exactly and
//! the assembled operator is exactly antisymmetric.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridBox, GridFunction};
use crate::linalg::DenseMatrix;

/// Normalization of the planar Riesz kernels, `Gamma(3/2) / pi^{3/2} = 1 / (2 pi)`.
pub const RIESZ_CONSTANT_2D: f64 = 0.5 / PI;

/// Largest grid that may be assembled densely in one dimension.
pub const ASSEMBLY_CAP_1D: usize = 2048;
/// Largest grid that may be assembled densely in two dimensions.
pub const ASSEMBLY_CAP_2D: usize = 64 * 64;

/// Angular profile `Omega` of a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// One dimension: the values at `+1` and `-1`.
    Line { pos: f64, neg: f64 },
    /// Two dimensions: `sum_k cos[k-1] cos(k theta) + sin[k-1] sin(k theta)`, `k >= 1`.
    Trig { cos: Vec<f64>, sin: Vec<f64> },
    /// Two dimensions: samples at angles `2 pi k / M`, linearly interpolated.
    Sampled(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    dim: usize,
    profile: Profile,
    /// `Omega` on the sphere: the two signed values in 1-D, uniformly spaced
    /// angle samples in 2-D.
    omega: Vec<f64>,
    odd: bool,
    mean_zero: bool,
    /// False for sampled profiles, whose smoothness is not known.
    smooth: bool,
}

const MEAN_TOL: f64 = 1e-12;

impl Kernel {
    /// Builds a kernel; `angle_samples` sets the sample count of `omega` in 2-D.
    pub fn new(profile: Profile, angle_samples: usize) -> Result<Self> {
        let (dim, odd, smooth) = match &profile {
            Profile::Line { pos, neg } => {
                if !pos.is_finite() || !neg.is_finite() {
                    return Err(Error::InvalidKernel("non-finite profile".into()));
                }
                (1, *neg == -*pos, true)
            }
            Profile::Trig { cos, sin } => {
                if cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return Err(Error::InvalidKernel("non-finite profile".into()));
                }
                let even_modes_vanish =
                    |c: &Vec<f64>| c.iter().skip(1).step_by(2).all(|&x| x == 0.0);
                (2, even_modes_vanish(cos) && even_modes_vanish(sin), true)
            }
            Profile::Sampled(s) => {
                if s.len() < 2 || s.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidKernel(
                        "need at least two finite samples".into(),
                    ));
                }
                let m = s.len();
                let odd = m % 2 == 0 && (0..m / 2).all(|k| s[k + m / 2] == -s[k]);
                (2, odd, false)
            }
        };
        if dim == 2 && angle_samples < 2 {
            return Err(Error::InvalidKernel(
                "need at least two angle samples".into(),
            ));
        }
        let mut k = Self {
            dim,
            profile,
            omega: Vec::new(),
            odd,
            mean_zero: false,
            smooth,
        };
        k.omega = if dim == 1 {
            vec![k.eval(&[1.0, 0.0]), k.eval(&[-1.0, 0.0])]
        } else if let Profile::Sampled(s) = &k.profile {
            s.clone()
        } else {
            (0..angle_samples)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / angle_samples as f64;
                    k.omega_at([t.cos(), t.sin()])
                })
                .collect()
        };
        let scale = k.omega.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mean = k.omega.iter().sum::<f64>() / k.omega.len() as f64;
        k.mean_zero = mean.abs() <= MEAN_TOL * scale;
        if !k.mean_zero {
            return Err(Error::InvalidKernel(format!(
                "Omega has mean {mean}, not zero"
            )));
        }
        Ok(k)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn smoothness_verified(&self) -> bool {
        self.smooth
    }

    /// `Omega` at a unit vector.
    fn omega_at(&self, u: [f64; 2]) -> f64 {
        match &self.profile {
            Profile::Line { pos, neg } => {
                if u[0] > 0.0 {
                    *pos
                } else {
                    *neg
                }
            }
            Profile::Trig { cos, sin } => {
                let modes = cos.len().max(sin.len());
                let (mut re, mut im) = (1.0, 0.0);
                let mut acc = 0.0;
                for k in 0..modes {
                    (re, im) = (re * u[0] - im * u[1], re * u[1] + im * u[0]);
                    acc += cos.get(k).copied().unwrap_or(0.0) * re
                        + sin.get(k).copied().unwrap_or(0.0) * im;
                }
                acc
            }
            Profile::Sampled(s) => {
                let m = s.len();
                let t = u[1].atan2(u[0]).rem_euclid(2.0 * PI) / (2.0 * PI) * m as f64;
                let i = (t.floor() as usize) % m;
                let frac = t - t.floor();
                s[i] * (1.0 - frac) + s[(i + 1) % m] * frac
            }
        }
    }

    /// `K(z) = Omega(z / |z|) / |z|^n` for `z != 0`.
    pub fn eval(&self, z: &[f64; 2]) -> f64 {
        if self.odd {
            let canonical = z[0] > 0.0 || (z[0] == 0.0 && z[1] > 0.0);
            if !canonical {
                return -self.eval_raw(&[-z[0], -z[1]]);
            }
        }
        self.eval_raw(z)
    }

    fn eval_raw(&self, z: &[f64; 2]) -> f64 {
        if self.dim == 1 {
            let r = z[0].abs();
            self.omega_at([z[0].signum(), 0.0]) / r
        } else {
            let r = z[0].hypot(z[1]);
            self.omega_at([z[0] / r, z[1] / r]) / (r * r)
        }
    }
}

/// `K(x) = 1 / (pi x)`.
pub fn hilbert_kernel() -> Kernel {
    Kernel::new(
        Profile::Line {
            pos: 1.0 / PI,
            neg: -1.0 / PI,
        },
        2,
    )
    .expect("hilbert kernel is valid")
}

/// Planar Riesz kernel `K(z) = c z_j / |z|^3`, `j` in `{1, 2}`.
pub fn riesz_kernel(j: usize, angle_samples: usize) -> Result<Kernel> {
    let profile = match j {
        1 => Profile::Trig {
            cos: vec![RIESZ_CONSTANT_2D],
            sin: vec![],
        },
        2 => Profile::Trig {
            cos: vec![],
            sin: vec![RIESZ_CONSTANT_2D],
        },
        _ => {
            return Err(Error::InvalidKernel(format!(
                "riesz index {j} not in {{1, 2}}"
            )))
        }
    };
    Kernel::new(profile, angle_samples)
}

/// Stencil of weights `w(d) = K(d h) mu` over all offsets between cells,
/// indexed by `(d0 + n0 - 1) * (2 n1 - 1) + (d1 + n1 - 1)`; offsets with
/// `|d h| <= eps` carry weight zero.
struct Stencil {
    weights: Vec<f64>,
    dist: Vec<f64>,
    n: [usize; 2],
    span: [usize; 2],
}

impl Stencil {
    fn new(k: &Kernel, grid: &GridBox, eps: f64) -> Result<Self> {
        if k.dim() != grid.dim() {
            return Err(Error::Dimension(format!(
                "kernel of dimension {} on a grid of dimension {}",
                k.dim(),
                grid.dim()
            )));
        }
        let n = if grid.dim() == 2 {
            [grid.cells()[0], grid.cells()[1]]
        } else {
            [grid.cells()[0], 1]
        };
        let h = [
            grid.width(0),
            if grid.dim() == 2 { grid.width(1) } else { 0.0 },
        ];
        let span = [2 * n[0] - 1, 2 * n[1] - 1];
        let mu = grid.cell_measure();
        let mut weights = vec![0.0; span[0] * span[1]];
        let mut dist = vec![0.0; span[0] * span[1]];
        for a in 0..span[0] {
            for b in 0..span[1] {
                let z = [
                    (a as f64 - (n[0] - 1) as f64) * h[0],
                    (b as f64 - (n[1] - 1) as f64) * h[1],
                ];
                let r = z[0].hypot(z[1]);
                let idx = a * span[1] + b;
                dist[idx] = r;
                if r > eps && r > 0.0 {
                    weights[idx] = k.eval(&z) * mu;
                }
            }
        }
        Ok(Self {
            weights,
            dist,
            n,
            span,
        })
    }

    #[inline]
    fn index(&self, i: [usize; 2], j: [usize; 2]) -> usize {
        (i[0] + self.n[0] - 1 - j[0]) * self.span[1] + (i[1] + self.n[1] - 1 - j[1])
    }

    fn cell(&self, flat: usize) -> [usize; 2] {
        [flat / self.n[1], flat % self.n[1]]
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let len = self.n[0] * self.n[1];
        if self.n[1] == 1 {
            let n = self.n[0];
            return (0..n)
                .map(|i| {
                    let w = &self.weights[i..i + n];
                    w.iter().rev().zip(f).map(|(a, b)| a * b).sum()
                })
                .collect();
        }
        (0..len)
            .map(|i| {
                let ci = self.cell(i);
                let mut acc = 0.0;
                for (j, &fj) in f.iter().enumerate() {
                    acc += self.weights[self.index(ci, self.cell(j))] * fj;
                }
                acc
            })
            .collect()
    }
}

fn min_cell_width(grid: &GridBox) -> f64 {
    (0..grid.dim())
        .map(|a| grid.width(a))
        .fold(f64::INFINITY, f64::min)
}

/// `(T_eps f)(x_i) = sum_{|x_i - x_j| > eps} K(x_i - x_j) f(x_j) mu`.
pub fn apply_truncated(k: &Kernel, f: &GridFunction, eps: f64) -> Result<GridFunction> {
    if !(eps > 0.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, inf)",
        });
    }
    let st = Stencil::new(k, f.grid(), eps)?;
    GridFunction::new(f.grid().clone(), st.apply(f.values()))
}

/// Principal value: the truncation at half the smallest cell width, which
/// drops exactly the self-cell.
pub fn apply_pv(k: &Kernel, f: &GridFunction) -> Result<GridFunction> {
    apply_truncated(k, f, 0.5 * min_cell_width(f.grid()))
}

/// `T^* f(x) = sup_{eps > 0} |T_eps f(x)|` over the finitely many distinct
/// truncations: partial sums accumulated from the farthest cells inward.
pub fn maximal_truncated(k: &Kernel, f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid();
    let st = Stencil::new(k, grid, 0.5 * min_cell_width(grid))?;
    let pv = st.apply(f.values());
    let mut order: Vec<usize> = (0..st.weights.len())
        .filter(|&o| st.dist[o] > 0.0)
        .collect();
    order.sort_by(|&a, &b| st.dist[b].total_cmp(&st.dist[a]));
    let [n0, n1] = st.n;
    let out = (0..grid.len())
        .map(|i| {
            let [i0, i1] = st.cell(i);
            let (mut acc, mut best) = (0.0f64, 0.0f64);
            let mut k = 0;
            while k < order.len() {
                let d = st.dist[order[k]];
                while k < order.len() && st.dist[order[k]] == d {
                    let o = order[k];
                    let (a, b) = (o / st.span[1], o % st.span[1]);
                    // offset (i - j) = (a - n0 + 1, b - n1 + 1)
                    let j0 = (i0 + n0 - 1) as isize - a as isize;
                    let j1 = (i1 + n1 - 1) as isize - b as isize;
                    if j0 >= 0 && (j0 as usize) < n0 && j1 >= 0 && (j1 as usize) < n1 {
                        acc += st.weights[o] * f.values()[j0 as usize * n1 + j1 as usize];
                    }
                    k += 1;
                }
                best = best.max(acc.abs());
            }
            // the last partial sum is the principal value up to summation order
            best.max(pv[i].abs())
        })
        .collect();
    GridFunction::new(grid.clone(), out)
}

/// `[b, T] f = b T(f) - T(b f)` with the principal-value operator, summed as
/// `sum_j w(i - j) (b_i - b_j) f_j` so that constant multipliers give exactly
/// zero.
pub fn commutator_apply(b: &GridFunction, f: &GridFunction, k: &Kernel) -> Result<GridFunction> {
    b.check_grid(f.grid())?;
    let grid = f.grid();
    let st = Stencil::new(k, grid, 0.5 * min_cell_width(grid))?;
    let (bv, fv) = (b.values(), f.values());
    let vals = (0..grid.len())
        .map(|i| {
            let ci = st.cell(i);
            let mut acc = 0.0;
            for (j, (&bj, &fj)) in bv.iter().zip(fv).enumerate() {
                acc += st.weights[st.index(ci, st.cell(j))] * (bv[i] - bj) * fj;
            }
            acc
        })
        .collect();
    GridFunction::new(grid.clone(), vals)
}

/// `<T f, phi> + <f, T phi>` with the discrete pairing `sum mu f phi`.
pub fn antisymmetry_defect(k: &Kernel, f: &GridFunction, phi: &GridFunction) -> Result<f64> {
    if !k.is_odd() {
        return Err(Error::KernelNotOdd);
    }
    f.check_grid(phi.grid())?;
    let tf = apply_pv(k, f)?;
    let tphi = apply_pv(k, phi)?;
    Ok(tf.pairing(phi)? + f.pairing(&tphi)?)
}

fn check_cap(grid: &GridBox) -> Result<()> {
    let cap = if grid.dim() == 1 {
        ASSEMBLY_CAP_1D
    } else {
        ASSEMBLY_CAP_2D
    };
    if grid.len() > cap {
        Err(Error::AssemblyCap {
            cells: grid.len(),
            cap,
        })
    } else {
        Ok(())
    }
}

/// Dense matrix of the principal-value operator: `A_ij = w(i - j)`.
pub fn assemble_pv(k: &Kernel, grid: &GridBox) -> Result<DenseMatrix> {
    check_cap(grid)?;
    let st = Stencil::new(k, grid, 0.5 * min_cell_width(grid))?;
    let n = grid.len();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        st.weights[st.index(st.cell(i), st.cell(j))]
    }))
}

/// Dense matrix of `[b, T]`: `C_ij = (b_i - b_j) A_ij`, exactly symmetric for
/// odd kernels.
pub fn commutator_matrix(b: &GridFunction, k: &Kernel) -> Result<DenseMatrix> {
    let a = assemble_pv(k, b.grid())?;
    let bv = b.values();
    let n = bv.len();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        a.get(i, j) * (bv[i] - bv[j])
    }))
}

/// A multiplier and a kernel, with an optionally cached dense matrix.
#[derive(Debug, Clone)]
pub struct CommutatorInstance {
    b: GridFunction,
    kernel: Kernel,
    matrix: Option<DenseMatrix>,
}

impl CommutatorInstance {
    pub fn new(b: GridFunction, kernel: Kernel) -> Result<Self> {
        if kernel.dim() != b.grid().dim() {
            return Err(Error::Dimension(
                "kernel and multiplier dimensions differ".into(),
            ));
        }
        Ok(Self {
            b,
            kernel,
            matrix: None,
        })
    }

    pub fn multiplier(&self) -> &GridFunction {
        &self.b
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Assembles and caches the dense matrix.
    pub fn assemble(&mut self) -> Result<&DenseMatrix> {
        if self.matrix.is_none() {
            self.matrix = Some(commutator_matrix(&self.b, &self.kernel)?);
        }
        Ok(self.matrix.as_ref().expect("just assembled"))
    }

    pub fn matrix(&self) -> Option<&DenseMatrix> {
        self.matrix.as_ref()
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match &self.matrix {
            Some(m) => {
                self.b.check_grid(f.grid())?;
                GridFunction::new(f.grid().clone(), m.matvec(f.values()))
            }
            None => commutator_apply(&self.b, f, &self.kernel),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(grid: &GridBox, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::new(
            grid.clone(),
            (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn kernel_invariants() {
        let h = hilbert_kernel();
        assert!(h.is_odd() && h.is_mean_zero() && h.smoothness_verified());
        assert_eq!(h.omega(), &[1.0 / PI, -1.0 / PI]);
        assert_eq!(h.eval(&[2.0, 0.0]), 0.5 / PI);
        assert_eq!(h.eval(&[-2.0, 0.0]), -0.5 / PI);

        let r1 = riesz_kernel(1, 360).unwrap();
        assert!(r1.is_odd() && r1.is_mean_zero());
        let mean = r1.omega().iter().sum::<f64>() / 360.0;
        assert!(mean.abs() < 1e-14);
        for (i, &w) in r1.omega().iter().enumerate() {
            let t = 2.0 * PI * i as f64 / 360.0;
            assert!((w - RIESZ_CONSTANT_2D * t.cos()).abs() < 1e-15);
        }
        let z = [0.3, -0.4];
        assert!((r1.eval(&z) - RIESZ_CONSTANT_2D * 0.3 / 0.125).abs() < 1e-14);
        let r2 = riesz_kernel(2, 64).unwrap();
        assert!((r2.eval(&z) + RIESZ_CONSTANT_2D * 0.4 / 0.125).abs() < 1e-14);
        assert!(riesz_kernel(3, 64).is_err());
        assert!((RIESZ_CONSTANT_2D - 0.886_226_925_452_758 / PI.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn odd_evaluation_is_exactly_antisymmetric() {
        let k = Kernel::new(
            Profile::Trig {
                cos: vec![0.3, 0.0, -0.2],
                sin: vec![0.1, 0.0, 0.05],
            },
            128,
        )
        .unwrap();
        assert!(k.is_odd());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let z = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert_eq!(k.eval(&z), -k.eval(&[-z[0], -z[1]]));
        }
    }

    #[test]
    fn invalid_kernels() {
        assert!(Kernel::new(Profile::Line { pos: 1.0, neg: 1.0 }, 2).is_err());
        assert!(Kernel::new(Profile::Sampled(vec![1.0, 1.0, 1.0]), 3).is_err());
        let even = Kernel::new(
            Profile::Trig {
                cos: vec![0.0, 1.0],
                sin: vec![],
            },
            64,
        )
        .unwrap();
        assert!(!even.is_odd());
        let g = GridBox::square(0.0, 1.0, 4).unwrap();
        let f = GridFunction::zeros(&g);
        assert_eq!(antisymmetry_defect(&even, &f, &f), Err(Error::KernelNotOdd));
        let sampled = Kernel::new(Profile::Sampled(vec![1.0, 0.0, -1.0, 0.0]), 4).unwrap();
        assert!(sampled.is_odd() && !sampled.smoothness_verified());
    }

    #[test]
    fn hilbert_of_indicator_against_closed_form() {
        let g = GridBox::interval(-4.0, 4.0, 4096).unwrap();
        let f = GridFunction::from_fn(&g, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let hf = apply_pv(&hilbert_kernel(), &f).unwrap();
        let mut worst = 0.0f64;
        for (i, x) in g.midpoints().iter().enumerate() {
            let x = x[0];
            if (x.abs() - 1.0).abs() >= 0.1 {
                let exact = ((x + 1.0) / (x - 1.0)).abs().ln() / PI;
                worst = worst.max((hf.values()[i] - exact).abs());
            }
        }
        assert!(worst <= 0.02, "{worst}");
    }

    #[test]
    fn truncation_parity_and_stabilization() {
        let g = GridBox::interval(-1.0, 1.0, 64).unwrap();
        let h = hilbert_kernel();
        let even = GridFunction::from_fn(&g, |x| (-x[0] * x[0] * 4.0).exp()).unwrap();
        let t = apply_truncated(&h, &even, 0.1).unwrap();
        for i in 0..32 {
            assert!((t.values()[i] + t.values()[63 - i]).abs() < 1e-12);
        }
        assert!(apply_truncated(&h, &GridFunction::zeros(&g), 0.1)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let width = g.width(0);
        let pv = apply_pv(&h, &even).unwrap();
        let fine = apply_truncated(&h, &even, 0.9 * width).unwrap();
        assert_eq!(pv, fine);
        assert!(apply_truncated(&h, &even, 0.0).is_err());
    }

    #[test]
    fn constant_on_symmetric_grid_cancels_in_the_interior() {
        let g = GridBox::interval(-1.0, 1.0, 200).unwrap();
        let c = GridFunction::constant(&g, 1.0).unwrap();
        let t = apply_pv(&hilbert_kernel(), &c).unwrap();
        // T1(x) = (1/pi) ln((1 + x) / (1 - x)): the tail lost outside the box
        for (i, x) in g.midpoints().iter().enumerate() {
            let bound = ((1.0 + x[0].abs()) / (1.0 - x[0].abs())).ln() / PI + 0.01;
            assert!(t.values()[i].abs() <= bound);
        }
        assert!(t.values()[99].abs() < 0.01);
    }

    #[test]
    fn riesz_parity_on_radial_bump() {
        let g = GridBox::square(-1.0, 1.0, 24).unwrap();
        let bump =
            GridFunction::from_fn(&g, |x| (-(x[0] * x[0] + x[1] * x[1]) * 3.0).exp()).unwrap();
        let r1 = apply_pv(&riesz_kernel(1, 64).unwrap(), &bump).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                let v = r1.values()[i * 24 + j];
                assert!((v + r1.values()[(23 - i) * 24 + j]).abs() < 1e-10);
                assert!((v - r1.values()[i * 24 + (23 - j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn maximal_truncation_against_exhaustive_eps_scan() {
        let g = GridBox::interval(-2.0, 2.0, 40).unwrap();
        let f = GridFunction::from_fn(&g, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let h = hilbert_kernel();
        let ts = maximal_truncated(&h, &f).unwrap();
        let w = g.width(0);
        let mut brute = vec![0.0f64; 40];
        for k in 0..41 {
            let eps = (k as f64 + 0.5) * w;
            let t = apply_truncated(&h, &f, eps).unwrap();
            for (b, v) in brute.iter_mut().zip(t.values()) {
                *b = b.max(v.abs());
            }
        }
        let pv = apply_pv(&h, &f).unwrap();
        for ((&t, &want), &p) in ts.values().iter().zip(&brute).zip(pv.values()).take(40) {
            assert!((t - want).abs() < 1e-12);
            assert!(t >= p.abs());
        }
    }

    #[test]
    fn maximal_truncation_2d_dominates_pv() {
        let g = GridBox::square(0.0, 1.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random(&g, &mut rng);
        let k = riesz_kernel(2, 32).unwrap();
        let ts = maximal_truncated(&k, &f).unwrap();
        let pv = apply_pv(&k, &f).unwrap();
        for (a, b) in ts.values().iter().zip(pv.values()) {
            assert!(*a >= b.abs() - 1e-15);
        }
        let eps = 0.3;
        let t = apply_truncated(&k, &f, eps).unwrap();
        for (a, b) in ts.values().iter().zip(t.values()) {
            assert!(*a >= b.abs() - 1e-15);
        }
    }

    #[test]
    fn commutator_basics() {
        let g = GridBox::interval(-1.0, 1.0, 128).unwrap();
        let h = hilbert_kernel();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random(&g, &mut rng);
        let c = GridFunction::constant(&g, 2.5).unwrap();
        assert!(commutator_apply(&c, &f, &h)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));

        let b = GridFunction::from_fn(&g, |x| x[0].abs().max(1e-3).ln()).unwrap();
        let f2 = random(&g, &mut rng);
        let (s, t) = (0.7, -1.3);
        let combo = f.zip_with(&f2, |x, y| s * x + t * y).unwrap();
        let lhs = commutator_apply(&b, &combo, &h).unwrap();
        let r1 = commutator_apply(&b, &f, &h).unwrap();
        let r2 = commutator_apply(&b, &f2, &h).unwrap();
        for i in 0..128 {
            assert!((lhs.values()[i] - (s * r1.values()[i] + t * r2.values()[i])).abs() < 1e-12);
        }

        let mut inst = CommutatorInstance::new(b.clone(), h.clone()).unwrap();
        let m = inst.assemble().unwrap().clone();
        assert_eq!(m.symmetry_defect(), 0.0);
        let via_matrix = inst.apply(&f).unwrap();
        for (a, b) in via_matrix.values().iter().zip(r1.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for j in [0, 17, 127] {
            let e = GridFunction::new(
                g.clone(),
                (0..128).map(|i| if i == j { 1.0 } else { 0.0 }).collect(),
            )
            .unwrap();
            let col = commutator_apply(&b, &e, &h).unwrap();
            for i in 0..128 {
                assert!((col.values()[i] - m.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn assembled_operator_is_antisymmetric_and_capped() {
        let a = assemble_pv(
            &hilbert_kernel(),
            &GridBox::interval(0.0, 1.0, 300).unwrap(),
        )
        .unwrap();
        assert_eq!(a.antisymmetry_defect(), 0.0);
        let a2 = assemble_pv(
            &riesz_kernel(1, 32).unwrap(),
            &GridBox::square(0.0, 1.0, 12).unwrap(),
        )
        .unwrap();
        assert_eq!(a2.antisymmetry_defect(), 0.0);
        let big = GridBox::interval(0.0, 1.0, 4096).unwrap();
        assert!(matches!(
            assemble_pv(&hilbert_kernel(), &big),
            Err(Error::AssemblyCap { .. })
        ));
        let big2 = GridBox::square(0.0, 1.0, 65).unwrap();
        assert!(matches!(
            assemble_pv(&riesz_kernel(1, 8).unwrap(), &big2),
            Err(Error::AssemblyCap { .. })
        ));
    }

    #[test]
    fn antisymmetry_quadratic_form_vanishes() {
        let g = GridBox::interval(0.0, 1.0, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = random(&g, &mut rng);
        let h = hilbert_kernel();
        assert!(antisymmetry_defect(&h, &f, &f).unwrap().abs() < 1e-12);
        assert_eq!(
            antisymmetry_defect(&h, &f, &GridFunction::zeros(&g)).unwrap(),
            0.0
        );
        assert!(apply_pv(&h, &f).unwrap().pairing(&f).unwrap().abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn disjoint_supports_have_no_defect(seed in 0u64..10_000, cut in 10usize..100) {
            let g = GridBox::interval(0.0, 1.0, 128).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = GridFunction::new(g.clone(), (0..128).map(|i| if i < cut { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect()).unwrap();
            let phi = GridFunction::new(g.clone(), (0..128).map(|i| if i >= cut { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect()).unwrap();
            prop_assert!(antisymmetry_defect(&hilbert_kernel(), &f, &phi).unwrap().abs() <= 1e-12);
        }
    }
}
