//! Uniform box grids and the data that lives on them.
//!
//! A [`GridBox`] is a half-open box in one or two dimensions split into
//! equal cells. Functions are sampled at cell midpoints and every integral
//! is the midpoint-rule sum `sum_i f_i * |cell|`. Values are stored
//! row-major: in two dimensions the flat index of cell `(i0, i1)` is
//! `i0 * N1 + i1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the domain; the second coordinate is unused in one dimension.
pub type Point = [f64; 2];

/// Half-open box `[a_0, b_0) x ... ` with `N_i` cells along axis `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridBoxRepr", into = "GridBoxRepr")]
pub struct GridBox {
    bounds: Vec<(f64, f64)>,
    cells: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GridBoxRepr {
    dim: usize,
    bounds: Vec<[f64; 2]>,
    cells: Vec<usize>,
}

impl TryFrom<GridBoxRepr> for GridBox {
    type Error = Error;

    fn try_from(repr: GridBoxRepr) -> Result<Self> {
        if repr.bounds.len() != repr.dim || repr.cells.len() != repr.dim {
            return Err(Error::InvalidGrid(format!(
                "dim = {} but {} bounds and {} cell counts given",
                repr.dim,
                repr.bounds.len(),
                repr.cells.len()
            )));
        }
        GridBox::new(
            repr.bounds.iter().map(|b| (b[0], b[1])).collect(),
            repr.cells,
        )
    }
}

impl From<GridBox> for GridBoxRepr {
    fn from(grid: GridBox) -> Self {
        GridBoxRepr {
            dim: grid.dim(),
            bounds: grid.bounds.iter().map(|&(a, b)| [a, b]).collect(),
            cells: grid.cells,
        }
    }
}

impl GridBox {
    pub fn new(bounds: Vec<(f64, f64)>, cells: Vec<usize>) -> Result<Self> {
        let dim = bounds.len();
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} not in {{1, 2}}"
            )));
        }
        if cells.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} cell counts for dimension {dim}",
                cells.len()
            )));
        }
        for (axis, (&(a, b), &n)) in bounds.iter().zip(&cells).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: bounds [{a}, {b}) empty"
                )));
            }
            if n == 0 {
                return Err(Error::InvalidGrid(format!("axis {axis}: zero cells")));
            }
        }
        Ok(Self { bounds, cells })
    }

    /// One-dimensional grid `[a, b)` with `n` cells.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(vec![(a, b)], vec![n])
    }

    /// Two-dimensional grid `[a, b)^2` with `n x n` cells.
    pub fn square(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(vec![(a, b), (a, b)], vec![n, n])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell width along `axis`.
    pub fn width(&self, axis: usize) -> f64 {
        let (a, b) = self.bounds[axis];
        (b - a) / self.cells[axis] as f64
    }

    /// Lebesgue measure of one cell.
    pub fn cell_measure(&self) -> f64 {
        (0..self.dim()).map(|axis| self.width(axis)).product()
    }

    /// Lebesgue measure of the whole box.
    pub fn measure(&self) -> f64 {
        self.bounds.iter().map(|&(a, b)| b - a).product()
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        self.bounds
            .iter()
            .map(|&(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest number of cells along any axis.
    pub fn min_extent(&self) -> usize {
        self.cells.iter().copied().min().unwrap_or(0)
    }

    /// Midpoint coordinate of cell `index` along `axis`.
    pub fn midpoint_coord(&self, axis: usize, index: usize) -> f64 {
        self.bounds[axis].0 + (index as f64 + 0.5) * self.width(axis)
    }

    /// Multi-index of a flat cell index.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [flat, 0]
        } else {
            [flat / self.cells[1], flat % self.cells[1]]
        }
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, multi: [usize; 2]) -> usize {
        if self.dim() == 1 {
            multi[0]
        } else {
            multi[0] * self.cells[1] + multi[1]
        }
    }

    /// Midpoint of cell `flat`.
    pub fn midpoint(&self, flat: usize) -> Point {
        let m = self.multi_index(flat);
        let mut x = [0.0; 2];
        for (axis, xi) in x.iter_mut().enumerate().take(self.dim()) {
            *xi = self.midpoint_coord(axis, m[axis]);
        }
        x
    }

    /// Midpoints of all cells in flat order.
    pub fn midpoints(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.midpoint(i)).collect()
    }

    fn check_same(&self, other: &GridBox) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Real samples at the cell midpoints of a [`GridBox`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunctionRepr", into = "GridFunctionRepr")]
pub struct GridFunction {
    grid: GridBox,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridFunctionRepr {
    #[serde(rename = "box")]
    grid: GridBox,
    values: Vec<f64>,
}

impl TryFrom<GridFunctionRepr> for GridFunction {
    type Error = Error;

    fn try_from(repr: GridFunctionRepr) -> Result<Self> {
        GridFunction::new(repr.grid, repr.values)
    }
}

impl From<GridFunction> for GridFunctionRepr {
    fn from(f: GridFunction) -> Self {
        GridFunctionRepr {
            grid: f.grid,
            values: f.values,
        }
    }
}

impl GridFunction {
    pub fn new(grid: GridBox, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every midpoint.
    pub fn from_fn(grid: &GridBox, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.midpoint(i))).collect();
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &GridBox, c: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![c; grid.len()])
    }

    pub fn zeros(grid: &GridBox) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &GridBox {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    /// Midpoint-rule integral over the box.
    pub fn integral(&self) -> f64 {
        crate::numeric::compensated_sum(self.values.iter().copied()) * self.grid.cell_measure()
    }

    /// `sum_i |f_i g_i| * |cell|`.
    pub fn abs_pairing(&self, other: &GridFunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s = crate::numeric::compensated_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a * b).abs()),
        );
        Ok(s * self.grid.cell_measure())
    }

    /// Signed pairing `sum_i f_i g_i * |cell|`.
    pub fn pairing(&self, other: &GridFunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s = crate::numeric::compensated_sum(
            self.values.iter().zip(&other.values).map(|(a, b)| a * b),
        );
        Ok(s * self.grid.cell_measure())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_grid(&self, other: &GridBox) -> Result<()> {
        self.grid.check_same(other)
    }

    /// Restriction to a cube window as weighted data.
    pub fn restrict(&self, window: &CubeWindow) -> Result<WeightedMultiset> {
        window.check(&self.grid)?;
        let mu = self.grid.cell_measure();
        let pairs = window
            .cells(&self.grid)
            .map(|i| (self.values[i], mu))
            .collect();
        WeightedMultiset::new(pairs)
    }
}

/// Free-function form of [`GridFunction::restrict`].
pub fn restrict(f: &GridFunction, window: &CubeWindow) -> Result<WeightedMultiset> {
    f.restrict(window)
}

/// A grid-aligned cube: `side` cells along every axis starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeWindow {
    pub start: [usize; 2],
    pub side: usize,
    pub dim: usize,
}

impl CubeWindow {
    pub fn new(grid: &GridBox, start: &[usize], side: usize) -> Result<Self> {
        if start.len() != grid.dim() {
            return Err(Error::Dimension(format!(
                "window start has {} coordinates, grid has dimension {}",
                start.len(),
                grid.dim()
            )));
        }
        let mut s = [0; 2];
        s[..start.len()].copy_from_slice(start);
        let w = Self {
            start: s,
            side,
            dim: grid.dim(),
        };
        w.check(grid)?;
        Ok(w)
    }

    /// The window covering the whole of a grid with equal extents.
    pub fn full(grid: &GridBox) -> Result<Self> {
        let n = grid.cells()[0];
        Self::new(grid, &vec![0; grid.dim()], n)
    }

    pub fn check(&self, grid: &GridBox) -> Result<()> {
        let fits = self.dim == grid.dim()
            && self.side >= 1
            && (0..self.dim).all(|a| self.start[a] + self.side <= grid.cells()[a]);
        if fits {
            Ok(())
        } else {
            Err(Error::WindowOutOfBounds {
                start: self.start[..self.dim.min(2)].to_vec(),
                side: self.side,
            })
        }
    }

    /// Number of cells in the window.
    pub fn count(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Lebesgue measure of the window.
    pub fn measure(&self, grid: &GridBox) -> f64 {
        self.count() as f64 * grid.cell_measure()
    }

    /// Whether the cell `flat` lies in the window.
    pub fn contains(&self, grid: &GridBox, flat: usize) -> bool {
        let m = grid.multi_index(flat);
        (0..self.dim).all(|a| m[a] >= self.start[a] && m[a] < self.start[a] + self.side)
    }

    /// Flat indices of the window's cells in row-major order.
    pub fn cells<'a>(&self, grid: &'a GridBox) -> impl Iterator<Item = usize> + 'a {
        let w = *self;
        let n1 = if grid.dim() == 2 { grid.cells()[1] } else { 1 };
        let rows = if w.dim == 2 { w.side } else { 1 };
        (0..rows).flat_map(move |r| {
            let base = if w.dim == 2 {
                (w.start[0] + r) * n1 + w.start[1]
            } else {
                w.start[0]
            };
            base..base + w.side
        })
    }
}

/// Pairs `(value, measure)` with positive measures; the data of `f * chi_Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMultiset {
    pairs: Vec<(f64, f64)>,
}

impl WeightedMultiset {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("weighted multiset"));
        }
        for (index, &(v, m)) in pairs.iter().enumerate() {
            if !v.is_finite() || !m.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if m <= 0.0 {
                return Err(Error::OutOfRange {
                    name: "measure",
                    value: m,
                    range: "(0, inf)",
                });
            }
        }
        Ok(Self { pairs })
    }

    /// Equal-measure multiset.
    pub fn uniform(values: &[f64], measure: f64) -> Result<Self> {
        Self::new(values.iter().map(|&v| (v, measure)).collect())
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        crate::numeric::compensated_sum(self.pairs.iter().map(|p| p.1))
    }

    /// Maps the values, keeping the measures.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.pairs.iter().map(|&(v, m)| (f(v), m)).collect())
    }

    /// `sum_i |v_i|^delta * m_i`.
    pub fn abs_power_integral(&self, delta: f64) -> f64 {
        crate::numeric::compensated_sum(self.pairs.iter().map(|&(v, m)| v.abs().powf(delta) * m))
    }
}

/// Exponent samples with cached extremes, satisfying `1 < p_- <= p_+ < inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunction", into = "GridFunction")]
pub struct ExponentField {
    samples: GridFunction,
    p_minus: f64,
    p_plus: f64,
}

impl TryFrom<GridFunction> for ExponentField {
    type Error = Error;

    fn try_from(samples: GridFunction) -> Result<Self> {
        ExponentField::new(samples)
    }
}

impl From<ExponentField> for GridFunction {
    fn from(p: ExponentField) -> Self {
        p.samples
    }
}

impl ExponentField {
    pub fn new(samples: GridFunction) -> Result<Self> {
        let (p_minus, p_plus) = samples
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            });
        if !(p_minus > 1.0 && p_plus.is_finite()) {
            return Err(Error::InvalidExponent { p_minus, p_plus });
        }
        Ok(Self {
            samples,
            p_minus,
            p_plus,
        })
    }

    pub fn constant(grid: &GridBox, p: f64) -> Result<Self> {
        Self::new(GridFunction::constant(grid, p)?)
    }

    pub fn from_fn(grid: &GridBox, p: impl Fn(Point) -> f64) -> Result<Self> {
        Self::new(GridFunction::from_fn(grid, p)?)
    }

    pub fn samples(&self) -> &GridFunction {
        &self.samples
    }

    pub fn values(&self) -> &[f64] {
        self.samples.values()
    }

    pub fn grid(&self) -> &GridBox {
        self.samples.grid()
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// Pointwise conjugate exponent `p / (p - 1)`.
    pub fn conjugate(&self) -> Self {
        let values: Vec<f64> = self.values().iter().map(|&p| p / (p - 1.0)).collect();
        let samples = GridFunction {
            grid: self.grid().clone(),
            values,
        };
        // (p')_- = (p_+)' and (p')_+ = (p_-)'; recomputed so the caches match the samples.
        Self::new(samples).expect("conjugate of an admissible exponent is admissible")
    }

    /// `r_p = 1 + 1/p_- - 1/p_+`.
    pub fn r_const(&self) -> f64 {
        1.0 + (1.0 / self.p_minus - 1.0 / self.p_plus)
    }
}

pub fn conjugate(p: &ExponentField) -> ExponentField {
    p.conjugate()
}

pub fn r_const(p: &ExponentField) -> f64 {
    p.r_const()
}

/// Parameters of the random log-Hölder exponent generator.
///
/// The field equals `p_infinity` outside a centered core box (a fraction
/// `core_fraction` of the box along each axis) and inside it is
/// `p_infinity + A * W(x) * s(x)` clamped to `[p_lo, p_hi]`, where `W` is a
/// product of `sin^2` cutoffs vanishing on the core boundary and `s` is a
/// random trigonometric sum with `|s| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogHolderParams {
    pub p_lo: f64,
    pub p_hi: f64,
    pub p_infinity: f64,
    pub modes: usize,
    pub core_fraction: f64,
}

impl LogHolderParams {
    pub fn new(p_lo: f64, p_hi: f64, p_infinity: f64) -> Result<Self> {
        let params = Self {
            p_lo,
            p_hi,
            p_infinity,
            modes: 4,
            core_fraction: 0.5,
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.p_lo.is_finite()
            && self.p_hi.is_finite()
            && self.p_lo > 1.0
            && self.p_lo <= self.p_hi
            && self.p_infinity >= self.p_lo
            && self.p_infinity <= self.p_hi
            && self.modes >= 1
            && self.core_fraction > 0.0
            && self.core_fraction <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "log-Hölder exponent needs 1 < p_lo <= p_infinity <= p_hi < inf, got {self:?}"
            )))
        }
    }

    fn amplitude(&self) -> f64 {
        (self.p_hi - self.p_infinity).max(self.p_infinity - self.p_lo)
    }

    fn core(&self, grid: &GridBox) -> Vec<(f64, f64)> {
        grid.bounds()
            .iter()
            .map(|&(a, b)| {
                let c = 0.5 * (a + b);
                let half = 0.5 * self.core_fraction * (b - a);
                (c - half, c + half)
            })
            .collect()
    }

    /// Lipschitz constant of the unclamped field (clamping cannot increase it).
    pub fn lipschitz_bound(&self, grid: &GridBox) -> f64 {
        let core = self.core(grid);
        let cutoff_grad = core
            .iter()
            .map(|&(lo, hi)| {
                let g = std::f64::consts::PI / (hi - lo);
                g * g
            })
            .sum::<f64>()
            .sqrt();
        let shortest = core
            .iter()
            .map(|&(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min);
        let wave_grad = 2.0 * std::f64::consts::PI * self.modes as f64 / shortest;
        self.amplitude() * (cutoff_grad + wave_grad)
    }

    /// Constant `C` with `|p(x) - p(y)| <= C / ln(e + 1/|x - y|)` for all
    /// `x, y` in the box. `r ln(e + 1/r)` is increasing, so `L * D * ln(e + 1/D)`
    /// bounds `L r ln(e + 1/r)` for `r <= D`.
    pub fn modulus_bound(&self, grid: &GridBox) -> f64 {
        let d = grid.diameter();
        self.lipschitz_bound(grid) * d * (std::f64::consts::E + 1.0 / d).ln()
    }

    pub fn generate(&self, seed: u64, grid: &GridBox) -> Result<ExponentField> {
        self.validate()?;
        let amp = self.amplitude();
        if amp == 0.0 {
            return ExponentField::constant(grid, self.p_infinity);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let core = self.core(grid);
        let shortest = core
            .iter()
            .map(|&(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min);
        let center: Vec<f64> = core.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();

        let raw: Vec<f64> = (0..self.modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = raw.iter().map(|a| a.abs()).sum::<f64>().max(1e-12);
        let waves: Vec<(f64, [f64; 2], f64)> = raw
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let freq = 2.0 * std::f64::consts::PI * (k + 1) as f64 / shortest;
                let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let dir = if grid.dim() == 1 {
                    [1.0, 0.0]
                } else {
                    [angle.cos(), angle.sin()]
                };
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                (a / norm, [freq * dir[0], freq * dir[1]], phase)
            })
            .collect();

        let dim = grid.dim();
        ExponentField::from_fn(grid, |x| {
            let mut cutoff = 1.0;
            for axis in 0..dim {
                let (lo, hi) = core[axis];
                if x[axis] <= lo || x[axis] >= hi {
                    return self.p_infinity;
                }
                let s = (std::f64::consts::PI * (x[axis] - lo) / (hi - lo)).sin();
                cutoff *= s * s;
            }
            let signal: f64 = waves
                .iter()
                .map(|(a, w, ph)| {
                    let arg: f64 = (0..dim).map(|i| w[i] * (x[i] - center[i])).sum();
                    a * (arg + ph).cos()
                })
                .sum();
            (self.p_infinity + amp * cutoff * signal).clamp(self.p_lo, self.p_hi)
        })
    }
}

/// Deterministic pseudo-random log-Hölder exponent with range `[p_lo, p_hi]`,
/// constant `p_infinity` near the boundary of the box.
pub fn make_log_holder_exponent(
    seed: u64,
    grid: &GridBox,
    p_lo: f64,
    p_hi: f64,
    p_infinity: f64,
) -> Result<ExponentField> {
    LogHolderParams::new(p_lo, p_hi, p_infinity)?.generate(seed, grid)
}

/// Largest `|p(x) - p(y)| * ln(e + 1/|x - y|)` over all pairs of midpoints.
pub fn log_holder_modulus(p: &ExponentField) -> f64 {
    let grid = p.grid();
    let pts = grid.midpoints();
    let vals = p.values();
    let mut worst = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let r = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
            let m = (vals[i] - vals[j]).abs() * (std::f64::consts::E + 1.0 / r).ln();
            worst = worst.max(m);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cell_measures() {
        assert_eq!(GridBox::interval(0.0, 1.0, 4).unwrap().cell_measure(), 0.25);
        assert_eq!(GridBox::square(0.0, 1.0, 2).unwrap().cell_measure(), 0.25);
        assert_eq!(GridBox::interval(-2.0, 2.0, 8).unwrap().cell_measure(), 0.5);
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(GridBox::interval(1.0, 1.0, 4).is_err());
        assert!(GridBox::interval(0.0, 1.0, 0).is_err());
        assert!(GridBox::new(vec![(0.0, 1.0); 3], vec![2; 3]).is_err());
    }

    #[test]
    fn restrict_constant_and_prefix() {
        let g = GridBox::interval(0.0, 1.0, 4).unwrap();
        let f = GridFunction::new(g.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let q = CubeWindow::new(&g, &[0], 2).unwrap();
        let ms = f.restrict(&q).unwrap();
        assert_eq!(ms.pairs(), &[(1.0, 0.25), (2.0, 0.25)]);

        let c = GridFunction::constant(&g, 3.0).unwrap();
        let ms = c.restrict(&CubeWindow::full(&g).unwrap()).unwrap();
        assert!(ms.pairs().iter().all(|&(v, _)| v == 3.0));
        assert_abs_diff_eq!(ms.total_measure(), 1.0);
    }

    #[test]
    fn window_out_of_bounds() {
        let g = GridBox::interval(0.0, 1.0, 4).unwrap();
        assert!(matches!(
            CubeWindow::new(&g, &[3], 2),
            Err(Error::WindowOutOfBounds { .. })
        ));
    }

    #[test]
    fn window_cells_2d_row_major() {
        let g = GridBox::square(0.0, 1.0, 4).unwrap();
        let q = CubeWindow::new(&g, &[1, 2], 2).unwrap();
        let cells: Vec<usize> = q.cells(&g).collect();
        assert_eq!(cells, vec![6, 7, 10, 11]);
        assert!(q.contains(&g, 11));
        assert!(!q.contains(&g, 5));
    }

    #[test]
    fn conjugate_constant_examples() {
        let g = GridBox::interval(0.0, 1.0, 8).unwrap();
        let p2 = ExponentField::constant(&g, 2.0).unwrap();
        assert!(p2.conjugate().values().iter().all(|&q| q == 2.0));
        let p3 = ExponentField::constant(&g, 3.0).unwrap();
        assert!(p3.conjugate().values().iter().all(|&q| q == 1.5));
    }

    #[test]
    fn r_const_examples() {
        let g = GridBox::interval(0.0, 1.0, 2).unwrap();
        assert_eq!(ExponentField::constant(&g, 2.0).unwrap().r_const(), 1.0);
        let p = GridFunction::new(g, vec![4.0 / 3.0, 4.0]).unwrap();
        let p = ExponentField::new(p).unwrap();
        assert_abs_diff_eq!(p.r_const(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn exponent_bounds_enforced() {
        let g = GridBox::interval(0.0, 1.0, 2).unwrap();
        assert!(ExponentField::constant(&g, 1.0).is_err());
        assert!(ExponentField::new(GridFunction::new(g, vec![2.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn log_holder_degenerate_range() {
        let g = GridBox::interval(0.0, 1.0, 32).unwrap();
        let p = make_log_holder_exponent(1, &g, 2.0, 2.0, 2.0).unwrap();
        assert!(p.values().iter().all(|&v| v == 2.0));
        assert!(make_log_holder_exponent(1, &g, 1.0, 2.0, 1.5).is_err());
        assert!(make_log_holder_exponent(1, &g, 3.0, 2.0, 2.5).is_err());
    }

    #[test]
    fn log_holder_range_over_seeds() {
        let g = GridBox::interval(-1.0, 1.0, 64).unwrap();
        for seed in 0..100 {
            let p = make_log_holder_exponent(seed, &g, 1.2, 4.0, 2.0).unwrap();
            assert!(p.p_minus() >= 1.2 && p.p_plus() <= 4.0);
            // constant outside the centered core
            assert_eq!(p.values()[0], 2.0);
            assert_eq!(p.values()[63], 2.0);
        }
    }

    #[test]
    fn log_holder_modulus_below_bound() {
        let params = LogHolderParams::new(1.3, 3.5, 2.0).unwrap();
        for grid in [
            GridBox::interval(-1.0, 1.0, 256).unwrap(),
            GridBox::square(-1.0, 1.0, 16).unwrap(),
        ] {
            let bound = params.modulus_bound(&grid);
            for seed in 0..5 {
                let p = params.generate(seed, &grid).unwrap();
                let measured = log_holder_modulus(&p);
                assert!(measured <= bound, "seed {seed}: {measured} > {bound}");
            }
        }
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let g = GridBox::square(0.0, 1.0, 2).unwrap();
        let f = GridFunction::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"box":{"dim":2,"bounds":[[0.0,1.0],[0.0,1.0]],"cells":[2,2]},"values":[1.0,2.0,3.0,4.0]}"#
        );
        let back: GridFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"box":{"dim":1,"bounds":[[0,1]],"cells":[3]},"values":[1,2]}"#;
        assert!(serde_json::from_str::<GridFunction>(bad).is_err());
        let bad_p = r#"{"box":{"dim":1,"bounds":[[0,1]],"cells":[2]},"values":[1,2]}"#;
        assert!(serde_json::from_str::<ExponentField>(bad_p).is_err());
    }

    fn exponent_strategy() -> impl Strategy<Value = ExponentField> {
        prop::collection::vec(1.05f64..8.0, 1..40).prop_map(|ps| {
            let g = GridBox::interval(0.0, 1.0, ps.len()).unwrap();
            ExponentField::new(GridFunction::new(g, ps).unwrap()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn conjugate_is_involution(p in exponent_strategy()) {
            let pp = p.conjugate().conjugate();
            for (a, b) in p.values().iter().zip(pp.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * a);
            }
            let q = p.conjugate();
            prop_assert!((q.p_minus() - p.p_plus() / (p.p_plus() - 1.0)).abs() < 1e-12);
            prop_assert!((q.p_plus() - p.p_minus() / (p.p_minus() - 1.0)).abs() < 1e-12);
        }

        #[test]
        fn r_const_symmetric_and_bounded(p in exponent_strategy()) {
            let r = p.r_const();
            prop_assert!((1.0..2.0).contains(&r));
            prop_assert!((r - p.conjugate().r_const()).abs() < 1e-12);
            prop_assert_eq!(r == 1.0, p.is_constant());
        }

        #[test]
        fn restrict_total_measure(n in 1usize..24, start in 0usize..24, side in 1usize..24, dim2 in any::<bool>()) {
            let g = if dim2 { GridBox::square(-1.0, 2.0, n).unwrap() } else { GridBox::interval(-1.0, 2.0, n).unwrap() };
            let f = GridFunction::from_fn(&g, |x| x[0] * 3.0 - x[1]).unwrap();
            let starts = vec![start; g.dim()];
            if let Ok(q) = CubeWindow::new(&g, &starts, side) {
                let ms = f.restrict(&q).unwrap();
                prop_assert_eq!(ms.len(), q.count());
                let expected = (side as f64).powi(g.dim() as i32) * g.cell_measure();
                prop_assert!((ms.total_measure() - expected).abs() <= 1e-12 * expected);
            }
        }
    }
}
