//! Hardy–Littlewood maximal function, the sharp maximal function `f_delta^#`,
//! the local sharp maximal function `M_lambda^#` and the BMO seminorm.
//!
//! Every operator is a supremum over grid-aligned cubes `Q` containing the
//! cell of `x`. For a fixed side the per-window quantity is computed once per
//! window position and spread to the cells by a sliding maximum, separably
//! along each axis.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CubeWindow, GridBox, GridFunction, WeightedMultiset};
use crate::numeric::compensated_sum;

/// Absolute slack of the sharp-function relation checks.
pub const RELATION_TOL: f64 = 1e-9;

/// Grids with at most this many cells use every side by default.
pub const AUTO_ALL_SIDES_LIMIT: usize = 4096;

/// Which cube sides the suprema range over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SideSet {
    /// Every side from 1 to the smallest grid extent.
    All,
    /// Powers of two plus the largest admissible side.
    Dyadic,
    Explicit(Vec<usize>),
    /// `All` up to [`AUTO_ALL_SIDES_LIMIT`] cells, `Dyadic` above.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximalConfig {
    pub sides: SideSet,
    /// Uniformly spaced refinement points added to the candidate constants
    /// of [`sharp_inner`].
    pub c_grid: usize,
}

impl Default for MaximalConfig {
    fn default() -> Self {
        Self {
            sides: SideSet::Auto,
            c_grid: 64,
        }
    }
}

impl MaximalConfig {
    pub fn new(sides: SideSet, c_grid: usize) -> Result<Self> {
        let cfg = Self { sides, c_grid };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn all() -> Self {
        Self {
            sides: SideSet::All,
            ..Self::default()
        }
    }

    pub fn dyadic() -> Self {
        Self {
            sides: SideSet::Dyadic,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_grid < 2 {
            return Err(Error::InvalidParameter(format!(
                "c_grid must be at least 2, got {}",
                self.c_grid
            )));
        }
        if let SideSet::Explicit(s) = &self.sides {
            if s.is_empty() || s.contains(&0) {
                return Err(Error::InvalidParameter(
                    "explicit side set must be nonempty with positive sides".into(),
                ));
            }
        }
        Ok(())
    }

    /// The sides admissible on `grid`, ascending.
    pub fn sides_for(&self, grid: &GridBox) -> Result<Vec<usize>> {
        self.validate()?;
        let n = grid.min_extent();
        let mut sides: Vec<usize> = match &self.sides {
            SideSet::All => (1..=n).collect(),
            SideSet::Dyadic => dyadic_sides(n),
            SideSet::Explicit(s) => s.iter().copied().filter(|&s| s <= n).collect(),
            SideSet::Auto if grid.len() <= AUTO_ALL_SIDES_LIMIT => (1..=n).collect(),
            SideSet::Auto => dyadic_sides(n),
        };
        sides.sort_unstable();
        sides.dedup();
        if sides.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no configured side fits a grid of extent {n}"
            )));
        }
        Ok(sides)
    }
}

fn dyadic_sides(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..usize::BITS)
        .map(|k| 1usize << k)
        .take_while(|&s| s <= n)
        .collect();
    v.push(n);
    v
}

/// A window together with its mean and mean oscillation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationRecord {
    pub window: CubeWindow,
    pub mean: f64,
    pub oscillation: f64,
}

/// Positions of windows of side `side` along each axis.
fn positions(grid: &GridBox, side: usize) -> [usize; 2] {
    let c = grid.cells();
    if grid.dim() == 2 {
        [c[0] + 1 - side, c[1] + 1 - side]
    } else {
        [c[0] + 1 - side, 1]
    }
}

/// `out[x] = max { a[j] : j in [x + 1 - side, x] }` over the valid `j`, for
/// `x` in `0..len`.
fn sliding_max(a: &[f64], side: usize, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let m = a.len();
    for x in 0..len {
        if x < m {
            while dq.back().is_some_and(|&j| a[j] <= a[x]) {
                dq.pop_back();
            }
            dq.push_back(x);
        }
        while dq.front().is_some_and(|&j| j + side <= x) {
            dq.pop_front();
        }
        out.push(a[*dq.front().expect("window range is nonempty")]);
    }
    out
}

/// Spread per-window values (row-major over window positions) to the cells:
/// each cell receives the maximum over the windows containing it.
fn spread(grid: &GridBox, side: usize, per_window: &[f64]) -> Vec<f64> {
    let [m0, m1] = positions(grid, side);
    if grid.dim() == 1 {
        return sliding_max(per_window, side, grid.cells()[0]);
    }
    let (n0, n1) = (grid.cells()[0], grid.cells()[1]);
    let rows: Vec<Vec<f64>> = (0..m0)
        .map(|i| sliding_max(&per_window[i * m1..(i + 1) * m1], side, n1))
        .collect();
    let mut out = vec![0.0; n0 * n1];
    let mut column = vec![0.0; m0];
    for x1 in 0..n1 {
        for (i, row) in rows.iter().enumerate() {
            column[i] = row[x1];
        }
        for (x0, v) in sliding_max(&column, side, n0).into_iter().enumerate() {
            out[x0 * n1 + x1] = v;
        }
    }
    out
}

fn insert_sorted(v: &mut Vec<f64>, x: f64) {
    let i = v.partition_point(|&y| y < x);
    v.insert(i, x);
}

fn remove_sorted(v: &mut Vec<f64>, x: f64) {
    let i = v.partition_point(|&y| y < x);
    debug_assert!(v[i] == x);
    v.remove(i);
}

/// Supremum over configured windows containing each cell of `eval(sorted)`,
/// where `sorted` holds the window's values in ascending order.
///
/// Windows slide along the last axis; the sorted buffer is updated by
/// removing the outgoing and inserting the incoming values.
fn window_sup<F>(f: &GridFunction, cfg: &MaximalConfig, eval: F) -> Result<GridFunction>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let grid = f.grid();
    let mut best = vec![f64::NEG_INFINITY; grid.len()];
    for (side, per_window) in window_values(f, cfg, eval)? {
        for (b, v) in best.iter_mut().zip(spread(grid, side, &per_window)) {
            *b = b.max(v);
        }
    }
    GridFunction::new(grid.clone(), best)
}

/// `eval(sorted)` for every configured window, grouped by side and ordered
/// row-major over window positions.
fn window_values<F>(
    f: &GridFunction,
    cfg: &MaximalConfig,
    eval: F,
) -> Result<Vec<(usize, Vec<f64>)>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let grid = f.grid();
    let v = f.values();
    let n1 = if grid.dim() == 2 {
        grid.cells()[1]
    } else {
        grid.cells()[0]
    };
    let rows_per_window = |side: usize| if grid.dim() == 2 { side } else { 1 };
    let mut all = Vec::new();
    for side in cfg.sides_for(grid)? {
        let [m0, m1] = positions(grid, side);
        let (m_row, m_col) = if grid.dim() == 2 { (m0, m1) } else { (1, m0) };
        let h = rows_per_window(side);
        let per_window: Vec<f64> = (0..m_row)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut sorted: Vec<f64> = Vec::with_capacity(h * side);
                for r in i..i + h {
                    sorted.extend_from_slice(&v[r * n1..r * n1 + side]);
                }
                sorted.sort_unstable_by(f64::total_cmp);
                let mut out = Vec::with_capacity(m_col);
                out.push(eval(&sorted));
                for j in 1..m_col {
                    for r in i..i + h {
                        remove_sorted(&mut sorted, v[r * n1 + j - 1]);
                        insert_sorted(&mut sorted, v[r * n1 + j + side - 1]);
                    }
                    out.push(eval(&sorted));
                }
                out
            })
            .collect();
        all.push((side, per_window));
    }
    Ok(all)
}

/// `Mf(x) = sup_{Q containing x} |Q|^{-1} int_Q |f|`, using prefix sums.
pub fn hl_maximal(f: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    let grid = f.grid();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let mut best = vec![0.0f64; grid.len()];
    let sides = cfg.sides_for(grid)?;
    if grid.dim() == 1 {
        let mut prefix = vec![0.0; abs.len() + 1];
        for (i, v) in abs.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        for side in sides {
            let m = abs.len() + 1 - side;
            let per: Vec<f64> = (0..m)
                .map(|i| (prefix[i + side] - prefix[i]) / side as f64)
                .collect();
            for (b, v) in best.iter_mut().zip(spread(grid, side, &per)) {
                *b = b.max(v);
            }
        }
    } else {
        let (n0, n1) = (grid.cells()[0], grid.cells()[1]);
        let w = n1 + 1;
        let mut sat = vec![0.0; (n0 + 1) * w];
        for i in 0..n0 {
            let mut row = 0.0;
            for j in 0..n1 {
                row += abs[i * n1 + j];
                sat[(i + 1) * w + j + 1] = sat[i * w + j + 1] + row;
            }
        }
        for side in sides {
            let [m0, m1] = positions(grid, side);
            let area = (side * side) as f64;
            let per: Vec<f64> = (0..m0 * m1)
                .map(|k| {
                    let (i, j) = (k / m1, k % m1);
                    let s = sat[(i + side) * w + j + side]
                        - sat[i * w + j + side]
                        - sat[(i + side) * w + j]
                        + sat[i * w + j];
                    s / area
                })
                .collect();
            for (b, v) in best.iter_mut().zip(spread(grid, side, &per)) {
                *b = b.max(v);
            }
        }
    }
    // summation rounding must not push Mf below |f|
    for (b, a) in best.iter_mut().zip(&abs) {
        *b = b.max(*a);
    }
    GridFunction::new(grid.clone(), best)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: "(0, 1]",
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
            range: "(0, 1)",
        })
    }
}

#[inline]
fn pow_delta(x: f64, delta: f64) -> f64 {
    if delta == 1.0 {
        x
    } else if delta == 0.5 {
        x.sqrt()
    } else if delta == 0.25 {
        x.sqrt().sqrt()
    } else if delta == 0.75 {
        let r = x.sqrt();
        r * r.sqrt()
    } else {
        x.powf(delta)
    }
}

/// `sum |y_i - c|^delta` over sorted `y`, farthest terms first, abandoning
/// the sum once it reaches `bound`.
fn power_deviation(sorted: &[f64], c: f64, delta: f64, bound: f64) -> f64 {
    interval_deviation(sorted, c, c, delta, bound)
}

/// `sum dist(y_i, [a, b])^delta`: a lower bound of `power_deviation` for
/// every `c` in `[a, b]`, with the same early exit.
fn interval_deviation(sorted: &[f64], a: f64, b: f64, delta: f64, bound: f64) -> f64 {
    let (mut lo, mut hi) = (0usize, sorted.len());
    let mut acc = 0.0;
    while lo < hi {
        let dl = (a - sorted[lo]).max(0.0);
        let dh = (sorted[hi - 1] - b).max(0.0);
        let d = if dl >= dh {
            lo += 1;
            dl
        } else {
            hi -= 1;
            dh
        };
        if d == 0.0 {
            break;
        }
        acc += pow_delta(d, delta);
        if acc >= bound {
            return acc;
        }
    }
    acc
}

/// `inf_c (mean |y - c|^delta)^{1/delta}` for equal-measure samples given in
/// ascending order.
///
/// For `delta < 1` the objective is concave in `c` between consecutive
/// samples and increasing outside their range, so the infimum is attained at
/// a sample value. The samples are searched by branch and bound over index
/// ranges, pruning a range `[y_a, y_b]` once `sum dist(y_i, [y_a, y_b])^delta`
/// reaches the best value found. For `delta = 1` the median is the minimizer.
pub fn sharp_inner_sorted(sorted: &[f64], delta: f64) -> f64 {
    let s = sorted.len();
    let (lo, hi) = (sorted[0], sorted[s - 1]);
    if lo == hi {
        return 0.0;
    }
    if delta == 1.0 {
        let med = sorted[s / 2];
        return compensated_sum(sorted.iter().map(|v| (v - med).abs())) / s as f64;
    }
    let mid = s / 2;
    let mut best = power_deviation(sorted, sorted[mid], delta, f64::INFINITY);
    let mut stack = vec![(0usize, mid), (mid + 1, s)];
    while let Some((a, b)) = stack.pop() {
        if a >= b {
            continue;
        }
        if b - a <= 4 {
            let mut prev = f64::NAN;
            for &c in &sorted[a..b] {
                if c != prev {
                    best = best.min(power_deviation(sorted, c, delta, best));
                    prev = c;
                }
            }
            continue;
        }
        if interval_deviation(sorted, sorted[a], sorted[b - 1], delta, best) >= best {
            continue;
        }
        let m = a + (b - a) / 2;
        // explore the half nearer the median first
        if a >= mid {
            stack.push((m, b));
            stack.push((a, m));
        } else {
            stack.push((a, m));
            stack.push((m, b));
        }
    }
    (best / s as f64).powf(1.0 / delta)
}

/// Whether `(mean |y - c|^delta)^{1/delta} >= target` for every `c`, for
/// sorted equal-measure samples. Decided by the same branch and bound as
/// [`sharp_inner_sorted`] with the target as the pruning bound, so it stops
/// early whenever the target is well below the infimum.
pub fn sharp_inner_at_least(sorted: &[f64], delta: f64, target: f64) -> bool {
    if target <= 0.0 {
        return true;
    }
    let s = sorted.len();
    let bound = s as f64 * pow_delta(target, delta);
    if delta == 1.0 {
        return sharp_inner_sorted(sorted, 1.0) * s as f64 >= bound;
    }
    let mut stack = vec![(0usize, s)];
    while let Some((a, b)) = stack.pop() {
        if b - a <= 4 {
            if sorted[a..b]
                .iter()
                .any(|&c| power_deviation(sorted, c, delta, bound) < bound)
            {
                return false;
            }
            continue;
        }
        if interval_deviation(sorted, sorted[a], sorted[b - 1], delta, bound) >= bound {
            continue;
        }
        let m = a + (b - a) / 2;
        stack.push((a, m));
        stack.push((m, b));
    }
    true
}

/// Weighted version of [`sharp_inner_sorted`] for an arbitrary multiset:
/// the minimum over the sample values and `c_grid` uniformly spaced points.
pub fn sharp_inner(ms: &WeightedMultiset, delta: f64, c_grid: usize) -> Result<f64> {
    check_delta(delta)?;
    let mut pairs = ms.pairs().to_vec();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let total = ms.total_measure();
    let objective = |c: f64| {
        compensated_sum(
            pairs
                .iter()
                .map(|&(v, w)| w * pow_delta((v - c).abs(), delta)),
        )
    };
    let mut candidates: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let (lo, hi) = (candidates[0], candidates[candidates.len() - 1]);
    candidates.extend((0..c_grid).map(|k| lo + (hi - lo) * k as f64 / (c_grid.max(2) - 1) as f64));
    let best = candidates
        .into_iter()
        .map(objective)
        .fold(f64::INFINITY, f64::min);
    Ok((best / total).powf(1.0 / delta))
}

/// Smallest half-length `r` of a value interval `[c - r, c + r]` holding
/// at least the fraction `1 - lambda` of the samples, for equal-measure
/// samples in ascending order. This is `inf_c ((f - c) chi_Q)^*(lambda |Q|)`.
pub fn local_sharp_inner_sorted(sorted: &[f64], lambda: f64) -> f64 {
    let s = sorted.len();
    let outside = ((lambda * s as f64) + 1e-12 * s as f64).floor() as usize;
    let k = s - outside.min(s - 1);
    (0..=s - k)
        .map(|i| sorted[i + k - 1] - sorted[i])
        .fold(f64::INFINITY, f64::min)
        * 0.5
}

/// Weighted version of [`local_sharp_inner_sorted`].
pub fn local_sharp_inner(ms: &WeightedMultiset, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let mut pairs = ms.pairs().to_vec();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let total = ms.total_measure();
    let need = (1.0 - lambda) * total * (1.0 - 1e-12);
    let mut best = f64::INFINITY;
    let mut mass = 0.0;
    let mut i = 0;
    for j in 0..pairs.len() {
        mass += pairs[j].1;
        while i < j && mass - pairs[i].1 >= need {
            mass -= pairs[i].1;
            i += 1;
        }
        if mass >= need {
            best = best.min(pairs[j].0 - pairs[i].0);
        }
    }
    Ok(0.5 * best)
}

/// `f_delta^#(x) = sup_Q inf_c (|Q|^{-1} int_Q |f - c|^delta)^{1/delta}`.
pub fn sharp_delta(f: &GridFunction, delta: f64, cfg: &MaximalConfig) -> Result<GridFunction> {
    check_delta(delta)?;
    window_sup(f, cfg, |w| sharp_inner_sorted(w, delta))
}

/// `M_lambda^# f(x) = sup_Q inf_c ((f - c) chi_Q)^*(lambda |Q|)`.
pub fn local_sharp(f: &GridFunction, lambda: f64, cfg: &MaximalConfig) -> Result<GridFunction> {
    check_lambda(lambda)?;
    window_sup(f, cfg, |w| local_sharp_inner_sorted(w, lambda))
}

fn mean_and_oscillation(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let osc = compensated_sum(values.iter().map(|v| (v - mean).abs())) / n;
    (mean, osc)
}

/// Pointwise supremum of the mean oscillation over windows containing x.
pub fn oscillation_maximal(f: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    window_sup(f, cfg, |w| mean_and_oscillation(w).1)
}

/// The window of largest mean oscillation.
pub fn max_oscillation(b: &GridFunction, cfg: &MaximalConfig) -> Result<OscillationRecord> {
    let grid = b.grid();
    let mut best: Option<OscillationRecord> = None;
    let mut buf = Vec::new();
    for side in cfg.sides_for(grid)? {
        let [m0, m1] = positions(grid, side);
        for k in 0..m0 * m1 {
            let window = CubeWindow {
                start: [k / m1, k % m1],
                side,
                dim: grid.dim(),
            };
            buf.clear();
            buf.extend(window.cells(grid).map(|c| b.values()[c]));
            let (mean, oscillation) = mean_and_oscillation(&buf);
            if best.is_none_or(|r| oscillation > r.oscillation) {
                best = Some(OscillationRecord {
                    window,
                    mean,
                    oscillation,
                });
            }
        }
    }
    Ok(best.expect("at least one window"))
}

/// `||b||_* = sup_Q |Q|^{-1} int_Q |b - b_Q|`.
pub fn bmo_norm(b: &GridFunction, cfg: &MaximalConfig) -> Result<f64> {
    Ok(max_oscillation(b, cfg)?.oscillation)
}

/// `max_x ( M_lambda^# f(x) - lambda^{-1/delta} f_delta^#(x) )`; nonpositive
/// up to rounding.
pub fn relation_check(
    f: &GridFunction,
    delta: f64,
    lambda: f64,
    cfg: &MaximalConfig,
) -> Result<f64> {
    let local = local_sharp(f, lambda, cfg)?;
    let sharp = sharp_delta(f, delta, cfg)?;
    let factor = lambda.powf(-1.0 / delta);
    Ok(local
        .values()
        .iter()
        .zip(sharp.values())
        .map(|(l, s)| l - factor * s)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Number of windows `Q` violating
/// `inf_c ((f - c) chi_Q)^*(lambda |Q|) <= lambda^{-1/delta} inf_c (|Q|^{-1} int_Q |f - c|^delta)^{1/delta} + tol`
/// with `tol` = [`RELATION_TOL`].
///
/// Zero violations certify `M_lambda^# f <= lambda^{-1/delta} f_delta^#` at
/// every cell, since both sides are suprema over the same windows. The
/// sharp side is only resolved as far as needed to clear the threshold.
pub fn relation_violations(
    f: &GridFunction,
    delta: f64,
    lambda: f64,
    cfg: &MaximalConfig,
) -> Result<usize> {
    Ok(relation_violations_multi(f, delta, &[lambda], cfg)?[0])
}

/// [`relation_violations`] for several `lambda` at once. Each window is first
/// tested against the largest threshold over `lambdas`, which settles all of
/// them when it passes.
pub fn relation_violations_multi(
    f: &GridFunction,
    delta: f64,
    lambdas: &[f64],
    cfg: &MaximalConfig,
) -> Result<Vec<usize>> {
    check_delta(delta)?;
    for &l in lambdas {
        check_lambda(l)?;
    }
    if lambdas.len() > 63 {
        return Err(Error::InvalidParameter("at most 63 lambda values".into()));
    }
    let factors: Vec<f64> = lambdas.iter().map(|l| l.powf(-1.0 / delta)).collect();
    let masks = window_values(f, cfg, |w| {
        let targets: Vec<f64> = lambdas
            .iter()
            .zip(&factors)
            .map(|(&l, &k)| (local_sharp_inner_sorted(w, l) - RELATION_TOL) / k)
            .collect();
        let top = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if sharp_inner_at_least(w, delta, top) {
            return 0.0;
        }
        let mut mask = 0u64;
        for (i, &t) in targets.iter().enumerate() {
            if !sharp_inner_at_least(w, delta, t) {
                mask |= 1 << i;
            }
        }
        mask as f64
    })?;
    let mut counts = vec![0; lambdas.len()];
    for (_, per) in &masks {
        for &m in per {
            let m = m as u64;
            for (i, c) in counts.iter_mut().enumerate() {
                *c += ((m >> i) & 1) as usize;
            }
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrange::rearrangement;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    fn line(values: Vec<f64>) -> GridFunction {
        let g = GridBox::interval(0.0, 1.0, values.len()).unwrap();
        GridFunction::new(g, values).unwrap()
    }

    fn random_line(n: usize, rng: &mut ChaCha8Rng) -> GridFunction {
        line((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
    }

    /// All windows containing each cell, evaluated directly.
    fn brute(f: &GridFunction, eval: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let g = f.grid();
        let n = g.min_extent();
        let mut out = vec![f64::NEG_INFINITY; g.len()];
        for side in 1..=n {
            let [m0, m1] = positions(g, side);
            for k in 0..m0 * m1 {
                let w = CubeWindow::new(g, &[k / m1, k % m1][..g.dim()], side).unwrap();
                let vals: Vec<f64> = w.cells(g).map(|c| f.values()[c]).collect();
                let v = eval(&vals);
                for c in w.cells(g) {
                    out[c] = out[c].max(v);
                }
            }
        }
        out
    }

    #[test]
    fn config_validation() {
        assert!(MaximalConfig::new(SideSet::All, 1).is_err());
        assert!(MaximalConfig::new(SideSet::Explicit(vec![]), 8).is_err());
        let g = GridBox::interval(0.0, 1.0, 12).unwrap();
        assert_eq!(
            MaximalConfig::dyadic().sides_for(&g).unwrap(),
            vec![1, 2, 4, 8, 12]
        );
        assert_eq!(MaximalConfig::default().sides_for(&g).unwrap().len(), 12);
        let big = GridBox::interval(0.0, 1.0, 8192).unwrap();
        assert_eq!(MaximalConfig::default().sides_for(&big).unwrap().len(), 14);
    }

    #[test]
    fn sliding_max_matches_naive() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0];
        let side = 3;
        let len = a.len() + side - 1;
        let got = sliding_max(&a, side, len);
        assert_eq!(got.len(), len);
        for (x, &g) in got.iter().enumerate() {
            let lo = (x + 1).saturating_sub(side);
            let hi = x.min(a.len() - 1);
            let want = a[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(g, want);
        }
    }

    #[test]
    fn maximal_of_constant() {
        let g = GridBox::square(0.0, 1.0, 6).unwrap();
        let f = GridFunction::constant(&g, -2.5).unwrap();
        let m = hl_maximal(&f, &MaximalConfig::all()).unwrap();
        assert!(m.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn maximal_of_spike_against_brute_force() {
        let n = 40;
        let mut v = vec![0.0; n];
        v[13] = 1.0;
        let f = line(v);
        let m = hl_maximal(&f, &MaximalConfig::all()).unwrap();
        let b = brute(&f, |w| {
            w.iter().map(|x| x.abs()).sum::<f64>() / w.len() as f64
        });
        for (i, (&bi, &mi)) in b.iter().zip(m.values()).enumerate().take(n) {
            assert!((mi - bi).abs() < 1e-14);
            let dist = (i as f64 - 13.0).abs();
            assert!((bi - 1.0 / (dist + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn maximal_2d_against_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GridBox::square(0.0, 1.0, 7).unwrap();
        let f = GridFunction::from_fn(&g, |_| 0.0).unwrap();
        let f = GridFunction::new(
            g.clone(),
            f.values()
                .iter()
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        )
        .unwrap();
        let m = hl_maximal(&f, &MaximalConfig::all()).unwrap();
        let b = brute(&f, |w| {
            w.iter().map(|x| x.abs()).sum::<f64>() / w.len() as f64
        });
        for (x, y) in m.values().iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
        let o = oscillation_maximal(&f, &MaximalConfig::all()).unwrap();
        let bo = brute(&f, |w| mean_and_oscillation(w).1);
        for (x, y) in o.values().iter().zip(&bo) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn sharp_example_two_levels() {
        let v = [0.0, 0.0, 10.0, 10.0];
        assert_eq!(sharp_inner_sorted(&v, 1.0), 5.0);
        // dense scan oracle
        let scan = (0..=10_000)
            .map(|k| {
                let c = k as f64 * 1e-3;
                [0.0, 0.0, 10.0, 10.0]
                    .iter()
                    .map(|y: &f64| (y - c).abs())
                    .sum::<f64>()
                    / 4.0
            })
            .fold(f64::INFINITY, f64::min);
        assert!((scan - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sharp_inner_against_dense_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..40 {
            let s = rng.gen_range(2..12);
            let vals: Vec<f64> = (0..s).map(|_| rng.gen_range(-3.0..3.0)).collect();
            for delta in [0.25, 0.5, 0.75, 1.0] {
                let (lo, hi) = vals
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                        (a.min(v), b.max(v))
                    });
                let scan = (0..=20_000)
                    .map(|k| lo + (hi - lo) * k as f64 / 20_000.0)
                    .chain(vals.iter().copied())
                    .map(|c| vals.iter().map(|y| (y - c).abs().powf(delta)).sum::<f64>() / s as f64)
                    .fold(f64::INFINITY, f64::min)
                    .powf(1.0 / delta);
                let got = sharp_inner_sorted(&sorted(&vals), delta);
                assert!(got <= scan * (1.0 + 1e-12) + 1e-15, "{got} > {scan}");
                assert!(got >= scan * (1.0 - 1e-12) - 1e-15);
                let ms = WeightedMultiset::uniform(&vals, 0.1).unwrap();
                let weighted = sharp_inner(&ms, delta, 64).unwrap();
                assert!((weighted - got).abs() <= 1e-12 * got.max(1.0));
            }
        }
    }

    /// `inf_c ((f - c) chi_Q)^*(lambda |Q|)` by brute force over `c`: the
    /// rearrangement is evaluated through the step-function machinery.
    fn local_oracle(vals: &[f64], lambda: f64) -> f64 {
        let (lo, hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let mut cs: Vec<f64> = (0..=2000)
            .map(|k| lo + (hi - lo) * k as f64 / 2000.0)
            .collect();
        for a in vals {
            for b in vals {
                cs.push(0.5 * (a + b));
            }
        }
        let mu = 1.0 / vals.len() as f64;
        cs.into_iter()
            .map(|c| {
                let ms =
                    WeightedMultiset::uniform(&vals.iter().map(|v| v - c).collect::<Vec<_>>(), mu)
                        .unwrap();
                rearrangement(&ms).unwrap().eval(lambda)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn local_sharp_examples() {
        let v = [0.0, 0.0, 0.0, 10.0];
        assert_eq!(local_sharp_inner_sorted(&v, 0.3), 0.0);
        // the rearrangement at t = |Q|/4 already ignores the single outlier
        assert_eq!(local_sharp_inner_sorted(&v, 0.25), 0.0);
        assert_eq!(local_oracle(&v, 0.25), 0.0);
        assert_eq!(local_sharp_inner_sorted(&v, 0.2), 5.0);
        assert_eq!(local_oracle(&v, 0.2), 5.0);
        let f = GridFunction::constant(&GridBox::interval(0.0, 1.0, 9).unwrap(), 3.0).unwrap();
        let l = local_sharp(&f, 0.5, &MaximalConfig::all()).unwrap();
        assert!(l.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn local_sharp_inner_against_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let s = rng.gen_range(1..10);
            let vals: Vec<f64> = (0..s)
                .map(|_| (rng.gen_range(-3.0f64..3.0) * 4.0).round() / 4.0)
                .collect();
            for lambda in [0.1, 0.25, 0.3, 0.5, 0.75, 0.9] {
                let exact = local_sharp_inner_sorted(&sorted(&vals), lambda);
                let oracle = local_oracle(&vals, lambda);
                assert!(
                    (exact - oracle).abs() < 1e-12,
                    "{vals:?} {lambda}: {exact} vs {oracle}"
                );
                let ms = WeightedMultiset::uniform(&vals, 0.3).unwrap();
                assert!((local_sharp_inner(&ms, lambda).unwrap() - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn window_operators_against_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_line(24, &mut rng);
        let cfg = MaximalConfig::all();
        let sharp = sharp_delta(&f, 0.5, &cfg).unwrap();
        let b = brute(&f, |w| sharp_inner_sorted(&sorted(w), 0.5));
        assert_eq!(sharp.values(), &b[..]);
        let local = local_sharp(&f, 0.3, &cfg).unwrap();
        let b = brute(&f, |w| local_sharp_inner_sorted(&sorted(w), 0.3));
        assert_eq!(local.values(), &b[..]);
    }

    #[test]
    fn sharp_dominated_by_oscillation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let f = random_line(32, &mut rng);
            let cfg = MaximalConfig::all();
            let s = sharp_delta(&f, 1.0, &cfg).unwrap();
            let o = oscillation_maximal(&f, &cfg).unwrap();
            for (a, b) in s.values().iter().zip(o.values()) {
                assert!(*a <= b * (1.0 + 1e-12));
                assert!(*a <= 2.0 * b);
            }
        }
    }

    #[test]
    fn certificate_agrees_with_exact_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let s = rng.gen_range(1..30);
            let vals = sorted(
                &(0..s)
                    .map(|_| rng.gen_range(-3.0..3.0))
                    .collect::<Vec<f64>>(),
            );
            for delta in [0.25, 0.5, 0.75, 1.0] {
                let exact = sharp_inner_sorted(&vals, delta);
                for t in [
                    0.0,
                    0.5 * exact,
                    exact * (1.0 - 1e-9),
                    exact * (1.0 + 1e-9),
                    2.0 * exact + 1e-3,
                ] {
                    assert_eq!(
                        sharp_inner_at_least(&vals, delta, t),
                        t <= exact,
                        "{t} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn certificate_matches_relation_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = MaximalConfig::all();
        for _ in 0..5 {
            let f = random_line(48, &mut rng);
            for (delta, lambda) in [(0.25, 0.9), (0.5, 0.5), (0.75, 0.1)] {
                assert_eq!(relation_violations(&f, delta, lambda, &cfg).unwrap(), 0);
                assert!(relation_check(&f, delta, lambda, &cfg).unwrap() <= RELATION_TOL);
            }
        }
    }

    #[test]
    fn errors_on_parameters() {
        let f = line(vec![1.0, 2.0]);
        let cfg = MaximalConfig::all();
        assert!(sharp_delta(&f, 0.0, &cfg).is_err());
        assert!(sharp_delta(&f, 1.5, &cfg).is_err());
        assert!(local_sharp(&f, 1.0, &cfg).is_err());
        assert!(local_sharp(&f, 0.0, &cfg).is_err());
    }

    #[test]
    fn bmo_of_constant_and_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = MaximalConfig::all();
        let c = line(vec![4.0; 16]);
        assert_eq!(bmo_norm(&c, &cfg).unwrap(), 0.0);
        let b = line((0..16).map(|i| i as f64 * 0.25).collect());
        let shifted = b.map(|v| v + 1.0).unwrap();
        assert_eq!(
            bmo_norm(&b, &cfg).unwrap(),
            bmo_norm(&shifted, &cfg).unwrap()
        );
        let f = random_line(20, &mut rng);
        let rec = max_oscillation(&f, &cfg).unwrap();
        assert!(rec.oscillation > 0.0);
    }

    #[test]
    fn relation_for_spike_and_constant() {
        let cfg = MaximalConfig::all();
        let c = line(vec![1.0; 10]);
        assert!(relation_check(&c, 0.5, 0.5, &cfg).unwrap() <= 0.0);
        let mut v = vec![0.0; 32];
        v[10] = 5.0;
        let spike = line(v);
        for delta in [0.25, 0.5, 1.0] {
            for lambda in [0.1, 0.5, 0.9] {
                assert!(relation_check(&spike, delta, lambda, &cfg).unwrap() < 0.0);
            }
        }
    }

    fn small_line() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..20)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn maximal_sublinear_and_dominating(a in small_line(), c in -3.0f64..3.0, seed in 0u64..1000) {
            let n = a.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = line(a);
            let g = random_line(n, &mut rng);
            let cfg = MaximalConfig::all();
            let mf = hl_maximal(&f, &cfg).unwrap();
            let mg = hl_maximal(&g, &cfg).unwrap();
            let sum = f.zip_with(&g, |x, y| x + y).unwrap();
            let ms = hl_maximal(&sum, &cfg).unwrap();
            let mmf = hl_maximal(&mf, &cfg).unwrap();
            let mcf = hl_maximal(&f.scale(c).unwrap(), &cfg).unwrap();
            for i in 0..n {
                prop_assert!(ms.values()[i] <= (mf.values()[i] + mg.values()[i]) * (1.0 + 1e-12) + 1e-14);
                prop_assert!(mf.values()[i] >= f.values()[i].abs());
                prop_assert!(mmf.values()[i] >= mf.values()[i]);
                prop_assert!((mcf.values()[i] - c.abs() * mf.values()[i]).abs() <= 1e-12 * (1.0 + mf.values()[i]));
            }
        }

        #[test]
        fn local_sharp_monotone_in_lambda(a in small_line(), l1 in 0.05f64..0.95, l2 in 0.05f64..0.95) {
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            let f = line(a);
            let cfg = MaximalConfig::all();
            let m_lo = local_sharp(&f, lo, &cfg).unwrap();
            let m_hi = local_sharp(&f, hi, &cfg).unwrap();
            for (x, y) in m_hi.values().iter().zip(m_lo.values()) {
                prop_assert!(x <= y);
            }
        }

        #[test]
        fn bmo_homogeneous_and_shift_invariant(a in small_line(), c in -3.0f64..3.0, shift in -10.0f64..10.0) {
            let b = line(a);
            let cfg = MaximalConfig::all();
            let n = bmo_norm(&b, &cfg).unwrap();
            let nc = bmo_norm(&b.scale(c).unwrap(), &cfg).unwrap();
            prop_assert!((nc - c.abs() * n).abs() <= 1e-12 * (1.0 + n * c.abs()));
            let ns = bmo_norm(&b.map(|v| v + shift).unwrap(), &cfg).unwrap();
            prop_assert!((ns - n).abs() <= 1e-12 * (1.0 + n + shift.abs()));
        }

        #[test]
        fn relation_holds(a in small_line(), di in 0usize..3, li in 0usize..3) {
            let delta = [0.25, 0.5, 0.75][di];
            let lambda = [0.1, 0.5, 0.9][li];
            let f = line(a);
            prop_assert!(relation_check(&f, delta, lambda, &MaximalConfig::all()).unwrap() <= 1e-9);
        }
    }
}
