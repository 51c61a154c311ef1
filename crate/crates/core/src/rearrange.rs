//! Non-increasing rearrangements and the Zygmund norms `L log L` and `L_exp`.
//!
//! The rearrangement of finite weighted data is a step function: absolute
//! values sorted in decreasing order, each held for its measure. Everything
//! downstream (`f**`, both Zygmund norms) is evaluated in closed form on the
//! steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CubeWindow, GridFunction, WeightedMultiset};
use crate::numeric::compensated_sum;

/// Relative tolerance used to snap evaluation points onto breakpoints.
const SNAP: f64 = 1e-12;

/// Non-increasing, right-continuous step function on `(0, T]`.
///
/// `breakpoints = [0, t_1, ..., t_k]`, `values = [v_1, ..., v_k]`; the value
/// on `[t_{j-1}, t_j)` is `v_j` and the function vanishes from `t_k = T` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("step function"));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::LengthMismatch {
                expected: values.len() + 1,
                found: breakpoints.len(),
            });
        }
        if breakpoints[0] != 0.0 || breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "breakpoints must start at 0 and increase strictly".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0)
            || values.windows(2).any(|w| w[0] < w[1])
        {
            return Err(Error::InvalidParameter(
                "step values must be finite, non-negative and non-increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `T`, the measure of the underlying data.
    pub fn total_measure(&self) -> f64 {
        *self.breakpoints.last().expect("non-empty")
    }

    fn lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints.windows(2).map(|w| w[1] - w[0])
    }

    /// `f*(t)`; right-continuous at breakpoints and zero for `t >= T`.
    pub fn eval(&self, t: f64) -> f64 {
        let shifted = t + SNAP * self.total_measure();
        // first breakpoint strictly beyond t
        let j = self.breakpoints[1..].partition_point(|&b| b <= shifted);
        self.values.get(j).copied().unwrap_or(0.0)
    }

    /// `int_0^t f*(s) ds` for `0 <= t`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let mut acc = crate::numeric::CompensatedSum::new();
        for (j, &v) in self.values.iter().enumerate() {
            let (a, b) = (self.breakpoints[j], self.breakpoints[j + 1]);
            if t >= b {
                acc.add(v * (b - a));
            } else {
                if t > a {
                    acc.add(v * (t - a));
                }
                break;
            }
        }
        acc.value()
    }

    /// `f**(t) = t^{-1} int_0^t f*`, for `0 < t <= T`.
    pub fn double_star(&self, t: f64) -> Result<f64> {
        let total = self.total_measure();
        if !(t > 0.0 && t <= total * (1.0 + SNAP)) {
            return Err(Error::OutOfRange {
                name: "t",
                value: t,
                range: "(0, T]",
            });
        }
        Ok(self.integral_to(t.min(total)) / t)
    }

    /// Pointwise power `(f*)^delta`, which is the rearrangement of `|f|^delta`.
    pub fn powf(&self, delta: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v.powf(delta)).collect(),
        }
    }

    /// `int_0^T f**(t) dt`, integrated piece by piece.
    ///
    /// On `(t_{j-1}, t_j]`, `f**(t) = B_j / t + v_j` with
    /// `B_j = sum_{i<j} (v_i - v_j) |I_i| >= 0`.
    pub fn double_star_integral(&self) -> f64 {
        let lens: Vec<f64> = self.lengths().collect();
        let mut acc = crate::numeric::CompensatedSum::new();
        // running sums of v_i |I_i| and |I_i| over earlier pieces
        let mut mass = 0.0;
        let mut length = 0.0;
        for (j, &v) in self.values.iter().enumerate() {
            let (a, b) = (self.breakpoints[j], self.breakpoints[j + 1]);
            if j > 0 {
                let offset = mass - v * length;
                acc.add(offset * (b / a).ln());
            }
            acc.add(v * lens[j]);
            mass += v * lens[j];
            length += lens[j];
        }
        acc.value()
    }

    /// `int_0^T f*(t) ln(T/t) dt` via the antiderivative `t ln(T/t) + t`.
    pub fn log_weighted_integral(&self) -> f64 {
        let total = self.total_measure();
        let anti = |t: f64| {
            if t == 0.0 {
                0.0
            } else {
                t * (total / t).ln() + t
            }
        };
        compensated_sum(
            self.values
                .iter()
                .enumerate()
                .map(|(j, &v)| v * (anti(self.breakpoints[j + 1]) - anti(self.breakpoints[j]))),
        )
    }

    /// `sup_{0<t<T} f**(t) / (1 + ln(T/t))`.
    ///
    /// With `s = ln t`, the ratio on a piece is `(B e^{-s} + v) / (1 + ln T - s)`
    /// whose derivative has the sign of `B e^{-s} (s - ln T) + v`, an increasing
    /// function of `s` on `s <= ln T`. Each piece is therefore quasi-convex and
    /// the supremum is attained at a breakpoint (the value at `T` is the limit
    /// `t -> T^-`).
    pub fn exp_sup(&self) -> f64 {
        let total = self.total_measure();
        let mut integral = 0.0;
        let mut best = 0.0f64;
        for (j, &v) in self.values.iter().enumerate() {
            let (a, b) = (self.breakpoints[j], self.breakpoints[j + 1]);
            integral += v * (b - a);
            let ratio = (integral / b) / (1.0 + (total / b).ln());
            best = best.max(ratio);
        }
        best
    }
}

/// `f*` of weighted data: absolute values in decreasing order.
///
/// Ties are ordered by signed value (descending) and then by position so
/// the intermediate data is reproducible.
pub fn rearrangement(ms: &WeightedMultiset) -> Result<StepFunction> {
    let pairs = ms.pairs();
    if pairs.is_empty() {
        return Err(Error::Empty("rearrangement input"));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (pairs[i].0, pairs[j].0);
        b.abs()
            .total_cmp(&a.abs())
            .then(b.total_cmp(&a))
            .then(i.cmp(&j))
    });
    let mut breakpoints = Vec::with_capacity(pairs.len() + 1);
    breakpoints.push(0.0);
    let mut acc = crate::numeric::CompensatedSum::new();
    let mut values = Vec::with_capacity(pairs.len());
    for i in order {
        acc.add(pairs[i].1);
        breakpoints.push(acc.value());
        values.push(pairs[i].0.abs());
    }
    StepFunction::new(breakpoints, values)
}

/// Free-function form of [`StepFunction::double_star`].
pub fn double_star(fs: &StepFunction, t: f64) -> Result<f64> {
    fs.double_star(t)
}

/// `||f||_{L log L(Q)} = int_0^{|Q|} f**(t) dt`.
pub fn llogl_norm(f: &GridFunction, window: &CubeWindow) -> Result<f64> {
    Ok(rearrangement(&f.restrict(window)?)?.double_star_integral())
}

/// `||f||_{L_exp(Q)} = sup_t f**(t) / (1 + ln(|Q|/t))`.
pub fn lexp_norm(f: &GridFunction, window: &CubeWindow) -> Result<f64> {
    Ok(rearrangement(&f.restrict(window)?)?.exp_sup())
}

/// Both sides of the Zygmund-space Hölder inequality
/// `int_Q |fg| <= 2 ||f||_{L log L(Q)} ||g||_{L_exp(Q)}`.
pub fn zygmund_holder_check(
    f: &GridFunction,
    g: &GridFunction,
    window: &CubeWindow,
) -> Result<(f64, f64)> {
    let fq = f.restrict(window)?;
    let gq = g.restrict(window)?;
    let lhs = compensated_sum(
        fq.pairs()
            .iter()
            .zip(gq.pairs())
            .map(|(&(a, m), &(b, _))| (a * b).abs() * m),
    );
    let rhs = 2.0 * llogl_norm(f, window)? * lexp_norm(g, window)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridBox;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ms(pairs: &[(f64, f64)]) -> WeightedMultiset {
        WeightedMultiset::new(pairs.to_vec()).unwrap()
    }

    #[test]
    fn sorts_absolute_values() {
        let fs = rearrangement(&ms(&[(3.0, 1.0), (1.0, 1.0), (2.0, 1.0)])).unwrap();
        assert_eq!(fs.values(), &[3.0, 2.0, 1.0]);
        assert_eq!(fs.breakpoints(), &[0.0, 1.0, 2.0, 3.0]);
        let fs = rearrangement(&ms(&[(-5.0, 2.0)])).unwrap();
        assert_eq!(fs.values(), &[5.0]);
        assert_eq!(fs.total_measure(), 2.0);
    }

    #[test]
    fn eval_is_right_continuous() {
        let fs = rearrangement(&ms(&[(3.0, 1.0), (1.0, 1.0), (2.0, 1.0)])).unwrap();
        assert_eq!(fs.eval(0.5), 3.0);
        assert_eq!(fs.eval(1.0), 2.0);
        assert_eq!(fs.eval(2.999), 1.0);
        assert_eq!(fs.eval(3.0), 0.0);
    }

    #[test]
    fn double_star_examples() {
        let fs = rearrangement(&ms(&[(3.0, 1.0), (1.0, 1.0), (2.0, 1.0)])).unwrap();
        assert_abs_diff_eq!(fs.double_star(2.0).unwrap(), 2.5);
        let c = rearrangement(&ms(&[(4.0, 0.5), (4.0, 1.5)])).unwrap();
        for t in [0.1, 0.5, 1.0, 2.0] {
            assert_abs_diff_eq!(c.double_star(t).unwrap(), 4.0);
        }
        assert!(fs.double_star(0.0).is_err());
        assert!(fs.double_star(3.5).is_err());
    }

    #[test]
    fn empty_multiset_rejected() {
        assert!(WeightedMultiset::new(vec![]).is_err());
    }

    #[test]
    fn indicator_zygmund_norms() {
        let g = GridBox::interval(0.0, 1.0, 16).unwrap();
        let one = GridFunction::constant(&g, 1.0).unwrap();
        let q = CubeWindow::full(&g).unwrap();
        assert_abs_diff_eq!(llogl_norm(&one, &q).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lexp_norm(&one, &q).unwrap(), 1.0, epsilon = 1e-12);
        let (lhs, rhs) = zygmund_holder_check(&one, &one, &q).unwrap();
        assert_abs_diff_eq!(lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rhs, 2.0, epsilon = 1e-12);

        let zero = GridFunction::zeros(&g);
        assert_eq!(llogl_norm(&zero, &q).unwrap(), 0.0);
        assert_eq!(lexp_norm(&zero, &q).unwrap(), 0.0);
        assert_eq!(zygmund_holder_check(&one, &zero, &q).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn step_json_shape() {
        let fs = rearrangement(&ms(&[(2.0, 1.0), (1.0, 1.0)])).unwrap();
        assert_eq!(
            serde_json::to_string(&fs).unwrap(),
            r#"{"breakpoints":[0.0,1.0,2.0],"values":[2.0,1.0]}"#
        );
    }

    fn multiset_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-10.0f64..10.0, 0.01f64..2.0), 1..30)
    }

    proptest! {
        #[test]
        fn equimeasurable_under_permutation_and_sign(pairs in multiset_strategy(), seed in any::<u64>()) {
            let base = rearrangement(&ms(&pairs)).unwrap();
            let mut shuffled = pairs.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            for (i, p) in shuffled.iter_mut().enumerate() {
                if (seed >> (i % 64)) & 1 == 1 { p.0 = -p.0; }
            }
            let other = rearrangement(&ms(&shuffled)).unwrap();
            let total = base.total_measure();
            for i in 0..50 {
                let t = total * (i as f64 + 0.37) / 50.0;
                prop_assert_eq!(base.eval(t), other.eval(t));
            }
        }

        #[test]
        fn double_star_dominates_and_decreases(pairs in multiset_strategy()) {
            let fs = rearrangement(&ms(&pairs)).unwrap();
            let mut prev = f64::INFINITY;
            for &t in &fs.breakpoints()[1..] {
                let ds = fs.double_star(t).unwrap();
                prop_assert!(ds + 1e-12 >= fs.eval(t * (1.0 - 1e-9)));
                prop_assert!(ds <= prev + 1e-12);
                prev = ds;
            }
        }

        #[test]
        fn zygmund_formulas_agree(pairs in multiset_strategy()) {
            let fs = rearrangement(&ms(&pairs)).unwrap();
            let a = fs.double_star_integral();
            let b = fs.log_weighted_integral();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }
}
