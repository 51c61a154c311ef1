//! Seeded test functions defined on the continuum and sampled at cell
//! midpoints, so the same seed describes the same function on every grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use varlex_core::grid::{GridBox, GridFunction, Point};

use crate::error::Result;

/// Clip level of the logarithmic spike; the clipped core (radius `e^-3`)
/// spans several cells on the coarsest grids.
pub const LOG_CLIP: f64 = 3.0;
/// Depth of the nested dyadic martingale sums.
pub const MARTINGALE_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    RandomSmooth,
    Bump,
    Indicator,
    /// `min(ln(1 / |x - c|), LOG_CLIP)`.
    LogSpike,
    /// `sum_k eps_k chi_{I_k}` over nested dyadic cubes around a point.
    DyadicMartingale,
    /// Odd steps localized at a point, the usual near-extremizers of commutators.
    Adversarial,
    Constant,
}

impl FamilyTag {
    /// Families cycled through by the generic suites.
    pub const GENERIC: [FamilyTag; 5] = [
        FamilyTag::RandomSmooth,
        FamilyTag::Bump,
        FamilyTag::Indicator,
        FamilyTag::LogSpike,
        FamilyTag::DyadicMartingale,
    ];
    /// Symbols with bounded mean oscillation used for commutators.
    pub const BMO: [FamilyTag; 2] = [FamilyTag::LogSpike, FamilyTag::DyadicMartingale];

    pub fn name(self) -> &'static str {
        match self {
            Self::RandomSmooth => "random-smooth",
            Self::Bump => "bump",
            Self::Indicator => "indicator",
            Self::LogSpike => "log-spike",
            Self::DyadicMartingale => "dyadic-martingale",
            Self::Adversarial => "adversarial",
            Self::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub tag: FamilyTag,
    pub seed: u64,
}

fn dist(x: &Point, c: &Point, dim: usize) -> f64 {
    (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>().sqrt()
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Point {
    let mut c = [0.0; 2];
    for v in c.iter_mut().take(dim) {
        *v = rng.gen_range(-r..r);
    }
    c
}

impl TestFunctionFamily {
    pub fn new(tag: FamilyTag, seed: u64) -> Self {
        Self { tag, seed }
    }

    pub fn generate(&self, grid: &GridBox) -> Result<GridFunction> {
        let f = self.function(grid.dim());
        Ok(GridFunction::from_fn(grid, |x| f(&x))?)
    }

    /// The continuum function on `[-1, 1)^dim`.
    pub fn function(&self, dim: usize) -> Box<dyn Fn(&Point) -> f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let amp = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        match self.tag {
            FamilyTag::RandomSmooth => {
                let modes: Vec<(usize, f64, f64, f64)> = (1..=4)
                    .map(|k| {
                        (
                            k,
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(0.0..6.3),
                            rng.gen_range(0.0..6.3),
                        )
                    })
                    .collect();
                Box::new(move |x| {
                    modes
                        .iter()
                        .map(|&(k, a, p0, p1)| {
                            let w = std::f64::consts::PI * k as f64;
                            let y = if dim == 2 { (w * x[1] + p1).cos() } else { 1.0 };
                            a * (w * x[0] + p0).cos() * y / k as f64
                        })
                        .sum()
                })
            }
            FamilyTag::Bump => {
                let c = random_point(&mut rng, dim, 0.6);
                let r = rng.gen_range(0.2..0.5);
                Box::new(move |x| {
                    let t = dist(x, &c, dim) / r;
                    if t < 1.0 {
                        amp * (1.0 - 1.0 / (1.0 - t * t)).exp()
                    } else {
                        0.0
                    }
                })
            }
            FamilyTag::Indicator => {
                let sides: Vec<(f64, f64)> = (0..dim)
                    .map(|_| {
                        let a = rng.gen_range(-0.9..0.7);
                        (a, rng.gen_range(a + 0.1..0.9))
                    })
                    .collect();
                Box::new(move |x| {
                    if sides
                        .iter()
                        .enumerate()
                        .all(|(i, &(a, b))| x[i] >= a && x[i] < b)
                    {
                        amp
                    } else {
                        0.0
                    }
                })
            }
            FamilyTag::LogSpike => {
                let c = random_point(&mut rng, dim, 0.5);
                Box::new(move |x| amp * (-dist(x, &c, dim).ln()).min(LOG_CLIP))
            }
            FamilyTag::DyadicMartingale => {
                let c = random_point(&mut rng, dim, 1.0);
                let signs: Vec<f64> = (0..MARTINGALE_DEPTH)
                    .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                    .collect();
                Box::new(move |x| {
                    let mut s = 0.0;
                    for (k, eps) in signs.iter().enumerate() {
                        // cubes of side 2^{-k} in the dyadic lattice of [-1, 1)
                        let side = 0.5f64.powi(k as i32);
                        let same = (0..dim).all(|a| {
                            ((x[a] + 1.0) / side).floor() == ((c[a] + 1.0) / side).floor()
                        });
                        if !same {
                            break;
                        }
                        s += eps;
                    }
                    s
                })
            }
            FamilyTag::Adversarial => {
                let c = random_point(&mut rng, dim, 0.5);
                let r = rng.gen_range(0.05..0.4);
                Box::new(move |x| {
                    if dist(x, &c, dim) < r {
                        if x[0] >= c[0] {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        0.0
                    }
                })
            }
            FamilyTag::Constant => Box::new(move |_| amp),
        }
    }
}

/// `|x|^k` on the grid, a symbol outside BMO on growing boxes for `k >= 1`.
pub fn abs_power(grid: &GridBox, k: f64) -> Result<GridFunction> {
    let dim = grid.dim();
    Ok(GridFunction::from_fn(grid, |x| {
        dist(&x, &[0.0; 2], dim).powf(k)
    })?)
}
