//! Experiment configuration shared by every suite.

use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use varlex_core::grid::{GridBox, LogHolderParams};
use varlex_core::maximal::MaximalConfig;
use varlex_core::singular::{hilbert_kernel, riesz_kernel, Kernel};

use crate::error::{ExperimentError, Result};

/// Singular kernel used by the transform and commutator suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    /// `1 / (pi x)` on an interval.
    Hilbert,
    /// Planar Riesz kernels on a square.
    Riesz1,
    Riesz2,
}

/// Window sides scanned by maximal and sharp operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SideChoice {
    All,
    Dyadic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub p_lo: f64,
    pub p_hi: f64,
    pub p_infinity: f64,
}

/// Optional replacements for the default tolerances of the checks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative slack of the inequality checks.
    pub inequality: Option<f64>,
    /// Absolute tolerance of exact identities.
    pub identity: Option<f64>,
    /// Relative slack of the empirical duality transfer.
    pub transfer: Option<f64>,
}

impl Tolerances {
    pub fn inequality(&self) -> f64 {
        self.inequality.unwrap_or(1e-8)
    }

    pub fn identity(&self) -> f64 {
        self.identity.unwrap_or(1e-12)
    }

    pub fn transfer(&self) -> f64 {
        self.transfer.unwrap_or(0.05)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Cells per axis (interval) or total cells (square, rounded down to a
    /// power-of-two square).
    pub sizes: Vec<usize>,
    pub exponent: ExponentParams,
    pub deltas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `lambda` of the local sharp function in the duality estimate.
    pub lerner_lambda: f64,
    pub trials: usize,
    /// Random starts of each operator norm search.
    pub restarts: usize,
    pub tolerances: Tolerances,
    pub kernel: KernelChoice,
    pub sides: SideChoice,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sizes: vec![512],
            exponent: ExponentParams {
                p_lo: 1.5,
                p_hi: 3.0,
                p_infinity: 2.0,
            },
            deltas: vec![0.25, 0.5, 0.75],
            lambdas: vec![0.1, 0.5, 0.9],
            lerner_lambda: 0.5,
            trials: 200,
            restarts: 4,
            tolerances: Tolerances::default(),
            kernel: KernelChoice::Hilbert,
            sides: SideChoice::Dyadic,
            output_dir: None,
            threads: None,
        }
    }
}

pub const MIN_SIZE: usize = 1 << 5;
pub const MAX_SIZE: usize = 1 << 14;

fn open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!(
            "{name} = {v} must lie in (0, 1)"
        )))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(ExperimentError::Config(
                "restarts must be at least 1".into(),
            ));
        }
        if self.sizes.is_empty() {
            return Err(ExperimentError::Config("no grid sizes".into()));
        }
        for &n in &self.sizes {
            if !n.is_power_of_two() || !(MIN_SIZE..=MAX_SIZE).contains(&n) {
                return Err(ExperimentError::Config(format!(
                    "grid size {n} is not a power of two in [{MIN_SIZE}, {MAX_SIZE}]"
                )));
            }
        }
        for &d in &self.deltas {
            open_unit("delta", d)?;
        }
        for &l in &self.lambdas {
            open_unit("lambda", l)?;
        }
        open_unit("lerner lambda", self.lerner_lambda)?;
        self.exponent_params()?;
        Ok(())
    }

    pub fn exponent_params(&self) -> Result<LogHolderParams> {
        let e = self.exponent;
        Ok(LogHolderParams::new(e.p_lo, e.p_hi, e.p_infinity)?)
    }

    /// The box `[-1, 1)` or `[-1, 1)^2` discretized for size `n`.
    pub fn grid(&self, n: usize) -> Result<GridBox> {
        Ok(match self.kernel {
            KernelChoice::Hilbert => GridBox::interval(-1.0, 1.0, n)?,
            _ => {
                let side = 1usize << (n.trailing_zeros() / 2);
                GridBox::square(-1.0, 1.0, side)?
            }
        })
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Ok(match self.kernel {
            KernelChoice::Hilbert => hilbert_kernel(),
            KernelChoice::Riesz1 => riesz_kernel(1, 256)?,
            KernelChoice::Riesz2 => riesz_kernel(2, 256)?,
        })
    }

    pub fn maximal(&self) -> MaximalConfig {
        match self.sides {
            SideChoice::All => MaximalConfig::all(),
            SideChoice::Dyadic => MaximalConfig::dyadic(),
        }
    }

    /// Independent seed for trial `index` of stream `stream`, drawn from a
    /// separate ChaCha stream of the master seed.
    pub fn trial_seed(&self, stream: u64, index: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((stream << 32) | index as u64);
        rng.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            ExperimentConfig {
                trials: 0,
                ..Default::default()
            },
            ExperimentConfig {
                sizes: vec![100],
                ..Default::default()
            },
            ExperimentConfig {
                sizes: vec![16],
                ..Default::default()
            },
            ExperimentConfig {
                sizes: vec![1 << 15],
                ..Default::default()
            },
            ExperimentConfig {
                deltas: vec![1.0],
                ..Default::default()
            },
            ExperimentConfig {
                lambdas: vec![0.0],
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn square_grids_for_planar_kernels() {
        let cfg = ExperimentConfig {
            kernel: KernelChoice::Riesz1,
            ..Default::default()
        };
        assert_eq!(cfg.grid(1024).unwrap().cells(), &[32, 32]);
        assert_eq!(cfg.grid(512).unwrap().cells(), &[16, 16]);
    }

    #[test]
    fn trial_seeds_differ() {
        let cfg = ExperimentConfig::default();
        assert_ne!(cfg.trial_seed(0, 0), cfg.trial_seed(0, 1));
        assert_ne!(cfg.trial_seed(0, 0), cfg.trial_seed(1, 0));
        assert_eq!(cfg.trial_seed(3, 7), cfg.trial_seed(3, 7));
    }

    #[test]
    fn json_fills_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"seed": 7, "kernel": "riesz2"}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.kernel, KernelChoice::Riesz2);
        assert_eq!(cfg.trials, 200);
    }
}
