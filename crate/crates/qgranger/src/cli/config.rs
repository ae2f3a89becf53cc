use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{PriorBounds, SMethod};
use crate::error::{Error, Result};
use crate::quantize::QuantizerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Binary,
    Nonuniform,
    Midtread,
    Highres,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsMode {
    Grid,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub mode: BoundsMode,
    pub grid_density: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig { mode: BoundsMode::Grid, grid_density: 41 }
    }
}

impl BoundsConfig {
    pub fn method(&self) -> SMethod {
        match self.mode {
            BoundsMode::Grid => SMethod::Grid { density: self.grid_density },
            BoundsMode::Analytic => SMethod::Analytic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub causal: bool,
    pub n: usize,
    pub burn_in: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { causal: true, n: 1000, burn_in: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub max_bits: u32,
    pub seeds: usize,
    /// Granular regions of the saturated quantizers.
    pub x_range: (f64, f64),
    pub z_range: (f64, f64),
    /// Total width of the standard-deviation brackets around the model values.
    pub prior_width: f64,
    pub rho_xz_max: f64,
    pub rho_zz_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_bits: 4,
            seeds: 20,
            x_range: (-3.0, 3.0),
            z_range: (-5.0, 5.0),
            prior_width: 0.2,
            rho_xz_max: 0.5,
            rho_zz_max: 0.7,
        }
    }
}

/// Everything a run needs. Loaded from JSON; command-line flags override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub mode: Mode,
    pub m: usize,
    pub q: Option<usize>,
    pub q_range: Option<(usize, usize)>,
    pub priors: Option<PriorBounds>,
    pub quantizer_x: Option<QuantizerSpec>,
    pub quantizer_z: Option<QuantizerSpec>,
    pub theta: f64,
    /// Defaults to true in binary mode and false elsewhere.
    pub zero_mean: Option<bool>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub bounds: BoundsConfig,
    pub seed: u64,
    pub emit_matrices: bool,
    pub simulate: SimulateConfig,
    pub sweep: SweepConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            mode: Mode::Binary,
            m: 2,
            q: None,
            q_range: None,
            priors: None,
            quantizer_x: None,
            quantizer_z: None,
            theta: 0.1,
            zero_mean: None,
            input: None,
            output: None,
            bounds: BoundsConfig::default(),
            seed: 1,
            emit_matrices: false,
            simulate: SimulateConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn zero_mean(&self) -> bool {
        self.zero_mean.unwrap_or(self.mode == Mode::Binary)
    }

    /// Depths to scan. An explicit `q` wins, then `q_range`, then
    /// `m..=min(3m, n/4)`.
    pub fn depths(&self, n: usize) -> Result<Vec<usize>> {
        let (lo, hi) = match (self.q, self.q_range) {
            (Some(q), _) => (q, q),
            (None, Some(r)) => r,
            (None, None) => (self.m, (3 * self.m).min(n / 4)),
        };
        if lo < self.m || hi < lo {
            return Err(Error::InvalidArgument(format!("q range [{lo}, {hi}] must satisfy m = {} <= lo <= hi", self.m)));
        }
        if hi > n / 4 {
            return Err(Error::LagTooLarge { lag: hi as i64, limit: n / 4 });
        }
        Ok((lo..=hi).collect())
    }

    pub fn require_priors(&self) -> Result<PriorBounds> {
        let p = self.priors.ok_or_else(|| Error::InvalidArgument(format!("mode {:?} needs priors in the config", self.mode)))?;
        p.validate()?;
        Ok(p)
    }

    pub fn quantizers(&self) -> Result<(QuantizerSpec, QuantizerSpec)> {
        let default = || match self.mode {
            Mode::Binary => Ok(QuantizerSpec::Binary { threshold: 0.0 }),
            _ => Err(Error::InvalidArgument(format!("mode {:?} needs quantizer_x and quantizer_z", self.mode))),
        };
        let x = match &self.quantizer_x {
            Some(s) => s.clone(),
            None => default()?,
        };
        let z = match &self.quantizer_z {
            Some(s) => s.clone(),
            None => default()?,
        };
        x.validate()?;
        z.validate()?;
        let ok = match self.mode {
            Mode::Binary => matches!((&x, &z), (QuantizerSpec::Binary { .. }, QuantizerSpec::Binary { .. })),
            Mode::Nonuniform => x.cells().is_some() && z.cells().is_some(),
            Mode::Midtread | Mode::Highres => {
                matches!((&x, &z), (QuantizerSpec::Uniform { .. }, QuantizerSpec::Uniform { .. }))
            }
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("quantizer kinds do not match mode {:?}", self.mode)));
        }
        Ok((x, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let c: AnalysisConfig = serde_json::from_str(
            r#"{"mode":"nonuniform","m":2,"q":6,
                "priors":{"rho_xz_max":0.5,"rho_zz_max":0.7,"sigma_x_lo":2.4,"sigma_x_hi":2.6,
                          "sigma_z_lo":2.1,"sigma_z_hi":2.3,"gamma_xz_max":3.0},
                "quantizer_x":{"kind":"finite","thresholds":[0.0],"levels":[-1.0,1.0]},
                "quantizer_z":{"kind":"binary","threshold":0.0},
                "bounds":{"mode":"analytic","grid_density":21}}"#,
        )
        .unwrap();
        assert_eq!(c.mode, Mode::Nonuniform);
        assert_eq!(c.bounds.method(), SMethod::Analytic);
        assert!(!c.zero_mean());
        assert_eq!(c.depths(1000).unwrap(), vec![6]);
        assert!(serde_json::from_str::<AnalysisConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn default_depths_and_quarter_rule() {
        let c = AnalysisConfig::default();
        assert!(c.zero_mean());
        assert_eq!(c.depths(1000).unwrap(), vec![2, 3, 4, 5, 6]);
        assert_eq!(c.depths(12).unwrap(), vec![2, 3]);
        let c = AnalysisConfig { q: Some(30), ..Default::default() };
        assert!(matches!(c.depths(100), Err(Error::LagTooLarge { .. })));
    }

    #[test]
    fn mode_spec_mismatch() {
        let c = AnalysisConfig {
            mode: Mode::Midtread,
            quantizer_x: Some(QuantizerSpec::Uniform { delta: 0.1 }),
            quantizer_z: Some(QuantizerSpec::Binary { threshold: 0.0 }),
            ..Default::default()
        };
        assert!(c.quantizers().is_err());
        assert!(AnalysisConfig { mode: Mode::Nonuniform, ..Default::default() }.quantizers().is_err());
    }
}
