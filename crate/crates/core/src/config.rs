//! Experiment configuration shared by the command-line driver and tests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::Phantom;
use crate::quadrature::QuadratureSpec;
use crate::tensor::{IsotropicBackground, SpatialGrid};

pub const DEFAULT_R_SWEEP: [f64; 8] = [8.0, 11.0, 16.0, 22.0, 32.0, 45.0, 64.0, 90.0];
pub const DEFAULT_SMALL_SWEEP: [f64; 4] = [0.25, 0.5, 1.0, 1.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub lambda0: f64,
    pub mu0: f64,
    pub rho0: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            mu0: 1.0,
            rho0: 1.0,
        }
    }
}

impl Medium {
    pub fn background(&self, omega: f64) -> Result<IsotropicBackground> {
        IsotropicBackground::new(self.lambda0, self.mu0, self.rho0, omega)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub background: Medium,
    /// `[0]` for static data, two distinct positive values for the
    /// density-recovering run.
    pub omegas: Vec<f64>,
    /// Spatial output grid nodes per axis on the unit cube.
    pub spatial_n: usize,
    /// Frequency grid size per axis; integer modes `|m| ≤ n/2 − 1` are kept.
    pub freq_n: usize,
    pub phantom: Phantom,
    pub quadrature: QuadratureSpec,
    /// Large-parameter sweep, in units of `max(1, |(s, t)|)`.
    pub r_sweep: Vec<f64>,
    /// Short sweep used where the regressor is known exactly.
    pub small_sweep: Vec<f64>,
    /// Satellite offset for frequency differencing.
    pub satellite_h: f64,
    /// Nodes with `s` below this fraction of the frequency spacing are masked.
    pub s_min_factor: f64,
    /// Random points per family in the residual check.
    pub verify_points: usize,
    /// Random frequency nodes per family in the residual check.
    pub verify_nodes: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Perturbs the affine amplitude offset so the residual check must fail.
    pub tamper_affine: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            background: Medium::default(),
            omegas: vec![0.0],
            spatial_n: 16,
            freq_n: 16,
            phantom: Phantom::default_ti(),
            quadrature: QuadratureSpec::gauss(32),
            r_sweep: DEFAULT_R_SWEEP.to_vec(),
            small_sweep: DEFAULT_SMALL_SWEEP.to_vec(),
            satellite_h: 1e-2,
            s_min_factor: 0.25,
            verify_points: 1000,
            verify_nodes: 8,
            seed: 7,
            out_dir: PathBuf::from("out"),
            tamper_affine: false,
        }
    }
}

impl ExperimentConfig {
    /// Default run at the two frequencies `{1, 2}` with density bumps.
    pub fn two_frequency() -> Self {
        Self {
            omegas: vec![1.0, 2.0],
            phantom: Phantom::default_with_density(),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn grid(&self) -> SpatialGrid {
        SpatialGrid::unit_cube(self.spatial_n)
    }

    pub fn static_run(&self) -> bool {
        self.omegas == [0.0]
    }

    pub fn validate(&self) -> Result<()> {
        self.background.background(0.0)?;
        if self.omegas.is_empty() {
            return Err(Error::Config("omegas must not be empty".into()));
        }
        for (i, w) in self.omegas.iter().enumerate() {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::Config(format!("omega {w} must be finite and non-negative")));
            }
            if self.omegas[..i].contains(w) {
                return Err(Error::Config(format!("omega {w} is listed twice")));
            }
        }
        let two = self.omegas.len() == 2 && self.omegas.iter().all(|w| *w > 0.0);
        if !self.static_run() && !two {
            return Err(Error::Config(
                "omegas must be [0] or two distinct positive frequencies".into(),
            ));
        }
        if self.spatial_n < 2 {
            return Err(Error::Config("spatial_n must be at least 2".into()));
        }
        if self.freq_n < 8 {
            return Err(Error::Config("freq_n must be at least 8".into()));
        }
        self.quadrature.validate()?;
        if self.r_sweep.len() < 5 || self.r_sweep.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("r_sweep needs at least 5 positive values".into()));
        }
        if self.small_sweep.is_empty() || self.small_sweep.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("small_sweep needs positive values".into()));
        }
        if !(self.satellite_h > 0.0 && self.satellite_h < 0.5) {
            return Err(Error::Config("satellite_h must lie in (0, 0.5)".into()));
        }
        if !(self.s_min_factor > 0.0 && self.s_min_factor < 1.0) {
            return Err(Error::Config("s_min_factor must lie in (0, 1)".into()));
        }
        if !self.phantom.inside(&self.grid()) {
            return Err(Error::Config("phantom support leaves the unit cube".into()));
        }
        Ok(())
    }
}
