//! Diffusion interpolation with barriers.
//!
//! Features are rasterized as unit point masses per affiliation, spread by
//! an explicit heat iteration that cannot cross the barrier, and normalized
//! per cell into affiliation probabilities. The arg-max of those
//! probabilities is the zone map.

mod grid;
mod render;
mod solver;
mod zones;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{rasterize, BarrierPolygon, GridSpec, DEFAULT_CELL_CAP};
pub use render::{render_zone_png, world_file, zone_color, zone_rgba, LegendEntry, ZoneMetadata, BAND_THRESHOLDS};
pub use solver::{deposit, diffuse, DepositWarning, MaskedField};
pub use zones::{interpolate_zones, ZoneRaster, TIE_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffusionError {
    #[error("invalid barrier: {0}")]
    InvalidBarrier(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("grid of {cells} cells exceeds the cap of {cap}")]
    CellCapExceeded { cells: u64, cap: usize },
    #[error("invalid diffusion parameters: {0}")]
    InvalidParams(String),
    #[error("no features to interpolate")]
    NoFeatures,
}

pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_CELL_M: f64 = 250.0;
pub const DEFAULT_BANDWIDTH_M: f64 = 2000.0;
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Stencil weight, stable for `0 < alpha <= 0.25`.
    pub alpha: f64,
    pub steps: usize,
    /// When set, `steps` is derived so that the implied kernel has this
    /// standard deviation.
    pub bandwidth_m: Option<f64>,
    /// Floor on the per-cell total below which a cell is NoData.
    pub epsilon: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        DiffusionParams {
            alpha: DEFAULT_ALPHA,
            steps: 0,
            bandwidth_m: Some(DEFAULT_BANDWIDTH_M),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl DiffusionParams {
    pub fn validate(&self) -> Result<(), DiffusionError> {
        if !(self.alpha > 0.0 && self.alpha <= 0.25) {
            return Err(DiffusionError::InvalidParams(format!(
                "alpha {} outside the stability range (0, 0.25]",
                self.alpha
            )));
        }
        if let Some(b) = self.bandwidth_m {
            if !(b.is_finite() && b > 0.0) {
                return Err(DiffusionError::InvalidParams(format!("bandwidth {b} must be positive")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(DiffusionError::InvalidParams(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `round(bandwidth^2 / (2 alpha cell^2))` when a bandwidth is set,
    /// otherwise `steps`. Each step adds `2 alpha cell^2` of variance per axis.
    pub fn resolved_steps(&self, cell_size_m: f64) -> usize {
        match self.bandwidth_m {
            Some(b) => (b * b / (2.0 * self.alpha * cell_size_m * cell_size_m)).round() as usize,
            None => self.steps,
        }
    }
}
