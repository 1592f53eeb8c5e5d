use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

/// Permittivity of free space, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Relative permittivity.
    pub k: f64,
    /// Thickness in meters.
    pub thickness: f64,
}

/// Gate dielectric built from layers stacked in series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DielectricStack {
    layers: Vec<Layer>,
}

impl DielectricStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(ModelError::InvalidStack("stack has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if !(l.k > 0.0 && l.k.is_finite()) {
                return Err(ModelError::InvalidStack(format!("layer {i}: permittivity {} must be positive", l.k)));
            }
            if !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return Err(ModelError::InvalidStack(format!("layer {i}: thickness {} must be positive", l.thickness)));
            }
        }
        Ok(Self { layers })
    }

    /// High-k nitrile rubber (k = 25, 320 nm) under a low-k SBS passivation
    /// layer (k = 4, 50 nm).
    pub fn nbr_sbs() -> Self {
        Self { layers: vec![Layer { k: 25.0, thickness: 320e-9 }, Layer { k: 4.0, thickness: 50e-9 }] }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Areal capacitance in F/m²: ε₀ / Σ(tᵢ/kᵢ).
    pub fn series_capacitance(&self) -> f64 {
        let electrical_thickness: f64 = self.layers.iter().map(|l| l.thickness / l.k).sum();
        VACUUM_PERMITTIVITY / electrical_thickness
    }
}

/// Validates the layers, then combines them in series.
pub fn series_capacitance(layers: &[Layer]) -> Result<f64> {
    Ok(DielectricStack::new(layers.to_vec())?.series_capacitance())
}
