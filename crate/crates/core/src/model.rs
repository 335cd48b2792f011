//! Model coefficients, simulation state and the closed-form model pieces:
//! the overcrowding limiter, the nest-bound homing field, topography presets
//! and the nest inflow schedule.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Field2D, Grid, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("gaussian_hill width must be positive, got sigma = {0}")]
    NonPositiveSigma(f64),
}

/// Coefficients of the complete foraging model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Diffusivity of foraging ants.
    pub alpha1: f64,
    /// Drift strength, shared by pheromone taxis and nest-bound transport.
    pub alpha2: f64,
    /// Diffusivity of returning ants.
    pub alpha3: f64,
    /// Food depletion rate.
    pub alpha4: f64,
    /// Unloading rate of returning ants inside the nest.
    pub alpha5: f64,
    /// Pheromone suppression of foraging-ant diffusion.
    pub gamma: f64,
    /// Density cap of the limiter; `None` disables it.
    #[serde(with = "density_cap")]
    pub u_max: Option<f64>,
    /// Total nest outflow rate (ants per unit time).
    pub m0: f64,
    /// Inflow cutoff time.
    pub t_inflow: f64,
    /// Regularization radius of the homing field around the nest center.
    pub eps_nest: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha1: 0.3,
            alpha2: 1.0,
            alpha3: 0.01,
            alpha4: 0.25,
            alpha5: 5.0,
            gamma: 0.5,
            u_max: Some(10.0),
            m0: 1.0,
            t_inflow: 40.0,
            eps_nest: 0.3,
        }
    }
}

impl ModelParams {
    /// Names of coefficients that break their sign constraints.
    pub fn violations(&self) -> Vec<(&'static str, f64)> {
        let mut bad = Vec::new();
        let mut need = |name, value: f64, ok: bool| {
            if !ok || !value.is_finite() {
                bad.push((name, value));
            }
        };
        need("alpha1", self.alpha1, self.alpha1 > 0.0);
        need("alpha2", self.alpha2, self.alpha2 >= 0.0);
        need("alpha3", self.alpha3, self.alpha3 > 0.0);
        need("alpha4", self.alpha4, self.alpha4 >= 0.0);
        need("alpha5", self.alpha5, self.alpha5 >= 0.0);
        need("gamma", self.gamma, self.gamma >= 0.0);
        need("m0", self.m0, self.m0 >= 0.0);
        need("t_inflow", self.t_inflow, self.t_inflow >= 0.0);
        need("eps_nest", self.eps_nest, self.eps_nest > 0.0);
        if let Some(cap) = self.u_max {
            need("u_max", cap, cap > 0.0);
        }
        bad
    }
}

/// `u_max` is either a positive number or the string `"inf"`.
mod density_cap {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(cap: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match cap {
            Some(v) => s.serialize_f64(*v),
            None => s.serialize_str("inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        struct CapVisitor;
        impl Visitor<'_> for CapVisitor {
            type Value = Option<f64>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(if v.is_infinite() && v > 0.0 { None } else { Some(v) })
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(Some(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(Some(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                match v {
                    "inf" | "infinity" | "unbounded" => Ok(None),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(CapVisitor)
    }
}

/// Volume-filling limiter `max(0, 1 - d/u_max)`; 1 when uncapped.
#[inline]
pub fn beta(density: f64, params: &ModelParams) -> f64 {
    match params.u_max {
        Some(cap) => (1.0 - density / cap).max(0.0),
        None => 1.0,
    }
}

/// Unit vector from `p` toward the nest, ramped down linearly inside `eps`.
pub fn nest_field(p: Point, nest_center: Point, eps: f64) -> (f64, f64) {
    let dx = nest_center.x - p.x;
    let dy = nest_center.y - p.y;
    let dist = dx.hypot(dy);
    let scale = if dist >= eps { 1.0 / dist } else { 1.0 / eps };
    (dx * scale, dy * scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topography {
    #[default]
    Flat,
    GaussianHill {
        center: Point,
        amplitude: f64,
        sigma: f64,
    },
}

impl Topography {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Topography::Flat => Ok(()),
            Topography::GaussianHill { sigma, .. } if sigma.is_nan() || sigma <= 0.0 => {
                Err(ModelError::NonPositiveSigma(sigma))
            }
            Topography::GaussianHill { .. } => Ok(()),
        }
    }
}

/// Terrain height of a preset at `p`.
pub fn topography(preset: &Topography, p: Point) -> Result<f64, ModelError> {
    preset.validate()?;
    Ok(match *preset {
        Topography::Flat => 0.0,
        Topography::GaussianHill {
            center,
            amplitude,
            sigma,
        } => {
            let r2 = (p.x - center.x).powi(2) + (p.y - center.y).powi(2);
            amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
        }
    })
}

/// Total ant emission rate at time `t`: `m0` on `[0, t_inflow)`, else 0.
#[inline]
pub fn inflow_rate(t: f64, params: &ModelParams) -> f64 {
    if t < params.t_inflow {
        params.m0
    } else {
        0.0
    }
}

/// Fields that never change after initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticFields {
    pub z: Field2D,
    pub nest_mask: Field2D,
    pub nest_weight: Field2D,
    pub vfield_x: Field2D,
    pub vfield_y: Field2D,
}

/// Running totals that the dynamics do not feed back on.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Ledger {
    /// Cumulative `dt * inflow_rate(t)` over all steps taken.
    pub inflow: f64,
    /// Cumulative mass of returning ants unloaded inside the nest.
    pub unloaded: f64,
}

/// Complete solver state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Foraging ants.
    pub u: Field2D,
    /// Returning ants.
    pub w: Field2D,
    /// Pheromone.
    pub v: Field2D,
    /// Food.
    pub c: Field2D,
    pub ledger: Ledger,
    statics: Arc<StaticFields>,
}

impl SimState {
    pub fn new(
        t: f64,
        u: Field2D,
        w: Field2D,
        v: Field2D,
        c: Field2D,
        statics: Arc<StaticFields>,
    ) -> Self {
        SimState {
            t,
            u,
            w,
            v,
            c,
            ledger: Ledger::default(),
            statics,
        }
    }

    /// Empty state on `grid`: flat terrain, no homing field and a nest made
    /// of the listed cells. Handy for tests and small experiments.
    pub fn empty(grid: &Grid, nest_cells: &[(usize, usize)]) -> Self {
        let mut mask = Field2D::zeros(grid);
        for &(i, j) in nest_cells {
            mask.set(i, j, 1.0);
        }
        let statics = StaticFields {
            z: Field2D::zeros(grid),
            nest_weight: normalized_weight(&mask),
            nest_mask: mask,
            vfield_x: Field2D::zeros(grid),
            vfield_y: Field2D::zeros(grid),
        };
        let zero = Field2D::zeros(grid);
        SimState::new(0.0, zero.clone(), zero.clone(), zero.clone(), zero, Arc::new(statics))
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn statics(&self) -> &Arc<StaticFields> {
        &self.statics
    }

    pub fn z(&self) -> &Field2D {
        &self.statics.z
    }

    pub fn nest_mask(&self) -> &Field2D {
        &self.statics.nest_mask
    }

    pub fn nest_weight(&self) -> &Field2D {
        &self.statics.nest_weight
    }

    pub fn vfield(&self) -> (&Field2D, &Field2D) {
        (&self.statics.vfield_x, &self.statics.vfield_y)
    }

    /// Replaces the static fields. Only meant for building states.
    pub fn with_statics(mut self, statics: StaticFields) -> Self {
        self.statics = Arc::new(statics);
        self
    }
}

/// Mask scaled so that its total mass is 1 (all zeros if the mask is empty).
pub fn normalized_weight(mask: &Field2D) -> Field2D {
    let mass = crate::grid::total_mass(mask);
    if mass > 0.0 {
        mask.map(|m| m / mass)
    } else {
        mask.clone()
    }
}

/// Explicit Euler step bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLimits {
    pub dt_diffusion: f64,
    /// `f64::INFINITY` when nothing moves by drift.
    pub dt_advection: f64,
    pub dt_reaction: f64,
    pub dt_max: f64,
}
