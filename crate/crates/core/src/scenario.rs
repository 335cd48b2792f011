//! Experiment description: the TOML config format, validation and the
//! initial state it describes.
//!
//! ```toml
//! [grid]
//! nx = 100
//! ny = 100
//! h = 0.1
//!
//! [[food]]
//! center = [5.0, 8.0]
//! radius = 0.5
//! amount = 2.0
//! ```
//!
//! Every other section is optional and falls back to the defaults of the
//! corresponding Rust type. Unknown keys are rejected.

use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::grid::{total_mass, Field2D, Grid, GridError, Point};
use crate::model::{
    nest_field, normalized_weight, topography, ModelError, ModelParams, SimState, StaticFields,
    Topography,
};
use crate::stepper::cfl_limits;

/// The bundled two-source reference experiment.
pub const TWO_SOURCES_TOML: &str = include_str!("../scenarios/two_sources.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("type mismatch at line {line}: {message}")]
    TypeMismatch { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("nest resolves to zero cells (radius {radius} at ({x}, {y}) misses every cell center)")]
    EmptyNest { radius: f64, x: f64, y: f64 },
    #[error("food source {index} resolves to zero cells")]
    EmptyFood { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NestSpec {
    /// Defaults to the domain center.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Point>,
    pub radius: f64,
}

impl Default for NestSpec {
    fn default() -> Self {
        NestSpec {
            center: None,
            radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoodSource {
    pub center: Point,
    pub radius: f64,
    /// Total food mass in the disk.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub dt: f64,
    pub steps: u64,
    pub snapshot_every: u64,
    pub timeseries_every: u64,
    pub out_dir: String,
    /// End the run once every source is depleted and its trail has faded.
    pub stop_when_faded: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            dt: 0.0005,
            steps: 1000,
            snapshot_every: 1000,
            timeseries_every: 100,
            out_dir: "out".to_string(),
            stop_when_faded: false,
        }
    }
}

/// Initial foraging-ant density.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialU {
    #[default]
    Empty,
    Uniform(f64),
}

impl Serialize for InitialU {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            InitialU::Empty => s.serialize_str("empty"),
            InitialU::Uniform(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for InitialU {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = InitialU;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"empty\" or a number")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<InitialU, E> {
                Ok(InitialU::Uniform(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<InitialU, E> {
                Ok(InitialU::Uniform(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<InitialU, E> {
                Ok(InitialU::Uniform(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<InitialU, E> {
                match v {
                    "empty" => Ok(InitialU::Empty),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub u: InitialU,
}

/// Trail and depletion thresholds used by event detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EventSpec {
    pub theta_form: f64,
    pub theta_fade: f64,
    pub depletion_fraction: f64,
    pub trail_samples: usize,
}

impl Default for EventSpec {
    fn default() -> Self {
        EventSpec {
            theta_form: 0.03,
            theta_fade: 0.002,
            depletion_fraction: 0.01,
            trail_samples: 64,
        }
    }
}

/// Fixed grayscale ranges for snapshot images; missing ranges are taken
/// from the first snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_range: Option<[f64; 2]>,
}

impl RenderSpec {
    pub fn range(&self, field: &str) -> Option<[f64; 2]> {
        match field {
            "u" => self.u_range,
            "w" => self.w_range,
            "v" => self.v_range,
            "c" => self.c_range,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: GridSpec,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub nest: NestSpec,
    #[serde(default)]
    pub topography: Topography,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub events: EventSpec,
    #[serde(default)]
    pub render: RenderSpec,
    #[serde(default)]
    pub food: Vec<FoodSource>,
}

impl Scenario {
    pub fn grid(&self) -> Result<Grid, GridError> {
        Grid::new(self.grid.nx, self.grid.ny, self.grid.h)
    }

    pub fn nest_center(&self) -> Point {
        self.nest.center.unwrap_or(Point::new(
            0.5 * self.grid.nx as f64 * self.grid.h,
            0.5 * self.grid.ny as f64 * self.grid.h,
        ))
    }

    /// The bundled two-source experiment at its reference resolution.
    pub fn two_sources() -> Scenario {
        parse_config(TWO_SOURCES_TOML).expect("bundled scenario parses")
    }

    /// Same physical setup on an `factor`-times coarser grid: same domain,
    /// same simulated time, new time step `dt`. Output cadences keep their
    /// spacing in simulated time.
    pub fn coarsened(&self, factor: usize, dt: f64) -> Scenario {
        let mut s = self.clone();
        s.grid.nx /= factor;
        s.grid.ny /= factor;
        s.grid.h *= factor as f64;
        let ratio = self.run.dt / dt;
        s.run.dt = dt;
        s.run.steps = (self.run.steps as f64 * ratio).round() as u64;
        let rescale = |every: u64| ((every as f64) * ratio).round().max(1.0) as u64;
        if self.run.snapshot_every > 0 {
            s.run.snapshot_every = rescale(self.run.snapshot_every);
        }
        if self.run.timeseries_every > 0 {
            s.run.timeseries_every = rescale(self.run.timeseries_every);
        }
        s
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }
}

fn line_of(text: &str, span: Option<std::ops::Range<usize>>) -> usize {
    span.map(|r| text[..r.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0)
}

fn backticked(message: &str, after: &str) -> Option<String> {
    let rest = &message[message.find(after)? + after.len()..];
    let start = rest.find('`')? + 1;
    let len = rest[start..].find('`')?;
    Some(rest[start..start + len].to_string())
}

/// Parses a scenario config. Omitted optional keys take their defaults.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    toml::from_str::<Scenario>(text).map_err(|e| {
        let message = e.message().to_string();
        let line = line_of(text, e.span());
        if let Some(key) = backticked(&message, "unknown field") {
            ConfigError::UnknownKey { key, line }
        } else if let Some(key) = backticked(&message, "missing field") {
            ConfigError::MissingKey { key }
        } else if message.contains("invalid type") || message.contains("invalid value") {
            ConfigError::TypeMismatch { line, message }
        } else {
            ConfigError::Syntax { line, message }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

impl Violation {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Violation {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

fn disk_inside(grid: &Grid, center: Point, radius: f64) -> bool {
    grid.contains(Point::new(center.x - radius, center.y - radius))
        && grid.contains(Point::new(center.x + radius, center.y + radius))
}

/// Lists every broken invariant; empty means the scenario can run.
pub fn validate(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let grid = match s.grid() {
        Ok(g) => Some(g),
        Err(e) => {
            out.push(Violation::new("grid.invalid", e.to_string()));
            None
        }
    };

    for (name, value) in s.params.violations() {
        out.push(Violation::new(
            "params.out_of_range",
            format!("{name} = {value} is outside its admissible range"),
        ));
    }

    let nest_center = s.nest_center();
    if !(s.nest.radius > 0.0 && s.nest.radius.is_finite()) {
        out.push(Violation::new(
            "nest.bad_radius",
            format!("nest radius must be positive, got {}", s.nest.radius),
        ));
    } else if let Some(g) = &grid {
        if !disk_inside(g, nest_center, s.nest.radius) {
            out.push(Violation::new(
                "nest.out_of_domain",
                format!(
                    "nest disk at ({}, {}) radius {} leaves the domain",
                    nest_center.x, nest_center.y, s.nest.radius
                ),
            ));
        } else if disk_cells(g, nest_center, s.nest.radius).is_empty() {
            out.push(Violation::new(
                "nest.empty",
                "nest disk contains no cell center",
            ));
        }
    }

    for (k, food) in s.food.iter().enumerate() {
        if !(food.radius > 0.0 && food.radius.is_finite()) {
            out.push(Violation::new(
                "food.bad_radius",
                format!("food[{k}] radius must be positive, got {}", food.radius),
            ));
            continue;
        }
        if !(food.amount > 0.0 && food.amount.is_finite()) {
            out.push(Violation::new(
                "food.bad_amount",
                format!("food[{k}] amount must be positive, got {}", food.amount),
            ));
        }
        if let Some(g) = &grid {
            if !disk_inside(g, food.center, food.radius) {
                out.push(Violation::new(
                    "food.out_of_domain",
                    format!(
                        "food[{k}] disk at ({}, {}) radius {} leaves the domain",
                        food.center.x, food.center.y, food.radius
                    ),
                ));
            } else if disk_cells(g, food.center, food.radius).is_empty() {
                out.push(Violation::new(
                    "food.empty",
                    format!("food[{k}] disk contains no cell center"),
                ));
            }
        }
    }
    for a in 0..s.food.len() {
        for b in a + 1..s.food.len() {
            let (fa, fb) = (&s.food[a], &s.food[b]);
            if fa.center.distance(fb.center) < fa.radius + fb.radius {
                out.push(Violation::new(
                    "food.overlap",
                    format!("food[{a}] and food[{b}] overlap"),
                ));
            }
        }
    }

    if let Err(e) = s.topography.validate() {
        out.push(Violation::new("topography.invalid", e.to_string()));
    }

    let run = &s.run;
    if !(run.dt > 0.0 && run.dt.is_finite()) {
        out.push(Violation::new(
            "run.bad_dt",
            format!("dt must be positive, got {}", run.dt),
        ));
    }

    if let InitialU::Uniform(u0) = s.initial.u {
        if !(u0 >= 0.0 && u0.is_finite()) {
            out.push(Violation::new(
                "initial.bad_u",
                format!("initial u must be nonnegative, got {u0}"),
            ));
        }
    }

    let ev = &s.events;
    if !(ev.theta_fade <= ev.theta_form && ev.theta_fade >= 0.0) {
        out.push(Violation::new(
            "events.bad_thresholds",
            format!(
                "need 0 <= theta_fade <= theta_form, got {} and {}",
                ev.theta_fade, ev.theta_form
            ),
        ));
    }
    if !(ev.depletion_fraction > 0.0 && ev.depletion_fraction < 1.0) {
        out.push(Violation::new(
            "events.bad_depletion_fraction",
            format!(
                "depletion_fraction must lie in (0, 1), got {}",
                ev.depletion_fraction
            ),
        ));
    }
    if ev.trail_samples < 2 {
        out.push(Violation::new(
            "events.bad_trail_samples",
            format!("trail_samples must be at least 2, got {}", ev.trail_samples),
        ));
    }
    for field in ["u", "w", "v", "c"] {
        if let Some([lo, hi]) = s.render.range(field) {
            if hi.is_nan() || lo.is_nan() || hi <= lo {
                out.push(Violation::new(
                    "render.bad_range",
                    format!("{field}_range needs hi > lo, got [{lo}, {hi}]"),
                ));
            }
        }
    }

    // the stability check needs a buildable initial state
    if out.is_empty() {
        match build_initial_state(s) {
            Ok(state) => {
                let limits = cfl_limits(&state, &s.params);
                if run.dt > limits.dt_max {
                    out.push(Violation::new(
                        "run.dt_unstable",
                        format!("dt = {} exceeds dt_max = {}", run.dt, limits.dt_max),
                    ));
                }
            }
            Err(e) => out.push(Violation::new("build.failed", e.to_string())),
        }
    }
    out
}

/// Cells whose centers lie in the closed disk.
pub fn disk_cells(grid: &Grid, center: Point, radius: f64) -> Vec<(usize, usize)> {
    grid.cells()
        .filter(|&(i, j)| grid.cell_center(i, j).distance(center) <= radius)
        .collect()
}

/// Builds the state at `t = 0`: foraging ants per `[initial]`, no returning
/// ants or pheromone, and each food disk holding exactly its amount.
pub fn build_initial_state(s: &Scenario) -> Result<SimState, BuildError> {
    let grid = s.grid()?;
    let h2 = grid.h() * grid.h();

    let u = match s.initial.u {
        InitialU::Empty => Field2D::zeros(&grid),
        InitialU::Uniform(u0) => Field2D::constant(&grid, u0),
    };

    let mut c = Field2D::zeros(&grid);
    for (index, food) in s.food.iter().enumerate() {
        let cells = disk_cells(&grid, food.center, food.radius);
        if cells.is_empty() {
            return Err(BuildError::EmptyFood { index });
        }
        let density = food.amount / (cells.len() as f64 * h2);
        for (i, j) in cells {
            c.set(i, j, c.get(i, j) + density);
        }
    }

    s.topography.validate()?;
    let z = Field2D::from_fn(&grid, |p| topography(&s.topography, p).unwrap_or(0.0));

    let center = s.nest_center();
    let nest = disk_cells(&grid, center, s.nest.radius);
    if nest.is_empty() {
        return Err(BuildError::EmptyNest {
            radius: s.nest.radius,
            x: center.x,
            y: center.y,
        });
    }
    let mut nest_mask = Field2D::zeros(&grid);
    for (i, j) in nest {
        nest_mask.set(i, j, 1.0);
    }
    let nest_weight = normalized_weight(&nest_mask);
    debug_assert!((total_mass(&nest_weight) - 1.0).abs() < 1e-12);

    let eps = s.params.eps_nest;
    let vfield_x = Field2D::from_fn(&grid, |p| nest_field(p, center, eps).0);
    let vfield_y = Field2D::from_fn(&grid, |p| nest_field(p, center, eps).1);

    let zero = Field2D::zeros(&grid);
    Ok(SimState::new(
        0.0,
        u,
        zero.clone(),
        zero,
        c,
        Arc::new(StaticFields {
            z,
            nest_mask,
            nest_weight,
            vfield_x,
            vfield_y,
        }),
    ))
}
