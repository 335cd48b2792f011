//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use antforage::model::{normalized_weight, StaticFields};
use antforage::{Field2D, Grid, ModelParams, SimState};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform values in `[lo, hi)`, with each cell zeroed with probability
/// `zero_prob`.
pub fn random_field(grid: &Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64, zero_prob: f64) -> Field2D {
    let values = (0..grid.len())
        .map(|_| {
            if zero_prob > 0.0 && rng.gen_bool(zero_prob) {
                0.0
            } else {
                rng.gen_range(lo..hi)
            }
        })
        .collect();
    Field2D::from_values(grid, values).unwrap()
}

/// Magnitudes spread over several decades, which stresses the step bounds
/// harder than a uniform draw.
pub fn log_uniform_field(grid: &Grid, rng: &mut ChaCha8Rng, decades: f64, zero_prob: f64) -> Field2D {
    let values = (0..grid.len())
        .map(|_| {
            if rng.gen_bool(zero_prob) {
                0.0
            } else {
                10f64.powf(rng.gen_range(-decades..1.0))
            }
        })
        .collect();
    Field2D::from_values(grid, values).unwrap()
}

/// Random terrain, a random homing field of at most unit length, and a
/// nest made of the given cells.
pub fn random_statics(grid: &Grid, rng: &mut ChaCha8Rng, nest: &[(usize, usize)], terrain: f64) -> StaticFields {
    let mut mask = Field2D::zeros(grid);
    for &(i, j) in nest {
        mask.set(i, j, 1.0);
    }
    let z = random_field(grid, rng, 0.0, terrain.max(f64::MIN_POSITIVE), 0.0);
    let mut vx = Field2D::zeros(grid);
    let mut vy = Field2D::zeros(grid);
    for (i, j) in grid.cells() {
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let len: f64 = rng.gen_range(0.0..1.0);
        vx.set(i, j, len * angle.cos());
        vy.set(i, j, len * angle.sin());
    }
    StaticFields {
        z,
        nest_weight: normalized_weight(&mask),
        nest_mask: mask,
        vfield_x: vx,
        vfield_y: vy,
    }
}

pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams {
        alpha1: rng.gen_range(1e-3..2.0),
        alpha2: rng.gen_range(0.0..5.0),
        alpha3: rng.gen_range(1e-3..1.0),
        alpha4: rng.gen_range(0.0..2.0),
        alpha5: rng.gen_range(0.0..10.0),
        gamma: rng.gen_range(0.0..2.0),
        u_max: if rng.gen_bool(0.5) {
            None
        } else {
            Some(rng.gen_range(0.5..10.0))
        },
        m0: rng.gen_range(0.0..5.0),
        t_inflow: rng.gen_range(0.0..2.0),
        eps_nest: 0.3,
    }
}

/// Sum of `|x|`, for relative tolerances.
pub fn abs_sum(values: &[f64]) -> f64 {
    values.iter().map(|x| x.abs()).sum()
}

pub fn min_of(state: &SimState) -> f64 {
    [&state.u, &state.w, &state.v, &state.c]
        .iter()
        .map(|f| f.min())
        .fold(f64::INFINITY, f64::min)
}
