//! Pointwise source terms.

use crate::grid::{laplacian, Field2D};
use crate::model::{inflow_rate, ModelParams, SimState};

/// Rate at which foraging ants meeting food turn into returning ants.
pub fn conversion(u: &Field2D, c: &Field2D) -> Field2D {
    u.zip_map(c, |a, b| a * b)
}

/// Nest exchange over the extended nest.
///
/// Returning ants unload at rate `α₅` inside the nest mask and re-emerge as
/// foraging ants in the same cell; new ants enter with total rate
/// `inflow_rate(t)`, spread by the normalized nest weight.
pub fn nest_exchange(
    u: &Field2D,
    w: &Field2D,
    state: &SimState,
    params: &ModelParams,
    t: f64,
) -> (Field2D, Field2D) {
    debug_assert_eq!(u.values().len(), w.values().len());
    let mask = state.nest_mask();
    let weight = state.nest_weight();
    let inflow = inflow_rate(t, params);
    let a5 = params.alpha5;
    let unload = w.zip_map(mask, |wv, m| a5 * wv * m);
    let du = unload.zip_map(weight, |un, wt| un + inflow * wt);
    let dw = unload.map(|un| -un);
    (du, dw)
}

/// Right-hand side of the pheromone equation: deposition, evaporation and
/// diffusion, `w - v + Δv`.
pub fn pheromone_rhs(v: &Field2D, w: &Field2D) -> Field2D {
    let mut out = laplacian(v);
    for ((o, &wv), &vv) in out.values_mut().iter_mut().zip(w.values()).zip(v.values()) {
        *o += wv - vv;
    }
    out
}

/// Exact solution of `∂t c = -α₄ u c` over `dt` with `u` frozen.
pub fn deplete_food(c: &Field2D, u: &Field2D, params: &ModelParams, dt: f64) -> Field2D {
    let a4 = params.alpha4;
    c.zip_map(u, |cv, uv| {
        if cv == 0.0 || uv == 0.0 {
            cv
        } else {
            cv * (-a4 * uv * dt).exp()
        }
    })
}
