//! Face-flux assembly for the two ant equations.
//!
//! Diffusive "fluxes" here are the face values of `D ∂d` (the term inside
//! the divergence of the model), so they point up-gradient. Drift
//! velocities and upwind fluxes are physical: positive means material moves
//! right / up. The net transport flux of an ant species is therefore
//! `upwind - diffusive`, and `∂t d = -div(upwind - diffusive)`.

use crate::grid::{FaceFluxes, Field2D};
use crate::model::{beta, ModelParams, SimState};

/// `α₁ exp(-γ v_face) (u_R - u_L) / h` on interior faces, with `v_face` the
/// mean of the two adjacent cells.
pub fn diffusive_fluxes_u(u: &Field2D, v: &Field2D, params: &ModelParams) -> FaceFluxes {
    let g = *u.grid();
    let inv_h = 1.0 / g.h();
    let a1 = params.alpha1;
    let gamma = params.gamma;
    let coeff = |va: f64, vb: f64| {
        if gamma == 0.0 {
            a1
        } else {
            a1 * (-gamma * 0.5 * (va + vb)).exp()
        }
    };
    FaceFluxes::from_interior(
        &g,
        |i, j| coeff(v.get(i - 1, j), v.get(i, j)) * (u.get(i, j) - u.get(i - 1, j)) * inv_h,
        |i, j| coeff(v.get(i, j - 1), v.get(i, j)) * (u.get(i, j) - u.get(i, j - 1)) * inv_h,
    )
}

/// `α₃ (w_R - w_L) / h` on interior faces.
pub fn diffusive_fluxes_w(w: &Field2D, params: &ModelParams) -> FaceFluxes {
    let g = *w.grid();
    let k = params.alpha3 / g.h();
    FaceFluxes::from_interior(
        &g,
        |i, j| k * (w.get(i, j) - w.get(i - 1, j)),
        |i, j| k * (w.get(i, j) - w.get(i, j - 1)),
    )
}

/// Drift of foraging ants: up the pheromone gradient, down the terrain.
pub fn drift_velocity_u(v: &Field2D, z: &Field2D, params: &ModelParams) -> FaceFluxes {
    let g = *v.grid();
    let inv_h = 1.0 / g.h();
    let a2 = params.alpha2;
    FaceFluxes::from_interior(
        &g,
        |i, j| {
            a2 * (v.get(i, j) - v.get(i - 1, j)) * inv_h - (z.get(i, j) - z.get(i - 1, j)) * inv_h
        },
        |i, j| {
            a2 * (v.get(i, j) - v.get(i, j - 1)) * inv_h - (z.get(i, j) - z.get(i, j - 1)) * inv_h
        },
    )
}

/// Drift of returning ants: along the homing field, down the terrain.
pub fn drift_velocity_w(state: &SimState, params: &ModelParams) -> FaceFluxes {
    let g = *state.grid();
    let inv_h = 1.0 / g.h();
    let a2 = params.alpha2;
    let z = state.z();
    let (vx, vy) = state.vfield();
    FaceFluxes::from_interior(
        &g,
        |i, j| {
            a2 * 0.5 * (vx.get(i - 1, j) + vx.get(i, j)) - (z.get(i, j) - z.get(i - 1, j)) * inv_h
        },
        |i, j| {
            a2 * 0.5 * (vy.get(i, j - 1) + vy.get(i, j)) - (z.get(i, j) - z.get(i, j - 1)) * inv_h
        },
    )
}

/// Donor-cell flux of the limited quantity `d β(d)` across one face.
#[inline]
pub fn upwind_face_flux(a: f64, d_left: f64, d_right: f64, params: &ModelParams) -> f64 {
    if a >= 0.0 {
        a * d_left * beta(d_left, params)
    } else {
        a * d_right * beta(d_right, params)
    }
}

/// Upwind transport fluxes for a density carried by face velocities `vel`.
pub fn upwind_fluxes(density: &Field2D, vel: &FaceFluxes, params: &ModelParams) -> FaceFluxes {
    let g = *density.grid();
    FaceFluxes::from_interior(
        &g,
        |i, j| upwind_face_flux(vel.x(i, j), density.get(i - 1, j), density.get(i, j), params),
        |i, j| upwind_face_flux(vel.y(i, j), density.get(i, j - 1), density.get(i, j), params),
    )
}
