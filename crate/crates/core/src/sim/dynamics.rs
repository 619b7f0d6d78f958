//! Attacker equation of motion and its integrator.
//!
//! `m r'' = K u(r_vl - r) - B r'`, with `u` the unit vector toward the
//! virtual leader. The step is a Strang splitting: half thrust kick, exact
//! drag-plus-drift flow over `dt`, half thrust kick at the new position. The
//! drag flow is closed form because drag is linear in velocity, which keeps
//! the terminal speed within a fraction of a percent of `K/B` at `dt = 1`.

use super::{AttackerParams, Vec2};

/// Kinematic state of one attacker.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kinematics {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Thrust acceleration toward `leader`; zero when the leader coincides with
/// the position.
pub fn thrust_acceleration(position: Vec2, leader: Vec2, params: &AttackerParams) -> Vec2 {
    match (leader - position).try_unit() {
        Some(u) => u * (params.thrust / params.mass),
        None => Vec2::ZERO,
    }
}

/// Advance one attacker by `dt` toward the fixed aim point `leader`.
pub fn verlet_step(state: Kinematics, params: &AttackerParams, leader: Vec2, dt: f64) -> Kinematics {
    let half = 0.5 * dt;
    let gamma = params.damping / params.mass;
    let decay = (-gamma * dt).exp();
    // displacement of the drag flow per unit initial velocity
    let drift = if gamma > 0.0 {
        -(-gamma * dt).exp_m1() / gamma
    } else {
        dt
    };

    let v_half = state.velocity + thrust_acceleration(state.position, leader, params) * half;
    let position = state.position + v_half * drift;
    let velocity = v_half * decay + thrust_acceleration(position, leader, params) * half;
    Kinematics { position, velocity }
}
