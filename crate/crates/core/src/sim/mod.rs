//! Swarm-vs-swarm engagement simulation.

pub mod assign;
mod config;
pub mod dynamics;
mod engagement;
pub mod guidance;
mod vec2;

pub use config::{AttackerParams, EngagementConfig, GreedyRule, TacticLabel};
pub use dynamics::{verlet_step, Kinematics};
pub use engagement::{init_engagement, run_engagement, survival_update, AttackerState, DefenderState, Trajectory};
pub use vec2::Vec2;
