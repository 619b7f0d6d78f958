//! Aim-point (virtual leader) computation.

use super::Vec2;

/// Pursuit navigation: aim at where the target is now.
pub fn pursuit_aim(target_position: Vec2) -> Vec2 {
    target_position
}

/// Result of the intercept computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intercept {
    pub point: Vec2,
    /// Time to intercept; `None` when no positive root exists and the aim
    /// point fell back to pursuit.
    pub time: Option<f64>,
}

impl Intercept {
    pub fn fell_back(&self) -> bool {
        self.time.is_none()
    }
}

/// Constant-bearing intercept using the attacker's maximum speed.
///
/// Solves `|d + v T| = s T` for the smallest positive `T`, with `d` the
/// target offset from the attacker, `v` the target velocity and `s` the
/// attacker speed cap, and returns `target + v T`.
pub fn pronav_intercept(
    attacker_position: Vec2,
    target_position: Vec2,
    target_velocity: Vec2,
    max_speed: f64,
) -> Intercept {
    let d = target_position - attacker_position;
    let c = d.norm_sq();
    if c == 0.0 {
        return Intercept {
            point: target_position,
            time: Some(0.0),
        };
    }
    let a = target_velocity.norm_sq() - max_speed * max_speed;
    let b = 2.0 * d.dot(target_velocity);

    let time = smallest_positive_root(a, b, c);
    match time {
        Some(t) => Intercept {
            point: target_position + target_velocity * t,
            time: Some(t),
        },
        None => Intercept {
            point: pursuit_aim(target_position),
            time: None,
        },
    }
}

/// Smallest positive real root of `a t^2 + b t + c`.
fn smallest_positive_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return None;
        }
        let t = -c / b;
        return (t > 0.0 && t.is_finite()).then_some(t);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = [q / a, if q != 0.0 { c / q } else { f64::NAN }];
    roots.sort_by(|x, y| x.total_cmp(y));
    roots.into_iter().find(|t| *t > 0.0 && t.is_finite())
}
