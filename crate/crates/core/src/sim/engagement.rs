//! One swarm-vs-swarm engagement.

use rand::Rng as _;
use std::f64::consts::{FRAC_PI_2, TAU};

use super::assign::{auction_assign, greedy_assign, nearest_assign};
use super::dynamics::{verlet_step, Kinematics};
use super::guidance::{pronav_intercept, pursuit_aim};
use super::{EngagementConfig, GreedyRule, TacticLabel, Vec2};
use crate::error::Result;
use crate::rng::{self, Purpose, Rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackerState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub virtual_leader: Vec2,
    /// Index into the full defender list.
    pub target: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefenderState {
    pub position: Vec2,
    pub speed: f64,
    /// Compass heading, 0 = North, pi/2 = East.
    pub heading: f64,
    pub alive: bool,
}

impl DefenderState {
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_heading(self.speed, self.heading)
    }
}

/// Uniform polar dispersion: radius in `[0, spread)`, angle in `[0, 2pi)`.
fn disperse(rng: &mut Rng, centre: Vec2, spread: f64) -> Vec2 {
    let r = rng.random::<f64>() * spread;
    let angle = rng.random::<f64>() * TAU;
    centre + Vec2::from_polar(r, angle)
}

/// Initial attackers and defenders. The generator is seeded from
/// `config.seed` and returned so the caller can keep drawing from it.
pub fn init_engagement(config: &EngagementConfig) -> (Vec<AttackerState>, Vec<DefenderState>, Rng) {
    let mut rng = rng::child(config.seed, Purpose::Engagement, 0);
    let v_max = config.attacker.max_speed();
    let (lo, hi) = config.defender_speed_fraction_bounds;

    let defenders = (0..config.n_defenders)
        .map(|_| {
            let position = disperse(&mut rng, Vec2::ZERO, config.defender_spread);
            let speed = (lo + (hi - lo) * rng.random::<f64>()) * v_max;
            let heading = rng.random::<f64>() * FRAC_PI_2;
            DefenderState {
                position,
                speed,
                heading,
                alive: true,
            }
        })
        .collect();

    let attackers = (0..config.n_attackers)
        .map(|_| {
            let position = disperse(&mut rng, config.attacker_start_offset, config.attacker_spread);
            AttackerState {
                position,
                velocity: Vec2::ZERO,
                virtual_leader: position,
                target: None,
            }
        })
        .collect();

    (attackers, defenders, rng)
}

/// Marks as dead every defender with some attacker strictly inside
/// `range`. Returns the number of new kills.
pub fn survival_update(defenders: &mut [DefenderState], attackers: &[Vec2], range: f64) -> usize {
    let r2 = range * range;
    let mut kills = 0;
    for d in defenders.iter_mut().filter(|d| d.alive) {
        if attackers.iter().any(|a| a.distance_sq(d.position) < r2) {
            d.alive = false;
            kills += 1;
        }
    }
    kills
}

/// Recorded attacker motion for one engagement.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub tactic: TacticLabel,
    pub n_attackers: usize,
    pub n_defenders: usize,
    /// `[step][attacker]`, state after each executed step.
    pub attacker_states: Vec<Vec<Kinematics>>,
    /// `[step][defender]`, survival after each step.
    pub defender_alive: Vec<Vec<bool>>,
    /// `[step][attacker]`, target chosen at the start of each step.
    pub targets: Vec<Vec<usize>>,
    /// Step cap reached with defenders still alive.
    pub truncated: bool,
    /// Steps where the intercept had no positive root and pursuit was used.
    pub intercept_fallbacks: usize,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.attacker_states.len()
    }

    pub fn alive_count(&self, step: usize) -> usize {
        self.defender_alive[step].iter().filter(|&&a| a).count()
    }
}

/// Simulate until every defender is dead or `max_steps` is reached.
pub fn run_engagement(config: &EngagementConfig) -> Result<Trajectory> {
    config.validate()?;
    let (mut attackers, mut defenders, _rng) = init_engagement(config);
    let params = config.attacker;
    let v_max = params.max_speed();

    let mut traj = Trajectory {
        tactic: config.tactic,
        n_attackers: config.n_attackers,
        n_defenders: config.n_defenders,
        attacker_states: Vec::new(),
        defender_alive: Vec::new(),
        targets: Vec::new(),
        truncated: false,
        intercept_fallbacks: 0,
    };

    let mut alive_idx: Vec<usize> = Vec::with_capacity(config.n_defenders);
    let mut alive_pos: Vec<Vec2> = Vec::with_capacity(config.n_defenders);
    let mut attacker_pos: Vec<Vec2> = Vec::with_capacity(config.n_attackers);

    while traj.steps() < config.max_steps {
        alive_idx.clear();
        alive_pos.clear();
        for (j, d) in defenders.iter().enumerate().filter(|(_, d)| d.alive) {
            alive_idx.push(j);
            alive_pos.push(d.position);
        }
        if alive_idx.is_empty() {
            break;
        }
        attacker_pos.clear();
        attacker_pos.extend(attackers.iter().map(|a| a.position));

        let local = if config.tactic.comms() {
            auction_assign(&attacker_pos, &alive_pos)
        } else {
            match config.greedy_rule {
                GreedyRule::NearestDefender => nearest_assign(&attacker_pos, &alive_pos),
                GreedyRule::DefenderLoop => greedy_assign(&attacker_pos, &alive_pos),
            }
        };

        let mut step_targets = Vec::with_capacity(attackers.len());
        for (a, &k) in attackers.iter_mut().zip(&local) {
            let j = alive_idx[k];
            let target = &defenders[j];
            a.target = Some(j);
            a.virtual_leader = if config.tactic.pronav() {
                let hit = pronav_intercept(a.position, target.position, target.velocity(), v_max);
                if hit.fell_back() {
                    traj.intercept_fallbacks += 1;
                }
                hit.point
            } else {
                pursuit_aim(target.position)
            };
            step_targets.push(j);

            let next = verlet_step(
                Kinematics {
                    position: a.position,
                    velocity: a.velocity,
                },
                &params,
                a.virtual_leader,
                config.dt,
            );
            a.position = next.position;
            a.velocity = next.velocity;
        }

        for d in defenders.iter_mut().filter(|d| d.alive) {
            d.position += d.velocity() * config.dt;
        }

        attacker_pos.clear();
        attacker_pos.extend(attackers.iter().map(|a| a.position));
        survival_update(&mut defenders, &attacker_pos, config.weapons_range);

        traj.targets.push(step_targets);
        traj.attacker_states.push(
            attackers
                .iter()
                .map(|a| Kinematics {
                    position: a.position,
                    velocity: a.velocity,
                })
                .collect(),
        );
        traj.defender_alive.push(defenders.iter().map(|d| d.alive).collect());
    }

    traj.truncated = defenders.iter().any(|d| d.alive);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let cfg = EngagementConfig::default().with_seed(42);
        let (a1, d1, _) = init_engagement(&cfg);
        let (a2, d2, _) = init_engagement(&cfg);
        assert_eq!(a1, a2);
        assert_eq!(d1, d2);
    }

    #[test]
    fn zero_spread_places_agents_exactly() {
        let mut cfg = EngagementConfig::default().with_seed(3);
        cfg.attacker_spread = 0.0;
        cfg.defender_spread = 0.0;
        let (a, d, _) = init_engagement(&cfg);
        assert!(a
            .iter()
            .all(|a| a.position == Vec2::new(40.0, 40.0) && a.velocity == Vec2::ZERO));
        assert!(d.iter().all(|d| d.position == Vec2::ZERO && d.alive));
    }

    #[test]
    fn defender_speed_and_heading_bounds() {
        // Monte Carlo over 10 000 sampled defenders
        let mut cfg = EngagementConfig::default();
        cfg.n_defenders = 100;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for seed in 0..100 {
            let (_, d, _) = init_engagement(&cfg.clone().with_seed(seed));
            for d in d {
                lo = lo.min(d.speed);
                hi = hi.max(d.speed);
                assert!((0.0..=FRAC_PI_2).contains(&d.heading));
                assert!(d.position.norm() <= cfg.defender_spread);
            }
        }
        assert!(lo >= 0.05 && hi <= 0.40, "speeds in [{lo}, {hi}]");
        // the sample actually spans most of the interval
        assert!(lo < 0.06 && hi > 0.39);
    }

    #[test]
    fn survival_is_strict_inequality() {
        let mk = |x: f64| DefenderState {
            position: Vec2::new(x, 0.0),
            speed: 0.1,
            heading: 0.0,
            alive: true,
        };
        let mut ds = vec![mk(0.5), mk(1.0), mk(5.0)];
        let kills = survival_update(&mut ds, &[Vec2::ZERO], 1.0);
        assert_eq!(kills, 1);
        assert_eq!(ds.iter().map(|d| d.alive).collect::<Vec<_>>(), vec![false, true, true]);
        // no attacker in range: unchanged, and dead stays dead
        let kills = survival_update(&mut ds, &[Vec2::new(100.0, 0.0)], 1.0);
        assert_eq!(kills, 0);
        assert!(!ds[0].alive);
    }

    #[test]
    fn run_is_bit_deterministic() {
        for tactic in TacticLabel::ALL {
            let cfg = EngagementConfig::default().with_seed(11).with_tactic(tactic);
            let a = run_engagement(&cfg).unwrap();
            let b = run_engagement(&cfg).unwrap();
            assert_eq!(a, b);
            assert!(!a.truncated);
        }
    }

    #[test]
    fn greedy_variants_start_on_nearest_defender() {
        let cfg = EngagementConfig::default().with_seed(5);
        let (a, d, _) = init_engagement(&cfg);
        let apos: Vec<Vec2> = a.iter().map(|a| a.position).collect();
        let dpos: Vec<Vec2> = d.iter().map(|d| d.position).collect();
        let nearest = nearest_assign(&apos, &dpos);
        for tactic in [TacticLabel::GREEDY, TacticLabel::GREEDY_PLUS] {
            let t = run_engagement(&cfg.clone().with_tactic(tactic)).unwrap();
            assert_eq!(t.targets[0], nearest);
        }
    }

    #[test]
    fn auction_square_has_no_shared_targets_until_a_kill() {
        for seed in 0..20 {
            let cfg = EngagementConfig::default()
                .with_seed(seed)
                .with_tactic(TacticLabel::AUCTION);
            let t = run_engagement(&cfg).unwrap();
            for (step, targets) in t.targets.iter().enumerate() {
                let alive_before = if step == 0 {
                    cfg.n_defenders
                } else {
                    t.alive_count(step - 1)
                };
                let mut seen = targets.clone();
                seen.sort_unstable();
                seen.dedup();
                if alive_before == cfg.n_attackers {
                    assert_eq!(seen.len(), targets.len(), "shared target at step {step}");
                } else {
                    assert_eq!(seen.len(), alive_before);
                }
            }
        }
    }

    #[test]
    fn defenders_move_in_straight_lines() {
        let cfg = EngagementConfig::default().with_seed(9);
        let (_, d0, _) = init_engagement(&cfg);
        let mut ds = d0.clone();
        for _ in 0..25 {
            for d in ds.iter_mut() {
                d.position += d.velocity() * cfg.dt;
            }
        }
        for (a, b) in d0.iter().zip(&ds) {
            let expect = a.position + Vec2::from_heading(a.speed, a.heading) * (25.0 * cfg.dt);
            assert!(b.position.distance(expect) < 1e-12);
            assert_eq!(a.speed, b.speed);
            assert_eq!(a.heading, b.heading);
        }
    }

    #[test]
    fn attacker_speed_stays_bounded() {
        for tactic in TacticLabel::ALL {
            let cfg = EngagementConfig::default().with_seed(21).with_tactic(tactic);
            let t = run_engagement(&cfg).unwrap();
            for step in &t.attacker_states {
                for k in step {
                    assert!(k.velocity.norm() <= 1.02);
                    assert!(k.position.is_finite());
                }
            }
            for w in t.defender_alive.windows(2) {
                let a = w[0].iter().filter(|&&x| x).count();
                let b = w[1].iter().filter(|&&x| x).count();
                assert!(b <= a);
                assert!(w[0].iter().zip(&w[1]).all(|(&p, &n)| p || !n));
            }
        }
    }
}
