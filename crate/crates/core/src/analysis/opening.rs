//! Trajectories of all four tactics from one shared seed, with the step-0
//! target checks.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::Write;

use crate::error::Result;
use crate::sim::assign::nearest_assign;
use crate::sim::{init_engagement, run_engagement, EngagementConfig, TacticLabel, Vec2};

/// Position of one agent at time `step * dt`. Attacker rows carry the
/// target chosen at the start of that step, or -1 after the last step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpeningRow {
    pub tactic: String,
    pub step: usize,
    pub role: String,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub target: i64,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step0Check {
    pub tactic: String,
    /// Attackers whose step-0 target differs from their nearest defender.
    pub nearest_mismatches: usize,
    /// Attackers sharing a step-0 target with an earlier attacker.
    pub duplicated_targets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpeningMoves {
    pub rows: Vec<OpeningRow>,
    pub checks: Vec<Step0Check>,
}

pub fn opening_moves(base: &EngagementConfig) -> Result<OpeningMoves> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for tactic in TacticLabel::ALL {
        let cfg = base.clone().with_tactic(tactic);
        let (attackers, defenders, _) = init_engagement(&cfg);
        let traj = run_engagement(&cfg)?;
        let name = tactic.to_string();

        let a0: Vec<Vec2> = attackers.iter().map(|a| a.position).collect();
        let d0: Vec<Vec2> = defenders.iter().map(|d| d.position).collect();
        let nearest = nearest_assign(&a0, &d0);
        let first = traj.targets.first().cloned().unwrap_or_default();
        let mut seen = HashSet::new();
        checks.push(Step0Check {
            tactic: name.clone(),
            nearest_mismatches: first.iter().zip(&nearest).filter(|(t, n)| t != n).count(),
            duplicated_targets: first.iter().filter(|&&t| !seen.insert(t)).count(),
        });

        let target_at = |step: usize, i: usize| traj.targets.get(step).map_or(-1, |t| t[i] as i64);
        for (i, p) in a0.iter().enumerate() {
            rows.push(row(&name, 0, "attacker", i, *p, target_at(0, i), true));
        }
        let mut dpos = d0.clone();
        for (j, p) in dpos.iter().enumerate() {
            rows.push(row(&name, 0, "defender", j, *p, -1, true));
        }
        for s in 0..traj.steps() {
            for (i, k) in traj.attacker_states[s].iter().enumerate() {
                rows.push(row(&name, s + 1, "attacker", i, k.position, target_at(s + 1, i), true));
            }
            for (j, d) in defenders.iter().enumerate() {
                let moved = if s == 0 { true } else { traj.defender_alive[s - 1][j] };
                if moved {
                    dpos[j] += d.velocity() * cfg.dt;
                }
                rows.push(row(&name, s + 1, "defender", j, dpos[j], -1, traj.defender_alive[s][j]));
            }
        }
    }
    Ok(OpeningMoves { rows, checks })
}

fn row(tactic: &str, step: usize, role: &str, agent: usize, p: Vec2, target: i64, alive: bool) -> OpeningRow {
    OpeningRow {
        tactic: tactic.into(),
        step,
        role: role.into(),
        agent,
        x: p.x,
        y: p.y,
        target,
        alive,
    }
}

impl OpeningMoves {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_checks_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for c in &self.checks {
            out.serialize(c)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn check(&self, tactic: TacticLabel) -> &Step0Check {
        let name = tactic.to_string();
        self.checks
            .iter()
            .find(|c| c.tactic == name)
            .expect("all four tactics are run")
    }
}
