use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::Vec2;
use crate::error::{Error, Result};

/// One of the four swarm tactics. The id packs the two attributes as
/// `2 * comms + pronav`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TacticLabel(u8);

impl TacticLabel {
    pub const GREEDY: TacticLabel = TacticLabel(0);
    pub const GREEDY_PLUS: TacticLabel = TacticLabel(1);
    pub const AUCTION: TacticLabel = TacticLabel(2);
    pub const AUCTION_PLUS: TacticLabel = TacticLabel(3);
    pub const ALL: [TacticLabel; 4] = [Self::GREEDY, Self::GREEDY_PLUS, Self::AUCTION, Self::AUCTION_PLUS];

    pub fn from_id(id: u8) -> Result<Self> {
        if id < 4 {
            Ok(TacticLabel(id))
        } else {
            Err(Error::data(format!("unknown tactic id {id}")))
        }
    }

    pub fn from_attributes(comms: bool, pronav: bool) -> Self {
        TacticLabel(2 * comms as u8 + pronav as u8)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Targets are deconflicted by auction.
    pub fn comms(self) -> bool {
        self.0 & 2 != 0
    }

    /// Aim points lead the target by intercept geometry.
    pub fn pronav(self) -> bool {
        self.0 & 1 != 0
    }

    /// `[comms, pronav]` as bits.
    pub fn attributes(self) -> [u8; 2] {
        [self.comms() as u8, self.pronav() as u8]
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "greedy",
            1 => "greedy+",
            2 => "auction",
            _ => "auction+",
        }
    }
}

impl TryFrom<u8> for TacticLabel {
    type Error = Error;
    fn try_from(id: u8) -> Result<Self> {
        Self::from_id(id)
    }
}

impl From<TacticLabel> for u8 {
    fn from(t: TacticLabel) -> u8 {
        t.0
    }
}

impl fmt::Display for TacticLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TacticLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" | "0" => Ok(Self::GREEDY),
            "greedy+" | "1" => Ok(Self::GREEDY_PLUS),
            "auction" | "2" => Ok(Self::AUCTION),
            "auction+" | "3" => Ok(Self::AUCTION_PLUS),
            other => Err(Error::config(format!("unknown tactic '{other}'"))),
        }
    }
}

/// Attacker equation-of-motion constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackerParams {
    /// Inertial mass.
    pub mass: f64,
    /// Thrust magnitude.
    pub thrust: f64,
    /// Linear drag coefficient.
    pub damping: f64,
}

impl Default for AttackerParams {
    fn default() -> Self {
        // thrust/damping = 1 sets the speed scale, mass/damping = 10 the relaxation time
        Self {
            mass: 10.0,
            thrust: 1.0,
            damping: 1.0,
        }
    }
}

impl AttackerParams {
    /// Terminal speed `K/B` under constant thrust.
    pub fn max_speed(&self) -> f64 {
        self.thrust / self.damping
    }

    /// Velocity relaxation time `m/B`.
    pub fn relaxation_time(&self) -> f64 {
        self.mass / self.damping
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.thrust > 0.0 && self.damping > 0.0) {
            return Err(Error::config("attacker mass, thrust and damping must be positive"));
        }
        Ok(())
    }
}

/// How Comms-off (greedy) attackers choose targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyRule {
    /// Every attacker chases its own nearest alive defender.
    #[default]
    NearestDefender,
    /// Defenders in index order claim their nearest attacker (later claims
    /// overwrite earlier ones); unclaimed attackers chase their nearest defender.
    DefenderLoop,
}

/// All scenario constants for one engagement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementConfig {
    pub n_attackers: usize,
    pub n_defenders: usize,
    pub dt: f64,
    pub weapons_range: f64,
    /// Maximum attacker dispersion radius about the attacker centroid.
    pub attacker_spread: f64,
    /// Maximum defender dispersion radius about the origin.
    pub defender_spread: f64,
    /// Defender speed bounds as fractions of the attacker maximum speed.
    pub defender_speed_fraction_bounds: (f64, f64),
    pub attacker_start_offset: Vec2,
    pub max_steps: usize,
    pub seed: u64,
    pub tactic: TacticLabel,
    pub attacker: AttackerParams,
    #[serde(default)]
    pub greedy_rule: GreedyRule,
}

impl Default for EngagementConfig {
    fn default() -> Self {
        Self {
            n_attackers: 10,
            n_defenders: 10,
            dt: 1.0,
            weapons_range: 1.0,
            attacker_spread: 5.0,
            defender_spread: 5.0,
            defender_speed_fraction_bounds: (0.05, 0.40),
            attacker_start_offset: Vec2::new(40.0, 40.0),
            max_steps: 1000,
            seed: 0,
            tactic: TacticLabel::GREEDY,
            attacker: AttackerParams::default(),
            greedy_rule: GreedyRule::default(),
        }
    }
}

impl EngagementConfig {
    pub fn with_tactic(mut self, tactic: TacticLabel) -> Self {
        self.tactic = tactic;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_size(mut self, n_attackers: usize, n_defenders: usize) -> Self {
        self.n_attackers = n_attackers;
        self.n_defenders = n_defenders;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_attackers == 0 || self.n_defenders == 0 {
            return Err(Error::config("attacker and defender counts must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt must be positive"));
        }
        if !(self.weapons_range > 0.0) {
            return Err(Error::config("weapons range must be positive"));
        }
        if !(self.attacker_spread >= 0.0 && self.defender_spread >= 0.0) {
            return Err(Error::config("spreads must be non-negative"));
        }
        let (lo, hi) = self.defender_speed_fraction_bounds;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::config("defender speed fraction bounds must lie in (0, 1)"));
        }
        if !self.attacker_start_offset.is_finite() {
            return Err(Error::config("attacker start offset must be finite"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be at least 1"));
        }
        self.attacker.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tactic_attribute_mapping() {
        assert_eq!(TacticLabel::GREEDY.attributes(), [0, 0]);
        assert_eq!(TacticLabel::GREEDY_PLUS.attributes(), [0, 1]);
        assert_eq!(TacticLabel::AUCTION.attributes(), [1, 0]);
        assert_eq!(TacticLabel::AUCTION_PLUS.attributes(), [1, 1]);
        for t in TacticLabel::ALL {
            assert_eq!(TacticLabel::from_attributes(t.comms(), t.pronav()), t);
            assert_eq!(t.name().parse::<TacticLabel>().unwrap(), t);
        }
        assert!(TacticLabel::from_id(4).is_err());
    }

    #[test]
    fn defaults_validate() {
        EngagementConfig::default().validate().unwrap();
        let mut bad = EngagementConfig::default();
        bad.defender_speed_fraction_bounds = (0.5, 1.2);
        assert!(bad.validate().is_err());
        bad = EngagementConfig::default();
        bad.max_steps = 0;
        assert!(bad.validate().is_err());
    }
}
