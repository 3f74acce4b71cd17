//! Scenario configuration: the flat `key: value` file format, validation,
//! and the named presets.
//!
//! Files are UTF-8, one `key: value` per line, `#` starts a comment,
//! unknown keys are errors. An empty file yields the defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::BLOCKED_WEIGHT;
use crate::world::{DamageLevel, ObstacleLevel};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("{key}: {message}")]
    Range { key: String, message: String },
    #[error("unknown preset {0:?} (expected survey, optimistic or night)")]
    UnknownPreset(String),
}

/// All simulation parameters. Field names double as the file keys, except
/// the behaviour distribution which is spelled `p1`..`p6`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Probability of behaviour classes 1..6; must sum to 1.
    pub behaviour_distribution: [f64; 6],
    /// Percent of the population indoors at quake time.
    pub people_in_buildings: f64,
    /// Probability that a safe-place mover is an informal leader.
    pub leader_fraction: f64,
    pub occupancy_per_apartment: f64,
    pub perception_radius: f64,
    pub base_speed: f64,
    pub medium_slowdown_factor: f64,
    /// Obstacle encounters tolerated before giving up (2 or 3).
    pub give_up_threshold: u32,
    pub seeker_patience: u32,
    pub follower_loss_cycles: u32,
    /// Probability of each damage level: none, slight, moderate,
    /// extensive, complete. Must sum to 1.
    pub damage_distribution: [f64; 5],
    /// Probability of dying indoors, per damage level (same order).
    pub casualty_rates: [f64; 5],
    /// Zone radius factor per obstacle level: big, medium, small.
    pub obstacle_radius_factors: [f64; 3],
    /// Fixed at 1e9; present in files so runs echo it.
    pub blocked_weight: f64,
    pub max_cycles: u32,
    pub histogram_bucket_seconds: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            behaviour_distribution: [0.10, 0.35, 0.15, 0.05, 0.25, 0.10],
            people_in_buildings: 65.0,
            leader_fraction: 0.1,
            occupancy_per_apartment: 3.8,
            perception_radius: 20.0,
            base_speed: 1.3,
            medium_slowdown_factor: 0.5,
            give_up_threshold: 3,
            seeker_patience: 10,
            follower_loss_cycles: 5,
            damage_distribution: [0.55, 0.20, 0.15, 0.07, 0.03],
            casualty_rates: [0.0, 0.0, 0.02, 0.1, 0.4],
            obstacle_radius_factors: [1.5, 1.0, 0.5],
            blocked_weight: BLOCKED_WEIGHT,
            max_cycles: 3600,
            histogram_bucket_seconds: 60,
        }
    }
}

impl ScenarioConfig {
    pub fn damage_probability(&self, level: DamageLevel) -> f64 {
        self.damage_distribution[level.index()]
    }

    pub fn casualty_rate(&self, level: DamageLevel) -> f64 {
        self.casualty_rates[level.index()]
    }

    pub fn obstacle_radius_factor(&self, level: ObstacleLevel) -> f64 {
        self.obstacle_radius_factors[level.index()]
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let range = |key: &str, message: String| ScenarioError::Range {
            key: key.to_string(),
            message,
        };
        let sum: f64 = self.behaviour_distribution.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(range("p1..p6", format!("must sum to 1 (got {sum})")));
        }
        for (i, p) in self.behaviour_distribution.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(range(&format!("p{}", i + 1), "must be in [0, 1]".into()));
            }
        }
        if !(0.0..=100.0).contains(&self.people_in_buildings) {
            return Err(range("people_in_buildings", "must be in [0, 100]".into()));
        }
        if !(0.0..=1.0).contains(&self.leader_fraction) {
            return Err(range("leader_fraction", "must be in [0, 1]".into()));
        }
        if !(self.occupancy_per_apartment >= 0.0) {
            return Err(range("occupancy_per_apartment", "must be >= 0".into()));
        }
        if !(self.perception_radius > 0.0) {
            return Err(range("perception_radius", "must be positive".into()));
        }
        if !(self.base_speed > 0.0) {
            return Err(range("base_speed", "must be positive".into()));
        }
        if !(self.medium_slowdown_factor > 0.0 && self.medium_slowdown_factor <= 1.0) {
            return Err(range("medium_slowdown_factor", "must be in (0, 1]".into()));
        }
        if !(self.give_up_threshold == 2 || self.give_up_threshold == 3) {
            return Err(range("give_up_threshold", "must be 2 or 3".into()));
        }
        if self.seeker_patience == 0 {
            return Err(range("seeker_patience", "must be >= 1".into()));
        }
        if self.follower_loss_cycles == 0 {
            return Err(range("follower_loss_cycles", "must be >= 1".into()));
        }
        let sum: f64 = self.damage_distribution.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(range(
                "damage_none..damage_complete",
                format!("must sum to 1 (got {sum})"),
            ));
        }
        for (key, p) in DAMAGE_KEYS.iter().zip(&self.damage_distribution) {
            if !(0.0..=1.0).contains(p) {
                return Err(range(key, "must be in [0, 1]".into()));
            }
        }
        for (key, p) in CASUALTY_KEYS.iter().zip(&self.casualty_rates) {
            if !(0.0..=1.0).contains(p) {
                return Err(range(key, "must be in [0, 1]".into()));
            }
        }
        for (key, f) in OBSTACLE_KEYS.iter().zip(&self.obstacle_radius_factors) {
            if !(*f > 0.0) {
                return Err(range(key, "must be positive".into()));
            }
        }
        if self.blocked_weight != BLOCKED_WEIGHT {
            return Err(range(
                "blocked_weight",
                format!("is fixed at {BLOCKED_WEIGHT:e}"),
            ));
        }
        if self.max_cycles == 0 {
            return Err(range("max_cycles", "must be >= 1".into()));
        }
        if self.histogram_bucket_seconds == 0 {
            return Err(range("histogram_bucket_seconds", "must be >= 1".into()));
        }
        Ok(())
    }
}

const DAMAGE_KEYS: [&str; 5] = [
    "damage_none",
    "damage_slight",
    "damage_moderate",
    "damage_extensive",
    "damage_complete",
];
const CASUALTY_KEYS: [&str; 5] = [
    "casualty_rate_none",
    "casualty_rate_slight",
    "casualty_rate_moderate",
    "casualty_rate_extensive",
    "casualty_rate_complete",
];
const OBSTACLE_KEYS: [&str; 3] = [
    "obstacle_factor_big",
    "obstacle_factor_medium",
    "obstacle_factor_small",
];

/// Parses the key-value scenario format on top of the defaults.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = ScenarioConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once(':').ok_or_else(|| ScenarioError::Parse {
            line,
            message: format!("expected `key: value`, got {content:?}"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let parse_f64 = |v: &str| -> Result<f64, ScenarioError> {
            v.parse().map_err(|_| ScenarioError::Parse {
                line,
                message: format!("{key}: {v:?} is not a number"),
            })
        };
        let parse_u32 = |v: &str| -> Result<u32, ScenarioError> {
            v.parse().map_err(|_| ScenarioError::Parse {
                line,
                message: format!("{key}: {v:?} is not an integer"),
            })
        };
        match key {
            "p1" | "p2" | "p3" | "p4" | "p5" | "p6" => {
                let idx = key[1..].parse::<usize>().unwrap() - 1;
                cfg.behaviour_distribution[idx] = parse_f64(value)?;
            }
            "people_in_buildings" => cfg.people_in_buildings = parse_f64(value)?,
            "leader_fraction" => cfg.leader_fraction = parse_f64(value)?,
            "occupancy_per_apartment" => cfg.occupancy_per_apartment = parse_f64(value)?,
            "perception_radius" => cfg.perception_radius = parse_f64(value)?,
            "base_speed" => cfg.base_speed = parse_f64(value)?,
            "medium_slowdown_factor" => cfg.medium_slowdown_factor = parse_f64(value)?,
            "give_up_threshold" => cfg.give_up_threshold = parse_u32(value)?,
            "seeker_patience" => cfg.seeker_patience = parse_u32(value)?,
            "follower_loss_cycles" => cfg.follower_loss_cycles = parse_u32(value)?,
            "blocked_weight" => cfg.blocked_weight = parse_f64(value)?,
            "max_cycles" => cfg.max_cycles = parse_u32(value)?,
            "histogram_bucket_seconds" => cfg.histogram_bucket_seconds = parse_u32(value)?,
            _ => {
                if let Some(idx) = DAMAGE_KEYS.iter().position(|k| *k == key) {
                    cfg.damage_distribution[idx] = parse_f64(value)?;
                } else if let Some(idx) = CASUALTY_KEYS.iter().position(|k| *k == key) {
                    cfg.casualty_rates[idx] = parse_f64(value)?;
                } else if let Some(idx) = OBSTACLE_KEYS.iter().position(|k| *k == key) {
                    cfg.obstacle_radius_factors[idx] = parse_f64(value)?;
                } else {
                    return Err(ScenarioError::UnknownKey {
                        line,
                        key: key.to_string(),
                    });
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Named presets, stored as editable files under `presets/`.
pub fn preset(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let text = match name {
        "survey" => include_str!("../presets/survey.scn"),
        "optimistic" => include_str!("../presets/optimistic.scn"),
        "night" => include_str!("../presets/night.scn"),
        other => return Err(ScenarioError::UnknownPreset(other.to_string())),
    };
    parse_scenario(text)
}

pub const PRESET_NAMES: [&str; 3] = ["survey", "optimistic", "night"];
