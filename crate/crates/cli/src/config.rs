//! `key=value` override files.
//!
//! One file can carry satellite, task-generation, and training keys at once;
//! each command picks out the group it understands. Unknown keys are an
//! error so typos surface instead of silently keeping a default.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use satsched_core::{SatelliteConfig, TaskGenConfig, TrainConfig};

const TRAIN_KEYS: &[&str] = &[
    "episodes",
    "actor_epochs",
    "critic_epochs",
    "discount",
    "kl_weight",
    "actor_lr",
    "critic_lr",
    "hidden",
    "include_current_reward",
];

const SATELLITE_KEYS: &[&str] = &[
    "max_storage",
    "max_roll_deg",
    "max_roll_rate",
    "roll_accel",
    "sensor_half_angle_deg",
    "ltw_scale_s",
];

const TASKGEN_KEYS: &[&str] = &[
    "obs_memory_delta",
    "download_interval_s",
    "download_duration_s",
    "download_memory_delta",
];

/// Parse override text into a key/value map, rejecting unknown keys.
pub fn parse_overrides(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key=value, got {raw:?}", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if !TRAIN_KEYS.contains(&key)
            && !SATELLITE_KEYS.contains(&key)
            && !TASKGEN_KEYS.contains(&key)
        {
            bail!("line {}: unknown config key {key:?}", i + 1);
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            bail!("line {}: duplicate config key {key:?}", i + 1);
        }
    }
    Ok(map)
}

fn get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, out: &mut T) -> Result<()>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    if let Some(v) = map.get(key) {
        *out = v
            .parse()
            .with_context(|| format!("config key {key}: bad value {v:?}"))?;
    }
    Ok(())
}

/// Fold training keys from `map` into `cfg`.
pub fn apply_train(map: &BTreeMap<String, String>, cfg: &mut TrainConfig) -> Result<()> {
    get(map, "episodes", &mut cfg.episodes)?;
    get(map, "actor_epochs", &mut cfg.actor_epochs)?;
    get(map, "critic_epochs", &mut cfg.critic_epochs)?;
    get(map, "discount", &mut cfg.discount)?;
    get(map, "kl_weight", &mut cfg.kl_weight)?;
    get(map, "actor_lr", &mut cfg.actor_lr)?;
    get(map, "critic_lr", &mut cfg.critic_lr)?;
    get(map, "hidden", &mut cfg.hidden)?;
    get(
        map,
        "include_current_reward",
        &mut cfg.include_current_reward,
    )?;
    Ok(())
}

/// Fold satellite keys from `map` into `sat`.
pub fn apply_satellite(map: &BTreeMap<String, String>, sat: &mut SatelliteConfig) -> Result<()> {
    get(map, "max_storage", &mut sat.max_storage)?;
    get(map, "max_roll_deg", &mut sat.max_roll_deg)?;
    get(map, "max_roll_rate", &mut sat.max_roll_rate)?;
    get(map, "roll_accel", &mut sat.roll_accel)?;
    get(map, "sensor_half_angle_deg", &mut sat.sensor_half_angle_deg)?;
    get(map, "ltw_scale_s", &mut sat.ltw_scale_s)?;
    Ok(())
}

/// Fold task-generation keys from `map` into `gen`.
pub fn apply_taskgen(map: &BTreeMap<String, String>, gen: &mut TaskGenConfig) -> Result<()> {
    get(map, "obs_memory_delta", &mut gen.obs_memory_delta)?;
    get(map, "download_interval_s", &mut gen.download_interval_s)?;
    get(map, "download_duration_s", &mut gen.download_duration_s)?;
    get(map, "download_memory_delta", &mut gen.download_memory_delta)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let map =
            parse_overrides("# defaults\nepisodes = 5\nkl_weight=0.25 # trailing\n\n").unwrap();
        assert_eq!(map.len(), 2);
        let mut cfg = TrainConfig::default();
        apply_train(&map, &mut cfg).unwrap();
        assert_eq!(cfg.episodes, 5);
        assert_eq!(cfg.kl_weight, 0.25);
    }

    #[test]
    fn rejects_unknown_and_malformed_keys() {
        assert!(parse_overrides("episodess=5").is_err());
        assert!(parse_overrides("episodes").is_err());
        assert!(parse_overrides("episodes=1\nepisodes=2").is_err());
        let map = parse_overrides("episodes=many").unwrap();
        assert!(apply_train(&map, &mut TrainConfig::default()).is_err());
    }

    #[test]
    fn satellite_and_taskgen_keys_apply() {
        let map = parse_overrides("max_storage=3\ndownload_interval_s=120").unwrap();
        let mut sat = SatelliteConfig {
            max_storage: 8,
            max_roll_deg: 45.0,
            max_roll_rate: 1.0,
            roll_accel: 0.5,
            sensor_half_angle_deg: 10.0,
            ltw_scale_s: 1800.0,
        };
        apply_satellite(&map, &mut sat).unwrap();
        assert_eq!(sat.max_storage, 3);
        let mut gen = TaskGenConfig::default();
        apply_taskgen(&map, &mut gen).unwrap();
        assert_eq!(gen.download_interval_s, 120);
    }
}
