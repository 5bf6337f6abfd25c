//! Plain-text run manifest: one `key: value` per line.

use std::time::Duration;

use anyhow::Result;
use hjcrit_core::CriticalData;

use crate::config::ExperimentConfig;

/// Version string of this build, `v<semver>-g<commit>` when built from a
/// git checkout.
pub const VERSION: &str = env!("HJCRIT_VERSION");

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, results: &[(String, String)], wall: Duration) -> Result<Self> {
        let crit = CriticalData::new(cfg.dim)?;
        let mut entries = vec![
            ("version".to_string(), VERSION.to_string()),
            ("experiment".to_string(), cfg.experiment.to_string()),
        ];
        entries.extend(cfg.echo()?);
        for (k, v) in [
            ("q_star", crit.q_star),
            ("grad_g_qstar_norm", crit.grad_g_norm),
            ("c_mass", crit.c_mass),
            ("m_star", crit.m_star),
        ] {
            entries.push((format!("constants.{k}"), format!("{v:.16e}")));
        }
        entries.extend(results.iter().map(|(k, v)| (format!("result.{k}"), v.clone())));
        entries.push((
            "wall_clock_seconds".to_string(),
            format!("{:.3}", wall.as_secs_f64()),
        ));
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect()
    }
}
