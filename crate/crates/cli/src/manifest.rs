use crate::config::PipelineConfig;
use anyhow::{Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

/// Deterministic run record: config snapshot, per-item outcomes and
/// per-stage failure tallies. Wall-clock timings are written to a separate
/// file so the manifest is byte-stable across reruns.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: String,
    pub config: PipelineConfig,
    pub attempted: usize,
    pub succeeded: usize,
    pub failures_by_stage: BTreeMap<String, usize>,
    pub items: Vec<ItemRecord>,
}

#[derive(Debug, Serialize)]
pub struct ItemRecord {
    pub input: String,
    pub outcome: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.clone(),
            attempted: 0,
            succeeded: 0,
            failures_by_stage: BTreeMap::new(),
            items: Vec::new(),
        }
    }

    pub fn record_success(&mut self, input: &str) {
        self.attempted += 1;
        self.succeeded += 1;
        self.items.push(ItemRecord {
            input: input.to_string(),
            outcome: "ok".to_string(),
        });
    }

    pub fn record_failure(&mut self, input: &str, stage: &str, detail: &str) {
        self.attempted += 1;
        *self.failures_by_stage.entry(stage.to_string()).or_insert(0) += 1;
        self.items.push(ItemRecord {
            input: input.to_string(),
            outcome: format!("failed ({stage}): {detail}"),
        });
    }

    /// attempted = succeeded + sum of stage failures, by construction;
    /// asserted here so a bookkeeping bug cannot ship silent bad counts.
    pub fn write(&self, path: &Path) -> Result<()> {
        let failures: usize = self.failures_by_stage.values().sum();
        assert_eq!(self.attempted, self.succeeded + failures);
        let text = serde_json::to_string_pretty(self).context("serializing manifest")?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Non-deterministic companion: wall-clock timings only.
pub fn write_timings(path: &Path, started: Instant) -> Result<()> {
    let text = format!("{{\n  \"wall_seconds\": {:.3}\n}}\n", started.elapsed().as_secs_f64());
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_reconcile() {
        let cfg = PipelineConfig::default();
        let mut m = RunManifest::new("frontalize", &cfg);
        m.record_success("a.png");
        m.record_failure("b.png", "fit", "folded");
        m.record_failure("c.png", "fit", "folded");
        m.record_failure("d.png", "io", "corrupt");
        assert_eq!(m.attempted, 4);
        assert_eq!(m.succeeded, 1);
        assert_eq!(m.failures_by_stage["fit"], 2);
        let dir = tempfile::tempdir().unwrap();
        m.write(&dir.path().join("manifest.json")).unwrap();
    }
}
