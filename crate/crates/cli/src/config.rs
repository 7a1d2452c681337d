use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stgen_genpipe::{ClientConfig, API_KEY_VAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mock,
    Live,
}

/// Settings shared by all subcommands. Loaded from `--config`, then
/// overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    pub mock_script: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_s: u64,
    pub max_attempts: u32,
    pub sampling: BTreeMap<String, f64>,
    pub tile_size: u32,
    pub overlap: u32,
    pub contrast_stretch: bool,
    pub cycle_ms: i64,
    pub max_rounds: u32,
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mode: Mode::Mock,
            mock_script: None,
            endpoint: None,
            model: None,
            timeout_s: 120,
            max_attempts: 3,
            sampling: BTreeMap::new(),
            tile_size: stgen_imaging::DEFAULT_TILE,
            overlap: stgen_imaging::DEFAULT_OVERLAP,
            contrast_stretch: true,
            cycle_ms: stgen_core::exec::DEFAULT_CYCLE_MS,
            max_rounds: stgen_genpipe::DEFAULT_MAX_ROUNDS,
            workers: stgen_genpipe::batch::DEFAULT_WORKERS,
            output_dir: PathBuf::from("stgen-out"),
        }
    }
}

impl Config {
    /// Relative paths in the file resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config '{}'", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).with_context(|| format!("invalid config '{}'", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &cfg.mock_script {
            if p.is_relative() {
                cfg.mock_script = Some(base.join(p));
            }
        }
        if cfg.output_dir.is_relative() && text.contains("output_dir") {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate_client(&self) -> Result<()> {
        match self.mode {
            Mode::Mock => {
                if self.mock_script.is_none() {
                    bail!("mock mode needs a script (--mock <file>)");
                }
            }
            Mode::Live => {
                if self.endpoint.as_deref().unwrap_or("").is_empty() || self.model.as_deref().unwrap_or("").is_empty() {
                    bail!("live mode needs --endpoint and --model");
                }
                if std::env::var_os(API_KEY_VAR).is_none() {
                    bail!("live mode needs the {API_KEY_VAR} environment variable");
                }
            }
        }
        if self.workers == 0 {
            bail!("worker count must be at least 1");
        }
        if self.max_rounds == 0 {
            bail!("max repair rounds must be at least 1");
        }
        Ok(())
    }

    /// Client settings. Sampling parameters only apply to live runs.
    pub fn client_config(&self) -> ClientConfig {
        ClientConfig {
            model: self.model.clone().unwrap_or_else(|| "mock".to_string()),
            timeout: Duration::from_secs(self.timeout_s),
            max_attempts: self.max_attempts.max(1),
            sampling: match self.mode {
                Mode::Live => self.sampling.clone(),
                Mode::Mock => BTreeMap::new(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stgen.toml");
        std::fs::write(&path, "mock_script = \"m.mock\"\ntile_size = 512\n[sampling]\ntemperature = 0.2\n").unwrap();
        let cfg = Config::load(&path).unwrap();
        assert_eq!(cfg.tile_size, 512);
        assert_eq!(cfg.overlap, 128);
        assert_eq!(cfg.mock_script, Some(dir.path().join("m.mock")));
        assert_eq!(cfg.output_dir, PathBuf::from("stgen-out"));
        assert!(cfg.client_config().sampling.is_empty());
        cfg.validate_client().unwrap();
    }

    #[test]
    fn unknown_keys_and_missing_script_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "tile = 5\n").unwrap();
        assert!(Config::load(&path).is_err());
        assert!(Config::default().validate_client().is_err());
        let live = Config {
            mode: Mode::Live,
            endpoint: Some("http://x".into()),
            ..Config::default()
        };
        assert!(live.validate_client().unwrap_err().to_string().contains("--model"));
    }
}
