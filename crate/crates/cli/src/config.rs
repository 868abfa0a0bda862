use std::path::{Path, PathBuf};
use std::time::Duration;

use abdetect_core::capture::{CaptureOptions, SessionConfig};
use abdetect_core::features::Keywords;
use abdetect_core::report::ResponseThresholds;
use serde::Deserialize;

use crate::error::{CliError, Stage};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    pub endpoint: String,
    /// Passed verbatim as the W3C capabilities document.
    #[serde(default)]
    pub capabilities: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drivers {
    pub baseline: Option<DriverConfig>,
    pub blocked: Option<DriverConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseConfig {
    pub invisibility_ratio: f64,
    pub availability_ratio: f64,
    pub cost_proximity: usize,
}

impl Default for ResponseConfig {
    fn default() -> Self {
        let t = ResponseThresholds::default();
        ResponseConfig {
            invisibility_ratio: t.invisibility_ratio,
            availability_ratio: t.availability_ratio,
            cost_proximity: t.cost_proximity,
        }
    }
}

/// Run configuration, read from a TOML file. Every key is optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub parallelism: usize,
    pub settle_delay_secs: f64,
    pub liveness_timeout_secs: f64,
    pub command_timeout_secs: f64,
    pub filter_list: Option<PathBuf>,
    pub keywords: Option<Vec<String>>,
    pub drivers: Drivers,
    pub response: ResponseConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            parallelism: 4,
            settle_delay_secs: 5.0,
            liveness_timeout_secs: 15.0,
            command_timeout_secs: 60.0,
            filter_list: None,
            keywords: None,
            drivers: Drivers::default(),
            response: ResponseConfig::default(),
        }
    }
}

fn secs(name: &str, v: f64) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(v).map_err(|_| CliError::new(Stage::Config, format!("{name} must be a non-negative number of seconds")))
}

impl Config {
    /// Loads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        let mut config: Config = toml::from_str(&text)
            .map_err(|e| CliError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        if let (Some(list), Some(dir)) = (&config.filter_list, path.parent()) {
            if list.is_relative() {
                config.filter_list = Some(dir.join(list));
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.parallelism == 0 {
            return Err(CliError::new(Stage::Config, "parallelism must be >= 1"));
        }
        let r = &self.response;
        if !(0.0..=1.0).contains(&r.invisibility_ratio) || r.availability_ratio < r.invisibility_ratio {
            return Err(CliError::new(
                Stage::Config,
                "response ratios must satisfy 0 <= invisibility_ratio <= availability_ratio",
            ));
        }
        self.capture_options()?;
        Ok(())
    }

    pub fn capture_options(&self) -> Result<CaptureOptions, CliError> {
        Ok(CaptureOptions {
            settle_delay: secs("settle_delay_secs", self.settle_delay_secs)?,
            liveness_timeout: secs("liveness_timeout_secs", self.liveness_timeout_secs)?,
            command_timeout: secs("command_timeout_secs", self.command_timeout_secs)?,
        })
    }

    pub fn keywords(&self) -> Keywords {
        match &self.keywords {
            Some(words) => Keywords::new(words),
            None => Keywords::default(),
        }
    }

    pub fn thresholds(&self) -> ResponseThresholds {
        ResponseThresholds {
            invisibility_ratio: self.response.invisibility_ratio,
            availability_ratio: self.response.availability_ratio,
            cost_proximity: self.response.cost_proximity,
        }
    }

    pub fn session(&self, which: &str) -> Result<SessionConfig, CliError> {
        let driver = match which {
            "baseline" => &self.drivers.baseline,
            _ => &self.drivers.blocked,
        };
        let driver = driver
            .as_ref()
            .ok_or_else(|| CliError::new(Stage::Config, format!("missing [drivers.{which}] section")))?;
        let session = SessionConfig::new(&driver.endpoint);
        Ok(match &driver.capabilities {
            Some(caps) => session.with_capabilities(caps.clone()),
            None => session,
        })
    }
}
