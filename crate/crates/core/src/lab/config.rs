//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub gauge: GaugeSection,
    #[serde(default)]
    pub schedules: ScheduleSection,
    #[serde(default)]
    pub suites: SuiteSection,
    #[serde(default)]
    pub sobolev: SobolevSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Scenario names or labels; empty means the whole catalog.
    #[serde(default)]
    pub names: Vec<String>,
    /// Replaces the scenario's sample points.
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSection {
    /// Number of gauge functionals `K`.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Replaces the scenario's ring radius.
    pub ring_radius: Option<f64>,
    /// Seed for every random sample.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for GaugeSection {
    fn default() -> Self {
        GaugeSection {
            k: default_k(),
            ring_radius: None,
            seed: default_seed(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    /// Replaces the scenario's number of halvings.
    pub halvings: Option<usize>,
    /// Replaces the scenario's finite-difference tolerance.
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    /// Suite names; empty means every suite.
    #[serde(default)]
    pub names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevSection {
    /// Cells per axis of the unit-ball grid.
    #[serde(default = "default_ball_cells")]
    pub ball_cells: usize,
    /// Cells per axis of the domain grid.
    #[serde(default = "default_domain_cells")]
    pub domain_cells: usize,
    #[serde(default = "default_exponents")]
    pub p: Vec<f64>,
}

impl Default for SobolevSection {
    fn default() -> Self {
        SobolevSection {
            ball_cells: default_ball_cells(),
            domain_cells: default_domain_cells(),
            p: default_exponents(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_out() }
    }
}

fn default_k() -> usize {
    32
}

fn default_seed() -> u64 {
    7
}

fn default_ball_cells() -> usize {
    64
}

fn default_domain_cells() -> usize {
    24
}

fn default_exponents() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn default_out() -> PathBuf {
    PathBuf::from("mdlab-out")
}

impl LabConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: LabConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.gauge.k == 0 {
            return Err(Error::Config("gauge.k must be positive".into()));
        }
        if let Some(r) = self.gauge.ring_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config("gauge.ring_radius must be positive".into()));
            }
        }
        if let Some(t) = self.schedules.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config("schedules.tol must be positive".into()));
            }
        }
        if self.schedules.halvings == Some(0) {
            return Err(Error::Config("schedules.halvings must be positive".into()));
        }
        if self.sobolev.ball_cells < 3 || self.sobolev.domain_cells < 3 {
            return Err(Error::Config("sobolev grids need at least 3 cells per axis".into()));
        }
        if self.sobolev.p.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
            return Err(Error::Config("sobolev.p entries must lie in [1, inf)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = LabConfig::from_toml("").unwrap();
        assert_eq!(c, LabConfig::default());
        assert_eq!(c.gauge.k, 32);
        assert_eq!(c.sobolev.p, vec![1.0, 2.0]);
    }

    #[test]
    fn sections_parse() {
        let c = LabConfig::from_toml(
            r#"
[scenario]
names = ["S1", "abs"]
points = [[0.1, 0.2]]

[gauge]
k = 16
seed = 3

[schedules]
halvings = 10
tol = 1e-5

[suites]
names = ["md-consistency"]

[output]
dir = "out"
"#,
        )
        .unwrap();
        assert_eq!(c.scenario.names, vec!["S1", "abs"]);
        assert_eq!(c.gauge.k, 16);
        assert_eq!(c.schedules.halvings, Some(10));
        assert_eq!(c.output.dir, PathBuf::from("out"));
        let again = LabConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in [
            "[gauge]\nk = 0",
            "[schedules]\ntol = -1.0",
            "[sobolev]\np = [0.5]",
            "[scenario]\nname = \"x\"",
            "[unknown]\na = 1",
        ] {
            assert!(matches!(LabConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }
}
