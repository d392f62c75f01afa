use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CustomProfile, ModelParams, SwitchingProfile};
use crate::propagator::PropagatorConfig;

/// How the first-link coupling is switched on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProfileSpec {
    Sudden,
    Linear,
    /// Tabulated profile read from a file.
    Custom(PathBuf),
}

impl FromStr for ProfileSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sudden" => Ok(Self::Sudden),
            "linear" => Ok(Self::Linear),
            _ => match s.strip_prefix("custom:") {
                Some(path) if !path.is_empty() => Ok(Self::Custom(PathBuf::from(path))),
                _ => Err(Error::Config(format!(
                    "unknown profile '{s}' (expected sudden, linear or custom:<path>)"
                ))),
            },
        }
    }
}

impl TryFrom<String> for ProfileSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ProfileSpec> for String {
    fn from(p: ProfileSpec) -> String {
        p.to_string()
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sudden => write!(f, "sudden"),
            Self::Linear => write!(f, "linear"),
            Self::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceProfile {
    /// Engine-to-engine agreement at the accuracy the integrator supports.
    Strict,
    /// Agreement at the scale a plotted curve can resolve.
    #[default]
    Figure,
}

impl FromStr for ToleranceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "figure" => Ok(Self::Figure),
            _ => Err(Error::Config(format!("unknown tolerance profile '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

/// Everything a run needs. Read from a TOML file; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub delta: f64,
    pub profile: ProfileSpec,
    /// Rise time of the linear profile; ignored by the other kinds.
    pub rise_time: f64,
    pub initial_site: usize,
    pub t_max: f64,
    pub step: f64,
    pub output_stride: usize,
    pub norm_tolerance: f64,
    pub n_sites: Option<usize>,
    /// Sites whose probabilities are tabulated.
    pub sites: usize,
    pub exponential_window: Option<[f64; 2]>,
    pub powerlaw_window: Option<[f64; 2]>,
    pub oscillation_window: Option<[f64; 2]>,
    pub tolerance_profile: ToleranceProfile,
    pub format: OutputFormat,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = PropagatorConfig::default();
        Self {
            delta: 0.3,
            profile: ProfileSpec::Sudden,
            rise_time: 0.0,
            initial_site: 1,
            t_max: p.t_max,
            step: p.step,
            output_stride: p.output_stride,
            norm_tolerance: p.norm_tolerance,
            n_sites: None,
            sites: 5,
            exponential_window: None,
            powerlaw_window: None,
            oscillation_window: None,
            tolerance_profile: ToleranceProfile::default(),
            format: OutputFormat::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.delta).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds the switching profile, reading the table for custom profiles.
    pub fn switching_profile(&self) -> Result<SwitchingProfile> {
        let p = self.params()?;
        let profile = match &self.profile {
            ProfileSpec::Sudden => SwitchingProfile::sudden(&p),
            ProfileSpec::Linear => SwitchingProfile::linear(&p, self.rise_time)?,
            ProfileSpec::Custom(path) => {
                let prof = SwitchingProfile::Custom(load_custom_profile(path)?);
                if (prof.final_delta() - self.delta).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "custom profile plateau {} differs from delta = {}",
                        prof.final_delta(),
                        self.delta
                    )));
                }
                prof
            }
        };
        Ok(profile)
    }

    pub fn propagator_config(&self) -> PropagatorConfig {
        PropagatorConfig {
            step: self.step,
            t_max: self.t_max,
            output_stride: self.output_stride,
            norm_tolerance: self.norm_tolerance,
            n_sites: self.n_sites,
        }
    }

    /// Checks everything that can be checked without running an engine.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.propagator_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.initial_site == 0 {
            return Err(Error::Config("initial_site counts from 1".into()));
        }
        if self.sites == 0 {
            return Err(Error::Config("sites must be at least 1".into()));
        }
        let profile = self.switching_profile()?;
        if profile.rise_time() > self.t_max {
            return Err(Error::Config(format!(
                "rise time {} exceeds t_max = {}",
                profile.rise_time(),
                self.t_max
            )));
        }
        for (name, w) in [
            ("exponential_window", self.exponential_window),
            ("powerlaw_window", self.powerlaw_window),
            ("oscillation_window", self.oscillation_window),
        ] {
            if let Some([lo, hi]) = w {
                if !(lo >= 0.0 && lo < hi && hi <= self.t_max) {
                    return Err(Error::Config(format!(
                        "{name} [{lo}, {hi}] must satisfy 0 <= lo < hi <= t_max = {}",
                        self.t_max
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reads a custom profile table.
///
/// One `t value` pair per line, separated by whitespace or a comma. Lines
/// starting with `#` are comments, except `# average: <x>`, which declares
/// the mean coupling over the rise interval and is checked against the table.
pub fn parse_custom_profile(text: &str) -> Result<CustomProfile> {
    let mut samples = Vec::new();
    let mut average = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("average:") {
                average = Some(v.trim().parse::<f64>().map_err(|e| {
                    Error::Config(format!("line {}: bad average: {e}", lineno + 1))
                })?);
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let [t, v] = fields[..] else {
            return Err(Error::Config(format!(
                "line {}: expected two columns, found {}",
                lineno + 1,
                fields.len()
            )));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))
        };
        samples.push((parse(t)?, parse(v)?));
    }
    CustomProfile::new(samples, average)
}

pub fn load_custom_profile(path: &Path) -> Result<CustomProfile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read profile {}: {e}", path.display())))?;
    parse_custom_profile(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("delta = 0.3\nbogus = 1\n").unwrap_err();
        assert!(err.is_config(), "{err}");
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn parses_and_validates() {
        let c = ExperimentConfig::from_toml(
            "delta = 0.4\nprofile = \"linear\"\nrise_time = 2.0\nt_max = 30.0\npowerlaw_window = [10.0, 30.0]\n",
        )
        .unwrap();
        assert_eq!(c.profile, ProfileSpec::Linear);
        c.validate().unwrap();
        let bad = ExperimentConfig {
            powerlaw_window: Some([10.0, 40.0]),
            ..c.clone()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { rise_time: 0.0, ..c };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn profile_spec_round_trip() {
        for s in ["sudden", "linear", "custom:/tmp/p.txt"] {
            assert_eq!(s.parse::<ProfileSpec>().unwrap().to_string(), s);
        }
        assert!("custom:".parse::<ProfileSpec>().is_err());
        assert!("ramp".parse::<ProfileSpec>().is_err());
    }

    #[test]
    fn custom_table_format() {
        let p = parse_custom_profile("# ramp\n# average: 0.15\n0 0\n0.5, 0.15\n1.0 0.3\n").unwrap();
        assert_eq!(p.samples().len(), 3);
        assert!(parse_custom_profile("# average: 0.2\n0 0\n0.5 0.15\n1 0.3\n").is_err());
        assert!(parse_custom_profile("0 0 1\n").is_err());
        assert!(parse_custom_profile("0 0\n1 x\n").is_err());
    }
}
