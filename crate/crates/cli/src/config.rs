use crate::error::CliError;
use rctverdict::bayes::{PriorGridConfig, RuleTable};
use rctverdict::report::ForestOptions;
use serde::Deserialize;
use std::path::Path;

/// Settings file (TOML). Every section and key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub thresholds: ThresholdDefaults,
    pub priors: PriorGridConfig,
    pub rules: RuleTable,
    pub plot: ForestOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdDefaults {
    pub mcid_harm: Option<f64>,
    pub rope_lower: Option<f64>,
    pub rope_upper: Option<f64>,
    pub ni_margin: Option<f64>,
    pub direction: Option<String>,
    pub cet_alpha: Option<f64>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rctverdict::bayes::PriorWidth;

    #[test]
    fn partial_sections_keep_defaults() {
        let c = Config::parse(
            "[thresholds]\nmcid_harm = 1.25\n\n[rules]\npositive_min_mcid_benefit = 0.9\n\n[priors]\nwidth = \"exact_overlap\"\n",
        )
        .unwrap();
        assert_eq!(c.thresholds.mcid_harm, Some(1.25));
        assert_eq!(c.rules.positive_min_mcid_benefit, 0.9);
        assert_eq!(c.rules.neutral_min_rope, RuleTable::default().neutral_min_rope);
        assert_eq!(c.priors.width, PriorWidth::ExactOverlap);
        assert_eq!(c.plot, ForestOptions::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::parse("[thresholds]\nmcid = 0.8\n").is_err());
        assert!(Config::parse("[colours]\n").is_err());
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }
}
