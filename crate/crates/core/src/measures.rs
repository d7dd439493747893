//! Effect measures and the normal likelihood implied by a reported interval.
//!
//! Ratio measures (HR, RR, OR) have null 1 and are analysed as logarithms;
//! additive measures (mean difference, absolute risk difference) have null 0
//! and are analysed untransformed. Everything downstream works on the
//! analysis scale, so "log" in field names means "analysis scale" for
//! additive measures.

use crate::normal;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Relative gap between the reported point and the geometric mean of the
/// interval bounds above which a data-quality warning is attached.
pub const CONSISTENCY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectScale {
    #[serde(rename = "HR")]
    HazardRatio,
    #[serde(rename = "RR")]
    RiskRatio,
    #[serde(rename = "OR")]
    OddsRatio,
    #[serde(rename = "MD")]
    MeanDifference,
    #[serde(rename = "ARD")]
    RiskDifference,
}

impl EffectScale {
    pub fn is_ratio(self) -> bool {
        matches!(
            self,
            EffectScale::HazardRatio | EffectScale::RiskRatio | EffectScale::OddsRatio
        )
    }

    /// Null value on the reported scale.
    pub fn null_value(self) -> f64 {
        if self.is_ratio() {
            1.0
        } else {
            0.0
        }
    }

    /// Map a reported-scale value onto the analysis scale.
    pub fn to_analysis(self, x: f64) -> f64 {
        if self.is_ratio() {
            x.ln()
        } else {
            x
        }
    }

    pub fn from_analysis(self, x: f64) -> f64 {
        if self.is_ratio() {
            x.exp()
        } else {
            x
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            EffectScale::HazardRatio => "HR",
            EffectScale::RiskRatio => "RR",
            EffectScale::OddsRatio => "OR",
            EffectScale::MeanDifference => "MD",
            EffectScale::RiskDifference => "ARD",
        }
    }
}

impl fmt::Display for EffectScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev())
    }
}

impl FromStr for EffectScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HR" => Ok(EffectScale::HazardRatio),
            "RR" => Ok(EffectScale::RiskRatio),
            "OR" => Ok(EffectScale::OddsRatio),
            "MD" | "MEANDIFFERENCE" => Ok(EffectScale::MeanDifference),
            "ARD" => Ok(EffectScale::RiskDifference),
            other => Err(Error::InvalidEstimate(format!(
                "unknown effect scale `{other}` (expected HR, RR, OR, MD or ARD)"
            ))),
        }
    }
}

/// Normal likelihood for the effect on the analysis scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Likelihood {
    pub mean: f64,
    pub se: f64,
}

/// A reported point estimate and confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub scale: EffectScale,
    pub point: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub ci_level: f64,
    pub log_mean: f64,
    pub log_se: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EffectEstimate {
    /// Validate a reported estimate and derive its likelihood.
    pub fn new(
        scale: EffectScale,
        point: f64,
        ci_lower: f64,
        ci_upper: f64,
        ci_level: f64,
    ) -> Result<Self> {
        if ![point, ci_lower, ci_upper, ci_level].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidEstimate("non-finite value".into()));
        }
        if !(ci_level > 0.0 && ci_level < 1.0) {
            return Err(Error::InvalidEstimate(format!(
                "ci_level {ci_level} is outside (0, 1)"
            )));
        }
        if scale.is_ratio() && (ci_lower <= 0.0 || ci_upper <= 0.0 || point <= 0.0) {
            return Err(Error::InvalidEstimate(format!(
                "{scale} bounds must be positive (got {point} [{ci_lower}, {ci_upper}])"
            )));
        }
        if ci_lower == ci_upper {
            return Err(Error::InvalidEstimate("zero-width confidence interval".into()));
        }
        if ci_lower > ci_upper {
            return Err(Error::InvalidEstimate(format!(
                "ci_lower {ci_lower} exceeds ci_upper {ci_upper}"
            )));
        }
        if point < ci_lower || point > ci_upper {
            return Err(Error::InvalidEstimate(format!(
                "point {point} lies outside [{ci_lower}, {ci_upper}]"
            )));
        }

        let lik = likelihood_from_interval(scale, point, ci_lower, ci_upper, ci_level);
        let mut warnings = Vec::new();
        if scale.is_ratio() {
            let geo = (ci_lower * ci_upper).sqrt();
            let gap = (geo - point).abs() / point;
            if gap > CONSISTENCY_TOLERANCE {
                warnings.push(format!(
                    "point {point} differs from the interval's geometric mean {geo:.4} by {:.1}%",
                    gap * 100.0
                ));
            }
        }
        Ok(Self {
            scale,
            point,
            ci_lower,
            ci_upper,
            ci_level,
            log_mean: lik.mean,
            log_se: lik.se,
            warnings,
        })
    }

    /// Shorthand for a 95% interval.
    pub fn new95(scale: EffectScale, point: f64, ci_lower: f64, ci_upper: f64) -> Result<Self> {
        Self::new(scale, point, ci_lower, ci_upper, 0.95)
    }

    pub fn likelihood(&self) -> Likelihood {
        Likelihood {
            mean: self.log_mean,
            se: self.log_se,
        }
    }

    /// Whether the interval contains the null (closed interval).
    pub fn includes_null(&self) -> bool {
        let null = self.scale.null_value();
        self.ci_lower <= null && null <= self.ci_upper
    }
}

fn likelihood_from_interval(
    scale: EffectScale,
    point: f64,
    lo: f64,
    hi: f64,
    level: f64,
) -> Likelihood {
    let z = normal::two_sided_z(level);
    Likelihood {
        mean: scale.to_analysis(point),
        se: (scale.to_analysis(hi) - scale.to_analysis(lo)) / (2.0 * z),
    }
}

/// Analysis-scale mean and standard error recovered from the reported interval.
pub fn derive_likelihood(e: &EffectEstimate) -> Likelihood {
    likelihood_from_interval(e.scale, e.point, e.ci_lower, e.ci_upper, e.ci_level)
}

/// Two-sided Wald p-value against the null.
pub fn two_sided_p(e: &EffectEstimate) -> f64 {
    let z = e.log_mean.abs() / e.log_se;
    (2.0 * normal::sf(z)).min(1.0)
}

/// Interval on the reported scale from an analysis-scale mean and SE.
pub fn wald_ci(scale: EffectScale, mean: f64, se: f64, level: f64) -> Result<(f64, f64)> {
    if !(se > 0.0) {
        return Err(Error::param("se", format!("must be positive, got {se}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {level}")));
    }
    let half = normal::two_sided_z(level) * se;
    Ok((
        scale.from_analysis(mean - half),
        scale.from_analysis(mean + half),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // (ln hi - ln lo) / (2 * 1.959963984540054), evaluated independently.
    const EOLIA_SE: f64 = 0.162_517_709_2;
    const ART_SE: f64 = 0.127_203_957_5;

    #[test]
    fn eolia_likelihood() {
        let e = EffectEstimate::new95(EffectScale::RiskRatio, 0.76, 0.55, 1.04).unwrap();
        assert!((e.log_se - EOLIA_SE).abs() < 1e-9);
        assert!((e.log_mean - (-0.274_436_845_7)).abs() < 1e-9);
        assert_eq!(derive_likelihood(&e), e.likelihood());
    }

    #[test]
    fn symmetric_log_interval() {
        let e = EffectEstimate::new95(EffectScale::HazardRatio, 1.0, 0.5, 2.0).unwrap();
        assert_eq!(e.log_mean, 0.0);
        assert!((e.log_se - 2f64.ln() / 1.959_963_984_540_054).abs() < 1e-14);
        assert!((e.log_se - 0.3537).abs() < 1e-4);
        assert_eq!(two_sided_p(&e), 1.0);
    }

    #[test]
    fn art_likelihood() {
        let e = EffectEstimate::new95(EffectScale::OddsRatio, 1.27, 0.99, 1.63).unwrap();
        assert!((e.log_se - ART_SE).abs() < 1e-9);
        assert!((e.log_mean - 0.239_016_900_5).abs() < 1e-9);
    }

    #[test]
    fn reported_p_values() {
        let eolia = EffectEstimate::new95(EffectScale::RiskRatio, 0.76, 0.55, 1.04).unwrap();
        assert!((two_sided_p(&eolia) - 0.09).abs() <= 0.01);
        let andromeda =
            EffectEstimate::new95(EffectScale::HazardRatio, 0.75, 0.55, 1.02).unwrap();
        assert!((two_sided_p(&andromeda) - 0.06).abs() <= 0.01);
    }

    #[test]
    fn wald_ci_inverts_examples() {
        // Centred on the reported point, so not the published (asymmetric) bounds.
        let (lo, hi) = wald_ci(EffectScale::RiskRatio, -0.274_436_845_7, 0.162_517_709_2, 0.95).unwrap();
        assert!((lo - 0.552_685_750).abs() < 1e-8 && (hi - 1.045_078_509).abs() < 1e-8);
        let (lo, hi) = wald_ci(EffectScale::HazardRatio, 0.0, 0.353_653_5, 0.95).unwrap();
        assert!((lo - 0.500).abs() < 5e-4 && (hi - 2.000).abs() < 5e-4);
        let (lo, hi) = wald_ci(EffectScale::OddsRatio, 0.239_016_900_5, 0.127_203_957_5, 0.95).unwrap();
        assert!((lo - 0.989_754_571).abs() < 1e-8 && (hi - 1.629_595_910).abs() < 1e-8);
        assert!(wald_ci(EffectScale::OddsRatio, 0.0, 0.0, 0.95).is_err());
    }

    #[test]
    fn rejects_bad_intervals() {
        use EffectScale::*;
        assert!(EffectEstimate::new95(HazardRatio, 0.8, 0.0, 1.1).is_err());
        assert!(EffectEstimate::new95(HazardRatio, 0.8, -0.2, 1.1).is_err());
        assert!(EffectEstimate::new95(HazardRatio, 0.8, 0.8, 0.8).is_err());
        assert!(EffectEstimate::new95(HazardRatio, 0.8, 1.1, 0.7).is_err());
        assert!(EffectEstimate::new95(HazardRatio, 1.5, 0.7, 1.1).is_err());
        assert!(EffectEstimate::new(HazardRatio, 0.8, 0.7, 1.1, 1.0).is_err());
        assert!(EffectEstimate::new95(MeanDifference, -1.0, -3.0, 1.0).is_ok());
    }

    #[test]
    fn inconsistent_point_is_a_warning_not_an_error() {
        let e = EffectEstimate::new95(EffectScale::HazardRatio, 0.70, 0.70, 1.30).unwrap();
        assert_eq!(e.warnings.len(), 1);
        let ok = EffectEstimate::new95(EffectScale::HazardRatio, 0.75, 0.55, 1.02).unwrap();
        assert!(ok.warnings.is_empty());
    }

    #[test]
    fn additive_scale_uses_identity() {
        let e = EffectEstimate::new95(EffectScale::MeanDifference, -2.0, -3.96, -0.04).unwrap();
        assert_eq!(e.log_mean, -2.0);
        assert!((e.log_se - 1.0).abs() < 1e-3);
        let (lo, hi) = wald_ci(e.scale, e.log_mean, e.log_se, 0.95).unwrap();
        assert!((lo + 3.96).abs() < 1e-12 && (hi + 0.04).abs() < 1e-12);
    }

    #[test]
    fn non_default_level_is_rescaled() {
        let e95 = EffectEstimate::new95(EffectScale::HazardRatio, 1.0, 0.5, 2.0).unwrap();
        let (lo, hi) = wald_ci(e95.scale, e95.log_mean, e95.log_se, 0.90).unwrap();
        let e90 = EffectEstimate::new(EffectScale::HazardRatio, 1.0, lo, hi, 0.90).unwrap();
        assert!((e90.log_se - e95.log_se).abs() < 1e-12);
    }

    #[test]
    fn scale_parsing() {
        assert_eq!("hr".parse::<EffectScale>().unwrap(), EffectScale::HazardRatio);
        assert_eq!("ARD".parse::<EffectScale>().unwrap(), EffectScale::RiskDifference);
        assert!("HRR".parse::<EffectScale>().is_err());
    }

    fn ratio_interval() -> impl Strategy<Value = (f64, f64, f64)> {
        (-2.0f64..2.0, 0.01f64..1.5, 0.0f64..1.0).prop_map(|(c, half, t)| {
            let lo = (c - half).exp();
            let hi = (c + half).exp();
            (lo, hi, (c - half + 2.0 * half * t).exp())
        })
    }

    proptest! {
        #[test]
        fn wald_round_trip((lo, hi, point) in ratio_interval(), level in 0.5f64..0.999) {
            let e = EffectEstimate::new(EffectScale::OddsRatio, point, lo, hi, level).unwrap();
            let (l2, h2) = wald_ci(e.scale, (lo * hi).sqrt().ln(), e.log_se, level).unwrap();
            prop_assert!(((l2 - lo) / lo).abs() < 1e-9);
            prop_assert!(((h2 - hi) / hi).abs() < 1e-9);
        }

        #[test]
        fn widening_increases_se((lo, hi, point) in ratio_interval(), k in 1.001f64..3.0) {
            let e = EffectEstimate::new95(EffectScale::RiskRatio, point, lo, hi).unwrap();
            let w = EffectEstimate::new95(EffectScale::RiskRatio, point, lo / k, hi * k).unwrap();
            prop_assert!(w.log_se > e.log_se);
        }

        #[test]
        fn p_value_interval_duality(c in -1.0f64..1.0, half in 0.01f64..1.0) {
            // Point at the log-midpoint so the test and the interval share one centre.
            let lo = (c - half).exp();
            let hi = (c + half).exp();
            let e = EffectEstimate::new95(EffectScale::HazardRatio, c.exp(), lo, hi).unwrap();
            let p = two_sided_p(&e);
            // Skip draws within rounding distance of the boundary.
            prop_assume!((c.abs() - half).abs() > 1e-9);
            prop_assert_eq!(p < 0.05, !e.includes_null());
        }
    }
}
