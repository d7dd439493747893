//! Bayesian reanalysis from summary statistics.
//!
//! A normal prior on the analysis scale is combined with the normal
//! likelihood recovered from the reported interval. Each posterior is reduced
//! to a bundle of probabilities (any benefit, clinically important benefit,
//! ROPE, any harm, severe harm), the bundle is mapped to a verdict by a
//! configurable rule table, and the spread of posterior centres across the
//! prior grid is summarised with Cochran's Q and I².

use crate::classifier::{Reason, ThresholdSet, Track, Verdict, VerdictClass};
use crate::measures::{EffectEstimate, EffectScale, Likelihood};
use crate::normal;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Skeptical prior SD on the log scale: 95% of prior mass between ratios 0.5 and 2.
pub const SKEPTICAL_LOG_SD: f64 = 0.355;

/// Minimum prior mass on the opposite side of the null for the
/// optimistic and pessimistic priors.
pub const PRIOR_OVERLAP: f64 = 0.15;

/// SD used to represent a flat prior.
pub const FLAT_SD: f64 = 1e6;

/// Prior sensitivity below this I² counts as robust.
pub const ROBUST_I2: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorLabel {
    Skeptical,
    Optimistic,
    Pessimistic,
    DataDerived,
    Flat,
}

impl fmt::Display for PriorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorLabel::Skeptical => "skeptical",
            PriorLabel::Optimistic => "optimistic",
            PriorLabel::Pessimistic => "pessimistic",
            PriorLabel::DataDerived => "data_derived",
            PriorLabel::Flat => "flat",
        })
    }
}

impl std::str::FromStr for PriorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "skeptical" | "sceptical" => Ok(PriorLabel::Skeptical),
            "optimistic" | "enthusiastic" => Ok(PriorLabel::Optimistic),
            "pessimistic" => Ok(PriorLabel::Pessimistic),
            "data_derived" | "dataderived" | "meta" => Ok(PriorLabel::DataDerived),
            "flat" => Ok(PriorLabel::Flat),
            other => Err(Error::param("prior", format!("unknown prior label `{other}`"))),
        }
    }
}

/// Normal prior on the analysis scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub label: PriorLabel,
    pub mean: f64,
    pub sd: f64,
}

impl PriorSpec {
    pub fn new(label: PriorLabel, mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::param("prior mean", format!("must be finite, got {mean}")));
        }
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::param("prior sd", format!("must be positive, got {sd}")));
        }
        Ok(Self { label, mean, sd })
    }

    pub fn flat() -> Self {
        Self {
            label: PriorLabel::Flat,
            mean: 0.0,
            sd: FLAT_SD,
        }
    }
}

/// How wide the optimistic and pessimistic priors are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorWidth {
    /// Use the skeptical SD unless that would leave less than the required
    /// overlap across the null, in which case widen until the overlap is met.
    #[default]
    ModerateFloor,
    /// Solve the SD so the overlap across the null is exactly the required mass.
    ExactOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorGridConfig {
    /// Skeptical SD; `None` means 0.355 on ratio scales and |MCID| on additive scales.
    pub skeptical_sd: Option<f64>,
    pub overlap: f64,
    pub width: PriorWidth,
}

impl Default for PriorGridConfig {
    fn default() -> Self {
        Self {
            skeptical_sd: None,
            overlap: PRIOR_OVERLAP,
            width: PriorWidth::default(),
        }
    }
}

impl PriorGridConfig {
    fn skeptical_sd_for(&self, t: &ThresholdSet) -> f64 {
        self.skeptical_sd.unwrap_or_else(|| {
            if t.scale.is_ratio() {
                SKEPTICAL_LOG_SD
            } else {
                t.mcid_benefit.abs()
            }
        })
    }

    /// SD for a prior centred at `center` given the overlap rule.
    fn directional_sd(&self, center: f64, skeptical_sd: f64) -> f64 {
        let exact = center.abs() / normal::quantile(1.0 - self.overlap);
        match self.width {
            PriorWidth::ExactOverlap => exact,
            PriorWidth::ModerateFloor => exact.max(skeptical_sd),
        }
    }
}

/// Skeptical, optimistic and pessimistic priors, plus a data-derived prior
/// when a pooled estimate `(mean, sd)` on the analysis scale is supplied.
pub fn build_prior_grid(t: &ThresholdSet, meta_estimate: Option<(f64, f64)>) -> Result<Vec<PriorSpec>> {
    build_prior_grid_with(t, meta_estimate, &PriorGridConfig::default())
}

pub fn build_prior_grid_with(
    t: &ThresholdSet,
    meta_estimate: Option<(f64, f64)>,
    cfg: &PriorGridConfig,
) -> Result<Vec<PriorSpec>> {
    t.validate()?;
    if !(cfg.overlap > 0.0 && cfg.overlap < 0.5) {
        return Err(Error::param("overlap", format!("must lie in (0, 0.5), got {}", cfg.overlap)));
    }
    let skeptical_sd = cfg.skeptical_sd_for(t);
    let optimistic = t.scale.to_analysis(t.mcid_benefit);
    let pessimistic = t.scale.to_analysis(t.mcid_harm);
    let mut grid = vec![
        PriorSpec::new(PriorLabel::Skeptical, 0.0, skeptical_sd)?,
        PriorSpec::new(
            PriorLabel::Optimistic,
            optimistic,
            cfg.directional_sd(optimistic, skeptical_sd),
        )?,
        PriorSpec::new(
            PriorLabel::Pessimistic,
            pessimistic,
            cfg.directional_sd(pessimistic, skeptical_sd),
        )?,
    ];
    if let Some((mean, sd)) = meta_estimate {
        grid.push(PriorSpec::new(PriorLabel::DataDerived, mean, sd)?);
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub sd: f64,
}

/// Precision-weighted normal-normal update.
pub fn conjugate_posterior(prior: &PriorSpec, lik: Likelihood) -> Posterior {
    let w_prior = 1.0 / (prior.sd * prior.sd);
    let w_lik = 1.0 / (lik.se * lik.se);
    let w = w_prior + w_lik;
    Posterior {
        mean: (prior.mean * w_prior + lik.mean * w_lik) / w,
        sd: w.sqrt().recip(),
    }
}

/// Posterior probabilities used for classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMetrics {
    pub pr_any_benefit: f64,
    pub pr_mcid_benefit: f64,
    pub pr_rope: f64,
    pub pr_any_harm: f64,
    pub pr_severe_harm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub prior: PriorSpec,
    pub mean: f64,
    pub sd: f64,
    /// Posterior median on the reported scale.
    pub median: f64,
    pub cri95: (f64, f64),
    #[serde(flatten)]
    pub metrics: PosteriorMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arr: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PosteriorSummary {
    pub fn posterior(&self) -> Posterior {
        Posterior {
            mean: self.mean,
            sd: self.sd,
        }
    }
}

/// Probabilities of the posterior relative to the thresholds, plus median,
/// 95% credible interval and, when a control event rate is supplied,
/// ARR = CER × (1 − median ratio).
pub fn posterior_metrics(
    prior: &PriorSpec,
    post: Posterior,
    t: &ThresholdSet,
    cer: Option<f64>,
) -> Result<PosteriorSummary> {
    if !(post.sd > 0.0) {
        return Err(Error::Numeric(format!("posterior sd {} is not positive", post.sd)));
    }
    let th = t.oriented();
    let sign = t.direction.sign();
    let m = sign * post.mean;
    let s = post.sd;

    let metrics = PosteriorMetrics {
        pr_any_benefit: normal::cdf(-m / s),
        pr_mcid_benefit: normal::cdf((th.benefit - m) / s),
        pr_rope: normal::interval_mass(m, s, th.rope_lo, th.rope_hi),
        pr_any_harm: normal::sf(-m / s),
        pr_severe_harm: normal::sf((th.harm - m) / s),
    };

    let z = normal::two_sided_z(0.95);
    let a = t.scale.from_analysis(post.mean - z * s);
    let b = t.scale.from_analysis(post.mean + z * s);
    let median = t.scale.from_analysis(post.mean);

    let mut warnings = Vec::new();
    let arr = match cer {
        None => None,
        Some(c) if !(c > 0.0 && c < 1.0) => {
            return Err(Error::param("cer", format!("must lie in (0, 1), got {c}")));
        }
        Some(c) if t.scale.is_ratio() => {
            if t.scale == EffectScale::OddsRatio {
                warnings.push(
                    "ARR = CER x (1 - OR) treats the odds ratio as a risk ratio; exact only when events are rare"
                        .to_string(),
                );
            }
            Some(c * (1.0 - median))
        }
        Some(_) => {
            warnings.push(format!("ARR is not defined on the {} scale", t.scale));
            None
        }
    };

    Ok(PosteriorSummary {
        prior: *prior,
        mean: post.mean,
        sd: post.sd,
        median,
        cri95: (a.min(b), a.max(b)),
        metrics,
        arr,
        warnings,
    })
}

/// Numeric cutoffs for the posterior verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleTable {
    /// Severe harm on the reference posterior must exceed this...
    pub harmful_min_severe_harm: f64,
    /// ...and any-harm must exceed this under every prior in the grid.
    pub harmful_min_any_harm_all_priors: f64,
    pub positive_min_mcid_benefit: f64,
    pub positive_max_rope: f64,
    pub positive_max_any_harm: f64,
    pub neutral_min_rope: f64,
    pub neutral_max_mcid_benefit: f64,
    pub negative_min_rope: f64,
    pub negative_max_mcid_benefit: f64,
    /// Inclusive.
    pub negative_max_severe_harm: f64,
    pub imprecise_min_any_benefit: f64,
    pub imprecise_mcid_benefit_low: f64,
    pub imprecise_mcid_benefit_high: f64,
}

impl Default for RuleTable {
    fn default() -> Self {
        Self {
            harmful_min_severe_harm: 0.40,
            harmful_min_any_harm_all_priors: 0.90,
            positive_min_mcid_benefit: 0.80,
            positive_max_rope: 0.05,
            positive_max_any_harm: 0.05,
            neutral_min_rope: 0.90,
            neutral_max_mcid_benefit: 0.02,
            negative_min_rope: 0.80,
            negative_max_mcid_benefit: 0.05,
            negative_max_severe_harm: 0.20,
            imprecise_min_any_benefit: 0.95,
            imprecise_mcid_benefit_low: 0.40,
            imprecise_mcid_benefit_high: 0.70,
        }
    }
}

/// Apply the rule table to a reference metric bundle and the full grid.
///
/// Precedence: Harmful, Positive, Neutral, Negative, Imprecise (+),
/// otherwise Inconclusive. Only Harmful consults the rest of the grid.
pub fn classify_metrics(
    reference: &PosteriorMetrics,
    grid: &[PosteriorMetrics],
    rules: &RuleTable,
) -> Result<Verdict> {
    if grid.is_empty() {
        return Err(Error::GridTooSmall { needed: 1, got: 0 });
    }
    let r = reference;
    let verdict = |class, rationale| Verdict {
        class,
        track: Track::Bayesian,
        rationale,
    };

    if r.pr_severe_harm > rules.harmful_min_severe_harm
        && grid
            .iter()
            .all(|m| m.pr_any_harm > rules.harmful_min_any_harm_all_priors)
    {
        return Ok(verdict(
            VerdictClass::Harmful,
            vec![Reason::SevereHarmOnReference, Reason::HarmRobustAcrossPriors],
        ));
    }
    if r.pr_mcid_benefit > rules.positive_min_mcid_benefit
        && r.pr_rope < rules.positive_max_rope
        && r.pr_any_harm < rules.positive_max_any_harm
    {
        return Ok(verdict(VerdictClass::Positive, vec![Reason::McidBenefitDominant]));
    }
    if r.pr_rope > rules.neutral_min_rope && r.pr_mcid_benefit < rules.neutral_max_mcid_benefit {
        return Ok(verdict(
            VerdictClass::Neutral,
            vec![Reason::RopeDominant, Reason::BenefitExcluded],
        ));
    }
    if r.pr_rope > rules.negative_min_rope
        && r.pr_mcid_benefit < rules.negative_max_mcid_benefit
        && r.pr_severe_harm <= rules.negative_max_severe_harm
    {
        return Ok(verdict(
            VerdictClass::Negative,
            vec![Reason::BenefitExcluded, Reason::RopeDominant],
        ));
    }
    if r.pr_any_benefit > rules.imprecise_min_any_benefit
        && (rules.imprecise_mcid_benefit_low..=rules.imprecise_mcid_benefit_high)
            .contains(&r.pr_mcid_benefit)
    {
        return Ok(verdict(
            VerdictClass::ImprecisePlus,
            vec![Reason::BenefitLikelyMagnitudeUncertain],
        ));
    }
    Ok(verdict(VerdictClass::Inconclusive, vec![Reason::NothingDominates]))
}

/// Minimum grid size for a posterior verdict.
pub const MIN_GRID: usize = 3;

/// Posterior verdict over a prior grid. The skeptical posterior is the
/// reference; if the grid has none, the first entry is used.
pub fn classify_bayesian(grid: &[PosteriorSummary], rules: &RuleTable) -> Result<Verdict> {
    if grid.len() < MIN_GRID {
        return Err(Error::GridTooSmall {
            needed: MIN_GRID,
            got: grid.len(),
        });
    }
    let reference = reference_summary(grid);
    let all: Vec<PosteriorMetrics> = grid.iter().map(|s| s.metrics).collect();
    classify_metrics(&reference.metrics, &all, rules)
}

pub fn reference_summary(grid: &[PosteriorSummary]) -> &PosteriorSummary {
    grid.iter()
        .find(|s| s.prior.label == PriorLabel::Skeptical)
        .unwrap_or(&grid[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub i2: f64,
    pub q: f64,
    pub robust: bool,
}

/// Fixed-effect Cochran's Q and I² over posterior centres, each weighted by
/// its posterior precision.
pub fn prior_sensitivity(posteriors: &[Posterior]) -> Result<SensitivityResult> {
    if posteriors.len() < 2 {
        return Err(Error::GridTooSmall {
            needed: 2,
            got: posteriors.len(),
        });
    }
    let weights: Vec<f64> = posteriors.iter().map(|p| 1.0 / (p.sd * p.sd)).collect();
    let total: f64 = weights.iter().sum();
    let pooled = posteriors
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * p.mean)
        .sum::<f64>()
        / total;
    let q: f64 = posteriors
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * (p.mean - pooled).powi(2))
        .sum();
    let df = (posteriors.len() - 1) as f64;
    let i2 = if q > df { (q - df) / q } else { 0.0 };
    Ok(SensitivityResult {
        i2,
        q,
        robust: i2 < ROBUST_I2,
    })
}

/// Everything the posterior track produces for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reanalysis {
    pub posteriors: Vec<PosteriorSummary>,
    pub verdict: Verdict,
    pub sensitivity: SensitivityResult,
}

pub fn reanalyze(
    e: &EffectEstimate,
    t: &ThresholdSet,
    priors: &[PriorSpec],
    cer: Option<f64>,
    rules: &RuleTable,
) -> Result<Reanalysis> {
    t.check_scale(e)?;
    let lik = e.likelihood();
    let posteriors = priors
        .iter()
        .map(|p| posterior_metrics(p, conjugate_posterior(p, lik), t, cer))
        .collect::<Result<Vec<_>>>()?;
    let verdict = classify_bayesian(&posteriors, rules)?;
    let sensitivity =
        prior_sensitivity(&posteriors.iter().map(|s| s.posterior()).collect::<Vec<_>>())?;
    Ok(Reanalysis {
        posteriors,
        verdict,
        sensitivity,
    })
}

/// Prototype posterior profiles, one per verdict class.
///
/// Approximate values ("~x%") are taken at face value, bounds ("<1%", ">90%")
/// at a representative point inside the bound, and ranges at their midpoint.
/// The profile tables give severe harm, so any-harm is 1 − any benefit.
pub fn fingerprint_prototypes() -> [(VerdictClass, PosteriorMetrics); 6] {
    let m = |any: f64, mcid: f64, rope: f64, severe: f64| PosteriorMetrics {
        pr_any_benefit: any,
        pr_mcid_benefit: mcid,
        pr_rope: rope,
        pr_any_harm: 1.0 - any,
        pr_severe_harm: severe,
    };
    [
        (VerdictClass::Positive, m(0.995, 0.95, 0.005, 0.005)),
        (VerdictClass::ImprecisePlus, m(0.97, 0.60, 0.08, 0.03)),
        (VerdictClass::Neutral, m(0.62, 0.005, 0.95, 0.05)),
        (VerdictClass::Inconclusive, m(0.74, 0.38, 0.35, 0.18)),
        (VerdictClass::Negative, m(0.72, 0.03, 0.88, 0.20)),
        (VerdictClass::Harmful, m(0.005, 0.005, 0.04, 0.96)),
    ]
}
