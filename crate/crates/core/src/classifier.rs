//! Interval-versus-threshold classification.
//!
//! The frequentist verdict looks only at where the confidence interval sits
//! relative to the null, the clinically important benefit threshold (MCID),
//! the harm threshold, and the region of practical equivalence (ROPE). The
//! p-value is never consulted. Conditional equivalence testing and the
//! non-inferiority / equivalence margin rules live here as well.
//!
//! Internally every comparison is made on an "oriented" analysis scale where
//! benefit is negative, so the rules are written once for both directions.

use crate::measures::{two_sided_p, EffectEstimate, EffectScale};
use crate::normal;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default ROPE for ratio measures: (1/1.1, 1.1).
pub const DEFAULT_RATIO_ROPE: (f64, f64) = (1.0 / 1.1, 1.1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenefitDirection {
    LowerIsBenefit,
    HigherIsBenefit,
}

impl BenefitDirection {
    pub(crate) fn sign(self) -> f64 {
        match self {
            BenefitDirection::LowerIsBenefit => 1.0,
            BenefitDirection::HigherIsBenefit => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            BenefitDirection::LowerIsBenefit => BenefitDirection::HigherIsBenefit,
            BenefitDirection::HigherIsBenefit => BenefitDirection::LowerIsBenefit,
        }
    }
}

/// Clinical thresholds that anchor every classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub scale: EffectScale,
    pub direction: BenefitDirection,
    pub mcid_benefit: f64,
    pub mcid_harm: f64,
    pub rope: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ni_margin: Option<f64>,
}

impl ThresholdSet {
    /// Build and validate a threshold set.
    ///
    /// When `mcid_harm` is absent it defaults to the mirror image of
    /// `mcid_benefit` about the null (the reciprocal on ratio scales). When
    /// `rope` is absent it defaults to (1/1.1, 1.1) on ratio scales and to
    /// ±|δ|/2 around zero on additive scales.
    pub fn new(
        scale: EffectScale,
        direction: BenefitDirection,
        mcid_benefit: f64,
        mcid_harm: Option<f64>,
        rope: Option<(f64, f64)>,
        ni_margin: Option<f64>,
    ) -> Result<Self> {
        let mcid_harm = mcid_harm.unwrap_or_else(|| mirror_value(scale, mcid_benefit));
        let rope = rope.unwrap_or_else(|| default_rope(scale, mcid_benefit));
        let t = Self {
            scale,
            direction,
            mcid_benefit,
            mcid_harm,
            rope,
            ni_margin,
        };
        t.validate()?;
        Ok(t)
    }

    /// Lower-is-benefit thresholds with the default harm threshold and ROPE.
    pub fn lower_is_benefit(scale: EffectScale, mcid_benefit: f64) -> Result<Self> {
        Self::new(
            scale,
            BenefitDirection::LowerIsBenefit,
            mcid_benefit,
            None,
            None,
            None,
        )
    }

    pub fn with_mcid_harm(mut self, mcid_harm: f64) -> Result<Self> {
        self.mcid_harm = mcid_harm;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rope(mut self, lower: f64, upper: f64) -> Result<Self> {
        self.rope = (lower, upper);
        self.validate()?;
        Ok(self)
    }

    pub fn with_ni_margin(mut self, margin: f64) -> Result<Self> {
        self.ni_margin = Some(margin);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.mcid_benefit, self.mcid_harm, self.rope.0, self.rope.1];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidThresholds("non-finite threshold".into()));
        }
        if self.scale.is_ratio() && vals.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidThresholds(format!(
                "{} thresholds must be positive",
                self.scale
            )));
        }
        if self.rope.0 >= self.rope.1 {
            return Err(Error::InvalidThresholds(format!(
                "rope lower {} must be below rope upper {}",
                self.rope.0, self.rope.1
            )));
        }
        let o = self.oriented();
        if !(o.benefit < 0.0) {
            return Err(Error::InvalidThresholds(format!(
                "mcid_benefit {} is not on the benefit side of the null for {:?}",
                self.mcid_benefit, self.direction
            )));
        }
        if !(o.harm > 0.0) {
            return Err(Error::InvalidThresholds(format!(
                "mcid_harm {} is not on the harm side of the null for {:?}",
                self.mcid_harm, self.direction
            )));
        }
        if !(o.rope_lo < 0.0 && 0.0 < o.rope_hi) {
            return Err(Error::InvalidThresholds(format!(
                "rope ({}, {}) does not straddle the null",
                self.rope.0, self.rope.1
            )));
        }
        if !(o.benefit < o.rope_lo && o.rope_hi < o.harm) {
            return Err(Error::InvalidThresholds(format!(
                "rope ({}, {}) must lie strictly between mcid_benefit {} and mcid_harm {}",
                self.rope.0, self.rope.1, self.mcid_benefit, self.mcid_harm
            )));
        }
        if let Some(m) = self.ni_margin {
            if !m.is_finite() || (self.scale.is_ratio() && m <= 0.0) {
                return Err(Error::InvalidThresholds(format!("bad ni_margin {m}")));
            }
            if !(self.orient(m) > 0.0) {
                return Err(Error::InvalidThresholds(format!(
                    "ni_margin {m} must lie on the harm side of the null"
                )));
            }
        }
        Ok(())
    }

    /// Analysis-scale value with benefit mapped to negative numbers.
    pub(crate) fn orient(&self, x: f64) -> f64 {
        self.direction.sign() * self.scale.to_analysis(x)
    }

    pub(crate) fn oriented(&self) -> OrientedThresholds {
        let a = self.orient(self.rope.0);
        let b = self.orient(self.rope.1);
        OrientedThresholds {
            benefit: self.orient(self.mcid_benefit),
            harm: self.orient(self.mcid_harm),
            rope_lo: a.min(b),
            rope_hi: a.max(b),
        }
    }

    /// Analysis-scale ROPE bounds, sorted.
    pub fn rope_analysis(&self) -> (f64, f64) {
        let a = self.scale.to_analysis(self.rope.0);
        let b = self.scale.to_analysis(self.rope.1);
        (a.min(b), a.max(b))
    }

    pub fn check_scale(&self, e: &EffectEstimate) -> Result<()> {
        if e.scale != self.scale {
            return Err(Error::ScaleMismatch {
                estimate: e.scale.to_string(),
                thresholds: self.scale.to_string(),
            });
        }
        Ok(())
    }

    /// Reflect all thresholds through the null, keeping the direction, so that
    /// benefit and harm thresholds trade places.
    pub fn reflected(&self) -> Self {
        let m = |x| mirror_value(self.scale, x);
        Self {
            scale: self.scale,
            direction: self.direction,
            mcid_benefit: m(self.mcid_harm),
            mcid_harm: m(self.mcid_benefit),
            rope: (m(self.rope.1), m(self.rope.0)),
            ni_margin: self.ni_margin,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct OrientedThresholds {
    pub benefit: f64,
    pub harm: f64,
    pub rope_lo: f64,
    pub rope_hi: f64,
}

/// Mirror image of a reported-scale value about the null.
pub fn mirror_value(scale: EffectScale, x: f64) -> f64 {
    if scale.is_ratio() {
        1.0 / x
    } else {
        -x
    }
}

fn default_rope(scale: EffectScale, mcid_benefit: f64) -> (f64, f64) {
    if scale.is_ratio() {
        DEFAULT_RATIO_ROPE
    } else {
        let half = mcid_benefit.abs() / 2.0;
        (-half, half)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictClass {
    Positive,
    ImprecisePlus,
    Neutral,
    Inconclusive,
    Negative,
    Harmful,
}

impl VerdictClass {
    pub const ALL: [VerdictClass; 6] = [
        VerdictClass::Positive,
        VerdictClass::ImprecisePlus,
        VerdictClass::Neutral,
        VerdictClass::Inconclusive,
        VerdictClass::Negative,
        VerdictClass::Harmful,
    ];

    /// Neutral, Negative, Positive and Harmful make a definite claim.
    pub fn is_precise(self) -> bool {
        matches!(
            self,
            VerdictClass::Positive
                | VerdictClass::Neutral
                | VerdictClass::Negative
                | VerdictClass::Harmful
        )
    }
}

impl fmt::Display for VerdictClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictClass::Positive => "Positive",
            VerdictClass::ImprecisePlus => "Imprecise (+)",
            VerdictClass::Neutral => "Neutral",
            VerdictClass::Inconclusive => "Inconclusive",
            VerdictClass::Negative => "Negative",
            VerdictClass::Harmful => "Harmful",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    Frequentist,
    Bayesian,
    Cet,
    NonInferiority,
}

/// One relation that contributed to a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    // interval geometry
    ExcludesNullBenefitSide,
    ExcludesNullHarmSide,
    IncludesNull,
    BeyondMcidBenefit,
    StraddlesMcidBenefit,
    ExcludesMcidBenefit,
    BeyondMcidHarm,
    StraddlesMcidHarm,
    ExcludesMcidHarm,
    WithinRope,
    SignificantButClinicallyNull,
    BoundaryTie,
    // conditional equivalence testing
    NullRejected,
    NullNotRejected,
    EquivalenceShown,
    EquivalenceNotShown,
    // posterior rule table
    SevereHarmOnReference,
    HarmRobustAcrossPriors,
    McidBenefitDominant,
    RopeDominant,
    BenefitExcluded,
    BenefitLikelyMagnitudeUncertain,
    NothingDominates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: VerdictClass,
    pub track: Track,
    pub rationale: Vec<Reason>,
}

impl Verdict {
    fn new(class: VerdictClass, track: Track, rationale: Vec<Reason>) -> Self {
        debug_assert!(!rationale.is_empty());
        Self {
            class,
            track,
            rationale,
        }
    }
}

/// Interval bounds on the oriented analysis scale (benefit negative).
fn oriented_interval(e: &EffectEstimate, t: &ThresholdSet) -> (f64, f64) {
    let a = t.orient(e.ci_lower);
    let b = t.orient(e.ci_upper);
    (a.min(b), a.max(b))
}

/// Six-class verdict from interval position alone.
///
/// Rule order, with benefit oriented to the left:
/// 1. interval inside the ROPE: Neutral (noted when the null is excluded);
/// 2. null excluded on the benefit side, whole interval past the MCID: Positive;
/// 3. null excluded on the benefit side, interval straddles the MCID: Imprecise (+);
/// 4. null excluded on the harm side, whole interval past the harm threshold: Harmful;
/// 5. both the MCID and the harm threshold excluded: Negative;
/// 6. anything else: Inconclusive.
///
/// Comparisons are strict; an interval bound landing exactly on a threshold
/// falls through to the less decisive class.
pub fn classify_frequentist(e: &EffectEstimate, t: &ThresholdSet) -> Result<Verdict> {
    t.check_scale(e)?;
    t.validate()?;
    let (lo, hi) = oriented_interval(e, t);
    let th = t.oriented();
    let track = Track::Frequentist;

    let benefit_sig = hi < 0.0;
    let harm_sig = lo > 0.0;
    let null_reason = if benefit_sig {
        Reason::ExcludesNullBenefitSide
    } else if harm_sig {
        Reason::ExcludesNullHarmSide
    } else {
        Reason::IncludesNull
    };

    if th.rope_lo < lo && hi < th.rope_hi {
        let mut why = vec![null_reason, Reason::WithinRope];
        if benefit_sig || harm_sig {
            why.push(Reason::SignificantButClinicallyNull);
        }
        return Ok(Verdict::new(VerdictClass::Neutral, track, why));
    }
    if benefit_sig && hi < th.benefit {
        return Ok(Verdict::new(
            VerdictClass::Positive,
            track,
            vec![null_reason, Reason::BeyondMcidBenefit],
        ));
    }
    if benefit_sig && lo < th.benefit && th.benefit < hi {
        return Ok(Verdict::new(
            VerdictClass::ImprecisePlus,
            track,
            vec![null_reason, Reason::StraddlesMcidBenefit],
        ));
    }
    if harm_sig && lo > th.harm {
        return Ok(Verdict::new(
            VerdictClass::Harmful,
            track,
            vec![null_reason, Reason::BeyondMcidHarm],
        ));
    }
    if lo > th.benefit && hi < th.harm {
        return Ok(Verdict::new(
            VerdictClass::Negative,
            track,
            vec![null_reason, Reason::ExcludesMcidBenefit, Reason::ExcludesMcidHarm],
        ));
    }

    let mut why = vec![null_reason];
    if lo < th.benefit && th.benefit < hi {
        why.push(Reason::StraddlesMcidBenefit);
    }
    if lo < th.harm && th.harm < hi {
        why.push(Reason::StraddlesMcidHarm);
    }
    if [th.benefit, th.harm, th.rope_lo, th.rope_hi]
        .iter()
        .any(|&x| x == lo || x == hi)
    {
        why.push(Reason::BoundaryTie);
    }
    Ok(Verdict::new(VerdictClass::Inconclusive, track, why))
}

/// One-sided p-values of the two one-sided tests against the ROPE margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TostResult {
    pub p_lower: f64,
    pub p_upper: f64,
}

pub fn tost(e: &EffectEstimate, t: &ThresholdSet) -> Result<TostResult> {
    t.check_scale(e)?;
    let (lo, hi) = t.rope_analysis();
    Ok(TostResult {
        p_lower: normal::sf((e.log_mean - lo) / e.log_se),
        p_upper: normal::sf((hi - e.log_mean) / e.log_se),
    })
}

/// Conditional equivalence test: a two-sided test at `alpha` first; when it
/// fails to reject, two one-sided tests against the ROPE margins.
///
/// Returns Positive (difference shown), Negative (equivalence shown) or
/// Inconclusive.
pub fn classify_cet(e: &EffectEstimate, t: &ThresholdSet, alpha: f64) -> Result<Verdict> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::param("alpha", format!("must lie in (0, 0.5), got {alpha}")));
    }
    t.check_scale(e)?;
    let track = Track::Cet;
    if two_sided_p(e) < alpha {
        return Ok(Verdict::new(
            VerdictClass::Positive,
            track,
            vec![Reason::NullRejected],
        ));
    }
    let tost = tost(e, t)?;
    if tost.p_lower < alpha && tost.p_upper < alpha {
        Ok(Verdict::new(
            VerdictClass::Negative,
            track,
            vec![Reason::NullNotRejected, Reason::EquivalenceShown],
        ))
    } else {
        Ok(Verdict::new(
            VerdictClass::Inconclusive,
            track,
            vec![Reason::NullNotRejected, Reason::EquivalenceNotShown],
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NiOutcome {
    NonInferior,
    Inferior,
    Inconclusive,
}

/// Non-inferiority against the one-sided harm margin Δ.
pub fn classify_noninferiority(e: &EffectEstimate, t: &ThresholdSet) -> Result<NiOutcome> {
    t.check_scale(e)?;
    let margin = t.ni_margin.ok_or(Error::MissingMargin)?;
    let m = t.orient(margin);
    let (lo, hi) = oriented_interval(e, t);
    Ok(if hi < m {
        NiOutcome::NonInferior
    } else if lo > m {
        NiOutcome::Inferior
    } else {
        NiOutcome::Inconclusive
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceOutcome {
    Equivalent,
    NotEquivalent,
    Inconclusive,
}

/// Two-sided equivalence against a band on the reported scale.
pub fn classify_equivalence(e: &EffectEstimate, band: (f64, f64)) -> Result<EquivalenceOutcome> {
    let (lower, upper) = band;
    if !(lower < upper) || !(lower < e.scale.null_value() && e.scale.null_value() < upper) {
        return Err(Error::InvalidThresholds(format!(
            "equivalence band ({lower}, {upper}) must straddle the null"
        )));
    }
    Ok(if lower < e.ci_lower && e.ci_upper < upper {
        EquivalenceOutcome::Equivalent
    } else if e.ci_upper < lower || e.ci_lower > upper {
        EquivalenceOutcome::NotEquivalent
    } else {
        EquivalenceOutcome::Inconclusive
    })
}
