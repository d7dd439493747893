//! Design diagnostics: power, observed ("post-hoc") power, Type S / Type M
//! retrodesign, and the winner's-curse replication chain.
//!
//! Simulations draw from ChaCha8, a counter-based generator. The sample count
//! is cut into fixed blocks; block `b` uses stream `b` of the seeded
//! generator, blocks run in parallel, and partial results are merged in block
//! order. Output therefore depends only on the seed and the parameters, not
//! on the number of worker threads.

use crate::normal;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Draws per simulation block.
pub const BLOCK: u64 = 1 << 16;

pub const MIN_SIMS: u64 = 10_000;

pub const RNG_NAME: &str = "chacha8";

pub const POST_HOC_POWER_WARNING: &str = "observed power is a one-to-one function of the p-value and adds no information; \
     use the confidence interval to judge precision";

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

fn check_se(se: f64) -> Result<()> {
    if se > 0.0 && se.is_finite() {
        Ok(())
    } else {
        Err(Error::param("se", format!("must be positive, got {se}")))
    }
}

/// Power of a two-sided z-test at level `alpha` when the true effect is
/// `true_effect` and the estimate has standard error `se`.
pub fn power_two_sided(true_effect: f64, se: f64, alpha: f64) -> Result<f64> {
    check_se(se)?;
    check_alpha(alpha)?;
    Ok(power_from_ncp(true_effect.abs() / se, alpha))
}

fn power_from_ncp(d: f64, alpha: f64) -> f64 {
    let z = normal::two_sided_z(1.0 - alpha);
    normal::cdf(d - z) + normal::cdf(-d - z)
}

/// Noncentrality |effect|/se giving `target` power at level `alpha`.
pub fn required_ncp(target: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(target > alpha && target < 1.0) {
        return Err(Error::param(
            "target_power",
            format!("must lie in (alpha, 1), got {target}"),
        ));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while power_from_ncp(hi, alpha) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power_from_ncp(mid, alpha) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedPower {
    /// Two-sided power at the observed z.
    pub power: f64,
    /// Φ(z_obs − z_crit): the dominant one-sided term. Exactly 0.5 when p = α.
    pub one_sided_component: f64,
    pub warning: String,
}

/// Observed power computed from a p-value. Exists to show that it carries no
/// information beyond `p`; the result always carries a warning.
pub fn observed_power(p: f64, alpha: f64) -> Result<ObservedPower> {
    check_alpha(alpha)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("must lie in (0, 1), got {p}")));
    }
    let z_obs = normal::two_sided_z(1.0 - p);
    let z_crit = normal::two_sided_z(1.0 - alpha);
    Ok(ObservedPower {
        power: normal::cdf(z_obs - z_crit) + normal::cdf(-z_obs - z_crit),
        one_sided_component: normal::cdf(z_obs - z_crit),
        warning: POST_HOC_POWER_WARNING.to_string(),
    })
}

/// Closed-form design quantities for a normal estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMoments {
    pub power: f64,
    pub type_s: f64,
    pub exaggeration: f64,
}

/// Power, wrong-sign probability among significant results, and expected
/// |estimate| / |true effect| among significant results, from truncated
/// normal moments.
pub fn retrodesign_closed_form(true_effect: f64, se: f64, alpha: f64) -> Result<DesignMoments> {
    check_se(se)?;
    check_alpha(alpha)?;
    if true_effect == 0.0 || !true_effect.is_finite() {
        return Err(Error::param(
            "true_effect",
            "must be finite and non-zero (exaggeration is undefined at zero)",
        ));
    }
    let d = true_effect.abs() / se;
    let z = normal::two_sided_z(1.0 - alpha);
    let upper = normal::sf(z - d);
    let lower = normal::cdf(-z - d);
    let power = upper + lower;
    // E[|X| 1{|X| > z}] for X ~ N(d, 1).
    let abs_moment = d * upper + normal::pdf(z - d) + normal::pdf(z + d) - d * lower;
    Ok(DesignMoments {
        power,
        type_s: lower / power,
        exaggeration: abs_moment / power / d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McStandardErrors {
    pub power: f64,
    pub type_s: f64,
    pub exaggeration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrodesignResult {
    pub true_effect: f64,
    pub se: f64,
    pub alpha: f64,
    pub power: f64,
    pub type_s: f64,
    pub exaggeration: f64,
    pub n_sims: u64,
    pub n_significant: u64,
    pub seed: u64,
    pub rng: String,
    pub mc_se: McStandardErrors,
    pub closed_form: DesignMoments,
}

#[derive(Debug, Clone, Copy, Default)]
struct RetroPartial {
    n_sig: u64,
    n_wrong: u64,
    sum_ratio: f64,
    sum_ratio_sq: f64,
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn blocks(n_sims: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n_blocks = n_sims.div_ceil(BLOCK) as usize;
    (0..n_blocks).into_par_iter().map(move |b| {
        let b = b as u64;
        (b, BLOCK.min(n_sims - b * BLOCK))
    })
}

fn check_sims(n_sims: u64) -> Result<()> {
    if n_sims >= MIN_SIMS {
        Ok(())
    } else {
        Err(Error::param("n_sims", format!("must be at least {MIN_SIMS}, got {n_sims}")))
    }
}

/// Monte Carlo retrodesign with closed-form values attached for cross-checking.
pub fn retrodesign(
    true_effect: f64,
    se: f64,
    alpha: f64,
    n_sims: u64,
    seed: u64,
) -> Result<RetrodesignResult> {
    let closed_form = retrodesign_closed_form(true_effect, se, alpha)?;
    check_sims(n_sims)?;
    let z = normal::two_sided_z(1.0 - alpha);
    let sign = true_effect.signum();

    let partials: Vec<RetroPartial> = blocks(n_sims)
        .map(|(b, count)| {
            let mut rng = block_rng(seed, b);
            let mut acc = RetroPartial::default();
            for _ in 0..count {
                let noise: f64 = rng.sample(StandardNormal);
                let est = true_effect + se * noise;
                if (est / se).abs() > z {
                    acc.n_sig += 1;
                    if est.signum() != sign {
                        acc.n_wrong += 1;
                    }
                    let r = est.abs() / true_effect.abs();
                    acc.sum_ratio += r;
                    acc.sum_ratio_sq += r * r;
                }
            }
            acc
        })
        .collect();

    let total = partials.iter().fold(RetroPartial::default(), |a, p| RetroPartial {
        n_sig: a.n_sig + p.n_sig,
        n_wrong: a.n_wrong + p.n_wrong,
        sum_ratio: a.sum_ratio + p.sum_ratio,
        sum_ratio_sq: a.sum_ratio_sq + p.sum_ratio_sq,
    });
    if total.n_sig < 2 {
        return Err(Error::Numeric(format!(
            "only {} significant draws out of {n_sims}; increase n_sims",
            total.n_sig
        )));
    }

    let n = n_sims as f64;
    let k = total.n_sig as f64;
    let power = k / n;
    let type_s = total.n_wrong as f64 / k;
    let exaggeration = total.sum_ratio / k;
    let var_ratio = (total.sum_ratio_sq / k - exaggeration * exaggeration).max(0.0) * k / (k - 1.0);

    Ok(RetrodesignResult {
        true_effect,
        se,
        alpha,
        power,
        type_s,
        exaggeration,
        n_sims,
        n_significant: total.n_sig,
        seed,
        rng: RNG_NAME.to_string(),
        mc_se: McStandardErrors {
            power: (power * (1.0 - power) / n).sqrt(),
            type_s: (type_s * (1.0 - type_s) / k).sqrt(),
            exaggeration: (var_ratio / k).sqrt(),
        },
        closed_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
}

impl Distribution {
    fn from_sorted(v: &[f64]) -> Self {
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            if i + 1 < v.len() {
                v[i] + frac * (v[i + 1] - v[i])
            } else {
                v[i]
            }
        };
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p10: q(0.1),
            median: q(0.5),
            p90: q(0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurseChainReport {
    pub true_effect: f64,
    pub exploratory_se: f64,
    pub alpha: f64,
    pub target_power: f64,
    pub exploratory_power: f64,
    pub n_sims: u64,
    pub n_significant: u64,
    pub seed: u64,
    pub rng: String,
    /// Fraction of significant exploratory estimates with the wrong sign.
    pub wrong_sign: f64,
    /// True power of the confirmatory trial sized from the exploratory estimate.
    pub confirmatory_power: Distribution,
    /// `target_power` minus the median confirmatory power.
    pub median_shortfall: f64,
    /// Planned sample size over the size actually needed for `target_power`,
    /// i.e. (true effect / exploratory estimate)².
    pub sample_size_ratio: Distribution,
}

/// Significance-filtered exploratory trials, each followed by a confirmatory
/// trial sized from the exploratory estimate and evaluated at the true effect.
///
/// Sample size scales as 1/effect², so a confirmatory trial planned from an
/// estimate `e` has noncentrality `ncp(target) · |true| / |e|` at the truth.
pub fn winners_curse_chain(
    true_effect: f64,
    exploratory_se: f64,
    alpha: f64,
    target_power: f64,
    n_sims: u64,
    seed: u64,
) -> Result<CurseChainReport> {
    let moments = retrodesign_closed_form(true_effect, exploratory_se, alpha)?;
    check_sims(n_sims)?;
    let target_ncp = required_ncp(target_power, alpha)?;
    let z = normal::two_sided_z(1.0 - alpha);
    let sign = true_effect.signum();

    let per_block: Vec<(u64, Vec<(f64, f64)>)> = blocks(n_sims)
        .map(|(b, count)| {
            let mut rng = block_rng(seed, b);
            let mut wrong = 0u64;
            let mut kept = Vec::new();
            for _ in 0..count {
                let noise: f64 = rng.sample(StandardNormal);
                let est = true_effect + exploratory_se * noise;
                if (est / exploratory_se).abs() > z {
                    if est.signum() != sign {
                        wrong += 1;
                    }
                    let shrink = true_effect.abs() / est.abs();
                    kept.push((power_from_ncp(target_ncp * shrink, alpha), shrink * shrink));
                }
            }
            (wrong, kept)
        })
        .collect();

    let wrong: u64 = per_block.iter().map(|(w, _)| w).sum();
    let (mut powers, mut ratios): (Vec<f64>, Vec<f64>) =
        per_block.into_iter().flat_map(|(_, k)| k).unzip();
    if powers.is_empty() {
        return Err(Error::Numeric(format!(
            "no significant exploratory draws out of {n_sims}"
        )));
    }
    powers.sort_by(f64::total_cmp);
    ratios.sort_by(f64::total_cmp);
    let confirmatory_power = Distribution::from_sorted(&powers);

    Ok(CurseChainReport {
        true_effect,
        exploratory_se,
        alpha,
        target_power,
        exploratory_power: moments.power,
        n_sims,
        n_significant: powers.len() as u64,
        seed,
        rng: RNG_NAME.to_string(),
        wrong_sign: wrong as f64 / powers.len() as f64,
        median_shortfall: target_power - confirmatory_power.median,
        confirmatory_power,
        sample_size_ratio: Distribution::from_sorted(&ratios),
    })
}

/// Relative sample size needed to scale the interval width by `width_ratio`.
pub fn n_ratio_for_width(width_ratio: f64) -> Result<f64> {
    if !(width_ratio > 0.0 && width_ratio.is_finite()) {
        return Err(Error::param(
            "width_ratio",
            format!("must be positive, got {width_ratio}"),
        ));
    }
    Ok(width_ratio.powi(-2))
}
