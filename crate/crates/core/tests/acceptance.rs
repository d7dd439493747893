//! Acceptance checks. Each test prints one `PASS` / `FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` gives a summary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rctverdict::bayes::{
    build_prior_grid, classify_metrics, conjugate_posterior, fingerprint_prototypes,
    prior_sensitivity, reanalyze, PriorLabel, PriorSpec, Reanalysis, RuleTable,
};
use rctverdict::classifier::{
    classify_frequentist, BenefitDirection, ThresholdSet, VerdictClass,
};
use rctverdict::design::{
    observed_power, power_two_sided, required_ncp, retrodesign, retrodesign_closed_form,
};
use rctverdict::measures::{two_sided_p, EffectEstimate, EffectScale, Likelihood};
use rctverdict::report::{render_report, AnalysisRecord, Format};
use std::time::{Duration, Instant};

fn report(label: &str, pass: bool, detail: impl AsRef<str>) {
    println!(
        "\n{} {label}: {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
}

fn est(scale: EffectScale, p: f64, lo: f64, hi: f64) -> EffectEstimate {
    EffectEstimate::new95(scale, p, lo, hi).unwrap()
}

fn eolia() -> EffectEstimate {
    est(EffectScale::RiskRatio, 0.76, 0.55, 1.04)
}

fn andromeda() -> EffectEstimate {
    est(EffectScale::HazardRatio, 0.75, 0.55, 1.02)
}

fn art() -> EffectEstimate {
    est(EffectScale::OddsRatio, 1.27, 0.99, 1.63)
}

fn default_reanalysis(e: &EffectEstimate) -> Reanalysis {
    let t = ThresholdSet::lower_is_benefit(e.scale, 0.80).unwrap();
    let grid = build_prior_grid(&t, None).unwrap();
    reanalyze(e, &t, &grid, None, &RuleTable::default()).unwrap()
}

// ------------------------------------------------------------------ oracles

/// Posterior mass in (a, b) by trapezoid integration of prior × likelihood,
/// normalised by the same integral over a window covering both.
fn mass_by_quadrature(prior: &PriorSpec, lik: Likelihood, a: f64, b: f64) -> f64 {
    let lo = (prior.mean - 14.0 * prior.sd).min(lik.mean - 14.0 * lik.se);
    let hi = (prior.mean + 14.0 * prior.sd).max(lik.mean + 14.0 * lik.se);
    let h = prior.sd.min(lik.se) / 400.0;
    let log_dens = |x: f64| {
        let zp = (x - prior.mean) / prior.sd;
        let zl = (x - lik.mean) / lik.se;
        -0.5 * (zp * zp + zl * zl)
    };
    // Peak of a product of Gaussians lies between the two centres.
    let peak = {
        let (mut l, mut r) = (prior.mean.min(lik.mean), prior.mean.max(lik.mean));
        for _ in 0..200 {
            let m1 = l + (r - l) / 3.0;
            let m2 = r - (r - l) / 3.0;
            if log_dens(m1) < log_dens(m2) {
                l = m1;
            } else {
                r = m2;
            }
        }
        log_dens(0.5 * (l + r))
    };
    let trap = |a: f64, b: f64| {
        if b <= a {
            return 0.0;
        }
        let n = (((b - a) / h).ceil() as usize).max(2_000);
        let step = (b - a) / n as f64;
        let mut acc = 0.5 * ((log_dens(a) - peak).exp() + (log_dens(b) - peak).exp());
        for i in 1..n {
            acc += (log_dens(a + i as f64 * step) - peak).exp();
        }
        acc * step
    };
    trap(a.max(lo), b.min(hi)) / trap(lo, hi)
}

// ---------------------------------------------------------------- criteria

#[test]
fn p_value_reconstruction() {
    let cases = [
        ("EOLIA", eolia(), 0.09, 0.01),
        ("ANDROMEDA-SHOCK", andromeda(), 0.06, 0.01),
        ("ART", art(), 0.057, 0.005),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, e, target, tol) in cases {
        let reps = 10_000u32;
        let start = Instant::now();
        let mut p = 0.0;
        for _ in 0..reps {
            p = two_sided_p(std::hint::black_box(&e));
        }
        let per_call = start.elapsed() / reps;
        let pass = (p - target).abs() <= tol && per_call < Duration::from_millis(1);
        ok &= pass;
        detail.push(format!("{name} p={p:.4} ({per_call:?}/call)"));
    }
    report("p-value reconstruction", ok, detail.join(", "));
    assert!(ok);
}

#[test]
fn frequentist_golden_suite() {
    use EffectScale::HazardRatio;
    use VerdictClass::*;
    let lower = |d: f64| ThresholdSet::lower_is_benefit(HazardRatio, d).unwrap();
    let scenarios_t = lower(0.80)
        .with_mcid_harm(1.25)
        .unwrap()
        .with_rope(0.909, 1.10)
        .unwrap();
    let cases: Vec<(&str, EffectEstimate, ThresholdSet, VerdictClass)> = vec![
        ("scenario A", est(HazardRatio, 0.78, 0.52, 1.18), scenarios_t.clone(), Inconclusive),
        ("scenario B", est(HazardRatio, 0.95, 0.87, 1.04), scenarios_t.clone(), Negative),
        ("scenario C", est(HazardRatio, 0.98, 0.93, 1.03), scenarios_t, Neutral),
        ("REDUCE-IT", est(HazardRatio, 0.75, 0.68, 0.83), lower(0.85), Positive),
        ("PARADIGM-HF", est(HazardRatio, 0.80, 0.73, 0.87), lower(0.85), ImprecisePlus),
        (
            "STRENGTH",
            est(HazardRatio, 0.99, 0.90, 1.09),
            lower(0.85).with_rope(0.88, 1.0 / 0.88).unwrap(),
            Neutral,
        ),
        (
            "dal-OUTCOMES",
            est(HazardRatio, 1.04, 0.93, 1.16),
            lower(0.85).with_mcid_harm(1.25).unwrap(),
            Negative,
        ),
        ("IABP-SHOCK II", est(HazardRatio, 0.96, 0.79, 1.17), lower(0.85), Inconclusive),
        (
            "CAST",
            est(HazardRatio, 2.64, 1.60, 4.36),
            lower(0.85).with_mcid_harm(1.25).unwrap(),
            Harmful,
        ),
    ];
    let mut hits = 0;
    let mut misses = Vec::new();
    for (name, e, t, want) in &cases {
        let got = classify_frequentist(e, t).unwrap().class;
        if got == *want {
            hits += 1;
        } else {
            misses.push(format!("{name}: got {got}, want {want}"));
        }
    }
    let ok = hits == cases.len();
    report(
        "frequentist golden suite",
        ok,
        format!("{hits}/{} exact {}", cases.len(), misses.join("; ")),
    );
    assert!(ok);
}

#[test]
fn bayesian_reproduction_bands() {
    let mut ok = true;
    let mut detail = Vec::new();
    let mut max_oracle_err: f64 = 0.0;

    let mut check_oracle = |e: &EffectEstimate, r: &Reanalysis| {
        let lik = e.likelihood();
        let t = ThresholdSet::lower_is_benefit(e.scale, 0.80).unwrap();
        let (d, h) = (t.mcid_benefit.ln(), t.mcid_harm.ln());
        let (r0, r1) = (t.rope.0.ln(), t.rope.1.ln());
        for s in &r.posteriors {
            let q = |a, b| mass_by_quadrature(&s.prior, lik, a, b);
            let inf = f64::INFINITY;
            let m = &s.metrics;
            for (got, want) in [
                (m.pr_any_benefit, q(-inf, 0.0)),
                (m.pr_mcid_benefit, q(-inf, d)),
                (m.pr_rope, q(r0, r1)),
                (m.pr_any_harm, q(0.0, inf)),
                (m.pr_severe_harm, q(h, inf)),
            ] {
                max_oracle_err = max_oracle_err.max((got - want).abs());
            }
        }
    };

    let a = andromeda();
    let ra = default_reanalysis(&a);
    check_oracle(&a, &ra);
    let benefit: Vec<f64> = ra.posteriors.iter().map(|s| s.metrics.pr_any_benefit).collect();
    let pass = benefit.iter().all(|p| *p > 0.90);
    ok &= pass;
    detail.push(format!("ANDROMEDA Pr(benefit) {benefit:.3?}"));

    let r = art();
    let rr = default_reanalysis(&r);
    check_oracle(&r, &rr);
    let harm: Vec<f64> = rr.posteriors.iter().map(|s| s.metrics.pr_any_harm).collect();
    let optimistic = rr
        .posteriors
        .iter()
        .find(|s| s.prior.label == PriorLabel::Optimistic)
        .unwrap()
        .metrics
        .pr_any_harm;
    let pass = harm.iter().all(|p| *p > 0.90) && optimistic >= 0.93;
    ok &= pass;
    detail.push(format!("ART Pr(harm) {harm:.3?}"));

    let e = eolia();
    let re = default_reanalysis(&e);
    check_oracle(&e, &re);
    let eb: Vec<f64> = re.posteriors.iter().map(|s| s.metrics.pr_any_benefit).collect();
    let pass = eb.iter().all(|p| (0.85..=0.99).contains(p));
    ok &= pass;
    detail.push(format!("EOLIA Pr(benefit) {eb:.3?}"));

    ok &= max_oracle_err < 1e-6;
    detail.push(format!("max oracle error {max_oracle_err:.1e}"));
    report("Bayesian reproduction bands", ok, detail.join(", "));
    assert!(ok);
}

#[test]
fn prior_sensitivity_bands() {
    let r = default_reanalysis(&art());
    let i2 = r.sensitivity.i2;
    let robust = i2 <= 0.20 && r.sensitivity.robust;
    let near_target = (i2 - 0.11).abs() <= 0.10;

    let stress = prior_sensitivity(&[
        rctverdict::bayes::Posterior { mean: -0.5, sd: 0.1 },
        rctverdict::bayes::Posterior { mean: 0.5, sd: 0.1 },
    ])
    .unwrap();
    let stress_ok = stress.i2 > 0.9;

    let ok = robust && near_target && stress_ok;
    report(
        "prior sensitivity",
        ok,
        format!(
            "ART I2={i2:.4} (Q={:.4}, robust={robust}, |I2-0.11|<=0.10: {near_target}), stress I2={:.3}",
            r.sensitivity.q, stress.i2
        ),
    );
    assert!(ok);
}

#[test]
fn retrodesign_bands() {
    let start = Instant::now();
    let d = required_ncp(0.06, 0.05).unwrap();
    let cf = retrodesign_closed_form(d, 1.0, 0.05).unwrap();
    let band = (0.18..=0.28).contains(&cf.type_s) && (7.0..=11.0).contains(&cf.exaggeration);
    let mc = retrodesign(d, 1.0, 0.05, 1_000_000, 20_240_601).unwrap();
    let within = (mc.power - cf.power).abs() <= 3.0 * mc.mc_se.power
        && (mc.type_s - cf.type_s).abs() <= 3.0 * mc.mc_se.type_s
        && (mc.exaggeration - cf.exaggeration).abs() <= 3.0 * mc.mc_se.exaggeration;
    let elapsed = start.elapsed();
    let ok = band && within && elapsed < Duration::from_secs(5);
    report(
        "retrodesign bands",
        ok,
        format!(
            "D={d:.4} power={:.4} type_s={:.4} exaggeration={:.3}; MC power={:.4} type_s={:.4} exaggeration={:.3}; {elapsed:?}",
            cf.power, cf.type_s, cf.exaggeration, mc.power, mc.type_s, mc.exaggeration
        ),
    );
    assert!(ok);
}

#[test]
fn post_hoc_power_fallacy() {
    let at_alpha = observed_power(0.05, 0.05).unwrap();
    let exact = at_alpha.one_sided_component == 0.5;
    let grid: Vec<f64> = (1..=100).map(|i| i as f64 / 101.0).collect();
    let powers: Vec<f64> = grid
        .iter()
        .map(|p| observed_power(*p, 0.05).unwrap().power)
        .collect();
    let monotone = powers.windows(2).all(|w| w[1] < w[0]);
    let ok = exact && monotone;
    report(
        "post-hoc power fallacy",
        ok,
        format!(
            "one-sided component {:.6}, two-sided {:.6}, strictly decreasing over 100 p values: {monotone}",
            at_alpha.one_sided_component, at_alpha.power
        ),
    );
    assert!(ok);
}

/// Random valid (estimate, thresholds) pair on the HR or MD scale.
fn random_case(rng: &mut ChaCha8Rng) -> (EffectEstimate, ThresholdSet) {
    let additive = rng.random_bool(0.3);
    let direction = if rng.random_bool(0.5) {
        BenefitDirection::LowerIsBenefit
    } else {
        BenefitDirection::HigherIsBenefit
    };
    let s = if direction == BenefitDirection::LowerIsBenefit { 1.0 } else { -1.0 };
    let db: f64 = rng.random_range(0.05..0.6);
    let dh: f64 = rng.random_range(0.05..0.6);
    let rl = db * rng.random_range(0.1..0.95);
    let rh = dh * rng.random_range(0.1..0.95);
    let c: f64 = rng.random_range(-1.0..1.0);
    let half: f64 = rng.random_range(0.005..0.8);
    let (scale, map): (EffectScale, fn(f64) -> f64) = if additive {
        (EffectScale::MeanDifference, |x| x)
    } else {
        (EffectScale::HazardRatio, f64::exp)
    };
    let rope = {
        let (a, b) = (map(-s * rl), map(s * rh));
        (a.min(b), a.max(b))
    };
    let t = ThresholdSet::new(
        scale,
        direction,
        map(-s * db),
        Some(map(s * dh)),
        Some(rope),
        None,
    )
    .unwrap();
    let e = EffectEstimate::new95(scale, map(c), map(c - half), map(c + half)).unwrap();
    (e, t)
}

/// Class memberships evaluated directly from interval geometry on the
/// oriented scale (benefit negative); exactly one should hold.
fn geometric_classes(e: &EffectEstimate, t: &ThresholdSet) -> Vec<VerdictClass> {
    let s = if t.direction == BenefitDirection::LowerIsBenefit { 1.0 } else { -1.0 };
    let o = |x: f64| s * e.scale.to_analysis(x);
    let (a, b) = (o(e.ci_lower), o(e.ci_upper));
    let (lo, hi) = (a.min(b), a.max(b));
    let d = o(t.mcid_benefit);
    let h = o(t.mcid_harm);
    let (r0, r1) = (o(t.rope.0), o(t.rope.1));
    let (rl, rh) = (r0.min(r1), r0.max(r1));
    let neutral = rl < lo && hi < rh;
    let mut out = Vec::new();
    if neutral {
        out.push(VerdictClass::Neutral);
    }
    if hi < d {
        out.push(VerdictClass::Positive);
    }
    if hi < 0.0 && lo < d && d < hi {
        out.push(VerdictClass::ImprecisePlus);
    }
    if lo > h {
        out.push(VerdictClass::Harmful);
    }
    if !neutral && d < lo && hi < h {
        out.push(VerdictClass::Negative);
    }
    // Ties at a threshold are left out of the geometric reading.
    let ties = [d, h, rl, rh].iter().any(|x| *x == lo || *x == hi);
    if out.is_empty() && !ties {
        out.push(VerdictClass::Inconclusive);
    }
    out
}

#[test]
fn property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Totality and exclusivity.
    let mut totality_ok = 0u32;
    let mut tie_cases = 0u32;
    for _ in 0..100_000 {
        let (e, t) = random_case(&mut rng);
        let got = classify_frequentist(&e, &t).unwrap().class;
        let expected = geometric_classes(&e, &t);
        match expected.as_slice() {
            [only] if *only == got => totality_ok += 1,
            [] => tie_cases += 1,
            _ => {}
        }
    }
    let totality = totality_ok + tie_cases == 100_000;

    // Conjugate posterior against quadrature.
    let mut conj_err: f64 = 0.0;
    for _ in 0..1_000 {
        let prior = PriorSpec::new(
            PriorLabel::DataDerived,
            rng.random_range(-1.0..1.0),
            rng.random_range(0.05..1.0),
        )
        .unwrap();
        let lik = Likelihood {
            mean: rng.random_range(-1.0..1.0),
            se: rng.random_range(0.05..1.0),
        };
        let post = conjugate_posterior(&prior, lik);
        let cut = rng.random_range(-1.0..1.0);
        let exact = rctverdict::normal::cdf((cut - post.mean) / post.sd);
        let quad = mass_by_quadrature(&prior, lik, f64::NEG_INFINITY, cut);
        conj_err = conj_err.max((exact - quad).abs());
    }
    let conjugate = conj_err < 1e-6;

    // Mirror symmetry: reflecting the estimate through the null with
    // reciprocal thresholds swaps Positive and Harmful and keeps Neutral and
    // Negative; mirroring estimate, thresholds and direction keeps the class.
    let mut mirror_ok = 0u32;
    let mut swaps = 0u32;
    for _ in 0..10_000 {
        let c: f64 = rng.random_range(-1.2..1.2);
        let half: f64 = rng.random_range(0.01..0.6);
        let db: f64 = rng.random_range(0.05..0.6);
        let rf: f64 = rng.random_range(0.1..0.95);
        let t = ThresholdSet::new(
            EffectScale::HazardRatio,
            BenefitDirection::LowerIsBenefit,
            (-db).exp(),
            None,
            Some(((-db * rf).exp(), (db * rf).exp())),
            None,
        )
        .unwrap();
        let e = est(EffectScale::HazardRatio, c.exp(), (c - half).exp(), (c + half).exp());
        let m = est(EffectScale::HazardRatio, (-c).exp(), (-c - half).exp(), (-c + half).exp());
        let a = classify_frequentist(&e, &t).unwrap().class;
        let b = classify_frequentist(&m, &t).unwrap().class;
        let mut flipped = t.clone();
        flipped.direction = BenefitDirection::HigherIsBenefit;
        flipped.mcid_benefit = 1.0 / t.mcid_benefit;
        flipped.mcid_harm = 1.0 / t.mcid_harm;
        let full = classify_frequentist(&m, &flipped).unwrap().class;
        let reflected_ok = match a {
            VerdictClass::Positive => b == VerdictClass::Harmful,
            VerdictClass::Harmful => b == VerdictClass::Positive,
            VerdictClass::Neutral | VerdictClass::Negative => b == a,
            VerdictClass::ImprecisePlus => b == VerdictClass::Inconclusive,
            VerdictClass::Inconclusive => {
                matches!(b, VerdictClass::Inconclusive | VerdictClass::ImprecisePlus)
            }
        };
        if matches!(a, VerdictClass::Positive | VerdictClass::Harmful) {
            swaps += 1;
        }
        if reflected_ok && full == a {
            mirror_ok += 1;
        }
    }
    let mirror = mirror_ok == 10_000 && swaps > 100;

    // Report snapshot determinism.
    let e = eolia();
    let t = ThresholdSet::lower_is_benefit(e.scale, 0.80).unwrap();
    let render = || {
        let rec = AnalysisRecord::classify("eolia", "EOLIA", e.clone(), t.clone())
            .unwrap()
            .with_reanalysis(default_reanalysis(&e));
        (
            render_report(&rec, Format::Markdown).unwrap(),
            render_report(&rec, Format::Json).unwrap(),
        )
    };
    let snapshot = render() == render();

    let elapsed = start.elapsed();
    let ok = totality && conjugate && mirror && snapshot && elapsed < Duration::from_secs(60);
    report(
        "property suites",
        ok,
        format!(
            "totality {totality_ok}+{tie_cases} ties/100000, conjugate max err {conj_err:.1e}, \
             mirror {mirror_ok}/10000 ({swaps} Positive/Harmful swaps), snapshot {snapshot}, {elapsed:?}"
        ),
    );
    assert!(ok);
}

#[test]
fn fingerprint_separation() {
    let rules = RuleTable::default();
    let mut hits = 0;
    let mut seen = Vec::new();
    for (class, m) in fingerprint_prototypes() {
        let got = classify_metrics(&m, &[m], &rules).unwrap().class;
        if got == class {
            hits += 1;
        }
        seen.push(got);
    }
    seen.dedup();
    let ok = hits == 6 && seen.len() == 6;
    report("fingerprint separation", ok, format!("{hits}/6 exact"));
    assert!(ok);
}

#[test]
fn power_reference_points() {
    // Sanity anchors shared by several criteria.
    assert!((power_two_sided(0.0, 1.0, 0.05).unwrap() - 0.05).abs() < 1e-12);
    assert!((power_two_sided(2.8, 1.0, 0.05).unwrap() - 0.7996).abs() < 1e-4);
}
