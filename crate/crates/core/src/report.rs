//! Analysis records, narrative rendering, and SVG plots.
//!
//! Narratives are produced from `{{slot}}` templates resolved against a flat
//! map built from the record, so every number in the text is a rounded copy
//! of a stored field. A slot with no value is an error.

use crate::bayes::{reference_summary, PosteriorMetrics, PosteriorSummary, Reanalysis};
use crate::classifier::{
    classify_cet, classify_frequentist, classify_noninferiority, tost, NiOutcome, ThresholdSet,
    Verdict, VerdictClass,
};
use crate::design::RetrodesignResult;
use crate::measures::{two_sided_p, EffectEstimate, EffectScale};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CetRecord {
    pub alpha: f64,
    pub tost_p_lower: f64,
    pub tost_p_upper: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub estimate: EffectEstimate,
    pub thresholds: ThresholdSet,
    pub p_value: f64,
    pub frequentist: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cet: Option<CetRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub non_inferiority: Option<NiOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayesian: Option<Reanalysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrodesign: Option<RetrodesignResult>,
    /// Replaces the built-in narrative template when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
}

impl AnalysisRecord {
    /// Record with the frequentist verdict and p-value filled in.
    pub fn classify(
        id: impl Into<String>,
        name: impl Into<String>,
        estimate: EffectEstimate,
        thresholds: ThresholdSet,
    ) -> Result<Self> {
        let frequentist = classify_frequentist(&estimate, &thresholds)?;
        Ok(Self {
            id: id.into(),
            name: name.into(),
            endpoint: None,
            p_value: two_sided_p(&estimate),
            estimate,
            thresholds,
            frequentist,
            cet: None,
            non_inferiority: None,
            bayesian: None,
            retrodesign: None,
            template: None,
        })
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = Some(endpoint.into());
        self
    }

    pub fn with_cet(mut self, alpha: f64) -> Result<Self> {
        let verdict = classify_cet(&self.estimate, &self.thresholds, alpha)?;
        let t = tost(&self.estimate, &self.thresholds)?;
        self.cet = Some(CetRecord {
            alpha,
            tost_p_lower: t.p_lower,
            tost_p_upper: t.p_upper,
            verdict,
        });
        Ok(self)
    }

    pub fn with_noninferiority(mut self) -> Result<Self> {
        self.non_inferiority = Some(classify_noninferiority(&self.estimate, &self.thresholds)?);
        Ok(self)
    }

    pub fn with_reanalysis(mut self, r: Reanalysis) -> Self {
        self.bayesian = Some(r);
        self
    }

    pub fn with_retrodesign(mut self, r: RetrodesignResult) -> Self {
        self.retrodesign = Some(r);
        self
    }

    pub fn with_template(mut self, template: impl Into<String>) -> Self {
        self.template = Some(template.into());
        self
    }

    pub fn class(&self) -> VerdictClass {
        self.frequentist.class
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Markdown,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(Format::Markdown),
            "json" => Ok(Format::Json),
            other => Err(Error::param("format", format!("expected json or md, got `{other}`"))),
        }
    }
}

// ---------------------------------------------------------------- formatting

/// Two decimals, without a negative sign on zero.
pub fn fmt_value(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Percent with one decimal.
pub fn fmt_prob(p: f64) -> String {
    let s = format!("{:.1}%", 100.0 * p);
    if s == "-0.0%" {
        "0.0%".to_string()
    } else {
        s
    }
}

pub fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "p < 0.001".to_string()
    } else {
        format!("p = {p:.3}")
    }
}

fn fmt_level(level: f64) -> String {
    let pct = 100.0 * level;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{pct:.0}")
    } else {
        format!("{pct:.1}")
    }
}

// ------------------------------------------------------------------ templates

pub fn class_template(class: VerdictClass) -> &'static str {
    match class {
        VerdictClass::Positive => {
            "{{name}}: {{scale}} {{point}} ({{ci_level}}% CI {{ci_lower}} to {{ci_upper}}; {{p}}). \
             The entire interval lies beyond the minimal clinically important difference of {{mcid_benefit}}, \
             so a clinically important benefit is supported."
        }
        VerdictClass::ImprecisePlus => {
            "{{name}}: {{scale}} {{point}} ({{ci_level}}% CI {{ci_lower}} to {{ci_upper}}; {{p}}). \
             The interval excludes the null on the side of benefit but crosses the minimal clinically important \
             difference of {{mcid_benefit}}: benefit is likely, but whether it is clinically important remains uncertain."
        }
        VerdictClass::Neutral => {
            "{{name}}: {{scale}} {{point}} ({{ci_level}}% CI {{ci_lower}} to {{ci_upper}}; {{p}}). \
             The entire interval lies inside the equivalence region {{rope_lower}} to {{rope_upper}}, \
             so a clinically meaningful effect in either direction is excluded and equivalence is supported."
        }
        VerdictClass::Inconclusive => {
            "{{name}}: {{scale}} {{point}} ({{ci_level}}% CI {{ci_lower}} to {{ci_upper}}; {{p}}). \
             The interval is compatible with a clinically important benefit (beyond {{mcid_benefit}}) as well as \
             with a trivial effect or harm. The effect remains uncertain; this trial cannot settle the question \
             and absence of evidence here is not evidence of absence."
        }
        VerdictClass::Negative => {
            "{{name}}: {{scale}} {{point}} ({{ci_level}}% CI {{ci_lower}} to {{ci_upper}}; {{p}}). \
             The interval excludes both the minimal clinically important benefit of {{mcid_benefit}} and the harm \
             threshold of {{mcid_harm}}, ruling out a clinically important effect; it does not lie wholly inside \
             the equivalence region {{rope_lower}} to {{rope_upper}}."
        }
        VerdictClass::Harmful => {
            "{{name}}: {{scale}} {{point}} ({{ci_level}}% CI {{ci_lower}} to {{ci_upper}}; {{p}}). \
             The entire interval lies beyond the harm threshold of {{mcid_harm}}: the intervention causes \
             clinically important harm."
        }
    }
}

pub const BAYES_TEMPLATE: &str = "Under the {{prior}} prior the posterior median {{scale}} is {{post_median}} \
     (95% CrI {{cri_lower}} to {{cri_upper}}): Pr(any benefit) {{pr_any_benefit}}, \
     Pr(benefit beyond MCID) {{pr_mcid_benefit}}, Pr(ROPE) {{pr_rope}}, Pr(any harm) {{pr_any_harm}}, \
     Pr(severe harm) {{pr_severe_harm}}. Posterior verdict: {{bayes_verdict}}. {{robustness}}";

pub const DESIGN_TEMPLATE: &str = "Design check at a true effect of {{true_effect}} (analysis scale): \
     power {{power}}, Type S error {{type_s}}, expected exaggeration {{exaggeration}}x among significant results.";

/// Resolve `{{key}}` placeholders. Unknown or unterminated slots are errors.
pub fn fill(template: &str, slots: &BTreeMap<&'static str, String>) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| Error::MissingSlot(after.chars().take(20).collect()))?;
        let key = after[..end].trim();
        let value = slots
            .get(key)
            .ok_or_else(|| Error::MissingSlot(key.to_string()))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

/// The flat slot map for a record. Posterior and design slots are present
/// only when the record carries those sections.
pub fn slot_map(rec: &AnalysisRecord) -> BTreeMap<&'static str, String> {
    let e = &rec.estimate;
    let t = &rec.thresholds;
    let mut m = BTreeMap::new();
    m.insert("id", rec.id.clone());
    m.insert("name", rec.name.clone());
    if let Some(ep) = &rec.endpoint {
        m.insert("endpoint", ep.clone());
    }
    m.insert("scale", e.scale.abbrev().to_string());
    m.insert("point", fmt_value(e.point));
    m.insert("ci_lower", fmt_value(e.ci_lower));
    m.insert("ci_upper", fmt_value(e.ci_upper));
    m.insert("ci_level", fmt_level(e.ci_level));
    m.insert("p", fmt_p(rec.p_value));
    m.insert("mcid_benefit", fmt_value(t.mcid_benefit));
    m.insert("mcid_harm", fmt_value(t.mcid_harm));
    m.insert("rope_lower", fmt_value(t.rope.0));
    m.insert("rope_upper", fmt_value(t.rope.1));
    if let Some(ni) = t.ni_margin {
        m.insert("ni_margin", fmt_value(ni));
    }
    m.insert("verdict", rec.frequentist.class.to_string());

    if let Some(b) = &rec.bayesian {
        if !b.posteriors.is_empty() {
            let r = reference_summary(&b.posteriors);
            m.insert("prior", r.prior.label.to_string());
            m.insert("post_median", fmt_value(r.median));
            m.insert("cri_lower", fmt_value(r.cri95.0));
            m.insert("cri_upper", fmt_value(r.cri95.1));
            insert_metrics(&mut m, &r.metrics);
            if let Some(arr) = r.arr {
                m.insert("arr", fmt_prob(arr));
            }
        }
        m.insert("bayes_verdict", b.verdict.class.to_string());
        m.insert("i2", fmt_prob(b.sensitivity.i2));
        m.insert("n_priors", b.posteriors.len().to_string());
        let robustness = if b.sensitivity.robust {
            format!(
                "Across {} priors I\u{b2} = {}: the conclusion is robust to the choice of prior.",
                b.posteriors.len(),
                fmt_prob(b.sensitivity.i2)
            )
        } else {
            format!(
                "Across {} priors I\u{b2} = {}: the conclusion depends on the choice of prior.",
                b.posteriors.len(),
                fmt_prob(b.sensitivity.i2)
            )
        };
        m.insert("robustness", robustness);
    }

    if let Some(d) = &rec.retrodesign {
        m.insert("true_effect", fmt_value(d.true_effect));
        m.insert("power", fmt_prob(d.power));
        m.insert("type_s", fmt_prob(d.type_s));
        m.insert("exaggeration", format!("{:.1}", d.exaggeration));
    }
    m
}

fn insert_metrics(m: &mut BTreeMap<&'static str, String>, x: &PosteriorMetrics) {
    m.insert("pr_any_benefit", fmt_prob(x.pr_any_benefit));
    m.insert("pr_mcid_benefit", fmt_prob(x.pr_mcid_benefit));
    m.insert("pr_rope", fmt_prob(x.pr_rope));
    m.insert("pr_any_harm", fmt_prob(x.pr_any_harm));
    m.insert("pr_severe_harm", fmt_prob(x.pr_severe_harm));
}

/// Narrative paragraph(s) for one record.
pub fn narrative(rec: &AnalysisRecord) -> Result<String> {
    let slots = slot_map(rec);
    let template = rec
        .template
        .as_deref()
        .unwrap_or_else(|| class_template(rec.frequentist.class));
    let mut text = fill(template, &slots)?;
    if rec.bayesian.is_some() {
        text.push(' ');
        text.push_str(&fill(BAYES_TEMPLATE, &slots)?);
    }
    if rec.retrodesign.is_some() {
        text.push(' ');
        text.push_str(&fill(DESIGN_TEMPLATE, &slots)?);
    }
    Ok(text)
}

pub fn render_report(rec: &AnalysisRecord, format: Format) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(rec).map_err(|e| Error::Malformed(e.to_string())),
        Format::Markdown => render_markdown(rec),
    }
}

pub fn parse_record(json: &str) -> Result<AnalysisRecord> {
    serde_json::from_str(json).map_err(|e| Error::Malformed(e.to_string()))
}

fn render_markdown(rec: &AnalysisRecord) -> Result<String> {
    let e = &rec.estimate;
    let t = &rec.thresholds;
    let mut s = String::new();
    let _ = writeln!(s, "## {} ({})\n", rec.name, rec.id);
    if let Some(ep) = &rec.endpoint {
        let _ = writeln!(s, "- Endpoint: {ep}");
    }
    let _ = writeln!(
        s,
        "- Estimate: {} {} ({}% CI {} to {}), {}",
        e.scale.abbrev(),
        fmt_value(e.point),
        fmt_level(e.ci_level),
        fmt_value(e.ci_lower),
        fmt_value(e.ci_upper),
        fmt_p(rec.p_value)
    );
    let _ = write!(
        s,
        "- Thresholds: MCID {}, harm {}, ROPE {} to {}",
        fmt_value(t.mcid_benefit),
        fmt_value(t.mcid_harm),
        fmt_value(t.rope.0),
        fmt_value(t.rope.1)
    );
    if let Some(ni) = t.ni_margin {
        let _ = write!(s, ", NI margin {}", fmt_value(ni));
    }
    s.push('\n');
    let _ = writeln!(s, "- Verdict: **{}**", rec.frequentist.class);
    if let Some(c) = &rec.cet {
        let _ = writeln!(
            s,
            "- Conditional equivalence test (alpha {}): {} (TOST p {} / {})",
            c.alpha,
            c.verdict.class,
            fmt_p(c.tost_p_lower).trim_start_matches("p "),
            fmt_p(c.tost_p_upper).trim_start_matches("p ")
        );
    }
    if let Some(ni) = rec.non_inferiority {
        let label = match ni {
            NiOutcome::NonInferior => "non-inferior",
            NiOutcome::Inferior => "inferior",
            NiOutcome::Inconclusive => "inconclusive",
        };
        let _ = writeln!(s, "- Non-inferiority: {label}");
    }
    if let Some(b) = &rec.bayesian {
        let _ = writeln!(
            s,
            "- Posterior verdict: **{}** (I\u{b2} {}, {})",
            b.verdict.class,
            fmt_prob(b.sensitivity.i2),
            if b.sensitivity.robust { "robust" } else { "prior-sensitive" }
        );
    }
    for w in &e.warnings {
        let _ = writeln!(s, "- Warning: {w}");
    }
    s.push('\n');
    s.push_str(&narrative(rec)?);
    s.push('\n');

    if let Some(b) = &rec.bayesian {
        s.push_str("\n| Prior | Median | 95% CrI | Pr(any benefit) | Pr(> MCID) | Pr(ROPE) | Pr(any harm) | Pr(severe harm) |\n");
        s.push_str("|---|---|---|---|---|---|---|---|\n");
        for p in &b.posteriors {
            let x = &p.metrics;
            let _ = writeln!(
                s,
                "| {} | {} | {} to {} | {} | {} | {} | {} | {} |",
                p.prior.label,
                fmt_value(p.median),
                fmt_value(p.cri95.0),
                fmt_value(p.cri95.1),
                fmt_prob(x.pr_any_benefit),
                fmt_prob(x.pr_mcid_benefit),
                fmt_prob(x.pr_rope),
                fmt_prob(x.pr_any_harm),
                fmt_prob(x.pr_severe_harm)
            );
        }
    }
    Ok(s)
}

/// Markdown for several records, separated by blank lines.
pub fn render_markdown_batch(records: &[AnalysisRecord]) -> Result<String> {
    let mut out = String::from("# Trial verdicts\n");
    for r in records {
        out.push('\n');
        out.push_str(&render_markdown(r)?);
    }
    Ok(out)
}

// ----------------------------------------------------------------------- SVG

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn class_key(c: VerdictClass) -> &'static str {
    match c {
        VerdictClass::Positive => "positive",
        VerdictClass::ImprecisePlus => "imprecise_plus",
        VerdictClass::Neutral => "neutral",
        VerdictClass::Inconclusive => "inconclusive",
        VerdictClass::Negative => "negative",
        VerdictClass::Harmful => "harmful",
    }
}

fn class_color(c: VerdictClass) -> &'static str {
    match c {
        VerdictClass::Positive => "#1a7f37",
        VerdictClass::ImprecisePlus => "#6cb36c",
        VerdictClass::Neutral => "#3b6fb6",
        VerdictClass::Inconclusive => "#8c8c8c",
        VerdictClass::Negative => "#b58900",
        VerdictClass::Harmful => "#c0392b",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestOptions {
    pub width: f64,
    pub row_height: f64,
    pub title: Option<String>,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            width: 760.0,
            row_height: 30.0,
            title: None,
        }
    }
}

/// Horizontal axis on the analysis scale (log for ratios).
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    pub scale: EffectScale,
    /// Analysis-scale bounds after padding.
    pub lo: f64,
    pub hi: f64,
}

impl Axis {
    /// Bounds cover every interval and reference value, padded by 5% of the
    /// span on each side.
    pub fn fit(scale: EffectScale, values: impl IntoIterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let a = scale.to_analysis(v);
            lo = lo.min(a);
            hi = hi.max(a);
        }
        let pad = 0.05 * (hi - lo).max(1e-9);
        Self {
            scale,
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    pub fn reported_bounds(&self) -> (f64, f64) {
        (self.scale.from_analysis(self.lo), self.scale.from_analysis(self.hi))
    }

    fn frac(&self, reported: f64) -> f64 {
        (self.scale.to_analysis(reported) - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        let (a, b) = self.reported_bounds();
        if self.scale.is_ratio() {
            let mut out = Vec::new();
            for k in -3..=3 {
                for m in [1.0, 2.0, 5.0] {
                    let v = m * 10f64.powi(k);
                    if v >= a && v <= b {
                        out.push(v);
                    }
                }
            }
            if out.len() < 3 {
                out = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0]
                    .into_iter()
                    .filter(|v| *v >= a && *v <= b)
                    .collect();
            }
            out
        } else {
            let raw = (b - a) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .into_iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let mut v = (a / step).ceil() * step;
            let mut out = Vec::new();
            while v <= b + 1e-12 {
                out.push(if v.abs() < 1e-12 { 0.0 } else { v });
                v += step;
            }
            out
        }
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Forest plot: one row per record with point, interval whiskers and class
/// label, a solid null line and dashed MCID benefit / harm lines.
pub fn forest_svg(
    records: &[AnalysisRecord],
    t: &ThresholdSet,
    opts: &ForestOptions,
) -> Result<String> {
    let first = records
        .first()
        .ok_or_else(|| Error::param("records", "forest plot needs at least one record"))?;
    for r in records {
        if r.estimate.scale != first.estimate.scale {
            return Err(Error::MixedScales(
                first.estimate.scale.to_string(),
                r.estimate.scale.to_string(),
            ));
        }
    }
    t.check_scale(&first.estimate)?;
    let scale = t.scale;
    let null = scale.null_value();
    let axis = Axis::fit(
        scale,
        records
            .iter()
            .flat_map(|r| [r.estimate.ci_lower, r.estimate.ci_upper])
            .chain([null, t.mcid_benefit, t.mcid_harm]),
    );

    let label_w = 200.0;
    let class_w = 120.0;
    let x0 = label_w;
    let x1 = (opts.width - class_w).max(x0 + 100.0);
    let top = if opts.title.is_some() { 40.0 } else { 16.0 };
    let rows_h = opts.row_height * records.len() as f64;
    let axis_y = top + rows_h + 6.0;
    let height = axis_y + 44.0;
    let x = |v: f64| x0 + axis.frac(v) * (x1 - x0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}" font-family="sans-serif" font-size="12">"#,
        opts.width, height, opts.width, height
    );
    let (blo, bhi) = axis.reported_bounds();
    let _ = writeln!(
        s,
        r#"<g class="axis" data-scale="{}" data-min="{:.6}" data-max="{:.6}">"#,
        scale.abbrev(),
        blo,
        bhi
    );
    if let Some(title) = &opts.title {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" font-size="14" font-weight="bold">{}</text>"#,
            x0,
            escape(title)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.2}" y1="{axis_y:.2}" x2="{x1:.2}" y2="{axis_y:.2}" stroke="black"/>"#
    );
    for v in axis.ticks() {
        let xv = x(v);
        let _ = writeln!(
            s,
            r#"<line x1="{xv:.2}" y1="{axis_y:.2}" x2="{xv:.2}" y2="{:.2}" stroke="black"/><text x="{xv:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            axis_y + 5.0,
            axis_y + 18.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}{}</text>"#,
        0.5 * (x0 + x1),
        axis_y + 36.0,
        scale.abbrev(),
        if scale.is_ratio() { " (log scale)" } else { "" }
    );
    s.push_str("</g>\n");

    let refs = [
        ("null", null, None),
        ("mcid_benefit", t.mcid_benefit, Some("5 4")),
        ("mcid_harm", t.mcid_harm, Some("5 4")),
    ];
    for (kind, v, dash) in refs {
        let xv = x(v);
        let dash_attr = dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            s,
            r#"<line class="ref" data-ref="{kind}" data-value="{v:.6}" x1="{xv:.2}" y1="{:.2}" x2="{xv:.2}" y2="{axis_y:.2}" stroke="{}"{dash_attr}/>"#,
            top - 4.0,
            if dash.is_some() { "#555555" } else { "black" }
        );
    }

    for (i, r) in records.iter().enumerate() {
        let e = &r.estimate;
        let cy = top + opts.row_height * (i as f64 + 0.5);
        let color = class_color(r.class());
        let _ = writeln!(
            s,
            r#"<g class="row" data-id="{}" data-class="{}" data-point="{:.6}" data-lower="{:.6}" data-upper="{:.6}">"#,
            escape(&r.id),
            class_key(r.class()),
            e.point,
            e.ci_lower,
            e.ci_upper
        );
        let _ = writeln!(
            s,
            r#"<text x="8" y="{:.2}">{}</text>"#,
            cy + 4.0,
            escape(&r.name)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{cy:.2}" x2="{:.2}" y2="{cy:.2}" stroke="{color}" stroke-width="2"/>"#,
            x(e.ci_lower),
            x(e.ci_upper)
        );
        for end in [e.ci_lower, e.ci_upper] {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}" stroke-width="2"/>"#,
                x(end),
                cy - 5.0,
                cy + 5.0
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="{color}"/>"#,
            x(e.point) - 4.0,
            cy - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
            x1 + 10.0,
            cy + 4.0,
            escape(&r.class().to_string())
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

const FINGERPRINT_BARS: [(&str, &str, &str); 4] = [
    ("pr_any_benefit", "any benefit", "#6cb36c"),
    ("pr_mcid_benefit", "benefit > MCID", "#1a7f37"),
    ("pr_rope", "ROPE", "#3b6fb6"),
    ("pr_any_harm", "any harm", "#c0392b"),
];

fn bar_values(m: &PosteriorMetrics) -> [f64; 4] {
    [m.pr_any_benefit, m.pr_mcid_benefit, m.pr_rope, m.pr_any_harm]
}

/// Height in pixels of the probability axis in fingerprint charts.
pub const FINGERPRINT_PLOT_HEIGHT: f64 = 200.0;

/// Grouped bars of the four headline probabilities, one group per prior.
pub fn fingerprint_svg(summaries: &[PosteriorSummary]) -> String {
    let groups: Vec<(String, PosteriorMetrics)> = summaries
        .iter()
        .map(|s| (s.prior.label.to_string(), s.metrics))
        .collect();
    fingerprint_svg_labeled(&groups)
}

/// As [`fingerprint_svg`] with caller-supplied group labels.
pub fn fingerprint_svg_labeled(groups: &[(String, PosteriorMetrics)]) -> String {
    let bar_w = 22.0;
    let gap = 30.0;
    let group_w = 4.0 * bar_w + gap;
    let left = 48.0;
    let top = 20.0;
    let ph = FINGERPRINT_PLOT_HEIGHT;
    let base = top + ph;
    let width = left + group_w * groups.len().max(1) as f64 + 150.0;
    let height = base + 40.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<g class="axis" data-height="{ph:.2}"><line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{base:.2}" stroke="black"/><line x1="{left:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="black"/>"#,
        width - 150.0
    );
    for k in 0..=4 {
        let v = k as f64 * 0.25;
        let y = base - v * ph;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.0}%</text>"#,
            left - 6.0,
            y + 4.0,
            v * 100.0
        );
    }
    s.push_str("</g>\n");

    for (gi, (label, m)) in groups.iter().enumerate() {
        let gx = left + 12.0 + gi as f64 * group_w;
        let _ = writeln!(s, r#"<g class="group" data-prior="{}">"#, escape(label));
        for (bi, ((key, _, color), v)) in FINGERPRINT_BARS.iter().zip(bar_values(m)).enumerate() {
            let h = v.clamp(0.0, 1.0) * ph;
            let _ = writeln!(
                s,
                r#"<rect class="bar" data-metric="{key}" data-value="{v:.6}" x="{:.2}" y="{:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{color}"/>"#,
                gx + bi as f64 * bar_w,
                base - h
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            gx + 2.0 * bar_w,
            base + 16.0,
            escape(label)
        );
        s.push_str("</g>\n");
    }

    let lx = width - 140.0;
    for (i, (_, name, color)) in FINGERPRINT_BARS.iter().enumerate() {
        let y = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{y:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            lx + 14.0,
            y + 9.0
        );
    }
    s.push_str("</svg>\n");
    s
}
