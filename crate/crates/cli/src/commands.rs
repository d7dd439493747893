use crate::config::Config;
use crate::error::CliError;
use crate::input::{Position, TrialInputRecord};
use rayon::prelude::*;
use rctverdict::bayes::{build_prior_grid_with, reanalyze, PriorLabel, PriorSpec};
use rctverdict::classifier::{BenefitDirection, ThresholdSet};
use rctverdict::measures::{EffectEstimate, EffectScale};
use rctverdict::report::{
    fingerprint_svg, forest_svg, render_markdown_batch, AnalysisRecord, Format,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub schema_version: u32,
    pub records: Vec<AnalysisRecord>,
}

/// Threshold values given on the command line; these win over everything.
#[derive(Debug, Clone, Default)]
pub struct ThresholdFlags {
    pub rope: Option<(f64, f64)>,
    pub mcid_harm: Option<f64>,
    pub ni_margin: Option<f64>,
    pub cet_alpha: Option<f64>,
}

pub fn parse_direction(s: &str) -> Result<BenefitDirection, String> {
    match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "lower" | "lower_is_benefit" | "lower_is_better" => Ok(BenefitDirection::LowerIsBenefit),
        "higher" | "higher_is_benefit" | "higher_is_better" => Ok(BenefitDirection::HigherIsBenefit),
        other => Err(format!("unknown direction `{other}` (expected lower or higher)")),
    }
}

/// Build the estimate and thresholds for one input record. Each threshold is
/// taken from the flag, else the record, else the config file, else the
/// library default.
pub fn resolve(
    rec: &TrialInputRecord,
    cfg: &Config,
    flags: &ThresholdFlags,
) -> Result<(EffectEstimate, ThresholdSet), String> {
    let scale: EffectScale = rec.scale.parse().map_err(|e: rctverdict::Error| e.to_string())?;
    let level = rec.ci_level.unwrap_or(0.95);
    let estimate = EffectEstimate::new(scale, rec.point, rec.ci_lower, rec.ci_upper, level)
        .map_err(|e| e.to_string())?;

    let direction = match rec.direction.as_deref().or(cfg.thresholds.direction.as_deref()) {
        Some(d) => parse_direction(d)?,
        None => BenefitDirection::LowerIsBenefit,
    };
    let record_rope = match (rec.rope_lower, rec.rope_upper) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err("rope_lower and rope_upper must be given together".into()),
    };
    let config_rope = match (cfg.thresholds.rope_lower, cfg.thresholds.rope_upper) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err("config: rope_lower and rope_upper must be given together".into()),
    };
    let thresholds = ThresholdSet::new(
        scale,
        direction,
        rec.mcid_benefit,
        flags.mcid_harm.or(rec.mcid_harm).or(cfg.thresholds.mcid_harm),
        flags.rope.or(record_rope).or(config_rope),
        flags.ni_margin.or(cfg.thresholds.ni_margin),
    )
    .map_err(|e| e.to_string())?;
    Ok((estimate, thresholds))
}

fn locate(pos: &Position, id: &str) -> String {
    format!("{pos} (id `{id}`)")
}

fn classify_one(
    pos: &Position,
    rec: &TrialInputRecord,
    cfg: &Config,
    flags: &ThresholdFlags,
) -> Result<AnalysisRecord, CliError> {
    let at = || locate(pos, &rec.id);
    let (e, t) = resolve(rec, cfg, flags).map_err(|m| CliError::Input(format!("{}: {m}", at())))?;
    let mut out = AnalysisRecord::classify(&rec.id, &rec.name, e, t).map_err(|e| CliError::at(at(), e))?;
    if let Some(ep) = &rec.endpoint {
        out = out.with_endpoint(ep);
    }
    if let Some(alpha) = flags.cet_alpha.or(cfg.thresholds.cet_alpha) {
        out = out.with_cet(alpha).map_err(|e| CliError::at(at(), e))?;
    }
    if out.thresholds.ni_margin.is_some() {
        out = out.with_noninferiority().map_err(|e| CliError::at(at(), e))?;
    }
    Ok(out)
}

/// Run `f` over all records in parallel, keeping input order. Every failure
/// is reported; the first one decides the exit code.
fn run_all<F>(records: &[(Position, TrialInputRecord)], f: F) -> Result<Vec<AnalysisRecord>, CliError>
where
    F: Fn(&Position, &TrialInputRecord) -> Result<AnalysisRecord, CliError> + Sync,
{
    let results: Vec<_> = records.par_iter().map(|(p, r)| f(p, r)).collect();
    let mut out = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(rec) => out.push(rec),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        return Ok(out);
    }
    let joined = errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("\nerror: ");
    Err(match errors.swap_remove(0) {
        CliError::Numeric(_) => CliError::Numeric(joined),
        _ => CliError::Input(joined),
    })
}

pub fn classify(
    records: &[(Position, TrialInputRecord)],
    cfg: &Config,
    flags: &ThresholdFlags,
) -> Result<Vec<AnalysisRecord>, CliError> {
    run_all(records, |p, r| classify_one(p, r, cfg, flags))
}

/// A `label=mean,sd` prior given on the command line.
pub fn parse_prior(s: &str) -> Result<PriorSpec, String> {
    let (label, rest) = s
        .split_once('=')
        .ok_or_else(|| format!("expected label=mean,sd, got `{s}`"))?;
    let (mean, sd) = rest
        .split_once(',')
        .ok_or_else(|| format!("expected label=mean,sd, got `{s}`"))?;
    let label: PriorLabel = label.parse().map_err(|e: rctverdict::Error| e.to_string())?;
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number `{x}` in prior `{s}`: {e}"))
    };
    PriorSpec::new(label, num(mean)?, num(sd)?).map_err(|e| e.to_string())
}

/// Default grid for the thresholds, with overrides replacing priors of the
/// same label and adding new labels at the end.
pub fn prior_grid(
    t: &ThresholdSet,
    cfg: &Config,
    overrides: &[PriorSpec],
    only_overrides: bool,
) -> rctverdict::Result<Vec<PriorSpec>> {
    let mut grid = if only_overrides {
        Vec::new()
    } else {
        build_prior_grid_with(t, None, &cfg.priors)?
    };
    for o in overrides {
        match grid.iter_mut().find(|p| p.label == o.label) {
            Some(p) => *p = *o,
            None => grid.push(*o),
        }
    }
    Ok(grid)
}

pub fn reanalyze_all(
    records: &[(Position, TrialInputRecord)],
    cfg: &Config,
    flags: &ThresholdFlags,
    overrides: &[PriorSpec],
    only_overrides: bool,
) -> Result<Vec<AnalysisRecord>, CliError> {
    run_all(records, |pos, rec| {
        let at = || locate(pos, &rec.id);
        let base = classify_one(pos, rec, cfg, flags)?;
        let grid = prior_grid(&base.thresholds, cfg, overrides, only_overrides)
            .map_err(|e| CliError::at(at(), e))?;
        let r = reanalyze(&base.estimate, &base.thresholds, &grid, rec.cer, &cfg.rules)
            .map_err(|e| CliError::at(at(), e))?;
        Ok(base.with_reanalysis(r))
    })
}

pub fn render(records: Vec<AnalysisRecord>, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let env = Envelope {
                schema_version: SCHEMA_VERSION,
                records,
            };
            let mut s = serde_json::to_string_pretty(&env)
                .map_err(|e| CliError::Numeric(format!("serialising output: {e}")))?;
            s.push('\n');
            Ok(s)
        }
        Format::Markdown => render_markdown_batch(&records).map_err(|e| CliError::at("report", e)),
    }
}

pub fn read_envelope(path: &Path) -> Result<Envelope, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let env: Envelope = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!(
            "{}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "{}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            path.display(),
            env.schema_version
        )));
    }
    Ok(env)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// One forest plot per effect scale, using the first record's thresholds for
/// the reference lines.
pub fn write_forest_plots(
    dir: &Path,
    records: &[AnalysisRecord],
    cfg: &Config,
) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.display().to_string(),
        source,
    })?;
    let mut by_scale: BTreeMap<&'static str, Vec<AnalysisRecord>> = BTreeMap::new();
    for r in records {
        by_scale.entry(r.estimate.scale.abbrev()).or_default().push(r.clone());
    }
    let mut written = Vec::new();
    for (scale, group) in by_scale {
        let svg = forest_svg(&group, &group[0].thresholds, &cfg.plot)
            .map_err(|e| CliError::at("forest plot", e))?;
        let name = format!("forest_{}.svg", scale.to_ascii_lowercase());
        write_file(&dir.join(&name), &svg)?;
        written.push(name);
    }
    Ok(written)
}

pub fn write_fingerprints(dir: &Path, records: &[AnalysisRecord]) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    for r in records {
        if let Some(b) = &r.bayesian {
            let name = format!("fingerprint_{}.svg", file_stem(&r.id));
            write_file(&dir.join(&name), &fingerprint_svg(&b.posteriors))?;
            written.push(name);
        }
    }
    Ok(written)
}
