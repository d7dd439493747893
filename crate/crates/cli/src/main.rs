mod commands;
mod config;
mod error;
mod input;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::ThresholdFlags;
use config::Config;
use error::CliError;
use rctverdict::design;
use rctverdict::report::Format;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "rctverdict", version, about = "Classify randomized trial results from their confidence intervals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Six-class verdict from the interval and clinical thresholds.
    Classify(AnalysisArgs),
    /// Verdict plus Bayesian reanalysis over a prior grid.
    Reanalyze {
        #[command(flatten)]
        args: AnalysisArgs,
        /// Prior override as label=mean,sd on the analysis scale (repeatable).
        #[arg(long = "prior", value_name = "LABEL=MEAN,SD")]
        priors: Vec<String>,
        /// Use only the priors given with --prior.
        #[arg(long)]
        no_default_priors: bool,
    },
    /// Design simulations.
    Simulate {
        #[command(subcommand)]
        kind: SimulateKind,
    },
    /// Re-render a JSON analysis file.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
        format: OutputFormat,
        /// Directory for SVG plots.
        #[arg(long)]
        plots: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct AnalysisArgs {
    /// Trial records: a JSON array, or CSV when the file ends in .csv.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Directory for SVG plots.
    #[arg(long)]
    plots: Option<PathBuf>,
    /// TOML settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ROPE bounds on the reported scale, as LOWER,UPPER.
    #[arg(long, value_name = "LOWER,UPPER", value_parser = parse_pair)]
    rope: Option<(f64, f64)>,
    #[arg(long)]
    mcid_harm: Option<f64>,
    /// Run the conditional equivalence test at this alpha (default 0.05).
    #[arg(long, value_name = "ALPHA", num_args = 0..=1, default_missing_value = "0.05")]
    cet: Option<f64>,
    #[arg(long)]
    ni_margin: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum SimulateKind {
    /// Type S / Type M retrodesign.
    Retrodesign {
        #[command(flatten)]
        common: SimArgs,
    },
    /// Significance-filtered pilot followed by a confirmatory trial sized from it.
    CurseChain {
        #[command(flatten)]
        common: SimArgs,
        #[arg(long, default_value_t = 0.8)]
        target_power: f64,
    },
}

#[derive(Args, Debug)]
struct SimArgs {
    /// True effect on the analysis scale.
    #[arg(long, allow_hyphen_values = true)]
    effect: f64,
    /// Standard error of the estimate.
    #[arg(long)]
    se: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    n_sims: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Md,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Md => Format::Markdown,
        }
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LOWER,UPPER, got `{s}`"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => commands::write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}

fn flags(a: &AnalysisArgs) -> ThresholdFlags {
    ThresholdFlags {
        rope: a.rope,
        mcid_harm: a.mcid_harm,
        ni_margin: a.ni_margin,
        cet_alpha: a.cet,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify(a) => {
            let cfg = Config::load(a.config.as_deref())?;
            let records = input::load(&a.input)?;
            let out = commands::classify(&records, &cfg, &flags(&a))?;
            if let Some(dir) = &a.plots {
                if !out.is_empty() {
                    commands::write_forest_plots(dir, &out, &cfg)?;
                }
            }
            emit(a.output.as_deref(), &commands::render(out, a.format.into())?)
        }
        Command::Reanalyze {
            args: a,
            priors,
            no_default_priors,
        } => {
            let cfg = Config::load(a.config.as_deref())?;
            let overrides = priors
                .iter()
                .map(|p| commands::parse_prior(p).map_err(|e| CliError::Input(format!("--prior: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let records = input::load(&a.input)?;
            let out = commands::reanalyze_all(&records, &cfg, &flags(&a), &overrides, no_default_priors)?;
            if let Some(dir) = &a.plots {
                commands::write_fingerprints(dir, &out)?;
                if !out.is_empty() {
                    commands::write_forest_plots(dir, &out, &cfg)?;
                }
            }
            emit(a.output.as_deref(), &commands::render(out, a.format.into())?)
        }
        Command::Simulate { kind } => {
            let (json, output) = match kind {
                SimulateKind::Retrodesign { common: s } => {
                    let r = design::retrodesign(s.effect, s.se, s.alpha, s.n_sims, s.seed)
                        .map_err(|e| CliError::at("retrodesign", e))?;
                    (serde_json::to_string_pretty(&r), s.output)
                }
                SimulateKind::CurseChain {
                    common: s,
                    target_power,
                } => {
                    let r = design::winners_curse_chain(
                        s.effect,
                        s.se,
                        s.alpha,
                        target_power,
                        s.n_sims,
                        s.seed,
                    )
                    .map_err(|e| CliError::at("curse-chain", e))?;
                    (serde_json::to_string_pretty(&r), s.output)
                }
            };
            let mut json = json.map_err(|e| CliError::Numeric(format!("serialising result: {e}")))?;
            json.push('\n');
            emit(output.as_deref(), &json)
        }
        Command::Report {
            input,
            output,
            format,
            plots,
            config,
        } => {
            let cfg = Config::load(config.as_deref())?;
            let env = commands::read_envelope(&input)?;
            if let Some(dir) = &plots {
                commands::write_fingerprints(dir, &env.records)?;
                if !env.records.is_empty() {
                    commands::write_forest_plots(dir, &env.records, &cfg)?;
                }
            }
            emit(output.as_deref(), &commands::render(env.records, format.into())?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
