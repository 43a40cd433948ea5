use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use moe_scaling::arch::{plan_sweep, ArchitectureSpec, SweepFactor};
use moe_scaling::fit::{
    fit_baseline, fit_joint, fit_sub_law, staged_fit_pipeline, FitObjective, FitOptions, FitResult,
};
use moe_scaling::law::{FactorPoint, ScalingConstants};
use moe_scaling::optim::{
    compute_optimal_frontier, optima_report, optimal_g, optimal_s, practical_range_g,
    practical_range_s,
};
use moe_scaling::store::{
    default_campaign, export_csv, export_json, ingest_csv_path, ingest_json_path,
    mainstream_models, render_table, Campaign, ConstantsRegistry, IngestOutcome, ModelEntry,
    ReportKind,
};
use moe_scaling::sublaw::SubLawForm;
use moe_scaling::BaselineId;

use crate::output::{emit, warn, OutputMode};
use crate::parse::{parse_bound, parse_key_value, parse_model, parse_size};

#[derive(Parser)]
#[command(
    name = "moe-scaling",
    version,
    about = "Joint MoE scaling law: prediction, fitting and optimal-configuration analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Constants source: a registry label or a path to a JSON file (flat
    /// constants or a fit result).
    #[arg(long, global = true, default_value = "paper-table-5")]
    constants: String,
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Human)]
    output: OutputMode,
    /// Registry directory (defaults to $MOE_SCALING_REGISTRY_DIR, then
    /// ./constants-registry).
    #[arg(long, global = true)]
    registry_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Predict loss at one factor point.
    Predict {
        #[arg(long, alias = "N", value_parser = parse_size)]
        n: f64,
        #[arg(long, alias = "D", value_parser = parse_size)]
        d: f64,
        #[arg(long, alias = "Na", value_parser = parse_size)]
        na: f64,
        #[arg(long, alias = "G")]
        g: f64,
        #[arg(long, alias = "S")]
        s: f64,
    },
    /// Fit scaling-law constants to an experiment campaign.
    Fit {
        /// Campaign file (.csv or .json).
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = FormArg::Joint)]
        form: FormArg,
        /// Run the staged marginal-then-joint pipeline (joint form only).
        #[arg(long)]
        staged: bool,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Convergence threshold on the relative objective decrease.
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Huber)]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 0.01)]
        huber_delta: f64,
        /// Override a parameter's box bounds, e.g. --bound alpha=0.1:0.8
        /// (repeatable).
        #[arg(long = "bound", value_parser = parse_bound)]
        bounds: Vec<(String, (f64, f64))>,
        /// Drop the default-constants start and use random starts only.
        #[arg(long)]
        no_default_start: bool,
        /// Hold out records tagged key=value from fitting; they are scored
        /// separately.
        #[arg(long, value_parser = parse_key_value)]
        holdout: Option<(String, String)>,
        /// Save the fitted joint constants under this registry label.
        #[arg(long)]
        save_constants: Option<String>,
        /// Write the per-record residual CSV here.
        #[arg(long)]
        residuals: Option<PathBuf>,
    },
    /// Closed-form optima and optimal activation ratios.
    Optimal {
        #[arg(long, value_enum, ignore_case = true, default_value_t = WhatArg::All)]
        what: WhatArg,
        /// Total model size (required for activation-ratio analyses).
        #[arg(long, alias = "N", value_parser = parse_size)]
        n: Option<f64>,
        #[arg(long, default_value_t = 0.001)]
        threshold: f64,
    },
    /// Practical G or S range at a loss threshold.
    Range {
        #[arg(long, value_enum, ignore_case = true)]
        which: RangeArg,
        #[arg(long, alias = "N", value_parser = parse_size)]
        n: f64,
        #[arg(long, alias = "Na", value_parser = parse_size)]
        na: f64,
        #[arg(long, default_value_t = 0.001)]
        threshold: f64,
    },
    /// Compute-optimal loss frontier over a budget grid.
    Frontier {
        #[arg(long, alias = "N", value_parser = parse_size)]
        n: f64,
        /// Activated-expert count (default: the closed-form optimum).
        #[arg(long, alias = "G")]
        g: Option<f64>,
        /// Shared-expert ratio (default: the closed-form optimum).
        #[arg(long, alias = "S")]
        s: Option<f64>,
        #[arg(long, value_parser = parse_size, default_value = "1e20")]
        c_min: f64,
        #[arg(long, value_parser = parse_size, default_value = "1e24")]
        c_max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// Parameter counting and expert-dim rescaling for a concrete
    /// architecture.
    Arch {
        #[command(flatten)]
        spec: SpecArgs,
        /// Scale the expert dimension by this factor, preserving N.
        #[arg(long)]
        expert_scale: Option<f64>,
        /// Token count for an optional loss prediction of this architecture.
        #[arg(long, value_parser = parse_size)]
        tokens: Option<f64>,
    },
    /// Plan a controlled-variable sweep from a base architecture.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, ignore_case = true)]
        target: TargetArg,
        /// Comma-separated factor levels (sizes accept K/M/B/T suffixes).
        #[arg(long, value_delimiter = ',', value_parser = parse_size)]
        levels: Vec<f64>,
    },
    /// Generate or ingest experiment campaigns.
    Campaign {
        #[command(subcommand)]
        action: CampaignAction,
    },
    /// Reproduce the model-analysis tables.
    Report {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Model rows as Name:Na:N (defaults to the nine mainstream models).
        #[arg(long = "model", value_parser = parse_model)]
        models: Vec<(String, f64, f64)>,
        #[arg(long, value_delimiter = ',', value_parser = parse_size, default_value = "0.001,0.005")]
        thresholds: Vec<f64>,
    },
    /// Emit a marginal-loss or frontier curve as CSV data.
    Curve {
        #[arg(long, value_enum, ignore_case = true)]
        target: CurveArg,
        #[arg(long, value_parser = parse_size)]
        min: f64,
        #[arg(long, value_parser = parse_size)]
        max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, alias = "N", value_parser = parse_size)]
        n: Option<f64>,
        #[arg(long, alias = "D", value_parser = parse_size, default_value = "5e10")]
        d: f64,
        #[arg(long, alias = "Na", value_parser = parse_size)]
        na: Option<f64>,
        #[arg(long, alias = "G")]
        g: Option<f64>,
        #[arg(long, alias = "S")]
        s: Option<f64>,
    },
}

#[derive(Subcommand)]
enum CampaignAction {
    /// Generate the default synthetic campaign from the active constants.
    Generate {
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// Output file (.csv or .json); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate and normalize a campaign file.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Normalized output file (.csv or .json); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Joint,
    Nd,
    NaOnly,
    NdNa,
    GOnly,
    NdNaG,
    SOnly,
    FineGrained,
    Sparsity,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Huber,
    Squared,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WhatArg {
    All,
    G,
    S,
    Ratio,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RangeArg {
    G,
    S,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    G,
    S,
    Na,
    N,
    D,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Table3,
    Table4,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveArg {
    G,
    S,
    Na,
    Frontier,
}

/// Architecture input: a JSON file or the full set of dimension flags.
#[derive(Args)]
struct SpecArgs {
    /// Architecture JSON file (symbol-named fields).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    layers: Option<u32>,
    #[arg(long)]
    d_hidden: Option<u32>,
    #[arg(long)]
    d_head: Option<u32>,
    #[arg(long)]
    n_heads: Option<u32>,
    #[arg(long)]
    d_expert: Option<u32>,
    #[arg(long)]
    n_routed: Option<u32>,
    #[arg(long)]
    n_active_routed: Option<u32>,
    #[arg(long)]
    n_shared: Option<u32>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<ArchitectureSpec> {
        if let Some(path) = &self.spec {
            let data = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let spec: ArchitectureSpec = serde_json::from_str(&data)?;
            spec.validate()?;
            return Ok(spec);
        }
        let need = |name: &str, v: Option<u32>| {
            v.ok_or_else(|| anyhow!("--{name} is required (or pass --spec <file>)"))
        };
        let spec = ArchitectureSpec {
            layers: need("layers", self.layers)?,
            d_hidden: need("d-hidden", self.d_hidden)?,
            d_head: need("d-head", self.d_head)?,
            n_heads: need("n-heads", self.n_heads)?,
            d_expert: need("d-expert", self.d_expert)?,
            n_routed: need("n-routed", self.n_routed)?,
            n_active_routed: need("n-active-routed", self.n_active_routed)?,
            n_shared: self.n_shared.unwrap_or(0),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn registry(cli: &Cli) -> ConstantsRegistry {
    match &cli.registry_dir {
        Some(dir) => ConstantsRegistry::open(dir),
        None => ConstantsRegistry::from_env(),
    }
}

/// Resolves `--constants`: an existing file path wins, otherwise the
/// registry. Files may be flat constants JSON or a fit-result document.
fn load_constants(cli: &Cli) -> Result<ScalingConstants> {
    let source = &cli.constants;
    let path = Path::new(source);
    if path.is_file() {
        let data =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return constants_from_json(&data)
            .with_context(|| format!("{} holds no joint constants", path.display()));
    }
    let entry = registry(cli).load(source)?;
    Ok(entry.constants)
}

fn constants_from_json(data: &str) -> Result<ScalingConstants> {
    if let Ok(constants) = serde_json::from_str::<ScalingConstants>(data) {
        constants.validate()?;
        return Ok(constants);
    }
    // fit-result document: params.sub-law.joint
    let value: serde_json::Value = serde_json::from_str(data)?;
    let nested = value
        .pointer("/params/sub-law/joint")
        .ok_or_else(|| anyhow!("expected flat constants or a joint fit result"))?;
    let constants: ScalingConstants = serde_json::from_value(nested.clone())?;
    constants.validate()?;
    Ok(constants)
}

fn load_campaign(path: &Path) -> Result<IngestOutcome> {
    let outcome = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ingest_json_path(path)?,
        _ => ingest_csv_path(path)?,
    };
    for rejected in &outcome.rejected {
        warn(format!(
            "row {} rejected: {}",
            rejected.row, rejected.reason
        ));
    }
    for w in &outcome.warnings {
        warn(w);
    }
    Ok(outcome)
}

fn write_campaign(campaign: &Campaign, out: Option<&Path>, mode: OutputMode) -> Result<()> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            match path.extension().and_then(|e| e.to_str()) {
                Some("json") => export_json(campaign, file)?,
                _ => export_csv(campaign, file)?,
            }
            eprintln!("wrote {} records to {}", campaign.len(), path.display());
        }
        None => match mode {
            OutputMode::Json => {
                let mut buffer = Vec::new();
                export_json(campaign, &mut buffer)?;
                println!("{}", String::from_utf8(buffer)?);
            }
            _ => {
                let mut buffer = Vec::new();
                export_csv(campaign, &mut buffer)?;
                print!("{}", String::from_utf8(buffer)?);
            }
        },
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Predict { n, d, na, g, s } => {
            let constants = load_constants(&cli)?;
            let point = FactorPoint::new(*n, *d, *na, *g, *s)?;
            let loss = constants.loss(&point)?;
            emit(
                cli.output,
                &serde_json::json!({ "point": point, "loss": loss }),
                || format!("{loss:.6}"),
                || format!("N,D,Na,G,S,loss\n{n},{d},{na},{g},{s},{loss}"),
            )
        }
        Command::Fit {
            records,
            form,
            staged,
            starts,
            max_iter,
            tolerance,
            objective,
            huber_delta,
            holdout,
            save_constants,
            residuals,
            bounds,
            no_default_start,
        } => {
            let outcome = load_campaign(records)?;
            let options = FitOptions {
                objective: match objective {
                    ObjectiveArg::Huber => FitObjective::Huber {
                        delta: *huber_delta,
                    },
                    ObjectiveArg::Squared => FitObjective::SquaredError,
                },
                starts: *starts,
                max_iterations: *max_iter,
                tolerance: *tolerance,
                seed: cli.seed,
                holdout: holdout.clone(),
                bounds: bounds.iter().cloned().collect(),
                include_default_start: !no_default_start,
            };
            let all = &outcome.campaign.records;
            let (result, stages) = if *staged {
                if *form != FormArg::Joint {
                    bail!("--staged applies to the joint form only");
                }
                let staged = staged_fit_pipeline(all, &options)?;
                for stage in &staged.stages {
                    match (&stage.skipped, &stage.result) {
                        (Some(reason), _) => {
                            warn(format!("stage {} skipped: {reason}", stage.name))
                        }
                        (None, Some(r)) => eprintln!(
                            "stage {}: mae {:.6} over {} records",
                            stage.name,
                            r.mean_abs_error,
                            r.residuals.len()
                        ),
                        _ => {}
                    }
                }
                let stage_names: Vec<_> = staged
                    .stages
                    .iter()
                    .map(|s| {
                        serde_json::json!({
                            "name": s.name,
                            "skipped": s.skipped,
                            "mae": s.result.as_ref().map(|r| r.mean_abs_error),
                        })
                    })
                    .collect();
                (staged.joint, Some(stage_names))
            } else {
                let result = match form {
                    FormArg::Joint => fit_joint(all, &options)?,
                    FormArg::Nd => fit_sub_law(SubLawForm::Nd, all, &options)?,
                    FormArg::NaOnly => fit_sub_law(SubLawForm::NaOnly, all, &options)?,
                    FormArg::NdNa => fit_sub_law(SubLawForm::NdNa, all, &options)?,
                    FormArg::GOnly => fit_sub_law(SubLawForm::GOnly, all, &options)?,
                    FormArg::NdNaG => fit_sub_law(SubLawForm::NdNaG, all, &options)?,
                    FormArg::SOnly => fit_sub_law(SubLawForm::SOnly, all, &options)?,
                    FormArg::FineGrained => {
                        fit_baseline(BaselineId::FineGrainedGranularity, all, &options)?
                    }
                    FormArg::Sparsity => fit_baseline(BaselineId::SparsityFlops, all, &options)?,
                };
                (result, None)
            };
            for w in &result.warnings {
                warn(w);
            }
            if let Some(path) = residuals {
                std::fs::write(path, result.residuals_csv())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(label) = save_constants {
                let constants = result
                    .constants()
                    .ok_or_else(|| anyhow!("--save-constants needs a joint fit"))?;
                registry(&cli).save(label, constants)?;
                eprintln!("saved constants as `{label}`");
            }
            let mut json = serde_json::to_value(&result)?;
            if let Some(stages) = stages {
                json["stages"] = serde_json::Value::Array(stages);
            }
            emit(
                cli.output,
                &json,
                || render_fit_human(&result),
                || result.residuals_csv(),
            )
        }
        Command::Optimal { what, n, threshold } => {
            let constants = load_constants(&cli)?;
            match what {
                WhatArg::G => {
                    let g = optimal_g(&constants)?;
                    emit(
                        cli.output,
                        &serde_json::json!({ "g_opt": g }),
                        || format!("{g:.4}"),
                        || format!("g_opt\n{g}"),
                    )
                }
                WhatArg::S => {
                    let s = optimal_s(&constants)?;
                    emit(
                        cli.output,
                        &serde_json::to_value(s)?,
                        || format!("{:.4}", s.value),
                        || format!("s_opt\n{}", s.value),
                    )
                }
                WhatArg::All if n.is_none() => {
                    // without a total size only the closed-form optima apply
                    let g = optimal_g(&constants)?;
                    let s = optimal_s(&constants)?;
                    emit(
                        cli.output,
                        &serde_json::json!({ "g_opt": g, "s_opt": s.value }),
                        || format!("G_opt = {g:.4}\nS_opt = {:.4}", s.value),
                        || format!("g_opt,s_opt\n{g},{}", s.value),
                    )
                }
                WhatArg::Ratio | WhatArg::All => {
                    let total =
                        n.ok_or_else(|| anyhow!("--n is required for activation-ratio analysis"))?;
                    let report = optima_report(&constants, total, *threshold)?;
                    emit(
                        cli.output,
                        &serde_json::to_value(report)?,
                        || render_optima_human(&report),
                        || render_optima_csv(&report),
                    )
                }
            }
        }
        Command::Range {
            which,
            n,
            na,
            threshold,
        } => {
            let constants = load_constants(&cli)?;
            match which {
                RangeArg::G => {
                    let (lo, hi) = practical_range_g(&constants, *n, *na, *threshold)?;
                    emit(
                        cli.output,
                        &serde_json::json!({ "factor": "G", "threshold": threshold, "lo": lo, "hi": hi }),
                        || format!("[{lo:.2}, {hi:.2}]"),
                        || format!("factor,threshold,lo,hi\nG,{threshold},{lo},{hi}"),
                    )
                }
                RangeArg::S => {
                    let range = practical_range_s(&constants, *n, *na, *threshold)?;
                    emit(
                        cli.output,
                        &serde_json::json!({ "factor": "S", "threshold": threshold, "lo": range.lo, "hi": range.hi, "clipped": range.clipped }),
                        || {
                            format!(
                                "[{:.3}, {:.3}]{}",
                                range.lo,
                                range.hi,
                                if range.clipped { " (clipped)" } else { "" }
                            )
                        },
                        || {
                            format!(
                                "factor,threshold,lo,hi\nS,{threshold},{},{}",
                                range.lo, range.hi
                            )
                        },
                    )
                }
            }
        }
        Command::Frontier {
            n,
            g,
            s,
            c_min,
            c_max,
            points,
        } => {
            let constants = load_constants(&cli)?;
            if *points < 2 || c_min >= c_max {
                bail!("need at least 2 points and c-min < c-max");
            }
            let g = match g {
                Some(g) => *g,
                None => optimal_g(&constants)?,
            };
            let s = match s {
                Some(s) => *s,
                None => optimal_s(&constants)?.value,
            };
            let budgets: Vec<f64> = (0..*points)
                .map(|i| {
                    let t = i as f64 / (*points - 1) as f64;
                    (c_min.ln() + t * (c_max.ln() - c_min.ln())).exp()
                })
                .collect();
            let report = compute_optimal_frontier(&constants, *n, g, s, &budgets)?;
            for failure in &report.failures {
                warn(format!("C = {:.3e}: {}", failure.compute, failure.reason));
            }
            emit(
                cli.output,
                &serde_json::to_value(&report)?,
                || render_frontier_human(&report),
                || render_frontier_csv(&report),
            )
        }
        Command::Arch {
            spec,
            expert_scale,
            tokens,
        } => {
            let base = spec.resolve()?;
            let resolved = match expert_scale {
                Some(u) => base.scale_expert_dim(*u)?,
                None => base,
            };
            let counts = resolved.param_counts()?;
            let loss = match tokens {
                Some(tokens) => {
                    let constants = load_constants(&cli)?;
                    Some(constants.loss(&resolved.to_factor_point(*tokens)?)?)
                }
                None => None,
            };
            let json = serde_json::json!({
                "spec": resolved,
                "counts": counts,
                "predicted_loss": loss,
            });
            emit(
                cli.output,
                &json,
                || {
                    let mut text = format!(
                        "N  = {} ({:.2}M)\nNa = {} ({:.2}M)\nG  = {}\nS  = {:.4}\n",
                        counts.total,
                        counts.total as f64 / 1e6,
                        counts.activated,
                        counts.activated as f64 / 1e6,
                        counts.granularity,
                        counts.shared_ratio,
                    );
                    if expert_scale.is_some() {
                        text.push_str(&format!(
                            "d_expert = {}, n_e = {}\n",
                            resolved.d_expert, resolved.n_routed
                        ));
                    }
                    if let Some(loss) = loss {
                        text.push_str(&format!("predicted loss = {loss:.6}\n"));
                    }
                    text
                },
                || {
                    format!(
                        "N,Na,G,S,d_expert,n_e\n{},{},{},{},{},{}",
                        counts.total,
                        counts.activated,
                        counts.granularity,
                        counts.shared_ratio,
                        resolved.d_expert,
                        resolved.n_routed
                    )
                },
            )
        }
        Command::Sweep {
            spec,
            target,
            levels,
        } => {
            let base = spec.resolve()?;
            let factor = match target {
                TargetArg::G => SweepFactor::G,
                TargetArg::S => SweepFactor::S,
                TargetArg::Na => SweepFactor::Na,
                TargetArg::N => SweepFactor::N,
                TargetArg::D => SweepFactor::D,
            };
            let plan = plan_sweep(&base, factor, levels)?;
            emit(
                cli.output,
                &serde_json::to_value(&plan)?,
                || plan.to_csv(),
                || plan.to_csv(),
            )
        }
        Command::Campaign { action } => match action {
            CampaignAction::Generate { sigma, out } => {
                let constants = load_constants(&cli)?;
                let campaign = default_campaign(&constants, *sigma, cli.seed)?;
                write_campaign(&campaign, out.as_deref(), cli.output)
            }
            CampaignAction::Ingest { input, out } => {
                let outcome = load_campaign(input)?;
                write_campaign(&outcome.campaign, out.as_deref(), cli.output)
            }
        },
        Command::Report {
            kind,
            models,
            thresholds,
        } => {
            let constants = load_constants(&cli)?;
            let models: Vec<ModelEntry> = if models.is_empty() {
                mainstream_models()
            } else {
                models
                    .iter()
                    .map(|(name, na, n)| ModelEntry::new(name.clone(), *na, *n))
                    .collect()
            };
            let kind = match kind {
                KindArg::Table3 => ReportKind::Table3,
                KindArg::Table4 => ReportKind::Table4,
            };
            let table = render_table(kind, &models, &constants, thresholds);
            emit(
                cli.output,
                &serde_json::to_value(&table)?,
                || table.markdown.clone(),
                || table.csv.clone(),
            )
        }
        Command::Curve {
            target,
            min,
            max,
            steps,
            n,
            d,
            na,
            g,
            s,
        } => {
            let constants = load_constants(&cli)?;
            if *steps < 2 || min >= max {
                bail!("need at least 2 steps and min < max");
            }
            let need = |flag: &str, v: Option<f64>| {
                v.ok_or_else(|| anyhow!("--{flag} is required for this curve"))
            };
            let g_default = optimal_g(&constants)?;
            let s_default = optimal_s(&constants)?.value;
            let mut rows: Vec<(f64, f64)> = Vec::with_capacity(*steps);
            match target {
                CurveArg::G => {
                    let (total, act) = (need("n", *n)?, need("na", *na)?);
                    let s = s.unwrap_or(s_default);
                    for x in linear(*min, *max, *steps) {
                        let point = FactorPoint::new(total, *d, act, x, s)?;
                        rows.push((x, constants.loss(&point)?));
                    }
                }
                CurveArg::S => {
                    let (total, act) = (need("n", *n)?, need("na", *na)?);
                    let g = g.unwrap_or(g_default);
                    for x in linear(*min, *max, *steps) {
                        let point = FactorPoint::new(total, *d, act, g, x)?;
                        rows.push((x, constants.loss(&point)?));
                    }
                }
                CurveArg::Na => {
                    let total = need("n", *n)?;
                    let g = g.unwrap_or(g_default);
                    let s = s.unwrap_or(s_default);
                    // grid over the activation ratio
                    for x in linear(*min, *max, *steps) {
                        let point = FactorPoint::new(total, *d, x * total, g, s)?;
                        rows.push((x, constants.loss(&point)?));
                    }
                }
                CurveArg::Frontier => {
                    let total = need("n", *n)?;
                    let g = g.unwrap_or(g_default);
                    let s = s.unwrap_or(s_default);
                    let budgets: Vec<f64> = (0..*steps)
                        .map(|i| {
                            let t = i as f64 / (*steps - 1) as f64;
                            (min.ln() + t * (max.ln() - min.ln())).exp()
                        })
                        .collect();
                    let report = compute_optimal_frontier(&constants, total, g, s, &budgets)?;
                    for failure in &report.failures {
                        warn(format!("C = {:.3e}: {}", failure.compute, failure.reason));
                    }
                    rows = report
                        .points
                        .iter()
                        .map(|p| (p.compute, p.loss_star))
                        .collect();
                }
            }
            let header = match target {
                CurveArg::G => "G",
                CurveArg::S => "S",
                CurveArg::Na => "ratio",
                CurveArg::Frontier => "C",
            };
            let csv = {
                let mut text = format!("{header},loss\n");
                for (x, loss) in &rows {
                    text.push_str(&format!("{x},{loss}\n"));
                }
                text
            };
            emit(
                cli.output,
                &serde_json::json!({
                    "x": header,
                    "points": rows.iter().map(|(x, loss)| serde_json::json!({"x": x, "loss": loss})).collect::<Vec<_>>(),
                }),
                || csv.clone(),
                || csv.clone(),
            )
        }
    }
}

fn linear(min: f64, max: f64, steps: usize) -> impl Iterator<Item = f64> {
    (0..steps).map(move |i| min + (max - min) * i as f64 / (steps - 1) as f64)
}

fn render_fit_human(result: &FitResult) -> String {
    let mut text = String::new();
    text.push_str(&format!(
        "fitted {} records: mae {:.6}, objective {:.6e}, {} (start {})\n",
        result.residuals.len(),
        result.mean_abs_error,
        result.objective,
        if result.converged {
            "converged"
        } else {
            "not converged"
        },
        result.winner_start,
    ));
    if let Some(holdout) = &result.holdout {
        text.push_str(&format!(
            "holdout: {} records, mae {:.6}, max {:.6}\n",
            holdout.count, holdout.mean_abs_error, holdout.max_abs_error
        ));
    }
    match serde_json::to_string_pretty(&result.params) {
        Ok(params) => text.push_str(&params),
        Err(_) => text.push_str("<unprintable params>"),
    }
    text.push('\n');
    text
}

fn render_optima_human(report: &moe_scaling::OptimaReport) -> String {
    let mut text = format!(
        "G_opt = {:.4}\nS_opt = {:.4}\ntheoretical Na/N = {:.4} ({:.2}%){}\n",
        report.g_opt,
        report.s_opt,
        report.theoretical.ratio,
        100.0 * report.theoretical.ratio,
        if report.theoretical.extrapolated {
            " [extrapolated]"
        } else {
            ""
        },
    );
    match &report.efficiency_aware {
        Some(r) => text.push_str(&format!(
            "efficiency-aware Na/N = {}% at threshold {}\n",
            r.percent, report.threshold
        )),
        None => text.push_str(&format!(
            "efficiency-aware Na/N: did not converge at threshold {}\n",
            report.threshold
        )),
    }
    text
}

fn render_optima_csv(report: &moe_scaling::OptimaReport) -> String {
    format!(
        "g_opt,s_opt,theoretical_ratio,efficiency_percent,threshold\n{},{},{},{},{}\n",
        report.g_opt,
        report.s_opt,
        report.theoretical.ratio,
        report
            .efficiency_aware
            .map(|r| r.percent.to_string())
            .unwrap_or_else(|| "none".into()),
        report.threshold,
    )
}

fn render_frontier_human(report: &moe_scaling::FrontierReport) -> String {
    let mut text = format!("C0 = {:.4}\n", report.c0);
    if let Some(summary) = &report.summary {
        text.push_str(&format!(
            "L*(C) ~ {:.3} + {:.0} * C^{:.4}\n",
            summary.offset, summary.coeff, summary.exponent
        ));
    }
    text.push_str("C,Na*,D*,L*\n");
    for p in &report.points {
        text.push_str(&format!(
            "{:.4e},{:.4e},{:.4e},{:.6}\n",
            p.compute, p.na_star, p.d_star, p.loss_star
        ));
    }
    text
}

fn render_frontier_csv(report: &moe_scaling::FrontierReport) -> String {
    let mut text = String::from("C,Na_star,D_star,loss_star\n");
    for p in &report.points {
        text.push_str(&format!(
            "{},{},{},{}\n",
            p.compute, p.na_star, p.d_star, p.loss_star
        ));
    }
    text
}
