//! Workbench for the joint mixture-of-experts scaling law.
//!
//! The law predicts pretraining validation loss from five factors — total
//! model size, data size, activated model size, activated-expert count and
//! shared-expert ratio — and this crate covers the full workflow around it:
//!
//! - [`law`]: the joint law, its marginal forms, comparison baselines,
//!   analytic gradients and the published constant set.
//! - [`arch`]: conversion between concrete MoE hyperparameters and law
//!   factors, plus controlled-variable sweep planning.
//! - [`fit`]: constrained nonlinear least squares (staged marginal-then-
//!   joint pipeline, Huber or squared error, deterministic multi-start).
//! - [`optim`]: closed-form optima, efficiency-aware activation ratios,
//!   practical tolerance ranges and the compute-optimal frontier.
//! - [`store`]: campaign ingestion/export, synthetic campaign generation,
//!   the constants registry and report tables.

pub mod arch;
pub mod baseline;
pub mod fit;
pub mod law;
pub mod optim;
pub mod store;
pub mod sublaw;

pub use arch::{plan_sweep, ArchitectureSpec, ParamCounts, SweepFactor, SweepPlan};
pub use baseline::{BaselineId, BaselineParams, FineGrainedParams, SparsityParams};
pub use fit::{
    fit_baseline, fit_joint, fit_sub_law, staged_fit_pipeline, FitError, FitObjective, FitOptions,
    FitResult, FittedParams, StagedFit,
};
pub use law::{FactorGradient, FactorPoint, LawError, ScalingConstants};
pub use optim::{
    compute_optimal_frontier, efficiency_aware_ratio, optima_report, optimal_g, optimal_s,
    practical_range_g, practical_range_s, theoretical_ratio, FrontierPoint, FrontierReport,
    OptimError, OptimaReport, PowerLawSummary,
};
pub use store::{
    default_campaign, generate_campaign, ingest_csv, ingest_csv_path, ingest_json,
    ingest_json_path, mainstream_models, paper_layout, render_table, Campaign, ConstantsRegistry,
    ExperimentRecord, ModelEntry, Provenance, ReportKind, StoreError,
};
pub use sublaw::{SubLawForm, SubLawParams};
