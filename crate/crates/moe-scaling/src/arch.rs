//! Conversion between concrete MoE architecture hyperparameters and the
//! abstract law factors, plus controlled-variable sweep planning.
//!
//! Parameter counts follow the structural approximation
//!
//! ```text
//! Na = (4*d_head*n_h + 3*G*d_expert) * d_hidden * l
//! N  = (4*d_head*n_h + 3*d_expert*(n_s + n_e)) * d_hidden * l
//! ```
//!
//! with `G = n_k + n_s` and `S = n_s / G`. Embedding and unembedding
//! parameters are excluded, which leaves headline sizes roughly 2% below the
//! marketing numbers; the formulas, not the marketing numbers, are the law's
//! inputs.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::law::{FactorPoint, LawError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArchError {
    #[error("invalid architecture: {0}")]
    InvalidSpec(String),
    #[error("expert-dim scale {scale} is unrealizable: {reason}")]
    UnrealizableScale { scale: f64, reason: String },
    #[error("{factor} level {level} is unrealizable: {reason}")]
    UnrealizableLevel {
        factor: SweepFactor,
        level: f64,
        reason: String,
    },
    #[error(transparent)]
    Law(#[from] LawError),
}

/// Concrete MoE hyperparameters. JSON field names follow the symbol
/// glossary (`l`, `d_hidden`, `d_head`, `n_h`, `d_expert`, `n_e`, `n_k`,
/// `n_s`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSpec {
    #[serde(rename = "l")]
    pub layers: u32,
    pub d_hidden: u32,
    pub d_head: u32,
    #[serde(rename = "n_h")]
    pub n_heads: u32,
    pub d_expert: u32,
    /// Routed experts.
    #[serde(rename = "n_e")]
    pub n_routed: u32,
    /// Activated routed experts (router top-k).
    #[serde(rename = "n_k")]
    pub n_active_routed: u32,
    /// Always-on shared experts.
    #[serde(rename = "n_s")]
    pub n_shared: u32,
}

/// Exact factor values derived from a spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamCounts {
    /// Total model size N (parameters).
    pub total: u64,
    /// Activated model size Na (parameters).
    pub activated: u64,
    /// Activated expert count G.
    pub granularity: f64,
    /// Shared-expert ratio S.
    pub shared_ratio: f64,
}

impl ArchitectureSpec {
    pub fn validate(&self) -> Result<(), ArchError> {
        let err = |msg: String| Err(ArchError::InvalidSpec(msg));
        for (name, v) in [
            ("l", self.layers),
            ("d_hidden", self.d_hidden),
            ("d_head", self.d_head),
            ("n_h", self.n_heads),
            ("d_expert", self.d_expert),
            ("n_e", self.n_routed),
        ] {
            if v == 0 {
                return err(format!("{name} must be positive"));
            }
        }
        if self.n_active_routed > self.n_routed {
            return err(format!(
                "n_k = {} exceeds n_e = {}",
                self.n_active_routed, self.n_routed
            ));
        }
        if self.n_active_routed + self.n_shared == 0 {
            return err("at least one expert must be activated (n_k + n_s >= 1)".into());
        }
        Ok(())
    }

    /// Activated expert count `G = n_k + n_s`.
    pub fn granularity(&self) -> f64 {
        f64::from(self.n_active_routed + self.n_shared)
    }

    /// Shared-expert ratio `S = n_s / G`.
    pub fn shared_ratio(&self) -> f64 {
        f64::from(self.n_shared) / self.granularity()
    }

    /// Exact parameter counts per the structural formulas.
    pub fn param_counts(&self) -> Result<ParamCounts, ArchError> {
        self.validate()?;
        let attn = 4 * u64::from(self.d_head) * u64::from(self.n_heads);
        let per_layer = u64::from(self.d_hidden);
        let layers = u64::from(self.layers);
        let g = u64::from(self.n_active_routed + self.n_shared);
        let experts_total = u64::from(self.n_shared) + u64::from(self.n_routed);
        let activated = (attn + 3 * g * u64::from(self.d_expert)) * per_layer * layers;
        let total = (attn + 3 * u64::from(self.d_expert) * experts_total) * per_layer * layers;
        Ok(ParamCounts {
            total,
            activated,
            granularity: self.granularity(),
            shared_ratio: self.shared_ratio(),
        })
    }

    /// Law factor point for this architecture trained on `tokens` tokens.
    pub fn to_factor_point(&self, tokens: f64) -> Result<FactorPoint, ArchError> {
        let counts = self.param_counts()?;
        Ok(FactorPoint::new(
            counts.total as f64,
            tokens,
            counts.activated as f64,
            counts.granularity,
            counts.shared_ratio,
        )?)
    }

    /// Scales the expert dimension by `u` while preserving the total size N:
    /// the routed-expert count is rescaled by `v = ((1-u)*S*G + n_e)/(u*n_e)`
    /// so the activated size Na tracks `u`. Both new values are rounded to
    /// the nearest integer (ties away from zero); the caller can measure the
    /// resulting drift by comparing `param_counts`.
    pub fn scale_expert_dim(&self, u: f64) -> Result<ArchitectureSpec, ArchError> {
        self.validate()?;
        if !(u > 0.0 && u.is_finite()) {
            return Err(ArchError::UnrealizableScale {
                scale: u,
                reason: "scale must be positive".into(),
            });
        }
        let n_e = f64::from(self.n_routed);
        let n_s = f64::from(self.n_shared); // = S * G
        let v = ((1.0 - u) * n_s + n_e) / (u * n_e);
        if v <= 0.0 {
            return Err(ArchError::UnrealizableScale {
                scale: u,
                reason: "scale too large for this base: routed experts would vanish".into(),
            });
        }
        let d_expert = (f64::from(self.d_expert) * u).round();
        if d_expert < 1.0 {
            return Err(ArchError::UnrealizableScale {
                scale: u,
                reason: "expert dimension rounds to zero".into(),
            });
        }
        let n_routed = (n_e * v).round();
        if n_routed < f64::from(self.n_active_routed) {
            return Err(ArchError::UnrealizableScale {
                scale: u,
                reason: format!(
                    "only {n_routed} routed experts remain but n_k = {} must be activated",
                    self.n_active_routed
                ),
            });
        }
        let scaled = ArchitectureSpec {
            d_expert: d_expert as u32,
            n_routed: n_routed as u32,
            ..*self
        };
        scaled.validate()?;
        Ok(scaled)
    }
}

/// Which factor a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SweepFactor {
    G,
    S,
    Na,
    N,
    D,
}

impl std::fmt::Display for SweepFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweepFactor::G => "G",
            SweepFactor::S => "S",
            SweepFactor::Na => "Na",
            SweepFactor::N => "N",
            SweepFactor::D => "D",
        };
        f.write_str(s)
    }
}

/// A controlled-variable sweep: one target factor varied, the other four
/// held fixed (within integer-rounding drift, checked at `RELATIVE_DRIFT_TOL`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    pub factor: SweepFactor,
    pub base: ArchitectureSpec,
    pub levels: Vec<f64>,
    pub specs: Vec<ArchitectureSpec>,
}

/// Maximum relative drift of non-target factors across sweep levels.
pub const RELATIVE_DRIFT_TOL: f64 = 0.01;

fn rel_drift(derived: f64, base: f64) -> f64 {
    if base == 0.0 {
        derived.abs()
    } else {
        ((derived - base) / base).abs()
    }
}

fn integral(value: f64) -> Option<u32> {
    let rounded = value.round();
    if (value - rounded).abs() < 1e-9 && (0.0..=u32::MAX as f64).contains(&rounded) {
        Some(rounded as u32)
    } else {
        None
    }
}

/// Realizes a sweep of `factor` over `levels` from `base`.
///
/// Realization rules: G-sweeps scale expert counts up and expert dimensions
/// down proportionally; S-sweeps convert routed experts into shared ones at
/// fixed G (so `n_s + n_e` stays constant and N is untouched); Na-sweeps use
/// [`ArchitectureSpec::scale_expert_dim`]; N-sweeps add routed experts at
/// fixed Na; D-sweeps leave the spec untouched. Levels whose integrality
/// constraints cannot be met within the drift tolerance are rejected with
/// the violated constraint named.
pub fn plan_sweep(
    base: &ArchitectureSpec,
    factor: SweepFactor,
    levels: &[f64],
) -> Result<SweepPlan, ArchError> {
    let base_counts = base.param_counts()?;
    let mut specs = Vec::with_capacity(levels.len());
    for &level in levels {
        let spec = realize_level(base, &base_counts, factor, level)?;
        check_drift(&base_counts, &spec, factor, level)?;
        specs.push(spec);
    }
    Ok(SweepPlan {
        factor,
        base: *base,
        levels: levels.to_vec(),
        specs,
    })
}

fn realize_level(
    base: &ArchitectureSpec,
    base_counts: &ParamCounts,
    factor: SweepFactor,
    level: f64,
) -> Result<ArchitectureSpec, ArchError> {
    let unrealizable = |reason: String| ArchError::UnrealizableLevel {
        factor,
        level,
        reason,
    };
    let attn = 4.0 * f64::from(base.d_head) * f64::from(base.n_heads);
    let stack = f64::from(base.d_hidden) * f64::from(base.layers);
    match factor {
        SweepFactor::G => {
            if !(level >= 1.0 && level.is_finite()) {
                return Err(unrealizable("G must be >= 1".into()));
            }
            let g_new = integral(level)
                .ok_or_else(|| unrealizable("activated expert count must be an integer".into()))?;
            let n_shared = integral(base_counts.shared_ratio * level).ok_or_else(|| {
                unrealizable(format!(
                    "S*G = {} is not an integral shared-expert count",
                    base_counts.shared_ratio * level
                ))
            })?;
            if n_shared > g_new {
                return Err(unrealizable(
                    "shared experts exceed activated experts".into(),
                ));
            }
            let scale = level / base_counts.granularity;
            let spec = ArchitectureSpec {
                d_expert: (f64::from(base.d_expert) / scale).round() as u32,
                n_routed: (f64::from(base.n_routed) * scale).round() as u32,
                n_active_routed: g_new - n_shared,
                n_shared,
                ..*base
            };
            spec.validate().map_err(|e| unrealizable(e.to_string()))?;
            Ok(spec)
        }
        SweepFactor::S => {
            if !(0.0..1.0).contains(&level) {
                return Err(unrealizable("S must lie in [0, 1)".into()));
            }
            let g = base.n_active_routed + base.n_shared;
            let n_shared = integral(level * f64::from(g)).ok_or_else(|| {
                unrealizable(format!(
                    "S*G = {} is not an integral shared-expert count",
                    level * f64::from(g)
                ))
            })?;
            if n_shared >= g && n_shared != 0 {
                return Err(unrealizable(
                    "all activated experts would be shared (S must stay below 1)".into(),
                ));
            }
            // Convert routed experts to shared ones so n_s + n_e (and with it
            // N) is untouched.
            let pool = base.n_shared + base.n_routed;
            if n_shared >= pool {
                return Err(unrealizable("not enough experts in the pool".into()));
            }
            let spec = ArchitectureSpec {
                n_shared,
                n_active_routed: g - n_shared,
                n_routed: pool - n_shared,
                ..*base
            };
            spec.validate().map_err(|e| unrealizable(e.to_string()))?;
            Ok(spec)
        }
        SweepFactor::Na => {
            let u =
                (level / stack - attn) / (3.0 * base_counts.granularity * f64::from(base.d_expert));
            if !(u > 0.0 && u.is_finite()) {
                return Err(unrealizable(
                    "target activated size below the attention floor".into(),
                ));
            }
            // Levels are typically quoted in round units; snapping the scale
            // to percent resolution keeps them on the protocol's exact grid.
            let u = if u >= 0.02 {
                (u * 100.0).round() / 100.0
            } else {
                u
            };
            base.scale_expert_dim(u)
                .map_err(|e| unrealizable(e.to_string()))
        }
        SweepFactor::N => {
            let experts = (level / stack - attn) / (3.0 * f64::from(base.d_expert));
            let n_routed = (experts - f64::from(base.n_shared)).round();
            if n_routed < f64::from(base.n_active_routed) {
                return Err(unrealizable(format!(
                    "only {n_routed} routed experts fit but n_k = {} must be activated",
                    base.n_active_routed
                )));
            }
            let spec = ArchitectureSpec {
                n_routed: n_routed as u32,
                ..*base
            };
            spec.validate().map_err(|e| unrealizable(e.to_string()))?;
            Ok(spec)
        }
        SweepFactor::D => {
            if !(level > 0.0 && level.is_finite()) {
                return Err(unrealizable("token count must be positive".into()));
            }
            Ok(*base)
        }
    }
}

fn check_drift(
    base: &ParamCounts,
    spec: &ArchitectureSpec,
    factor: SweepFactor,
    level: f64,
) -> Result<(), ArchError> {
    let derived = spec.param_counts()?;
    let mut checks: Vec<(&str, f64, f64)> = vec![
        ("N", derived.total as f64, base.total as f64),
        ("Na", derived.activated as f64, base.activated as f64),
        ("G", derived.granularity, base.granularity),
        ("S", derived.shared_ratio, base.shared_ratio),
    ];
    // The target factor must land on its level instead of matching the base.
    match factor {
        SweepFactor::N => checks[0] = ("N", derived.total as f64, level),
        SweepFactor::Na => checks[1] = ("Na", derived.activated as f64, level),
        SweepFactor::G => checks[2] = ("G", derived.granularity, level),
        SweepFactor::S => checks[3] = ("S", derived.shared_ratio, level),
        SweepFactor::D => {}
    }
    for (name, got, want) in checks {
        let drift = if name == "S" {
            (got - want).abs() // S is already a ratio; compare absolutely
        } else {
            rel_drift(got, want)
        };
        if drift > RELATIVE_DRIFT_TOL {
            return Err(ArchError::UnrealizableLevel {
                factor,
                level,
                reason: format!(
                    "integer rounding moves {name} from {want} to {got} ({:.2}% drift)",
                    drift * 100.0
                ),
            });
        }
    }
    Ok(())
}

impl SweepPlan {
    /// One row per level: level value, every spec field, derived factors.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,l,d_hidden,d_head,n_h,d_expert,n_e,n_k,n_s,N,Na,G,S\n");
        for (level, spec) in self.levels.iter().zip(&self.specs) {
            let counts = spec.param_counts().expect("plan specs are validated");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                level,
                spec.layers,
                spec.d_hidden,
                spec.d_head,
                spec.n_heads,
                spec.d_expert,
                spec.n_routed,
                spec.n_active_routed,
                spec.n_shared,
                counts.total,
                counts.activated,
                counts.granularity,
                counts.shared_ratio,
            );
        }
        out
    }
}

/// The five reference configurations used throughout the study, smallest to
/// largest (247M, 496M, 907M, 2.4B, 3.96B total).
pub fn reference_specs() -> Vec<ArchitectureSpec> {
    let dims: [(u32, u32, u32, u32, u32); 5] = [
        (12, 8, 512, 384, 64),
        (12, 12, 768, 512, 64),
        (12, 16, 1024, 704, 64),
        (20, 20, 1280, 896, 64),
        (24, 24, 1536, 1024, 64),
    ];
    dims.iter()
        .map(
            |&(layers, n_heads, d_hidden, d_expert, d_head)| ArchitectureSpec {
                layers,
                d_hidden,
                d_head,
                n_heads,
                d_expert,
                n_routed: 32,
                n_active_routed: 4,
                n_shared: 1,
            },
        )
        .collect()
}

/// The 2.4B-total base used for activated-size sweeps: G = 20, S = 0.2,
/// small experts so that expert-dim rescaling lands on integers.
pub fn uv_sweep_base() -> ArchitectureSpec {
    ArchitectureSpec {
        layers: 20,
        d_hidden: 1280,
        d_head: 64,
        n_heads: 20,
        d_expert: 224,
        n_routed: 128,
        n_active_routed: 16,
        n_shared: 4,
    }
}
