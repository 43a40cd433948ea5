//! Synthetic experiment campaigns over the study grids.
//!
//! The default layout mirrors the published experiment budget: 446 points
//! split into 268 fit points, 88 validation points on the extended ranges,
//! and 90 small-size runs observing the marginal effect of G. The exact
//! membership of each group was never published row by row; this layout
//! keeps the identifiability structure (per-factor controlled sweeps plus
//! stratified coverage) without inventing the original grid.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Campaign, ExperimentRecord, Provenance, StoreError};
use crate::law::{FactorPoint, ScalingConstants};

/// One grid point of a campaign plan, before losses exist.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPoint {
    pub point: FactorPoint,
    pub tags: BTreeMap<String, String>,
}

fn planned(tier: &str, sweep: &str, n: f64, d: f64, na: f64, g: f64, s: f64) -> PlannedPoint {
    let point = FactorPoint::new(n, d, na, g, s)
        .unwrap_or_else(|e| panic!("layout bug at ({n}, {d}, {na}, {g}, {s}): {e}"));
    let mut tags = BTreeMap::new();
    tags.insert("tier".into(), tier.into());
    tags.insert("sweep".into(), sweep.into());
    PlannedPoint { point, tags }
}

const SWEEP_TOKENS: [f64; 3] = [10e9, 20e9, 50e9];

/// The default 446-point layout (268 fit / 88 validation / 90 small-G).
pub fn paper_layout() -> Vec<PlannedPoint> {
    let mut out = Vec::with_capacity(446);

    // -- fit tier: controlled sweeps ------------------------------------
    // N-sweeps at fixed activated size.
    for n in [133e6, 250e6, 500e6, 900e6, 1.7e9, 2.4e9, 3.4e9] {
        for d in SWEEP_TOKENS {
            out.push(planned("fit", "N", n, d, 48e6, 5.0, 0.2));
        }
    }
    // D-sweeps on three reference sizes (token counts off the shared grid so
    // no point collides with the N-sweeps).
    for (n, na) in [(247e6, 48e6), (907e6, 181e6), (2.4e9, 476e6)] {
        for d in [12e9, 15e9, 25e9, 30e9, 40e9, 45e9] {
            out.push(planned("fit", "D", n, d, na, 5.0, 0.2));
        }
    }
    // Na-sweeps at fixed total size (expert-dim rescaling protocol).
    for d in SWEEP_TOKENS {
        for na in [303e6, 476e6, 819e6, 1507e6, 2196e6] {
            out.push(planned("fit", "Na", 2.4e9, d, na, 20.0, 0.2));
        }
        for na in [120e6, 240e6, 480e6, 840e6, 1080e6] {
            out.push(planned("fit", "Na", 1.2e9, d, na, 10.0, 0.2));
        }
    }
    // G-sweeps at fixed sizes.
    for g in [1.0, 2.0, 3.0, 4.0, 5.0, 8.0, 10.0, 16.0] {
        for d in SWEEP_TOKENS {
            out.push(planned("fit", "G", 2.4e9, d, 476e6, g, 0.2));
        }
    }
    // S-sweeps on two sizes.
    for s in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7] {
        for d in SWEEP_TOKENS {
            out.push(planned("fit", "S", 2.4e9, d, 500e6, 8.0, s));
        }
    }
    for s in [0.0, 0.2, 0.4, 0.6] {
        for d in SWEEP_TOKENS {
            out.push(planned("fit", "S", 1.2e9, d, 250e6, 10.0, s));
        }
    }
    // Stratified mixed coverage filling the fit tier to 268 points.
    let n_grid = log_grid(140e6, 3.3e9, 10);
    let d_grid = [11e9, 13e9, 17e9, 23e9, 29e9, 37e9, 43e9];
    let r_grid = [0.02, 0.05, 0.08, 0.12, 0.18, 0.25, 0.35, 0.47, 0.6];
    let g_grid = [1.5, 2.5, 3.5, 5.5, 6.78, 9.0, 13.0, 18.0];
    let s_grid = [0.05, 0.15, 0.25, 0.3148, 0.45, 0.55, 0.65];
    let mixed = 268 - out.len();
    for i in 0..mixed {
        let n = n_grid[i % 10];
        let d = d_grid[(i * 3) % 7];
        let na = (r_grid[(i * 5) % 9] * n).clamp(30e6, 2.2e9).min(n);
        let g = g_grid[(i * 7) % 8];
        let s = s_grid[(i * 11) % 7];
        out.push(planned("fit", "mixed", n, d, na, g, s));
    }
    debug_assert_eq!(out.len(), 268);

    // -- validation tier: extended ranges, extreme corners pinned --------
    out.push(planned(
        "validation",
        "mixed",
        9e9,
        100e9,
        2.7e9,
        6.78,
        0.3148,
    ));
    out.push(planned("validation", "mixed", 9e9, 10e9, 900e6, 4.0, 0.1));
    out.push(planned(
        "validation",
        "mixed",
        2.4e9,
        100e9,
        600e6,
        12.0,
        0.5,
    ));
    out.push(planned("validation", "mixed", 2.4e9, 10e9, 453e6, 2.0, 0.0));
    let n_grid = log_grid(2.4e9, 9e9, 6);
    let d_grid = [10e9, 18e9, 32e9, 56e9, 100e9];
    // ratios keep r * N above the 453M activated floor at N = 2.4B, so the
    // clamp can never collapse two lattice points onto each other
    let r_grid = [0.19, 0.26, 0.33, 0.41, 0.5, 0.61, 0.73];
    let g_grid = [2.0, 4.0, 6.78, 9.0, 14.0, 20.0];
    let s_grid = [0.0, 0.15, 0.3148, 0.5, 0.7];
    for i in 0..84 {
        let n = n_grid[i % 6];
        let d = d_grid[(i * 3) % 5];
        let na = (r_grid[(i * 2) % 7] * n).clamp(453e6, 6.6e9).min(n);
        let g = g_grid[(i * 5) % 6];
        let s = s_grid[(i * 4) % 5];
        out.push(planned("validation", "mixed", n, d, na, g, s));
    }
    debug_assert_eq!(out.len(), 268 + 88);

    // -- small-size G-marginal tier --------------------------------------
    for (n, na) in [(133e6, 30e6), (246e6, 48e6)] {
        for g in [
            1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0,
        ] {
            for d in SWEEP_TOKENS {
                out.push(planned("g-sweep-small", "G", n, d, na, g, 0.2));
            }
        }
    }
    debug_assert_eq!(out.len(), 446);
    out
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| match i {
            0 => lo,
            _ if i == count - 1 => hi,
            _ => {
                let t = i as f64 / (count - 1) as f64;
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            }
        })
        .collect()
}

/// Study ranges: points outside both boxes get an `extrapolated` tag.
const FIT_BOX: [(f64, f64); 5] = [
    (133e6, 3.4e9),
    (10e9, 50e9),
    (30e6, 2.2e9),
    (1.0, 20.0),
    (0.0, 0.7),
];
const VALIDATION_BOX: [(f64, f64); 5] = [
    (2.4e9, 9e9),
    (10e9, 100e9),
    (453e6, 6.6e9),
    (1.0, 20.0),
    (0.0, 0.7),
];

fn in_box(point: &FactorPoint, bounds: &[(f64, f64); 5]) -> bool {
    let values = [point.n, point.d, point.na, point.g, point.s];
    values.iter().zip(bounds).all(|(v, (lo, hi))| {
        let slack = 1e-9 * hi.abs().max(1.0);
        *v >= lo - slack && *v <= hi + slack
    })
}

/// Deterministic synthetic campaign: `loss = joint law + Normal(0, sigma)`
/// with a seeded generator, exactly reproducible from
/// `(constants, layout, sigma, seed)`.
pub fn generate_campaign(
    constants: &ScalingConstants,
    layout: &[PlannedPoint],
    sigma: f64,
    seed: u64,
) -> Result<Campaign, StoreError> {
    constants.validate()?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(StoreError::Invalid(format!(
            "noise sigma {sigma} must be non-negative"
        )));
    }
    if layout.is_empty() {
        return Err(StoreError::Invalid("empty campaign layout".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if sigma > 0.0 {
        Some(Normal::new(0.0, sigma).expect("sigma validated"))
    } else {
        None
    };
    let width = layout.len().to_string().len().max(4);
    let mut records = Vec::with_capacity(layout.len());
    for (i, plan) in layout.iter().enumerate() {
        plan.point.validate()?;
        let mut loss = constants.loss(&plan.point)?;
        if let Some(noise) = &noise {
            loss += noise.sample(&mut rng);
        }
        if loss <= 0.0 {
            return Err(StoreError::Invalid(format!(
                "noise sigma {sigma} drove a loss non-positive at point {i}"
            )));
        }
        let mut record = ExperimentRecord {
            id: format!("r{i:0width$}"),
            point: plan.point,
            loss,
            tags: plan.tags.clone(),
        };
        if !in_box(&plan.point, &FIT_BOX) && !in_box(&plan.point, &VALIDATION_BOX) {
            record.tags.insert("extrapolated".into(), "true".into());
        }
        records.push(record);
    }
    Campaign::from_records(
        records,
        Provenance::Synthetic {
            constants: *constants,
            sigma,
            seed,
        },
    )
}

/// The default layout generated from `constants`.
pub fn default_campaign(
    constants: &ScalingConstants,
    sigma: f64,
    seed: u64,
) -> Result<Campaign, StoreError> {
    generate_campaign(constants, &paper_layout(), sigma, seed)
}
