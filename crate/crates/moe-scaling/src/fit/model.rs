//! Fittable functional forms: parameter layouts, raw-space predictions and
//! analytic parameter Jacobians for every sub-law and baseline.

use crate::baseline::{BaselineId, BaselineParams, FineGrainedParams, SparsityParams};
use crate::law::ScalingConstants;
use crate::sublaw::{SubLawForm, SubLawParams};

use super::FittedParams;

/// One record reduced to the factor values the models read.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FitRecord {
    pub n: f64,
    pub d: f64,
    pub na: f64,
    pub g: f64,
    pub s: f64,
    pub loss: f64,
}

/// Default box bounds by parameter role.
const WEIGHT: (f64, f64) = (1e-6, 1e6);
const EXPONENT: (f64, f64) = (0.05, 1.5);
const OFFSET: (f64, f64) = (0.1, 5.0);
const S_LINEAR: (f64, f64) = (-100.0, 0.0);
/// Slope on a raw parameter count (the Na-only form's h); raw-unit counts
/// sit at 1e8..1e12 so the weight floor must reach far lower than the
/// generic one.
const RAW_SLOPE: (f64, f64) = (1e-15, 1e3);

#[derive(Debug, Clone, Copy)]
pub(crate) struct ParamSpec {
    pub name: &'static str,
    /// Optimized in log-space (positivity enforced structurally).
    pub log_scale: bool,
    pub lo: f64,
    pub hi: f64,
    pub default: f64,
}

const fn log_param(name: &'static str, bounds: (f64, f64), default: f64) -> ParamSpec {
    ParamSpec {
        name,
        log_scale: true,
        lo: bounds.0,
        hi: bounds.1,
        default,
    }
}

const fn linear_param(name: &'static str, bounds: (f64, f64), default: f64) -> ParamSpec {
    ParamSpec {
        name,
        log_scale: false,
        lo: bounds.0,
        hi: bounds.1,
        default,
    }
}

/// What a fit run optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FitTarget {
    SubLaw(SubLawForm),
    Baseline(BaselineId),
}

/// How a constant-valued factor degrades a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DegeneracyRule {
    /// The form is unidentifiable without variation in this factor.
    Reject,
    /// Only the named parameters die; they get frozen with a warning.
    FreezeStructural,
}

/// A factor axis a target reads, with its degeneracy policy.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Axis {
    pub name: &'static str,
    pub value: fn(&FitRecord) -> f64,
    pub rule: DegeneracyRule,
}

fn axis_n(r: &FitRecord) -> f64 {
    r.n
}
fn axis_d(r: &FitRecord) -> f64 {
    r.d
}
fn axis_na(r: &FitRecord) -> f64 {
    r.na
}
fn axis_g(r: &FitRecord) -> f64 {
    r.g
}
fn axis_s(r: &FitRecord) -> f64 {
    r.s
}
fn axis_sparsity(r: &FitRecord) -> f64 {
    1.0 - r.na / r.n
}

const fn reject(name: &'static str, value: fn(&FitRecord) -> f64) -> Axis {
    Axis {
        name,
        value,
        rule: DegeneracyRule::Reject,
    }
}

const fn structural(name: &'static str, value: fn(&FitRecord) -> f64) -> Axis {
    Axis {
        name,
        value,
        rule: DegeneracyRule::FreezeStructural,
    }
}

impl FitTarget {
    pub fn name(&self) -> &'static str {
        match self {
            FitTarget::SubLaw(form) => form.name(),
            FitTarget::Baseline(id) => id.name(),
        }
    }

    pub fn param_specs(&self) -> Vec<ParamSpec> {
        let t5 = ScalingConstants::table5();
        match self {
            FitTarget::SubLaw(SubLawForm::Nd) => vec![
                log_param("a", WEIGHT, t5.a),
                log_param("alpha", EXPONENT, t5.alpha),
                log_param("b", WEIGHT, t5.b),
                log_param("beta", EXPONENT, t5.beta),
                log_param("epsilon", OFFSET, t5.epsilon),
            ],
            FitTarget::SubLaw(SubLawForm::NaOnly) => vec![
                log_param("c", WEIGHT, t5.c),
                log_param("gamma", EXPONENT, t5.alpha),
                log_param("h", RAW_SLOPE, 1e-9),
                log_param("iota", OFFSET, t5.epsilon),
            ],
            FitTarget::SubLaw(SubLawForm::NdNa) => vec![
                log_param("a", WEIGHT, t5.a),
                log_param("alpha", EXPONENT, t5.alpha),
                log_param("b", WEIGHT, t5.b),
                log_param("beta", EXPONENT, t5.beta),
                log_param("c", WEIGHT, t5.c),
                log_param("h", WEIGHT, t5.h),
                log_param("epsilon", OFFSET, t5.epsilon),
            ],
            FitTarget::SubLaw(SubLawForm::GOnly) => vec![
                log_param("e", WEIGHT, t5.e),
                log_param("f", WEIGHT, t5.f),
                log_param("tau", OFFSET, t5.epsilon),
            ],
            FitTarget::SubLaw(SubLawForm::NdNaG) => vec![
                log_param("e", WEIGHT, t5.e),
                log_param("f", WEIGHT, t5.f),
                log_param("k", WEIGHT, t5.k),
                log_param("h", WEIGHT, t5.h),
                log_param("a", WEIGHT, t5.a),
                log_param("alpha", EXPONENT, t5.alpha),
                log_param("b", WEIGHT, t5.b),
                log_param("beta", EXPONENT, t5.beta),
                log_param("c", WEIGHT, t5.c),
                log_param("epsilon", OFFSET, t5.epsilon),
            ],
            FitTarget::SubLaw(SubLawForm::SOnly) => vec![
                log_param("m", WEIGHT, t5.m),
                linear_param("n", S_LINEAR, t5.n),
                log_param("psi", OFFSET, 2.5),
            ],
            FitTarget::SubLaw(SubLawForm::Joint) => vec![
                log_param("e", WEIGHT, t5.e),
                log_param("f", WEIGHT, t5.f),
                log_param("m", WEIGHT, t5.m),
                linear_param("n", S_LINEAR, t5.n),
                log_param("k", WEIGHT, t5.k),
                log_param("h", WEIGHT, t5.h),
                log_param("a", WEIGHT, t5.a),
                log_param("alpha", EXPONENT, t5.alpha),
                log_param("b", WEIGHT, t5.b),
                log_param("beta", EXPONENT, t5.beta),
                log_param("c", WEIGHT, t5.c),
                log_param("epsilon", OFFSET, t5.epsilon),
            ],
            FitTarget::Baseline(BaselineId::FineGrainedGranularity) => vec![
                log_param("c", OFFSET, t5.epsilon),
                log_param("g", WEIGHT, 1.0),
                log_param("gamma", EXPONENT, 0.5),
                log_param("a", WEIGHT, t5.a),
                log_param("alpha", EXPONENT, t5.alpha),
                log_param("b", WEIGHT, t5.b),
                log_param("beta", EXPONENT, t5.beta),
            ],
            FitTarget::Baseline(BaselineId::SparsityFlops) => vec![
                log_param("a", WEIGHT, t5.a),
                log_param("alpha", EXPONENT, t5.alpha),
                log_param("b", WEIGHT, t5.b),
                log_param("beta", EXPONENT, t5.beta),
                log_param("c", WEIGHT, 1.0),
                log_param("lambda", EXPONENT, 0.5),
                log_param("d", WEIGHT, 1.0),
                log_param("delta", EXPONENT, 0.5),
                log_param("gamma", EXPONENT, t5.alpha),
                log_param("e_offset", OFFSET, t5.epsilon),
            ],
        }
    }

    /// The factor axes the form reads, with their degeneracy policies.
    pub fn axes(&self) -> Vec<Axis> {
        match self {
            FitTarget::SubLaw(SubLawForm::Nd) => vec![reject("N", axis_n), reject("D", axis_d)],
            FitTarget::SubLaw(SubLawForm::NaOnly) => vec![reject("Na", axis_na)],
            FitTarget::SubLaw(SubLawForm::NdNa) => {
                vec![
                    reject("N", axis_n),
                    reject("D", axis_d),
                    reject("Na", axis_na),
                ]
            }
            FitTarget::SubLaw(SubLawForm::GOnly) => vec![reject("G", axis_g)],
            FitTarget::SubLaw(SubLawForm::NdNaG) => vec![
                reject("N", axis_n),
                reject("D", axis_d),
                reject("Na", axis_na),
                reject("G", axis_g),
            ],
            FitTarget::SubLaw(SubLawForm::SOnly) => vec![reject("S", axis_s)],
            FitTarget::SubLaw(SubLawForm::Joint) => vec![
                reject("N", axis_n),
                reject("D", axis_d),
                structural("Na", axis_na),
                structural("G", axis_g),
                structural("S", axis_s),
            ],
            FitTarget::Baseline(BaselineId::FineGrainedGranularity) => vec![
                reject("Na", axis_na),
                reject("D", axis_d),
                structural("G", axis_g),
            ],
            FitTarget::Baseline(BaselineId::SparsityFlops) => vec![
                reject("N", axis_n),
                reject("D", axis_d),
                structural("sparsity", axis_sparsity),
            ],
        }
    }

    /// Parameter indices that become unidentifiable when the named structural
    /// axis is constant, with the raw values to freeze them at. The second
    /// element distinguishes the vanishing case (the axis is identically
    /// zero, so the parameters can be pinned at the bounds that null their
    /// terms) from the merely-constant one (frozen at defaults).
    pub fn structural_freeze(&self, axis: &str, vanished: bool) -> Vec<(usize, f64)> {
        let specs = self.param_specs();
        let idx = |name: &str| {
            specs
                .iter()
                .position(|p| p.name == name)
                .expect("known param")
        };
        match (self, axis) {
            (FitTarget::SubLaw(SubLawForm::Joint), "Na") => {
                // a constant activated size turns both Na power terms into
                // offsets; k is pinned at the bound that nulls its term and
                // c merges into the floor
                vec![
                    (idx("k"), specs[idx("k")].lo),
                    (idx("c"), specs[idx("c")].default),
                ]
            }
            (FitTarget::SubLaw(SubLawForm::Joint), "G") => {
                vec![
                    (idx("e"), specs[idx("e")].default),
                    (idx("f"), specs[idx("f")].default),
                ]
            }
            (FitTarget::SubLaw(SubLawForm::Joint), "S") => {
                if vanished {
                    // S == 0 everywhere: the quadratic contributes nothing;
                    // pin m to its lower bound and n to its upper bound.
                    vec![
                        (idx("m"), specs[idx("m")].lo),
                        (idx("n"), specs[idx("n")].hi),
                    ]
                } else {
                    vec![
                        (idx("m"), specs[idx("m")].default),
                        (idx("n"), specs[idx("n")].default),
                    ]
                }
            }
            (FitTarget::Baseline(BaselineId::FineGrainedGranularity), "G") => {
                vec![
                    (idx("g"), specs[idx("g")].lo),
                    (idx("gamma"), specs[idx("gamma")].default),
                ]
            }
            (FitTarget::Baseline(BaselineId::SparsityFlops), "sparsity") => vec![
                (idx("lambda"), specs[idx("lambda")].default),
                (idx("delta"), specs[idx("delta")].default),
            ],
            _ => vec![],
        }
    }

    /// Model prediction at raw parameters `theta`.
    pub fn predict(&self, theta: &[f64], r: &FitRecord) -> f64 {
        match self {
            FitTarget::SubLaw(SubLawForm::Nd) => {
                let [a, alpha, b, beta, epsilon] = theta else {
                    unreachable!()
                };
                a * r.n.powf(-alpha) + b * r.d.powf(-beta) + epsilon
            }
            FitTarget::SubLaw(SubLawForm::NaOnly) => {
                let [c, gamma, h, iota] = theta else {
                    unreachable!()
                };
                c * r.na.powf(-gamma) + h * r.na + iota
            }
            FitTarget::SubLaw(SubLawForm::NdNa) => {
                let [a, alpha, b, beta, c, h, epsilon] = theta else {
                    unreachable!()
                };
                a * r.n.powf(-alpha)
                    + b * r.d.powf(-beta)
                    + c * r.na.powf(-alpha)
                    + h * r.na / r.n
                    + epsilon
            }
            FitTarget::SubLaw(SubLawForm::GOnly) => {
                let [e, f, tau] = theta else { unreachable!() };
                e * r.g + f / r.g + tau
            }
            FitTarget::SubLaw(SubLawForm::NdNaG) => {
                let [e, f, k, h, a, alpha, b, beta, c, epsilon] = theta else {
                    unreachable!()
                };
                let pn = r.n.powf(-alpha);
                let pna = r.na.powf(-alpha);
                (e * r.g + f / r.g) * (pn + k * pna + h * r.na / r.n)
                    + a * pn
                    + b * r.d.powf(-beta)
                    + c * pna
                    + epsilon
            }
            FitTarget::SubLaw(SubLawForm::SOnly) => {
                let [m, n, psi] = theta else { unreachable!() };
                m * r.s * r.s + n * r.s + psi
            }
            FitTarget::SubLaw(SubLawForm::Joint) => {
                let [e, f, m, n, k, h, a, alpha, b, beta, c, epsilon] = theta else {
                    unreachable!()
                };
                let pn = r.n.powf(-alpha);
                let pna = r.na.powf(-alpha);
                (e * r.g + f / r.g + m * r.s * r.s + n * r.s) * (pn + k * pna + h * r.na / r.n)
                    + a * pn
                    + b * r.d.powf(-beta)
                    + c * pna
                    + epsilon
            }
            FitTarget::Baseline(BaselineId::FineGrainedGranularity) => {
                let [c, g, gamma, a, alpha, b, beta] = theta else {
                    unreachable!()
                };
                c + (g * r.g.powf(-gamma) + a) * r.na.powf(-alpha) + b * r.d.powf(-beta)
            }
            FitTarget::Baseline(BaselineId::SparsityFlops) => {
                let [a, alpha, b, beta, c, lambda, d, delta, gamma, e_offset] = theta else {
                    unreachable!()
                };
                let dense = r.na / r.n; // 1 - sparsity
                a * r.n.powf(-alpha)
                    + b * r.d.powf(-beta)
                    + c * dense.powf(-lambda)
                    + d * dense.powf(-delta) * r.n.powf(-gamma)
                    + e_offset
            }
        }
    }

    /// Analytic partials of the prediction with respect to raw parameters,
    /// written into `row` (same layout as `param_specs`).
    pub fn fill_jacobian(&self, theta: &[f64], r: &FitRecord, row: &mut [f64]) {
        match self {
            FitTarget::SubLaw(SubLawForm::Nd) => {
                let [a, alpha, b, beta, _] = theta else {
                    unreachable!()
                };
                let pn = r.n.powf(-alpha);
                let pd = r.d.powf(-beta);
                row.copy_from_slice(&[pn, -a * r.n.ln() * pn, pd, -b * r.d.ln() * pd, 1.0]);
            }
            FitTarget::SubLaw(SubLawForm::NaOnly) => {
                let [c, gamma, _, _] = theta else {
                    unreachable!()
                };
                let pna = r.na.powf(-gamma);
                row.copy_from_slice(&[pna, -c * r.na.ln() * pna, r.na, 1.0]);
            }
            FitTarget::SubLaw(SubLawForm::NdNa) => {
                let [a, alpha, b, beta, c, _, _] = theta else {
                    unreachable!()
                };
                let pn = r.n.powf(-alpha);
                let pna = r.na.powf(-alpha);
                let pd = r.d.powf(-beta);
                row.copy_from_slice(&[
                    pn,
                    -(a * r.n.ln() * pn + c * r.na.ln() * pna),
                    pd,
                    -b * r.d.ln() * pd,
                    pna,
                    r.na / r.n,
                    1.0,
                ]);
            }
            FitTarget::SubLaw(SubLawForm::GOnly) => {
                row.copy_from_slice(&[r.g, 1.0 / r.g, 1.0]);
            }
            FitTarget::SubLaw(SubLawForm::NdNaG) => {
                let [e, f, k, h, a, alpha, b, beta, c, _] = theta else {
                    unreachable!()
                };
                let pn = r.n.powf(-alpha);
                let pna = r.na.powf(-alpha);
                let pd = r.d.powf(-beta);
                let bracket = e * r.g + f / r.g;
                let size = pn + k * pna + h * r.na / r.n;
                row.copy_from_slice(&[
                    r.g * size,
                    size / r.g,
                    bracket * pna,
                    bracket * r.na / r.n,
                    pn,
                    -(bracket * (r.n.ln() * pn + k * r.na.ln() * pna)
                        + a * r.n.ln() * pn
                        + c * r.na.ln() * pna),
                    pd,
                    -b * r.d.ln() * pd,
                    pna,
                    1.0,
                ]);
            }
            FitTarget::SubLaw(SubLawForm::SOnly) => {
                row.copy_from_slice(&[r.s * r.s, r.s, 1.0]);
            }
            FitTarget::SubLaw(SubLawForm::Joint) => {
                let [e, f, m, n, k, h, a, alpha, b, beta, c, _] = theta else {
                    unreachable!()
                };
                let pn = r.n.powf(-alpha);
                let pna = r.na.powf(-alpha);
                let pd = r.d.powf(-beta);
                let bracket = e * r.g + f / r.g + m * r.s * r.s + n * r.s;
                let size = pn + k * pna + h * r.na / r.n;
                row.copy_from_slice(&[
                    r.g * size,
                    size / r.g,
                    r.s * r.s * size,
                    r.s * size,
                    bracket * pna,
                    bracket * r.na / r.n,
                    pn,
                    -((bracket + a) * r.n.ln() * pn + (bracket * k + c) * r.na.ln() * pna),
                    pd,
                    -b * r.d.ln() * pd,
                    pna,
                    1.0,
                ]);
            }
            FitTarget::Baseline(BaselineId::FineGrainedGranularity) => {
                let [_, g, gamma, a, alpha, b, beta] = theta else {
                    unreachable!()
                };
                let pg = r.g.powf(-gamma);
                let pna = r.na.powf(-alpha);
                let pd = r.d.powf(-beta);
                row.copy_from_slice(&[
                    1.0,
                    pg * pna,
                    -g * r.g.ln() * pg * pna,
                    pna,
                    -(g * pg + a) * r.na.ln() * pna,
                    pd,
                    -b * r.d.ln() * pd,
                ]);
            }
            FitTarget::Baseline(BaselineId::SparsityFlops) => {
                let [a, alpha, b, beta, c, lambda, d, delta, gamma, _] = theta else {
                    unreachable!()
                };
                let dense = r.na / r.n; // 1 - sparsity
                let pn = r.n.powf(-alpha);
                let pd = r.d.powf(-beta);
                let pl = dense.powf(-lambda);
                let pdel = dense.powf(-delta);
                let pg = r.n.powf(-gamma);
                row.copy_from_slice(&[
                    pn,
                    -a * r.n.ln() * pn,
                    pd,
                    -b * r.d.ln() * pd,
                    pl,
                    -c * dense.ln() * pl,
                    pdel * pg,
                    -d * dense.ln() * pdel * pg,
                    -d * pdel * r.n.ln() * pg,
                    1.0,
                ]);
            }
        }
    }

    /// Wraps raw parameters into the public result type.
    pub fn pack(&self, t: &[f64]) -> FittedParams {
        match self {
            FitTarget::SubLaw(SubLawForm::Nd) => FittedParams::SubLaw(SubLawParams::Nd {
                a: t[0],
                alpha: t[1],
                b: t[2],
                beta: t[3],
                epsilon: t[4],
            }),
            FitTarget::SubLaw(SubLawForm::NaOnly) => FittedParams::SubLaw(SubLawParams::NaOnly {
                c: t[0],
                gamma: t[1],
                h: t[2],
                iota: t[3],
            }),
            FitTarget::SubLaw(SubLawForm::NdNa) => FittedParams::SubLaw(SubLawParams::NdNa {
                a: t[0],
                alpha: t[1],
                b: t[2],
                beta: t[3],
                c: t[4],
                h: t[5],
                epsilon: t[6],
            }),
            FitTarget::SubLaw(SubLawForm::GOnly) => FittedParams::SubLaw(SubLawParams::GOnly {
                e: t[0],
                f: t[1],
                tau: t[2],
            }),
            FitTarget::SubLaw(SubLawForm::NdNaG) => FittedParams::SubLaw(SubLawParams::NdNaG {
                e: t[0],
                f: t[1],
                k: t[2],
                h: t[3],
                a: t[4],
                alpha: t[5],
                b: t[6],
                beta: t[7],
                c: t[8],
                epsilon: t[9],
            }),
            FitTarget::SubLaw(SubLawForm::SOnly) => FittedParams::SubLaw(SubLawParams::SOnly {
                m: t[0],
                n: t[1],
                psi: t[2],
            }),
            FitTarget::SubLaw(SubLawForm::Joint) => {
                FittedParams::SubLaw(SubLawParams::Joint(ScalingConstants {
                    e: t[0],
                    f: t[1],
                    m: t[2],
                    n: t[3],
                    k: t[4],
                    h: t[5],
                    a: t[6],
                    alpha: t[7],
                    b: t[8],
                    beta: t[9],
                    c: t[10],
                    epsilon: t[11],
                }))
            }
            FitTarget::Baseline(BaselineId::FineGrainedGranularity) => {
                FittedParams::Baseline(BaselineParams::FineGrained(FineGrainedParams {
                    c: t[0],
                    g: t[1],
                    gamma: t[2],
                    a: t[3],
                    alpha: t[4],
                    b: t[5],
                    beta: t[6],
                }))
            }
            FitTarget::Baseline(BaselineId::SparsityFlops) => {
                FittedParams::Baseline(BaselineParams::Sparsity(SparsityParams {
                    a: t[0],
                    alpha: t[1],
                    b: t[2],
                    beta: t[3],
                    c: t[4],
                    lambda: t[5],
                    d: t[6],
                    delta: t[7],
                    gamma: t[8],
                    e_offset: t[9],
                }))
            }
        }
    }
}
