//! Optimal MoE configurations derived from a constant set: closed-form G and
//! S optima, theoretical and efficiency-aware activation ratios, practical
//! tolerance ranges, and the compute-optimal loss frontier.

use serde::Serialize;

use crate::law::{FactorPoint, LawError, ScalingConstants};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimError {
    #[error("invalid input {name} = {value}: {reason}")]
    InvalidInput {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("structural bracket eG + f/G + mS^2 + nS = {0} is not positive")]
    NonPositiveBracket(f64),
    #[error("marginal loss gain never fell below {threshold} within {steps} grid steps")]
    NoConvergence { threshold: f64, steps: usize },
    #[error("no stationary activated size in (0, N] at compute budget {compute:.3e}")]
    NoRoot { compute: f64 },
    #[error(transparent)]
    Law(#[from] LawError),
}

/// Token count used when an absolute loss value is needed but the quantity
/// being derived is data-independent (every Na-marginal difference is).
pub const DEFAULT_TOKENS: f64 = 1e11;

/// Default step budget for the efficiency-aware search: 100 steps of 0.01*N
/// walk the whole ratio grid up to Na = N.
pub const DEFAULT_MAX_STEPS: usize = 100;

fn require(
    cond: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<(), OptimError> {
    if cond {
        Ok(())
    } else {
        Err(OptimError::InvalidInput {
            name,
            value,
            reason,
        })
    }
}

/// Loss-minimizing activated-expert count `sqrt(f/e)`; independent of every
/// other factor.
pub fn optimal_g(constants: &ScalingConstants) -> Result<f64, OptimError> {
    require(constants.e > 0.0, "e", constants.e, "must be positive")?;
    require(constants.f > 0.0, "f", constants.f, "must be positive")?;
    Ok((constants.f / constants.e).sqrt())
}

/// Loss-minimizing shared-expert ratio, clamped into the valid domain with a
/// flag when the raw vertex `-n/(2m)` falls outside `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharedRatioOptimum {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

pub fn optimal_s(constants: &ScalingConstants) -> Result<SharedRatioOptimum, OptimError> {
    require(constants.m > 0.0, "m", constants.m, "must be positive")?;
    let raw = -constants.n / (2.0 * constants.m);
    let value = raw.clamp(0.0, 1.0 - 1e-12);
    Ok(SharedRatioOptimum {
        value,
        raw,
        clamped: value != raw,
    })
}

/// Theoretical loss-minimizing activation ratio at fixed N (and G, S).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioReport {
    pub ratio: f64,
    /// Set when the ratio exceeds 1: the law is extrapolating and the value
    /// is reported unclamped.
    pub extrapolated: bool,
}

/// `(Na/N)_opt = (alpha*(k*A + c) / (h*N^alpha*A))^(1/(alpha+1))` where `A`
/// is the structural bracket at the supplied G and S.
pub fn theoretical_ratio(
    constants: &ScalingConstants,
    total: f64,
    g: f64,
    s: f64,
) -> Result<RatioReport, OptimError> {
    require(
        total > 0.0 && total.is_finite(),
        "N",
        total,
        "must be positive",
    )?;
    require(g >= 1.0 && g.is_finite(), "G", g, "must be >= 1")?;
    require((0.0..1.0).contains(&s), "S", s, "must lie in [0, 1)")?;
    let bracket = constants.bracket(g, s);
    if bracket <= 0.0 {
        return Err(OptimError::NonPositiveBracket(bracket));
    }
    let alpha = constants.alpha;
    let numer = alpha * (constants.k * bracket + constants.c);
    let denom = constants.h * total.powf(alpha) * bracket;
    let ratio = (numer / denom).powf(1.0 / (alpha + 1.0));
    Ok(RatioReport {
        ratio,
        extrapolated: ratio > 1.0,
    })
}

/// Result of the efficiency-aware grid walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyAwareRatio {
    /// `Na / N` at the stopping point.
    pub ratio: f64,
    /// Activated size at the stopping point.
    pub activated: f64,
    /// Stopping point as an exact index on the 1%-of-N grid.
    pub percent: u32,
}

/// Walks Na up a 0.01*N grid starting from 0.01*N and returns the first grid
/// point whose loss improvement over the previous one falls below
/// `threshold`. The absolute losses use [`DEFAULT_TOKENS`]; the stopping rule
/// is data-independent because the D term contains no Na.
pub fn efficiency_aware_ratio(
    constants: &ScalingConstants,
    total: f64,
    g: f64,
    s: f64,
    threshold: f64,
    max_steps: usize,
) -> Result<EfficiencyAwareRatio, OptimError> {
    require(
        total > 0.0 && total.is_finite(),
        "N",
        total,
        "must be positive",
    )?;
    require(threshold > 0.0, "threshold", threshold, "must be positive")?;
    // grid point k sits at exactly k percent of N; the dense end lands on
    // Na = N rather than drifting past it
    let grid_point = |k: u32| {
        if k == 100 {
            total
        } else {
            total * f64::from(k) / 100.0
        }
    };
    let loss_at = |activated: f64| -> Result<f64, OptimError> {
        let point = FactorPoint::new(total, DEFAULT_TOKENS, activated, g, s)?;
        Ok(constants.loss(&point)?)
    };
    let mut loss_prev = loss_at(grid_point(1))?;
    for iteration in 1..=max_steps {
        let grid_index = iteration as u32 + 1;
        if grid_index > 100 {
            break;
        }
        let activated = grid_point(grid_index);
        let loss_current = loss_at(activated)?;
        if loss_prev - loss_current < threshold {
            return Ok(EfficiencyAwareRatio {
                ratio: activated / total,
                activated,
                percent: grid_index,
            });
        }
        loss_prev = loss_current;
    }
    Err(OptimError::NoConvergence {
        threshold,
        steps: max_steps,
    })
}

/// G interval within which the loss stays within `threshold` of the G
/// optimum, for the size bracket fixed by (N, Na). S cancels in the gap and
/// is not an input. Solves `eG + f/G = 2*sqrt(ef) + threshold/B` exactly.
pub fn practical_range_g(
    constants: &ScalingConstants,
    total: f64,
    activated: f64,
    threshold: f64,
) -> Result<(f64, f64), OptimError> {
    validate_sizes(total, activated)?;
    require(
        threshold >= 0.0,
        "threshold",
        threshold,
        "must be non-negative",
    )?;
    let b = constants.size_bracket(total, activated);
    let target = 2.0 * (constants.e * constants.f).sqrt() + threshold / b;
    // Roots of e G^2 - target G + f = 0, in the cancellation-free form.
    let disc = target * target - 4.0 * constants.e * constants.f;
    if disc < 0.0 {
        // Unreachable for threshold >= 0; kept as a guard for abused inputs.
        return Err(OptimError::InvalidInput {
            name: "threshold",
            value: threshold,
            reason: "discriminant negative",
        });
    }
    let hi = (target + disc.sqrt()) / (2.0 * constants.e);
    let lo = constants.f / (constants.e * hi);
    Ok((lo, hi))
}

/// S interval within `threshold` of the S optimum: `S_opt +- sqrt((thr/B)/m)`
/// clipped to `[0, 1)` with a flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharedRatioRange {
    pub lo: f64,
    pub hi: f64,
    pub clipped: bool,
}

pub fn practical_range_s(
    constants: &ScalingConstants,
    total: f64,
    activated: f64,
    threshold: f64,
) -> Result<SharedRatioRange, OptimError> {
    validate_sizes(total, activated)?;
    require(
        threshold >= 0.0,
        "threshold",
        threshold,
        "must be non-negative",
    )?;
    let b = constants.size_bracket(total, activated);
    let vertex = optimal_s(constants)?.raw;
    let half_width = ((threshold / b) / constants.m).sqrt();
    let (raw_lo, raw_hi) = (vertex - half_width, vertex + half_width);
    let lo = raw_lo.max(0.0);
    let hi = raw_hi.min(1.0 - 1e-12);
    Ok(SharedRatioRange {
        lo,
        hi,
        clipped: lo != raw_lo || hi != raw_hi,
    })
}

fn validate_sizes(total: f64, activated: f64) -> Result<(), OptimError> {
    require(
        total > 0.0 && total.is_finite(),
        "N",
        total,
        "must be positive",
    )?;
    require(
        activated > 0.0 && activated <= total,
        "Na",
        activated,
        "must be positive and at most N",
    )
}

/// Everything the optimum analysis yields for one total size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimaReport {
    pub g_opt: f64,
    pub s_opt: f64,
    /// Theoretical activation-ratio optimum at (g_opt, s_opt).
    pub theoretical: RatioReport,
    /// Efficiency-aware stopping point; absent when the walk never stalls.
    pub efficiency_aware: Option<EfficiencyAwareRatio>,
    pub threshold: f64,
    /// Structural bracket value at (g_opt, s_opt).
    pub bracket: f64,
}

pub fn optima_report(
    constants: &ScalingConstants,
    total: f64,
    threshold: f64,
) -> Result<OptimaReport, OptimError> {
    let g_opt = optimal_g(constants)?;
    let s_opt = optimal_s(constants)?.value;
    let theoretical = theoretical_ratio(constants, total, g_opt, s_opt)?;
    let efficiency_aware = match efficiency_aware_ratio(
        constants,
        total,
        g_opt,
        s_opt,
        threshold,
        DEFAULT_MAX_STEPS,
    ) {
        Ok(r) => Some(r),
        Err(OptimError::NoConvergence { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(OptimaReport {
        g_opt,
        s_opt,
        theoretical,
        efficiency_aware,
        threshold,
        bracket: constants.bracket(g_opt, s_opt),
    })
}

/// One point of the compute-optimal frontier at budget `C = D * Na`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub compute: f64,
    pub na_star: f64,
    pub d_star: f64,
    pub loss_star: f64,
}

/// A budget for which no interior stationary point exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierFailure {
    pub compute: f64,
    pub reason: String,
}

/// `offset + coeff * C^exponent` summary of the frontier. The offset is the
/// analytic floor `C0 = (A + a)/N^alpha + epsilon`; coefficient and exponent
/// are least-squares fitted to the computed points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawSummary {
    pub offset: f64,
    pub coeff: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierReport {
    pub total: f64,
    pub g: f64,
    pub s: f64,
    /// Analytic loss floor component `(A + a)/N^alpha + epsilon`.
    pub c0: f64,
    pub points: Vec<FrontierPoint>,
    pub failures: Vec<FrontierFailure>,
    /// Present when at least three points were computed.
    pub summary: Option<PowerLawSummary>,
}

/// Minimizes loss over the D/Na split of each compute budget in `budgets`
/// at fixed (N, G, S). Na* is root-found from the stationarity condition by
/// bracketed bisection on Na in (0, N]; the optimal loss uses the closed
/// form obtained by eliminating the D term at the stationary point.
pub fn compute_optimal_frontier(
    constants: &ScalingConstants,
    total: f64,
    g: f64,
    s: f64,
    budgets: &[f64],
) -> Result<FrontierReport, OptimError> {
    require(
        total > 0.0 && total.is_finite(),
        "N",
        total,
        "must be positive",
    )?;
    require(g >= 1.0 && g.is_finite(), "G", g, "must be >= 1")?;
    require((0.0..1.0).contains(&s), "S", s, "must lie in [0, 1)")?;
    let bracket = constants.bracket(g, s);
    if bracket <= 0.0 {
        return Err(OptimError::NonPositiveBracket(bracket));
    }
    let c0 = (bracket + constants.a) / total.powf(constants.alpha) + constants.epsilon;
    let weight = bracket * constants.k + constants.c;
    let slope = bracket * constants.h / total;
    let (alpha, beta, b) = (constants.alpha, constants.beta, constants.b);

    // dL/dNa for the loss with the D term rewritten through C.
    let dloss = |na: f64, compute: f64| {
        -alpha * weight * na.powf(-alpha - 1.0)
            + slope
            + b * beta * na.powf(beta - 1.0) / compute.powf(beta)
    };

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &compute in budgets {
        if !(compute > 0.0 && compute.is_finite()) {
            return Err(OptimError::InvalidInput {
                name: "C",
                value: compute,
                reason: "compute budget must be positive",
            });
        }
        match solve_stationary(total, compute, &dloss) {
            Some(na_star) => {
                // bisection to 1e-12 relative keeps the balance equation's
                // relative residual comfortably under 1e-10
                debug_assert!({
                    let lhs = b * beta * na_star.powf(beta - 1.0) / compute.powf(beta);
                    let rhs = alpha * weight * na_star.powf(-alpha - 1.0) - slope;
                    (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs())
                });
                let loss_star = c0
                    + weight * (alpha + beta) / beta * na_star.powf(-alpha)
                    + slope * (beta - 1.0) / beta * na_star;
                points.push(FrontierPoint {
                    compute,
                    na_star,
                    d_star: compute / na_star,
                    loss_star,
                });
            }
            None => failures.push(FrontierFailure {
                compute,
                reason: OptimError::NoRoot { compute }.to_string(),
            }),
        }
    }

    let summary = fit_power_summary(c0, &points);
    Ok(FrontierReport {
        total,
        g,
        s,
        c0,
        points,
        failures,
        summary,
    })
}

/// Finds the sign change of dL/dNa on (0, N] by geometric bracket expansion
/// from r = 1e-6, then bisects to 1e-12 relative width.
fn solve_stationary(total: f64, compute: f64, dloss: &dyn Fn(f64, f64) -> f64) -> Option<f64> {
    let mut lo_ratio = 1e-6;
    if dloss(lo_ratio * total, compute) >= 0.0 {
        return None; // stationary point below the bracket; treat as no root
    }
    let mut hi_ratio = lo_ratio;
    loop {
        let next = (hi_ratio * 2.0).min(1.0);
        if dloss(next * total, compute) >= 0.0 {
            hi_ratio = next;
            break;
        }
        lo_ratio = next;
        if next >= 1.0 {
            return None; // still descending at Na = N: budget too large for this N
        }
        hi_ratio = next;
    }
    let (mut lo, mut hi) = (lo_ratio * total, hi_ratio * total);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if dloss(mid, compute) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Least-squares fit of `coeff * C^exp` to `loss - c0` in linear space,
/// Gauss-Newton on (ln coeff, exp) initialized from a log-log regression.
fn fit_power_summary(c0: f64, points: &[FrontierPoint]) -> Option<PowerLawSummary> {
    if points.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.compute).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.loss_star - c0).collect();
    if ys.iter().any(|&y| y <= 0.0) {
        return None;
    }
    // log-log regression start
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let mut exponent = sxy / sxx;
    let mut ln_coeff = my - exponent * mx;

    let objective = |ln_c: f64, ex: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let r = (ln_c + ex * x.ln()).exp() - y;
                r * r
            })
            .sum()
    };
    let mut obj = objective(ln_coeff, exponent);
    let mut damping = 1e-8;
    for _ in 0..200 {
        // residuals and Jacobian wrt (ln coeff, exp)
        let (mut h11, mut h12, mut h22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let model = (ln_coeff + exponent * x.ln()).exp();
            let r = model - y;
            let (j1, j2) = (model, model * x.ln());
            h11 += j1 * j1;
            h12 += j1 * j2;
            h22 += j2 * j2;
            g1 += j1 * r;
            g2 += j2 * r;
        }
        let (a11, a22) = (h11 * (1.0 + damping), h22 * (1.0 + damping));
        let det = a11 * a22 - h12 * h12;
        if det.abs() < 1e-300 {
            break;
        }
        let d1 = (-g1 * a22 + g2 * h12) / det;
        let d2 = (-g2 * a11 + g1 * h12) / det;
        let trial = objective(ln_coeff + d1, exponent + d2);
        if trial < obj {
            ln_coeff += d1;
            exponent += d2;
            let improved = obj - trial;
            obj = trial;
            damping = (damping / 4.0).max(1e-12);
            if improved <= 1e-15 * obj.max(1e-300) {
                break;
            }
        } else {
            damping *= 10.0;
            if damping > 1e12 {
                break;
            }
        }
    }
    Some(PowerLawSummary {
        offset: c0,
        coeff: ln_coeff.exp(),
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table5() -> ScalingConstants {
        ScalingConstants::table5()
    }

    #[test]
    fn closed_form_g_optimum() {
        assert_abs_diff_eq!(optimal_g(&table5()).unwrap(), 6.778, epsilon = 0.005);
        let c = ScalingConstants {
            e: 2.0,
            f: 2.0,
            ..table5()
        };
        assert_eq!(optimal_g(&c).unwrap(), 1.0);
        let c = ScalingConstants {
            e: 1.0,
            f: 49.0,
            ..table5()
        };
        assert_eq!(optimal_g(&c).unwrap(), 7.0);
    }

    #[test]
    fn closed_form_s_optimum() {
        let s = optimal_s(&table5()).unwrap();
        assert_abs_diff_eq!(s.value, 0.3148, epsilon = 0.001);
        assert!(!s.clamped);
        let c = ScalingConstants { n: 0.0, ..table5() };
        assert_eq!(optimal_s(&c).unwrap().value, 0.0);
        let c = ScalingConstants {
            m: 5.0,
            n: -5.0,
            ..table5()
        };
        assert_eq!(optimal_s(&c).unwrap().value, 0.5);
        // positive n puts the vertex below zero: clamped and flagged
        let c = ScalingConstants { n: 1.0, ..table5() };
        let s = optimal_s(&c).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.clamped && s.raw < 0.0);
    }

    #[test]
    fn theoretical_ratio_reproduces_published_rows() {
        let c = table5();
        let g = optimal_g(&c).unwrap();
        let s = optimal_s(&c).unwrap().value;
        for (total, percent) in [(1e12, 20.40), (3e10, 40.04), (6.71e11, 22.02)] {
            let r = theoretical_ratio(&c, total, g, s).unwrap();
            assert_abs_diff_eq!(100.0 * r.ratio, percent, epsilon = 0.2);
            assert!(!r.extrapolated);
        }
    }

    #[test]
    fn small_models_extrapolate_past_dense() {
        let c = table5();
        let g = optimal_g(&c).unwrap();
        let s = optimal_s(&c).unwrap().value;
        let r = theoretical_ratio(&c, 1e7, g, s).unwrap();
        assert!(r.ratio > 1.0 && r.extrapolated);
    }

    #[test]
    fn efficiency_walk_reproduces_published_percentages() {
        let c = table5();
        let g = optimal_g(&c).unwrap();
        let s = optimal_s(&c).unwrap().value;
        let r = efficiency_aware_ratio(&c, 2.1e10, g, s, 0.001, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(r.percent, 22);
        assert_abs_diff_eq!(r.activated, 4.62e9, epsilon = 1e7);
        let r = efficiency_aware_ratio(&c, 2.1e10, g, s, 0.005, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(r.percent, 9);
    }

    #[test]
    fn huge_threshold_stops_at_the_second_grid_point() {
        let c = table5();
        let r = efficiency_aware_ratio(&c, 1e12, 7.0, 0.31, f64::MAX, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(r.percent, 2);
    }

    #[test]
    fn tiny_threshold_never_converges() {
        // At N = 1e8 the theoretical optimum sits past the dense limit, so
        // every grid step keeps gaining more than a tiny threshold and the
        // walk runs out of grid.
        let c = table5();
        let err = efficiency_aware_ratio(&c, 1e8, 7.0, 0.31, 1e-30, DEFAULT_MAX_STEPS).unwrap_err();
        assert!(matches!(err, OptimError::NoConvergence { .. }));
    }

    #[test]
    fn practical_g_range_matches_published_row() {
        let (lo, hi) = practical_range_g(&table5(), 2.1e10, 3.6e9, 0.001).unwrap();
        assert_abs_diff_eq!(lo, 5.08, epsilon = 0.05);
        assert_abs_diff_eq!(hi, 9.04, epsilon = 0.05);
        let (lo, hi) = practical_range_g(&table5(), 1e12, 3.2e10, 0.001).unwrap();
        assert_abs_diff_eq!(lo, 3.84, epsilon = 0.05);
        assert_abs_diff_eq!(hi, 11.96, epsilon = 0.05);
    }

    #[test]
    fn practical_s_range_matches_published_row() {
        let r = practical_range_s(&table5(), 2.1e10, 3.6e9, 0.001).unwrap();
        assert_abs_diff_eq!(r.lo, 0.183, epsilon = 0.005);
        assert_abs_diff_eq!(r.hi, 0.447, epsilon = 0.005);
        assert!(!r.clipped);
    }

    #[test]
    fn zero_threshold_collapses_ranges_to_the_optima() {
        let c = table5();
        let (lo, hi) = practical_range_g(&c, 1e10, 1e9, 0.0).unwrap();
        let g_opt = optimal_g(&c).unwrap();
        assert_abs_diff_eq!(lo, g_opt, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, g_opt, epsilon = 1e-9);
        let r = practical_range_s(&c, 1e10, 1e9, 0.0).unwrap();
        let s_opt = optimal_s(&c).unwrap().value;
        assert_eq!((r.lo, r.hi), (s_opt, s_opt));
    }

    #[test]
    fn range_endpoints_sit_at_the_threshold_gap() {
        let c = table5();
        let (total, activated, threshold) = (2.1e10, 3.6e9, 0.001);
        let (lo, hi) = practical_range_g(&c, total, activated, threshold).unwrap();
        let g_opt = optimal_g(&c).unwrap();
        let loss = |g: f64| {
            c.loss(&FactorPoint::new(total, 5e10, activated, g, 0.25).unwrap())
                .unwrap()
        };
        assert_abs_diff_eq!(loss(lo) - loss(g_opt), threshold, epsilon = 1e-9);
        assert_abs_diff_eq!(loss(hi) - loss(g_opt), threshold, epsilon = 1e-9);
        let range = practical_range_s(&c, total, activated, threshold).unwrap();
        let s_opt = optimal_s(&c).unwrap().value;
        let loss = |s: f64| {
            c.loss(&FactorPoint::new(total, 5e10, activated, 8.0, s).unwrap())
                .unwrap()
        };
        assert_abs_diff_eq!(loss(range.lo) - loss(s_opt), threshold, epsilon = 1e-9);
        assert_abs_diff_eq!(loss(range.hi) - loss(s_opt), threshold, epsilon = 1e-9);
    }

    #[test]
    fn efficiency_walk_is_data_independent() {
        // The per-step loss gain is identical for any two data sizes.
        let c = table5();
        let (total, g, s) = (3e10, 6.778, 0.3148);
        for d in [1e9, 1e12] {
            let gain = |idx: u32| {
                let at = |i: u32| {
                    c.loss(&FactorPoint::new(total, d, 0.01 * total * f64::from(i), g, s).unwrap())
                        .unwrap()
                };
                at(idx) - at(idx + 1)
            };
            let reference = {
                let at = |i: u32| {
                    c.loss(
                        &FactorPoint::new(total, DEFAULT_TOKENS, 0.01 * total * f64::from(i), g, s)
                            .unwrap(),
                    )
                    .unwrap()
                };
                at(5) - at(6)
            };
            assert!((gain(5) - reference).abs() < 1e-15);
        }
    }

    #[test]
    fn frontier_floor_matches_scalar_arithmetic() {
        let report = compute_optimal_frontier(&table5(), 1e12, 7.0, 0.31, &[1e21]).unwrap();
        assert_abs_diff_eq!(report.c0, 1.873, epsilon = 0.002);
    }

    #[test]
    fn frontier_points_satisfy_stationarity_and_minimality() {
        let c = table5();
        let budgets: Vec<f64> = (0..13).map(|i| 10f64.powf(20.0 + i as f64 / 3.0)).collect();
        let report = compute_optimal_frontier(&c, 1e12, 7.0, 0.31, &budgets).unwrap();
        assert_eq!(report.points.len(), budgets.len());
        for p in &report.points {
            // Stationarity residual, relative form of the balance equation.
            let bracket = c.bracket(7.0, 0.31);
            let lhs = c.b * c.beta * p.na_star.powf(c.beta - 1.0) / p.compute.powf(c.beta);
            let rhs = c.alpha * (bracket * c.k + c.c) * p.na_star.powf(-c.alpha - 1.0)
                - bracket * c.h / 1e12;
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()),
                "{lhs} vs {rhs}"
            );
            // Minimality along the D/Na split: the closed-form L* agrees with
            // a direct joint-law evaluation and beats +-1% perturbations.
            let direct = |na: f64| {
                c.loss(&FactorPoint::new(1e12, p.compute / na, na, 7.0, 0.31).unwrap())
                    .unwrap()
            };
            assert_abs_diff_eq!(direct(p.na_star), p.loss_star, epsilon = 1e-9);
            assert!(direct(p.na_star * 1.01) >= p.loss_star);
            assert!(direct(p.na_star * 0.99) >= p.loss_star);
        }
    }

    #[test]
    fn frontier_summary_recovers_a_planted_power_law() {
        // Feed synthetic points that are exactly offset + coeff*C^exp and
        // check the fitter returns them.
        let c0 = 1.9;
        let points: Vec<FrontierPoint> = (0..20)
            .map(|i| {
                let compute = 10f64.powf(20.0 + i as f64 * 0.2);
                FrontierPoint {
                    compute,
                    na_star: 1.0,
                    d_star: compute,
                    loss_star: c0 + 321.0 * compute.powf(-0.17),
                }
            })
            .collect();
        let s = fit_power_summary(c0, &points).unwrap();
        assert_abs_diff_eq!(s.coeff, 321.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.exponent, -0.17, epsilon = 1e-9);
    }

    #[test]
    fn oversized_budgets_are_flagged_not_fatal() {
        // At small N the theoretical ratio exceeds 1, so large budgets leave
        // the loss still descending at Na = N: no interior stationary point.
        let c = table5();
        let report = compute_optimal_frontier(&c, 1e8, 7.0, 0.31, &[1e15, 1e26]).unwrap();
        assert_eq!(report.points.len() + report.failures.len(), 2);
        assert!(!report.failures.is_empty());
    }

    #[test]
    fn negative_bracket_is_a_domain_error() {
        let c = ScalingConstants {
            n: -80.0,
            ..table5()
        };
        assert!(matches!(
            theoretical_ratio(&c, 1e10, 2.0, 0.9),
            Err(OptimError::NonPositiveBracket(_))
        ));
    }
}
