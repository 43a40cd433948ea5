//! Baseline MoE scaling laws used for comparison fitting: the fine-grained
//! granularity law and the sparsity law. Both are evaluated exactly as
//! published; note their factor conventions differ from the joint law's
//! (the fine-grained law's size input is the *active* parameter count, and
//! the sparsity law's sparsity factor is the fraction of inactive experts,
//! not this crate's shared-expert ratio).
//!
//! Evaluation validates inputs, not coefficients: zero weights are legal
//! here (degenerate forms are useful oracles) and positivity is imposed by
//! the fitter's bounds instead.

use serde::{Deserialize, Serialize};

use crate::law::{FactorPoint, LawError};

/// Identifies one of the two comparison laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineId {
    FineGrainedGranularity,
    SparsityFlops,
}

impl BaselineId {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineId::FineGrainedGranularity => "fine-grained-granularity",
            BaselineId::SparsityFlops => "sparsity-flops",
        }
    }
}

/// `L(N, D, G) = c + (g/G^gamma + a)/N^alpha + b/D^beta` with N the number
/// of active parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineGrainedParams {
    pub c: f64,
    pub g: f64,
    pub gamma: f64,
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub beta: f64,
}

impl FineGrainedParams {
    pub fn eval(&self, active_params: f64, tokens: f64, granularity: f64) -> Result<f64, LawError> {
        if !(active_params > 0.0 && active_params.is_finite()) {
            return Err(LawError::InvalidFactor {
                name: "N",
                value: active_params,
                reason: "active parameter count must be positive",
            });
        }
        if !(tokens > 0.0 && tokens.is_finite()) {
            return Err(LawError::InvalidFactor {
                name: "D",
                value: tokens,
                reason: "data size must be positive",
            });
        }
        if !(granularity >= 1.0 && granularity.is_finite()) {
            return Err(LawError::InvalidFactor {
                name: "G",
                value: granularity,
                reason: "granularity must be >= 1",
            });
        }
        Ok(self.c
            + (self.g * granularity.powf(-self.gamma) + self.a) * active_params.powf(-self.alpha)
            + self.b * tokens.powf(-self.beta))
    }
}

/// `L(N, D, S) = a/N^alpha + b/D^beta + c/(1-S)^lambda +
/// d/((1-S)^delta * N^gamma) + e` with N the total parameter count and S the
/// fraction of inactive experts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityParams {
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub beta: f64,
    pub c: f64,
    pub lambda: f64,
    pub d: f64,
    pub delta: f64,
    pub gamma: f64,
    pub e_offset: f64,
}

impl SparsityParams {
    pub fn eval(&self, total_params: f64, tokens: f64, sparsity: f64) -> Result<f64, LawError> {
        if !(total_params > 0.0 && total_params.is_finite()) {
            return Err(LawError::InvalidFactor {
                name: "N",
                value: total_params,
                reason: "total parameter count must be positive",
            });
        }
        if !(tokens > 0.0 && tokens.is_finite()) {
            return Err(LawError::InvalidFactor {
                name: "D",
                value: tokens,
                reason: "data size must be positive",
            });
        }
        if !(0.0..1.0).contains(&sparsity) {
            return Err(LawError::InvalidFactor {
                name: "S",
                value: sparsity,
                reason: "sparsity must lie in [0, 1)",
            });
        }
        let dense = 1.0 - sparsity;
        Ok(self.a * total_params.powf(-self.alpha)
            + self.b * tokens.powf(-self.beta)
            + self.c * dense.powf(-self.lambda)
            + self.d * dense.powf(-self.delta) * total_params.powf(-self.gamma)
            + self.e_offset)
    }
}

/// Parameters for either baseline law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineParams {
    FineGrained(FineGrainedParams),
    Sparsity(SparsityParams),
}

impl BaselineParams {
    pub fn id(&self) -> BaselineId {
        match self {
            BaselineParams::FineGrained(_) => BaselineId::FineGrainedGranularity,
            BaselineParams::Sparsity(_) => BaselineId::SparsityFlops,
        }
    }

    /// Evaluates the baseline on a joint-law factor point, translating
    /// conventions: the fine-grained law reads the activated size as its N,
    /// the sparsity law reads `1 - Na/N` as its sparsity.
    pub fn eval_point(&self, point: &FactorPoint) -> Result<f64, LawError> {
        point.validate()?;
        match self {
            BaselineParams::FineGrained(p) => p.eval(point.na, point.d, point.g),
            BaselineParams::Sparsity(p) => p.eval(point.n, point.d, 1.0 - point.na / point.n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fine_grained_reduces_to_a_power_law() {
        let p = FineGrainedParams {
            c: 2.0,
            g: 0.0,
            gamma: 1.0,
            a: 1.0,
            alpha: 0.5,
            b: 0.0,
            beta: 1.0,
        };
        // c + 1/sqrt(1e6)
        let v = p.eval(1e6, 1e12, 1.0).unwrap();
        assert_abs_diff_eq!(v, 2.001, epsilon = 1e-12);
    }

    #[test]
    fn sparsity_constant_law() {
        let p = SparsityParams {
            a: 0.0,
            alpha: 1.0,
            b: 0.0,
            beta: 1.0,
            c: 0.0,
            lambda: 1.0,
            d: 0.0,
            delta: 1.0,
            gamma: 1.0,
            e_offset: 3.0,
        };
        assert_eq!(p.eval(1e9, 1e10, 0.5).unwrap(), 3.0);
    }

    #[test]
    fn sparsity_penalty_term() {
        let p = SparsityParams {
            a: 0.0,
            alpha: 1.0,
            b: 0.0,
            beta: 1.0,
            c: 1.0,
            lambda: 1.0,
            d: 0.0,
            delta: 1.0,
            gamma: 1.0,
            e_offset: 0.0,
        };
        // 1/(1 - 0.5) = 2
        assert_abs_diff_eq!(p.eval(1e9, 1e10, 0.5).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sparsity_rejects_out_of_range_input() {
        let p = SparsityParams {
            a: 1.0,
            alpha: 0.5,
            b: 1.0,
            beta: 0.5,
            c: 1.0,
            lambda: 1.0,
            d: 1.0,
            delta: 1.0,
            gamma: 0.5,
            e_offset: 1.0,
        };
        assert!(p.eval(1e9, 1e10, 1.0).is_err());
        assert!(p.eval(1e9, 1e10, -0.1).is_err());
        assert!(p.eval(-1e9, 1e10, 0.5).is_err());
    }

    #[test]
    fn point_adapter_translates_conventions() {
        let point = FactorPoint::new(1e9, 1e10, 25e7, 4.0, 0.25).unwrap();
        let fine = BaselineParams::FineGrained(FineGrainedParams {
            c: 1.0,
            g: 2.0,
            gamma: 1.0,
            a: 3.0,
            alpha: 0.5,
            b: 4.0,
            beta: 0.5,
        });
        let direct = match fine {
            BaselineParams::FineGrained(p) => p.eval(25e7, 1e10, 4.0).unwrap(),
            _ => unreachable!(),
        };
        assert_eq!(fine.eval_point(&point).unwrap(), direct);

        let sparse = BaselineParams::Sparsity(SparsityParams {
            a: 1.0,
            alpha: 0.5,
            b: 1.0,
            beta: 0.5,
            c: 1.0,
            lambda: 2.0,
            d: 1.0,
            delta: 1.0,
            gamma: 0.5,
            e_offset: 1.0,
        });
        let direct = match sparse {
            BaselineParams::Sparsity(p) => p.eval(1e9, 1e10, 0.75).unwrap(),
            _ => unreachable!(),
        };
        assert_eq!(sparse.eval_point(&point).unwrap(), direct);
    }
}
