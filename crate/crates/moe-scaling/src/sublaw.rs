//! Marginal (sub-)law forms: every intermediate functional form the joint
//! law was assembled from, evaluable on its own.

use serde::{Deserialize, Serialize};

use crate::law::{FactorPoint, LawError, ScalingConstants};

/// Which marginal form a parameter set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubLawForm {
    /// `a/N^alpha + b/D^beta + epsilon`
    Nd,
    /// `c/Na^gamma + h*Na + iota` (h multiplies the raw activated count)
    NaOnly,
    /// `a/N^alpha + b/D^beta + c/Na^alpha + h*Na/N + epsilon`
    NdNa,
    /// `e*G + f/G + tau`
    GOnly,
    /// joint form without the shared-expert quadratic
    NdNaG,
    /// `m*S^2 + n*S + psi`
    SOnly,
    /// the full five-factor law
    Joint,
}

impl SubLawForm {
    pub fn name(&self) -> &'static str {
        match self {
            SubLawForm::Nd => "nd",
            SubLawForm::NaOnly => "na-only",
            SubLawForm::NdNa => "nd-na",
            SubLawForm::GOnly => "g-only",
            SubLawForm::NdNaG => "nd-na-g",
            SubLawForm::SOnly => "s-only",
            SubLawForm::Joint => "joint",
        }
    }
}

/// Coefficients of one marginal law.
///
/// The intermediate symbols that never made it into [`ScalingConstants`]
/// (gamma, iota, tau, psi) live here. The `NaOnly` form keeps its own
/// exponent `gamma`; only the joint law hard-shares `alpha` between N and Na.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubLawParams {
    Nd {
        a: f64,
        alpha: f64,
        b: f64,
        beta: f64,
        epsilon: f64,
    },
    NaOnly {
        c: f64,
        gamma: f64,
        h: f64,
        iota: f64,
    },
    NdNa {
        a: f64,
        alpha: f64,
        b: f64,
        beta: f64,
        c: f64,
        h: f64,
        epsilon: f64,
    },
    GOnly {
        e: f64,
        f: f64,
        tau: f64,
    },
    NdNaG {
        e: f64,
        f: f64,
        k: f64,
        h: f64,
        a: f64,
        alpha: f64,
        b: f64,
        beta: f64,
        c: f64,
        epsilon: f64,
    },
    SOnly {
        m: f64,
        n: f64,
        psi: f64,
    },
    Joint(ScalingConstants),
}

impl SubLawParams {
    pub fn form(&self) -> SubLawForm {
        match self {
            SubLawParams::Nd { .. } => SubLawForm::Nd,
            SubLawParams::NaOnly { .. } => SubLawForm::NaOnly,
            SubLawParams::NdNa { .. } => SubLawForm::NdNa,
            SubLawParams::GOnly { .. } => SubLawForm::GOnly,
            SubLawParams::NdNaG { .. } => SubLawForm::NdNaG,
            SubLawParams::SOnly { .. } => SubLawForm::SOnly,
            SubLawParams::Joint(_) => SubLawForm::Joint,
        }
    }

    /// Checks sign invariants: power-law weights and exponents strictly
    /// positive. Constant offsets (iota, tau, psi) and the S-linear `n` are
    /// unconstrained in sign.
    pub fn validate(&self) -> Result<(), LawError> {
        let positive = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(LawError::InvalidConstant { name, value })
            }
        };
        let finite = |name: &'static str, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(LawError::InvalidConstant { name, value })
            }
        };
        match *self {
            SubLawParams::Nd {
                a,
                alpha,
                b,
                beta,
                epsilon,
            } => {
                positive("a", a)?;
                positive("alpha", alpha)?;
                positive("b", b)?;
                positive("beta", beta)?;
                positive("epsilon", epsilon)
            }
            SubLawParams::NaOnly { c, gamma, h, iota } => {
                positive("c", c)?;
                positive("gamma", gamma)?;
                positive("h", h)?;
                finite("iota", iota)
            }
            SubLawParams::NdNa {
                a,
                alpha,
                b,
                beta,
                c,
                h,
                epsilon,
            } => {
                positive("a", a)?;
                positive("alpha", alpha)?;
                positive("b", b)?;
                positive("beta", beta)?;
                positive("c", c)?;
                positive("h", h)?;
                positive("epsilon", epsilon)
            }
            SubLawParams::GOnly { e, f, tau } => {
                positive("e", e)?;
                positive("f", f)?;
                finite("tau", tau)
            }
            SubLawParams::NdNaG {
                e,
                f,
                k,
                h,
                a,
                alpha,
                b,
                beta,
                c,
                epsilon,
            } => {
                positive("e", e)?;
                positive("f", f)?;
                positive("k", k)?;
                positive("h", h)?;
                positive("a", a)?;
                positive("alpha", alpha)?;
                positive("b", b)?;
                positive("beta", beta)?;
                positive("c", c)?;
                positive("epsilon", epsilon)
            }
            SubLawParams::SOnly { m, n, psi } => {
                positive("m", m)?;
                finite("n", n)?;
                finite("psi", psi)
            }
            SubLawParams::Joint(constants) => constants.validate(),
        }
    }

    /// Evaluates the declared marginal form at a point. Factors the form does
    /// not reference are ignored.
    pub fn eval(&self, point: &FactorPoint) -> Result<f64, LawError> {
        point.validate()?;
        Ok(match *self {
            SubLawParams::Nd {
                a,
                alpha,
                b,
                beta,
                epsilon,
            } => a * point.n.powf(-alpha) + b * point.d.powf(-beta) + epsilon,
            SubLawParams::NaOnly { c, gamma, h, iota } => {
                c * point.na.powf(-gamma) + h * point.na + iota
            }
            SubLawParams::NdNa {
                a,
                alpha,
                b,
                beta,
                c,
                h,
                epsilon,
            } => {
                a * point.n.powf(-alpha)
                    + b * point.d.powf(-beta)
                    + c * point.na.powf(-alpha)
                    + h * point.na / point.n
                    + epsilon
            }
            SubLawParams::GOnly { e, f, tau } => e * point.g + f / point.g + tau,
            SubLawParams::NdNaG {
                e,
                f,
                k,
                h,
                a,
                alpha,
                b,
                beta,
                c,
                epsilon,
            } => {
                let bracket = e * point.g + f / point.g;
                let size =
                    point.n.powf(-alpha) + k * point.na.powf(-alpha) + h * point.na / point.n;
                bracket * size
                    + a * point.n.powf(-alpha)
                    + b * point.d.powf(-beta)
                    + c * point.na.powf(-alpha)
                    + epsilon
            }
            SubLawParams::SOnly { m, n, psi } => m * point.s * point.s + n * point.s + psi,
            SubLawParams::Joint(constants) => constants.loss_unchecked(point),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dummy_point(n: f64, d: f64, na: f64, g: f64, s: f64) -> FactorPoint {
        FactorPoint::new(n, d, na, g, s).unwrap()
    }

    #[test]
    fn nd_form_matches_scalar_oracle() {
        // 0.27268803 + 0.39639766 + 1.8182 = 2.48728569448, frozen from an
        // independent high-precision evaluation.
        let params = SubLawParams::Nd {
            a: 38.0510,
            alpha: 0.2383,
            b: 27129.0488,
            beta: 0.4694,
            epsilon: 1.8182,
        };
        let v = params.eval(&dummy_point(1e9, 2e10, 1e8, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v, 2.4874, epsilon = 1e-3);
        assert_abs_diff_eq!(v, 2.48728569448, epsilon = 1e-9);
    }

    #[test]
    fn g_only_at_unit_granularity() {
        let params = SubLawParams::GOnly {
            e: 0.1577,
            f: 7.2446,
            tau: 0.0,
        };
        let v = params.eval(&dummy_point(1e9, 1e10, 1e8, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v, 7.4023, epsilon = 1e-4);
    }

    #[test]
    fn s_only_quadratic_vanishes_at_zero() {
        let params = SubLawParams::SOnly {
            m: 5.1395,
            n: -3.2363,
            psi: 2.5,
        };
        let v = params.eval(&dummy_point(1e9, 1e10, 1e8, 2.0, 0.0)).unwrap();
        assert_eq!(v, 2.5);
    }

    #[test]
    fn joint_variant_agrees_with_the_constants_method() {
        let c = ScalingConstants::table5();
        let p = dummy_point(1e9, 2e10, 2e8, 6.78, 0.3148);
        assert_eq!(
            SubLawParams::Joint(c).eval(&p).unwrap(),
            c.loss(&p).unwrap()
        );
    }

    #[test]
    fn nd_na_uses_the_shared_exponent() {
        let params = SubLawParams::NdNa {
            a: 2.0,
            alpha: 0.5,
            b: 1.0,
            beta: 1.0,
            c: 4.0,
            h: 0.5,
            epsilon: 1.0,
        };
        // 2/sqrt(1e4) + 1/1e2 + 4/sqrt(2.5e3) + 0.5*0.25 + 1
        let v = params
            .eval(&dummy_point(1e4, 1e2, 2.5e3, 1.0, 0.0))
            .unwrap();
        assert_abs_diff_eq!(v, 0.02 + 0.01 + 0.08 + 0.125 + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn validation_rejects_nonpositive_weights() {
        let params = SubLawParams::Nd {
            a: -1.0,
            alpha: 0.5,
            b: 1.0,
            beta: 0.5,
            epsilon: 1.0,
        };
        assert!(params.validate().is_err());
        // tau = 0 is a legal offset
        assert!(SubLawParams::GOnly {
            e: 1.0,
            f: 1.0,
            tau: 0.0
        }
        .validate()
        .is_ok());
    }
}
