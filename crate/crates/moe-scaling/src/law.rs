//! The joint MoE scaling law and its building blocks.
//!
//! The law predicts validation loss from five factors: total model size `N`,
//! data size `D`, activated model size `Na`, number of activated experts `G`
//! and the shared-expert ratio `S`:
//!
//! ```text
//! L = (eG + f/G + mS^2 + nS) * (N^-a + k*Na^-a + h*Na/N)
//!     + a/N^a + b/D^b + c/Na^a + eps
//! ```
//!
//! `N` and `Na` are raw parameter counts and `D` raw token counts; only that
//! convention reproduces the published optimum tables from the published
//! constants. `G` is treated as a continuous real >= 1; integer rounding is a
//! presentation concern. All types here are immutable values and every
//! operation is pure.

use serde::{Deserialize, Serialize};

/// Domain errors for law evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LawError {
    #[error("invalid factor {name} = {value}: {reason}")]
    InvalidFactor {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid constant {name} = {value}: must be strictly positive and finite")]
    InvalidConstant { name: &'static str, value: f64 },
}

/// The twelve fitted hyperparameters of the joint law.
///
/// JSON form is a flat object with exactly these keys:
/// `e, f, m, n, k, h, a, alpha, b, beta, c, epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConstants {
    /// Linear coefficient of the activated-expert count G.
    pub e: f64,
    /// Inverse coefficient of G.
    pub f: f64,
    /// Quadratic coefficient of the shared-expert ratio S.
    pub m: f64,
    /// Linear coefficient of S; the only constant allowed to be negative.
    pub n: f64,
    /// Weight of the Na power term inside the structural bracket.
    pub k: f64,
    /// Weight of the Na/N activation-ratio term.
    pub h: f64,
    /// Weight of the N power term.
    pub a: f64,
    /// Shared exponent for N and Na.
    pub alpha: f64,
    /// Weight of the D power term.
    pub b: f64,
    /// Exponent of D.
    pub beta: f64,
    /// Weight of the Na power term outside the bracket.
    pub c: f64,
    /// Irreducible loss floor.
    pub epsilon: f64,
}

impl ScalingConstants {
    /// The published fitted values.
    pub fn table5() -> Self {
        Self {
            e: 0.1577,
            f: 7.2446,
            m: 5.1395,
            n: -3.2363,
            k: 0.0013,
            h: 0.0450,
            a: 38.0510,
            alpha: 0.2383,
            b: 27129.0488,
            beta: 0.4694,
            c: 31.0958,
            epsilon: 1.8182,
        }
    }

    /// Checks the sign invariants: everything strictly positive except `n`,
    /// which may be negative (and in practice is).
    pub fn validate(&self) -> Result<(), LawError> {
        let positive = [
            ("e", self.e),
            ("f", self.f),
            ("m", self.m),
            ("k", self.k),
            ("h", self.h),
            ("a", self.a),
            ("alpha", self.alpha),
            ("b", self.b),
            ("beta", self.beta),
            ("c", self.c),
            ("epsilon", self.epsilon),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(LawError::InvalidConstant { name, value });
            }
        }
        if !self.n.is_finite() {
            return Err(LawError::InvalidConstant {
                name: "n",
                value: self.n,
            });
        }
        Ok(())
    }

    /// The structural bracket `eG + f/G + mS^2 + nS`.
    pub fn bracket(&self, g: f64, s: f64) -> f64 {
        self.e * g + self.f / g + self.m * s * s + self.n * s
    }

    /// The size bracket `N^-alpha + k*Na^-alpha + h*Na/N` that scales the
    /// structural term.
    pub fn size_bracket(&self, n: f64, na: f64) -> f64 {
        n.powf(-self.alpha) + self.k * na.powf(-self.alpha) + self.h * na / n
    }

    /// Predicted loss at a factor point, in the same (nats) scale the
    /// constants were fitted in.
    pub fn loss(&self, point: &FactorPoint) -> Result<f64, LawError> {
        point.validate()?;
        Ok(self.loss_unchecked(point))
    }

    pub(crate) fn loss_unchecked(&self, point: &FactorPoint) -> f64 {
        let bracket = self.bracket(point.g, point.s);
        let size = self.size_bracket(point.n, point.na);
        let loss = bracket * size
            + self.a * point.n.powf(-self.alpha)
            + self.b * point.d.powf(-self.beta)
            + self.c * point.na.powf(-self.alpha)
            + self.epsilon;
        // With a non-negative bracket every other term is non-negative, so
        // the irreducible floor is a hard lower bound.
        debug_assert!(bracket < 0.0 || loss >= self.epsilon);
        loss
    }

    /// Partial derivatives of the loss with respect to each factor.
    pub fn gradient(&self, point: &FactorPoint) -> Result<FactorGradient, LawError> {
        point.validate()?;
        let FactorPoint { n, d, na, g, s } = *point;
        let bracket = self.bracket(g, s);
        let size = self.size_bracket(n, na);
        let pow_n = n.powf(-self.alpha - 1.0);
        let pow_na = na.powf(-self.alpha - 1.0);
        Ok(FactorGradient {
            n: bracket * (-self.alpha * pow_n - self.h * na / (n * n))
                - self.alpha * self.a * pow_n,
            d: -self.beta * self.b * d.powf(-self.beta - 1.0),
            na: bracket * (-self.alpha * self.k * pow_na + self.h / n)
                - self.alpha * self.c * pow_na,
            g: (self.e - self.f / (g * g)) * size,
            s: (2.0 * self.m * s + self.n) * size,
        })
    }
}

impl Default for ScalingConstants {
    fn default() -> Self {
        Self::table5()
    }
}

/// One abstract configuration at which loss is predicted.
///
/// Invariants: `N > 0`, `D > 0`, `0 < Na <= N`, `G >= 1`, `0 <= S < 1`,
/// everything finite. `new` enforces them; the fields stay public for
/// ergonomic reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorPoint {
    /// Total model size, raw parameter count.
    #[serde(rename = "N")]
    pub n: f64,
    /// Data size, raw token count.
    #[serde(rename = "D")]
    pub d: f64,
    /// Activated model size, raw parameter count.
    #[serde(rename = "Na")]
    pub na: f64,
    /// Number of activated experts, continuous.
    #[serde(rename = "G")]
    pub g: f64,
    /// Shared-expert ratio.
    #[serde(rename = "S")]
    pub s: f64,
}

impl FactorPoint {
    pub fn new(n: f64, d: f64, na: f64, g: f64, s: f64) -> Result<Self, LawError> {
        let point = Self { n, d, na, g, s };
        point.validate()?;
        Ok(point)
    }

    pub fn validate(&self) -> Result<(), LawError> {
        let err = |name, value, reason| {
            Err(LawError::InvalidFactor {
                name,
                value,
                reason,
            })
        };
        if !(self.n > 0.0 && self.n.is_finite()) {
            return err("N", self.n, "total model size must be positive");
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return err("D", self.d, "data size must be positive");
        }
        if !(self.na > 0.0 && self.na.is_finite()) {
            return err("Na", self.na, "activated model size must be positive");
        }
        if self.na > self.n {
            return err("Na", self.na, "activated size cannot exceed total size");
        }
        if !(self.g >= 1.0 && self.g.is_finite()) {
            return err("G", self.g, "activated expert count must be >= 1");
        }
        if !(0.0..1.0).contains(&self.s) {
            return err("S", self.s, "shared-expert ratio must lie in [0, 1)");
        }
        Ok(())
    }

    /// Activation ratio `Na / N`.
    pub fn activation_ratio(&self) -> f64 {
        self.na / self.n
    }
}

/// Loss partials with respect to (N, D, Na, G, S).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorGradient {
    pub n: f64,
    pub d: f64,
    pub na: f64,
    pub g: f64,
    pub s: f64,
}
