//! Damped Gauss-Newton (Levenberg-Marquardt style) least squares with
//! box bounds, per-parameter log transforms, Huber IRLS weighting and
//! deterministic nested multi-start.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{FitRecord, FitTarget, ParamSpec};
use super::FitObjective;

/// A fitting problem with bounds resolved and dead parameters frozen.
pub(crate) struct Problem<'a> {
    pub target: FitTarget,
    pub specs: Vec<ParamSpec>,
    /// Raw value for frozen parameters, None for free ones.
    pub frozen: Vec<Option<f64>>,
    pub records: &'a [FitRecord],
    pub objective: FitObjective,
    pub max_iterations: usize,
    pub tolerance: f64,
}

pub(crate) struct SingleOutcome {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
}

pub(crate) struct MultiOutcome {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub winner_start: usize,
}

impl Problem<'_> {
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.specs.len())
            .filter(|&j| self.frozen[j].is_none())
            .collect()
    }

    fn to_z(&self, spec: &ParamSpec, raw: f64) -> f64 {
        if spec.log_scale {
            raw.ln()
        } else {
            raw
        }
    }

    fn raw_of(&self, spec: &ParamSpec, z: f64) -> f64 {
        if spec.log_scale {
            z.exp()
        } else {
            z
        }
    }

    /// Full raw parameter vector from the free coordinates.
    fn theta_from(&self, free: &[usize], z: &[f64]) -> Vec<f64> {
        let mut theta: Vec<f64> = self
            .frozen
            .iter()
            .zip(&self.specs)
            .map(|(f, s)| f.unwrap_or(s.default))
            .collect();
        for (slot, &j) in free.iter().enumerate() {
            theta[j] = self.raw_of(&self.specs[j], z[slot]);
        }
        theta
    }

    pub fn objective_at(&self, theta: &[f64]) -> f64 {
        self.records
            .iter()
            .map(|r| self.rho(self.target.predict(theta, r) - r.loss))
            .sum()
    }

    fn rho(&self, r: f64) -> f64 {
        match self.objective {
            FitObjective::SquaredError => 0.5 * r * r,
            FitObjective::Huber { delta } => {
                if r.abs() <= delta {
                    0.5 * r * r
                } else {
                    delta * (r.abs() - 0.5 * delta)
                }
            }
        }
    }

    fn irls_weight(&self, r: f64) -> f64 {
        match self.objective {
            FitObjective::SquaredError => 1.0,
            FitObjective::Huber { delta } => {
                if r.abs() <= delta {
                    1.0
                } else {
                    delta / r.abs()
                }
            }
        }
    }

    /// One damped Gauss-Newton run from `z0` (free coordinates, transformed
    /// space). Steps are clamped into the box after each update.
    fn solve_from(&self, free: &[usize], z0: &[f64]) -> SingleOutcome {
        let p = free.len();
        let (z_lo, z_hi): (Vec<f64>, Vec<f64>) = free
            .iter()
            .map(|&j| {
                let s = &self.specs[j];
                (self.to_z(s, s.lo), self.to_z(s, s.hi))
            })
            .unzip();
        let clamp = |z: &mut [f64]| {
            for j in 0..p {
                z[j] = z[j].clamp(z_lo[j], z_hi[j]);
            }
        };
        let mut z = z0.to_vec();
        clamp(&mut z);
        let mut theta = self.theta_from(free, &z);
        let mut obj = self.objective_at(&theta);
        if !obj.is_finite() {
            return SingleOutcome {
                theta,
                objective: f64::INFINITY,
                converged: false,
            };
        }

        let mut jac_row = vec![0.0; self.specs.len()];
        let mut lambda = 1e-3;
        let mut converged = false;
        for _ in 0..self.max_iterations {
            // normal equations in z-space with IRLS weights
            let mut hess = DMatrix::<f64>::zeros(p, p);
            let mut grad = DVector::<f64>::zeros(p);
            for r in self.records {
                let resid = self.target.predict(&theta, r) - r.loss;
                let w = self.irls_weight(resid);
                self.target.fill_jacobian(&theta, r, &mut jac_row);
                for (aj, &j) in free.iter().enumerate() {
                    // chain rule through the log transform
                    let dz = if self.specs[j].log_scale {
                        jac_row[j] * theta[j]
                    } else {
                        jac_row[j]
                    };
                    grad[aj] += w * resid * dz;
                    for (ak, &kidx) in free.iter().enumerate().take(aj + 1) {
                        let dzk = if self.specs[kidx].log_scale {
                            jac_row[kidx] * theta[kidx]
                        } else {
                            jac_row[kidx]
                        };
                        hess[(aj, ak)] += w * dz * dzk;
                    }
                }
            }
            for j in 0..p {
                for k in (j + 1)..p {
                    hess[(j, k)] = hess[(k, j)];
                }
            }
            if grad.amax() == 0.0 {
                converged = true;
                break;
            }

            // inner damping loop: grow lambda until a step improves
            let mut accepted = false;
            while lambda <= 1e14 {
                let mut damped = hess.clone();
                for j in 0..p {
                    damped[(j, j)] += lambda * hess[(j, j)].max(1e-12);
                }
                let Some(chol) = Cholesky::new(damped) else {
                    lambda *= 10.0;
                    continue;
                };
                let step = chol.solve(&(-&grad));
                let mut z_trial = z.clone();
                for j in 0..p {
                    z_trial[j] += step[j];
                }
                clamp(&mut z_trial);
                let theta_trial = self.theta_from(free, &z_trial);
                let obj_trial = self.objective_at(&theta_trial);
                if obj_trial.is_finite() && obj_trial < obj {
                    let gain = obj - obj_trial;
                    z = z_trial;
                    theta = theta_trial;
                    obj = obj_trial;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if gain <= self.tolerance * obj.max(1e-300) {
                        converged = true;
                    }
                    break;
                }
                lambda *= 10.0;
            }
            if !accepted {
                // damping exhausted without improvement: stationary
                converged = true;
                break;
            }
            if converged {
                break;
            }
        }
        SingleOutcome {
            theta,
            objective: obj,
            converged,
        }
    }

    /// Deterministic multi-start: slot 0 is the per-form default start (when
    /// requested), followed by any explicit extra starts, then log-uniform
    /// random starts. Random draws use one RNG stream per start slot, so the
    /// first k starts are identical regardless of the total count and adding
    /// starts can only improve the winner.
    pub fn multi_start(
        &self,
        starts: usize,
        seed: u64,
        include_default: bool,
        extra_inits: &[Vec<f64>],
    ) -> MultiOutcome {
        let free = self.free_indices();
        let mut plans: Vec<Vec<f64>> = Vec::with_capacity(starts);
        if include_default {
            plans.push(
                free.iter()
                    .map(|&j| self.to_z(&self.specs[j], self.specs[j].default))
                    .collect(),
            );
        }
        for init in extra_inits {
            if plans.len() >= starts {
                break;
            }
            plans.push(
                free.iter()
                    .map(|&j| self.to_z(&self.specs[j], init[j]))
                    .collect(),
            );
        }
        while plans.len() < starts {
            let slot = plans.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(slot as u64 + 1);
            plans.push(
                free.iter()
                    .map(|&j| {
                        let s = &self.specs[j];
                        rng.random_range(self.to_z(s, s.lo)..=self.to_z(s, s.hi))
                    })
                    .collect(),
            );
        }

        let mut best: Option<(SingleOutcome, usize)> = None;
        for (idx, z0) in plans.iter().enumerate() {
            let outcome = self.solve_from(&free, z0);
            let better = match &best {
                None => true,
                Some((b, _)) => outcome.objective < b.objective,
            };
            if better {
                best = Some((outcome, idx));
            }
        }
        let (outcome, winner_start) = best.expect("at least one start");
        MultiOutcome {
            theta: outcome.theta,
            objective: outcome.objective,
            converged: outcome.converged,
            winner_start,
        }
    }
}
