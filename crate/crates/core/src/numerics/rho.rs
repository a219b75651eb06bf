use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoFamily {
    TukeyBisquare,
}

/// How a distance is fed to the loss.
///
/// `SquaredDistance` treats the loss as a function of `s = d²`, i.e.
/// `L(s) = ρ_c(√s)`, and its derivative `L'(s)` is the weight in the location
/// estimating equation `E ψ(d²)(X − m) = 0`. `ScaledDistance` applies `ρ_c` to
/// `d / s₀` with `s₀ = 1`. Both truncate at `d = c`, so a calibrated `c` is the
/// same number under either convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgConvention {
    SquaredDistance,
    ScaledDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoValue {
    pub rho: f64,
    pub psi: f64,
    pub psi_prime: f64,
}

/// Bounded redescending loss `ρ_c(t) = min(3t²/c² − 3t⁴/c⁴ + t⁶/c⁶, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSpec {
    pub family: RhoFamily,
    pub c: f64,
    pub convention: ArgConvention,
}

impl RhoSpec {
    pub fn tukey(c: f64, convention: ArgConvention) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!("truncation constant must be positive, got {c}")));
        }
        Ok(RhoSpec { family: RhoFamily::TukeyBisquare, c, convention })
    }

    /// Loss with `c² = c2` on the squared-distance scale.
    pub fn tukey_c2(c2: f64) -> Result<Self> {
        Self::tukey(c2.sqrt(), ArgConvention::SquaredDistance)
    }

    pub fn eval(&self, t: f64) -> RhoValue {
        RhoValue { rho: self.rho(t), psi: self.psi(t), psi_prime: self.psi_prime(t) }
    }

    pub fn rho(&self, t: f64) -> f64 {
        let x = (t / self.c).powi(2);
        if x >= 1.0 {
            1.0
        } else {
            x * (3.0 - 3.0 * x + x * x)
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        let c2 = self.c * self.c;
        let x = t * t / c2;
        if x >= 1.0 {
            0.0
        } else {
            6.0 * t / c2 * (1.0 - x).powi(2)
        }
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        let c2 = self.c * self.c;
        let x = t * t / c2;
        if x >= 1.0 {
            0.0
        } else {
            6.0 / c2 * (1.0 - x) * (1.0 - 5.0 * x)
        }
    }

    /// `u(t) = ψ(t)/t`, continuously extended by `ψ'(0)` at zero.
    pub fn weight(&self, t: f64) -> f64 {
        let c2 = self.c * self.c;
        let x = t * t / c2;
        if x >= 1.0 {
            0.0
        } else {
            6.0 / c2 * (1.0 - x).powi(2)
        }
    }

    /// `ψ'(0) = sup u`.
    pub fn kappa(&self) -> f64 {
        6.0 / (self.c * self.c)
    }

    /// The loss as a function of the squared distance `s`, with its first two
    /// derivatives in `s`.
    pub fn eval_sq(&self, s: f64) -> RhoValue {
        let c2 = self.c * self.c;
        let x = s / c2;
        if x >= 1.0 {
            RhoValue { rho: 1.0, psi: 0.0, psi_prime: 0.0 }
        } else {
            RhoValue {
                rho: x * (3.0 - 3.0 * x + x * x),
                psi: 3.0 / c2 * (1.0 - x).powi(2),
                psi_prime: -6.0 / (c2 * c2) * (1.0 - x),
            }
        }
    }

    /// Estimating-equation weight `ψ(d²)` for a squared distance.
    #[inline]
    pub fn psi_sq(&self, s: f64) -> f64 {
        let x = s / (self.c * self.c);
        if x >= 1.0 {
            0.0
        } else {
            3.0 / (self.c * self.c) * (1.0 - x) * (1.0 - x)
        }
    }

    /// Loss of a squared distance under this loss's argument convention.
    pub fn loss_of_sq(&self, s: f64) -> f64 {
        match self.convention {
            ArgConvention::SquaredDistance => self.eval_sq(s).rho,
            ArgConvention::ScaledDistance => self.rho(s.max(0.0).sqrt()),
        }
    }

    /// Smallest `t ≥ 0` with `ρ(t) = level`, for `level` in `[0, 1]`.
    pub fn rho_inverse(&self, level: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::invalid(format!("rho level {level} outside [0, 1]")));
        }
        // ρ is increasing on [0, c]
        let (mut lo, mut hi) = (0.0, self.c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.rho(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * self.c {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
