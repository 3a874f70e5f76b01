//! Convex machinery for the interface potential `j(r) = |r - θ_c|`.
//!
//! `j` is the potential of the translated Heaviside graph `H`, its conjugate is
//! `j*(w) = w θ_c + I_[-1,1](w)`, and the Fenchel-Young gap
//! `j(r) + w θ_c - w r` vanishes exactly on the graph of `H`. The
//! Moreau-Yosida envelope `j_σ` is the Huber function centred at `θ_c`.
//!
//! The heat-flux nonlinearity `β(r) = r - 1/r` lives here too: it is a smooth
//! increasing bijection `(0, ∞) → ℝ`, and [`beta_inverse`] is what the state
//! solver uses to keep the temperature positive.

use crate::error::{Error, Result};

/// Holds the transition temperature `θ_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexContext {
    theta_c: f64,
}

impl ConvexContext {
    pub fn new(theta_c: f64) -> Result<Self> {
        if !(theta_c > 0.0 && theta_c.is_finite()) {
            return Err(Error::Domain {
                what: "transition temperature",
                value: theta_c,
            });
        }
        Ok(Self { theta_c })
    }

    pub fn theta_c(&self) -> f64 {
        self.theta_c
    }

    /// Set value of the Heaviside graph at `r`.
    pub fn heaviside(&self, r: f64) -> Interval {
        if r > self.theta_c {
            Interval::point(1.0)
        } else if r < self.theta_c {
            Interval::point(-1.0)
        } else {
            Interval { lo: -1.0, hi: 1.0 }
        }
    }

    pub fn j(&self, r: f64) -> f64 {
        (r - self.theta_c).abs()
    }

    /// Convex conjugate of `j`. Outside `[-1, 1]` the conjugate is `+∞`, returned
    /// as `f64::INFINITY` (never clipped to a finite value).
    pub fn j_star(&self, w: f64) -> f64 {
        if w.abs() <= 1.0 {
            w * self.theta_c
        } else {
            f64::INFINITY
        }
    }

    /// `j(r) + j*(w) - r w` for `|w| <= 1`.
    pub fn fenchel_gap(&self, r: f64, w: f64) -> Result<f64> {
        if !(w.abs() <= 1.0) {
            return Err(Error::Domain {
                what: "fenchel gap multiplier",
                value: w,
            });
        }
        Ok(self.fenchel_gap_unchecked(r, w))
    }

    #[inline]
    pub(crate) fn fenchel_gap_unchecked(&self, r: f64, w: f64) -> f64 {
        self.j(r) + w * self.theta_c - w * r
    }

    /// Proximal map `(I + σH)^{-1} r`: shrinks `r` toward `θ_c` by `σ`.
    pub fn resolvent(&self, r: f64, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        let d = r - self.theta_c;
        Ok(if d > sigma {
            r - sigma
        } else if d < -sigma {
            r + sigma
        } else {
            self.theta_c
        })
    }

    /// Moreau-Yosida envelope `j_σ(r) = inf_s { |r-s|²/(2σ) + j(s) }`.
    pub fn moreau_j(&self, r: f64, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        Ok(self.moreau_j_unchecked(r, sigma))
    }

    #[inline]
    pub(crate) fn moreau_j_unchecked(&self, r: f64, sigma: f64) -> f64 {
        let d = (r - self.theta_c).abs();
        if d <= sigma {
            d * d / (2.0 * sigma)
        } else {
            d - 0.5 * sigma
        }
    }

    /// Derivative of the envelope, `clamp((r - θ_c)/σ, -1, 1)`.
    pub fn moreau_jprime(&self, r: f64, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        Ok(self.moreau_jprime_unchecked(r, sigma))
    }

    #[inline]
    pub(crate) fn moreau_jprime_unchecked(&self, r: f64, sigma: f64) -> f64 {
        ((r - self.theta_c) / sigma).clamp(-1.0, 1.0)
    }

    /// Pointwise selection from `H(r)`, returning `at_kink` when `r = θ_c`.
    pub fn select(&self, r: f64, at_kink: f64) -> f64 {
        if r > self.theta_c {
            1.0
        } else if r < self.theta_c {
            -1.0
        } else {
            at_kink
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Moreau-Yosida parameter",
            value: sigma,
        })
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidParameter(format!(
                "interval bounds out of order: [{lo}, {hi}]"
            )))
        }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// `β(r) = r - 1/r`, defined for `r > 0`.
pub fn beta(r: f64) -> Result<f64> {
    check_positive("beta", r)?;
    Ok(beta_unchecked(r))
}

/// `β'(r) = 1 + 1/r²`, defined for `r > 0`.
pub fn beta_prime(r: f64) -> Result<f64> {
    check_positive("beta_prime", r)?;
    Ok(beta_prime_unchecked(r))
}

/// Positive root of `r² - w r - 1 = 0`.
pub fn beta_inverse(w: f64) -> f64 {
    // For large negative w the textbook root cancels; use the conjugate form.
    let s = (w * w + 4.0).sqrt();
    if w >= 0.0 {
        0.5 * (w + s)
    } else {
        2.0 / (s - w)
    }
}

/// Derivative of `β⁻¹` at `w`, equal to `1/β'(β⁻¹(w))`.
pub fn beta_inverse_prime(w: f64) -> f64 {
    let r = beta_inverse(w);
    let r2 = r * r;
    r2 / (r2 + 1.0)
}

#[inline]
pub(crate) fn beta_unchecked(r: f64) -> f64 {
    r - 1.0 / r
}

#[inline]
pub(crate) fn beta_prime_unchecked(r: f64) -> f64 {
    1.0 + 1.0 / (r * r)
}

fn check_positive(what: &'static str, r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value: r })
    }
}
