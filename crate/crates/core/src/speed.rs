//! Wave speed and the constants derived from it.
//!
//! For an admissible speed `c >= 2` the roots of `λ² - cλ + 1 = 0`,
//!
//! ```text
//! λ∓ = (c ∓ sqrt(c² - 4)) / 2,
//! ```
//!
//! control the quadratic behavior of solutions of the transformed equation
//! near `r = 0` and hence the exponential right tails of the waves. They
//! satisfy `λ⁻ λ⁺ = 1`, `λ⁻ + λ⁺ = c` and `1/c < λ⁻ <= λ⁺ < c` with equality
//! exactly at `c = 2`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A wave speed together with its derived constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Speed {
    pub c: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Top of the bell nullcline, `B(1/2) = 1/(16 c²)`.
    pub bell_top: f64,
}

impl Speed {
    /// Builds the constant bundle for an admissible speed.
    ///
    /// Fails with a domain error for `c < 2` (no real roots, and by the
    /// nonexistence result no travelling waves either).
    pub fn new(c: f64) -> Result<Self> {
        let (lm, lp) = lambda_pm(c)?;
        Ok(Self {
            c,
            lambda_minus: lm,
            lambda_plus: lp,
            bell_top: 1.0 / (16.0 * c * c),
        })
    }
}

/// Roots `(λ⁻, λ⁺)` of `λ² - cλ + 1 = 0` for `c >= 2`.
///
/// The smaller root is computed as `1/λ⁺` so the product is exact to a few
/// ulps even close to the double root at `c = 2`.
pub fn lambda_pm(c: f64) -> Result<(f64, f64)> {
    if !(c.is_finite() && c >= 2.0) {
        return Err(Error::Domain(format!(
            "no real roots of lambda^2 - c*lambda + 1 for c = {c} < 2"
        )));
    }
    let disc = (c * c - 4.0).sqrt();
    let lp = 0.5 * (c + disc);
    let lm = 1.0 / lp;
    Ok((lm, lp))
}

/// The bell-shaped nullcline `B(r) = r²(1-r)²/c²` of the transformed equation.
///
/// Solutions with `h > 0` decrease strictly below the bell and increase
/// strictly above it.
pub fn bell(c: f64, r: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("bell requires c > 0, got {c}")));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("bell requires r in [0,1], got {r}")));
    }
    let s = r * (1.0 - r) / c;
    Ok(s * s)
}

/// `λ² r² (1-r)²`, the quadratic comparison bell with rate `lambda`.
pub fn lambda_bell(lambda: f64, r: f64) -> f64 {
    let s = lambda * r * (1.0 - r);
    s * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_speed_has_double_root() {
        let (lm, lp) = lambda_pm(2.0).unwrap();
        assert_eq!(lm, 1.0);
        assert_eq!(lp, 1.0);
    }

    #[test]
    fn c_two_point_five_is_exact() {
        // quadratic formula gives (0.5, 2.0); cross-checked by the two
        // identities sum = c and product = 1
        let (lm, lp) = lambda_pm(2.5).unwrap();
        assert!((lm - 0.5).abs() < 8.0 * f64::EPSILON);
        assert!((lp - 2.0).abs() < 8.0 * f64::EPSILON);
        assert!((lm + lp - 2.5).abs() < 8.0 * f64::EPSILON);
        assert!((lm * lp - 1.0).abs() < 8.0 * f64::EPSILON);
    }

    #[test]
    fn c_two_point_one_matches_quadratic_formula() {
        let c = 2.1;
        let (lm, lp) = lambda_pm(c).unwrap();
        // independent oracle: plain quadratic formula plus the root identities
        let disc = (c * c - 4.0f64).sqrt();
        assert!((lm - (c - disc) / 2.0).abs() < 1e-14);
        assert!((lp - (c + disc) / 2.0).abs() < 1e-14);
        assert!((lm - 0.729844).abs() < 1e-6);
        assert!((lp - 1.370156).abs() < 1e-6);
        assert!((lm * lp - 1.0).abs() < 8.0 * f64::EPSILON);
        assert!((lm + lp - c).abs() < 8.0 * f64::EPSILON);
    }

    #[test]
    fn subcritical_speed_is_rejected() {
        assert!(lambda_pm(1.9).is_err());
        assert!(Speed::new(0.5).is_err());
    }

    #[test]
    fn ordering_chain() {
        for &c in &[2.0, 2.1, 2.5, 3.0, 5.0] {
            let s = Speed::new(c).unwrap();
            assert!(1.0 / c < s.lambda_minus);
            assert!(s.lambda_minus <= s.lambda_plus);
            assert!(s.lambda_plus < c);
            if c > 2.0 {
                assert!(s.lambda_minus < s.lambda_plus);
            }
        }
    }

    #[test]
    fn bell_values() {
        assert_eq!(bell(2.0, 0.0).unwrap(), 0.0);
        assert_eq!(bell(2.0, 1.0).unwrap(), 0.0);
        assert!((bell(2.0, 0.5).unwrap() - 1.0 / 64.0).abs() < 1e-18);
        // 1/(16 c^2) at c = 2.1
        assert!((bell(2.1, 0.5).unwrap() - 0.0141723).abs() < 1e-6);
        assert!(bell(2.0, 1.5).is_err());
    }

    #[test]
    fn bell_top_matches_bell_at_half() {
        for &c in &[2.0, 2.1, 3.0] {
            let s = Speed::new(c).unwrap();
            assert!((s.bell_top - bell(c, 0.5).unwrap()).abs() < 1e-18);
        }
    }
}
