//! Tolerance bundle threaded through every numerical operation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerances controlling the ODE integrator, searches, quadratures and fits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToleranceSet {
    /// Relative tolerance of the adaptive ODE integrator.
    pub ode_rel: f64,
    /// Absolute tolerance of the adaptive ODE integrator.
    pub ode_abs: f64,
    /// Relative width at which bisection searches stop.
    pub bisect: f64,
    /// Absolute target for quadratures.
    pub quad: f64,
    /// Radius window `(r_lo, r_hi)` used by endpoint exponent fits.
    pub fit_window: (f64, f64),
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            ode_rel: 1e-10,
            ode_abs: 1e-12,
            bisect: 1e-10,
            quad: 1e-10,
            fit_window: (1e-6, 1e-3),
        }
    }
}

impl ToleranceSet {
    /// Validates positivity and the floor `bisect >= 1e3 * machine epsilon`.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("ode_rel", self.ode_rel),
            ("ode_abs", self.ode_abs),
            ("bisect", self.bisect),
            ("quad", self.quad),
            ("fit_window.0", self.fit_window.0),
            ("fit_window.1", self.fit_window.1),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "tolerance `{name}` must be strictly positive, got {v}"
                )));
            }
        }
        if self.bisect < f64::EPSILON * 1e3 {
            return Err(Error::Domain(format!(
                "bisect tolerance {} below 1e3 * machine epsilon",
                self.bisect
            )));
        }
        if self.fit_window.0 >= self.fit_window.1 {
            return Err(Error::Domain("fit_window must satisfy lo < hi".into()));
        }
        Ok(())
    }

    /// Threshold of the `h(0) = 0` decision rule: a trace endpoint value below
    /// `max(10 * ode_abs, delta^{3/2})` counts as zero.
    pub fn zero_threshold(&self, delta: f64) -> f64 {
        (10.0 * self.ode_abs).max(delta.powf(1.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ToleranceSet::default().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_and_tiny_bisect() {
        let mut t = ToleranceSet::default();
        t.ode_rel = 0.0;
        assert!(t.validate().is_err());
        let mut t = ToleranceSet::default();
        t.bisect = 1e-15;
        assert!(t.validate().is_err());
    }

    #[test]
    fn zero_threshold_takes_max() {
        let t = ToleranceSet::default();
        // 10 * 1e-12 = 1e-11 dominates delta^{3/2} = 1e-12 at delta = 1e-8
        assert!((t.zero_threshold(1e-8) - 1e-11).abs() < 1e-25);
        assert!((t.zero_threshold(1e-4) - 1e-6).abs() < 1e-20);
    }
}
