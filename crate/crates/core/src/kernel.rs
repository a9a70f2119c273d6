//! Contact-kernel focusing: numerical verification that the rescaled
//! nonlocal operator converges to the local diffusion term.
//!
//! For an even probability density `J` with finite second moment `J₂` and
//! `J_ε(z) = ε⁻¹ J(z/ε)`, the focused contact operator satisfies
//! `(J_ε * f - f)(x) = ε² (J₂/2) f''(x) + O(ε⁴)` in one dimension.

use crate::error::{Error, Result};
use crate::tolerance::ToleranceSet;
use crate::wave::gl5;
use serde::{Deserialize, Serialize};

/// Shape of a symmetric 1-D probability density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelShape {
    Gaussian { sigma: f64 },
    /// Uniform on `[-halfwidth, halfwidth]`.
    Uniform { halfwidth: f64 },
    /// `J(z) = C_p (1+|z|)^{-p}` with `p ∈ (3, 5]`: finite second moment,
    /// infinite fourth moment.
    HeavyTail { exponent: f64 },
}

/// A symmetric 1-D probability density with closed-form moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub shape: KernelShape,
}

/// Truncation radius in standard deviations for decaying kernels.
const TRUNCATION_SIGMAS: f64 = 12.0;

impl Kernel {
    pub fn gaussian() -> Self {
        Self {
            shape: KernelShape::Gaussian { sigma: 1.0 },
        }
    }

    /// Uniform density on `[-1, 1]`, `J₂ = 1/3`.
    pub fn uniform_unit() -> Self {
        Self {
            shape: KernelShape::Uniform { halfwidth: 1.0 },
        }
    }

    /// Heavy-tailed kernel with infinite fourth moment.
    pub fn heavy_tail(exponent: f64) -> Result<Self> {
        if !(exponent > 3.0 && exponent <= 5.0) {
            return Err(Error::Domain(format!(
                "heavy-tail exponent {exponent} outside (3, 5]"
            )));
        }
        Ok(Self {
            shape: KernelShape::HeavyTail { exponent },
        })
    }

    pub fn density(&self, z: f64) -> f64 {
        match self.shape {
            KernelShape::Gaussian { sigma } => {
                let y = z / sigma;
                (-0.5 * y * y).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            KernelShape::Uniform { halfwidth } => {
                if z.abs() <= halfwidth {
                    0.5 / halfwidth
                } else {
                    0.0
                }
            }
            KernelShape::HeavyTail { exponent } => {
                let c = 0.5 * (exponent - 1.0);
                c * (1.0 + z.abs()).powf(-exponent)
            }
        }
    }

    /// Second moment `J₂ = ∫ z² J(z) dz`, closed form.
    pub fn second_moment(&self) -> f64 {
        match self.shape {
            KernelShape::Gaussian { sigma } => sigma * sigma,
            KernelShape::Uniform { halfwidth } => halfwidth * halfwidth / 3.0,
            KernelShape::HeavyTail { exponent } => {
                // 2 C_p ∫₀^∞ z²(1+z)^{-p} dz = 2/((p-2)(p-3))
                2.0 / ((exponent - 2.0) * (exponent - 3.0))
            }
        }
    }

    /// Fourth moment, or `None` when infinite.
    pub fn fourth_moment(&self) -> Option<f64> {
        match self.shape {
            KernelShape::Gaussian { sigma } => Some(3.0 * sigma.powi(4)),
            KernelShape::Uniform { halfwidth } => Some(halfwidth.powi(4) / 5.0),
            // the constructor admits only exponents <= 5, where it diverges
            KernelShape::HeavyTail { .. } => None,
        }
    }

    /// Radius beyond which the density is truncated in quadratures.
    pub fn truncation_radius(&self) -> f64 {
        match self.shape {
            KernelShape::Gaussian { sigma } => TRUNCATION_SIGMAS * sigma,
            KernelShape::Uniform { halfwidth } => halfwidth,
            KernelShape::HeavyTail { exponent } => {
                // choose R so the truncated second-moment mass is tiny
                let _ = exponent;
                1e6
            }
        }
    }

    /// Verifies unit mass, evenness at samples, and the closed-form second
    /// moment by quadrature.
    pub fn validate(&self, tol: &ToleranceSet) -> Result<()> {
        let r = self.truncation_radius().min(1e4);
        let mass = panel_quad(|z| self.density(z), -r, r, 4096);
        let quad_tol = tol.quad.max(1e-8);
        if (mass - 1.0).abs() > quad_tol * 100.0 {
            return Err(Error::Consistency(format!(
                "kernel mass {mass} deviates from 1"
            )));
        }
        for &z in &[0.1, 0.5, 1.0, 2.5] {
            if (self.density(z) - self.density(-z)).abs() > 1e-15 {
                return Err(Error::Consistency("kernel not even".into()));
            }
        }
        if !matches!(self.shape, KernelShape::HeavyTail { .. }) {
            let j2 = panel_quad(|z| z * z * self.density(z), -r, r, 4096);
            if (j2 - self.second_moment()).abs() > quad_tol * 100.0 * self.second_moment() {
                return Err(Error::Consistency(format!(
                    "second moment {j2} deviates from closed form {}",
                    self.second_moment()
                )));
            }
        }
        Ok(())
    }
}

fn panel_quad(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let dx = (b - a) / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * dx;
        acc += gl5(lo, lo + dx, &f);
    }
    acc
}

/// Computes `(J_ε * f - f)(x)` on the grid by quadrature in the scaled
/// variable: `∫ J(w) (f(x + εw) - f(x)) dw`.
///
/// `f_domain` declares where `f` is resolved; the truncated quadrature must
/// stay inside it, otherwise the truncation error would dominate.
pub fn convolve_focused(
    kernel: &Kernel,
    eps: f64,
    f: &dyn Fn(f64) -> f64,
    f_domain: (f64, f64),
    x_grid: &[f64],
    tol: &ToleranceSet,
) -> Result<Vec<f64>> {
    tol.validate()?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let r = kernel.truncation_radius();
    if !r.is_finite() || r > 1e5 {
        return Err(Error::Domain(
            "kernel tail too heavy for the truncated quadrature".into(),
        ));
    }
    let (lo, hi) = f_domain;
    for &x in x_grid {
        if x - eps * r < lo || x + eps * r > hi {
            return Err(Error::Domain(format!(
                "evaluation at x = {x} needs f outside its resolved domain [{lo}, {hi}]: truncation error would dominate"
            )));
        }
    }
    let panels = 256usize;
    let out = x_grid
        .iter()
        .map(|&x| panel_quad(|w| kernel.density(w) * (f(x + eps * w) - f(x)), -r, r, panels))
        .collect();
    Ok(out)
}

/// Focusing-order report: per-ε errors and the fitted log-log slope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FocusingOrder {
    pub eps: Vec<f64>,
    /// `sup_x |(J_ε*f-f)(x)/ε² - (J₂/2) f''(x)|` per ε.
    pub errors: Vec<f64>,
    pub slope: f64,
}

/// Measures the convergence order of the focusing expansion: the error of
/// `(J_ε*f-f)/ε²` against `(J₂/2) f''` should shrink like `ε²`.
pub fn focusing_order(
    kernel: &Kernel,
    f: &dyn Fn(f64) -> f64,
    fpp: &dyn Fn(f64) -> f64,
    f_domain: (f64, f64),
    x_grid: &[f64],
    eps_list: &[f64],
    tol: &ToleranceSet,
) -> Result<FocusingOrder> {
    tol.validate()?;
    if kernel.fourth_moment().is_none() {
        return Err(Error::Domain(
            "kernel has infinite fourth moment: the ε² error model does not apply".into(),
        ));
    }
    if eps_list.len() < 4 {
        return Err(Error::Domain(format!(
            "need at least 4 focusing scales, got {}",
            eps_list.len()
        )));
    }
    for w in eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Domain("eps list must be strictly decreasing".into()));
        }
    }
    let j2 = kernel.second_moment();
    let mut errors = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let conv = convolve_focused(kernel, eps, f, f_domain, x_grid, tol)?;
        let err = x_grid
            .iter()
            .zip(conv.iter())
            .map(|(&x, &v)| (v / (eps * eps) - 0.5 * j2 * fpp(x)).abs())
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    // log-log slope by least squares
    let pts: Vec<(f64, f64)> = eps_list
        .iter()
        .zip(errors.iter())
        .filter(|(_, &e)| e > 0.0)
        .map(|(&e, &err)| (e.ln(), err.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Estimation(
            "errors vanished below quadrature resolution; slope undefined".into(),
        ));
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let rms: f64 = (pts
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if rms > 0.35 {
        return Err(Error::Estimation(format!(
            "log-log slope fit residual {rms} too large; errors {errors:?}"
        )));
    }
    Ok(FocusingOrder {
        eps: eps_list.to_vec(),
        errors,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceSet {
        ToleranceSet::default()
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect()
    }

    #[test]
    fn kernels_validate() {
        Kernel::gaussian().validate(&tol()).unwrap();
        Kernel::uniform_unit().validate(&tol()).unwrap();
        assert!((Kernel::uniform_unit().second_moment() - 1.0 / 3.0).abs() < 1e-15);
        assert!(Kernel::heavy_tail(4.5).unwrap().fourth_moment().is_none());
        assert!(Kernel::heavy_tail(2.5).is_err());
    }

    #[test]
    fn constant_function_convolves_to_zero() {
        let k = Kernel::uniform_unit();
        let xs = grid(-2.0, 2.0, 41);
        let out = convolve_focused(&k, 0.1, &|_| 3.5, (-10.0, 10.0), &xs, &tol()).unwrap();
        for v in out {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_function_is_exact() {
        // expanding (x+εw)² against an even kernel leaves ε² J₂ exactly
        let k = Kernel::gaussian();
        let xs = grid(-2.0, 2.0, 21);
        let eps = 0.1;
        let out = convolve_focused(&k, eps, &|x| x * x, (-1e4, 1e4), &xs, &tol()).unwrap();
        for v in out {
            assert!((v - eps * eps).abs() < 1e-10, "v = {v}");
        }
    }

    #[test]
    fn symmetry_of_the_focused_difference() {
        let k = Kernel::gaussian();
        let xs = grid(-3.0, 3.0, 60);
        let out = convolve_focused(&k, 0.2, &|x| (-x * x).exp(), (-1e3, 1e3), &xs, &tol()).unwrap();
        let n = xs.len();
        for i in 0..n / 2 {
            assert!((out[i] - out[n - 1 - i]).abs() < 1e-11);
        }
    }

    #[test]
    fn gaussian_on_gaussian_slope_is_second_order() {
        let k = Kernel::gaussian();
        let xs = grid(-4.0, 4.0, 160);
        let f = |x: f64| (-x * x).exp();
        let fpp = |x: f64| (4.0 * x * x - 2.0) * (-x * x).exp();
        let report = focusing_order(
            &k,
            &f,
            &fpp,
            (-1e6, 1e6),
            &xs,
            &[0.2, 0.1, 0.05, 0.025],
            &tol(),
        )
        .unwrap();
        assert!(
            report.slope >= 1.8 && report.slope <= 2.2,
            "slope = {}",
            report.slope
        );
    }

    #[test]
    fn quadratic_f_has_vanishing_error_and_heavy_tail_is_rejected() {
        let k = Kernel::gaussian();
        let xs = grid(-2.0, 2.0, 21);
        // degree <= 3 with an even kernel: the expansion is exact, errors ~ 0
        let f = |x: f64| 1.0 + x + x * x;
        let fpp = |_: f64| 2.0;
        let res = focusing_order(&k, &f, &fpp, (-1e6, 1e6), &xs, &[0.2, 0.1, 0.05, 0.025], &tol());
        match res {
            Err(Error::Estimation(_)) => {}
            Ok(rep) => {
                for e in rep.errors {
                    assert!(e < 1e-9);
                }
            }
            Err(e) => panic!("unexpected error {e}"),
        }
        let heavy = Kernel::heavy_tail(4.5).unwrap();
        let err = focusing_order(
            &heavy,
            &f,
            &fpp,
            (-1e6, 1e6),
            &xs,
            &[0.2, 0.1, 0.05, 0.025],
            &tol(),
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}
