//! Inversion of the `h` representation back into physical wave profiles.
//!
//! A wave-producing solution `h > 0` on `(0, 1)` determines the profile
//! through `w(r) = u⁻¹(r) = ∫_r^{1/2} ds/sqrt(h(s))`, normalized by
//! `u(0) = 1/2`. The left edge `z* = -∫_{1/2}^1 ds/sqrt(h)` is finite
//! exactly for the saturated waves; the integral diverges logarithmically
//! for the small solution.

use crate::error::{Error, Result};
use crate::ode::{shoot, small_tail_shot, Direction, EndBehavior, HTrace, RawSample, ShotOptions};
use crate::shooting::WaveTag;
use crate::tolerance::ToleranceSet;
use serde::{Deserialize, Serialize};

/// Left edge of a wave: finite for saturated profiles, `-∞` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZStar {
    Finite(f64),
    MinusInfinity,
}

impl ZStar {
    pub fn finite(&self) -> Option<f64> {
        match self {
            ZStar::Finite(z) => Some(*z),
            ZStar::MinusInfinity => None,
        }
    }
}

impl std::fmt::Display for ZStar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ZStar::Finite(z) => write!(f, "{z}"),
            ZStar::MinusInfinity => f.write_str("-inf"),
        }
    }
}

/// One profile sample; `du_dz = -sqrt(h(u))` is exact, not differenced.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WaveSample {
    pub z: f64,
    pub u: f64,
    pub du_dz: f64,
}

/// A reconstructed travelling-wave profile, normalized by `u(0) = 1/2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveProfile {
    pub c: f64,
    /// Shooting value `h(1/2)` of the generating solution.
    pub alpha: f64,
    pub z_star: ZStar,
    pub kind: WaveTag,
    /// Samples with strictly increasing `z` and strictly decreasing `u`.
    pub samples: Vec<WaveSample>,
    /// Exponential rate used to extrapolate beyond the last right sample.
    pub right_tail_mu: f64,
}

/// Result of `evaluate_u`, flagging values outside the sampled range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UValue {
    pub u: f64,
    pub extrapolated: bool,
}

/// Left-tail characterization per wave kind.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum LeftTailResult {
    /// Non-saturated: fitted rate of `log(1-u)` against `z`, expected `1/c`.
    NonSaturatedRate { rate: f64 },
    /// Saturated: range of `(1-u)/(-c (z-z*) log(z-z*))` over the last
    /// resolved decade approaching `z*`; the ratio tends to 1.
    SharpFrontRatio {
        ratio_min: f64,
        ratio_max: f64,
        /// Smallest resolved distance `z - z*`.
        zeta_min: f64,
    },
}

/// `e^x E₁(x)` by the Lentz continued fraction, accurate for `x ≳ 1`; used
/// for analytic tails `∫_T^∞ e^{-t}/(t+κ) dt = e^{-T} exp_e1_scaled(T+κ)`.
fn exp_e1_scaled(x: f64) -> f64 {
    debug_assert!(x > 1.0);
    // e^x E1(x) = 1/(x+1- 1²/(x+3- 2²/(x+5- ...)))
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut f = d;
    for n in 1..200 {
        let a = -((n * n) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

/// The augmented integration path `(r, h, z, s)` of a wave-producing
/// solution, assembled from stable-direction shots.
pub(crate) struct WavePath {
    pub c: f64,
    pub alpha: f64,
    /// Samples ascending in `r`, with `z` anchored at `z(1/2) = 0`.
    pub pts: Vec<RawSample>,
    /// `∫_0^1 (sqrt(h) + r(1-r)/sqrt(h)) dr` including analytic endpoint slabs.
    pub speed_integral: f64,
    /// Finite `z*` for saturated paths.
    pub z_star: Option<f64>,
}

const NS_TAIL_T_HI: f64 = 9.0;

/// Decide saturation from the right endpoint model of a trace.
fn trace_is_saturated(trace: &HTrace) -> Result<bool> {
    match trace.right.map(|r| r.behavior) {
        Some(EndBehavior::LogSquare { .. }) => Ok(true),
        Some(EndBehavior::Quadratic { .. }) => Ok(false),
        Some(EndBehavior::Negative { .. }) | Some(EndBehavior::Positive { .. }) | None => {
            Err(Error::Domain(
                "trace is not wave-producing (right end neither saturated nor quadratic)".into(),
            ))
        }
    }
}

fn require_wave(trace: &HTrace) -> Result<f64> {
    let alpha = trace.alpha.ok_or_else(|| {
        Error::Domain("trace is not anchored at r = 1/2; cannot reconstruct".into())
    })?;
    if trace.zero_crossing().is_some() {
        return Err(Error::Domain(
            "trace crosses zero; it does not produce a wave".into(),
        ));
    }
    if let Some(left) = trace.left {
        if !left.satisfies_zero {
            return Err(Error::Domain(format!(
                "trace has h(0) = {} > 0; it does not produce a wave",
                left.h_at_cutoff
            )));
        }
    }
    Ok(alpha)
}

impl WavePath {
    /// Builds the path from a wave-producing trace, re-integrating along the
    /// stable directions with the `z`/`s` accumulators switched on.
    pub fn from_trace(trace: &HTrace, tol: &ToleranceSet, deep_t_max: Option<f64>) -> Result<Self> {
        let alpha = require_wave(trace)?;
        let c = trace.c;
        let saturated = trace_is_saturated(trace)?;
        let opts = match deep_t_max {
            Some(t) => ShotOptions::deep(t),
            None => ShotOptions::recorded(),
        };

        let left = shoot(c, 0.5, alpha, Direction::TowardZero, tol, &opts)?;
        if left.samples.iter().any(|p| p.h <= 0.0) {
            return Err(Error::Domain("trace not positive toward r = 0".into()));
        }

        let mut pts: Vec<RawSample> = left
            .samples
            .iter()
            .rev()
            .map(|p| RawSample {
                r: p.r,
                h: p.h,
                z: p.z,
                s: p.s,
            })
            .collect();

        // left endpoint slab of the speed integral: integrand -> 1/mu
        let mu_left = match left.endpoint.behavior {
            EndBehavior::Quadratic { mu } => mu,
            _ => {
                return Err(Error::Domain(
                    "left endpoint not quadratic; not a wave".into(),
                ))
            }
        };
        let r_cut = left.endpoint.cutoff;
        let mut speed_integral = -left.s_end() + r_cut / mu_left;

        let z_star;
        if saturated {
            let right = shoot(c, 0.5, alpha, Direction::TowardOne, tol, &opts)?;
            if right.samples.iter().any(|p| p.h <= 0.0) {
                return Err(Error::Domain("trace not positive toward r = 1".into()));
            }
            let kap = match right.endpoint.behavior {
                EndBehavior::LogSquare { kappa } => kappa,
                other => {
                    return Err(Error::Integration {
                        r: right.end.r,
                        h: right.end.h,
                        reason: format!("expected saturated growth at r = 1, found {other:?}"),
                    })
                }
            };
            let t_max = opts.t_max;
            // z* = z(right end) - ∫_{t_max}^∞ e^{-t}/sqrt(h) dt
            let x = t_max + kap;
            let ztail = (-t_max).exp() * exp_e1_scaled(x) / c;
            z_star = Some(right.z_end() - ztail);
            // speed slab: ∫ (e^{-t} sqrt(h) + r e^{-2t}/sqrt(h)) dt beyond t_max
            let stail = c * (-t_max).exp() * (t_max + kap + 1.0)
                + (-2.0 * t_max).exp() / (2.0 * c * (t_max + kap));
            speed_integral += right.s_end() + stail;
            pts.extend(right.samples.iter().skip(1).map(|p| RawSample {
                r: p.r,
                h: p.h,
                z: p.z,
                s: p.s,
            }));
        } else {
            // small solution: the forward direction is unstable, integrate the
            // tail backward from the asymptotic model instead
            let t_lo = std::f64::consts::LN_2;
            let tail = small_tail_shot(c, NS_TAIL_T_HI, t_lo, tol, &opts)?;
            // consistency of the two routes at the anchor
            let mism = (tail.end.h - alpha).abs();
            if mism > 1e4 * tol.ode_abs + 1e3 * tol.ode_rel * alpha {
                return Err(Error::Convergence(format!(
                    "asymptotic tail misses the anchor by {mism} (alpha = {alpha})"
                )));
            }
            // re-anchor tail coordinates at r = 1/2
            let (ze, se) = (tail.end.z, tail.end.s);
            let mut tail_pts: Vec<RawSample> = tail
                .samples
                .iter()
                .filter(|p| p.r > 0.5)
                .map(|p| RawSample {
                    r: p.r,
                    h: p.h,
                    z: p.z - ze,
                    s: p.s - se,
                })
                .collect();
            tail_pts.sort_by(|a, b| a.r.partial_cmp(&b.r).unwrap());
            pts.extend(tail_pts);
            // ∫_{1/2}^{r(T)} = -s_end after re-anchoring; analytic slab beyond
            let slab = c * (-NS_TAIL_T_HI).exp() + (-2.0 * NS_TAIL_T_HI).exp() / (2.0 * c);
            speed_integral += -se + slab;
            z_star = None;
        }

        pts.dedup_by(|a, b| a.r == b.r);
        Ok(WavePath {
            c,
            alpha,
            pts,
            speed_integral,
            z_star,
        })
    }

    /// Hermite interpolation of `z` at radius `r` (slopes `dz/dr = -1/sqrt(h)`).
    pub fn z_at(&self, r: f64) -> Result<f64> {
        let p = &self.pts;
        let n = p.len();
        if n < 2 || r < p[0].r || r > p[n - 1].r {
            return Err(Error::Domain(format!("r = {r} outside the wave path")));
        }
        let i = match p.binary_search_by(|q| q.r.partial_cmp(&r).unwrap()) {
            Ok(i) => return Ok(p[i].z),
            Err(i) => i - 1,
        };
        let (a, b) = (p[i], p[i + 1]);
        let d = b.r - a.r;
        let m0 = -1.0 / a.h.sqrt();
        let m1 = -1.0 / b.h.sqrt();
        let x = (r - a.r) / d;
        let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
        let h10 = x * (1.0 - x) * (1.0 - x);
        let h01 = x * x * (3.0 - 2.0 * x);
        let h11 = x * x * (x - 1.0);
        Ok(h00 * a.z + h10 * d * m0 + h01 * b.z + h11 * d * m1)
    }

    pub fn h_interp(&self, r: f64) -> Result<f64> {
        let p = &self.pts;
        let n = p.len();
        if n < 2 || r < p[0].r || r > p[n - 1].r {
            return Err(Error::Domain(format!("r = {r} outside the wave path")));
        }
        let i = match p.binary_search_by(|q| q.r.partial_cmp(&r).unwrap()) {
            Ok(i) => return Ok(p[i].h),
            Err(i) => i - 1,
        };
        let (a, b) = (p[i], p[i + 1]);
        let d = b.r - a.r;
        let m0 = crate::ode::rhs(a.r, a.h, self.c)?;
        let m1 = crate::ode::rhs(b.r, b.h, self.c)?;
        let x = (r - a.r) / d;
        let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
        let h10 = x * (1.0 - x) * (1.0 - x);
        let h01 = x * x * (3.0 - 2.0 * x);
        let h11 = x * x * (x - 1.0);
        Ok(h00 * a.h + h10 * d * m0 + h01 * b.h + h11 * d * m1)
    }

    pub fn r_range(&self) -> (f64, f64) {
        (self.pts[0].r, self.pts[self.pts.len() - 1].r)
    }
}

/// Classifies the wave kind from the trace alone (no threshold table):
/// the right-end model separates saturated from non-saturated, and the
/// recorded bell crossings separate the saturated sub-kinds.
fn kind_from_trace(trace: &HTrace, tol: &ToleranceSet) -> Result<WaveTag> {
    let alpha = require_wave(trace)?;
    if trace_is_saturated(trace)? {
        let bell_top = 1.0 / (16.0 * trace.c * trace.c);
        if (alpha - bell_top).abs() <= tol.bisect * bell_top.max(1.0) {
            return Ok(WaveTag::SaturatedB);
        }
        let radii = trace.critical_radii();
        if radii.is_empty() {
            Ok(WaveTag::SaturatedC)
        } else {
            Ok(WaveTag::SaturatedA)
        }
    } else {
        Ok(WaveTag::NonSaturated)
    }
}

/// Default number of equispaced interior radii in a reconstructed profile.
pub const DEFAULT_PROFILE_SAMPLES: usize = 2000;

/// Reconstructs the wave profile from a wave-producing trace.
pub fn reconstruct(trace: &HTrace, tol: &ToleranceSet) -> Result<WaveProfile> {
    reconstruct_sampled(trace, tol, DEFAULT_PROFILE_SAMPLES)
}

/// As [`reconstruct`], with an explicit interior sample count.
pub fn reconstruct_sampled(trace: &HTrace, tol: &ToleranceSet, n: usize) -> Result<WaveProfile> {
    tol.validate()?;
    if n < 16 {
        return Err(Error::Domain(format!("sample count {n} too small")));
    }
    let kind = kind_from_trace(trace, tol)?;
    let path = WavePath::from_trace(trace, tol, None)?;
    let (r_lo, r_hi) = path.r_range();

    // output grid: equispaced interior radii plus log-spaced tail refinement
    let mut grid: Vec<f64> = Vec::with_capacity(n + 160);
    let (lin_lo, lin_hi) = (0.01f64.max(r_lo), 0.99f64.min(r_hi));
    for i in 0..=n {
        grid.push(lin_lo + (lin_hi - lin_lo) * i as f64 / n as f64);
    }
    let per_decade = 24usize;
    let decades_left = (lin_lo / r_lo).log10();
    let m = (decades_left * per_decade as f64).ceil() as usize;
    for j in 0..m {
        grid.push(r_lo * (lin_lo / r_lo).powf(j as f64 / m as f64));
    }
    let om_hi = 1.0 - r_hi;
    let decades_right = ((1.0 - lin_hi) / om_hi).log10();
    let m = (decades_right * per_decade as f64).ceil() as usize;
    for j in 0..m {
        grid.push(1.0 - om_hi * ((1.0 - lin_hi) / om_hi).powf(j as f64 / m as f64));
    }
    grid.push(0.5);
    grid.push(r_lo);
    grid.push(r_hi);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut samples: Vec<WaveSample> = Vec::with_capacity(grid.len());
    for &r in &grid {
        let z = if r == 0.5 { 0.0 } else { path.z_at(r)? };
        let h = path.h_interp(r)?.max(0.0);
        samples.push(WaveSample {
            z,
            u: r,
            du_dz: -h.sqrt(),
        });
    }
    // ascending z = descending u
    samples.reverse();
    samples.dedup_by(|a, b| a.z == b.z);

    let z_star = match path.z_star {
        Some(z) => ZStar::Finite(z),
        None => ZStar::MinusInfinity,
    };
    if let ZStar::Finite(z) = z_star {
        if !(z < 0.0) {
            return Err(Error::Consistency(format!(
                "saturated wave must have z* < 0, got {z}"
            )));
        }
    }
    let first = samples.first().expect("nonempty");
    let last = samples.last().expect("nonempty");
    let mu_tail = -last.du_dz / last.u;
    if !(first.u > last.u) {
        return Err(Error::Consistency("profile lost monotonicity".into()));
    }
    Ok(WaveProfile {
        c: trace.c,
        alpha: path.alpha,
        z_star,
        kind,
        samples,
        right_tail_mu: mu_tail,
    })
}

/// Evaluates the profile at `z` by monotone cubic interpolation, clamping to
/// 1 left of `z*` and extrapolating by the fitted exponential tail on the
/// right; out-of-range values are flagged.
pub fn evaluate_u(profile: &WaveProfile, z: f64) -> UValue {
    let s = &profile.samples;
    let n = s.len();
    if let ZStar::Finite(zs) = profile.z_star {
        if z <= zs {
            return UValue {
                u: 1.0,
                extrapolated: false,
            };
        }
    }
    if z < s[0].z {
        // between z* and the first resolved sample (or the far left for the
        // non-saturated wave): exponential contact model toward u = 1
        let u = match profile.z_star {
            ZStar::MinusInfinity => {
                let w = 1.0 - s[0].u;
                1.0 - w * ((z - s[0].z) / profile.c).exp()
            }
            ZStar::Finite(zs) => {
                let zeta = z - zs;
                let model = -profile.c * zeta * zeta.ln().min(-1.0);
                1.0 - model.min(1.0 - s[0].u)
            }
        };
        return UValue {
            u: u.clamp(0.0, 1.0),
            extrapolated: true,
        };
    }
    if z > s[n - 1].z {
        let u = s[n - 1].u * (-profile.right_tail_mu * (z - s[n - 1].z)).exp();
        return UValue {
            u,
            extrapolated: true,
        };
    }
    let i = match s.binary_search_by(|p| p.z.partial_cmp(&z).unwrap()) {
        Ok(i) => {
            return UValue {
                u: s[i].u,
                extrapolated: false,
            }
        }
        Err(i) => i - 1,
    };
    let (a, b) = (s[i], s[i + 1]);
    let d = b.z - a.z;
    let sec = (b.u - a.u) / d;
    // clamp slopes into the monotone (Fritsch-Carlson) region
    let clamp = |m: f64| -> f64 {
        if sec == 0.0 {
            0.0
        } else {
            let r = m / sec;
            sec * r.clamp(0.0, 3.0)
        }
    };
    let m0 = clamp(a.du_dz);
    let m1 = clamp(b.du_dz);
    let x = (z - a.z) / d;
    let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
    let h10 = x * (1.0 - x) * (1.0 - x);
    let h01 = x * x * (3.0 - 2.0 * x);
    let h11 = x * x * (x - 1.0);
    UValue {
        u: (h00 * a.u + h10 * d * m0 + h01 * b.u + h11 * d * m1).clamp(0.0, 1.0),
        extrapolated: false,
    }
}

/// Least-squares slope of `log u` against `z` over the far-right window
/// (`u < 1e-3`), returned as a positive rate.
pub fn right_tail_rate(profile: &WaveProfile, tol: &ToleranceSet) -> Result<f64> {
    tol.validate()?;
    let pts: Vec<(f64, f64)> = profile
        .samples
        .iter()
        .filter(|s| s.u > 0.0 && s.u < 1e-3)
        .map(|s| (s.z, s.u.ln()))
        .collect();
    if pts.len() < 8 {
        return Err(Error::Estimation(format!(
            "only {} samples with u < 1e-3; profile does not resolve the right tail",
            pts.len()
        )));
    }
    let slope = ls_slope(&pts)?;
    Ok(-slope)
}

/// Left-tail check: fitted rate `~ 1/c` for the non-saturated wave, sharp
/// front ratio `~ 1` for saturated waves.
pub fn left_tail(profile: &WaveProfile, tol: &ToleranceSet) -> Result<LeftTailResult> {
    tol.validate()?;
    match profile.z_star {
        ZStar::MinusInfinity => {
            // fit over 1 - u in [e^{-8.5}, e^{-5.5}]; resolved by construction
            let (w_lo, w_hi) = ((-8.5f64).exp(), (-5.5f64).exp());
            let pts: Vec<(f64, f64)> = profile
                .samples
                .iter()
                .filter(|s| {
                    let w = 1.0 - s.u;
                    w > w_lo && w < w_hi
                })
                .map(|s| (s.z, (1.0 - s.u).ln()))
                .collect();
            if pts.len() < 8 {
                return Err(Error::Estimation(
                    "left tail of the non-saturated wave not resolved".into(),
                ));
            }
            Ok(LeftTailResult::NonSaturatedRate {
                rate: ls_slope(&pts)?,
            })
        }
        ZStar::Finite(_) => {
            let (ratio_min, ratio_max, zeta_min) = sharp_front_ratio(profile, tol)?;
            Ok(LeftTailResult::SharpFrontRatio {
                ratio_min,
                ratio_max,
                zeta_min,
            })
        }
    }
}

/// Depth (in `t = -log(1-r)`) of the dedicated sharp-front integration.
const SHARP_T_MAX: f64 = 300.0;

/// Evaluates `(1-u)/(-c ζ log ζ)`, `ζ = z - z*`, over the last resolved
/// decade of `1-u`, with `ζ` accumulated right-to-left so it keeps full
/// relative precision arbitrarily close to the front.
fn sharp_front_ratio(profile: &WaveProfile, tol: &ToleranceSet) -> Result<(f64, f64, f64)> {
    let c = profile.c;
    let opts = ShotOptions::deep(SHARP_T_MAX);
    let right = shoot(c, 0.5, profile.alpha, Direction::TowardOne, tol, &opts)?;
    let kap = match right.endpoint.behavior {
        EndBehavior::LogSquare { kappa } => kappa,
        other => {
            return Err(Error::Integration {
                r: right.end.r,
                h: right.end.h,
                reason: format!("sharp-front check on a non-saturated trace ({other:?})"),
            })
        }
    };
    // points in the t chart region, ascending t
    let mut pts: Vec<(f64, f64)> = right
        .samples
        .iter()
        .filter(|p| p.r > 0.95)
        .map(|p| (-(1.0 - p.r).ln(), p.h))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.dedup_by(|a, b| a.0 == b.0);
    let n = pts.len();
    if n < 32 {
        return Err(Error::Estimation("front region under-resolved".into()));
    }
    let t_end = pts[n - 1].0;
    let mut zeta = (-t_end).exp() * exp_e1_scaled(t_end + kap) / c;
    let zeta_min = zeta;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = f64::NEG_INFINITY;
    let t_window = t_end - std::f64::consts::LN_10;
    for i in (0..n - 1).rev() {
        let (t0, h0) = pts[i];
        let (t1, h1) = pts[i + 1];
        // panel ∫ e^{-t}/sqrt(h) dt by 5-point Gauss-Legendre with linear h
        zeta += gl5(t0, t1, |t| {
            let w = (t - t0) / (t1 - t0);
            let h = h0 + w * (h1 - h0);
            (-t).exp() / h.sqrt()
        });
        if t0 >= t_window {
            let ratio = (-t0).exp() / (-c * zeta * zeta.ln());
            ratio_min = ratio_min.min(ratio);
            ratio_max = ratio_max.max(ratio);
        }
    }
    if !ratio_min.is_finite() {
        return Err(Error::Estimation("sharp-front window empty".into()));
    }
    Ok((ratio_min, ratio_max, zeta_min))
}

const GL5_X: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL5_W: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

/// 5-point Gauss-Legendre quadrature on `[a, b]`.
pub(crate) fn gl5(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL5_X.iter().zip(GL5_W.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

fn ls_slope(pts: &[(f64, f64)]) -> Result<f64> {
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::Estimation("degenerate fit abscissae".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Evaluates the speed identity `∫₀¹ (sqrt(h) + r(1-r)/sqrt(h)) dr`, which
/// equals `c` for every wave-producing solution.
pub fn speed_identity(trace: &HTrace, tol: &ToleranceSet) -> Result<f64> {
    tol.validate()?;
    let path = WavePath::from_trace(trace, tol, None)?;
    if !path.speed_integral.is_finite() {
        return Err(Error::Quadrature(
            "speed-identity quadrature diverged (non-wave trace?)".into(),
        ));
    }
    Ok(path.speed_integral)
}

/// Maps each interior critical radius of `h` to its inflection coordinate
/// `z = w(r)` and checks the pattern implied by the wave kind.
pub fn convexity_pattern(trace: &HTrace) -> Result<Vec<f64>> {
    let tol = ToleranceSet::default();
    let kind = kind_from_trace(trace, &tol)?;
    let path = WavePath::from_trace(trace, &tol, None)?;
    let mut zs: Vec<f64> = Vec::new();
    for r in trace.critical_radii() {
        zs.push(path.z_at(r)?);
    }
    if kind == WaveTag::SaturatedB {
        zs.retain(|z| z.abs() > 1e-6);
        zs.push(0.0);
    }
    zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ok = match kind {
        WaveTag::NonSaturated => zs.len() == 1 && zs[0] > 0.0,
        WaveTag::SaturatedA => zs.len() == 2 && zs[0] < 0.0 && zs[1] > 0.0,
        WaveTag::SaturatedB => zs.len() == 1 && zs[0] == 0.0,
        WaveTag::SaturatedC => zs.is_empty(),
        _ => false,
    };
    if !ok {
        return Err(Error::Consistency(format!(
            "inflection pattern {zs:?} inconsistent with wave kind {kind}"
        )));
    }
    Ok(zs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode;
    use crate::shooting::solve_small;

    fn tol() -> ToleranceSet {
        ToleranceSet::default()
    }

    #[test]
    fn ns_profile_normalization_and_monotonicity() {
        let c = 2.1;
        let h0 = solve_small(c, &tol()).unwrap();
        let p = reconstruct(&h0, &tol()).unwrap();
        assert_eq!(p.kind, WaveTag::NonSaturated);
        assert_eq!(p.z_star, ZStar::MinusInfinity);
        // u(0) = 1/2 by construction
        let anchor = p
            .samples
            .iter()
            .find(|s| s.u == 0.5)
            .expect("anchor sample");
        assert_eq!(anchor.z, 0.0);
        for w in p.samples.windows(2) {
            assert!(w[1].z > w[0].z);
            assert!(w[1].u < w[0].u);
            assert!(w[0].u > 0.0 && w[0].u < 1.0);
        }
    }

    #[test]
    fn saturated_profile_has_negative_finite_front() {
        let c = 2.1;
        let tr = ode::shoot_both(c, 0.06, &tol()).unwrap();
        let p = reconstruct(&tr, &tol()).unwrap();
        assert_eq!(p.kind, WaveTag::SaturatedC);
        let zs = p.z_star.finite().expect("finite front");
        assert!(zs < 0.0);
        // frozen from an independent high-accuracy integration of the
        // augmented system (h, z) in the log(1-r) variable with the
        // analytic E1 tail beyond the cutoff
        assert!((zs - (-0.5332308413217551)).abs() < 1e-8, "z* = {zs}");
    }

    #[test]
    fn evaluate_u_basics() {
        let c = 2.1;
        let tr = ode::shoot_both(c, 0.06, &tol()).unwrap();
        let p = reconstruct(&tr, &tol()).unwrap();
        assert_eq!(evaluate_u(&p, 0.0).u, 0.5);
        let zs = p.z_star.finite().unwrap();
        // saturated: u = 1 left of the front
        assert_eq!(evaluate_u(&p, zs - 1.0).u, 1.0);
        // far right: positive, below the last sample, flagged extrapolated
        let last = p.samples.last().unwrap();
        let v = evaluate_u(&p, last.z + 5.0);
        assert!(v.extrapolated);
        assert!(v.u > 0.0 && v.u < last.u);
        // interior monotone interpolation
        let mid = evaluate_u(&p, 1.2345);
        assert!(mid.u > 0.0 && mid.u < 0.5);
    }

    #[test]
    fn speed_identity_recovers_c() {
        for &c in &[2.0, 2.1, 3.0] {
            let h0 = solve_small(c, &tol()).unwrap();
            let si = speed_identity(&h0, &tol()).unwrap();
            assert!(
                (si - c).abs() / c < 1e-3,
                "c = {c}: identity gave {si} (rel {})",
                (si - c).abs() / c
            );
        }
    }

    #[test]
    fn exp_e1_matches_series_crosscheck() {
        // e^x E1(x) at x = 20 against a direct numerical tail quadrature
        let x = 20.0f64;
        let direct: f64 = {
            // ∫_x^∞ e^{x-t}/t dt via substitution t = x + u, fine trapezoid
            let mut acc = 0.0;
            let n = 400_000;
            let umax = 60.0;
            let du = umax / n as f64;
            for i in 0..n {
                let u0 = i as f64 * du;
                let u1 = u0 + du;
                let f0 = (-u0).exp() / (x + u0);
                let f1 = (-u1).exp() / (x + u1);
                acc += 0.5 * (f0 + f1) * du;
            }
            acc
        };
        assert!((exp_e1_scaled(x) - direct).abs() < 1e-10);
    }
}
