//! Chart-switching adaptive Runge-Kutta engine for the transformed equation.
//!
//! A single Dormand-Prince 5(4) stepper drives one of five local charts;
//! guards move the state between charts so that every chart only ever sees a
//! smooth, well-scaled right-hand side. Two auxiliary components ride along
//! with the main state: the wave coordinate `z` (`dz/dr = -1/sqrt(h)`) and
//! the speed-identity accumulator `s` (`ds/dr = sqrt(h) + r(1-r)/sqrt(h)`).

use super::{Direction, EndBehavior, EndpointReport, HTrace, TraceEvent, TraceSample};
use crate::error::{Error, Result};
use crate::speed::bell;
use crate::tolerance::ToleranceSet;

pub(crate) const DEFAULT_R_CUT0: f64 = 1e-8;
/// `-ln(1e-8)`: default cutoff `1 - r = 1e-8` in the logarithmic variable.
pub(crate) const DEFAULT_T_MAX: f64 = 18.420680743952367;
const R_TO_L: f64 = 0.1;
const R_TO_T: f64 = 0.9;
const T_AT_BOUNDARY: f64 = 2.302585092994046; // -ln(1 - 0.9)
const TAU_AT_BOUNDARY: f64 = -2.302585092994046; // ln(0.1)
const MAX_STEPS: usize = 3_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chart {
    /// state `h` against `r`
    R,
    /// state `h` against `t = -ln(1-r)`
    T,
    /// state `phi = sqrt(h)/(r(1-r))` against `tau = ln r`
    L,
    /// state `q = sqrt(h) e^t` against `t`
    Q,
    /// state `r` against `sigma = sqrt(h)` (zero-crossing chart)
    S,
}

/// Options controlling one engine run.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ShotOptions {
    pub record: bool,
    pub r_cut0: f64,
    pub t_max: f64,
    pub interp_tol: f64,
}

impl ShotOptions {
    pub fn recorded() -> Self {
        Self {
            record: true,
            r_cut0: DEFAULT_R_CUT0,
            t_max: DEFAULT_T_MAX,
            interp_tol: 1e-6,
        }
    }

    pub fn probe() -> Self {
        Self {
            record: false,
            ..Self::recorded()
        }
    }

    pub fn deep(t_max: f64) -> Self {
        Self {
            t_max,
            ..Self::recorded()
        }
    }
}

/// One recorded point in physical coordinates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RawSample {
    pub r: f64,
    pub h: f64,
    pub z: f64,
    pub s: f64,
}

/// Result of one directional run.
#[derive(Debug, Clone)]
pub(crate) struct Shot {
    pub direction: Direction,
    /// Samples in traversal order.
    pub samples: Vec<RawSample>,
    pub events: Vec<TraceEvent>,
    pub end: RawSample,
    pub endpoint: EndpointReport,
    pub interp_tol: f64,
}

impl Shot {
    pub fn into_trace(self, c: f64, alpha: Option<f64>) -> HTrace {
        let mut samples = self.samples;
        if self.direction == Direction::TowardZero {
            samples.reverse();
        }
        let mut events = self.events;
        events.sort_by(|a, b| a.r().partial_cmp(&b.r()).unwrap());
        let (left, right) = match self.direction {
            Direction::TowardZero => (Some(self.endpoint), None),
            Direction::TowardOne => (None, Some(self.endpoint)),
        };
        HTrace {
            c,
            alpha,
            samples: samples
                .iter()
                .map(|p| TraceSample { r: p.r, h: p.h })
                .collect(),
            events,
            interp_tol: self.interp_tol,
            left,
            right,
        }
    }

    /// Wave coordinate accumulated at the far end of the run.
    pub fn z_end(&self) -> f64 {
        self.end.z
    }

    pub fn s_end(&self) -> f64 {
        self.end.s
    }
}

/// Merge a backward and a forward shot anchored at the same point.
pub(crate) fn merge_shots(c: f64, alpha: Option<f64>, left: Shot, right: Shot) -> HTrace {
    let mut samples: Vec<TraceSample> = Vec::with_capacity(left.samples.len() + right.samples.len());
    for p in left.samples.iter().rev() {
        samples.push(TraceSample { r: p.r, h: p.h });
    }
    for p in right.samples.iter().skip(1) {
        samples.push(TraceSample { r: p.r, h: p.h });
    }
    samples.dedup_by(|a, b| a.r == b.r);
    let mut events = left.events;
    events.extend(right.events);
    events.sort_by(|a, b| a.r().partial_cmp(&b.r()).unwrap());
    HTrace {
        c,
        alpha,
        samples,
        events,
        interp_tol: left.interp_tol.max(right.interp_tol),
        left: Some(left.endpoint),
        right: Some(right.endpoint),
    }
}

struct Ctx {
    c: f64,
    tol: ToleranceSet,
    opts: ShotOptions,
    samples: Vec<RawSample>,
    events: Vec<TraceEvent>,
    steps: usize,
}

impl Ctx {
    fn push_sample(&mut self, p: RawSample) {
        if !self.opts.record {
            return;
        }
        if let Some(last) = self.samples.last() {
            if last.r == p.r {
                return;
            }
        }
        self.samples.push(p);
    }

    fn push_event(&mut self, e: TraceEvent) {
        if let Some(last) = self.events.last() {
            if std::mem::discriminant(last) == std::mem::discriminant(&e)
                && (last.r() - e.r()).abs() < 1e-12
            {
                return;
            }
        }
        self.events.push(e);
    }
}

/// Chart-local derivative of `(y, z, s)`.
fn deriv(chart: Chart, x: f64, y: f64, c: f64) -> [f64; 3] {
    match chart {
        Chart::R => {
            let r = x;
            let om = 1.0 - r;
            if y <= 0.0 {
                [-2.0 * r, 0.0, 0.0]
            } else {
                let sh = y.sqrt();
                [
                    2.0 * c * sh / om - 2.0 * r,
                    -1.0 / sh,
                    sh + r * om / sh,
                ]
            }
        }
        Chart::T => {
            let emt = (-x).exp();
            let r = 1.0 - emt;
            if y <= 0.0 {
                [-2.0 * r * emt, 0.0, 0.0]
            } else {
                let sh = y.sqrt();
                [
                    2.0 * c * sh - 2.0 * r * emt,
                    -emt / sh,
                    emt * sh + r * emt * emt / sh,
                ]
            }
        }
        Chart::L => {
            let r = x.exp();
            let om = 1.0 - r;
            let phi = y;
            [
                (c - 1.0 / phi) / (om * om) - phi * (1.0 - 2.0 * r) / om,
                -1.0 / (phi * om),
                phi * r * r * om + r / phi,
            ]
        }
        Chart::Q => {
            let emt = (-x).exp();
            let r = 1.0 - emt;
            let q = y;
            [
                (c - r / q) / emt + q,
                -1.0 / q,
                q * emt * emt + r * emt / q,
            ]
        }
        Chart::S => {
            let sigma = x;
            let r = y;
            let den = c * sigma / (1.0 - r) - r;
            [
                sigma / den,
                -1.0 / den,
                (sigma * sigma + r * (1.0 - r)) / den,
            ]
        }
    }
}

/// Convert a chart state to physical coordinates.
fn to_physical(chart: Chart, x: f64, y: f64, z: f64, s: f64) -> RawSample {
    match chart {
        Chart::R => RawSample { r: x, h: y, z, s },
        Chart::T => {
            let r = -(-x).exp_m1();
            RawSample { r, h: y, z, s }
        }
        Chart::L => {
            let r = x.exp();
            let sh = y * r * (1.0 - r);
            RawSample { r, h: sh * sh, z, s }
        }
        Chart::Q => {
            let emt = (-x).exp();
            let r = 1.0 - emt;
            let sh = y * emt;
            RawSample { r, h: sh * sh, z, s }
        }
        Chart::S => RawSample { r: y, h: x * x, z, s },
    }
}

/// Signed difference against the bell and the two lambda bells, in whatever
/// variables are least cancellation-prone for the chart.
fn event_values(chart: Chart, x: f64, y: f64, c: f64, lm: f64, lp: f64) -> [f64; 3] {
    match chart {
        Chart::L => [y - 1.0 / c, y - lm, y - lp],
        Chart::Q => {
            let r = 1.0 - (-x).exp();
            [y - r / c, y - lm * r, y - lp * r]
        }
        _ => {
            let p = to_physical(chart, x, y, 0.0, 0.0);
            let rb = p.r * (1.0 - p.r);
            [
                p.h - rb * rb / (c * c),
                p.h - lm * lm * rb * rb,
                p.h - lp * lp * rb * rb,
            ]
        }
    }
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct StepOut {
    y_new: [f64; 3],
    err: f64,
    dy0: f64,
    dy1: f64,
}

fn dp_step(chart: Chart, x: f64, y: [f64; 3], dx: f64, c: f64, tol: &ToleranceSet) -> StepOut {
    let mut k = [[0.0f64; 3]; 7];
    k[0] = deriv(chart, x, y[0], c);
    for i in 1..7 {
        let mut yi = y;
        for (j, kj) in k.iter().enumerate().take(i) {
            for m in 0..3 {
                yi[m] += dx * DP_A[i][j] * kj[m];
            }
        }
        k[i] = deriv(chart, x + DP_C[i] * dx, yi[0], c);
    }
    let mut y5 = y;
    let mut y4 = y;
    for (j, kj) in k.iter().enumerate() {
        for m in 0..3 {
            y5[m] += dx * DP_B5[j] * kj[m];
            y4[m] += dx * DP_B4[j] * kj[m];
        }
    }
    let mut err = 0.0f64;
    for m in 0..3 {
        let atol = if m == 0 { tol.ode_abs } else { 100.0 * tol.ode_abs };
        let sc = atol + tol.ode_rel * y[m].abs().max(y5[m].abs());
        err = err.max(((y5[m] - y4[m]) / sc).abs());
    }
    StepOut {
        y_new: y5,
        err,
        dy0: k[0][0],
        dy1: k[6][0],
    }
}

/// Cubic Hermite evaluation of the main state inside a step.
fn hermite(x0: f64, y0: f64, m0: f64, x1: f64, y1: f64, m1: f64, x: f64) -> f64 {
    let d = x1 - x0;
    let u = (x - x0) / d;
    let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    let h10 = u * (1.0 - u) * (1.0 - u);
    let h01 = u * u * (3.0 - 2.0 * u);
    let h11 = u * u * (u - 1.0);
    h00 * y0 + h10 * d * m0 + h01 * y1 + h11 * d * m1
}

struct Segment {
    chart: Chart,
    x: f64,
    y: [f64; 3],
    x_stop: f64,
}

enum SegmentEnd {
    /// Reached `x_stop`.
    Reached([f64; 3]),
    /// Main state crossed zero inside the segment (chart T only); carries
    /// `(x_cross, z, s)`.
    HitZero(f64, f64, f64),
    /// Crossing-chart guard: `h` fell under a quarter of the bell (chart R,
    /// forward only); carries the full state at the guard.
    EnterSigma(f64, [f64; 3]),
    /// Sigma chart reached `sigma = 0` (transversal crossing); state carries
    /// `(r, z, s)`.
    SigmaZero([f64; 3]),
    /// Sigma chart left the small-`h` strip; carries `(sigma, state)`.
    SigmaExit(f64, [f64; 3]),
}

fn run_segment(seg: Segment, ctx: &mut Ctx, forward_guard: bool) -> Result<SegmentEnd> {
    let c = ctx.c;
    let (lm, lp) = match crate::speed::lambda_pm(c) {
        Ok(v) => v,
        Err(_) => (f64::NAN, f64::NAN), // c < 2: no lambda bells to track
    };
    let dir = (seg.x_stop - seg.x).signum();
    let max_dx = match seg.chart {
        Chart::R => 0.02,
        Chart::T => 0.25,
        Chart::L => 0.1,
        Chart::Q => 0.25,
        Chart::S => ((seg.x_stop - seg.x).abs() / 8.0).max(1e-12),
    };
    let mut x = seg.x;
    let mut y = seg.y;
    let mut dx = dir * (0.01f64).min(max_dx).min((seg.x_stop - seg.x).abs().max(1e-12));
    let mut ev_prev = event_values(seg.chart, x, y[0], c, lm, lp);

    loop {
        ctx.steps += 1;
        if ctx.steps > MAX_STEPS {
            let p = to_physical(seg.chart, x, y[0], y[1], y[2]);
            return Err(Error::Integration {
                r: p.r,
                h: p.h,
                reason: "step budget exhausted".into(),
            });
        }
        if (seg.x_stop - x) * dir <= 0.0 {
            return Ok(SegmentEnd::Reached(y));
        }
        if dx.abs() > (seg.x_stop - x).abs() {
            dx = seg.x_stop - x;
        }
        if dx.abs() < 1e-14 * (1.0 + x.abs()) {
            let p = to_physical(seg.chart, x, y[0], y[1], y[2]);
            return Err(Error::Integration {
                r: p.r,
                h: p.h,
                reason: "step size underflow".into(),
            });
        }
        let out = dp_step(seg.chart, x, y, dx, c, &ctx.tol);
        if !out.y_new[0].is_finite() || out.err > 1.0 {
            let shrink = if out.y_new[0].is_finite() {
                (0.9 * out.err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            dx *= shrink;
            continue;
        }
        // accepted
        let x_new = x + dx;
        let y_new = out.y_new;

        // chart-T zero crossing: locate by bisecting the Hermite interpolant
        if seg.chart == Chart::T && y_new[0] <= 0.0 && y[0] > 0.0 {
            let (mut a, mut b) = (x, x_new);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if hermite(x, y[0], out.dy0, x_new, y_new[0], out.dy1, m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let xc = 0.5 * (a + b);
            let frac = (xc - x) / dx;
            let zc = y[1] + frac * (y_new[1] - y[1]);
            let sc = y[2] + frac * (y_new[2] - y[2]);
            return Ok(SegmentEnd::HitZero(xc, zc, sc));
        }

        // bell / lambda-bell events
        let ev_new = event_values(seg.chart, x_new, y_new[0], c, lm, lp);
        for (idx, (&p0, &p1)) in ev_prev.iter().zip(ev_new.iter()).enumerate() {
            if !p0.is_finite() || !p1.is_finite() || p0 == 0.0 {
                continue;
            }
            if p0.signum() != p1.signum() {
                let (mut a, mut b) = (x, x_new);
                for _ in 0..70 {
                    let m = 0.5 * (a + b);
                    let ym = hermite(x, y[0], out.dy0, x_new, y_new[0], out.dy1, m);
                    let e = event_values(seg.chart, m, ym, c, lm, lp)[idx];
                    if e.signum() == p0.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let xm = 0.5 * (a + b);
                let ym = hermite(x, y[0], out.dy0, x_new, y_new[0], out.dy1, xm);
                let pm = to_physical(seg.chart, xm, ym, 0.0, 0.0);
                let e = match idx {
                    0 => TraceEvent::BellCross { r: pm.r },
                    1 => TraceEvent::LambdaMinusCross { r: pm.r },
                    _ => TraceEvent::LambdaPlusCross { r: pm.r },
                };
                ctx.push_event(e);
            }
        }
        ev_prev = ev_new;

        // record, densifying so linear interpolation of the chart state at
        // midpoints stays within interp_tol relative accuracy
        if ctx.opts.record {
            let dev = (dx * (out.dy0 - out.dy1) / 8.0).abs();
            let scale = ctx.opts.interp_tol * y_new[0].abs().max(1.0);
            let nsub = if dev > scale {
                ((dev / scale).sqrt().ceil() as usize).clamp(2, 16)
            } else {
                1
            };
            for j in 1..=nsub {
                let xi = x + dx * (j as f64) / (nsub as f64);
                let (yi, zi, si) = if j == nsub {
                    (y_new[0], y_new[1], y_new[2])
                } else {
                    let f = (j as f64) / (nsub as f64);
                    (
                        hermite(x, y[0], out.dy0, x_new, y_new[0], out.dy1, xi),
                        y[1] + f * (y_new[1] - y[1]),
                        y[2] + f * (y_new[2] - y[2]),
                    )
                };
                ctx.push_sample(to_physical(seg.chart, xi, yi, zi, si));
            }
        }

        // chart-specific guards
        match seg.chart {
            Chart::R if forward_guard => {
                let r = x_new;
                let b4 = bell(c, r).unwrap_or(0.0) / 4.0;
                if y_new[0] > 0.0 && y_new[0] < b4 {
                    return Ok(SegmentEnd::EnterSigma(x_new, y_new));
                }
            }
            Chart::S => {
                let sigma = x_new;
                let r = y_new[0];
                if dir < 0.0 && sigma <= 1e-300 {
                    return Ok(SegmentEnd::SigmaZero(y_new));
                }
                let exit = 0.2 * r * (1.0 - r) / c;
                if dir > 0.0 && sigma >= exit {
                    return Ok(SegmentEnd::SigmaExit(sigma, y_new));
                }
                let den = c * sigma / (1.0 - r) - r;
                if den.abs() < 0.4 * r {
                    // trajectory parallels the bell: bail back to chart R
                    return Ok(SegmentEnd::SigmaExit(sigma, y_new));
                }
            }
            _ => {}
        }

        x = x_new;
        y = y_new;
        let grow = (0.9 * out.err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        dx = (dx * grow).clamp(-max_dx, max_dx);
        if dx == 0.0 {
            dx = dir * 1e-12;
        }
    }
}

/// Integrate from `(r0, h0)` in `direction` with the given options.
pub(crate) fn shoot(
    c: f64,
    r0: f64,
    h0: f64,
    direction: Direction,
    tol: &ToleranceSet,
    opts: &ShotOptions,
) -> Result<Shot> {
    let mut ctx = Ctx {
        c,
        tol: *tol,
        opts: *opts,
        samples: Vec::new(),
        events: Vec::new(),
        steps: 0,
    };
    ctx.push_sample(RawSample {
        r: r0,
        h: h0,
        z: 0.0,
        s: 0.0,
    });

    let end = match direction {
        Direction::TowardZero => toward_zero(&mut ctx, r0, h0)?,
        Direction::TowardOne => toward_one(&mut ctx, r0, h0)?,
    };
    let endpoint = end.1;
    Ok(Shot {
        direction,
        samples: std::mem::take(&mut ctx.samples),
        events: std::mem::take(&mut ctx.events),
        end: end.0,
        endpoint,
        interp_tol: opts.interp_tol,
    })
}

/// Emit analytic negative-branch samples between two radii (either order).
fn record_negative(ctx: &mut Ctx, k: f64, r_from: f64, r_to: f64, z: f64, s: f64) {
    if !ctx.opts.record {
        return;
    }
    let n = 256;
    for i in 1..=n {
        let r = r_from + (r_to - r_from) * (i as f64) / (n as f64);
        ctx.push_sample(RawSample {
            r,
            h: k - r * r,
            z,
            s,
        });
    }
}

type EndState = (RawSample, EndpointReport);

fn zero_threshold(ctx: &Ctx) -> f64 {
    ctx.tol.zero_threshold(ctx.opts.r_cut0)
}

fn toward_zero(ctx: &mut Ctx, r0: f64, h0: f64) -> Result<EndState> {
    let c = ctx.c;
    let r_cut = ctx.opts.r_cut0;
    let mut z = 0.0;
    let mut s = 0.0;

    // Negative branch first: h(r) = k - r² with k = h0 + r0².
    let (mut chart, mut x, mut y): (Chart, f64, [f64; 3]);
    if h0 <= 0.0 {
        let k = h0 + r0 * r0;
        let rz2 = k;
        if rz2 <= r_cut * r_cut {
            // stays on the branch (the exact parabola when k = 0)
            record_negative(ctx, k, r0, r_cut, z, s);
            let h_end = k - r_cut * r_cut;
            let p = RawSample {
                r: r_cut,
                h: h_end,
                z: f64::NAN,
                s: f64::NAN,
            };
            let rep = EndpointReport {
                cutoff: r_cut,
                h_at_cutoff: h_end,
                behavior: EndBehavior::Negative { value: h_end },
                satisfies_zero: h_end.abs() < zero_threshold(ctx),
            };
            return Ok((p, rep));
        }
        let rz = rz2.sqrt();
        record_negative(ctx, k, r0, rz, z, s);
        ctx.push_event(TraceEvent::ZeroCross { r: rz });
        // leave zero backward through the sigma chart
        chart = Chart::S;
        x = 0.0;
        y = [rz, z, s];
    } else if r0 > R_TO_T {
        chart = Chart::T;
        x = -(1.0 - r0).ln();
        y = [h0, z, s];
    } else if r0 < R_TO_L {
        chart = Chart::L;
        x = r0.ln();
        y = [h0.sqrt() / (r0 * (1.0 - r0)), z, s];
    } else {
        chart = Chart::R;
        x = r0;
        y = [h0, z, s];
    }

    loop {
        match chart {
            Chart::S => {
                let r_here = y[0];
                let sig_cap = 0.5 * r_here * (1.0 - r_here) / c;
                let seg = Segment {
                    chart,
                    x,
                    y,
                    x_stop: sig_cap,
                };
                match run_segment(seg, ctx, false)? {
                    SegmentEnd::Reached(ynew) => {
                        let sigma = sig_cap;
                        let p = to_physical(Chart::S, sigma, ynew[0], ynew[1], ynew[2]);
                        z = p.z;
                        s = p.s;
                        if p.r < R_TO_L {
                            chart = Chart::L;
                            x = p.r.ln();
                            y = [sigma / (p.r * (1.0 - p.r)), z, s];
                        } else if p.r > R_TO_T {
                            chart = Chart::T;
                            x = -(1.0 - p.r).ln();
                            y = [p.h, z, s];
                        } else {
                            chart = Chart::R;
                            x = p.r;
                            y = [p.h, z, s];
                        }
                    }
                    SegmentEnd::SigmaExit(sigma, ynew) => {
                        let p = to_physical(Chart::S, sigma, ynew[0], ynew[1], ynew[2]);
                        z = p.z;
                        s = p.s;
                        if p.r < R_TO_L {
                            chart = Chart::L;
                            x = p.r.ln();
                            y = [sigma / (p.r * (1.0 - p.r)), z, s];
                        } else if p.r > R_TO_T {
                            chart = Chart::T;
                            x = -(1.0 - p.r).ln();
                            y = [p.h, z, s];
                        } else {
                            chart = Chart::R;
                            x = p.r;
                            y = [p.h, z, s];
                        }
                    }
                    _ => unreachable!("sigma chart backward only exits by reaching or guard"),
                }
            }
            Chart::T => {
                let seg = Segment {
                    chart,
                    x,
                    y,
                    x_stop: T_AT_BOUNDARY,
                };
                match run_segment(seg, ctx, false)? {
                    SegmentEnd::Reached(ynew) => {
                        chart = Chart::R;
                        x = R_TO_T;
                        y = ynew;
                    }
                    _ => unreachable!("no zero guard backward"),
                }
            }
            Chart::R => {
                let seg = Segment {
                    chart,
                    x,
                    y,
                    x_stop: R_TO_L,
                };
                match run_segment(seg, ctx, false)? {
                    SegmentEnd::Reached(ynew) => {
                        if ynew[0] <= 0.0 {
                            return Err(Error::Integration {
                                r: R_TO_L,
                                h: ynew[0],
                                reason: "backward trace lost positivity".into(),
                            });
                        }
                        chart = Chart::L;
                        x = R_TO_L.ln();
                        y = [ynew[0].sqrt() / (R_TO_L * (1.0 - R_TO_L)), ynew[1], ynew[2]];
                    }
                    _ => unreachable!(),
                }
            }
            Chart::L => {
                let seg = Segment {
                    chart,
                    x,
                    y,
                    x_stop: r_cut.ln(),
                };
                match run_segment(seg, ctx, false)? {
                    SegmentEnd::Reached(ynew) => {
                        let p = to_physical(Chart::L, r_cut.ln(), ynew[0], ynew[1], ynew[2]);
                        let theta = zero_threshold(ctx);
                        let behavior = if p.h < theta {
                            EndBehavior::Quadratic { mu: ynew[0] }
                        } else {
                            EndBehavior::Positive { value: p.h }
                        };
                        let rep = EndpointReport {
                            cutoff: r_cut,
                            h_at_cutoff: p.h,
                            behavior,
                            satisfies_zero: p.h < theta,
                        };
                        return Ok((p, rep));
                    }
                    _ => unreachable!(),
                }
            }
            Chart::Q => unreachable!("Q chart is driven by small_tail_shot"),
        }
    }
}

fn toward_one(ctx: &mut Ctx, r0: f64, h0: f64) -> Result<EndState> {
    let c = ctx.c;
    let t_max = ctx.opts.t_max;

    let finish_negative = |ctx: &mut Ctx, k: f64, r_from: f64, z: f64, s: f64| -> EndState {
        record_negative(ctx, k, r_from, 1.0, z, s);
        let h_end = k - 1.0;
        let p = RawSample {
            r: 1.0,
            h: h_end,
            z: f64::NAN,
            s: f64::NAN,
        };
        let rep = EndpointReport {
            cutoff: 0.0,
            h_at_cutoff: h_end,
            behavior: EndBehavior::Negative { value: h_end },
            satisfies_zero: h_end.abs() < zero_threshold(ctx),
        };
        (p, rep)
    };

    let (mut chart, mut x, mut y): (Chart, f64, [f64; 3]);
    if h0 < 0.0 {
        let k = h0 + r0 * r0;
        return Ok(finish_negative(ctx, k, r0, 0.0, 0.0));
    } else if h0 == 0.0 {
        // tie-break: the equation forces h' = -2r here, a downhill crossing
        ctx.push_event(TraceEvent::ZeroCross { r: r0 });
        return Ok(finish_negative(ctx, r0 * r0, r0, 0.0, 0.0));
    } else if r0 < R_TO_L {
        chart = Chart::L;
        x = r0.ln();
        y = [h0.sqrt() / (r0 * (1.0 - r0)), 0.0, 0.0];
    } else if r0 > R_TO_T {
        chart = Chart::T;
        x = -(1.0 - r0).ln();
        y = [h0, 0.0, 0.0];
    } else {
        chart = Chart::R;
        x = r0;
        y = [h0, 0.0, 0.0];
    }

    loop {
        match chart {
            Chart::L => {
                let seg = Segment {
                    chart,
                    x,
                    y,
                    x_stop: TAU_AT_BOUNDARY,
                };
                match run_segment(seg, ctx, false)? {
                    SegmentEnd::Reached(ynew) => {
                        let p = to_physical(Chart::L, TAU_AT_BOUNDARY, ynew[0], ynew[1], ynew[2]);
                        chart = Chart::R;
                        x = p.r;
                        y = [p.h, p.z, p.s];
                    }
                    _ => unreachable!(),
                }
            }
            Chart::R => {
                let seg = Segment {
                    chart,
                    x,
                    y,
                    x_stop: R_TO_T,
                };
                match run_segment(seg, ctx, true)? {
                    SegmentEnd::Reached(ynew) => {
                        chart = Chart::T;
                        x = T_AT_BOUNDARY;
                        y = ynew;
                    }
                    SegmentEnd::EnterSigma(r_here, ynew) => {
                        chart = Chart::S;
                        x = ynew[0].sqrt();
                        y = [r_here, ynew[1], ynew[2]];
                    }
                    _ => unreachable!(),
                }
            }
            Chart::S => {
                let seg = Segment {
                    chart,
                    x,
                    y,
                    x_stop: 0.0,
                };
                match run_segment(seg, ctx, false)? {
                    SegmentEnd::SigmaZero(ynew) | SegmentEnd::Reached(ynew) => {
                        let rz = ynew[0];
                        ctx.push_event(TraceEvent::ZeroCross { r: rz });
                        return Ok(finish_negative(ctx, rz * rz, rz, ynew[1], ynew[2]));
                    }
                    SegmentEnd::SigmaExit(sigma, ynew) => {
                        // near-tangent case: back to chart R above the guard
                        let p = to_physical(Chart::S, sigma, ynew[0], ynew[1], ynew[2]);
                        chart = Chart::R;
                        x = p.r;
                        y = [p.h, p.z, p.s];
                    }
                    _ => unreachable!(),
                }
            }
            Chart::T => {
                let seg = Segment {
                    chart,
                    x,
                    y,
                    x_stop: t_max,
                };
                match run_segment(seg, ctx, false)? {
                    SegmentEnd::Reached(ynew) => {
                        let p = to_physical(Chart::T, t_max, ynew[0], ynew[1], ynew[2]);
                        let theta = zero_threshold(ctx);
                        let behavior = if p.h > 1.0 {
                            EndBehavior::LogSquare {
                                kappa: p.h.sqrt() / c - t_max,
                            }
                        } else if p.h < theta {
                            EndBehavior::Quadratic {
                                mu: p.h.sqrt() / (p.r * (1.0 - p.r)),
                            }
                        } else {
                            EndBehavior::Positive { value: p.h }
                        };
                        let rep = EndpointReport {
                            cutoff: (-t_max).exp(),
                            h_at_cutoff: p.h,
                            behavior,
                            satisfies_zero: p.h.abs() < theta,
                        };
                        return Ok((p, rep));
                    }
                    SegmentEnd::HitZero(tc, zc, sc) => {
                        let rz = -(-tc).exp_m1();
                        ctx.push_event(TraceEvent::ZeroCross { r: rz });
                        return Ok(finish_negative(ctx, rz * rz, rz, zc, sc));
                    }
                    _ => unreachable!(),
                }
            }
            Chart::Q => unreachable!(),
        }
    }
}

/// Asymptotic seed for the small-solution tail: `q = sqrt(h) e^t` at `t0`
/// from the two-term expansion `q = (1 + c v)/c`,
/// `v = A e^{-t} + B e^{-2t}`, `A = -(c²+1)/c³`, `B = A (c²-2)/c²`.
pub(crate) fn small_tail_seed(c: f64, t0: f64) -> f64 {
    let a = -(c * c + 1.0) / (c * c * c);
    let b = a * (c * c - 2.0) / (c * c);
    let v = a * (-t0).exp() + b * (-2.0 * t0).exp();
    (1.0 + c * v) / c
}

/// Integrates the small-solution tail backward in the `q` chart from the
/// asymptotic seed at `t_hi` down to `t_lo`, recording samples.
///
/// Against the backward flow the seed error is forgotten at a doubly
/// exponential rate, so the returned segment is the tail of `h0` itself.
pub(crate) fn small_tail_shot(
    c: f64,
    t_hi: f64,
    t_lo: f64,
    tol: &ToleranceSet,
    opts: &ShotOptions,
) -> Result<Shot> {
    q_chart_shot(c, t_hi, small_tail_seed(c, t_hi), t_lo, tol, opts)
}

/// Backward `q`-chart run from an arbitrary seed `q(t_hi) = q0`; also used
/// by tests to drive independent comparison-function seeds.
pub(crate) fn q_chart_shot(
    c: f64,
    t_hi: f64,
    q0: f64,
    t_lo: f64,
    tol: &ToleranceSet,
    opts: &ShotOptions,
) -> Result<Shot> {
    let mut ctx = Ctx {
        c,
        tol: *tol,
        opts: *opts,
        samples: Vec::new(),
        events: Vec::new(),
        steps: 0,
    };
    ctx.push_sample(to_physical(Chart::Q, t_hi, q0, 0.0, 0.0));
    let seg = Segment {
        chart: Chart::Q,
        x: t_hi,
        y: [q0, 0.0, 0.0],
        x_stop: t_lo,
    };
    match run_segment(seg, &mut ctx, false)? {
        SegmentEnd::Reached(ynew) => {
            let p = to_physical(Chart::Q, t_lo, ynew[0], ynew[1], ynew[2]);
            let rep = EndpointReport {
                cutoff: (-t_hi).exp(),
                h_at_cutoff: (q0 * (-t_hi).exp()).powi(2),
                behavior: EndBehavior::Quadratic { mu: q0 },
                satisfies_zero: true,
            };
            Ok(Shot {
                direction: Direction::TowardZero,
                samples: std::mem::take(&mut ctx.samples),
                events: std::mem::take(&mut ctx.events),
                end: p,
                endpoint: rep,
                interp_tol: opts.interp_tol,
            })
        }
        _ => Err(Error::Integration {
            r: 0.0,
            h: 0.0,
            reason: "small-solution tail segment interrupted".into(),
        }),
    }
}
