//! Command implementations behind the `degen-kpp` binary: reproducible
//! computations with CSV/JSON/SVG outputs and config echoing.
//!
//! Every command resolves a [`RunConfig`] (defaults, then the optional
//! `DEGEN_KPP_CONFIG` file, then an explicit `key=value` config file, then
//! flags), embeds the resolved config in every output, and is fully
//! deterministic for a given configuration.

use crate::error::{Error, Result};
use crate::kernel::{focusing_order, Kernel};
use crate::ode::{self, HTrace};
use crate::output::{self, csv_two_columns, json_report, render_svg, Curve, Figure, Scale};
use crate::shooting::{
    self, classify, small_speed_scan, solve_large_iteration, solve_small, threshold_table, WaveTag,
};
use crate::speed::{bell, lambda_bell, lambda_pm, Speed};
use crate::tolerance::ToleranceSet;
use crate::verify::{
    bootstrap_kn, bootstrap_mn, check_subsolution, check_supersolution, epsilon_recursion,
    tw_residual, validity_radius, weak_residual, Bump, CandidateFunction, Certificate,
    CertificateKind,
};
use crate::wave::{
    left_tail, reconstruct_sampled, right_tail_rate, speed_identity, LeftTailResult, WaveProfile,
    ZStar,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Which distinguished wave a `wave` command refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialWave {
    Small,
    Large,
    Max,
}

impl std::str::FromStr for SpecialWave {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(SpecialWave::Small),
            "large" => Ok(SpecialWave::Large),
            "max" => Ok(SpecialWave::Max),
            other => Err(Error::Config(format!(
                "unknown special wave `{other}` (expected small|large|max)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureKind {
    Waves,
    Phase,
    PhaseLog,
}

impl std::str::FromStr for FigureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "waves" => Ok(FigureKind::Waves),
            "phase" => Ok(FigureKind::Phase),
            "phase-log" => Ok(FigureKind::PhaseLog),
            other => Err(Error::Config(format!(
                "unknown figure kind `{other}` (expected waves|phase|phase-log)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Subsuper,
    Recursions,
    Residuals,
    Focusing,
    All,
}

impl std::str::FromStr for SuiteKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subsuper" => Ok(SuiteKind::Subsuper),
            "recursions" => Ok(SuiteKind::Recursions),
            "residuals" => Ok(SuiteKind::Residuals),
            "focusing" => Ok(SuiteKind::Focusing),
            "all" => Ok(SuiteKind::All),
            other => Err(Error::Config(format!(
                "unknown suite `{other}` (expected subsuper|recursions|residuals|focusing|all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::Config(format!(
                "unknown format `{other}` (expected csv|json|svg)"
            ))),
        }
    }
}

/// Fully resolved run configuration, echoed into every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub c: f64,
    pub alpha: Option<f64>,
    pub special: Option<SpecialWave>,
    pub tol: ToleranceSet,
    pub samples: usize,
    pub out: Option<String>,
    pub format: OutputFormat,
    pub which: Option<FigureKind>,
    pub suite: Option<SuiteKind>,
    pub eps: f64,
    /// Explicit shooting values for figure curves (empty = paper defaults).
    pub alphas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            c: 2.1,
            alpha: None,
            special: None,
            tol: ToleranceSet::default(),
            samples: crate::wave::DEFAULT_PROFILE_SAMPLES,
            out: None,
            format: OutputFormat::Json,
            which: None,
            suite: None,
            eps: 0.1,
            alphas: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Applies one `key=value` setting (config-file key or flag name).
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse `{v}` as a number for `{key}`")))
        };
        match key.trim() {
            "c" => self.c = parse_f64(value)?,
            "alpha" => self.alpha = Some(parse_f64(value)?),
            "special" => self.special = Some(value.trim().parse()?),
            "tol-ode" | "tol_ode" => {
                let v = parse_f64(value)?;
                self.tol.ode_rel = v;
                self.tol.ode_abs = v * 1e-2;
            }
            "tol-bisect" | "tol_bisect" => self.tol.bisect = parse_f64(value)?,
            "tol-quad" | "tol_quad" => self.tol.quad = parse_f64(value)?,
            "samples" => {
                self.samples = value.trim().parse::<usize>().map_err(|_| {
                    Error::Config(format!("cannot parse `{value}` as a sample count"))
                })?
            }
            "out" => self.out = Some(value.trim().to_string()),
            "format" => self.format = value.trim().parse()?,
            "which" => self.which = Some(value.trim().parse()?),
            "suite" => self.suite = Some(value.trim().parse()?),
            "eps" => self.eps = parse_f64(value)?,
            "alphas" => {
                self.alphas = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_f64(s))
                    .collect::<Result<Vec<f64>>>()?
            }
            other => {
                return Err(Error::Config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Loads `key=value` lines (# comments allowed) from a config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.apply_kv(k, v)?;
        }
        Ok(())
    }

    /// Resolves defaults + `DEGEN_KPP_CONFIG` + explicit config file.
    pub fn resolve(config_file: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Ok(env_path) = std::env::var("DEGEN_KPP_CONFIG") {
            if !env_path.is_empty() {
                cfg.apply_file(Path::new(&env_path))?;
            }
        }
        if let Some(p) = config_file {
            cfg.apply_file(p)?;
        }
        Ok(cfg)
    }

    fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("artifact".into(), format!("degen-kpp {}", crate::VERSION)),
            ("c".into(), output::fmt_f64(self.c)),
            ("ode_rel".into(), output::fmt_f64(self.tol.ode_rel)),
            ("ode_abs".into(), output::fmt_f64(self.tol.ode_abs)),
            ("bisect".into(), output::fmt_f64(self.tol.bisect)),
            ("quad".into(), output::fmt_f64(self.tol.quad)),
            ("samples".into(), self.samples.to_string()),
        ];
        if let Some(a) = self.alpha {
            h.push(("alpha".into(), output::fmt_f64(a)));
        }
        if let Some(s) = self.special {
            h.push(("special".into(), format!("{s:?}").to_lowercase()));
        }
        h
    }
}

/// Result of one command: the JSON document for stdout, an overall pass
/// flag for the exit code, and any files written.
#[derive(Debug)]
pub struct CommandOutput {
    pub json: serde_json::Value,
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

/// `lambda`: speed constants as JSON. Rejects `c < 2` (no waves there).
pub fn cmd_lambda(cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.c < 2.0 {
        return Err(Error::Domain(format!(
            "no waves for c<2 (requested c = {})",
            cfg.c
        )));
    }
    let s = Speed::new(cfg.c)?;
    let payload = serde_json::json!({
        "c": s.c,
        "lambda_minus": s.lambda_minus,
        "lambda_plus": s.lambda_plus,
        "bell_top": s.bell_top,
        "lambda_plus_sq_over_16": s.lambda_plus * s.lambda_plus / 16.0,
    });
    let json = json_report("degen-kpp/lambda/1", cfg, &payload)?;
    let mut files = Vec::new();
    if let Some(out) = &cfg.out {
        let path = PathBuf::from(out);
        output::write_text(&path, &serde_json::to_string_pretty(&json)?)?;
        files.push(path);
    }
    Ok(CommandOutput {
        json,
        pass: true,
        files,
    })
}

/// `classify`: threshold table, plus the class of `alpha` when given.
pub fn cmd_classify(cfg: &RunConfig) -> Result<CommandOutput> {
    let table = threshold_table(cfg.c, &cfg.tol)?;
    let mut payload = serde_json::json!({ "table": serde_json::to_value(&table)? });
    if let Some(alpha) = cfg.alpha {
        let class = classify(cfg.c, alpha, &table, &cfg.tol)?;
        payload["alpha"] = serde_json::json!(alpha);
        payload["class"] = serde_json::json!(class.tag.to_string());
        payload["classification"] = serde_json::to_value(&class)?;
    }
    let json = json_report("degen-kpp/classify/1", cfg, &payload)?;
    let mut files = Vec::new();
    if let Some(out) = &cfg.out {
        let path = PathBuf::from(out);
        output::write_text(&path, &serde_json::to_string_pretty(&json)?)?;
        files.push(path);
    }
    Ok(CommandOutput {
        json,
        pass: true,
        files,
    })
}

/// Builds the generating trace for a wave request.
fn wave_trace(cfg: &RunConfig) -> Result<(HTrace, String)> {
    match (cfg.special, cfg.alpha) {
        (Some(SpecialWave::Small), _) => Ok((solve_small(cfg.c, &cfg.tol)?, "small".into())),
        (Some(SpecialWave::Large), _) => {
            let (tr, _) = solve_large_iteration(cfg.c, &cfg.tol)?;
            Ok((tr, "large".into()))
        }
        (Some(SpecialWave::Max), _) => {
            let am = shooting::alpha_max(cfg.c, &cfg.tol)?;
            Ok((
                ode::shoot_both(cfg.c, am.last_in, &cfg.tol)?,
                "max".into(),
            ))
        }
        (None, Some(alpha)) => Ok((
            ode::shoot_both(cfg.c, alpha, &cfg.tol)?,
            format!("alpha={alpha}"),
        )),
        (None, None) => Err(Error::Config(
            "wave command needs --alpha or --special {small|large|max}".into(),
        )),
    }
}

/// Default weak-formulation test bumps spread over the resolved range; for
/// saturated profiles the first bump straddles the front so the boundary
/// term is exercised.
pub fn default_test_bumps(profile: &WaveProfile) -> Vec<Bump> {
    let z_lo = profile.samples.first().map(|s| s.z).unwrap_or(-1.0);
    let z_hi = profile.samples.last().map(|s| s.z).unwrap_or(1.0);
    let hi = z_hi.min(10.0);
    let mut bumps = Vec::with_capacity(5);
    match profile.z_star {
        ZStar::Finite(zs) => {
            let w = ((hi - zs) / 8.0).min(1.0).max(0.2);
            bumps.push(Bump {
                center: zs,
                halfwidth: w,
                amplitude: 1.0,
            });
            for k in 0..4 {
                let center = zs + w + (hi - zs - 2.0 * w) * (k as f64 + 0.5) / 4.0;
                bumps.push(Bump {
                    center,
                    halfwidth: w,
                    amplitude: 1.0,
                });
            }
        }
        ZStar::MinusInfinity => {
            let lo = z_lo.max(-12.0);
            let w = (hi - lo) / 12.0;
            for k in 0..5 {
                let center = lo + w + (hi - lo - 2.0 * w) * k as f64 / 4.0;
                bumps.push(Bump {
                    center,
                    halfwidth: w,
                    amplitude: 1.0,
                });
            }
        }
    }
    bumps
}

#[derive(Debug, Serialize)]
struct WaveReport {
    label: String,
    class: String,
    z_star: String,
    z_star_value: Option<f64>,
    alpha: f64,
    right_tail_rate: f64,
    left_tail: LeftTailResult,
    speed_identity: f64,
    speed_identity_rel_err: f64,
    tw_residual: f64,
    weak_residual_max: f64,
    sample_count: usize,
}

/// `wave`: CSV of `(z, u)` plus a JSON report with tails and residuals.
pub fn cmd_wave(cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.c < 2.0 {
        return Err(Error::Domain(format!(
            "no waves for c<2 (requested c = {})",
            cfg.c
        )));
    }
    let (trace, label) = wave_trace(cfg)?;
    if trace.zero_crossing().is_some()
        || trace.left.map(|l| !l.satisfies_zero).unwrap_or(false)
    {
        return Err(Error::Domain(format!(
            "no wave for this alpha (h(1/2) = {:?})",
            trace.alpha
        )));
    }
    let profile = reconstruct_sampled(&trace, &cfg.tol, cfg.samples)?;
    let rate = right_tail_rate(&profile, &cfg.tol)?;
    let lt = left_tail(&profile, &cfg.tol)?;
    let si = speed_identity(&trace, &cfg.tol)?;
    let twr = tw_residual(&profile, cfg.c)?;
    let weak_max = default_test_bumps(&profile)
        .iter()
        .map(|b| weak_residual(&profile, cfg.c, b, &cfg.tol))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);

    let report = WaveReport {
        label,
        class: profile.kind.to_string(),
        z_star: profile.z_star.to_string(),
        z_star_value: profile.z_star.finite(),
        alpha: profile.alpha,
        right_tail_rate: rate,
        left_tail: lt,
        speed_identity: si,
        speed_identity_rel_err: (si - cfg.c).abs() / cfg.c,
        tw_residual: twr,
        weak_residual_max: weak_max,
        sample_count: profile.samples.len(),
    };
    let json = json_report("degen-kpp/wave/1", cfg, &report)?;

    let mut files = Vec::new();
    if let Some(out) = &cfg.out {
        let stem = out.trim_end_matches(".csv").trim_end_matches(".json");
        let rows: Vec<(f64, f64)> = profile.samples.iter().map(|s| (s.z, s.u)).collect();
        let csv = csv_two_columns(&cfg.header(), ("z", "u"), &rows);
        let csv_path = PathBuf::from(format!("{stem}.csv"));
        output::write_text(&csv_path, &csv)?;
        files.push(csv_path);
        let json_path = PathBuf::from(format!("{stem}.json"));
        output::write_text(&json_path, &serde_json::to_string_pretty(&json)?)?;
        files.push(json_path);
    }
    Ok(CommandOutput {
        json,
        pass: true,
        files,
    })
}

/// The four paper curves at a given speed: two convex saturated waves, one
/// convex-concave-convex saturated wave, and the non-saturated wave.
pub fn default_figure_alphas(c: f64, tol: &ToleranceSet) -> Result<Vec<(String, f64)>> {
    let h0 = solve_small(c, tol)?;
    let h0_half = h0.alpha.expect("anchored");
    let (h_tr, _) = solve_large_iteration(c, tol)?;
    let h_half = h_tr.alpha.expect("anchored");
    let (_, lp) = lambda_pm(c)?;
    let bell_top = 1.0 / (16.0 * c * c);
    Ok(vec![
        ("(1) saturated type (c)".into(), h_half),
        ("(2) saturated type (c)".into(), lp * lp / 16.0),
        ("(3) saturated type (a)".into(), (h0_half * bell_top).sqrt()),
        ("(4) non-saturated".into(), h0_half),
    ])
}

const CURVE_COLORS: [&str; 6] = [
    "#000000", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
];

/// `figure`: CSV bundle plus a self-contained SVG.
pub fn cmd_figure(cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.c < 2.0 {
        return Err(Error::Domain(format!(
            "no waves for c<2 (requested c = {})",
            cfg.c
        )));
    }
    let which = cfg.which.unwrap_or(FigureKind::Waves);
    let labeled: Vec<(String, f64)> = if cfg.alphas.is_empty() {
        default_figure_alphas(cfg.c, &cfg.tol)?
    } else {
        cfg.alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| (format!("alpha[{i}]={a}"), a))
            .collect()
    };

    // traces; the last default curve is the small solution and must be
    // built by its dedicated construction, not forward shooting
    let mut traces: Vec<(String, HTrace)> = Vec::new();
    let h0 = solve_small(cfg.c, &cfg.tol)?;
    let h0_half = h0.alpha.expect("anchored");
    for (label, alpha) in &labeled {
        let band = cfg.tol.bisect * alpha.max(1.0);
        let tr = if (alpha - h0_half).abs() <= band {
            h0.clone()
        } else {
            ode::shoot_both(cfg.c, *alpha, &cfg.tol)?
        };
        traces.push((label.clone(), tr));
    }

    let stem = cfg
        .out
        .clone()
        .unwrap_or_else(|| format!("figure-c{}-{which:?}", cfg.c).to_lowercase());
    let stem = stem.trim_end_matches(".svg").trim_end_matches(".csv").to_string();

    let mut files = Vec::new();
    let mut curves: Vec<Curve> = Vec::new();
    let fig = match which {
        FigureKind::Waves => {
            for (i, (label, tr)) in traces.iter().enumerate() {
                let profile = reconstruct_sampled(tr, &cfg.tol, cfg.samples)?;
                let pts: Vec<(f64, f64)> = profile
                    .samples
                    .iter()
                    .filter(|s| s.z >= -6.0 && s.z <= 10.0)
                    .map(|s| (s.z, s.u))
                    .collect();
                let rows: Vec<(f64, f64)> =
                    profile.samples.iter().map(|s| (s.z, s.u)).collect();
                let path = PathBuf::from(format!("{stem}-wave-{}.csv", i + 1));
                output::write_text(
                    &path,
                    &csv_two_columns(&cfg.header(), ("z", "u"), &rows),
                )?;
                files.push(path);
                curves.push(Curve {
                    label: label.clone(),
                    points: pts,
                    color: CURVE_COLORS[i % CURVE_COLORS.len()].into(),
                    dashed: false,
                });
            }
            Figure {
                title: format!("Travelling wave profiles, c = {}", cfg.c),
                x_label: "z".into(),
                y_label: "u(z)".into(),
                x_scale: Scale::Linear,
                y_scale: Scale::Linear,
                curves,
            }
        }
        FigureKind::Phase | FigureKind::PhaseLog => {
            let log = which == FigureKind::PhaseLog;
            for (i, (label, tr)) in traces.iter().enumerate() {
                let pts: Vec<(f64, f64)> = tr
                    .samples
                    .iter()
                    .filter(|s| s.h > 0.0 || !log)
                    .map(|s| (s.r, s.h))
                    .collect();
                let rows: Vec<(f64, f64)> = tr.samples.iter().map(|s| (s.r, s.h)).collect();
                let path = PathBuf::from(format!("{stem}-h-{}.csv", i + 1));
                output::write_text(
                    &path,
                    &csv_two_columns(&cfg.header(), ("r", "h"), &rows),
                )?;
                files.push(path);
                curves.push(Curve {
                    label: label.clone(),
                    points: pts,
                    color: CURVE_COLORS[i % CURVE_COLORS.len()].into(),
                    dashed: false,
                });
            }
            // reference curves: the bell, both lambda bells, the log² bound
            let (lm, lp) = lambda_pm(cfg.c)?;
            let refs: Vec<(String, Box<dyn Fn(f64) -> f64>)> = vec![
                (
                    "bell r²(1-r)²/c²".into(),
                    Box::new({
                        let c = cfg.c;
                        move |r| bell(c, r).unwrap_or(0.0)
                    }),
                ),
                (
                    "(λ⁻)² r²(1-r)²".into(),
                    Box::new(move |r| lambda_bell(lm, r)),
                ),
                (
                    "(λ⁺)² r²(1-r)²".into(),
                    Box::new(move |r| lambda_bell(lp, r)),
                ),
                (
                    "c² log²(1-r)".into(),
                    Box::new({
                        let c = cfg.c;
                        move |r: f64| {
                            let l = (1.0f64 - r).ln();
                            c * c * l * l
                        }
                    }),
                ),
            ];
            for (label, f) in refs {
                let pts: Vec<(f64, f64)> = (1..1000)
                    .map(|k| {
                        let r = if log {
                            1e-8f64.powf(1.0 - k as f64 / 1000.0) * (1.0 - 1e-8)
                        } else {
                            k as f64 / 1000.0
                        };
                        (r, f(r))
                    })
                    .filter(|&(_, h)| h.is_finite())
                    .collect();
                curves.push(Curve {
                    label,
                    points: pts,
                    color: "#888888".into(),
                    dashed: true,
                });
            }
            Figure {
                title: format!(
                    "Phase plane{}, c = {}",
                    if log { " (log-log)" } else { "" },
                    cfg.c
                ),
                x_label: "r".into(),
                y_label: "h(r)".into(),
                x_scale: if log { Scale::Log10 } else { Scale::Linear },
                y_scale: if log { Scale::Log10 } else { Scale::Linear },
                curves,
            }
        }
    };
    let svg_path = PathBuf::from(format!("{stem}.svg"));
    output::write_text(&svg_path, &render_svg(&fig))?;
    files.push(svg_path);

    let payload = serde_json::json!({
        "which": format!("{which:?}").to_lowercase(),
        "alphas": labeled.iter().map(|(l, a)| serde_json::json!({"label": l, "alpha": a})).collect::<Vec<_>>(),
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let json = json_report("degen-kpp/figure/1", cfg, &payload)?;
    Ok(CommandOutput {
        json,
        pass: true,
        files,
    })
}

#[derive(Debug, Serialize)]
struct SuiteResult {
    name: String,
    pass: bool,
    detail: serde_json::Value,
}

/// `verify`: pass/fail JSON with margins for the requested suite.
pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput> {
    let suite = cfg.suite.unwrap_or(SuiteKind::All);
    let mut suites: Vec<SuiteResult> = Vec::new();
    match suite {
        SuiteKind::Subsuper => suites.push(suite_subsuper(cfg)?),
        SuiteKind::Recursions => suites.push(suite_recursions(cfg)?),
        SuiteKind::Residuals => suites.push(suite_residuals(cfg)?),
        SuiteKind::Focusing => suites.push(suite_focusing(cfg)?),
        SuiteKind::All => {
            suites.push(suite_subsuper(cfg)?);
            suites.push(suite_recursions(cfg)?);
            suites.push(suite_residuals(cfg)?);
            suites.push(suite_focusing(cfg)?);
        }
    }
    let pass = suites.iter().all(|s| s.pass);
    let payload = serde_json::json!({
        "suites": suites,
        "pass": pass,
    });
    let json = json_report("degen-kpp/verify/1", cfg, &payload)?;
    let mut files = Vec::new();
    if let Some(out) = &cfg.out {
        let path = PathBuf::from(out);
        output::write_text(&path, &serde_json::to_string_pretty(&json)?)?;
        files.push(path);
    }
    Ok(CommandOutput { json, pass, files })
}

fn suite_subsuper(cfg: &RunConfig) -> Result<SuiteResult> {
    let c = if cfg.c >= 2.0 { cfg.c } else { 2.1 };
    let (lm, lp) = lambda_pm(c)?;
    let n = 257;
    let mut certs: Vec<Certificate> = Vec::new();

    certs.push(check_supersolution(
        CandidateFunction::LogSquare,
        c,
        (0.01, 0.99),
        n,
    )?);
    for lambda in [lm, 0.5 * (lm + lp), lp] {
        certs.push(check_subsolution(
            CandidateFunction::BellLambda { lambda },
            c,
            (0.01, 0.99),
            n,
        )?);
    }
    for lambda in [0.9 * lm, 1.1 * lp] {
        let g = CandidateFunction::BellLambda { lambda };
        let r_l = validity_radius(g, CertificateKind::Supersolution, c, 0.005, 4000)?;
        certs.push(check_supersolution(g, c, (0.005, r_l * 0.999), n)?);
    }
    certs.push(check_supersolution(
        CandidateFunction::BellScaled { eps: 0.05 },
        c,
        (0.9, 0.9999),
        n,
    )?);
    if c > 2.0 && c < 1.5 * std::f64::consts::SQRT_2 {
        // pick (alpha, beta) so the validity radius is numerically visible:
        // the margin ~ alpha*coeff*r^{1+beta} - 2c lambda- r^2 changes sign
        // at r* with r*^{1-beta} = alpha*coeff/(2c lambda-)
        let beta_lo = 1.0 / (lm * lm) - 1.0;
        let beta = beta_lo + 0.25 * (1.0 - beta_lo);
        let coeff = lm * (lm * (2.0 + beta) - c);
        let alpha = (1e-5f64).powf(1.0 - beta) * 2.0 * c * lm / coeff;
        let g = CandidateFunction::PowerBump { alpha, beta };
        let r_ab = validity_radius(g, CertificateKind::Supersolution, c, 1e-7, 4000)?;
        certs.push(check_supersolution(g, c, (1e-7, r_ab * 0.999), n)?);
    }
    let exact = check_supersolution(CandidateFunction::ExactNegative, c, (0.01, 0.99), n)?;
    let pass = certs.iter().all(|ct| ct.passed) && exact.exact_solution;
    certs.push(exact);
    Ok(SuiteResult {
        name: "subsuper".into(),
        pass,
        detail: serde_json::to_value(&certs)?,
    })
}

fn suite_recursions(cfg: &RunConfig) -> Result<SuiteResult> {
    let mut detail = serde_json::Map::new();
    let mut pass = true;
    if cfg.c < 2.0 {
        let (seq, first_neg) = bootstrap_mn(cfg.c, cfg.eps)?;
        detail.insert("m_sequence".into(), serde_json::to_value(&seq)?);
        detail.insert("first_negative_index".into(), serde_json::json!(first_neg));
    } else {
        let c = cfg.c;
        let mut kn = Vec::new();
        for r0 in [0.0, 0.1] {
            let om = (1.0 - r0) * (1.0 - r0);
            let root = (c + (c * c - 4.0 * om).sqrt()) / (2.0 * om);
            let limit = bootstrap_kn(c, r0, 2.0 * c / om)?;
            let ok = (limit - root).abs() < 1e-8 * root.max(1.0);
            pass &= ok;
            kn.push(serde_json::json!({
                "r0": r0, "limit": limit, "closed_form": root, "pass": ok
            }));
        }
        detail.insert("k_iterations".into(), serde_json::json!(kn));
        if c > 2.0 {
            let (seq, limit) = epsilon_recursion(c, 0.1)?;
            let ok = (limit - 1.0).abs() < 1e-8;
            pass &= ok;
            detail.insert(
                "epsilon_recursion".into(),
                serde_json::json!({"eps0": 0.1, "iterations": seq.len() - 1, "limit": limit, "pass": ok}),
            );
        }
    }
    Ok(SuiteResult {
        name: "recursions".into(),
        pass,
        detail: serde_json::Value::Object(detail),
    })
}

fn suite_residuals(cfg: &RunConfig) -> Result<SuiteResult> {
    let c = if cfg.c >= 2.0 { cfg.c } else { 2.1 };
    let mut cfg2 = cfg.clone();
    cfg2.c = c;
    let labeled = default_figure_alphas(c, &cfg.tol)?;
    let h0 = solve_small(c, &cfg.tol)?;
    let h0_half = h0.alpha.expect("anchored");
    let mut rows = Vec::new();
    let mut pass = true;
    for (label, alpha) in labeled {
        let band = cfg.tol.bisect * alpha.max(1.0);
        let tr = if (alpha - h0_half).abs() <= band {
            h0.clone()
        } else {
            ode::shoot_both(c, alpha, &cfg.tol)?
        };
        let coarse = reconstruct_sampled(&tr, &cfg.tol, cfg.samples / 2)?;
        let fine = reconstruct_sampled(&tr, &cfg.tol, cfg.samples)?;
        let tw_coarse = tw_residual(&coarse, c)?;
        let tw_fine = tw_residual(&fine, c)?;
        let order = (tw_coarse / tw_fine).log2().max(0.0);
        let weak: Vec<f64> = default_test_bumps(&fine)
            .iter()
            .map(|b| weak_residual(&fine, c, b, &cfg.tol))
            .collect::<Result<Vec<f64>>>()?;
        let weak_max = weak.iter().copied().fold(0.0f64, f64::max);
        let ok = tw_fine < 1e-4 && weak_max < 1e-3;
        pass &= ok;
        rows.push(serde_json::json!({
            "label": label,
            "alpha": alpha,
            "tw_residual_coarse": tw_coarse,
            "tw_residual": tw_fine,
            "refinement_order": order,
            "weak_residuals": weak,
            "weak_residual_max": weak_max,
            "pass": ok,
        }));
    }
    Ok(SuiteResult {
        name: "residuals".into(),
        pass,
        detail: serde_json::json!(rows),
    })
}

fn suite_focusing(cfg: &RunConfig) -> Result<SuiteResult> {
    let kernel = Kernel::gaussian();
    kernel.validate(&cfg.tol)?;
    let xs: Vec<f64> = (0..=160).map(|i| -4.0 + 8.0 * i as f64 / 160.0).collect();
    let f = |x: f64| (-x * x).exp();
    let fpp = |x: f64| (4.0 * x * x - 2.0) * (-x * x).exp();
    let report = focusing_order(
        &kernel,
        &f,
        &fpp,
        (-1e6, 1e6),
        &xs,
        &[0.2, 0.1, 0.05, 0.025],
        &cfg.tol,
    )?;
    let pass = report.slope >= 1.8 && report.slope <= 2.2;
    Ok(SuiteResult {
        name: "focusing".into(),
        pass,
        detail: serde_json::to_value(&report)?,
    })
}

/// `scan`: subcritical nonexistence sweep (exposed for completeness; the
/// verify suites call into the same machinery).
pub fn cmd_scan(cfg: &RunConfig, n_alphas: usize) -> Result<CommandOutput> {
    let grid = log_spaced(1e-4, 1.0, n_alphas);
    let report = small_speed_scan(cfg.c, &grid, &cfg.tol)?;
    let pass = report.all_certified;
    let json = json_report("degen-kpp/scan/1", cfg, &report)?;
    Ok(CommandOutput {
        json,
        pass,
        files: Vec::new(),
    })
}

/// Log-spaced grid including both endpoints.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Convenience used by tests and examples: classify report for one wave.
pub fn wave_tag_of(c: f64, alpha: f64, tol: &ToleranceSet) -> Result<WaveTag> {
    let table = threshold_table(c, tol)?;
    Ok(classify(c, alpha, &table, tol)?.tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_precedence_and_parsing() {
        let mut cfg = RunConfig::default();
        cfg.apply_kv("c", "2.5").unwrap();
        cfg.apply_kv("tol-ode", "1e-9").unwrap();
        cfg.apply_kv("alphas", "0.1, 0.2,0.3").unwrap();
        assert_eq!(cfg.c, 2.5);
        assert_eq!(cfg.tol.ode_rel, 1e-9);
        assert!((cfg.tol.ode_abs - 1e-11).abs() < 1e-24);
        assert_eq!(cfg.alphas, vec![0.1, 0.2, 0.3]);
        assert!(cfg.apply_kv("nope", "1").is_err());
        assert!(cfg.apply_kv("special", "tiny").is_err());
        cfg.apply_kv("special", "large").unwrap();
        assert_eq!(cfg.special, Some(SpecialWave::Large));
    }

    #[test]
    fn lambda_rejects_subcritical() {
        let mut cfg = RunConfig::default();
        cfg.c = 1.9;
        let err = cmd_lambda(&cfg).unwrap_err();
        assert!(err.to_string().contains("no waves for c<2"));
    }

    #[test]
    fn lambda_payload_values() {
        let mut cfg = RunConfig::default();
        cfg.c = 2.5;
        let out = cmd_lambda(&cfg).unwrap();
        assert!(out.pass);
        let v = &out.json;
        assert_eq!(v["schema"], "degen-kpp/lambda/1");
        assert!((v["lambda_minus"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((v["lambda_plus"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_spaced_grid_endpoints() {
        let g = log_spaced(1e-4, 1.0, 20);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[19] - 1.0).abs() < 1e-12);
    }
}
