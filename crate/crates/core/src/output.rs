//! Machine-readable output: CSV with lossless floats, versioned JSON
//! reports, and self-contained SVG figures (no plotting dependency).

use crate::error::Result;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Formats a float with 17 significant digits (lossless round-trip).
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Renders a two-column CSV with `# key = value` header comments echoing the
/// resolved configuration.
pub fn csv_two_columns(
    header: &[(String, String)],
    col_names: (&str, &str),
    rows: &[(f64, f64)],
) -> String {
    let mut out = String::with_capacity(rows.len() * 48 + 256);
    for (k, v) in header {
        let _ = writeln!(out, "# {k} = {v}");
    }
    let _ = writeln!(out, "{},{}", col_names.0, col_names.1);
    for (a, b) in rows {
        let _ = writeln!(out, "{},{}", fmt_f64(*a), fmt_f64(*b));
    }
    out
}

/// Wraps a JSON payload with the schema id, artifact version and config echo.
pub fn json_report<T: Serialize, C: Serialize>(
    schema: &str,
    config: &C,
    payload: &T,
) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(payload)?;
    let head = serde_json::json!({
        "schema": schema,
        "version": crate::VERSION,
        "config": serde_json::to_value(config)?,
    });
    if let (Some(obj), Some(headobj)) = (v.as_object_mut(), head.as_object()) {
        for (k, val) in headobj {
            obj.insert(k.clone(), val.clone());
        }
        Ok(v)
    } else {
        Ok(serde_json::json!({
            "schema": schema,
            "version": crate::VERSION,
            "config": serde_json::to_value(config)?,
            "result": v,
        }))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Axis scale of an SVG plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log10,
}

/// One polyline of an SVG figure.
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
}

/// Figure description rendered by [`render_svg`].
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub curves: Vec<Curve>,
}

const W: f64 = 960.0;
const H: f64 = 640.0;
const ML: f64 = 72.0;
const MR: f64 = 180.0;
const MT: f64 = 48.0;
const MB: f64 = 56.0;

fn tick_positions(lo: f64, hi: f64, scale: Scale) -> Vec<f64> {
    match scale {
        Scale::Linear => {
            let span = hi - lo;
            let raw = span / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 2.5, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|&s| span / s <= 7.0)
                .unwrap_or(mag * 10.0);
            let mut t = (lo / step).ceil() * step;
            let mut out = Vec::new();
            while t <= hi + 1e-12 * span {
                out.push(t);
                t += step;
            }
            out
        }
        Scale::Log10 => {
            let (llo, lhi) = (lo.log10().ceil() as i32, hi.log10().floor() as i32);
            let step = (((lhi - llo) / 7) + 1).max(1);
            (llo..=lhi)
                .step_by(step as usize)
                .map(|e| 10f64.powi(e))
                .collect()
        }
    }
}

fn fmt_tick(v: f64, scale: Scale) -> String {
    match scale {
        Scale::Linear => {
            if v == 0.0 {
                "0".into()
            } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
                let s = format!("{v:.3}");
                s.trim_end_matches('0').trim_end_matches('.').to_string()
            } else {
                format!("{v:.1e}")
            }
        }
        Scale::Log10 => format!("1e{}", v.log10().round() as i32),
    }
}

/// Renders the figure as a standalone SVG document.
pub fn render_svg(fig: &Figure) -> String {
    let map = |v: f64, scale: Scale| -> f64 {
        match scale {
            Scale::Linear => v,
            Scale::Log10 => v.log10(),
        }
    };
    let usable = |v: f64, scale: Scale| -> bool {
        v.is_finite() && (scale == Scale::Linear || v > 0.0)
    };

    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in &fig.curves {
        for &(x, y) in &c.points {
            if usable(x, fig.x_scale) && usable(y, fig.y_scale) {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
    }
    if !(x0 < x1) {
        x0 = 0.0;
        x1 = 1.0;
    }
    if !(y0 < y1) {
        y0 = 0.0;
        y1 = 1.0;
    }
    let (mx0, mx1) = (map(x0, fig.x_scale), map(x1, fig.x_scale));
    let (my0, my1) = (map(y0, fig.y_scale), map(y1, fig.y_scale));
    let pad_x = 0.02 * (mx1 - mx0).max(1e-12);
    let pad_y = 0.04 * (my1 - my0).max(1e-12);
    let (mx0, mx1) = (mx0 - pad_x, mx1 + pad_x);
    let (my0, my1) = (my0 - pad_y, my1 + pad_y);

    let px = |x: f64| ML + (map(x, fig.x_scale) - mx0) / (mx1 - mx0) * (W - ML - MR);
    let py = |y: f64| H - MB - (map(y, fig.y_scale) - my0) / (my1 - my0) * (H - MT - MB);

    let mut s = String::with_capacity(1 << 16);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        ML + (W - ML - MR) / 2.0,
        xml_escape(&fig.title)
    );

    // axes box
    let _ = writeln!(
        s,
        r#"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        W - ML - MR,
        H - MT - MB
    );

    // ticks and grid
    for t in tick_positions(x0, x1, fig.x_scale) {
        let x = px(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{MT}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="0.8"/>"##,
            H - MB
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            H - MB + 18.0,
            fmt_tick(t, fig.x_scale)
        );
    }
    for t in tick_positions(y0, y1, fig.y_scale) {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{ML}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="0.8"/>"##,
            W - MR
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            ML - 6.0,
            y + 4.0,
            fmt_tick(t, fig.y_scale)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        ML + (W - ML - MR) / 2.0,
        H - 12.0,
        xml_escape(&fig.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0,
        xml_escape(&fig.y_label)
    );

    // curves
    for c in &fig.curves {
        let mut d = String::new();
        let mut pen_up = true;
        for &(x, y) in &c.points {
            if !usable(x, fig.x_scale) || !usable(y, fig.y_scale) {
                pen_up = true;
                continue;
            }
            let cmd = if pen_up { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2} {:.2} ", px(x), py(y));
            pen_up = false;
        }
        let dash = if c.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
            c.color
        );
    }

    // legend
    let lx = W - MR + 12.0;
    let mut ly = MT + 10.0;
    for c in &fig.curves {
        let dash = if c.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/>"#,
            lx + 24.0,
            c.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            xml_escape(&c.label)
        );
        ly += 20.0;
    }
    let _ = writeln!(s, "</svg>");
    s
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_lossless() {
        let rows = vec![(0.1, 1.0 / 3.0), (2.0f64.sqrt(), f64::NEG_INFINITY)];
        let text = csv_two_columns(
            &[("c".into(), "2.1".into())],
            ("r", "h"),
            &rows,
        );
        assert!(text.starts_with("# c = 2.1\nr,h\n"));
        let line = text.lines().nth(2).unwrap();
        let parts: Vec<&str> = line.split(',').collect();
        assert_eq!(parts[0].parse::<f64>().unwrap(), 0.1);
        assert_eq!(parts[1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert!(text.lines().nth(3).unwrap().ends_with("-inf"));
    }

    #[test]
    fn svg_renders_linear_and_log() {
        let fig = Figure {
            title: "test".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            x_scale: Scale::Log10,
            y_scale: Scale::Linear,
            curves: vec![Curve {
                label: "c1".into(),
                points: (1..100).map(|i| (i as f64 * 0.01, (i as f64).sin())).collect(),
                color: "#1f77b4".into(),
                dashed: false,
            }],
        };
        let svg = render_svg(&fig);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("</svg>"));
        assert!(svg.contains("c1"));
    }
}
