//! Static SVG rendering of a trace: trajectory overlay, velocity commands
//! and applied torque per axis.

use std::fmt::Write;

use uuv_hybrid::sim::SimTrace;

const PANEL_W: f64 = 560.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 36.0;
const MAX_POINTS: usize = 1500;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Keeps the first, minimum, maximum and last point of each bucket so that
/// switching stays visible after decimation.
fn decimate(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let bucket = points.len().div_ceil(MAX_POINTS / 4);
    let mut out = Vec::with_capacity(MAX_POINTS + 4);
    for chunk in points.chunks(bucket) {
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in chunk.iter().enumerate() {
            if p.1 < chunk[lo].1 {
                lo = i;
            }
            if p.1 > chunk[hi].1 {
                hi = i;
            }
        }
        let mut keep = vec![0, lo.min(hi), lo.max(hi), chunk.len() - 1];
        keep.dedup();
        out.extend(keep.into_iter().map(|i| chunk[i]));
    }
    out
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = pad(b.0, b.1);
    let (y0, y1) = pad(b.2, b.3);
    let dy = 0.05 * (y1 - y0);
    (x0, x1, y0 - dy, y1 + dy)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let v = if v.abs() < 1e-9 * step { 0.0 } else { v };
    format!("{v:.decimals$}")
}

fn panel(svg: &mut String, ox: f64, oy: f64, title: &str, x_label: &str, series: &[Series]) {
    let (x0, x1, y0, y1) = bounds(series);
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| ox + MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| oy + MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let _ = writeln!(
        svg,
        r##"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="white" stroke="#444"/>"##,
        ox + MARGIN_L,
        oy + MARGIN_T
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" font-weight="bold">{}</text>"#,
        ox + MARGIN_L,
        oy + 18.0,
        escape(title)
    );
    for (step, lo, hi, vertical) in [(nice_step(x1 - x0), x0, x1, true), (nice_step(y1 - y0), y0, y1, false)] {
        let mut v = (lo / step).ceil() * step;
        while v <= hi + 1e-12 {
            let label = fmt_tick(v, step);
            if vertical {
                let x = px(v);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{label}</text>"##,
                    oy + MARGIN_T,
                    oy + MARGIN_T + ph,
                    oy + MARGIN_T + ph + 14.0
                );
            } else {
                let y = py(v);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{label}</text>"##,
                    ox + MARGIN_L,
                    ox + MARGIN_L + pw,
                    ox + MARGIN_L - 4.0,
                    y + 3.0
                );
            }
            v += step;
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
        ox + MARGIN_L + pw / 2.0,
        oy + PANEL_H - 6.0,
        escape(x_label)
    );
    for (i, s) in series.iter().enumerate() {
        let mut d = String::new();
        for (k, &(x, y)) in decimate(&s.points).iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, px(x), py(y));
        }
        let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.2"/>"#, s.color);
        let lx = ox + MARGIN_L + pw - 120.0;
        let ly = oy + MARGIN_T + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            ly - 3.0,
            lx + 16.0,
            ly - 3.0,
            s.color,
            lx + 20.0,
            ly,
            escape(s.label)
        );
    }
}

/// Renders `trace` as a self-contained SVG document. The resolved
/// configuration is embedded in the `<desc>` element.
pub fn render(trace: &SimTrace) -> String {
    let rows = &trace.rows;
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let over_t = |f: &dyn Fn(usize) -> f64| t.iter().enumerate().map(|(k, &tk)| (tk, f(k))).collect::<Vec<_>>();

    let trajectory = [
        Series {
            label: "reference",
            color: "#888",
            points: rows.iter().map(|r| (r.reference.pose.x, r.reference.pose.y)).collect(),
        },
        Series {
            label: "vehicle",
            color: COLORS[0],
            points: rows.iter().map(|r| (r.truth.pose.x, r.truth.pose.y)).collect(),
        },
    ];
    let commands = [
        Series { label: "u_c (m/s)", color: COLORS[0], points: over_t(&|k| rows[k].command.u_c) },
        Series { label: "v_c (m/s)", color: COLORS[1], points: over_t(&|k| rows[k].command.v_c) },
        Series { label: "r_c (rad/s)", color: COLORS[2], points: over_t(&|k| rows[k].command.r_c) },
    ];
    let torques = [
        ("tau_x (N)", over_t(&|k| rows[k].applied_torque.tau_x)),
        ("tau_y (N)", over_t(&|k| rows[k].applied_torque.tau_y)),
        ("tau_n (N*m)", over_t(&|k| rows[k].applied_torque.tau_n)),
    ];

    let width = 2.0 * PANEL_W;
    let height = 3.0 * PANEL_H;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let config = serde_json::to_string(&trace.config).unwrap_or_default();
    let seed = trace.config.scenario.seed().map_or("none".to_string(), |s| s.to_string());
    let _ = writeln!(svg, "<title>{}</title>", escape(&trace.config.scenario.controller.to_string()));
    let _ = writeln!(svg, "<desc>seed={seed} config={}</desc>", escape(&config));
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#fafafa"/>"##);
    panel(&mut svg, 0.0, 0.0, "Trajectory (x-y, m)", "x (m)", &trajectory);
    panel(&mut svg, PANEL_W, 0.0, "Velocity commands", "t (s)", &commands);
    for (i, (label, points)) in torques.into_iter().enumerate() {
        let (ox, oy) = [(0.0, PANEL_H), (PANEL_W, PANEL_H), (0.0, 2.0 * PANEL_H)][i];
        let series = [Series { label, color: COLORS[i], points }];
        panel(&mut svg, ox, oy, &format!("Applied torque {label}"), "t (s)", &series);
    }
    svg.push_str("</svg>\n");
    svg
}
