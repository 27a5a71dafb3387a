//! Minimal SVG line charts of the mean curves with ±1 SE bands.

use std::fmt::Write as _;

use distbandit_core::experiment::{Aggregate, ExperimentOutput};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, Aggregate)>,
}

fn chart(title: &str, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, a) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(a.mean - a.se);
        y1 = y1.max(a.mean + a.se);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" text-anchor="middle">{x0}</text>"#, H - PAD + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x1}</text>"#, W - PAD, H - PAD + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#, PAD - 4.0, H - PAD, y0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#, PAD - 4.0, PAD + 4.0, y1);
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper = ser.points.iter().map(|(x, a)| format!("{:.2},{:.2}", sx(*x), sy(a.mean + a.se)));
        let lower = ser.points.iter().rev().map(|(x, a)| format!("{:.2},{:.2}", sx(*x), sy(a.mean - a.se)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.join(" "));
        let line: Vec<String> = ser.points.iter().map(|(x, a)| format!("{:.2},{:.2}", sx(*x), sy(a.mean))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, W - PAD - 100.0, PAD + 16.0 * i as f64, ser.label);
    }
    s.push_str("</svg>\n");
    s
}

pub fn gap_svg(out: &ExperimentOutput) -> String {
    let series: Vec<Series> = out
        .modes
        .iter()
        .map(|m| Series { label: m.mode.label(), points: m.gap.iter().enumerate().map(|(i, a)| ((i + 1) as f64, *a)).collect() })
        .collect();
    chart("utility gap U* - U(wbar_t)", &series)
}

pub fn bias_svg(out: &ExperimentOutput) -> String {
    let series: Vec<Series> = out
        .modes
        .iter()
        .map(|m| Series { label: m.mode.label(), points: m.bias.iter().map(|(t, a)| (*t as f64, *a)).collect() })
        .collect();
    chart("bias diagnostic |B_t|_inf", &series)
}
