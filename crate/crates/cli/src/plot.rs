//! Self-contained SVG log-log plots of `log M(t)` against `log t`.

use std::fmt::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use clusterwalk::experiments::ExponentEstimate;

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Points, fitted line and slope for each estimate, plus a dashed
/// reference line of slope 1/2 through the first fit.
pub fn exponent_plot(estimates: &[ExponentEstimate], title: &str, deterministic: bool) -> String {
    let xs = |e: &ExponentEstimate| {
        e.time_grid
            .iter()
            .map(|&t| (t as f64).ln())
            .collect::<Vec<_>>()
    };
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for e in estimates {
        for (x, y) in xs(e).iter().zip(&e.mean_log_maxdisp) {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
    }
    if !(x0 < x1) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !(y0 < y1) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let f = Frame {
        x0,
        x1,
        y0: y0 - pad,
        y1: y1 + pad,
    };

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    if !deterministic {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        writeln!(s, "<!-- generated at unix time {secs} -->").unwrap();
    }
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        escape(title)
    )
    .unwrap();

    // axes and ticks
    let (ax0, ax1, ay0, ay1) = (f.px(f.x0), f.px(f.x1), f.py(f.y0), f.py(f.y1));
    writeln!(
        s,
        r#"<path d="M{ax0:.2},{ay1:.2} V{ay0:.2} H{ax1:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for k in 0..=5 {
        let x = f.x0 + (f.x1 - f.x0) * k as f64 / 5.0;
        let y = f.y0 + (f.y1 - f.y0) * k as f64 / 5.0;
        let (px, py) = (f.px(x), f.py(y));
        writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{ay0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
            ay0 + 5.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.2}</text>"#,
            ay0 + 18.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{ax0:.2}" y2="{py:.2}" stroke="black"/>"#,
            ax0 - 5.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.2}</text>"#,
            ax0 - 8.0,
            py + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">log t</text>"#,
        (ax0 + ax1) / 2.0,
        H - 15.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">mean log M(t)</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0
    )
    .unwrap();

    for (i, e) in estimates.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let x = xs(e);
        for (xv, yv) in x.iter().zip(&e.mean_log_maxdisp) {
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                f.px(*xv),
                f.py(*yv)
            )
            .unwrap();
        }
        let (fa, fb) = (x[e.fit_from], x[x.len() - 1]);
        let line = |t: f64| e.intercept + e.slope * t;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            f.px(fa),
            f.py(line(fa)),
            f.px(fb),
            f.py(line(fb))
        )
        .unwrap();
        let ly = TOP + 20.0 + 18.0 * i as f64;
        writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#,
            W - RIGHT + 15.0,
            ly - 9.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}">β={} slope={:.3}</text>"#,
            W - RIGHT + 30.0,
            e.beta,
            e.slope
        )
        .unwrap();
    }
    if let Some(e) = estimates.first() {
        let x = xs(e);
        let (fa, fb) = (x[0], x[x.len() - 1]);
        let mid = (x[e.fit_from] + fb) / 2.0;
        let anchor = e.intercept + e.slope * mid;
        let refl = |t: f64| anchor + 0.5 * (t - mid);
        writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="6 4"/>"##,
            f.px(fa),
            f.py(refl(fa)),
            f.px(fb),
            f.py(refl(fb))
        )
        .unwrap();
        let ly = TOP + 20.0 + 18.0 * estimates.len() as f64;
        writeln!(
            s,
            r##"<text x="{:.2}" y="{ly:.2}" fill="#555">dashed: slope 1/2</text>"##,
            W - RIGHT + 15.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
