use super::reference::{ReferenceCurve, SHAPE_ONLY};
use super::sweep::RateReport;
use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 64.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, n: f64) -> f64 {
        MARGIN + (n.ln() - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, r: f64) -> f64 {
        H - MARGIN - (r.ln() - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Self-contained log-log SVG of measured mean risks, fitted lines and
/// reference curves.
///
/// Reference curves are rescaled to pass through the geometric mean of the
/// measured risks at the smallest `n`.
pub fn render_svg(reports: &[RateReport], curves: &[ReferenceCurve]) -> String {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .flat_map(|r| {
            r.cells
                .iter()
                .filter(|c| c.mean_risk > 0.0)
                .map(|c| (c.n as f64, c.mean_risk))
        })
        .collect();
    let anchor = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let at_anchor: Vec<f64> = pts
        .iter()
        .filter(|p| p.0 == anchor)
        .map(|p| p.1.ln())
        .collect();
    let anchor_level = if at_anchor.is_empty() {
        0.0
    } else {
        at_anchor.iter().sum::<f64>() / at_anchor.len() as f64
    };
    let scaled: Vec<(String, Vec<(f64, f64)>)> = curves
        .iter()
        .filter_map(|c| {
            let first = c
                .points
                .iter()
                .find(|p| p.0 as f64 == anchor)
                .or(c.points.first())?;
            let k = anchor_level - first.1.ln();
            Some((
                c.label.clone(),
                c.points
                    .iter()
                    .map(|&(n, v)| (n as f64, (v.ln() + k).exp()))
                    .collect(),
            ))
        })
        .collect();

    let all = pts.iter().chain(scaled.iter().flat_map(|s| s.1.iter()));
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(n, r) in all {
        if r > 0.0 && r.is_finite() {
            x0 = x0.min(n.ln());
            x1 = x1.max(n.ln());
            y0 = y0.min(r.ln());
            y1 = y1.max(r.ln());
        }
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let ax = Axes {
        x0,
        x1,
        y0: y0 - pad,
        y1: y1 + pad,
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">n (log scale)</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">L2 risk (log scale)</text>"#,
        H / 2.0,
        H / 2.0
    );
    let mut ns: Vec<usize> = reports
        .iter()
        .flat_map(|r| r.cells.iter().map(|c| c.n))
        .collect();
    ns.sort_unstable();
    ns.dedup();
    for n in ns {
        let x = ax.px(n as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#,
            H - MARGIN + 16.0
        );
    }
    for k in (ax.y0 / std::f64::consts::LN_10).ceil() as i32
        ..=(ax.y1 / std::f64::consts::LN_10).floor() as i32
    {
        let y = ax.py(10f64.powi(k));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{k}</text>"#,
            MARGIN - 6.0,
            y + 4.0
        );
    }

    let mut legend = Vec::new();
    for (i, (label, line)) in scaled.iter().enumerate() {
        let path: Vec<String> = line
            .iter()
            .map(|&(n, r)| format!("{:.2},{:.2}", ax.px(n), ax.py(r)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="gray" stroke-dasharray="{}" stroke-width="1.5"/>"#,
            path.join(" "),
            ["6 4", "2 3", "10 3 2 3"][i % 3]
        );
        legend.push(("gray", format!("{label} ({SHAPE_ONLY})")));
    }
    for (i, rep) in reports.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for c in rep.cells.iter().filter(|c| c.mean_risk > 0.0) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                ax.px(c.n as f64),
                ax.py(c.mean_risk)
            );
        }
        let mut text = rep.estimator.clone();
        if let (Some(b), Some(a)) = (rep.slope, rep.intercept) {
            let (lo, hi) = (ax.x0.exp(), ax.x1.exp());
            let f = |n: f64| (a + b * n.ln()).exp();
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"/>"#,
                ax.px(lo),
                ax.py(f(lo)),
                ax.px(hi),
                ax.py(f(hi))
            );
            let _ = write!(text, " slope {b:.3}");
        }
        legend.push((color, text));
    }
    for (i, (color, text)) in legend.iter().enumerate() {
        let y = MARGIN + 16.0 + 16.0 * i as f64;
        let x = W - MARGIN - 8.0;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="end" fill="{color}">{}</text>"#,
            escape(text)
        );
    }
    s.push_str("</svg>\n");
    s
}
