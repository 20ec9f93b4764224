//! Deterministic SVG line charts.
//!
//! Plain string assembly with fixed-precision coordinates: the same data
//! always renders to the same bytes, so charts can be diffed in CI.

use basinlab::ensemble::EnsembleCurve;
use basinlab::landscape::{Scenario, ScenarioReport};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        self.x0 + (x - self.x_min) / (self.x_max - self.x_min) * self.w
    }

    fn sy(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.y_min) / (self.y_max - self.y_min) * self.h
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Snaps a data range outward to a 0.05 grid inside [0,1].
fn auc_range(lo: f64, hi: f64) -> (f64, f64) {
    let lo = ((lo - 0.01) / 0.05).floor() * 0.05;
    let hi = ((hi + 0.01) / 0.05).ceil() * 0.05;
    (lo.max(0.0), hi.min(1.0))
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    out.push_str(&format!(
        "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        fmt(f.x0), fmt(f.y0), fmt(f.w), fmt(f.h)
    ));
    // y ticks on a 0.05 grid
    let mut v = f.y_min;
    while v <= f.y_max + 1e-9 {
        let y = f.sy(v);
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n",
            fmt(f.x0), fmt(y), fmt(f.x0 + f.w), fmt(y)
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" fill=\"#333\">{v:.2}</text>\n",
            fmt(f.x0 - 5.0), fmt(y + 3.0)
        ));
        v += 0.05;
    }
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333\">{x_label}</text>\n",
        fmt(f.x0 + f.w / 2.0), fmt(f.y0 + f.h + 35.0)
    ));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333\" transform=\"rotate(-90 {} {})\">{y_label}</text>\n",
        fmt(f.x0 - 45.0), fmt(f.y0 + f.h / 2.0), fmt(f.x0 - 45.0), fmt(f.y0 + f.h / 2.0)
    ));
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, width: f64) {
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{},{}", fmt(x), fmt(y)))
        .collect();
    out.push_str(&format!(
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>\n",
        coords.join(" ")
    ));
}

/// One lineage's curve on the ensemble chart.
pub struct DeCurveEntry<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub curve: &'a EnsembleCurve,
    pub t_star: usize,
}

/// Ensemble ROC-AUC vs number of models, with error bars, the single-model
/// baseline at T=1, and a dashed plateau marker per lineage.
pub fn de_curve_svg(entries: &[DeCurveEntry<'_>]) -> String {
    let t_max = entries
        .iter()
        .flat_map(|e| e.curve.points.last())
        .map(|p| p.t)
        .max()
        .unwrap_or(1) as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in entries {
        lo = lo.min(e.curve.baseline_mean - e.curve.baseline_std);
        hi = hi.max(e.curve.baseline_mean + e.curve.baseline_std);
        for p in &e.curve.points {
            lo = lo.min(p.mean_auc - p.std_auc);
            hi = hi.max(p.mean_auc + p.std_auc);
        }
    }
    let (y_min, y_max) = auc_range(lo, hi);
    let f = Frame {
        x0: 70.0,
        y0: 40.0,
        w: 610.0,
        h: 370.0,
        x_min: 0.0,
        x_max: t_max,
        y_min,
        y_max,
    };

    let mut out = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" viewBox=\"0 0 720 480\">\n",
    );
    out.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(
        "  <text x=\"360\" y=\"22\" font-size=\"14\" text-anchor=\"middle\" fill=\"#111\">deep-ensemble ROC-AUC vs ensemble size</text>\n",
    );
    axes(&mut out, &f, "number of models T", "ROC-AUC");

    // x ticks: the baseline position plus every grid value
    let mut ticks: Vec<(f64, String)> = vec![(1.0, "no-DE".to_string())];
    if let Some(e) = entries.first() {
        for p in &e.curve.points {
            ticks.push((p.t as f64, p.t.to_string()));
        }
    }
    for (x, label) in &ticks {
        let sx = f.sx(*x);
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
            fmt(sx), fmt(f.y0 + f.h), fmt(sx), fmt(f.y0 + f.h + 4.0)
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"middle\" fill=\"#333\">{label}</text>\n",
            fmt(sx), fmt(f.y0 + f.h + 16.0)
        ));
    }

    for (k, e) in entries.iter().enumerate() {
        // plateau marker
        let tx = f.sx(e.t_star as f64);
        out.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"1\" stroke-dasharray=\"4,3\"/>\n",
            fmt(tx), fmt(f.y0), fmt(tx), fmt(f.y0 + f.h), e.color
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"start\" fill=\"{}\">T* ({}) = {}</text>\n",
            fmt(tx + 4.0),
            fmt(f.y0 + 14.0 + 14.0 * k as f64),
            e.color,
            e.label,
            e.t_star
        ));

        // baseline marker with error bar at T=1
        let bars: Vec<(f64, f64, f64)> = std::iter::once((
            1.0,
            e.curve.baseline_mean,
            e.curve.baseline_std,
        ))
        .chain(
            e.curve
                .points
                .iter()
                .map(|p| (p.t as f64, p.mean_auc, p.std_auc)),
        )
        .collect();
        for &(t, m, s) in &bars {
            let x = f.sx(t);
            out.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"1\"/>\n",
                fmt(x), fmt(f.sy(m - s)), fmt(x), fmt(f.sy(m + s)), e.color
            ));
            for cap in [m - s, m + s] {
                out.push_str(&format!(
                    "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"1\"/>\n",
                    fmt(x - 3.0), fmt(f.sy(cap)), fmt(x + 3.0), fmt(f.sy(cap)), e.color
                ));
            }
            out.push_str(&format!(
                "  <circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\"/>\n",
                fmt(x), fmt(f.sy(m)), e.color
            ));
        }
        let line_pts: Vec<(f64, f64)> = e
            .curve
            .points
            .iter()
            .map(|p| (f.sx(p.t as f64), f.sy(p.mean_auc)))
            .collect();
        polyline(&mut out, &line_pts, e.color, 1.5);

        // legend
        let ly = 52.0 + 16.0 * k as f64;
        out.push_str(&format!(
            "  <line x1=\"600\" y1=\"{}\" x2=\"624\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            fmt(ly), fmt(ly), e.color
        ));
        out.push_str(&format!(
            "  <text x=\"630\" y=\"{}\" font-size=\"11\" fill=\"#333\">{}</text>\n",
            fmt(ly + 4.0),
            e.label
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn scenario_title(s: Scenario) -> &'static str {
    match s {
        Scenario::TlTl => "TL → TL",
        Scenario::RiRi => "RI-DL → RI-DL",
        Scenario::TlTlStar => "TL → TL*",
        Scenario::RiRiStar => "RI-DL → RI-DL*",
        Scenario::Custom => "custom",
    }
}

/// 2x2 panel of barrier curves, one line per model pair, shared y scale.
pub fn barrier_panel_svg(report: &ScenarioReport) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for sc in &report.scenarios {
        for c in &sc.curves {
            for &a in &c.auc_at_lambda {
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
    }
    let (y_min, y_max) = auc_range(lo, hi);

    let mut out = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"640\" viewBox=\"0 0 860 640\">\n",
    );
    out.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(
        "  <text x=\"430\" y=\"22\" font-size=\"14\" text-anchor=\"middle\" fill=\"#111\">ROC-AUC along weight-space interpolation paths</text>\n",
    );

    for (idx, sc) in report.scenarios.iter().enumerate() {
        let col = idx % 2;
        let row = idx / 2;
        let f = Frame {
            x0: 70.0 + 410.0 * col as f64,
            y0: 60.0 + 290.0 * row as f64,
            w: 330.0,
            h: 210.0,
            x_min: 0.0,
            x_max: 1.0,
            y_min,
            y_max,
        };
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#111\">{}</text>\n",
            fmt(f.x0 + f.w / 2.0),
            fmt(f.y0 - 8.0),
            scenario_title(sc.scenario)
        ));
        axes(&mut out, &f, "λ", "ROC-AUC");
        for xt in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let sx = f.sx(xt);
            out.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
                fmt(sx), fmt(f.y0 + f.h), fmt(sx), fmt(f.y0 + f.h + 4.0)
            ));
            out.push_str(&format!(
                "  <text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"middle\" fill=\"#333\">{xt}</text>\n",
                fmt(sx), fmt(f.y0 + f.h + 16.0)
            ));
        }
        for (k, c) in sc.curves.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = c
                .lambda_grid
                .iter()
                .zip(&c.auc_at_lambda)
                .map(|(&l, &a)| (f.sx(l), f.sy(a)))
                .collect();
            polyline(&mut out, &pts, color, 1.2);
        }
    }
    out.push_str("</svg>\n");
    out
}
