//! Deterministic SVG builders: wireframe overlays on raster images and
//! precision/recall plots. All coordinates are formatted with fixed
//! precision so identical inputs give identical bytes.

use hawp_core::eval::PrCurve;
use hawp_core::Wireframe;
use std::fmt::Write;

/// Color-blind-safe palette cycled by element index.
pub const PALETTE: [&str; 8] = [
    "#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#f2c200", "#a65628", "#f781bf",
];

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// An SVG overlay: the base image embedded as a PNG data URI, one
/// polyline per segment, one circle per junction.
pub fn overlay(png_base64: &str, wf: &Wireframe) -> String {
    let (w, h) = (wf.width, wf.height);
    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = write!(
        out,
        "  <image href=\"data:image/png;base64,{png_base64}\" x=\"0\" y=\"0\" \
         width=\"{w}\" height=\"{h}\"/>\n"
    );
    for (i, seg) in wf.segments.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = write!(
            out,
            "  <polyline points=\"{},{} {},{}\" fill=\"none\" stroke=\"{color}\" \
             stroke-width=\"1.5\" stroke-linecap=\"round\"/>\n",
            fmt(seg.x1.x),
            fmt(seg.x1.y),
            fmt(seg.x2.x),
            fmt(seg.x2.y),
        );
    }
    for j in &wf.junctions {
        let _ = write!(
            out,
            "  <circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"#00c5cd\" stroke=\"#083838\" \
             stroke-width=\"0.6\"/>\n",
            fmt(j.p.x),
            fmt(j.p.y),
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A precision/recall plot with one labeled curve per entry.
pub fn pr_plot(title: &str, curves: &[(String, &PrCurve)]) -> String {
    const MARGIN: f64 = 48.0;
    const PLOT_W: f64 = 480.0;
    const PLOT_H: f64 = 360.0;
    let width = PLOT_W + 2.0 * MARGIN;
    let height = PLOT_H + 2.0 * MARGIN;
    let x_of = |recall: f64| MARGIN + recall.clamp(0.0, 1.0) * PLOT_W;
    let y_of = |precision: f64| MARGIN + (1.0 - precision.clamp(0.0, 1.0)) * PLOT_H;
    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    );
    let _ = write!(
        out,
        "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#ffffff\" \
         stroke=\"#333333\"/>\n",
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(PLOT_W),
        fmt(PLOT_H)
    );
    for i in 1..4 {
        let t = i as f64 * 0.25;
        let _ = write!(
            out,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(x_of(t)),
            fmt(MARGIN),
            fmt(x_of(t)),
            fmt(MARGIN + PLOT_H)
        );
        let _ = write!(
            out,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(MARGIN),
            fmt(y_of(t)),
            fmt(MARGIN + PLOT_W),
            fmt(y_of(t))
        );
    }
    for (i, label) in ["0", "0.25", "0.5", "0.75", "1"].iter().enumerate() {
        let t = i as f64 * 0.25;
        let _ = write!(
            out,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{label}</text>\n",
            fmt(x_of(t)),
            fmt(MARGIN + PLOT_H + 16.0)
        );
        let _ = write!(
            out,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{label}</text>\n",
            fmt(MARGIN - 6.0),
            fmt(y_of(t) + 4.0)
        );
    }
    let _ = write!(
        out,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        fmt(MARGIN + PLOT_W / 2.0),
        fmt(MARGIN - 12.0)
    );
    let _ = write!(
        out,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">recall</text>\n",
        fmt(MARGIN + PLOT_W / 2.0),
        fmt(MARGIN + PLOT_H + 34.0)
    );
    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !curve.recall.is_empty() {
            let mut points = String::new();
            for (r, p) in curve.recall.iter().zip(&curve.precision) {
                let _ = write!(points, "{},{} ", fmt(x_of(*r)), fmt(y_of(*p)));
            }
            let _ = write!(
                out,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"/>\n",
                points.trim_end()
            );
        }
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = write!(
            out,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            fmt(MARGIN + PLOT_W - 150.0),
            fmt(ly - 4.0),
            fmt(MARGIN + PLOT_W - 126.0),
            fmt(ly - 4.0)
        );
        let _ = write!(
            out,
            "  <text x=\"{}\" y=\"{}\">{label}</text>\n",
            fmt(MARGIN + PLOT_W - 120.0),
            fmt(ly)
        );
    }
    out.push_str("</svg>\n");
    out
}
