//! Static SVG plots: learning curves and top-down trajectories.

use svg::node::element::{Circle, Line, Polyline, Rectangle, Text};
use svg::Document;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: [f64; 4] = [60.0, 20.0, 40.0, 50.0]; // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points }
    }
}

struct Frame {
    lo: (f64, f64),
    hi: (f64, f64),
}

impl Frame {
    fn fit(series: &[Series], square: bool) -> Frame {
        let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for &(x, y) in pts {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        if !lo.0.is_finite() {
            return Frame { lo: (0.0, 0.0), hi: (1.0, 1.0) };
        }
        let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a - 0.05 * (b - a), b + 0.05 * (b - a)) };
        let (x, y) = (pad(lo.0, hi.0), pad(lo.1, hi.1));
        let mut f = Frame { lo: (x.0, y.0), hi: (x.1, y.1) };
        if square {
            // Equal scale on both axes so trajectories keep their shape.
            let (pw, ph) = (W - MARGIN[0] - MARGIN[1], H - MARGIN[2] - MARGIN[3]);
            let s = ((f.hi.0 - f.lo.0) / pw).max((f.hi.1 - f.lo.1) / ph);
            let (cx, cy) = ((f.lo.0 + f.hi.0) / 2.0, (f.lo.1 + f.hi.1) / 2.0);
            f = Frame { lo: (cx - s * pw / 2.0, cy - s * ph / 2.0), hi: (cx + s * pw / 2.0, cy + s * ph / 2.0) };
        }
        f
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN[0] + (x - self.lo.0) / (self.hi.0 - self.lo.0) * (W - MARGIN[0] - MARGIN[1]);
        let py = H - MARGIN[3] - (y - self.lo.1) / (self.hi.1 - self.lo.1) * (H - MARGIN[2] - MARGIN[3]);
        (px, py)
    }
}

fn text(x: f64, y: f64, s: &str, anchor: &str) -> Text {
    Text::new(s).set("x", x).set("y", y).set("font-family", "sans-serif").set("font-size", 12).set("text-anchor", anchor)
}

fn fmt(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn base(title: &str, x_label: &str, y_label: &str, f: &Frame) -> Document {
    let (x0, y0) = f.map(f.lo.0, f.lo.1);
    let (x1, y1) = f.map(f.hi.0, f.hi.1);
    let axis = |a: (f64, f64), b: (f64, f64)| Line::new().set("x1", a.0).set("y1", a.1).set("x2", b.0).set("y2", b.1).set("stroke", "black");
    Document::new()
        .set("viewBox", (0, 0, W, H))
        .set("width", W)
        .set("height", H)
        .add(Rectangle::new().set("width", W).set("height", H).set("fill", "white"))
        .add(axis((x0, y0), (x1, y0)))
        .add(axis((x0, y0), (x0, y1)))
        .add(text(W / 2.0, 22.0, title, "middle").set("font-size", 14))
        .add(text((x0 + x1) / 2.0, H - 12.0, x_label, "middle"))
        .add(text(14.0, (y0 + y1) / 2.0, y_label, "middle").set("transform", format!("rotate(-90 14 {})", (y0 + y1) / 2.0)))
        .add(text(x0, y0 + 16.0, &fmt(f.lo.0), "start"))
        .add(text(x1, y0 + 16.0, &fmt(f.hi.0), "end"))
        .add(text(x0 - 4.0, y0, &fmt(f.lo.1), "end"))
        .add(text(x0 - 4.0, y1 + 10.0, &fmt(f.hi.1), "end"))
}

fn with_series(mut doc: Document, f: &Frame, series: &[Series]) -> Document {
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| {
                let (px, py) = f.map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        doc = doc.add(Polyline::new().set("points", pts.join(" ")).set("fill", "none").set("stroke", color).set("stroke-width", 1.5));
        let ly = MARGIN[2] + 14.0 * k as f64 + 8.0;
        doc = doc
            .add(Line::new().set("x1", W - 170.0).set("y1", ly).set("x2", W - 150.0).set("y2", ly).set("stroke", color).set("stroke-width", 2))
            .add(text(W - 145.0, ly + 4.0, &s.label, "start"));
    }
    doc
}

/// Line chart of one or more series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let f = Frame::fit(series, false);
    with_series(base(title, x_label, y_label, &f), &f, series).to_string()
}

/// Top-down (x, y) view of trajectories with the nominal target at the origin.
pub fn trajectory_chart(title: &str, series: &[Series]) -> String {
    let mut all: Vec<Series> = series.iter().map(|s| Series::new(s.label.clone(), s.points.clone())).collect();
    all.push(Series::new("", vec![(0.0, 0.0)]));
    let f = Frame::fit(&all, true);
    let mut doc = with_series(base(title, "x (mm)", "y (mm)", &f), &f, series);
    let (ox, oy) = f.map(0.0, 0.0);
    doc = doc.add(Circle::new().set("cx", ox).set("cy", oy).set("r", 4).set("fill", "none").set("stroke", "black"));
    for (k, s) in series.iter().enumerate() {
        if let Some(&(x, y)) = s.points.first() {
            let (px, py) = f.map(x, y);
            doc = doc.add(Circle::new().set("cx", px).set("cy", py).set("r", 3).set("fill", COLORS[k % COLORS.len()]));
        }
    }
    doc.to_string()
}
