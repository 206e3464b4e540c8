//! Minimal SVG scatter plots with linear axes.

use std::fmt::Write as _;

use crate::diagram::DiagramTable;
use crate::error::{Error, Result};
use crate::seqpath::Method;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MARKER: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marker {
    Dot,
    Triangle,
    Cross,
}

impl Marker {
    pub fn name(self) -> &'static str {
        match self {
            Marker::Dot => "dot",
            Marker::Triangle => "triangle",
            Marker::Cross => "cross",
        }
    }

    pub fn for_method(method: Method) -> Marker {
        match method {
            Method::ForwardStepwise => Marker::Triangle,
            Method::Lasso => Marker::Dot,
            Method::LeastAngle => Marker::Cross,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub marker: Marker,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Overlay {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// A shaded strip at the right edge starting at data coordinate `from`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginBand {
    pub from: f64,
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<ScatterPoint>,
    pub overlays: Vec<Overlay>,
    pub band: Option<MarginBand>,
    /// Legend entries as (marker, text).
    pub legend: Vec<(Marker, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Axis {
    /// Extends `[lo, hi]` outward to multiples of a 1-2-5 step giving
    /// about five intervals.
    pub fn fit(lo: f64, hi: f64) -> Axis {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            (lo - pad, hi + pad)
        };
        let raw = (hi - lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|&s| s >= raw)
            .unwrap_or(10.0 * mag);
        Axis {
            min: (lo / step).floor() * step,
            max: (hi / step).ceil() * step,
            step,
        }
    }

    pub fn ticks(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step).round() as usize;
        (0..=count).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// Maps data coordinates to pixels inside the plotting rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub x: Axis,
    pub y: Axis,
}

impl Frame {
    pub fn left() -> f64 {
        LEFT
    }
    pub fn right() -> f64 {
        WIDTH - RIGHT
    }
    pub fn top() -> f64 {
        TOP
    }
    pub fn bottom() -> f64 {
        HEIGHT - BOTTOM
    }

    pub fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.min) / (self.x.max - self.x.min) * (Self::right() - LEFT)
    }

    pub fn py(&self, y: f64) -> f64 {
        Self::bottom() - (y - self.y.min) / (self.y.max - self.y.min) * (Self::bottom() - TOP)
    }

    pub fn data_x(&self, px: f64) -> f64 {
        self.x.min + (px - LEFT) / (Self::right() - LEFT) * (self.x.max - self.x.min)
    }

    pub fn data_y(&self, py: f64) -> f64 {
        self.y.min + (Self::bottom() - py) / (Self::bottom() - TOP) * (self.y.max - self.y.min)
    }

    /// Reads the frame back from the `data-x-domain` / `data-y-domain`
    /// attributes of an emitted document.
    pub fn parse(svg: &str) -> Option<Frame> {
        let read = |key: &str| -> Option<(f64, f64)> {
            let start = svg.find(key)? + key.len();
            let rest = &svg[start..];
            let end = rest.find('"')?;
            let mut it = rest[..end].split(' ').map(|s| s.parse::<f64>());
            Some((it.next()?.ok()?, it.next()?.ok()?))
        };
        let (x0, x1) = read("data-x-domain=\"")?;
        let (y0, y1) = read("data-y-domain=\"")?;
        Some(Frame {
            x: Axis { min: x0, max: x1, step: 0.0 },
            y: Axis { min: y0, max: y1, step: 0.0 },
        })
    }
}

/// Data frame covering every point, overlay vertex and band.
pub fn fit_frame(plot: &Plot) -> Frame {
    let xs = plot
        .points
        .iter()
        .map(|p| p.x)
        .chain(plot.overlays.iter().flat_map(|o| o.points.iter().map(|q| q.0)))
        .chain(plot.band.iter().map(|b| b.from));
    let ys = plot
        .points
        .iter()
        .map(|p| p.y)
        .chain(plot.overlays.iter().flat_map(|o| o.points.iter().map(|q| q.1)));
    let range = |it: &mut dyn Iterator<Item = f64>| {
        it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = range(&mut xs.into_iter());
    let (y0, y1) = range(&mut ys.into_iter());
    Frame {
        x: Axis::fit(x0, x1),
        y: Axis::fit(y0, y1),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10()).ceil() as usize };
    format!("{v:.decimals$}")
}

fn marker_element(out: &mut String, m: Marker, cx: f64, cy: f64) {
    let r = MARKER;
    match m {
        Marker::Dot => {
            let _ = writeln!(out, r#"<circle class="marker dot" cx="{cx}" cy="{cy}" r="{r}"/>"#);
        }
        Marker::Triangle => {
            let _ = writeln!(
                out,
                r#"<polygon class="marker triangle" points="{},{} {},{} {},{}" fill="none" stroke="black"/>"#,
                cx,
                cy - r,
                cx - r,
                cy + r,
                cx + r,
                cy + r
            );
        }
        Marker::Cross => {
            let _ = writeln!(
                out,
                r#"<path class="marker cross" d="M{} {} L{} {} M{} {} L{} {}" stroke="black"/>"#,
                cx - r,
                cy - r,
                cx + r,
                cy + r,
                cx - r,
                cy + r,
                cx + r,
                cy - r
            );
        }
    }
}

/// Renders a scatter plot as a self-contained SVG 1.1 document. Overlay
/// vertices are written at full precision so they can be mapped back to
/// data coordinates with [`Frame::parse`].
pub fn emit_svg_scatter(plot: &Plot) -> Result<String> {
    if plot.points.is_empty() {
        return Err(Error::InvalidParameter("a scatter plot needs at least one point".into()));
    }
    if let Some(i) = plot.points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::NonFinite { index: i });
    }
    for o in &plot.overlays {
        if let Some(i) = o.points.iter().position(|q| !(q.0.is_finite() && q.1.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "overlay \"{}\" has a non-finite vertex at index {i}",
                o.label
            )));
        }
    }
    if let Some(b) = &plot.band {
        if !b.from.is_finite() {
            return Err(Error::InvalidParameter("margin band start is not finite".into()));
        }
    }

    let frame = fit_frame(plot);
    let (l, r, t, b) = (Frame::left(), Frame::right(), Frame::top(), Frame::bottom());
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black" data-x-domain="{} {}" data-y-domain="{} {}"/>"#,
        r - l,
        b - t,
        frame.x.min,
        frame.x.max,
        frame.y.min,
        frame.y.max
    );

    if let Some(band) = &plot.band {
        let x0 = frame.px(band.from);
        let _ = writeln!(
            s,
            r##"<rect class="band" x="{x0}" y="{t}" width="{}" height="{}" fill="#eeeeee"/>"##,
            r - x0,
            b - t
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
            (x0 + r) / 2.0,
            t - 4.0,
            escape(&band.label)
        );
    }

    for v in frame.x.ticks() {
        let x = frame.px(v);
        let _ = writeln!(s, r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            b + 18.0,
            tick_label(v, frame.x.step)
        );
    }
    for v in frame.y.ticks() {
        let y = frame.py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{l}" y2="{y}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            l - 8.0,
            y + 4.0,
            tick_label(v, frame.y.step)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(&plot.y_label)
    );
    if !plot.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&plot.title)
        );
    }

    for o in &plot.overlays {
        let pts: Vec<String> = o.points.iter().map(|&(x, y)| format!("{},{}", frame.px(x), frame.py(y))).collect();
        let dash = if o.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline class="overlay" data-label="{}" points="{}" fill="none" stroke="black"{dash}/>"#,
            escape(&o.label),
            pts.join(" ")
        );
    }
    for p in &plot.points {
        marker_element(&mut s, p.marker, frame.px(p.x), frame.py(p.y));
    }
    for (i, (m, text)) in plot.legend.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{}" y="{}">{} {}</text>"#,
            l + 10.0,
            t + 16.0 + 14.0 * i as f64,
            m.name(),
            escape(text)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Double-ranking scatter: entry rank across, t-value rank down, noise
/// variables as crosses. Variables that never entered sit in a shaded
/// band to the right of the largest entry rank.
pub fn diagram_svg(table: &DiagramTable, title: &str) -> Result<String> {
    let max_h = table.rows.iter().filter_map(|r| r.h_rank).max().unwrap_or(0) as f64;
    let gap = (0.1 * max_h).max(2.0);
    let absent_x = max_h + gap;
    let has_absent = table.rows.iter().any(|r| r.h_rank.is_none());
    let points = table
        .rows
        .iter()
        .map(|r| ScatterPoint {
            x: r.h_rank.map_or(absent_x, |h| h as f64),
            y: r.v_rank as f64,
            marker: if r.is_signal { Marker::Dot } else { Marker::Cross },
        })
        .collect();
    let plot = Plot {
        title: title.to_string(),
        x_label: "rank along the path".into(),
        y_label: "rank by t-value".into(),
        points,
        overlays: Vec::new(),
        band: has_absent.then(|| MarginBand {
            from: max_h + gap / 2.0,
            label: "not entered".into(),
        }),
        legend: vec![(Marker::Dot, "signal".into()), (Marker::Cross, "noise".into())],
    };
    emit_svg_scatter(&plot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_point() -> Plot {
        Plot {
            points: vec![ScatterPoint { x: 1.0, y: 1.0, marker: Marker::Dot }],
            ..Plot::default()
        }
    }

    #[test]
    fn single_point_has_one_marker() {
        let svg = emit_svg_scatter(&one_point()).unwrap();
        assert_eq!(svg.matches("class=\"marker").count(), 1);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg, emit_svg_scatter(&one_point()).unwrap());
    }

    #[test]
    fn marker_shapes_are_single_elements() {
        let mut plot = one_point();
        plot.points.push(ScatterPoint { x: 2.0, y: 3.0, marker: Marker::Triangle });
        plot.points.push(ScatterPoint { x: 3.0, y: 2.0, marker: Marker::Cross });
        let svg = emit_svg_scatter(&plot).unwrap();
        assert_eq!(svg.matches("class=\"marker").count(), 3);
        for name in ["dot", "triangle", "cross"] {
            assert_eq!(svg.matches(&format!("class=\"marker {name}\"")).count(), 1);
        }
    }

    #[test]
    fn non_finite_point_reports_index() {
        let mut plot = one_point();
        plot.points.push(ScatterPoint { x: f64::NAN, y: 0.0, marker: Marker::Dot });
        assert!(matches!(emit_svg_scatter(&plot), Err(Error::NonFinite { index: 1 })));
        assert!(emit_svg_scatter(&Plot::default()).is_err());
    }

    #[test]
    fn axis_ticks_cover_data() {
        let a = Axis::fit(3.0, 81.0);
        assert_eq!(a.step, 20.0);
        assert_eq!((a.min, a.max), (0.0, 100.0));
        assert_eq!(a.ticks().len(), 6);
        let flat = Axis::fit(1.0, 1.0);
        assert!(flat.min < 1.0 && flat.max > 1.0);
        let small = Axis::fit(0.01, 0.07);
        assert!((small.step - 0.02).abs() < 1e-15);
    }

    #[test]
    fn overlay_vertices_invert_to_data() {
        let mut plot = one_point();
        let pts = vec![(0.5, 10.0 / 3.0), (7.25, 41.0), (20.0, 2.0f64.sqrt())];
        plot.overlays.push(Overlay { label: "curve".into(), points: pts.clone(), dashed: false });
        let svg = emit_svg_scatter(&plot).unwrap();
        let frame = Frame::parse(&svg).unwrap();
        let start = svg.find("points=\"").unwrap() + 8;
        let attr = &svg[start..start + svg[start..].find('"').unwrap()];
        for ((px, py), (x, y)) in attr.split(' ').map(|v| {
            let (a, b) = v.split_once(',').unwrap();
            (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap())
        }).zip(pts) {
            assert!((frame.data_x(px) - x).abs() < 1e-9);
            assert!((frame.data_y(py) - y).abs() < 1e-9);
        }
    }

    #[test]
    fn escapes_text() {
        let mut plot = one_point();
        plot.title = "a < b & c".into();
        let svg = emit_svg_scatter(&plot).unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
