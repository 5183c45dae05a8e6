//! Standalone SVG line and filled-contour charts from sweep tables.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::table::Table;
use crate::Result;
#[cfg(test)]
use crate::CliError;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const LINE_COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const BANDS: [&str; 8] = ["#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187", "#4ac16d", "#a0da39", "#fde725"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxisScale {
    #[default]
    Linear,
    Sqrt,
}

impl AxisScale {
    fn map(self, x: f64) -> f64 {
        match self {
            AxisScale::Linear => x,
            AxisScale::Sqrt => x.sqrt(),
        }
    }

    fn label(self, name: &str) -> String {
        match self {
            AxisScale::Linear => name.to_string(),
            AxisScale::Sqrt => format!("\u{221a}{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    /// One polyline per distinct value of `group`.
    Line { y: String, group: Option<String> },
    /// Banded fill of `z` over the `(x, y)` grid.
    Contour { y: String, z: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub kind: Kind,
    /// Keep only rows whose column equals the value.
    pub filters: Vec<(String, String)>,
    pub x_scale: AxisScale,
    pub y_scale: AxisScale,
    pub title: Option<String>,
}

impl PlotSpec {
    pub fn line(x: &str, y: &str, group: Option<&str>) -> PlotSpec {
        PlotSpec {
            x: x.into(),
            kind: Kind::Line { y: y.into(), group: group.map(Into::into) },
            filters: Vec::new(),
            x_scale: AxisScale::Linear,
            y_scale: AxisScale::Linear,
            title: None,
        }
    }

    pub fn contour(x: &str, y: &str, z: &str) -> PlotSpec {
        PlotSpec { kind: Kind::Contour { y: y.into(), z: z.into() }, ..PlotSpec::line(x, y, None) }
    }

    pub fn filter(mut self, column: &str, value: &str) -> PlotSpec {
        self.filters.push((column.into(), value.into()));
        self
    }

    pub fn title(mut self, t: &str) -> PlotSpec {
        self.title = Some(t.into());
        self
    }
}

fn cell_eq(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn value(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    mag * if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    }
}

#[derive(Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(v: impl Iterator<Item = f64>) -> Range {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if !lo.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            let pad = 0.5 * lo.abs().max(1.0);
            return Range { lo: lo - pad, hi: hi + pad };
        }
        Range { lo, hi }
    }

    fn ticks(&self) -> (Vec<f64>, usize) {
        let step = nice_step(self.hi - self.lo);
        let decimals = (-step.log10().floor()).max(0.0) as usize;
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step + 1e-9).floor() as i64;
        ((first..=last).map(|k| k as f64 * step).collect(), decimals)
    }
}

struct Frame {
    x: Range,
    y: Range,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.lo) / (self.x.hi - self.x.lo) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.lo) / (self.y.hi - self.y.lo) * (H - TOP - BOTTOM)
    }
}

/// Renders `spec` over the rows of `t`. Every named column must exist; an
/// empty body gives a chart with axes only.
pub fn render(t: &Table, spec: &PlotSpec) -> Result<String> {
    let xc = t.column(&spec.x)?;
    let filters: Vec<(usize, &str)> = spec
        .filters
        .iter()
        .map(|(c, v)| Ok((t.column(c)?, v.as_str())))
        .collect::<Result<_>>()?;
    let rows: Vec<&Vec<String>> = t.rows.iter().filter(|r| filters.iter().all(|(c, v)| cell_eq(&r[*c], v))).collect();
    let x_of = |r: &Vec<String>| value(&r[xc]).map(|x| spec.x_scale.map(x));
    let mut svg = String::new();
    let y_name = match &spec.kind {
        Kind::Line { y, .. } | Kind::Contour { y, .. } => y.clone(),
    };
    match &spec.kind {
        Kind::Line { y, group } => {
            let yc = t.column(y)?;
            let gc = group.as_deref().map(|g| t.column(g)).transpose()?;
            let mut order: Vec<String> = Vec::new();
            let mut series: BTreeMap<String, Vec<Option<(f64, f64)>>> = BTreeMap::new();
            for r in &rows {
                let g = gc.map(|c| r[c].clone()).unwrap_or_default();
                if !series.contains_key(&g) {
                    order.push(g.clone());
                }
                let pt = x_of(r).zip(value(&r[yc]).map(|v| spec.y_scale.map(v)));
                series.entry(g).or_default().push(pt);
            }
            let pts = || series.values().flatten().flatten();
            let frame = Frame { x: Range::of(pts().map(|p| p.0)), y: Range::of(pts().map(|p| p.1)) };
            open(&mut svg, spec, &frame, &y_name);
            for (i, g) in order.iter().enumerate() {
                let color = LINE_COLORS[i % LINE_COLORS.len()];
                let mut d = String::new();
                let mut pen_down = false;
                for p in &series[g] {
                    match p {
                        Some((x, y)) => {
                            let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, frame.px(*x), frame.py(*y));
                            pen_down = true;
                        }
                        None => pen_down = false,
                    }
                }
                if !d.is_empty() {
                    let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#, d.trim_end());
                }
                let ly = TOP + 14.0 + 18.0 * i as f64;
                let lx = W - RIGHT + 12.0;
                let label = if g.is_empty() { y_name.clone() } else { format!("{} = {g}", group.as_deref().unwrap_or("")) };
                let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
                let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11">{}</text>"#, lx + 24.0, ly + 4.0, escape(&label));
            }
        }
        Kind::Contour { y, z } => {
            let (yc, zc) = (t.column(y)?, t.column(z)?);
            let cells: Vec<(f64, f64, Option<f64>)> = rows
                .iter()
                .filter_map(|r| Some((x_of(r)?, spec.y_scale.map(value(&r[yc])?), value(&r[zc]))))
                .collect();
            let frame = Frame { x: Range::of(cells.iter().map(|c| c.0)), y: Range::of(cells.iter().map(|c| c.1)) };
            open(&mut svg, spec, &frame, &y_name);
            let zr = Range::of(cells.iter().filter_map(|c| c.2));
            let xs = distinct(cells.iter().map(|c| c.0));
            let ys = distinct(cells.iter().map(|c| c.1));
            for (x, yv, zv) in &cells {
                let Some(zv) = zv else { continue };
                let (x0, x1) = span(&xs, *x);
                let (y0, y1) = span(&ys, *yv);
                let band = (((zv - zr.lo) / (zr.hi - zr.lo) * BANDS.len() as f64).floor() as usize).min(BANDS.len() - 1);
                let (px0, px1, py0, py1) = (frame.px(x0), frame.px(x1), frame.py(y1), frame.py(y0));
                let _ = writeln!(
                    svg,
                    r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    px1 - px0,
                    py1 - py0,
                    BANDS[band]
                );
            }
            let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, W - RIGHT + 12.0, TOP + 4.0, escape(z));
            let filled = cells.iter().any(|c| c.2.is_some());
            for (i, color) in BANDS.iter().enumerate().rev().filter(|_| filled) {
                let ly = TOP + 14.0 + 18.0 * (BANDS.len() - 1 - i) as f64;
                let lo = zr.lo + (zr.hi - zr.lo) * i as f64 / BANDS.len() as f64;
                let lx = W - RIGHT + 12.0;
                let _ = writeln!(svg, r#"<rect x="{lx}" y="{ly}" width="14" height="14" fill="{color}"/>"#);
                let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11">&#8805; {}</text>"#, lx + 20.0, ly + 11.0, fmt_g(lo));
            }
            // Redrawn so the filled cells do not cover the frame.
            let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - RIGHT - LEFT, H - BOTTOM - TOP);
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn fmt_g(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e4) {
        format!("{x:.2e}")
    } else {
        format!("{x:.3}")
    }
}

fn distinct(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut d: Vec<f64> = v.collect();
    d.sort_by(f64::total_cmp);
    d.dedup();
    d
}

/// Extent of the cell around grid value `x`: halfway to each neighbour.
fn span(grid: &[f64], x: f64) -> (f64, f64) {
    let i = grid.partition_point(|g| *g < x);
    let lo = if i == 0 { x } else { 0.5 * (grid[i - 1] + x) };
    let hi = if i + 1 >= grid.len() { x } else { 0.5 * (x + grid[i + 1]) };
    (lo, hi)
}

fn open(svg: &mut String, spec: &PlotSpec, f: &Frame, y_name: &str) {
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = &spec.title {
        let _ = writeln!(svg, r#"<text x="{}" y="22" font-size="14" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(t));
    }
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(svg, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    let (xt, xd) = f.x.ticks();
    for t in xt {
        let px = f.px(t);
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y1 + 5.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{}" font-size="11" text-anchor="middle">{t:.xd$}</text>"#, y1 + 18.0);
    }
    let (yt, yd) = f.y.ticks();
    for t in yt {
        let py = f.py(t);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{t:.yd$}</text>"#, x0 - 8.0, py + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 14.0,
        escape(&spec.x_scale.label(&spec.x))
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&spec.y_scale.label(y_name))
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(&["x", "y", "g"]);
        for (x, y, g) in [("0", "1", "a"), ("1", "2", "a"), ("0", "0", "b"), ("1", "", "b"), ("2", "1", "b")] {
            t.push(vec![x.into(), y.into(), g.into()]);
        }
        t
    }

    #[test]
    fn one_path_per_group() {
        let svg = render(&table(), &PlotSpec::line("x", "y", Some("g"))).unwrap();
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("g = b"));
    }

    #[test]
    fn gaps_lift_the_pen() {
        let svg = render(&table(), &PlotSpec::line("x", "y", Some("g")).filter("g", "b")).unwrap();
        let d = svg.lines().find(|l| l.starts_with("<path")).unwrap();
        assert_eq!(d.matches('M').count(), 2);
    }

    #[test]
    fn missing_column_is_a_usage_error() {
        assert!(matches!(render(&table(), &PlotSpec::line("x", "nope", None)), Err(CliError::Usage(_))));
    }

    #[test]
    fn empty_body_draws_axes() {
        let t = Table::new(&["x", "y"]);
        let svg = render(&t, &PlotSpec::line("x", "y", None)).unwrap();
        assert!(svg.contains("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("<path"));
    }

    #[test]
    fn contour_fills_each_grid_cell() {
        let mut t = Table::new(&["x", "y", "z"]);
        for i in 0..3 {
            for j in 0..3 {
                t.push(vec![i.to_string(), j.to_string(), (i * j).to_string()]);
            }
        }
        let mut spec = PlotSpec::contour("x", "y", "z");
        spec.x_scale = AxisScale::Sqrt;
        let svg = render(&t, &spec).unwrap();
        assert_eq!(svg.matches(r#"<rect x="#).count(), 9 + 8 + 2);
        assert!(svg.contains("\u{221a}x"));
    }
}
