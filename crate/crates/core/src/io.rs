//! Flat-file outputs of the study drivers: CSV tables (full-precision
//! reals, LF line endings) and standalone log-log SVG plots with dashed
//! baselines, dotted reference-slope guides, and a legend.

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// A table row that knows its own header.
pub trait CsvRow {
    fn header() -> String;
    fn row(&self) -> String;
}

/// Full-precision real formatting (17 significant digits, round-trip safe).
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    format!("{:.16e}", x)
}

pub fn emit_csv<T: CsvRow>(rows: &[T], path: &str) -> Result<()> {
    let mut out = String::new();
    out.push_str(&T::header());
    out.push('\n');
    for r in rows {
        out.push_str(&r.row());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    Solid,
    Dashed,
    Dotted,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: LineStyle,
}

/// A dotted guide segment of fixed log-log slope anchored at a point.
#[derive(Debug, Clone)]
pub struct SlopeGuide {
    pub slope: f64,
    pub x0: f64,
    pub y0: f64,
    /// extent in decades of x
    pub decades: f64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub guides: Vec<SlopeGuide>,
}

const PALETTE: &[&str] = &[
    "#1f6fb4", "#d1495b", "#3a9d5d", "#8e44ad", "#e67e22", "#16a085", "#7f8c8d",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn dash(style: LineStyle) -> &'static str {
    match style {
        LineStyle::Solid => "",
        LineStyle::Dashed => " stroke-dasharray=\"8,4\"",
        LineStyle::Dotted => " stroke-dasharray=\"2,4\"",
    }
}

/// Write a log-log plot as a standalone SVG file.
pub fn emit_svg(spec: &PlotSpec, path: &str) -> Result<()> {
    let (w, h) = (760.0, 560.0);
    let (ml, mr, mt, mb) = (80.0, 200.0, 50.0, 60.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;

    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in &spec.series {
        for (&x, &y) in s.x.iter().zip(&s.y) {
            if x > 0.0 && y > 0.0 && y.is_finite() {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
        }
    }
    if !xmin.is_finite() || !ymin.is_finite() {
        return Err(Error::InvalidArgument(
            "plot has no positive finite data".into(),
        ));
    }
    // pad the log range slightly
    let (lx0, lx1) = (xmin.log10() - 0.05, xmax.log10() + 0.05);
    let (ly0, ly1) = (ymin.log10() - 0.1, ymax.log10() + 0.1);
    let sx = |x: f64| ml + (x.log10() - lx0) / (lx1 - lx0).max(1e-12) * pw;
    let sy = |y: f64| mt + ph - (y.log10() - ly0) / (ly1 - ly0).max(1e-12) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"17\">{}</text>",
        ml + pw / 2.0,
        xml_escape(&spec.title)
    );
    // axes box
    let _ = writeln!(
        svg,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    // decade ticks and grid
    for d in (lx0.floor() as i64)..=(lx1.ceil() as i64) {
        let x = 10f64.powi(d as i32);
        if x.log10() < lx0 || x.log10() > lx1 {
            continue;
        }
        let px = sx(x);
        let _ = writeln!(
            svg,
            "<line x1=\"{px}\" y1=\"{mt}\" x2=\"{px}\" y2=\"{}\" stroke=\"#dddddd\" stroke-width=\"0.7\"/>",
            mt + ph
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">1e{d}</text>",
            mt + ph + 18.0
        );
    }
    for d in (ly0.floor() as i64)..=(ly1.ceil() as i64) {
        let y = 10f64.powi(d as i32);
        if y.log10() < ly0 || y.log10() > ly1 {
            continue;
        }
        let py = sy(y);
        let _ = writeln!(
            svg,
            "<line x1=\"{ml}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#dddddd\" stroke-width=\"0.7\"/>",
            ml + pw
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e{d}</text>",
            ml - 6.0,
            py + 4.0
        );
    }
    // axis labels
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        ml + pw / 2.0,
        h - 14.0,
        xml_escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 20 {})\">{}</text>",
        mt + ph / 2.0,
        mt + ph / 2.0,
        xml_escape(&spec.y_label)
    );
    // series
    for (i, s) in spec.series.iter().enumerate() {
        let mut pts = String::new();
        for (&x, &y) in s.x.iter().zip(&s.y) {
            if x > 0.0 && y > 0.0 && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
            }
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{}/>",
            pts.trim_end(),
            color(i),
            dash(s.style)
        );
    }
    // reference-slope guides
    for g in &spec.guides {
        let x1 = g.x0 * 10f64.powf(g.decades);
        let y1 = g.y0 * 10f64.powf(g.slope * g.decades);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#555555\" stroke-width=\"1.2\"{}/>",
            sx(g.x0),
            sy(g.y0),
            sx(x1),
            sy(y1),
            dash(LineStyle::Dotted)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555555\">{}</text>",
            sx(x1) + 4.0,
            sy(y1),
            xml_escape(&g.label)
        );
    }
    // legend
    let lx = ml + pw + 14.0;
    let mut ly = mt + 10.0;
    for (i, s) in spec.series.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"1.6\"{}/>",
            lx + 28.0,
            color(i),
            dash(s.style)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            lx + 34.0,
            ly + 4.0,
            xml_escape(&s.label)
        );
        ly += 18.0;
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Row(f64, f64);
    impl CsvRow for Row {
        fn header() -> String {
            "a,b".into()
        }
        fn row(&self) -> String {
            format!("{},{}", fmt_g17(self.0), fmt_g17(self.1))
        }
    }

    #[test]
    fn csv_header_only_when_empty() {
        let path = std::env::temp_dir().join("hdg_csv_empty.csv");
        let path = path.to_str().unwrap();
        emit_csv::<Row>(&[], path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "a,b\n");
        let _ = std::fs::remove_file(path);
    }

    #[test]
    fn csv_roundtrips_bit_identically() {
        let rows = vec![
            Row(0.1, 1.0 / 3.0),
            Row(6.02e23, -7.25e-12),
            Row(std::f64::consts::PI, 2.0_f64.powi(-50)),
        ];
        let path = std::env::temp_dir().join("hdg_csv_roundtrip.csv");
        let path = path.to_str().unwrap();
        emit_csv(&rows, path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        for (line, r) in text.lines().skip(1).zip(&rows) {
            let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(vals[0].to_bits(), r.0.to_bits());
            assert_eq!(vals[1].to_bits(), r.1.to_bits());
        }
        let _ = std::fs::remove_file(path);
    }

    #[test]
    fn svg_is_wellformed_xml() {
        let spec = PlotSpec {
            title: "errors vs 1/h & friends".into(),
            x_label: "1/h".into(),
            y_label: "relative L2 error".into(),
            series: vec![
                Series {
                    label: "e_u <k=10>".into(),
                    x: vec![10.0, 20.0, 40.0],
                    y: vec![1e-1, 2.5e-2, 6e-3],
                    style: LineStyle::Solid,
                },
                Series {
                    label: "interp".into(),
                    x: vec![10.0, 20.0, 40.0],
                    y: vec![8e-2, 2e-2, 5e-3],
                    style: LineStyle::Dashed,
                },
            ],
            guides: vec![SlopeGuide {
                slope: -2.0,
                x0: 10.0,
                y0: 1e-1,
                decades: 0.5,
                label: "slope 2".into(),
            }],
        };
        let path = std::env::temp_dir().join("hdg_plot_check.svg");
        let path = path.to_str().unwrap();
        emit_svg(&spec, path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        // one polyline per series
        let polylines = doc
            .descendants()
            .filter(|n| n.tag_name().name() == "polyline")
            .count();
        assert_eq!(polylines, 2);
        let _ = std::fs::remove_file(path);
    }
}
