//! SVG rendering of a results table: average power (log scale) against the
//! sweep variable, one polyline per scheme, legend labels matching the
//! scheme names.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{Scheme, SimError, ALL_SCHEMES};
use crate::table::ResultsTable;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

fn color(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Zf => "#1f77b4",
        Scheme::Rzf => "#ff7f0e",
        Scheme::PaRzf => "#2ca02c",
        Scheme::AOlp => "#d62728",
        Scheme::Olp => "#9467bd",
    }
}

/// Writes the table as an SVG line chart. The table must be nonempty and
/// carry at least one positive average power.
pub fn emit_plot(table: &ResultsTable, path: &Path) -> Result<(), SimError> {
    let svg = render_svg(table)?;
    std::fs::write(path, svg).map_err(|e| SimError::Io(path.display().to_string(), e))
}

pub(crate) fn render_svg(table: &ResultsTable) -> Result<String, SimError> {
    if table.rows.is_empty() {
        return Err(SimError::Config(
            "cannot plot an empty results table".into(),
        ));
    }

    // Series per scheme, keeping only plottable points.
    let mut series: Vec<(Scheme, Vec<(f64, f64)>)> = Vec::new();
    for scheme in ALL_SCHEMES {
        let points: Vec<(f64, f64)> = table
            .scheme_rows(scheme)
            .iter()
            .filter(|r| r.avg_power_watt > 0.0 && r.avg_power_watt.is_finite())
            .map(|r| (r.value, r.avg_power_watt))
            .collect();
        if !points.is_empty() {
            series.push((scheme, points));
        }
    }
    if series.is_empty() {
        return Err(SimError::Config(
            "results table has no positive powers to plot".into(),
        ));
    }

    let xs: Vec<f64> = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|q| q.0))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|q| q.1))
        .collect();
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let (x_min, x_max) = pad_linear(x_min, x_max);
    let (ly_min, ly_max) = pad_linear(y_min.log10(), y_max.log10());

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_px = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let y_px = |y: f64| MARGIN_TOP + (1.0 - (y.log10() - ly_min) / (ly_max - ly_min)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    // X ticks.
    let x_label = match table.rows[0].sweep_param.as_str() {
        "antennas" => "Number of antennas N",
        _ => "Rate per user [bit/s/Hz]",
    };
    for i in 0..=5 {
        let x = x_min + (x_max - x_min) * i as f64 / 5.0;
        let px = x_px(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{0}" x2="{px:.2}" y2="{1}" stroke="black"/>"#,
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 6.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{0}" font-size="12" text-anchor="middle">{x:.3}</text>"#,
            MARGIN_TOP + plot_h + 20.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{0:.2}" y="{1:.2}" font-size="14" text-anchor="middle">{x_label}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );

    // Y ticks at whole decades.
    let first_decade = ly_min.ceil() as i64;
    let last_decade = ly_max.floor() as i64;
    for d in first_decade..=last_decade {
        let py = y_px(10f64.powi(d as i32));
        let _ = writeln!(
            svg,
            r#"<line x1="{0}" y1="{py:.2}" x2="{1}" y2="{py:.2}" stroke="black"/>"#,
            MARGIN_LEFT - 6.0,
            MARGIN_LEFT
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{py:.2}" x2="{0:.2}" y2="{py:.2}" stroke="#dddddd"/>"##,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{0}" y="{1:.2}" font-size="12" text-anchor="end">1e{d}</text>"#,
            MARGIN_LEFT - 10.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {0:.2})">Average transmit power [W]</text>"#,
        MARGIN_TOP + plot_h / 2.0
    );

    // Series and legend.
    for (idx, (scheme, points)) in series.iter().enumerate() {
        let mut coords = String::new();
        for (x, y) in points {
            let _ = write!(coords, "{:.2},{:.2} ", x_px(*x), y_px(*y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            color(*scheme),
            coords.trim_end()
        );
        let ly = MARGIN_TOP + 16.0 + 22.0 * idx as f64;
        let lx = MARGIN_LEFT + plot_w + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{0:.2}" y2="{ly:.2}" stroke="{1}" stroke-width="2"/>"#,
            lx + 26.0,
            color(*scheme)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{0:.2}" y="{1:.2}" font-size="13">{2}</text>"#,
            lx + 32.0,
            ly + 4.0,
            scheme.label()
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

fn pad_linear(min: f64, max: f64) -> (f64, f64) {
    if max > min {
        (min, max)
    } else {
        (min - 0.5, max + 0.5)
    }
}
