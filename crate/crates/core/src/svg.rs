//! Self-contained SVG power-curve charts, generated directly so the output
//! is deterministic and diffable.
//!
//! Each series becomes exactly one `<polyline>`; an analytic overlay, when
//! present, adds one dashed `<polyline>` in the same color.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mixture::MixtureSweep;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 58.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 46.0;

const PALETTE: [&str; 6] = [
    "#1e88e5", "#d81b60", "#00897b", "#fb8c00", "#5e35b1", "#546e7a",
];

/// One curve: simulated points plus an optional analytic overlay.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub analytic: Option<Vec<(f64, f64)>>,
}

/// Renders power curves over the mixing weight lambda.
///
/// Requires at least one series with at least two points each.
pub fn power_curve_svg(series: &[CurveSeries], title: &str) -> Result<String> {
    if series.is_empty() {
        return Err(Error::domain("no series to plot".to_string()));
    }
    for s in series {
        if s.points.len() < 2 {
            return Err(Error::domain(format!(
                "series `{}` needs at least 2 points",
                s.label
            )));
        }
    }

    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_min, x_max) = bounds(xs);
    let ys = series.iter().flat_map(|s| {
        s.points
            .iter()
            .map(|p| p.1)
            .chain(s.analytic.iter().flatten().map(|p| p.1))
    });
    let (y_lo, y_hi) = bounds(ys);
    // Pad the power axis to the surrounding 0.05 grid lines.
    let y_min = ((y_lo / 0.05).floor() * 0.05 - 1e-12).clamp(0.0, 1.0);
    let y_max = ((y_hi / 0.05).ceil() * 0.05 + 1e-12).clamp(0.0, 1.0);
    let (y_min, y_max) = if y_max - y_min < 0.05 {
        ((y_min - 0.05).max(0.0), (y_max + 0.05).min(1.0))
    } else {
        (y_min, y_max)
    };

    let x_span = (x_max - x_min).max(1e-12);
    let y_span = (y_max - y_min).max(1e-12);
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + (x - x_min) / x_span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
            HEIGHT - MARGIN_BOTTOM - (y - y_min) / y_span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM),
        )
    };

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();

    // Axes.
    let (x0, y0) = to_px(x_min, y_min);
    let (x1, _) = to_px(x_max, y_min);
    let (_, y1) = to_px(x_min, y_max);
    writeln!(
        out,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#
    )
    .unwrap();

    // Ticks.
    for i in 0..=10 {
        let x = x_min + x_span * i as f64 / 10.0;
        let (px, py) = to_px(x, y_min);
        writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{py:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
            py + 4.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            py + 18.0,
            trim_tick(x)
        )
        .unwrap();
    }
    let mut y = y_min;
    while y <= y_max + 1e-9 {
        let (px, py) = to_px(x_min, y);
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{px:.2}" y2="{py:.2}" stroke="black"/>"#,
            px - 4.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            px - 8.0,
            py + 4.0,
            trim_tick(y)
        )
        .unwrap();
        y += 0.05;
    }

    // Axis labels.
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">lambda</text>"#,
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">power</text>"#,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0
    )
    .unwrap();

    // Curves and legend.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(analytic) = &s.analytic {
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1" stroke-dasharray="5 4" points="{}"/>"#,
                polyline_points(analytic, &to_px)
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            polyline_points(&s.points, &to_px)
        )
        .unwrap();
        let legend_y = MARGIN_TOP + 6.0 + 16.0 * i as f64;
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{color}" stroke-width="2"/>"#,
            MARGIN_LEFT + 8.0,
            MARGIN_LEFT + 30.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            MARGIN_LEFT + 36.0,
            legend_y + 4.0,
            escape(&s.label)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Chart of a mixture sweep: MC, AU and combined curves with analytic
/// overlays, plus a marker line at the estimated crossing point.
pub fn mixture_svg(sweep: &MixtureSweep) -> Result<String> {
    let series = sweep_series(sweep);
    let mut svg = power_curve_svg(&series, &format!("Power across lambda ({})", sweep.id))?;
    if let Some(ls) = sweep.lambda_star {
        // Annotate lambda* as a footnote; the x scale is [0, 1] by
        // construction for mixture sweeps.
        let note = format!(
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">lambda* = {ls:.4}</text>"#,
            WIDTH - MARGIN_RIGHT,
            HEIGHT - 10.0
        );
        svg = svg.replace("</svg>", &format!("{note}\n</svg>"));
    }
    Ok(svg)
}

/// The three simulated curves of a sweep with their analytic overlays.
pub fn sweep_series(sweep: &MixtureSweep) -> Vec<CurveSeries> {
    let pick = |f: &dyn Fn(&crate::mixture::MixturePoint) -> (f64, f64)| -> Vec<(f64, f64)> {
        sweep.points.iter().map(f).collect()
    };
    vec![
        CurveSeries {
            label: "MC (Welch)".to_string(),
            points: pick(&|p| (p.lambda, p.mc.rate)),
            analytic: Some(pick(&|p| (p.lambda, p.analytic_mc))),
        },
        CurveSeries {
            label: "AU (WMW)".to_string(),
            points: pick(&|p| (p.lambda, p.au.rate)),
            analytic: Some(pick(&|p| (p.lambda, p.analytic_au))),
        },
        CurveSeries {
            label: "Combined".to_string(),
            points: pick(&|p| (p.lambda, p.combined.rate)),
            analytic: Some(pick(&|p| (p.lambda, p.analytic_combined))),
        },
    ]
}

fn polyline_points(points: &[(f64, f64)], to_px: &dyn Fn(f64, f64) -> (f64, f64)) -> String {
    points
        .iter()
        .map(|&(x, y)| {
            let (px, py) = to_px(x, y);
            format!("{px:.2},{py:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn trim_tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
