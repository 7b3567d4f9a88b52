//! Minimal self-contained SVG rendering of the aggregated learning curves:
//! mean test loss for both evaluation sets on a log-scaled step axis, each
//! with a ±1-standard-deviation band and a legend.

use crate::error::{Error, Result};
use crate::experiment::SummaryRow;
use std::io::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;

const COLOR_NG: &str = "#c0392b";
const COLOR_GE: &str = "#2c6fbb";
pub const LABEL_NG: &str = "non-Gaussian";
pub const LABEL_GE: &str = "Gaussian equivalent";

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, step: u64) -> f64 {
        let t = if self.x_hi > self.x_lo {
            ((step as f64).log10() - self.x_lo) / (self.x_hi - self.x_lo)
        } else {
            0.5
        };
        MARGIN_L + t * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let t = if self.y_hi > self.y_lo {
            (v - self.y_lo) / (self.y_hi - self.y_lo)
        } else {
            0.5
        };
        HEIGHT - MARGIN_B - t * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn fmt(v: f64) -> String {
    // Fixed short form keeps the SVG byte-stable and readable.
    format!("{v:.2}")
}

fn band_path(frame: &Frame, rows: &[SummaryRow], mean: fn(&SummaryRow) -> f64, std: fn(&SummaryRow) -> f64) -> String {
    let upper: Vec<String> = rows
        .iter()
        .map(|r| format!("{},{}", fmt(frame.x(r.step)), fmt(frame.y(mean(r) + std(r)))))
        .collect();
    let lower: Vec<String> = rows
        .iter()
        .rev()
        .map(|r| format!("{},{}", fmt(frame.x(r.step)), fmt(frame.y(mean(r) - std(r)))))
        .collect();
    format!("{} {}", upper.join(" "), lower.join(" "))
}

fn mean_points(frame: &Frame, rows: &[SummaryRow], mean: fn(&SummaryRow) -> f64) -> String {
    rows.iter()
        .map(|r| format!("{},{}", fmt(frame.x(r.step)), fmt(frame.y(mean(r)))))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Render the aggregated curves as an SVG document. A single-checkpoint
/// result degenerates to two markers instead of polylines but stays valid.
pub fn emit_plot<W: Write>(rows: &[SummaryRow], w: &mut W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    if rows.iter().any(|r| {
        !(r.non_gauss_mean.is_finite()
            && r.non_gauss_std.is_finite()
            && r.gauss_eq_mean.is_finite()
            && r.gauss_eq_std.is_finite())
    }) {
        return Err(Error::InvalidParameter("non-finite plot values".into()));
    }
    let x_lo = (rows.first().unwrap().step.max(1) as f64).log10();
    let x_hi = (rows.last().unwrap().step.max(1) as f64).log10();
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for r in rows {
        y_lo = y_lo
            .min(r.non_gauss_mean - r.non_gauss_std)
            .min(r.gauss_eq_mean - r.gauss_eq_std);
        y_hi = y_hi
            .max(r.non_gauss_mean + r.non_gauss_std)
            .max(r.gauss_eq_mean + r.gauss_eq_std);
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let pad = 0.05 * (y_hi - y_lo);
    let frame = Frame {
        x_lo,
        x_hi,
        y_lo: y_lo - pad,
        y_hi: y_hi + pad,
    };

    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">"
    )?;
    writeln!(
        w,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    )?;

    // Axes.
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    writeln!(
        w,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    )?;
    writeln!(
        w,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    )?;

    // Decade ticks on the log-step axis.
    let lo_decade = x_lo.floor() as i64;
    let hi_decade = x_hi.ceil() as i64;
    for e in lo_decade..=hi_decade {
        let step = 10f64.powi(e as i32);
        if step < 10f64.powf(x_lo) * 0.999 || step > 10f64.powf(x_hi) * 1.001 {
            continue;
        }
        let xt = frame.x(step.round() as u64);
        writeln!(
            w,
            "<line x1=\"{}\" y1=\"{y0}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(xt),
            fmt(xt),
            fmt(y0 + 5.0)
        )?;
        writeln!(
            w,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">1e{e}</text>",
            fmt(xt),
            fmt(y0 + 20.0)
        )?;
    }
    // Five evenly spaced ticks on the loss axis.
    for i in 0..=4 {
        let v = frame.y_lo + i as f64 / 4.0 * (frame.y_hi - frame.y_lo);
        let yt = frame.y(v);
        writeln!(
            w,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{x0}\" y2=\"{}\" stroke=\"black\"/>",
            fmt(x0 - 5.0),
            fmt(yt),
            fmt(yt)
        )?;
        writeln!(
            w,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            fmt(x0 - 8.0),
            fmt(yt + 4.0),
            fmt(v)
        )?;
    }
    writeln!(
        w,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">SGD step</text>",
        fmt(0.5 * (x0 + x1)),
        fmt(HEIGHT - 10.0)
    )?;
    writeln!(
        w,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">test loss</text>",
        fmt(0.5 * (y0 + y1)),
        fmt(0.5 * (y0 + y1))
    )?;

    type RowStat = fn(&SummaryRow) -> f64;
    let curves: [(&str, &str, RowStat, RowStat); 2] = [
        (
            COLOR_NG,
            LABEL_NG,
            |r: &SummaryRow| r.non_gauss_mean,
            |r: &SummaryRow| r.non_gauss_std,
        ),
        (
            COLOR_GE,
            LABEL_GE,
            |r: &SummaryRow| r.gauss_eq_mean,
            |r: &SummaryRow| r.gauss_eq_std,
        ),
    ];
    for (color, _, mean, std) in curves {
        if rows.len() > 1 {
            writeln!(
                w,
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>",
                band_path(&frame, rows, mean, std)
            )?;
        }
    }
    for (color, _, mean, _) in curves {
        if rows.len() > 1 {
            writeln!(
                w,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                mean_points(&frame, rows, mean)
            )?;
        } else {
            let r = &rows[0];
            writeln!(
                w,
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{color}\"/>",
                fmt(frame.x(r.step)),
                fmt(frame.y(mean(r)))
            )?;
        }
    }

    // Legend.
    let lx = x1 - 230.0;
    let ly = y1 + 10.0;
    writeln!(
        w,
        "<rect x=\"{}\" y=\"{}\" width=\"220\" height=\"52\" fill=\"white\" stroke=\"#999\"/>",
        fmt(lx),
        fmt(ly)
    )?;
    for (i, (color, label, _, _)) in curves.iter().enumerate() {
        let yy = ly + 18.0 + 20.0 * i as f64;
        writeln!(
            w,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"3\"/>",
            fmt(lx + 10.0),
            fmt(yy - 4.0),
            fmt(lx + 40.0),
            fmt(yy - 4.0)
        )?;
        writeln!(
            w,
            "<text x=\"{}\" y=\"{}\">{label}</text>",
            fmt(lx + 48.0),
            fmt(yy)
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u64, ng: f64, ge: f64, s: f64) -> SummaryRow {
        SummaryRow {
            step,
            non_gauss_mean: ng,
            non_gauss_std: s,
            gauss_eq_mean: ge,
            gauss_eq_std: s,
        }
    }

    fn render(rows: &[SummaryRow]) -> String {
        let mut buf = Vec::new();
        emit_plot(rows, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn full_curve_has_two_polylines_bands_and_legend() {
        let rows: Vec<SummaryRow> = (0..25)
            .map(|i| {
                let step = (10f64.powf(i as f64 / 6.0)).round() as u64;
                row(step.max(1) + i, 1.0 / (1.0 + i as f64), 1.1 / (1.0 + i as f64), 0.03)
            })
            .collect();
        let svg = render(&rows);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert!(svg.contains(LABEL_NG));
        assert!(svg.contains(LABEL_GE));
        assert!(svg.contains("viewBox"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // Each polyline carries all 25 vertices.
        let poly = svg.split("<polyline").nth(1).unwrap();
        let pts = poly.split('"').nth(1).unwrap();
        assert_eq!(pts.split(' ').count(), 25);
    }

    #[test]
    fn single_checkpoint_degenerates_to_markers() {
        let svg = render(&[row(100, 0.9, 0.8, 0.05)]);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn frame_bounds_cover_all_bands() {
        let rows = vec![row(1, 0.5, 0.7, 0.1), row(1000, 0.2, 0.4, 0.05)];
        let svg = render(&rows);
        // All plotted y-coordinates stay inside the canvas.
        for part in svg.split("points=\"").skip(1) {
            let pts = part.split('"').next().unwrap();
            for pair in pts.split(' ') {
                let (x, y) = pair.split_once(',').unwrap();
                let x: f64 = x.parse().unwrap();
                let y: f64 = y.parse().unwrap();
                assert!((0.0..=WIDTH).contains(&x), "x out of canvas: {x}");
                assert!((0.0..=HEIGHT).contains(&y), "y out of canvas: {y}");
            }
        }
    }

    #[test]
    fn rejects_empty_and_non_finite_input() {
        let mut buf = Vec::new();
        assert!(emit_plot(&[], &mut buf).is_err());
        assert!(emit_plot(&[row(10, f64::NAN, 1.0, 0.0)], &mut buf).is_err());
    }

    #[test]
    fn output_is_byte_stable() {
        let rows = vec![row(1, 0.5, 0.7, 0.1), row(10, 0.4, 0.6, 0.1), row(100, 0.2, 0.4, 0.0)];
        assert_eq!(render(&rows), render(&rows));
    }
}
