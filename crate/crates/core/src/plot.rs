//! Deterministic SVG rendering of barcodes: one horizontal segment per bar,
//! grouped by degree, infinite bars drawn with an arrowhead. Byte-identical
//! output for identical input, suitable for golden-file comparison.

use crate::error::Error;
use crate::persistence::Barcode;
use std::fmt::Write as _;
use std::path::Path;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn color(degree: i64) -> &'static str {
    let n = PALETTE.len() as i64;
    PALETTE[(((degree % n) + n) % n) as usize]
}

pub fn render_svg(barcode: &Barcode) -> String {
    let width = 640.0f64;
    let left = 70.0f64;
    let right = 40.0f64;
    let row_h = 16.0f64;
    let top = 34.0f64;

    // Expand multiplicities into rows, keeping the canonical order.
    let mut rows: Vec<(i64, f64, Option<f64>)> = Vec::new();
    for bar in &barcode.bars {
        for _ in 0..bar.multiplicity {
            rows.push((bar.degree, bar.birth, bar.death));
        }
    }
    let height = top + (rows.len().max(1) as f64) * row_h + 44.0;

    let min_v = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let max_fin = rows
        .iter()
        .filter_map(|r| r.2)
        .chain(rows.iter().map(|r| r.1))
        .fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if rows.is_empty() {
        (0.0, 1.0)
    } else if max_fin > min_v {
        (min_v, max_fin)
    } else {
        (min_v, min_v + 1.0)
    };
    let span = hi - lo;
    let scale = (width - left - right) / (span * 1.1);
    let x_of = |v: f64| left + (v - lo + span * 0.05) * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(
        svg,
        "<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"6\" refY=\"3\" orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\"/></marker></defs>"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{left:.1}\" y=\"20\" font-family=\"monospace\" font-size=\"13\">barcode ({} bars)</text>",
        rows.len()
    );

    for (i, &(degree, birth, death)) in rows.iter().enumerate() {
        let y = top + (i as f64 + 0.7) * row_h;
        let x0 = x_of(birth);
        let c = color(degree);
        let _ = writeln!(
            svg,
            "<text x=\"8\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" fill=\"{c}\">deg {degree}</text>",
            y + 4.0
        );
        match death {
            Some(d) => {
                let x1 = x_of(d);
                let _ = writeln!(
                    svg,
                    "<line x1=\"{x0:.2}\" y1=\"{y:.2}\" x2=\"{x1:.2}\" y2=\"{y:.2}\" stroke=\"{c}\" stroke-width=\"3\"/>"
                );
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{x0:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{c}\"/>"
                );
            }
            None => {
                let x1 = width - right + 14.0;
                let _ = writeln!(
                    svg,
                    "<line x1=\"{x0:.2}\" y1=\"{y:.2}\" x2=\"{x1:.2}\" y2=\"{y:.2}\" stroke=\"{c}\" stroke-width=\"3\" marker-end=\"url(#arrow)\"/>"
                );
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{x0:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{c}\"/>"
                );
            }
        }
    }

    // Axis with end ticks.
    let axis_y = height - 26.0;
    let _ = writeln!(
        svg,
        "<line x1=\"{left:.1}\" y1=\"{axis_y:.1}\" x2=\"{:.1}\" y2=\"{axis_y:.1}\" stroke=\"black\"/>",
        width - right
    );
    for (v, anchor) in [(lo, "start"), (hi, "end")] {
        let x = x_of(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{:.1}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"black\"/>",
            axis_y - 4.0,
            axis_y + 4.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"{anchor}\">{v:.6e}</text>",
            axis_y + 16.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write the SVG rendering to a file.
pub fn plot_barcode(barcode: &Barcode, path: &Path) -> Result<(), Error> {
    std::fs::write(path, render_svg(barcode))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::Bar;

    #[test]
    fn empty_barcode_renders_axes() {
        let svg = render_svg(&Barcode::default());
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<line"));
    }

    #[test]
    fn infinite_bars_get_arrows_and_output_is_stable() {
        let bc = Barcode::new(vec![
            Bar {
                degree: 0,
                birth: 0.0,
                death: None,
                multiplicity: 1,
            },
            Bar {
                degree: 2,
                birth: 0.5,
                death: None,
                multiplicity: 1,
            },
        ]);
        let a = render_svg(&bc);
        let b = render_svg(&bc);
        assert_eq!(a, b);
        assert_eq!(a.matches("marker-end").count(), 2);
    }
}
