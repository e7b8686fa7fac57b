//! Minimal self-contained SVG line charts for the report figures.
//!
//! No styling dependencies: everything is inlined so the files render
//! anywhere. Output is deterministic for a given chart.

use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#e377c2",
];

/// One polyline with a legend label.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

/// A titled line chart with linear axes.
#[derive(Debug, Clone)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl LineChart {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn push(&mut self, series: Series) {
        self.series.push(series);
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        }
        if !xs.0.is_finite() {
            xs = (0.0, 1.0);
            ys = (0.0, 1.0);
        }
        if xs.0 == xs.1 {
            xs = (xs.0 - 0.5, xs.1 + 0.5);
        }
        if ys.0 == ys.1 {
            ys = (ys.0 - 0.5, ys.1 + 0.5);
        }
        // Pad the value axis so lines keep clear of the frame.
        let pad = (ys.1 - ys.0) * 0.08;
        (xs, (ys.0 - pad, ys.1 + pad))
    }

    pub fn to_svg(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"Helvetica,Arial,sans-serif\">\n"
        ));
        svg.push_str(&format!(
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"28\" font-size=\"18\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Grid and ticks.
        for (tick, label) in ticks(x0, x1) {
            let px = sx(tick);
            svg.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
                MARGIN_TOP,
                MARGIN_TOP + plot_h
            ));
            svg.push_str(&format!(
                "<text x=\"{px:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{label}</text>\n",
                MARGIN_TOP + plot_h + 20.0
            ));
        }
        for (tick, label) in ticks(y0, y1) {
            let py = sy(tick);
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#dddddd\"/>\n",
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{label}</text>\n",
                MARGIN_LEFT - 8.0,
                py + 4.0
            ));
        }

        // Axes frame.
        svg.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
             fill=\"none\" stroke=\"black\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\" \
             transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        ));

        // Series.
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                path.join(" ")
            ));
            for &(x, y) in &series.points {
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                    sx(x),
                    sy(y)
                ));
            }
        }

        // Legend.
        let legend_x = MARGIN_LEFT + plot_w - 170.0;
        let mut legend_y = MARGIN_TOP + 14.0;
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            svg.push_str(&format!(
                "<line x1=\"{legend_x:.1}\" y1=\"{legend_y:.1}\" x2=\"{:.1}\" y2=\"{legend_y:.1}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n",
                legend_x + 24.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
                legend_x + 30.0,
                legend_y + 4.0,
                escape(&series.label)
            ));
            legend_y += 18.0;
        }

        svg.push_str("</svg>\n");
        svg
    }

    pub fn write_svg(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_svg())?;
        Ok(())
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// About five round-valued ticks covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let span = hi - lo;
    let raw_step = span / 5.0;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|&s| s >= raw_step)
        .unwrap_or(magnitude * 10.0);
    let mut out = Vec::new();
    let mut tick = (lo / step).ceil() * step;
    while tick <= hi + step * 1e-9 {
        let label = if step >= 1.0 {
            format!("{tick:.0}")
        } else if step >= 0.1 {
            format!("{tick:.1}")
        } else if step >= 0.01 {
            format!("{tick:.2}")
        } else {
            format!("{tick:.3}")
        };
        out.push((tick, label));
        tick += step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let mut chart = LineChart::new("Demo", "x", "y");
        chart.push(Series::new("a", vec![(0.0, 0.1), (1.0, 0.4), (2.0, 0.2)]));
        chart.push(Series::new("b", vec![(0.0, 0.3), (1.0, 0.1), (2.0, 0.5)]));
        let svg = chart.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("Demo"));
        assert!(svg.contains("#1f77b4"));
    }

    #[test]
    fn deterministic_output() {
        let mut chart = LineChart::new("t", "x", "y");
        chart.push(Series::new("s", vec![(0.0, 1.0), (1.0, 2.0)]));
        assert_eq!(chart.to_svg(), chart.to_svg());
    }

    #[test]
    fn handles_degenerate_ranges() {
        let mut chart = LineChart::new("flat", "x", "y");
        chart.push(Series::new("s", vec![(1.0, 0.5), (1.0, 0.5)]));
        let svg = chart.to_svg();
        assert!(svg.contains("<polyline"));
        let empty = LineChart::new("empty", "x", "y");
        assert!(empty.to_svg().contains("</svg>"));
    }

    #[test]
    fn escapes_markup_in_labels() {
        let chart = LineChart::new("a < b & c", "x", "y");
        let svg = chart.to_svg();
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
