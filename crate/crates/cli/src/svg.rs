//! Hand-rolled SVG bar chart for homophily histograms. No plotting
//! dependency; the numeric attributes are written directly so tests can
//! parse them back.

use ihgnn_core::graph::HistogramBin;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 44.0;

/// Renders the histogram as a standalone SVG document. Every bar carries
/// `data-lo`, `data-hi`, and `data-count` attributes.
pub fn histogram_svg(title: &str, bins: &[HistogramBin]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let max_count = bins.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str(&format!(
        "  <text x=\"{}\" y=\"16\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));
    // Axes.
    s.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));
    s.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h
    ));
    s.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + 4.0,
        max_count as usize
    ));
    s.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n",
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + plot_h + 4.0
    ));
    let bar_w = plot_w / bins.len() as f64;
    for (i, bin) in bins.iter().enumerate() {
        let h = plot_h * bin.count as f64 / max_count;
        let x = MARGIN_LEFT + i as f64 * bar_w;
        let y = MARGIN_TOP + plot_h - h;
        s.push_str(&format!(
            "  <rect class=\"bar\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"#4878a8\" data-lo=\"{}\" data-hi=\"{}\" data-count=\"{}\"/>\n",
            (bar_w - 2.0).max(1.0),
            bin.lo,
            bin.hi,
            bin.count
        ));
        s.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{:.2}</text>\n",
            x,
            MARGIN_TOP + plot_h + 14.0,
            bin.lo
        ));
    }
    s.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">1.00</text>\n",
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h + 14.0
    ));
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bars_carry_the_counts_and_scale_with_them() {
        let bins = vec![
            HistogramBin { lo: 0.0, hi: 0.5, count: 1 },
            HistogramBin { lo: 0.5, hi: 1.0, count: 4 },
        ];
        let svg = histogram_svg("t", &bins);
        assert_eq!(svg.matches("<rect class=\"bar\"").count(), 2);
        assert!(svg.contains("data-count=\"1\""));
        assert!(svg.contains("data-count=\"4\""));
        // The fuller bin's bar is four times as tall.
        let heights: Vec<f64> = svg
            .lines()
            .filter(|l| l.contains("class=\"bar\""))
            .map(|l| attr_value(l, "height"))
            .collect();
        assert!((heights[1] / heights[0] - 4.0).abs() < 1e-9);
    }

    fn attr_value(line: &str, name: &str) -> f64 {
        let key = format!("{name}=\"");
        let start = line.find(&key).unwrap() + key.len();
        let end = line[start..].find('"').unwrap() + start;
        line[start..end].parse().unwrap()
    }
}
