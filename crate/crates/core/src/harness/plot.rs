//! Hand-rolled SVG learning-curve plots: one mean line plus a +/- std band
//! per variant, fixed axes covering the full run length and the 0..500
//! return range, and a legend keyed by variant label.

use super::AggregateRow;

/// One plotted variant.
#[derive(Debug, Clone)]
pub struct VariantSeries {
    pub label: String,
    pub rows: Vec<AggregateRow>,
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 230.0;
const MARGIN_T: f64 = 48.0;
const MARGIN_B: f64 = 64.0;
const Y_MAX: f64 = 520.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Smallest positive gap between consecutive bin starts, used to place
/// points at bin centers; falls back to the default width.
fn infer_bin_width(rows: &[AggregateRow]) -> u64 {
    rows.windows(2)
        .map(|w| w[1].bin_start - w[0].bin_start)
        .filter(|d| *d > 0)
        .min()
        .unwrap_or(super::DEFAULT_BIN_WIDTH)
}

/// Renders the full chart. `x_hint` forces the x-axis to cover at least
/// that many steps (pass the run's total steps so sparse data cannot
/// shrink the axis); 0 lets the data decide.
pub fn render_svg(series: &[VariantSeries], title: &str, x_hint: u64) -> String {
    let data_max = series
        .iter()
        .flat_map(|s| {
            let w = infer_bin_width(&s.rows);
            s.rows.iter().map(move |r| r.bin_start + w)
        })
        .max()
        .unwrap_or(0);
    let x_max = data_max.max(x_hint).max(1) as f64;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |step: f64| MARGIN_L + step / x_max * plot_w;
    let y_of = |ret: f64| MARGIN_T + (Y_MAX - ret.clamp(0.0, Y_MAX)) / Y_MAX * plot_h;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"28\" font-size=\"17\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        esc(title)
    ));

    // Gridlines and ticks.
    let x_tick = nice_tick(x_max, 6.0);
    let mut t = 0.0;
    while t <= x_max + 1e-9 {
        let x = x_of(t);
        out.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_T,
            MARGIN_T + plot_h
        ));
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h + 20.0,
            t as u64
        ));
        t += x_tick;
    }
    for ret in (0..=500).step_by(100) {
        let y = y_of(ret as f64);
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_L,
            MARGIN_L + plot_w
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{ret}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0
        ));
    }

    // Axes on top of the grid.
    out.push_str(&format!(
        "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        MARGIN_L,
        MARGIN_T,
        MARGIN_T + plot_h
    ));
    out.push_str(&format!(
        "<line x1=\"{0:.1}\" y1=\"{2:.1}\" x2=\"{1:.1}\" y2=\"{2:.1}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        MARGIN_L,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\">environment steps</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 16.0
    ));
    out.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\" \
         transform=\"rotate(-90 20 {:.1})\">episodic return</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    ));

    // Series: band first, line on top.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let w = infer_bin_width(&s.rows) as f64;
        let center = |r: &AggregateRow| r.bin_start as f64 + w / 2.0;
        if s.rows.is_empty() {
            continue;
        }
        let mut band = String::new();
        for r in &s.rows {
            band.push_str(&format!(
                "{:.2},{:.2} ",
                x_of(center(r)),
                y_of(r.mean + r.std)
            ));
        }
        for r in s.rows.iter().rev() {
            band.push_str(&format!(
                "{:.2},{:.2} ",
                x_of(center(r)),
                y_of(r.mean - r.std)
            ));
        }
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n",
            band.trim_end()
        ));
        let line: Vec<String> = s
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x_of(center(r)), y_of(r.mean)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            line.join(" ")
        ));
    }

    // Legend.
    let legend_x = MARGIN_L + plot_w + 18.0;
    let mut legend_y = MARGIN_T + 10.0;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        out.push_str(&format!(
            "<line x1=\"{legend_x:.1}\" y1=\"{legend_y:.1}\" x2=\"{:.1}\" y2=\"{legend_y:.1}\" \
             stroke=\"{color}\" stroke-width=\"2.5\"/>\n",
            legend_x + 26.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\">{}</text>\n",
            legend_x + 32.0,
            legend_y + 4.0,
            esc(&s.label)
        ));
        legend_y += 22.0;
    }

    out.push_str("</svg>\n");
    out
}

/// A tick spacing of the form {1, 2, 5} * 10^k giving about `target`
/// divisions of `span`.
fn nice_tick(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    step * mag
}
