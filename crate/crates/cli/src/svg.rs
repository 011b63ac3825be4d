//! Native SVG 1.1 rendering: polyline charts, overlaid probability bars, and
//! a dual-axis payoff/density panel. Plots are diagnostics — the CSV files
//! are the numeric contract — so the generator stays deliberately small:
//! fixed-size panels, five ticks per axis, no interactivity.

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 78.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 52.0;

pub const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#7f7f7f"];

/// One named line or bar set; series in a chart share the axes.
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

/// Pixel mapping for one panel, with the y axis flipped.
struct Frame {
    top: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let px = MARGIN_L + (x - x0) / (x1 - x0) * (PANEL_W - MARGIN_L - MARGIN_R);
        let py = self.top + MARGIN_T
            + (y1 - y) / (y1 - y0) * (PANEL_H - MARGIN_T - MARGIN_B);
        (px, py)
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = lo.abs() * 0.1 + 1e-9;
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.06;
    (lo - pad, hi + pad)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        return format!("{v:.1e}");
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn push_text(buf: &mut String, x: f64, y: f64, anchor: &str, size: f64, text: &str) {
    buf.push_str(&format!(
        "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\" \
         font-family=\"sans-serif\" font-size=\"{size}\">{}</text>\n",
        escape(text)
    ));
}

/// Frame rectangle, five ticks per axis, labels, and title.
fn push_axes(buf: &mut String, frame: &Frame, title: &str, x_label: &str, y_label: &str) {
    let (left, top) = (MARGIN_L, frame.top + MARGIN_T);
    let (right, bottom) = (PANEL_W - MARGIN_R, frame.top + PANEL_H - MARGIN_B);
    buf.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" \
         fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        right - left,
        bottom - top
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = frame.x_range.0 + f * (frame.x_range.1 - frame.x_range.0);
        let yv = frame.y_range.0 + f * (frame.y_range.1 - frame.y_range.0);
        let (px, _) = frame.map(xv, frame.y_range.0);
        let (_, py) = frame.map(frame.x_range.0, yv);
        buf.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{bottom}\" x2=\"{px:.1}\" y2=\"{}\" stroke=\"#333\"/>\n",
            bottom + 4.0
        ));
        push_text(buf, px, bottom + 18.0, "middle", 11.0, &fmt_tick(xv));
        buf.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.1}\" x2=\"{left}\" y2=\"{py:.1}\" stroke=\"#333\"/>\n",
            left - 4.0
        ));
        push_text(buf, left - 8.0, py + 4.0, "end", 11.0, &fmt_tick(yv));
    }
    push_text(
        buf,
        (left + right) / 2.0,
        bottom + 38.0,
        "middle",
        12.0,
        x_label,
    );
    buf.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    ));
    push_text(
        buf,
        (left + right) / 2.0,
        frame.top + 22.0,
        "middle",
        14.0,
        title,
    );
}

fn push_polyline(buf: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str) {
    if points.is_empty() {
        return;
    }
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| {
            let (px, py) = frame.map(x, y);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    buf.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        coords.join(" ")
    ));
}

fn push_legend(buf: &mut String, frame: &Frame, labels: &[&str]) {
    let x = PANEL_W - MARGIN_R - 150.0;
    for (i, label) in labels.iter().enumerate() {
        let y = frame.top + MARGIN_T + 14.0 + 16.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        buf.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            x + 18.0
        ));
        push_text(buf, x + 24.0, y + 4.0, "start", 11.0, label);
    }
}

fn document(height: f64, body: String) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL_W}\" height=\"{height}\" \
         viewBox=\"0 0 {PANEL_W} {height}\">\n<rect width=\"100%\" height=\"100%\" \
         fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn line_panel_body(
    buf: &mut String,
    top: f64,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) {
    let frame = Frame {
        top,
        x_range: padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))),
        y_range: padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
    };
    push_axes(buf, &frame, title, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        push_polyline(buf, &frame, &s.points, PALETTE[i % PALETTE.len()]);
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    push_legend(buf, &frame, &labels);
}

/// One panel of polylines.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut body = String::new();
    line_panel_body(&mut body, 0.0, title, x_label, y_label, series);
    document(PANEL_H, body)
}

/// Two stacked panels sharing a horizontal variable (e.g. real and
/// imaginary parts over the correlation grid).
pub fn two_panel_chart(
    titles: (&str, &str),
    x_label: &str,
    y_labels: (&str, &str),
    top_series: &[Series],
    bottom_series: &[Series],
) -> String {
    let mut body = String::new();
    line_panel_body(&mut body, 0.0, titles.0, x_label, y_labels.0, top_series);
    line_panel_body(
        &mut body,
        PANEL_H,
        titles.1,
        x_label,
        y_labels.1,
        bottom_series,
    );
    document(2.0 * PANEL_H, body)
}

/// Overlaid probability bars on shared bins. Each series must carry the same
/// bin centers; bar width comes from the center spacing.
pub fn bar_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let frame = Frame {
        top: 0.0,
        x_range: padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))),
        y_range: {
            let (_, hi) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
            (0.0, hi.max(1e-12))
        },
    };
    let width_data = series
        .first()
        .map(|s| {
            if s.points.len() > 1 {
                s.points[1].0 - s.points[0].0
            } else {
                1.0
            }
        })
        .unwrap_or(1.0);
    let mut body = String::new();
    push_axes(&mut body, &frame, title, x_label, "probability");
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for &(center, prob) in &s.points {
            if prob <= 0.0 {
                continue;
            }
            let (x_lo, y_top) = frame.map(center - width_data / 2.0, prob);
            let (x_hi, y_base) = frame.map(center + width_data / 2.0, 0.0);
            body.push_str(&format!(
                "<rect x=\"{x_lo:.2}\" y=\"{y_top:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                 fill=\"{color}\" fill-opacity=\"0.45\"/>\n",
                x_hi - x_lo,
                y_base - y_top
            ));
        }
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    push_legend(&mut body, &frame, &labels);
    document(PANEL_H, body)
}

/// Payoff curves on the left axis with a filled density profile against the
/// right axis.
pub fn dual_axis_chart(
    title: &str,
    x_label: &str,
    left_label: &str,
    left_series: &[Series],
    right_label: &str,
    right_series: &Series,
) -> String {
    let frame = Frame {
        top: 0.0,
        x_range: padded_range(
            left_series
                .iter()
                .chain(std::iter::once(right_series))
                .flat_map(|s| s.points.iter().map(|p| p.0)),
        ),
        y_range: padded_range(left_series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
    };
    let mut body = String::new();
    push_axes(&mut body, &frame, title, x_label, left_label);
    // Density: own vertical scale on the right edge, drawn first so the
    // payoff lines stay on top.
    let d_max = right_series
        .points
        .iter()
        .map(|p| p.1)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let (bottom_px, top_px) = (PANEL_H - MARGIN_B, MARGIN_T);
    let mut coords = Vec::with_capacity(right_series.points.len() + 2);
    let (first_px, _) = frame.map(right_series.points.first().map(|p| p.0).unwrap_or(0.0), 0.0);
    coords.push(format!("{first_px:.2},{bottom_px:.2}"));
    for &(x, d) in &right_series.points {
        let (px, _) = frame.map(x, 0.0);
        let py = bottom_px - d / d_max * (bottom_px - top_px);
        coords.push(format!("{px:.2},{py:.2}"));
    }
    let (last_px, _) = frame.map(right_series.points.last().map(|p| p.0).unwrap_or(0.0), 0.0);
    coords.push(format!("{last_px:.2},{bottom_px:.2}"));
    body.push_str(&format!(
        "<polygon points=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.35\" stroke=\"none\"/>\n",
        coords.join(" ")
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let py = bottom_px - f * (bottom_px - top_px);
        push_text(
            &mut body,
            PANEL_W - MARGIN_R + 8.0,
            py + 4.0,
            "start",
            11.0,
            &fmt_tick(f * d_max),
        );
    }
    body.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(90 {:.1} {:.1})\">{}</text>\n",
        PANEL_W - 14.0,
        (top_px + bottom_px) / 2.0,
        PANEL_W - 14.0,
        (top_px + bottom_px) / 2.0,
        escape(right_label)
    ));
    for (i, s) in left_series.iter().enumerate() {
        push_polyline(&mut body, &frame, &s.points, PALETTE[i % PALETTE.len()]);
    }
    let mut labels: Vec<&str> = left_series.iter().map(|s| s.label.as_str()).collect();
    labels.push(right_series.label.as_str());
    push_legend(&mut body, &frame, &labels);
    document(PANEL_H, body)
}
