//! Minimal SVG charts: bars, scatter, heatmap and ROC curves.
//!
//! Coordinates are printed with two decimals so output is byte-stable.
//! Every document starts with an XML comment carrying caller-supplied
//! provenance text.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(width: f64, height: f64, title: &str, provenance: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(out, "<!-- {} -->", provenance.replace("--", "- -"));
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        width / 2.0,
        escape(title)
    );
    out
}

fn close(mut out: String) -> String {
    out.push_str("</svg>\n");
    out
}

/// Horizontal bars, one per label, longest first as given.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64], provenance: &str) -> String {
    let (left, bar_h, width) = (170.0, 14.0, 640.0);
    let height = 40.0 + bar_h * labels.len() as f64 + 20.0;
    let max = values.iter().copied().fold(0.0, f64::max).max(1e-300);
    let span = width - left - 80.0;
    let mut out = open(width, height, title, provenance);
    for (i, (l, &v)) in labels.iter().zip(values).enumerate() {
        let y = 35.0 + bar_h * i as f64;
        let w = span * v.max(0.0) / max;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            left - 4.0,
            y + bar_h * 0.75,
            escape(l)
        );
        let _ = writeln!(
            out,
            "<rect x=\"{left:.2}\" y=\"{:.2}\" width=\"{w:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            y + 1.0,
            bar_h - 2.0,
            PALETTE[0]
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"9\">{v:.4}</text>",
            left + w + 3.0,
            y + bar_h * 0.75
        );
    }
    close(out)
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
            self.x0, self.y0, self.w, self.h
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 30.0,
            escape(xlabel)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 {:.2} {:.2})\">{}</text>",
            self.x0 - 35.0,
            self.y0 + self.h / 2.0,
            self.x0 - 35.0,
            self.y0 + self.h / 2.0,
            escape(ylabel)
        );
        for (v, anchor_x) in [(self.xr.0, self.x0), (self.xr.1, self.x0 + self.w)] {
            let _ = writeln!(
                out,
                "<text x=\"{anchor_x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\">{v:.2}</text>",
                self.y0 + self.h + 14.0
            );
        }
        for (v, anchor_y) in [(self.yr.0, self.y0 + self.h), (self.yr.1, self.y0)] {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{anchor_y:.2}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"end\">{v:.2}</text>",
                self.x0 - 4.0
            );
        }
    }
}

fn legend(out: &mut String, x: f64, y: f64, names: &[String]) {
    for (i, n) in names.iter().enumerate() {
        let yy = y + 14.0 * i as f64;
        let _ = writeln!(out, "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/>", yy - 9.0, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{yy:.2}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>",
            x + 14.0,
            escape(n)
        );
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

/// 2-D points coloured by class index.
pub fn scatter(title: &str, points: &[[f64; 2]], labels: &[usize], class_names: &[String], provenance: &str) -> String {
    let (width, height) = (620.0, 480.0);
    let frame = Frame {
        x0: 60.0,
        y0: 35.0,
        w: 420.0,
        h: 400.0,
        xr: padded_range(points.iter().map(|p| p[0])),
        yr: padded_range(points.iter().map(|p| p[1])),
    };
    let mut out = open(width, height, title, provenance);
    frame.axes(&mut out, "PC1", "PC2");
    for (p, &l) in points.iter().zip(labels) {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\" fill=\"{}\" fill-opacity=\"0.5\"/>",
            frame.px(p[0]),
            frame.py(p[1]),
            PALETTE[l % PALETTE.len()]
        );
    }
    legend(&mut out, 495.0, 50.0, class_names);
    close(out)
}

/// Square matrix of values in [-1, 1]; `None` cells are drawn grey.
pub fn heatmap(title: &str, names: &[String], values: &[Vec<Option<f64>>], provenance: &str) -> String {
    let n = names.len();
    let cell = 10.0;
    let left = 130.0;
    let top = 40.0;
    let size = left + cell * n as f64 + 20.0;
    let mut out = open(size, size + 90.0, title, provenance);
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let fill = match v {
                None => "#cccccc".to_string(),
                Some(v) => {
                    let t = v.clamp(-1.0, 1.0);
                    let (r, g, b) = if t >= 0.0 {
                        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
                    } else {
                        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
                    };
                    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
                }
            };
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"{fill}\"/>",
                left + cell * j as f64,
                top + cell * i as f64
            );
        }
    }
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"7\" text-anchor=\"end\">{}</text>",
            left - 3.0,
            top + cell * i as f64 + 7.5,
            escape(name)
        );
    }
    close(out)
}

/// ROC curves, one polyline per named series of `(fpr, tpr)` points.
pub fn roc_plot(title: &str, curves: &[(String, Vec<(f64, f64)>)], provenance: &str) -> String {
    let frame = Frame { x0: 60.0, y0: 35.0, w: 400.0, h: 400.0, xr: (0.0, 1.0), yr: (0.0, 1.0) };
    let mut out = open(620.0, 480.0, title, provenance);
    frame.axes(&mut out, "false positive rate", "true positive rate");
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>",
        frame.px(0.0),
        frame.py(0.0),
        frame.px(1.0),
        frame.py(1.0)
    );
    for (i, (_, pts)) in curves.iter().enumerate() {
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
            path.join(" "),
            PALETTE[i % PALETTE.len()]
        );
    }
    let names: Vec<String> = curves.iter().map(|c| c.0.clone()).collect();
    legend(&mut out, 475.0, 50.0, &names);
    close(out)
}
