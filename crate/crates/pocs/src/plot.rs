//! Minimal self-contained SVG emitter for success-rate curves: x = m/s,
//! y = success rate, one polyline per labeled curve.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::SuccessCurve;
use crate::io::io_err;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 7] = [
    "#1b6ca8", "#d1495b", "#2e933c", "#8f2d56", "#e09f3e", "#465362", "#7b2cbf",
];

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Renders labeled success curves into one SVG file. All curves must share
/// the sparsity order, which sets the m/s values on the x-axis.
pub fn emit_plot(curves: &[(String, SuccessCurve)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if curves.is_empty() {
        return Err(Error::Empty { what: "curve list" });
    }
    let s = curves[0].1.s;
    for (label, curve) in curves {
        if curve.s != s {
            return Err(Error::parameter(
                "curves",
                format!(
                    "curve {label:?} has sparsity order {} but the first curve has {s}",
                    curve.s
                ),
            ));
        }
    }
    if s == 0 {
        return Err(Error::parameter("s", "sparsity order must be positive".to_string()));
    }

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, curve) in curves {
        for row in &curve.rows {
            let x = row.m as f64 / s as f64;
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
    }
    if !x_min.is_finite() {
        // no data points anywhere; fix an arbitrary unit range
        x_min = 0.0;
        x_max = 1.0;
    }
    if x_max - x_min < 1e-12 {
        x_min -= 0.5;
        x_max += 0.5;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - y) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        b = MARGIN_TOP + plot_h
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>",
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h
    );

    // y ticks at 0, 0.25, ..., 1
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{x0}\" y1=\"{y:.2}\" x2=\"{x1}\" y2=\"{y:.2}\" stroke=\"#cccccc\"/>",
            x0 = MARGIN_LEFT,
            x1 = MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{ty:.2}\" text-anchor=\"end\">{v}</text>",
            x = MARGIN_LEFT - 8.0,
            ty = y + 4.0
        );
    }

    // x ticks: up to 8 integer-ish positions
    let span = x_max - x_min;
    let step = (span / 8.0).max(1e-12);
    let nice = [1.0, 2.0, 2.5, 5.0, 10.0];
    let pow = 10f64.powf(step.log10().floor());
    let step = nice
        .iter()
        .map(|f| f * pow)
        .find(|&c| c >= step)
        .unwrap_or(10.0 * pow);
    let mut tick = (x_min / step).ceil() * step;
    while tick <= x_max + 1e-9 {
        let x = px(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{b}\" x2=\"{x:.2}\" y2=\"{b2}\" stroke=\"black\"/>",
            b = MARGIN_TOP + plot_h,
            b2 = MARGIN_TOP + plot_h + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{ty}\" text-anchor=\"middle\">{tick}</text>",
            ty = MARGIN_TOP + plot_h + 20.0
        );
        tick += step;
    }

    // axis labels
    let _ = writeln!(
        svg,
        "<text x=\"{x:.2}\" y=\"{y}\" text-anchor=\"middle\">m/s</text>",
        x = MARGIN_LEFT + plot_w / 2.0,
        y = HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{y:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {y:.2})\">success rate</text>",
        y = MARGIN_TOP + plot_h / 2.0
    );

    // curves and legend
    for (idx, (label, curve)) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        if !curve.rows.is_empty() {
            let mut pts = String::new();
            for row in &curve.rows {
                let x = px(row.m as f64 / s as f64);
                let y = py(row.rate.clamp(0.0, 1.0));
                let _ = write!(pts, "{x:.2},{y:.2} ");
            }
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                pts.trim_end()
            );
            for row in &curve.rows {
                let x = px(row.m as f64 / s as f64);
                let y = py(row.rate.clamp(0.0, 1.0));
                let _ = writeln!(svg, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{color}\"/>");
            }
        }
        let ly = MARGIN_TOP + 16.0 + idx as f64 * 20.0;
        let lx = MARGIN_LEFT + plot_w + 16.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{ly:.2}\" x2=\"{x2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            x2 = lx + 22.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{tx}\" y=\"{ty:.2}\">{}</text>",
            escape_xml(label),
            tx = lx + 28.0,
            ty = ly + 4.0
        );
    }

    svg.push_str("</svg>\n");
    fs::write(path, svg).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::CurveRow;

    fn row(m: usize, rate: f64) -> CurveRow {
        CurveRow {
            m,
            trials: 10,
            successes: (rate * 10.0) as usize,
            rate,
            mean_error: 0.1,
            median_iters: 50.0,
        }
    }

    fn curve(s: usize, rows: Vec<CurveRow>) -> SuccessCurve {
        SuccessCurve {
            s,
            meta: Vec::new(),
            rows,
        }
    }

    fn temp_path(tag: &str) -> std::path::PathBuf {
        use std::sync::atomic::{AtomicU64, Ordering};
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let k = COUNTER.fetch_add(1, Ordering::Relaxed);
        std::env::temp_dir().join(format!("pocs-plot-{}-{tag}-{k}.svg", std::process::id()))
    }

    /// Tiny well-formedness check: every opened tag closes in order.
    fn assert_well_formed(xml: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = xml;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unterminated tag") + start;
            let tag = &rest[start + 1..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                let open = stack.pop().unwrap_or_else(|| panic!("stray closer {name}"));
                assert_eq!(open, name, "mismatched tags");
            } else if !tag.ends_with('/') {
                let name: String = tag.chars().take_while(|c| !c.is_whitespace()).collect();
                stack.push(name);
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
        assert!(!xml.contains("& "), "unescaped ampersand");
    }

    #[test]
    fn single_curve_two_points_has_one_polyline() {
        let curves = vec![("demo".to_string(), curve(3, vec![row(6, 0.2), row(12, 0.9)]))];
        let path = temp_path("single");
        emit_plot(&curves, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("<polyline").count(), 1);
        let pts = text
            .split("points=\"")
            .nth(1)
            .and_then(|t| t.split('"').next())
            .unwrap();
        assert_eq!(pts.split_whitespace().count(), 2, "two vertices");
        assert_well_formed(&text);
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn legend_labels_are_escaped_verbatim() {
        let curves = vec![
            ("fixed <&> ensemble".to_string(), curve(2, vec![row(4, 0.5)])),
            ("plain".to_string(), curve(2, vec![row(4, 0.7), row(8, 0.9)])),
        ];
        let path = temp_path("legend");
        emit_plot(&curves, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("fixed &lt;&amp;&gt; ensemble"));
        assert!(text.contains(">plain</text>"));
        assert!(!text.contains("fixed <&> ensemble"));
        assert_eq!(text.matches("<polyline").count(), 2);
        assert_well_formed(&text);
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn mismatched_sparsity_orders_are_rejected() {
        let curves = vec![
            ("a".to_string(), curve(3, vec![row(6, 0.2)])),
            ("b".to_string(), curve(2, vec![row(6, 0.2)])),
        ];
        assert!(emit_plot(&curves, temp_path("bad")).is_err());
        assert!(emit_plot(&[], temp_path("empty")).is_err());
    }
}
