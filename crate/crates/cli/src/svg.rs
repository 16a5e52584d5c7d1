//! Standalone SVG scatter plot of solver means with the Pareto front marked.

use std::fmt::Write;

use brg_core::experiments::ParetoPoint;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 110.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
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

/// Data range padded by 10% on each side, never empty.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
    (lo - 0.1 * span, hi + 0.1 * span)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Renders `points` with front members filled and the region they dominate shaded.
pub fn scatter(points: &[ParetoPoint], on_front: &[bool], x_label: &str, y_label: &str) -> String {
    let frame = Frame {
        x: padded_range(points.iter().map(|p| p.x)),
        y: padded_range(points.iter().map(|p| p.y)),
    };
    let left = MARGIN_LEFT;
    let right = WIDTH - MARGIN_RIGHT;
    let top = MARGIN_TOP;
    let bottom = HEIGHT - MARGIN_BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Union of the quadrants below-left of each front point, as a staircase.
    let mut front: Vec<&ParetoPoint> = points.iter().zip(on_front).filter(|(_, &f)| f).map(|(p, _)| p).collect();
    front.sort_by(|a, b| a.x.total_cmp(&b.x).then(b.y.total_cmp(&a.y)));
    front.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if !front.is_empty() {
        let mut path = format!("M{left:.2},{bottom:.2} L{left:.2},{:.2}", frame.py(front[0].y));
        for (i, p) in front.iter().enumerate() {
            let _ = write!(path, " L{:.2},{:.2}", frame.px(p.x), frame.py(p.y));
            if let Some(next) = front.get(i + 1) {
                let _ = write!(path, " L{:.2},{:.2}", frame.px(p.x), frame.py(next.y));
            }
        }
        let last = front[front.len() - 1];
        let _ = write!(path, " L{:.2},{bottom:.2} Z", frame.px(last.x));
        let _ = writeln!(
            s,
            r##"<path class="dominated" d="{path}" fill="#9ecae1" fill-opacity="0.35" stroke="#3182bd" stroke-dasharray="4 3"/>"##
        );
    }

    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let (xp, yp) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{bottom:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"#,
            bottom + 5.0,
            bottom + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{left:.2}" y2="{yp:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            left - 5.0,
            left - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    );

    for (p, &f) in points.iter().zip(on_front) {
        let (cx, cy) = (frame.px(p.x), frame.py(p.y));
        let (class, fill) = if f { ("front", "#d62728") } else { ("dominated-point", "white") };
        let _ = writeln!(
            s,
            r##"<circle class="{class}" cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{fill}" stroke="#222"><title>{}: ({:.4}, {:.4})</title></circle>"##,
            escape(&p.label),
            p.x,
            p.y
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            cx + 7.0,
            cy - 7.0,
            escape(&p.label)
        );
    }

    let lx = right + 12.0;
    let _ = writeln!(
        s,
        r##"<circle cx="{lx:.2}" cy="{:.2}" r="5" fill="#d62728" stroke="#222"/><text x="{:.2}" y="{:.2}">front</text>"##,
        top + 10.0,
        lx + 10.0,
        top + 14.0
    );
    let _ = writeln!(
        s,
        r##"<circle cx="{lx:.2}" cy="{:.2}" r="5" fill="white" stroke="#222"/><text x="{:.2}" y="{:.2}">dominated</text>"##,
        top + 30.0,
        lx + 10.0,
        top + 34.0
    );
    s.push_str("</svg>\n");
    s
}
