//! Plain SVG drawing of the two CDFs of a decomposed pair, with `E⁺`, `E⁻`
//! and `E⁼` shaded underneath.

use std::fmt::Write;

use crate::decomposition::LineDecomposition;
use crate::measure::{Measure, Side};
use crate::scalar::{Bound, Scalar};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;

const MU_COLOR: &str = "#c0392b";
const NU_COLOR: &str = "#2471a3";
const PLUS_FILL: &str = "#f5b7b1";
const MINUS_FILL: &str = "#aed6f1";
const EQ_FILL: &str = "#e5e7e9";

struct Frame {
    lo: f64,
    hi: f64,
    top: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        MARGIN + (t - self.lo) / (self.hi - self.lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - v / self.top * (HEIGHT - 2.0 * MARGIN)
    }

    fn clamp(&self, b: &Bound) -> f64 {
        match b {
            Bound::NegInf => self.lo,
            Bound::PosInf => self.hi,
            Bound::Finite(s) => s.to_f64().clamp(self.lo, self.hi),
        }
    }
}

fn knots(mu: &Measure, nu: &Measure) -> Vec<Scalar> {
    let mut pts = mu.breakpoints();
    pts.extend(nu.breakpoints());
    pts.sort();
    pts.dedup();
    pts
}

fn cdf_path(m: &Measure, knots: &[Scalar], fr: &Frame) -> String {
    let mut d = format!("M{:.2},{:.2}", fr.x(fr.lo), fr.y(0.0));
    for t in knots {
        let x = fr.x(t.to_f64());
        let _ = write!(
            d,
            " L{:.2},{:.2}",
            x,
            fr.y(m.cdf_at(t, Side::Minus).to_f64())
        );
        let _ = write!(
            d,
            " L{:.2},{:.2}",
            x,
            fr.y(m.cdf_at(t, Side::Plus).to_f64())
        );
    }
    let _ = write!(d, " L{:.2},{:.2}", fr.x(fr.hi), fr.y(m.mass().to_f64()));
    d
}

fn band(out: &mut String, fr: &Frame, a: f64, b: f64, fill: &str) {
    let _ = writeln!(
        out,
        r#"  <rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
        fr.x(a),
        MARGIN,
        (fr.x(b) - fr.x(a)).max(0.0),
        HEIGHT - 2.0 * MARGIN
    );
}

/// Renders `F_μ^±` (red) and `F_ν^±` (blue) over the union of the supports.
/// Positive components are shaded red, negative ones blue and `E⁼` grey;
/// isolated points of `E⁼` appear as dashed rules.
pub fn decomposition_svg(dec: &LineDecomposition) -> String {
    let (mu, nu) = (dec.mu(), dec.nu());
    let ks = knots(mu, nu);
    let (lo, hi) = match (ks.first(), ks.last()) {
        (Some(a), Some(b)) => (a.to_f64(), b.to_f64()),
        _ => (0.0, 0.0),
    };
    let pad = if hi > lo { 0.1 * (hi - lo) } else { 1.0 };
    let top = mu.mass().to_f64().max(nu.mass().to_f64());
    let fr = Frame {
        lo: lo - pad,
        hi: hi + pad,
        top: if top > 0.0 { top } else { 1.0 },
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    for iv in dec.e_eq().intervals() {
        let (a, b) = (fr.clamp(&iv.lo), fr.clamp(&iv.hi));
        if iv.is_point() {
            let _ = writeln!(
                out,
                r##"  <line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{:.2}" stroke="#99a3a4" stroke-dasharray="4 3"/>"##,
                HEIGHT - MARGIN,
                x = fr.x(a)
            );
        } else {
            band(&mut out, &fr, a, b, EQ_FILL);
        }
    }
    for c in &dec.pos {
        band(&mut out, &fr, c.a.to_f64(), c.b.to_f64(), PLUS_FILL);
    }
    for c in &dec.neg {
        band(&mut out, &fr, c.a.to_f64(), c.b.to_f64(), MINUS_FILL);
    }

    let base = fr.y(0.0);
    let _ = writeln!(
        out,
        r#"  <line x1="{MARGIN}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    for t in &ks {
        let x = fr.x(t.to_f64());
        let _ = writeln!(
            out,
            r#"  <text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{t}</text>"#,
            base + 16.0
        );
    }
    for (m, color) in [(mu, MU_COLOR), (nu, NU_COLOR)] {
        let _ = writeln!(
            out,
            r#"  <path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            cdf_path(m, &ks, &fr)
        );
    }
    out.push_str("</svg>\n");
    out
}
