//! SVG export of Bézier stroke paths, and a reader for the same subset.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::render::{BezierPath, Cubic};

pub const DEFAULT_STROKE_WIDTH: f64 = 1.0;

/// One `<path>` per cubic segment. The stroke width is the sum of the
/// segment's endpoint radii, i.e. the mean diameter.
pub fn export_svg(path: &BezierPath, width: usize, height: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    for (k, c) in path.segments.iter().enumerate() {
        let w = if path.radii.is_empty() {
            DEFAULT_STROKE_WIDTH
        } else {
            path.radii[k] + path.radii[k + 1]
        };
        let _ = writeln!(
            s,
            "  <path d=\"M {:.4} {:.4} C {:.4} {:.4} {:.4} {:.4} {:.4} {:.4}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.4}\" stroke-linecap=\"round\"/>",
            c[0][0], c[0][1], c[1][0], c[1][1], c[2][0], c[2][1], c[3][0], c[3][1], w
        );
    }
    s.push_str("</svg>\n");
    s
}

/// A segment read back from an exported document.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgSegment {
    pub cubic: Cubic,
    pub stroke_width: f64,
}

/// Reads the `M x y C x y x y x y` paths written by [`export_svg`].
pub fn parse_svg_paths(text: &str) -> Result<Vec<SvgSegment>> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Xml {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("path")) {
        let line = doc.text_pos_at(node.range().start).row;
        let bad = |message: String| Error::Xml { line, message };
        let d = node
            .attribute("d")
            .ok_or_else(|| bad("path without d attribute".into()))?;
        let tokens: Vec<&str> = d
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.len() != 10 || tokens[0] != "M" || tokens[3] != "C" {
            return Err(bad(format!("unsupported path data {d:?}")));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad(format!("bad number {t:?}")));
        let mut v = [0.0; 8];
        for (slot, t) in v.iter_mut().zip(tokens[1..3].iter().chain(&tokens[4..])) {
            *slot = num(t)?;
        }
        let stroke_width = match node.attribute("stroke-width") {
            Some(w) => num(w)?,
            None => DEFAULT_STROKE_WIDTH,
        };
        out.push(SvgSegment {
            cubic: [[v[0], v[1]], [v[2], v[3]], [v[4], v[5]], [v[6], v[7]]],
            stroke_width,
        });
    }
    Ok(out)
}
