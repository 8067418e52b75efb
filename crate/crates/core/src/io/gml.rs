//! Graffiti Markup Language subset: gml/tag/drawing/stroke/pt.

use std::fmt::Write as _;

use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::init::Polyline;

#[derive(Debug, Clone, PartialEq)]
pub struct GmlDocument {
    pub strokes: Vec<Polyline>,
    /// `screenBounds` x and y of the first tag header, when present.
    pub screen: Option<(f64, f64)>,
    pub version: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GmlOptions {
    pub flip_y: bool,
}

fn line_of(doc: &Document, node: Node) -> u32 {
    doc.text_pos_at(node.range().start).row
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name().eq_ignore_ascii_case(name))
}

fn children<'a, 'i: 'a>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name().eq_ignore_ascii_case(name))
}

fn number(doc: &Document, node: Node, name: &str) -> Result<Option<f64>> {
    let Some(el) = child(node, name) else {
        return Ok(None);
    };
    let text = el.text().unwrap_or("").trim();
    let v: f64 = text.parse().map_err(|_| Error::Gml {
        line: line_of(doc, el),
        message: format!("<{name}> is not a number: {text:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Gml {
            line: line_of(doc, el),
            message: format!("<{name}> is not finite"),
        });
    }
    Ok(Some(v))
}

fn screen_bounds(doc: &Document, tag: Node) -> Result<Option<(f64, f64)>> {
    let Some(sb) = child(tag, "header")
        .and_then(|h| child(h, "environment"))
        .and_then(|e| child(e, "screenBounds"))
    else {
        return Ok(None);
    };
    match (number(doc, sb, "x")?, number(doc, sb, "y")?) {
        (Some(x), Some(y)) if x > 0.0 && y > 0.0 => Ok(Some((x, y))),
        _ => Err(Error::Gml {
            line: line_of(doc, sb),
            message: "screenBounds needs positive <x> and <y>".into(),
        }),
    }
}

pub fn parse_gml(text: &str) -> Result<GmlDocument> {
    parse_gml_with(text, &GmlOptions::default())
}

/// Parses every stroke of every tag, normalizing coordinates by the tag's
/// `screenBounds` when present.
pub fn parse_gml_with(text: &str, opts: &GmlOptions) -> Result<GmlDocument> {
    let doc = Document::parse(text).map_err(|e| Error::Xml {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    if !root.tag_name().name().eq_ignore_ascii_case("gml") {
        return Err(Error::Gml {
            line: line_of(&doc, root),
            message: format!("root element is <{}>, expected <gml>", root.tag_name().name()),
        });
    }
    let version = root.attribute("spec").map(str::to_string);
    let mut strokes = Vec::new();
    let mut screen = None;
    for (ti, tag) in children(root, "tag").enumerate() {
        let bounds = screen_bounds(&doc, tag)?;
        if ti == 0 {
            screen = bounds;
        }
        let (sx, sy) = bounds.unwrap_or((1.0, 1.0));
        for drawing in children(tag, "drawing") {
            for stroke in children(drawing, "stroke") {
                let mut pts = Vec::new();
                let mut times = Vec::new();
                for pt in children(stroke, "pt") {
                    let line = line_of(&doc, pt);
                    let (Some(x), Some(y)) = (number(&doc, pt, "x")?, number(&doc, pt, "y")?) else {
                        return Err(Error::Gml {
                            line,
                            message: "<pt> needs <x> and <y>".into(),
                        });
                    };
                    let (x, mut y) = (x / sx, y / sy);
                    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                        return Err(Error::Gml {
                            line,
                            message: format!("point ({x}, {y}) lies outside the unit square after normalization"),
                        });
                    }
                    if opts.flip_y {
                        y = 1.0 - y;
                    }
                    let t = match number(&doc, pt, "t")? {
                        Some(t) => Some(t),
                        None => number(&doc, pt, "time")?,
                    };
                    if pts.is_empty() || t.is_some() == !times.is_empty() {
                        if let Some(t) = t {
                            times.push(t);
                        }
                    } else {
                        return Err(Error::Gml {
                            line,
                            message: "time stamps present on only some points".into(),
                        });
                    }
                    pts.push([x, y]);
                }
                if pts.len() < 2 {
                    return Err(Error::Gml {
                        line: line_of(&doc, stroke),
                        message: format!("stroke has {} point(s), need at least 2", pts.len()),
                    });
                }
                let times = (!times.is_empty()).then_some(times);
                strokes.push(Polyline::new(pts, times)?);
            }
        }
    }
    if strokes.is_empty() {
        return Err(Error::Parse("GML document contains no strokes".into()));
    }
    Ok(GmlDocument {
        strokes,
        screen,
        version,
    })
}

/// Writes normalized coordinates with unit screen bounds.
pub fn export_gml(doc: &GmlDocument) -> String {
    let mut s = String::new();
    let version = doc.version.as_deref().unwrap_or("1.0");
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(s, "<gml spec=\"{version}\">");
    s.push_str("  <tag>\n    <header><environment><screenBounds><x>1</x><y>1</y><z>0</z></screenBounds></environment></header>\n    <drawing>\n");
    for stroke in &doc.strokes {
        s.push_str("      <stroke>\n");
        for (i, p) in stroke.points.iter().enumerate() {
            let _ = write!(s, "        <pt><x>{}</x><y>{}</y>", p[0], p[1]);
            if let Some(t) = &stroke.times {
                let _ = write!(s, "<t>{}</t>", t[i]);
            }
            s.push_str("</pt>\n");
        }
        s.push_str("      </stroke>\n");
    }
    s.push_str("    </drawing>\n  </tag>\n</gml>\n");
    s
}

/// All strokes joined into one trace. `gaps[i]` is the index of the first
/// point of stroke `i + 1` (a pen-up jump lands there).
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatenatedTrace {
    pub line: Polyline,
    pub gaps: Vec<usize>,
}

pub fn concatenate(doc: &GmlDocument) -> Result<ConcatenatedTrace> {
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    let timed = doc.strokes.iter().all(|s| s.times.is_some());
    let mut times = Vec::new();
    for (i, s) in doc.strokes.iter().enumerate() {
        if i > 0 {
            gaps.push(points.len());
        }
        points.extend_from_slice(&s.points);
        if let (true, Some(t)) = (timed, &s.times) {
            times.extend_from_slice(t);
        }
    }
    Ok(ConcatenatedTrace {
        line: Polyline::new(points, timed.then_some(times))?,
        gaps,
    })
}
