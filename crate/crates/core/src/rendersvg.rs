//! Deterministic SVG 1.1 output for layout documents.
//!
//! Numbers carry at most three decimals and never depend on the locale;
//! attribute order is fixed, so equal layouts give equal bytes.

use std::fmt::Write;

use crate::colour::Rgb;
use crate::layouts::{HalfSide, HighlightOverlay, Layout, Primitive, TextAnchor, Xy};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Page colour behind every scene; `None` leaves it transparent.
    pub background: Option<Rgb>,
    /// Shift applied to the legend scene.
    pub legend_offset: Xy,
    pub font_family: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            background: Some(Rgb::WHITE),
            legend_offset: [0.0, 0.0],
            font_family: "sans-serif".into(),
        }
    }
}

/// Formats with three decimals, trailing zeros dropped and no negative zero.
pub fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        &s
    };
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn paint(c: Option<Rgb>) -> String {
    c.map_or_else(|| "none".into(), |c| c.to_string())
}

fn points(ps: &[Xy]) -> String {
    ps.iter()
        .map(|p| format!("{},{}", num(p[0]), num(p[1])))
        .collect::<Vec<_>>()
        .join(" ")
}

fn ring_path(rings: &[Vec<Xy>]) -> String {
    let mut d = String::new();
    for ring in rings.iter().filter(|r| !r.is_empty()) {
        for (i, p) in ring.iter().enumerate() {
            let _ = write!(
                d,
                "{}{},{}",
                if i == 0 { "M" } else { "L" },
                num(p[0]),
                num(p[1])
            );
        }
        d.push('Z');
    }
    d
}

fn gradient_id(flow_id: &str) -> String {
    format!("gradient:{flow_id}")
}

fn gradient_def(out: &mut String, p: &Primitive) {
    if let Primitive::FlowLine {
        id,
        from,
        to,
        from_colour,
        to_colour,
        ..
    } = p
    {
        let _ = writeln!(
            out,
            r#"<linearGradient id="{}" gradientUnits="userSpaceOnUse" x1="{}" y1="{}" x2="{}" y2="{}"><stop offset="0" stop-color="{from_colour}"/><stop offset="1" stop-color="{to_colour}"/></linearGradient>"#,
            escape(&gradient_id(id)),
            num(from[0]),
            num(from[1]),
            num(to[0]),
            num(to[1]),
        );
    }
}

fn element(out: &mut String, p: &Primitive) {
    let id = escape(p.id());
    match p {
        Primitive::Path {
            rings,
            fill,
            stroke,
            stroke_width,
            ..
        } => {
            let _ = writeln!(
                out,
                r#"<path id="{id}" d="{}" fill="{}" fill-rule="evenodd" stroke="{}" stroke-width="{}"/>"#,
                ring_path(rings),
                paint(*fill),
                paint(*stroke),
                num(*stroke_width)
            );
        }
        Primitive::Circle {
            center,
            r,
            fill,
            stroke,
            stroke_width,
            ..
        } => {
            let _ = writeln!(
                out,
                r#"<circle id="{id}" cx="{}" cy="{}" r="{}" fill="{}" stroke="{}" stroke-width="{}"/>"#,
                num(center[0]),
                num(center[1]),
                num(*r),
                paint(*fill),
                paint(*stroke),
                num(*stroke_width)
            );
        }
        Primitive::HalfCircle {
            center,
            r,
            side,
            fill,
            ..
        } => {
            let [cx, cy] = *center;
            let sweep = match side {
                HalfSide::Left => 0,
                HalfSide::Right => 1,
            };
            let _ = writeln!(
                out,
                r#"<path id="{id}" d="M{},{}A{},{} 0 0 {sweep} {},{}Z" fill="{fill}"/>"#,
                num(cx),
                num(cy - r),
                num(*r),
                num(*r),
                num(cx),
                num(cy + r),
            );
        }
        Primitive::Cell {
            corners,
            fill,
            value,
            origin,
            dest,
            ..
        } => {
            let _ = writeln!(
                out,
                r##"<polygon id="{id}" points="{}" fill="{fill}" stroke="#ffffff" stroke-width="0.25"><title>{} → {}: {}</title></polygon>"##,
                points(corners),
                escape(origin),
                escape(dest),
                escape(&crate::layouts::format_value(*value))
            );
        }
        Primitive::Leader {
            points: pts,
            stroke,
            stroke_width,
            ..
        } => {
            let _ = writeln!(
                out,
                r#"<polyline id="{id}" points="{}" fill="none" stroke="{stroke}" stroke-width="{}" stroke-linejoin="round"/>"#,
                points(pts),
                num(*stroke_width)
            );
        }
        Primitive::Label {
            at,
            text,
            size,
            fill,
            anchor,
            ..
        } => {
            let anchor = match anchor {
                TextAnchor::Start => "start",
                TextAnchor::Middle => "middle",
                TextAnchor::End => "end",
            };
            let _ = writeln!(
                out,
                r#"<text id="{id}" x="{}" y="{}" font-size="{}" fill="{fill}" text-anchor="{anchor}">{}</text>"#,
                num(at[0]),
                num(at[1]),
                num(*size),
                escape(text)
            );
        }
        Primitive::Line {
            from,
            to,
            stroke,
            stroke_width,
            dashed,
            ..
        } => {
            let _ = writeln!(
                out,
                r#"<line id="{id}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" stroke-width="{}"{}/>"#,
                num(from[0]),
                num(from[1]),
                num(to[0]),
                num(to[1]),
                num(*stroke_width),
                if *dashed {
                    r#" stroke-dasharray="4 3""#
                } else {
                    ""
                }
            );
        }
        Primitive::FlowLine {
            id: raw,
            from,
            to,
            width,
            ..
        } => {
            let _ = writeln!(
                out,
                r##"<line id="{id}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="url(#{})" stroke-width="{}" stroke-linecap="round"/>"##,
                num(from[0]),
                num(from[1]),
                num(to[0]),
                num(to[1]),
                escape(&gradient_id(raw)),
                num(*width)
            );
        }
    }
}

/// Serializes `layout`, with the optional overlay drawn on top in a
/// `highlight` group.
pub fn render(layout: &Layout, overlay: Option<&HighlightOverlay>, opts: &RenderOptions) -> String {
    let (w, h) = (num(layout.width), num(layout.height));
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{}">"#,
        escape(&opts.font_family)
    );
    let overlay = overlay.filter(|o| !o.is_empty());
    let flows: Vec<&Primitive> = layout
        .primitives()
        .chain(overlay.iter().flat_map(|o| o.primitives.iter()))
        .filter(|p| matches!(p, Primitive::FlowLine { .. }))
        .collect();
    if !flows.is_empty() {
        out.push_str("<defs>\n");
        for p in flows {
            gradient_def(&mut out, p);
        }
        out.push_str("</defs>\n");
    }
    if let Some(bg) = opts.background {
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{w}" height="{h}" fill="{bg}"/>"#
        );
    }
    for scene in &layout.scenes {
        let shift = opts.legend_offset;
        if scene.id == "legend" && shift != [0.0, 0.0] {
            let _ = writeln!(
                out,
                r#"<g id="scene:{}" transform="translate({} {})">"#,
                escape(&scene.id),
                num(shift[0]),
                num(shift[1])
            );
        } else {
            let _ = writeln!(out, r#"<g id="scene:{}">"#, escape(&scene.id));
        }
        for p in &scene.primitives {
            element(&mut out, p);
        }
        out.push_str("</g>\n");
    }
    if let Some(o) = overlay {
        out.push_str("<g id=\"highlight\" opacity=\"0.85\">\n");
        for p in &o.primitives {
            element(&mut out, p);
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
