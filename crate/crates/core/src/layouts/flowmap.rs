//! Straight-line flow map: width encodes magnitude, a dark-to-light gradient
//! runs from origin to destination, and half circles show each region's
//! total inflow (left, black) and outflow (right, grey).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    project_regions, rings_to_canvas, Canvas, Frame, HalfSide, Layout, LayoutError, LayoutKind,
    LayoutParams, Primitive, Scene, TextAnchor, Xy, SCHEMA_VERSION,
};
use crate::colour::{ColourScale, Rgb, BLUES};
use crate::oddata::FlowDataset;
use crate::planar::Rect;

const LEGEND_ROOM: f64 = 48.0;
const REGION_FILL: Rgb = Rgb(0xf0, 0xf0, 0xf0);
const REGION_STROKE: Rgb = Rgb(0xbd, 0xbd, 0xbd);
const OUT_GREY: Rgb = Rgb(0x96, 0x96, 0x96);
const GRADIENT_FROM: usize = 8;
const GRADIENT_TO: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowMapDetails {
    /// Projected anchor of every region.
    pub anchors: BTreeMap<String, Xy>,
    /// Magnitude domain mapped onto `widthRange`.
    pub width_domain: [f64; 2],
    pub width_range: [f64; 2],
    /// Largest total, drawn at the maximum circle radius.
    pub max_total: f64,
}

impl FlowMapDetails {
    /// Linear width; a degenerate domain maps to the widest line.
    pub fn width(&self, magnitude: f64) -> f64 {
        let [lo, hi] = self.width_domain;
        let [w0, w1] = self.width_range;
        if hi <= lo {
            return w1;
        }
        w0 + (w1 - w0) * ((magnitude - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

pub fn layout_flow_map(
    d: &FlowDataset,
    canvas: Canvas,
    params: &LayoutParams,
) -> Result<Layout, LayoutError> {
    let mut flows: Vec<_> = d.flows().iter().filter(|f| f.origin != f.dest).collect();
    if flows.is_empty() {
        return Err(LayoutError::NoFlows);
    }
    flows.sort_by(|a, b| {
        a.magnitude
            .total_cmp(&b.magnitude)
            .then_with(|| (&a.origin, &a.dest).cmp(&(&b.origin, &b.dest)))
    });
    let pad = params.padding;
    let r_max = params.max_circle_radius;
    let dst = Rect {
        min_x: pad + r_max,
        min_y: pad + r_max,
        max_x: canvas.width - pad - r_max,
        max_y: canvas.height - pad - LEGEND_ROOM - r_max,
    };
    if dst.width() <= 0.0 || dst.height() <= 0.0 {
        return Err(LayoutError::InfeasibleGeometry(format!(
            "canvas {}x{} too small",
            canvas.width, canvas.height
        )));
    }
    let proj = project_regions(d.regions());
    let frame = Frame::fit(&proj.bbox, &dst);
    let anchors: BTreeMap<String, Xy> = d
        .regions()
        .iter()
        .zip(&proj.anchors)
        .map(|(r, &p)| (r.id.clone(), frame.apply(p)))
        .collect();

    let lo = flows
        .iter()
        .map(|f| f.magnitude)
        .fold(f64::INFINITY, f64::min);
    let hi = flows
        .iter()
        .map(|f| f.magnitude)
        .fold(f64::NEG_INFINITY, f64::max);
    let totals = d.totals();
    let max_total = totals
        .values()
        .map(|t| t.total_in.max(t.total_out))
        .fold(0.0, f64::max);
    let details = FlowMapDetails {
        anchors,
        width_domain: [lo, hi],
        width_range: params.flow_width,
        max_total,
    };
    let scale = ColourScale::from_anchors("Blues", &BLUES, lo, hi);
    let dark = Rgb::from_hex(BLUES[GRADIENT_FROM]).expect("valid colour");
    let light = Rgb::from_hex(BLUES[GRADIENT_TO]).expect("valid colour");

    let mut regions = Scene::new("regions");
    for (r, polys) in d.regions().iter().zip(&proj.polygons) {
        let rings: Vec<_> = polys.iter().flatten().cloned().collect();
        regions.primitives.push(Primitive::Path {
            id: format!("region:{}", r.id),
            rings: rings_to_canvas(&rings, &frame),
            fill: Some(REGION_FILL),
            stroke: Some(REGION_STROKE),
            stroke_width: 0.75,
            region: Some(r.id.clone()),
        });
    }

    let mut lines = Scene::new("flows");
    for f in &flows {
        lines.primitives.push(Primitive::FlowLine {
            id: format!("flow:{}:{}", f.origin, f.dest),
            from: details.anchors[&f.origin],
            to: details.anchors[&f.dest],
            width: details.width(f.magnitude),
            from_colour: dark,
            to_colour: light,
            origin: f.origin.clone(),
            dest: f.dest.clone(),
            magnitude: f.magnitude,
        });
    }

    let mut circles = Scene::new("totals");
    for r in d.regions() {
        let t = totals.get(&r.id).copied().unwrap_or_default();
        for (kind, side, fill, v) in [
            ("in", HalfSide::Left, Rgb::BLACK, t.total_in),
            ("out", HalfSide::Right, OUT_GREY, t.total_out),
        ] {
            if v > 0.0 && max_total > 0.0 {
                circles.primitives.push(Primitive::HalfCircle {
                    id: format!("total:{kind}:{}", r.id),
                    center: details.anchors[&r.id],
                    r: r_max * (v / max_total).sqrt(),
                    side,
                    fill,
                    region: r.id.clone(),
                });
            }
        }
    }

    let mut legend = Scene::new("legend");
    let y = canvas.height - pad - LEGEND_ROOM / 2.0;
    let x0 = pad;
    for (i, (label, m)) in [("min", lo), ("max", hi)].into_iter().enumerate() {
        let x = x0 + i as f64 * 150.0;
        legend.primitives.push(Primitive::Line {
            id: format!("legend:width:{label}"),
            from: [x, y],
            to: [x + 60.0, y],
            stroke: dark,
            stroke_width: details.width(m),
            dashed: false,
        });
        legend.primitives.push(Primitive::Label {
            id: format!("legend:width:{label}:text"),
            at: [x + 66.0, y + 4.0],
            text: super::format_value(m),
            size: 11.0,
            fill: Rgb::grey(0x40),
            anchor: TextAnchor::Start,
        });
    }
    let gx = x0 + 300.0;
    const DIRECTION_STEPS: usize = 5;
    for i in 0..DIRECTION_STEPS {
        let t = i as f64 / DIRECTION_STEPS as f64;
        let step = 80.0 / DIRECTION_STEPS as f64;
        legend.primitives.push(Primitive::Line {
            id: format!("legend:direction:{i}"),
            from: [gx + t * 80.0, y],
            to: [gx + t * 80.0 + step, y],
            stroke: dark.lerp(light, (i as f64 + 0.5) / DIRECTION_STEPS as f64),
            stroke_width: params.flow_width[1],
            dashed: false,
        });
    }
    for (id, x, text, anchor) in [
        ("legend:direction:from", gx, "origin", TextAnchor::End),
        (
            "legend:direction:to",
            gx + 80.0,
            "destination",
            TextAnchor::Start,
        ),
    ] {
        legend.primitives.push(Primitive::Label {
            id: id.into(),
            at: [
                if anchor == TextAnchor::End {
                    x - 6.0
                } else {
                    x + 6.0
                },
                y + 4.0,
            ],
            text: text.into(),
            size: 11.0,
            fill: Rgb::grey(0x40),
            anchor,
        });
    }
    let cx = gx + 230.0;
    for (id, side, fill, text) in [
        ("legend:in", HalfSide::Left, Rgb::BLACK, "in"),
        ("legend:out", HalfSide::Right, OUT_GREY, "out"),
    ] {
        legend.primitives.push(Primitive::HalfCircle {
            id: id.into(),
            center: [cx, y],
            r: r_max.min(LEGEND_ROOM / 3.0),
            side,
            fill,
            region: String::new(),
        });
        let dx = r_max.min(LEGEND_ROOM / 3.0) + 4.0;
        legend.primitives.push(Primitive::Label {
            id: format!("{id}:text"),
            at: [
                if side == HalfSide::Left {
                    cx - dx
                } else {
                    cx + dx
                },
                y + 4.0,
            ],
            text: text.into(),
            size: 11.0,
            fill: Rgb::grey(0x40),
            anchor: if side == HalfSide::Left {
                TextAnchor::End
            } else {
                TextAnchor::Start
            },
        });
    }

    Ok(Layout {
        schema_version: SCHEMA_VERSION,
        kind: LayoutKind::Flowmap,
        width: canvas.width,
        height: canvas.height,
        scenes: vec![regions, lines, circles, legend],
        colour_scale: scale,
        maptrix: None,
        od_maps: None,
        flow_map: Some(details),
    })
}
