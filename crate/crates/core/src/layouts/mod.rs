//! Resolution-independent scene documents for the three 2D views.
//!
//! A [`Layout`] holds named scenes of typed primitives in canvas pixels
//! (y down). Every primitive carries an id unique within the document that
//! links it back to regions and flows.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colour::{ColourScale, Rgb};
use crate::geo::{GeoPoint, HammerView};
use crate::leaderlayout::LeaderError;
use crate::oddata::{DataError, FlowDataset, Region};
use crate::planar::{Point2, Rect};

mod flowmap;
mod maptrix;
mod odmaps;

pub use flowmap::{layout_flow_map, FlowMapDetails};
pub use maptrix::{
    highlight, layout_maptrix, place_leaders, relayout, transform, HighlightOverlay, LeaderInfo,
    LeaderPlacement, MapTrixDetails, MatrixGeometry, QpSummary, RelayoutRequest, Selection,
};
pub use odmaps::{layout_od_maps, GridAssignment, OdMapsDetails};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
    #[error("bad grid assignment: {0}")]
    BadGridAssignment(String),
    #[error("need at least {needed} active regions, found {found}")]
    TooFewRegions { needed: usize, found: usize },
    #[error("dataset has no flows to draw")]
    NoFlows,
    #[error("unknown selection: {0}")]
    UnknownSelection(String),
}

impl LayoutError {
    pub fn kind(&self) -> &'static str {
        match self {
            LayoutError::Data(e) => e.kind(),
            LayoutError::InfeasibleGeometry(_) => "InfeasibleGeometry",
            LayoutError::BadGridAssignment(_) => "BadGridAssignment",
            LayoutError::TooFewRegions { .. } => "TooFewRegions",
            LayoutError::NoFlows => "NoFlows",
            LayoutError::UnknownSelection(_) => "UnknownSelection",
        }
    }
}

impl From<LeaderError> for LayoutError {
    fn from(e: LeaderError) -> Self {
        match e {
            LeaderError::InfeasibleGeometry(m) => LayoutError::InfeasibleGeometry(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    Maptrix,
    Odmaps,
    Flowmap,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 3] = [LayoutKind::Maptrix, LayoutKind::Odmaps, LayoutKind::Flowmap];

    pub fn as_str(self) -> &'static str {
        match self {
            LayoutKind::Maptrix => "maptrix",
            LayoutKind::Odmaps => "odmaps",
            LayoutKind::Flowmap => "flowmap",
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayoutKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LayoutKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                format!("unknown layout kind {s:?} (expected maptrix, odmaps or flowmap)")
            })
    }
}

pub type Xy = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextAnchor {
    Start,
    Middle,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "camelCase",
    rename_all_fields = "camelCase"
)]
pub enum Primitive {
    /// Filled rings (even-odd rule), e.g. a region outline.
    Path {
        id: String,
        rings: Vec<Vec<Xy>>,
        fill: Option<Rgb>,
        stroke: Option<Rgb>,
        stroke_width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region: Option<String>,
    },
    Circle {
        id: String,
        center: Xy,
        r: f64,
        fill: Option<Rgb>,
        stroke: Option<Rgb>,
        stroke_width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region: Option<String>,
    },
    HalfCircle {
        id: String,
        center: Xy,
        r: f64,
        side: HalfSide,
        fill: Rgb,
        region: String,
    },
    /// Matrix or grid cell holding one flow.
    Cell {
        id: String,
        corners: Vec<Xy>,
        fill: Rgb,
        value: f64,
        colour_index: f64,
        origin: String,
        dest: String,
    },
    Leader {
        id: String,
        points: Vec<Xy>,
        stroke: Rgb,
        stroke_width: f64,
        region: String,
    },
    Label {
        id: String,
        at: Xy,
        text: String,
        size: f64,
        fill: Rgb,
        anchor: TextAnchor,
    },
    Line {
        id: String,
        from: Xy,
        to: Xy,
        stroke: Rgb,
        stroke_width: f64,
        dashed: bool,
    },
    /// Straight flow with a colour gradient from origin to destination.
    FlowLine {
        id: String,
        from: Xy,
        to: Xy,
        width: f64,
        from_colour: Rgb,
        to_colour: Rgb,
        origin: String,
        dest: String,
        magnitude: f64,
    },
}

impl Primitive {
    pub fn id(&self) -> &str {
        match self {
            Primitive::Path { id, .. }
            | Primitive::Circle { id, .. }
            | Primitive::HalfCircle { id, .. }
            | Primitive::Cell { id, .. }
            | Primitive::Leader { id, .. }
            | Primitive::Label { id, .. }
            | Primitive::Line { id, .. }
            | Primitive::FlowLine { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    pub primitives: Vec<Primitive>,
}

impl Scene {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            primitives: Vec::new(),
        }
    }

    pub fn find(&self, id: &str) -> Option<&Primitive> {
        self.primitives.iter().find(|p| p.id() == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Layout {
    pub schema_version: u32,
    pub kind: LayoutKind,
    pub width: f64,
    pub height: f64,
    pub scenes: Vec<Scene>,
    pub colour_scale: ColourScale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maptrix: Option<MapTrixDetails>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub od_maps: Option<OdMapsDetails>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_map: Option<FlowMapDetails>,
}

impl Layout {
    pub fn scene(&self, id: &str) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.id == id)
    }

    pub fn primitives(&self) -> impl Iterator<Item = &Primitive> {
        self.scenes.iter().flat_map(|s| s.primitives.iter())
    }

    pub fn find(&self, id: &str) -> Option<&Primitive> {
        self.primitives().find(|p| p.id() == id)
    }

    /// Canonical JSON (sorted keys, rounded floats).
    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_canonical_string(self).expect("layout serializes")
    }
}

/// Lays out `d` as `kind`; OD maps need a grid assignment.
pub fn layout(
    kind: LayoutKind,
    d: &FlowDataset,
    grid: Option<&GridAssignment>,
    canvas: Canvas,
    params: &LayoutParams,
) -> Result<Layout, LayoutError> {
    match kind {
        LayoutKind::Maptrix => layout_maptrix(d, canvas, params),
        LayoutKind::Odmaps => match grid {
            Some(g) => layout_od_maps(d, g, canvas, params),
            None => Err(LayoutError::BadGridAssignment(
                "OD maps need a grid assignment".into(),
            )),
        },
        LayoutKind::Flowmap => layout_flow_map(d, canvas, params),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
}

impl Canvas {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Self {
            width: 1200.0,
            height: 800.0,
        }
    }
}

/// Tunable layout parameters; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    /// Share of the MapTrix width taken by the maps; the matrix gets the rest.
    pub map_fraction: f64,
    /// Gradient of leader diagonals.
    pub slope: f64,
    /// Weight of the separation goal in leader refinement.
    pub separation_weight: f64,
    /// Target separation of leader diagonals, relative to the port span.
    pub target_separation: Option<f64>,
    /// Clearance between a free rectangle and other leaders, relative to the port span.
    pub clearance: Option<f64>,
    /// Smallest port spacing on the matrix edge, in pixels.
    pub min_port_pitch: f64,
    /// Matrix separator lines after every this many rows and columns.
    pub separator_every: usize,
    pub padding: f64,
    /// Flow line widths in pixels for the smallest and largest magnitude.
    pub flow_width: [f64; 2],
    /// Radius in pixels of the largest total circle on flow maps.
    pub max_circle_radius: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            map_fraction: 0.4,
            slope: 1.0,
            separation_weight: 1.0,
            target_separation: None,
            clearance: None,
            min_port_pitch: 2.0,
            separator_every: 5,
            padding: 16.0,
            flow_width: [0.5, 8.0],
            max_circle_radius: 14.0,
        }
    }
}

/// Text size and shade for a region label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelStyle {
    pub size: f64,
    pub fill: Rgb,
}

/// Grey level for the smallest total; the largest is black.
const LABEL_GREY_MIN: u8 = 0x96;

/// Rank of each region's total flow (in + out) scaled to [0, 1]; ties by id.
pub fn rank_fractions(d: &FlowDataset, ids: &[&str]) -> BTreeMap<String, f64> {
    let totals = d.totals();
    let mut ranked: Vec<(&str, f64)> = ids
        .iter()
        .map(|&id| (id, totals.get(id).map_or(0.0, |t| t.total_in + t.total_out)))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
    let last = ranked.len().saturating_sub(1);
    ranked
        .iter()
        .enumerate()
        .map(|(rank, &(id, _))| {
            (
                id.to_string(),
                if last == 0 {
                    1.0
                } else {
                    rank as f64 / last as f64
                },
            )
        })
        .collect()
}

/// Size and shade linear in the rank of total flow.
pub fn label_styles(
    d: &FlowDataset,
    ids: &[&str],
    size_min: f64,
    size_max: f64,
) -> BTreeMap<String, LabelStyle> {
    rank_fractions(d, ids)
        .into_iter()
        .map(|(id, t)| {
            let grey = (LABEL_GREY_MIN as f64 * (1.0 - t)).round() as u8;
            (
                id,
                LabelStyle {
                    size: size_min + (size_max - size_min) * t,
                    fill: Rgb::grey(grey),
                },
            )
        })
        .collect()
}

/// Value shown in labels and legends.
pub fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Region outlines projected with a Hammer view centred on the regions.
pub(crate) struct ProjectedRegions {
    /// Per region, per polygon, per ring.
    pub polygons: Vec<Vec<Vec<Vec<Point2>>>>,
    pub anchors: Vec<Point2>,
    pub bbox: Rect,
}

pub(crate) fn project_regions(regions: &[Region]) -> ProjectedRegions {
    let anchors_geo: Vec<GeoPoint> = regions.iter().map(|r| r.anchor).collect();
    let centre = GeoPoint::centroid(&anchors_geo)
        .unwrap_or_else(|| GeoPoint::new(0.0, 0.0).expect("origin is valid"));
    let view = HammerView::centred_on(centre);
    let proj = |g: &GeoPoint| {
        let p = view.project(*g);
        Point2::new(p.x, p.y)
    };
    let polygons: Vec<Vec<Vec<Vec<Point2>>>> = regions
        .iter()
        .map(|r| {
            r.polygons
                .iter()
                .map(|poly| {
                    poly.iter()
                        .map(|ring| ring.iter().map(proj).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let anchors: Vec<Point2> = anchors_geo.iter().map(proj).collect();
    let bbox = Rect::bounding(
        polygons
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .copied()
            .chain(anchors.iter().copied()),
    )
    .unwrap_or(Rect::point(Point2::new(0.0, 0.0)));
    ProjectedRegions {
        polygons,
        anchors,
        bbox,
    }
}

/// Index of the polygon with the largest outer ring in `polys`.
pub(crate) fn largest(polys: &[Vec<Vec<Point2>>]) -> Option<usize> {
    (0..polys.len()).max_by(|&a, &b| {
        let area = |i: usize| {
            polys[i]
                .first()
                .map_or(0.0, |r| crate::planar::ring_area(r).abs())
        };
        area(a).total_cmp(&area(b)).then(b.cmp(&a))
    })
}

/// Uniform scale plus offset taking a y-up plane to canvas pixels (y down).
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub scale: f64,
    pub ox: f64,
    pub oy: f64,
}

impl Frame {
    /// Fits `src` (y up) centred into the pixel box `dst` (y down).
    pub fn fit(src: &Rect, dst: &Rect) -> Frame {
        let sx = if src.width() > 0.0 {
            dst.width() / src.width()
        } else {
            f64::INFINITY
        };
        let sy = if src.height() > 0.0 {
            dst.height() / src.height()
        } else {
            f64::INFINITY
        };
        let mut scale = sx.min(sy);
        if !scale.is_finite() {
            scale = 1.0;
        }
        let cx = (src.min_x + src.max_x) / 2.0;
        let cy = (src.min_y + src.max_y) / 2.0;
        let (dcx, dcy) = ((dst.min_x + dst.max_x) / 2.0, (dst.min_y + dst.max_y) / 2.0);
        Frame {
            scale,
            ox: dcx - cx * scale,
            oy: dcy + cy * scale,
        }
    }

    pub fn apply(&self, p: Point2) -> Xy {
        [self.ox + p.x * self.scale, self.oy - p.y * self.scale]
    }
}

pub(crate) fn rings_to_canvas(rings: &[Vec<Point2>], f: &Frame) -> Vec<Vec<Xy>> {
    rings
        .iter()
        .map(|r| r.iter().map(|&p| f.apply(p)).collect())
        .collect()
}

pub(crate) fn legend_swatches(
    scene: &mut Scene,
    scale: &ColourScale,
    origin: Xy,
    width: f64,
    height: f64,
    text: f64,
) {
    const STEPS: usize = 9;
    let w = width / STEPS as f64;
    for i in 0..STEPS {
        let t = i as f64 / (STEPS - 1) as f64;
        let x0 = origin[0] + w * i as f64;
        scene.primitives.push(Primitive::Path {
            id: format!("legend:swatch:{i}"),
            rings: vec![vec![
                [x0, origin[1]],
                [x0 + w, origin[1]],
                [x0 + w, origin[1] + height],
                [x0, origin[1] + height],
            ]],
            fill: Some(scale.at(t)),
            stroke: None,
            stroke_width: 0.0,
            region: None,
        });
    }
    let y = origin[1] + height + text * 1.2;
    for (id, x, v, anchor) in [
        ("legend:min", origin[0], scale.domain[0], TextAnchor::Start),
        (
            "legend:max",
            origin[0] + width,
            scale.domain[1],
            TextAnchor::End,
        ),
    ] {
        scene.primitives.push(Primitive::Label {
            id: id.into(),
            at: [x, y],
            text: format_value(v),
            size: text,
            fill: Rgb::grey(0x40),
            anchor,
        });
    }
}


#[cfg(test)]
pub(crate) mod testdata {
    use crate::geo::GeoPoint;
    use crate::oddata::{Flow, FlowDataset, LoadOptions, Region};

    /// Square region of side `size` degrees with its lower-left corner at (lon, lat).
    pub fn square(id: &str, lon: f64, lat: f64, size: f64) -> Region {
        let p = |x: f64, y: f64| GeoPoint::new(x, y).unwrap();
        let ring = vec![
            p(lon, lat),
            p(lon + size, lat),
            p(lon + size, lat + size),
            p(lon, lat + size),
            p(lon, lat),
        ];
        Region::new(id, id, id, vec![vec![ring]])
    }

    /// Regions on a row-major grid of 2° squares, with flows from `edges`.
    pub fn grid_dataset(cols: usize, n: usize, edges: &[(usize, usize, f64)]) -> FlowDataset {
        let regions: Vec<Region> = (0..n)
            .map(|i| {
                square(
                    &format!("R{i:02}"),
                    (i % cols) as f64 * 2.0,
                    -((i / cols) as f64) * 2.0,
                    2.0,
                )
            })
            .collect();
        let flows = edges
            .iter()
            .map(|&(o, d, m)| Flow {
                origin: format!("R{o:02}"),
                dest: format!("R{d:02}"),
                magnitude: m,
            })
            .collect();
        FlowDataset::new(regions, flows, LoadOptions::default()).unwrap()
    }

    /// Every ordered pair among `n` regions with distinct magnitudes.
    pub fn complete(cols: usize, n: usize) -> FlowDataset {
        let edges: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|o| {
                (0..n)
                    .filter(move |&d| d != o)
                    .map(move |d| (o, d, (o * n + d) as f64 + 1.0))
            })
            .collect();
        grid_dataset(cols, n, &edges)
    }
}
