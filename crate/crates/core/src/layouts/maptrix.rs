//! MapTrix: origin map above destination map on the left, the OD matrix
//! rotated 45° on the right, joined by crossing-free leaders.
//!
//! Geometry is built in units where one map slab (and one matrix edge's
//! port span) is 1 high: the origin slab covers y ∈ [−1, 0], the destination
//! slab y ∈ [−2, −1]. Rows enter the matrix on its upper-left edge and
//! columns on its lower-left edge, so the column ports are the row ports
//! moved down by exactly one slab and the destination leaders are the
//! origin leaders translated.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    label_styles, largest, project_regions, rank_fractions, rings_to_canvas, Canvas, Frame,
    LabelStyle, Layout, LayoutError, LayoutKind, LayoutParams, Primitive, Scene, TextAnchor, Xy,
    SCHEMA_VERSION,
};
use crate::colour::{ColourScale, Rgb};
use crate::leaderlayout::{
    compute_ordering, route_leaders, Anchor, Band, FreeRect, Leader, LeaderPlan, Orientation,
    PortLine,
};
use crate::oddata::{FlowDataset, Region, RegionGroup};
use crate::planar::{Point2, Rect};
use crate::qprefine::{refine, QpError, QpParams, QpSolution};

/// Vertical margin of each map inside its slab.
const MAP_MARGIN: f64 = 0.04;
/// Space between the map (or the rightmost bend) and the port line.
const PORT_GAP: f64 = 0.03;
/// Room above the origin slab for its title.
const TITLE_ROOM: f64 = 0.06;
const TITLE_SIZE: f64 = 0.03;
const MAX_CIRCLE: f64 = 0.03;
const MAX_LABEL: f64 = 0.045;

const REGION_FILL: Rgb = Rgb(0xd9, 0xd9, 0xd9);
const INACTIVE_FILL: Rgb = Rgb(0xf0, 0xf0, 0xf0);
const CIRCLE_FILL: Rgb = Rgb(0x73, 0x73, 0x73);
const FRAME_FILL: Rgb = Rgb(0xf7, 0xf7, 0xf7);
const FRAME_STROKE: Rgb = Rgb(0xbd, 0xbd, 0xbd);
const SEPARATOR: Rgb = Rgb(0x73, 0x73, 0x73);
const HIGHLIGHT: Rgb = Rgb(0xe6, 0x55, 0x0d);
const STRIPE: Rgb = Rgb(0xff, 0xf7, 0xbc);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LeaderInfo {
    pub id: String,
    pub site: Xy,
    pub bend: Xy,
    pub end: Xy,
    pub orientation: Orientation,
    pub band: usize,
}

impl LeaderInfo {
    pub fn points(&self) -> Vec<Xy> {
        vec![self.site, self.bend, self.end]
    }
}

/// Corners of the rotated matrix in canvas pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatrixGeometry {
    pub top: Xy,
    pub left: Xy,
    pub right: Xy,
    pub bottom: Xy,
    pub n: usize,
}

impl MatrixGeometry {
    /// Point at fraction `a` down the rows and `b` along the columns.
    pub fn point(&self, a: f64, b: f64) -> Xy {
        let [tx, ty] = self.top;
        [
            tx + a * (self.left[0] - tx) + b * (self.right[0] - tx),
            ty + a * (self.left[1] - ty) + b * (self.right[1] - ty),
        ]
    }

    fn quad(&self, a0: f64, a1: f64, b0: f64, b1: f64) -> Vec<Xy> {
        vec![
            self.point(a0, b0),
            self.point(a0, b1),
            self.point(a1, b1),
            self.point(a1, b0),
        ]
    }

    pub fn cell(&self, row: usize, col: usize) -> Vec<Xy> {
        let n = self.n as f64;
        self.quad(
            row as f64 / n,
            (row + 1) as f64 / n,
            col as f64 / n,
            (col + 1) as f64 / n,
        )
    }

    pub fn row_stripe(&self, row: usize) -> Vec<Xy> {
        let n = self.n as f64;
        self.quad(row as f64 / n, (row + 1) as f64 / n, 0.0, 1.0)
    }

    pub fn column_stripe(&self, col: usize) -> Vec<Xy> {
        let n = self.n as f64;
        self.quad(0.0, 1.0, col as f64 / n, (col + 1) as f64 / n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QpSummary {
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub target_separation: f64,
    pub separations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MapTrixDetails {
    /// Shared row and column order.
    pub ordering: Vec<String>,
    pub origin_leaders: Vec<LeaderInfo>,
    pub dest_leaders: Vec<LeaderInfo>,
    pub bands: Vec<Band>,
    pub matrix: MatrixGeometry,
    pub label_styles: BTreeMap<String, LabelStyle>,
    /// Free rectangles of the origin sites as [upper-left, bottom-right].
    pub free_rects: Vec<[Xy; 2]>,
    pub qp: QpSummary,
}

/// Map fit, leader routing and refinement, in slab units.
#[derive(Debug, Clone)]
pub struct LeaderPlacement {
    /// Every region's polygons placed in the origin slab.
    pub map_polys: Vec<Vec<Vec<Vec<Point2>>>>,
    pub frame: Frame,
    pub pitch: f64,
    pub font: f64,
    pub stroke: f64,
    pub port_x: f64,
    /// Left corner of the matrix.
    pub lx: f64,
    pub ports: PortLine,
    pub rects: Vec<FreeRect>,
    pub refined: LeaderPlan,
    pub solution: QpSolution,
}

/// Places the leaders of the `active` regions (indices into `regions`):
/// ordering, routing, free rectangles and the QP refinement.
pub fn place_leaders(
    regions: &[Region],
    active: &[usize],
    canvas: Canvas,
    params: &LayoutParams,
) -> Result<LeaderPlacement, LayoutError> {
    let n = active.len();
    if n < 2 {
        return Err(LayoutError::TooFewRegions {
            needed: 2,
            found: n,
        });
    }
    if !(params.map_fraction > 0.0 && params.map_fraction < 1.0) {
        return Err(LayoutError::InfeasibleGeometry(format!(
            "map fraction {} outside (0, 1)",
            params.map_fraction
        )));
    }
    let k = params.slope;
    let pitch = 1.0 / n as f64;

    // Maps: fit the projected regions into the left of the origin slab.
    let proj = project_regions(regions);
    let bb = proj.bbox;
    let map_w_max = 2.0 * params.map_fraction / (1.0 - params.map_fraction);
    let fit = |extent: f64, room: f64| {
        if extent > 0.0 {
            room / extent
        } else {
            f64::INFINITY
        }
    };
    let mut sigma = fit(bb.width(), map_w_max).min(fit(bb.height(), 1.0 - 2.0 * MAP_MARGIN));
    if !sigma.is_finite() {
        sigma = 1.0;
    }
    let cy = (bb.min_y + bb.max_y) / 2.0;
    let to_map = |p: Point2| Point2::new((p.x - bb.min_x) * sigma, -0.5 + (p.y - cy) * sigma);
    let map_polys: Vec<Vec<Vec<Vec<Point2>>>> = proj
        .polygons
        .iter()
        .map(|polys| {
            polys
                .iter()
                .map(|rings| {
                    rings
                        .iter()
                        .map(|r| r.iter().map(|&p| to_map(p)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let map_right = bb.width() * sigma;

    let anchors: Vec<Anchor> = active
        .iter()
        .map(|&i| Anchor::new(regions[i].id.clone(), to_map(proj.anchors[i])))
        .collect();
    let probe = PortLine {
        x: 0.0,
        top: 0.0,
        pitch,
        count: n,
    };
    let order = compute_ordering(&anchors, &probe, k);
    let max_bend = order
        .iter()
        .enumerate()
        .map(|(i, &a)| anchors[a].site.x + (probe.port_y(i) - anchors[a].site.y).abs() / k)
        .fold(f64::NEG_INFINITY, f64::max);
    let port_x = max_bend.max(map_right) + PORT_GAP;
    let font = (0.7 * pitch).min(MAX_LABEL);
    let label_room = 4.0 * 0.62 * font + 0.4 * font;
    let lx = port_x + label_room;

    let src = Rect {
        min_x: 0.0,
        min_y: -2.0,
        max_x: lx + 2.0,
        max_y: TITLE_ROOM,
    };
    let pad = params.padding;
    let dst = Rect {
        min_x: pad,
        min_y: pad,
        max_x: canvas.width - pad,
        max_y: canvas.height - pad,
    };
    if dst.width() <= 0.0 || dst.height() <= 0.0 {
        return Err(LayoutError::InfeasibleGeometry(format!(
            "canvas {}x{} too small",
            canvas.width, canvas.height
        )));
    }
    let frame = Frame::fit(&src, &dst);

    let ports = PortLine {
        x: port_x,
        top: 0.0,
        pitch,
        count: n,
    };
    let plan = route_leaders(
        &anchors,
        &order,
        &ports,
        k,
        params.min_port_pitch / frame.scale,
    )?;

    let stroke = (0.2 * pitch).min(0.006);
    let d_b = params.clearance.unwrap_or(3.0 * stroke);
    let index: BTreeMap<&str, usize> = regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let rings: Vec<Vec<Vec<Point2>>> = plan
        .leaders
        .iter()
        .map(|l| {
            let polys = &map_polys[index[l.id.as_str()]];
            largest(polys).map(|i| polys[i].clone()).unwrap_or_default()
        })
        .collect();
    let rects = plan.free_rects(&rings, d_b);
    let qp_params = QpParams {
        w: params.separation_weight,
        target_separation: params.target_separation,
        d_lc: d_b,
        epsilon: 1e-6 * map_right.max(f64::MIN_POSITIVE),
    };
    let (refined, solution) = match refine(&plan, &rects, &qp_params) {
        Ok(r) => r,
        Err(QpError::Leader(e)) => return Err(e.into()),
        Err(QpError::NotConverged(_)) => unreachable!("refine returns the best iterate"),
    };
    Ok(LeaderPlacement {
        map_polys,
        frame,
        pitch,
        font,
        stroke,
        port_x,
        lx,
        ports,
        rects,
        refined,
        solution,
    })
}

pub fn layout_maptrix(
    d: &FlowDataset,
    canvas: Canvas,
    params: &LayoutParams,
) -> Result<Layout, LayoutError> {
    let active: Vec<usize> = d
        .active_regions()
        .iter()
        .map(|r| d.region_index(&r.id).expect("active region exists"))
        .collect();
    let n = active.len();
    let LeaderPlacement {
        map_polys,
        frame,
        pitch,
        font,
        stroke,
        port_x,
        lx,
        ports,
        rects,
        mut refined,
        solution,
    } = place_leaders(d.regions(), &active, canvas, params)?;
    let px = frame.scale;
    refined.extend_to(|i| lx + 1.0 - (i as f64 + 0.5) * pitch);
    let dest: Vec<Leader> = refined
        .leaders
        .iter()
        .map(|l| {
            let mut t = l.translated(0.0, -1.0);
            t.end = Point2::new(lx + (l.port_index as f64 + 0.5) * pitch, t.end.y);
            t
        })
        .collect();

    let matrix = MatrixGeometry {
        top: frame.apply(Point2::new(lx + 1.0, 0.0)),
        left: frame.apply(Point2::new(lx, -1.0)),
        right: frame.apply(Point2::new(lx + 2.0, -1.0)),
        bottom: frame.apply(Point2::new(lx + 1.0, -2.0)),
        n,
    };
    let ordering = refined.ordering.clone();
    let pos: BTreeMap<&str, usize> = ordering
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let ids: Vec<&str> = ordering.iter().map(String::as_str).collect();
    let font_px = font * px;
    let styles = label_styles(d, &ids, 0.65 * font_px, font_px);
    let ranks = rank_fractions(d, &ids);
    let totals = d.totals();
    let (lo, hi) = d.magnitude_range().unwrap_or((0.0, 0.0));
    let scale = ColourScale::yl_or_rd(lo, hi);

    // Maps with proportional circles at the connection sites.
    let site_of: BTreeMap<&str, Point2> = refined
        .leaders
        .iter()
        .map(|l| (l.id.as_str(), l.site))
        .collect();
    let mut scenes = Vec::new();
    for (side, dy, title) in [("origin", 0.0, "Origins"), ("dest", -1.0, "Destinations")] {
        let mut scene = Scene::new(format!("{side}Map"));
        let shift = |p: Point2| Point2::new(p.x, p.y + dy);
        for (ri, r) in d.regions().iter().enumerate() {
            let rings: Vec<Vec<Point2>> = map_polys[ri]
                .iter()
                .flatten()
                .map(|ring| ring.iter().map(|&p| shift(p)).collect())
                .collect();
            scene.primitives.push(Primitive::Path {
                id: format!("region:{side}:{}", r.id),
                rings: rings_to_canvas(&rings, &frame),
                fill: Some(if pos.contains_key(r.id.as_str()) {
                    REGION_FILL
                } else {
                    INACTIVE_FILL
                }),
                stroke: Some(Rgb::WHITE),
                stroke_width: 0.5,
                region: Some(r.id.clone()),
            });
        }
        let total = |id: &str| {
            totals.get(id).map_or(0.0, |t| {
                if side == "origin" {
                    t.total_out
                } else {
                    t.total_in
                }
            })
        };
        let max_total = ids.iter().map(|id| total(id)).fold(0.0, f64::max);
        for id in &ids {
            let t = total(id);
            if t <= 0.0 || max_total <= 0.0 {
                continue;
            }
            scene.primitives.push(Primitive::Circle {
                id: format!("circle:{side}:{id}"),
                center: frame.apply(shift(site_of[id])),
                r: MAX_CIRCLE * px * (t / max_total).sqrt(),
                fill: Some(CIRCLE_FILL),
                stroke: Some(Rgb::WHITE),
                stroke_width: 0.5,
                region: Some(id.to_string()),
            });
        }
        let title_at = Point2::new(0.0, if side == "origin" { 0.01 } else { -1.0 - 0.035 });
        scene.primitives.push(Primitive::Label {
            id: format!("title:{side}"),
            at: frame.apply(title_at),
            text: title.to_string(),
            size: TITLE_SIZE * px,
            fill: Rgb::grey(0x25),
            anchor: TextAnchor::Start,
        });
        if side == "dest" {
            let icon = Point2::new(
                title.len() as f64 * 0.6 * TITLE_SIZE + 0.02,
                title_at.y + 0.35 * TITLE_SIZE,
            );
            scene.primitives.push(Primitive::Circle {
                id: "icon:dest".into(),
                center: frame.apply(icon),
                r: 0.35 * TITLE_SIZE * px,
                fill: None,
                stroke: Some(Rgb::grey(0x25)),
                stroke_width: 0.12 * TITLE_SIZE * px,
                region: None,
            });
            scene.primitives.push(Primitive::Circle {
                id: "icon:dest:dot".into(),
                center: frame.apply(icon),
                r: 0.12 * TITLE_SIZE * px,
                fill: Some(Rgb::grey(0x25)),
                stroke: None,
                stroke_width: 0.0,
                region: None,
            });
        }
        scenes.push(scene);
    }

    let info = |l: &Leader| LeaderInfo {
        id: l.id.clone(),
        site: frame.apply(l.site),
        bend: frame.apply(l.bend),
        end: frame.apply(l.end),
        orientation: l.orientation,
        band: l.band,
    };
    let origin_leaders: Vec<LeaderInfo> = refined.leaders.iter().map(info).collect();
    let dest_leaders: Vec<LeaderInfo> = dest.iter().map(info).collect();
    let mut leaders = Scene::new("leaders");
    for (side, list) in [("origin", &origin_leaders), ("dest", &dest_leaders)] {
        for l in list {
            let t = ranks[&l.id];
            leaders.primitives.push(Primitive::Leader {
                id: format!("leader:{side}:{}", l.id),
                points: l.points(),
                stroke: styles[&l.id].fill,
                stroke_width: stroke * px * (0.6 + 0.4 * t),
                region: l.id.clone(),
            });
        }
    }
    scenes.push(leaders);

    let mut m = Scene::new("matrix");
    m.primitives.push(Primitive::Path {
        id: "matrix:frame".into(),
        rings: vec![vec![matrix.top, matrix.right, matrix.bottom, matrix.left]],
        fill: Some(FRAME_FILL),
        stroke: Some(FRAME_STROKE),
        stroke_width: 0.75,
        region: None,
    });
    let mut cells: Vec<(usize, usize, &crate::oddata::Flow)> = d
        .flows()
        .iter()
        .map(|f| (pos[f.origin.as_str()], pos[f.dest.as_str()], f))
        .collect();
    cells.sort_by_key(|&(r, c, _)| (r, c));
    for (r, c, f) in cells {
        m.primitives.push(Primitive::Cell {
            id: format!("cell:{}:{}", f.origin, f.dest),
            corners: matrix.cell(r, c),
            fill: scale.sample(f.magnitude),
            value: f.magnitude,
            colour_index: scale.position(f.magnitude),
            origin: f.origin.clone(),
            dest: f.dest.clone(),
        });
    }
    let every = params.separator_every.max(1);
    for s in (every..n).step_by(every) {
        let t = s as f64 / n as f64;
        m.primitives.push(Primitive::Line {
            id: format!("separator:row:{s}"),
            from: matrix.point(t, 0.0),
            to: matrix.point(t, 1.0),
            stroke: SEPARATOR,
            stroke_width: 0.75,
            dashed: false,
        });
        m.primitives.push(Primitive::Line {
            id: format!("separator:col:{s}"),
            from: matrix.point(0.0, t),
            to: matrix.point(1.0, t),
            stroke: SEPARATOR,
            stroke_width: 0.75,
            dashed: false,
        });
    }
    for (i, id) in ordering.iter().enumerate() {
        let style = styles[id];
        let abbr = d.region(id).map_or(id.clone(), |r| r.abbr.clone());
        for (kind, dy) in [("row", 0.0), ("col", -1.0)] {
            m.primitives.push(Primitive::Label {
                id: format!("label:{kind}:{id}"),
                at: frame.apply(Point2::new(
                    port_x + 0.2 * font,
                    ports.port_y(i) + dy + 0.15 * pitch,
                )),
                text: abbr.clone(),
                size: style.size,
                fill: style.fill,
                anchor: TextAnchor::Start,
            });
        }
    }
    scenes.push(m);

    let mut legend = Scene::new("legend");
    let at = frame.apply(Point2::new(lx + 1.25, 0.0));
    super::legend_swatches(&mut legend, &scale, at, 0.7 * px, 0.04 * px, 0.025 * px);
    legend.primitives.push(Primitive::Label {
        id: "legend:title".into(),
        at: frame.apply(Point2::new(lx + 1.25, 0.015)),
        text: "Flow magnitude".into(),
        size: 0.025 * px,
        fill: Rgb::grey(0x25),
        anchor: TextAnchor::Start,
    });
    scenes.push(legend);

    let free_rects = rects
        .iter()
        .map(|r| [frame.apply(r.upper_left()), frame.apply(r.bottom_right())])
        .collect();
    let details = MapTrixDetails {
        ordering,
        origin_leaders,
        dest_leaders,
        bands: refined.bands.clone(),
        matrix,
        label_styles: styles,
        free_rects,
        qp: QpSummary {
            objective: solution.objective,
            initial_objective: solution.initial_objective,
            iterations: solution.iterations,
            converged: solution.converged,
            target_separation: solution.target_separation,
            separations: solution.separations.clone(),
        },
    };
    Ok(Layout {
        schema_version: SCHEMA_VERSION,
        kind: LayoutKind::Maptrix,
        width: canvas.width,
        height: canvas.height,
        scenes,
        colour_scale: scale,
        maptrix: Some(details),
        od_maps: None,
        flow_map: None,
    })
}

/// Regions and cells to emphasise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Selection {
    pub regions: Vec<String>,
    /// (origin, destination) pairs.
    pub cells: Vec<[String; 2]>,
}

/// Emphasis drawn over a MapTrix; the base layout is not touched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HighlightOverlay {
    /// Ids of base-layout elements to emphasise, sorted.
    pub element_ids: Vec<String>,
    /// Stripes, outlines and leader copies, with ids prefixed `hl:`.
    pub primitives: Vec<Primitive>,
}

impl HighlightOverlay {
    pub fn is_empty(&self) -> bool {
        self.element_ids.is_empty() && self.primitives.is_empty()
    }
}

pub fn highlight(layout: &Layout, selection: &Selection) -> Result<HighlightOverlay, LayoutError> {
    let Some(mt) = &layout.maptrix else {
        return Err(LayoutError::UnknownSelection(
            "highlighting needs a maptrix layout".into(),
        ));
    };
    let pos: BTreeMap<&str, usize> = mt
        .ordering
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let index = |id: &str| {
        pos.get(id)
            .copied()
            .ok_or_else(|| LayoutError::UnknownSelection(format!("region {id:?}")))
    };
    let mut ids = BTreeSet::new();
    let mut stripes: BTreeMap<String, Primitive> = BTreeMap::new();
    let mut outlines: BTreeMap<String, Primitive> = BTreeMap::new();
    let mut leaders: BTreeMap<String, Primitive> = BTreeMap::new();
    let keep = |ids: &mut BTreeSet<String>, id: String| {
        if layout.find(&id).is_some() {
            ids.insert(id);
        }
    };
    let mut leader_copy = |side: &str, i: usize| {
        let list = if side == "origin" {
            &mt.origin_leaders
        } else {
            &mt.dest_leaders
        };
        let l = &list[i];
        let id = format!("hl:leader:{side}:{}", l.id);
        leaders.insert(
            id.clone(),
            Primitive::Leader {
                id,
                points: l.points(),
                stroke: HIGHLIGHT,
                stroke_width: 2.0,
                region: l.id.clone(),
            },
        );
    };
    let stripe = |id: String, quad: Vec<Xy>| {
        (
            id.clone(),
            Primitive::Path {
                id,
                rings: vec![quad],
                fill: Some(STRIPE),
                stroke: None,
                stroke_width: 0.0,
                region: None,
            },
        )
    };

    for r in &selection.regions {
        let i = index(r)?;
        for id in [
            format!("leader:origin:{r}"),
            format!("leader:dest:{r}"),
            format!("region:origin:{r}"),
            format!("region:dest:{r}"),
            format!("label:row:{r}"),
            format!("label:col:{r}"),
        ] {
            keep(&mut ids, id);
        }
        for other in &mt.ordering {
            keep(&mut ids, format!("cell:{r}:{other}"));
            keep(&mut ids, format!("cell:{other}:{r}"));
        }
        let (k, v) = stripe(format!("hl:row:{r}"), mt.matrix.row_stripe(i));
        stripes.insert(k, v);
        let (k, v) = stripe(format!("hl:col:{r}"), mt.matrix.column_stripe(i));
        stripes.insert(k, v);
        leader_copy("origin", i);
        leader_copy("dest", i);
    }
    for [a, b] in &selection.cells {
        let (i, j) = (index(a)?, index(b)?);
        for id in [
            format!("leader:origin:{a}"),
            format!("leader:dest:{b}"),
            format!("region:origin:{a}"),
            format!("region:dest:{b}"),
            format!("cell:{a}:{b}"),
        ] {
            keep(&mut ids, id);
        }
        let id = format!("hl:cell:{a}:{b}");
        outlines.insert(
            id.clone(),
            Primitive::Path {
                id,
                rings: vec![mt.matrix.cell(i, j)],
                fill: None,
                stroke: Some(HIGHLIGHT),
                stroke_width: 2.0,
                region: None,
            },
        );
        leader_copy("origin", i);
        leader_copy("dest", j);
    }
    let primitives = stripes
        .into_values()
        .chain(outlines.into_values())
        .chain(leaders.into_values())
        .collect();
    Ok(HighlightOverlay {
        element_ids: ids.into_iter().collect(),
        primitives,
    })
}

/// Filter and/or aggregation applied before re-layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelayoutRequest {
    /// Inclusive magnitude range `[lo, hi]`.
    pub filter: Option<[f64; 2]>,
    pub groups: Option<Vec<RegionGroup>>,
}

/// Aggregates first, then filters the aggregated flows.
pub fn transform(d: &FlowDataset, req: &RelayoutRequest) -> Result<FlowDataset, LayoutError> {
    let mut out = match &req.groups {
        Some(groups) => d.aggregate_regions(groups)?,
        None => d.clone(),
    };
    if let Some([lo, hi]) = req.filter {
        out = out.filter_by_magnitude(lo, hi)?;
    }
    Ok(out)
}

/// MapTrix of the transformed dataset.
pub fn relayout(
    d: &FlowDataset,
    req: &RelayoutRequest,
    canvas: Canvas,
    params: &LayoutParams,
) -> Result<Layout, LayoutError> {
    layout_maptrix(&transform(d, req)?, canvas, params)
}
