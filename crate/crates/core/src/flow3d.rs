//! 3D flow geometry for immersive views, in metres.
//!
//! Frames used here:
//! - flat map: map-local, x east, y north, z up from the map plane; the map
//!   is a 1 × 0.5 m quad centred on the origin;
//! - globe: centred on the origin, x right, y up, z towards the viewer, with
//!   the view centre of the geography facing the viewer;
//! - MapsLink and curved map: viewer at the origin looking down −z, y up.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::str::FromStr;

use nalgebra::{Rotation3 as Rot, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{
    great_circle_distance, GeoPoint, HammerView, ProjectedPoint, HAMMER_X_MAX, HAMMER_Y_MAX,
};
use crate::oddata::FlowDataset;

pub type Point3 = Vector3<f64>;

/// Samples per curve.
pub const DEFAULT_SAMPLES: usize = 65;
/// Apex heights of flat-map tubes and globe tubes.
pub const MAP_HEIGHT_RANGE: [f64; 2] = [0.05, 0.25];
/// Tube radii on the flat map.
pub const MAP_RADIUS_RANGE: [f64; 2] = [0.002, 0.016];
/// Tube radii on the globe and between MapsLink maps.
pub const LINKED_RADIUS_RANGE: [f64; 2] = [0.001, 0.008];
pub const GLOBE_RADIUS: f64 = 0.4;
pub const FLAT_MAP_SIZE: [f64; 2] = [1.0, 0.5];
/// Control-point offsets of MapsLink tubes for link distances over [0, 2] m.
pub const MAPS_LINK_HEIGHT_RANGE: [f64; 2] = [0.05, 0.5];
pub const MAPS_LINK_DISTANCE_DOMAIN: [f64; 2] = [0.0, 2.0];
/// Beyond this arc the great circle between two points is ill-defined.
pub const MAX_ARC_DEGREES: f64 = 179.9;
pub const CURVED_MAP_ANGLES: [f64; 2] = [108.0, 54.0];
pub const CURVED_MAP_RADIUS: f64 = 1.0;
const TUBE_SIDES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Flow3dError {
    #[error("great circle is ambiguous for near-antipodal flows: {}", .0.join(", "))]
    AntipodalAmbiguity(Vec<String>),
    #[error("morph scenes differ in size: {flat} flat vs {globe} globe vertices")]
    CorrespondenceMismatch { flat: usize, globe: usize },
    #[error("need at least 2 samples per curve, got {0}")]
    TooFewSamples(usize),
    #[error("invalid {what}: {detail}")]
    InvalidParameter { what: &'static str, detail: String },
    #[error("dataset has no flows to export")]
    NoFlows,
}

impl Flow3dError {
    pub fn kind(&self) -> &'static str {
        match self {
            Flow3dError::AntipodalAmbiguity(_) => "AntipodalAmbiguity",
            Flow3dError::CorrespondenceMismatch { .. } => "CorrespondenceMismatch",
            Flow3dError::TooFewSamples(_) => "TooFewSamples",
            Flow3dError::InvalidParameter { .. } => "InvalidParameter",
            Flow3dError::NoFlows => "NoFlows",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightEncoding {
    Constant,
    Quantity,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Map,
    Globe,
    #[serde(rename = "mapslink")]
    MapsLink,
}

macro_rules! keyword_enum {
    ($t:ty, $what:literal, $($v:path => $s:literal),+) => {
        impl $t {
            pub fn as_str(self) -> &'static str {
                match self { $($v => $s),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s => Ok($v),)+
                    _ => Err(format!(concat!("unknown ", $what, " {:?} (expected {})"), s, [$($s),+].join(", "))),
                }
            }
        }
    };
}

keyword_enum!(HeightEncoding, "encoding", HeightEncoding::Constant => "constant", HeightEncoding::Quantity => "quantity", HeightEncoding::Distance => "distance");
keyword_enum!(Representation, "representation", Representation::Map => "map", Representation::Globe => "globe", Representation::MapsLink => "mapslink");

/// Maps `v` from `domain` onto `range`; a degenerate domain gives the top.
pub fn linear(v: f64, domain: [f64; 2], range: [f64; 2]) -> f64 {
    let [lo, hi] = domain;
    if hi <= lo {
        return range[1];
    }
    range[0] + (range[1] - range[0]) * ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Height of the two inner control points that puts the apex at `h`.
pub fn control_height(h: f64) -> f64 {
    4.0 / 3.0 * h
}

pub fn cubic_bezier(p: &[Point3; 4], t: f64) -> Point3 {
    let s = 1.0 - t;
    p[0] * (s * s * s) + p[1] * (3.0 * s * s * t) + p[2] * (3.0 * s * t * t) + p[3] * (t * t * t)
}

fn sample_params(n: usize) -> Result<Vec<f64>, Flow3dError> {
    if n < 2 {
        return Err(Flow3dError::TooFewSamples(n));
    }
    Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
}

fn sample_bezier(p: &[Point3; 4], n: usize) -> Result<Vec<Point3>, Flow3dError> {
    let ts = sample_params(n)?;
    let last = n - 1;
    Ok(ts
        .iter()
        .enumerate()
        .map(|(i, &t)| match i {
            0 => p[0],
            i if i == last => p[3],
            _ => cubic_bezier(p, t),
        })
        .collect())
}

/// Tube above a flat map: both inner control points rise straight above the
/// ends so the curve stays over the straight origin–destination segment and
/// peaks at height `h` halfway.
pub fn bezier_flow_on_map(
    origin: [f64; 2],
    dest: [f64; 2],
    h: f64,
    n: usize,
) -> Result<Vec<Point3>, Flow3dError> {
    if !(h >= 0.0) {
        return Err(Flow3dError::InvalidParameter {
            what: "height",
            detail: format!("{h} is negative"),
        });
    }
    let hc = control_height(h);
    let p0 = Point3::new(origin[0], origin[1], 0.0);
    let p3 = Point3::new(dest[0], dest[1], 0.0);
    sample_bezier(
        &[
            p0,
            p0 + Point3::new(0.0, 0.0, hc),
            p3 + Point3::new(0.0, 0.0, hc),
            p3,
        ],
        n,
    )
}

/// Radial profile of globe tubes: `radius` at the ends, `radius + h` halfway.
pub fn globe_profile(t: f64, radius: f64, h: f64) -> f64 {
    ((-(t - 0.5).abs() / 0.5).powi(3) + 1.0) * h + radius
}

/// Position on a globe of `radius` centred on the origin.
pub fn globe_point(p: GeoPoint, view: &HammerView, radius: f64) -> Point3 {
    let v = view.rotation.apply(p).to_unit_vector();
    Point3::new(v.y, v.z, v.x) * radius
}

/// Tube along the great circle from `a` to `b`, raised by the cubic profile.
pub fn globe_tube(
    a: GeoPoint,
    b: GeoPoint,
    view: &HammerView,
    radius: f64,
    h: f64,
    n: usize,
) -> Result<Vec<Point3>, Flow3dError> {
    let arc = great_circle_distance(a, b);
    if arc > MAX_ARC_DEGREES {
        return Err(Flow3dError::AntipodalAmbiguity(vec![format!(
            "{a:?}->{b:?} ({arc:.3}°)"
        )]));
    }
    let (ua, ub) = (globe_point(a, view, 1.0), globe_point(b, view, 1.0));
    let omega = ua.dot(&ub).clamp(-1.0, 1.0).acos();
    let ts = sample_params(n)?;
    Ok(ts
        .iter()
        .map(|&t| {
            let dir = slerp(&ua, &ub, omega, t);
            dir * globe_profile(t, radius, h)
        })
        .collect())
}

fn slerp(a: &Point3, b: &Point3, omega: f64, t: f64) -> Point3 {
    if t == 0.0 {
        return *a;
    }
    if t == 1.0 {
        return *b;
    }
    if omega < 1e-12 {
        return *a;
    }
    let s = omega.sin();
    (a * ((1.0 - t) * omega).sin() + b * (t * omega).sin()) / s
}

/// A flat map placed in the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPlane {
    pub centre: Point3,
    /// Unit vector towards map east.
    pub east: Point3,
    /// Unit vector towards map north.
    pub north: Point3,
    pub width: f64,
    pub height: f64,
}

impl MapPlane {
    /// The flat study map: 1 × 0.5 m, lying in the xy plane, facing +z.
    pub fn flat() -> Self {
        Self {
            centre: Point3::zeros(),
            east: Point3::x(),
            north: Point3::y(),
            width: FLAT_MAP_SIZE[0],
            height: FLAT_MAP_SIZE[1],
        }
    }

    pub fn normal(&self) -> Point3 {
        self.east.cross(&self.north)
    }

    /// Position of a Hammer-projected point; the projection's ellipse fills the quad.
    pub fn point(&self, q: ProjectedPoint) -> Point3 {
        let u = q.x / (2.0 * HAMMER_X_MAX) * self.width;
        let v = q.y / (2.0 * HAMMER_Y_MAX) * self.height;
        self.centre + self.east * u + self.north * v
    }

    /// In-plane coordinates of a Hammer-projected point.
    pub fn local(&self, q: ProjectedPoint) -> [f64; 2] {
        [
            q.x / (2.0 * HAMMER_X_MAX) * self.width,
            q.y / (2.0 * HAMMER_Y_MAX) * self.height,
        ]
    }

    /// The origin and destination maps of MapsLink: 0.75 × 0.375 m, 0.55 m in
    /// front of and 0.3 m below the eye, 0.4 m to either side, each tilted
    /// 45° towards the viewer about x and turned 30° inwards about y.
    pub fn maps_link_pair() -> (MapPlane, MapPlane) {
        let place = |dx: f64, turn: f64| {
            let tilt = Rot::from_axis_angle(&Vector3::x_axis(), 45f64.to_radians());
            let yaw = Rot::from_axis_angle(&Vector3::y_axis(), turn.to_radians());
            let r = yaw * tilt;
            MapPlane {
                centre: Point3::new(dx, -0.3, -0.55),
                east: r * Point3::x(),
                north: r * Point3::new(0.0, 0.0, -1.0),
                width: 0.75 * FLAT_MAP_SIZE[0],
                height: 0.75 * FLAT_MAP_SIZE[1],
            }
        };
        (place(-0.4, 30.0), place(0.4, -30.0))
    }
}

/// Control-point offset for a MapsLink tube spanning `distance` metres.
pub fn maps_link_height(distance: f64) -> f64 {
    linear(distance, MAPS_LINK_DISTANCE_DOMAIN, MAPS_LINK_HEIGHT_RANGE)
}

/// Tube between two maps: inner control points rise from each end along its
/// map normal by a height that grows with the end-to-end distance.
pub fn maps_link_tube(
    origin: Point3,
    origin_normal: Point3,
    dest: Point3,
    dest_normal: Point3,
    n: usize,
) -> Result<Vec<Point3>, Flow3dError> {
    let h = maps_link_height((dest - origin).norm());
    let na = origin_normal
        .try_normalize(0.0)
        .unwrap_or_else(Point3::zeros);
    let nb = dest_normal.try_normalize(0.0).unwrap_or_else(Point3::zeros);
    sample_bezier(&[origin, origin + na * h, dest + nb * h, dest], n)
}

fn check_angles(h_angle: f64, v_angle: f64) -> Result<(), Flow3dError> {
    if !(h_angle > 0.0 && h_angle < 180.0 && v_angle > 0.0 && v_angle < 180.0) {
        return Err(Flow3dError::InvalidParameter {
            what: "section angles",
            detail: format!("{h_angle}° × {v_angle}° must lie in (0°, 180°)"),
        });
    }
    Ok(())
}

fn section_point(u: f64, v: f64, radius: f64, h_angle: f64, v_angle: f64) -> Point3 {
    let az = ((u - 0.5) * h_angle).to_radians();
    let el = ((v - 0.5) * v_angle).to_radians();
    Point3::new(el.cos() * az.sin(), el.sin(), -el.cos() * az.cos()) * radius
}

/// Position of a Hammer-projected point on the curved map: the bounding
/// rectangle of the ellipse maps linearly to azimuth and elevation.
pub fn curved_map_point(
    q: ProjectedPoint,
    radius: f64,
    h_angle: f64,
    v_angle: f64,
) -> Result<Point3, Flow3dError> {
    check_angles(h_angle, v_angle)?;
    let u = (q.x + HAMMER_X_MAX) / (2.0 * HAMMER_X_MAX);
    let v = (q.y + HAMMER_Y_MAX) / (2.0 * HAMMER_Y_MAX);
    Ok(section_point(u, v, radius, h_angle, v_angle))
}

/// Vertex grid of the spherical section carrying the curved map, rows from
/// bottom to top, `cols × rows` vertices.
pub fn curved_map_surface(
    radius: f64,
    h_angle: f64,
    v_angle: f64,
    cols: usize,
    rows: usize,
) -> Result<Vec<Vec<Point3>>, Flow3dError> {
    check_angles(h_angle, v_angle)?;
    if cols < 2 || rows < 2 {
        return Err(Flow3dError::InvalidParameter {
            what: "grid",
            detail: format!("{cols} × {rows} needs at least 2 × 2"),
        });
    }
    Ok((0..rows)
        .map(|r| {
            let v = r as f64 / (rows - 1) as f64;
            (0..cols)
                .map(|c| section_point(c as f64 / (cols - 1) as f64, v, radius, h_angle, v_angle))
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorphFrame {
    pub u: f64,
    pub positions: Vec<Point3>,
}

/// Per-vertex linear blend from the flat scene (`u = 0`) to the globe (`u = 1`).
pub fn morph(u: f64, flat: &[Point3], globe: &[Point3]) -> Result<MorphFrame, Flow3dError> {
    if flat.len() != globe.len() {
        return Err(Flow3dError::CorrespondenceMismatch {
            flat: flat.len(),
            globe: globe.len(),
        });
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Flow3dError::InvalidParameter {
            what: "progress",
            detail: format!("{u} outside [0, 1]"),
        });
    }
    let positions = flat
        .iter()
        .zip(globe)
        .map(|(a, b)| a * (1.0 - u) + b * u)
        .collect();
    Ok(MorphFrame { u, positions })
}

/// Matching flat-map and globe positions of geographic points, for [`morph`].
pub fn morph_scenes(points: &[GeoPoint], view: &HammerView) -> (Vec<Point3>, Vec<Point3>) {
    let plane = MapPlane::flat();
    let flat = points
        .iter()
        .map(|&p| plane.point(view.project(p)))
        .collect();
    let globe = points
        .iter()
        .map(|&p| globe_point(p, view, GLOBE_RADIUS))
        .collect();
    (flat, globe)
}

/// Sampled tube with its radius and direction parameter per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowCurve3D {
    pub flow_id: String,
    pub encoding: HeightEncoding,
    pub samples: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
    /// 0 at the origin, 1 at the destination; drives the direction gradient.
    pub u: Vec<f64>,
}

impl FlowCurve3D {
    fn new(flow_id: String, encoding: HeightEncoding, samples: Vec<Point3>, radius: f64) -> Self {
        let n = samples.len();
        let u = (0..n)
            .map(|i| {
                if n > 1 {
                    i as f64 / (n - 1) as f64
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            flow_id,
            encoding,
            samples: samples.iter().map(|p| [p.x, p.y, p.z]).collect(),
            radii: vec![radius; n],
            u,
        }
    }

    pub fn points(&self) -> Vec<Point3> {
        self.samples
            .iter()
            .map(|s| Point3::new(s[0], s[1], s[2]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurveBatch {
    pub schema_version: u32,
    pub representation: Representation,
    pub curves: Vec<FlowCurve3D>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportOptions {
    pub samples: usize,
    /// Apex heights; for MapsLink the fixed link-distance rule applies instead.
    pub height_range: [f64; 2],
    /// Tube radii, `None` for the representation's default.
    pub radius_range: Option<[f64; 2]>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            height_range: MAP_HEIGHT_RANGE,
            radius_range: None,
        }
    }
}

/// Height for one flow under `encoding`; constant heights use the middle of
/// the range.
pub fn height_for_encoding(
    encoding: HeightEncoding,
    magnitude: f64,
    distance: f64,
    magnitudes: [f64; 2],
    distances: [f64; 2],
    range: [f64; 2],
) -> f64 {
    match encoding {
        HeightEncoding::Constant => (range[0] + range[1]) / 2.0,
        HeightEncoding::Quantity => linear(magnitude, magnitudes, range),
        HeightEncoding::Distance => linear(distance, distances, range),
    }
}

fn domain(values: impl Iterator<Item = f64>) -> [f64; 2] {
    values.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| {
        [lo.min(v), hi.max(v)]
    })
}

/// Tubes for every flow between distinct regions, ordered by (origin, dest).
pub fn export_curves(
    d: &FlowDataset,
    repr: Representation,
    encoding: HeightEncoding,
    opts: &ExportOptions,
) -> Result<CurveBatch, Flow3dError> {
    let mut flows: Vec<_> = d.flows().iter().filter(|f| f.origin != f.dest).collect();
    if flows.is_empty() {
        return Err(Flow3dError::NoFlows);
    }
    flows.sort_by(|a, b| (&a.origin, &a.dest).cmp(&(&b.origin, &b.dest)));
    let [h0, h1] = opts.height_range;
    if !(h0 >= 0.0 && h0 <= h1) {
        return Err(Flow3dError::InvalidParameter {
            what: "height range",
            detail: format!("[{h0}, {h1}]"),
        });
    }
    let anchors: BTreeMap<&str, GeoPoint> = d
        .regions()
        .iter()
        .map(|r| (r.id.as_str(), r.anchor))
        .collect();
    let all: Vec<GeoPoint> = d.regions().iter().map(|r| r.anchor).collect();
    let centre = GeoPoint::centroid(&all)
        .unwrap_or_else(|| GeoPoint::new(0.0, 0.0).expect("origin is valid"));
    let view = HammerView::centred_on(centre);
    let id = |o: &str, t: &str| format!("flow:{o}:{t}");
    let ends = |f: &crate::oddata::Flow| (anchors[f.origin.as_str()], anchors[f.dest.as_str()]);
    let magnitudes = domain(flows.iter().map(|f| f.magnitude));
    let default_radii = if repr == Representation::Map {
        MAP_RADIUS_RANGE
    } else {
        LINKED_RADIUS_RANGE
    };
    let radii = opts.radius_range.unwrap_or(default_radii);
    let radius = |m: f64| linear(m, magnitudes, radii);

    let curves = match repr {
        Representation::Map => {
            let plane = MapPlane::flat();
            let local: Vec<([f64; 2], [f64; 2])> = flows
                .iter()
                .map(|f| {
                    let (a, b) = ends(f);
                    (plane.local(view.project(a)), plane.local(view.project(b)))
                })
                .collect();
            let dist = |(a, b): &([f64; 2], [f64; 2])| {
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            };
            let distances = domain(local.iter().map(dist));
            flows
                .iter()
                .zip(&local)
                .map(|(f, ab)| {
                    let h = height_for_encoding(
                        encoding,
                        f.magnitude,
                        dist(ab),
                        magnitudes,
                        distances,
                        opts.height_range,
                    );
                    let s = bezier_flow_on_map(ab.0, ab.1, h, opts.samples)?;
                    Ok(FlowCurve3D::new(
                        id(&f.origin, &f.dest),
                        encoding,
                        s,
                        radius(f.magnitude),
                    ))
                })
                .collect::<Result<Vec<_>, Flow3dError>>()?
        }
        Representation::Globe => {
            let arcs: Vec<f64> = flows
                .iter()
                .map(|f| {
                    let (a, b) = ends(f);
                    great_circle_distance(a, b)
                })
                .collect();
            let bad: Vec<String> = flows
                .iter()
                .zip(&arcs)
                .filter(|(_, &arc)| arc > MAX_ARC_DEGREES)
                .map(|(f, _)| id(&f.origin, &f.dest))
                .collect();
            if !bad.is_empty() {
                return Err(Flow3dError::AntipodalAmbiguity(bad));
            }
            let distances = domain(arcs.iter().copied());
            flows
                .iter()
                .zip(&arcs)
                .map(|(f, &arc)| {
                    let (a, b) = ends(f);
                    let h = height_for_encoding(
                        encoding,
                        f.magnitude,
                        arc,
                        magnitudes,
                        distances,
                        opts.height_range,
                    );
                    let s = globe_tube(a, b, &view, GLOBE_RADIUS, h, opts.samples)?;
                    Ok(FlowCurve3D::new(
                        id(&f.origin, &f.dest),
                        encoding,
                        s,
                        radius(f.magnitude),
                    ))
                })
                .collect::<Result<Vec<_>, Flow3dError>>()?
        }
        Representation::MapsLink => {
            let (om, dm) = MapPlane::maps_link_pair();
            flows
                .iter()
                .map(|f| {
                    let (a, b) = ends(f);
                    let s = maps_link_tube(
                        om.point(view.project(a)),
                        om.normal(),
                        dm.point(view.project(b)),
                        dm.normal(),
                        opts.samples,
                    )?;
                    Ok(FlowCurve3D::new(
                        id(&f.origin, &f.dest),
                        HeightEncoding::Distance,
                        s,
                        radius(f.magnitude),
                    ))
                })
                .collect::<Result<Vec<_>, Flow3dError>>()?
        }
    };
    Ok(CurveBatch {
        schema_version: crate::layouts::SCHEMA_VERSION,
        representation: repr,
        curves,
    })
}

fn obj_num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0.000000".into()
    } else {
        s
    }
}

fn any_perpendicular(t: &Point3) -> Point3 {
    let axis = if t.x.abs() < 0.9 {
        Point3::x()
    } else {
        Point3::y()
    };
    t.cross(&axis).normalize()
}

/// Unit normals along a polyline, carried from sample to sample by the
/// smallest rotation so the tube does not twist.
fn transported_normals(points: &[Point3]) -> Vec<Point3> {
    let n = points.len();
    let tangent = |i: usize| {
        let a = points[i.saturating_sub(1)];
        let b = points[(i + 1).min(n - 1)];
        (b - a).try_normalize(1e-15)
    };
    let tangents: Vec<Option<Point3>> = (0..n).map(tangent).collect();
    let first = tangents
        .iter()
        .flatten()
        .next()
        .copied()
        .unwrap_or_else(Point3::z);
    let mut prev_t = first;
    let mut normal = any_perpendicular(&first);
    let mut out = Vec::with_capacity(n);
    for t in &tangents {
        let t = t.unwrap_or(prev_t);
        if let Some(r) = Rot::rotation_between(&prev_t, &t) {
            normal = r * normal;
        }
        normal = (normal - t * normal.dot(&t))
            .try_normalize(1e-15)
            .unwrap_or_else(|| any_perpendicular(&t));
        out.push(normal);
        prev_t = t;
    }
    out
}

/// OBJ mesh of the tubes: an octagon swept along each curve, with flat end
/// caps. Vertex centroid of every ring is the curve sample.
pub fn to_obj(batch: &CurveBatch) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# odflow 3D flows: {}", batch.representation);
    let mut base_v = 1usize;
    let mut base_n = 1usize;
    for c in &batch.curves {
        let pts = c.points();
        let n = pts.len();
        if n == 0 {
            continue;
        }
        let _ = writeln!(out, "o {}", c.flow_id);
        let normals = transported_normals(&pts);
        let mut tangent_prev = Point3::z();
        for (i, p) in pts.iter().enumerate() {
            let t = (pts[(i + 1).min(n - 1)] - pts[i.saturating_sub(1)])
                .try_normalize(1e-15)
                .unwrap_or(tangent_prev);
            tangent_prev = t;
            let nrm = normals[i];
            let bin = t.cross(&nrm);
            for k in 0..TUBE_SIDES {
                let a = std::f64::consts::TAU * k as f64 / TUBE_SIDES as f64;
                let dir = nrm * a.cos() + bin * a.sin();
                let v = p + dir * c.radii[i];
                let _ = writeln!(out, "v {} {} {}", obj_num(v.x), obj_num(v.y), obj_num(v.z));
                let _ = writeln!(
                    out,
                    "vn {} {} {}",
                    obj_num(dir.x),
                    obj_num(dir.y),
                    obj_num(dir.z)
                );
            }
        }
        let ring = |i: usize, k: usize| i * TUBE_SIDES + (k % TUBE_SIDES);
        for i in 0..n - 1 {
            for k in 0..TUBE_SIDES {
                let q = [
                    ring(i, k),
                    ring(i, k + 1),
                    ring(i + 1, k + 1),
                    ring(i + 1, k),
                ];
                let _ = writeln!(
                    out,
                    "f {}",
                    q.iter()
                        .map(|&j| format!("{}//{}", base_v + j, base_n + j))
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
        }
        let cap = |i: usize| {
            (0..TUBE_SIDES)
                .map(|k| base_v + ring(i, k))
                .collect::<Vec<_>>()
        };
        let mut start = cap(0);
        start.reverse();
        for face in [start, cap(n - 1)] {
            let _ = writeln!(
                out,
                "f {}",
                face.iter()
                    .map(|j| j.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            );
        }
        base_v += n * TUBE_SIDES;
        base_n += n * TUBE_SIDES;
    }
    out
}

/// Ring centroids of an OBJ written by [`to_obj`], per object, in order.
pub fn obj_ring_centres(obj: &str) -> Vec<(String, Vec<Point3>)> {
    let mut out: Vec<(String, Vec<Point3>)> = Vec::new();
    let mut ring: Vec<Point3> = Vec::new();
    for line in obj.lines() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("o") => out.push((parts.next().unwrap_or_default().to_string(), Vec::new())),
            Some("v") => {
                let c: Vec<f64> = parts.filter_map(|s| s.parse().ok()).collect();
                if c.len() == 3 {
                    ring.push(Point3::new(c[0], c[1], c[2]));
                }
                if ring.len() == TUBE_SIDES {
                    let centre = ring.iter().sum::<Point3>() / TUBE_SIDES as f64;
                    if let Some(last) = out.last_mut() {
                        last.1.push(centre);
                    }
                    ring.clear();
                }
            }
            _ => {}
        }
    }
    out
}
