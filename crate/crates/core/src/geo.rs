//! Spherical geometry shared by every layout: great-circle distance,
//! spherical rotation, the Hammer projection and graticules.
//!
//! Hammer projection on the unit sphere, longitude `λ` and latitude `φ` in
//! radians:
//!
//! ```text
//! x = 2√2 · cos φ · sin(λ/2) / √(1 + cos φ · cos(λ/2))
//! y =  √2 · sin φ            / √(1 + cos φ · cos(λ/2))
//! ```
//!
//! The image is the ellipse `x²/8 + y²/2 ≤ 1`. The inverse is closed form:
//!
//! ```text
//! z = √(1 − (x/4)² − (y/2)²)
//! λ = 2 · atan2(z·x, 2·(2z² − 1))
//! φ = asin(z·y)
//! ```
//!
//! Rotations follow the usual web-mapping convention of three Euler angles
//! `[yaw, pitch, roll]`: a longitude shift by `yaw`, then a rotation that moves
//! latitude by `pitch` along the prime meridian, then a roll about the axis
//! through `(0°, 0°)`. Internally they are unit quaternions.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for exact-geometry assertions, in degrees.
pub const ANGLE_EPS_DEG: f64 = 1e-9;
/// Tolerance for projection round trips, in projected units.
pub const PROJECTION_EPS: f64 = 1e-7;

const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Half of the Hammer ellipse's horizontal axis, `2√2`.
pub const HAMMER_X_MAX: f64 = 2.0 * SQRT2;
/// Half of the Hammer ellipse's vertical axis, `√2`.
pub const HAMMER_Y_MAX: f64 = SQRT2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("invalid coordinate (lon {lon}, lat {lat})")]
    InvalidCoordinate { lon: f64, lat: f64 },
    #[error("projected point ({x}, {y}) lies outside the Hammer ellipse")]
    OutOfBounds { x: f64, y: f64 },
    #[error("graticule spacing {0} must be positive and divide 90")]
    InvalidSpacing(f64),
}

/// A longitude/latitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lon: f64,
    lat: f64,
}

impl GeoPoint {
    /// Validates the latitude and wraps the longitude into `[-180, 180]`.
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeoError> {
        if !lon.is_finite() || !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidCoordinate { lon, lat });
        }
        Ok(Self {
            lon: wrap_lon(lon),
            lat,
        })
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    /// Unit vector with x towards (0°, 0°), y towards (90°E, 0°) and z north.
    pub fn to_unit_vector(&self) -> Vector3<f64> {
        let (lon, lat) = (self.lon.to_radians(), self.lat.to_radians());
        Vector3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
    }

    pub fn from_unit_vector(v: &Vector3<f64>) -> Self {
        let n = v.norm();
        let (x, y, z) = (v.x / n, v.y / n, v.z / n);
        let lat = z.clamp(-1.0, 1.0).asin().to_degrees();
        let lon = if x.abs() < 1e-300 && y.abs() < 1e-300 {
            0.0
        } else {
            y.atan2(x).to_degrees()
        };
        Self {
            lon: wrap_lon(lon),
            lat,
        }
    }

    /// Spherical mean of a set of points; `None` for an empty set or when the
    /// vectors cancel out.
    pub fn centroid(points: &[GeoPoint]) -> Option<GeoPoint> {
        let sum = points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.to_unit_vector());
        if sum.norm() < 1e-12 {
            return None;
        }
        Some(GeoPoint::from_unit_vector(&sum))
    }
}

fn wrap_lon(lon: f64) -> f64 {
    if (-180.0..=180.0).contains(&lon) {
        return if lon == 0.0 { 0.0 } else { lon };
    }
    let w = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if w == 0.0 {
        0.0
    } else {
        w
    }
}

/// Central angle between two points in degrees, in `[0, 180]`.
pub fn great_circle_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (l1, p1) = (a.lon.to_radians(), a.lat.to_radians());
    let (l2, p2) = (b.lon.to_radians(), b.lat.to_radians());
    let dl = l2 - l1;
    let (sp1, cp1) = p1.sin_cos();
    let (sp2, cp2) = p2.sin_cos();
    let (sdl, cdl) = dl.sin_cos();
    let num = ((cp2 * sdl).powi(2) + (cp1 * sp2 - sp1 * cp2 * cdl).powi(2)).sqrt();
    let den = sp1 * sp2 + cp1 * cp2 * cdl;
    num.atan2(den).to_degrees()
}

/// A spherical rotation given as yaw/pitch/roll in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    yaw: f64,
    pitch: f64,
    roll: f64,
    quat: UnitQuaternion<f64>,
}

impl Rotation3 {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        let z = Vector3::z_axis();
        let y = Vector3::y_axis();
        let x = Vector3::x_axis();
        let quat = UnitQuaternion::from_axis_angle(&x, roll.to_radians())
            * UnitQuaternion::from_axis_angle(&y, -pitch.to_radians())
            * UnitQuaternion::from_axis_angle(&z, yaw.to_radians());
        Self {
            yaw,
            pitch,
            roll,
            quat,
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    fn from_quaternion(quat: UnitQuaternion<f64>) -> Self {
        // quat = Rx(roll) · Ry(-pitch) · Rz(yaw)
        let m = quat.to_rotation_matrix();
        let m = m.matrix();
        let sb = m[(0, 2)].clamp(-1.0, 1.0);
        let b = sb.asin();
        let (yaw, roll) = if b.cos().abs() > 1e-12 {
            ((-m[(0, 1)]).atan2(m[(0, 0)]), (-m[(1, 2)]).atan2(m[(2, 2)]))
        } else {
            (m[(1, 0)].atan2(m[(1, 1)]), 0.0)
        };
        Self {
            yaw: yaw.to_degrees(),
            pitch: -b.to_degrees(),
            roll: roll.to_degrees(),
            quat,
        }
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.quat
    }

    pub fn inverse(&self) -> Self {
        Self::from_quaternion(self.quat.inverse())
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Rotation3) -> Self {
        Self::from_quaternion(next.quat * self.quat)
    }

    pub fn apply(&self, p: GeoPoint) -> GeoPoint {
        GeoPoint::from_unit_vector(&(self.quat * p.to_unit_vector()))
    }
}

impl Default for Rotation3 {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn rotate(p: GeoPoint, r: &Rotation3) -> GeoPoint {
    r.apply(p)
}

/// The rotation that moves `target` to (0°, 0°) keeping north up.
pub fn centering_rotation(target: GeoPoint) -> Rotation3 {
    let neg = |v: f64| if v == 0.0 { 0.0 } else { -v };
    // Near the poles the heading is undefined; roll stays 0 there as well.
    Rotation3::new(neg(target.lon), neg(target.lat), 0.0)
}

/// Point in the Hammer map plane (unitless, y up).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
}

impl ProjectedPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// `x²/8 + y²/2`; at most 1 inside the Hammer ellipse.
    pub fn ellipse_norm(&self) -> f64 {
        self.x * self.x / 8.0 + self.y * self.y / 2.0
    }
}

pub fn hammer_forward(p: GeoPoint) -> ProjectedPoint {
    let lam = p.lon.to_radians();
    let phi = p.lat.to_radians();
    let cphi = phi.cos();
    let half = lam / 2.0;
    let d = (1.0 + cphi * half.cos()).sqrt();
    if d < 1e-15 {
        // The antipode of the centre maps to the whole boundary; pick its equator point.
        return ProjectedPoint::new(
            if lam < 0.0 {
                -HAMMER_X_MAX
            } else {
                HAMMER_X_MAX
            },
            0.0,
        );
    }
    ProjectedPoint::new(HAMMER_X_MAX * cphi * half.sin() / d, SQRT2 * phi.sin() / d)
}

pub fn hammer_inverse(q: ProjectedPoint) -> Result<GeoPoint, GeoError> {
    if !q.x.is_finite() || !q.y.is_finite() || q.ellipse_norm() > 1.0 + 1e-12 {
        return Err(GeoError::OutOfBounds { x: q.x, y: q.y });
    }
    let z2 = (1.0 - (q.x / 4.0).powi(2) - (q.y / 2.0).powi(2)).max(0.0);
    let z = z2.sqrt();
    let lam = 2.0 * (z * q.x).atan2(2.0 * (2.0 * z2 - 1.0));
    let phi = (z * q.y).clamp(-1.0, 1.0).asin();
    GeoPoint::new(lam.to_degrees(), phi.to_degrees())
}

/// Rotation followed by the Hammer projection.
#[derive(Debug, Clone, Copy, Default)]
pub struct HammerView {
    pub rotation: Rotation3,
}

impl HammerView {
    /// A view whose projection centre is `centre`.
    pub fn centred_on(centre: GeoPoint) -> Self {
        Self {
            rotation: centering_rotation(centre),
        }
    }

    pub fn project(&self, p: GeoPoint) -> ProjectedPoint {
        hammer_forward(self.rotation.apply(p))
    }

    pub fn unproject(&self, q: ProjectedPoint) -> Result<GeoPoint, GeoError> {
        Ok(self.rotation.inverse().apply(hammer_inverse(q)?))
    }

    /// Rotates a polyline, splits it at the antimeridian and projects the pieces.
    pub fn project_polyline(&self, line: &[GeoPoint]) -> Vec<Vec<ProjectedPoint>> {
        let rotated: Vec<GeoPoint> = line.iter().map(|p| self.rotation.apply(*p)).collect();
        split_antimeridian(&rotated)
            .into_iter()
            .map(|piece| piece.into_iter().map(hammer_forward).collect())
            .collect()
    }
}

/// Cuts a polyline wherever consecutive vertices are more than 180° apart in
/// longitude, inserting the interpolated crossing on both sides.
pub fn split_antimeridian(line: &[GeoPoint]) -> Vec<Vec<GeoPoint>> {
    let mut out = Vec::new();
    let mut current: Vec<GeoPoint> = Vec::new();
    for (i, &p) in line.iter().enumerate() {
        if i > 0 {
            let a = line[i - 1];
            let dl = p.lon - a.lon;
            if dl.abs() > 180.0 {
                // Edge goes the short way round through ±180.
                let edge = if a.lon > 0.0 { 180.0 } else { -180.0 };
                let b_unwrapped = if a.lon > 0.0 {
                    p.lon + 360.0
                } else {
                    p.lon - 360.0
                };
                let t = (edge - a.lon) / (b_unwrapped - a.lon);
                let lat = a.lat + t * (p.lat - a.lat);
                current.push(GeoPoint { lon: edge, lat });
                out.push(std::mem::take(&mut current));
                current.push(GeoPoint { lon: -edge, lat });
            }
        }
        current.push(p);
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraticuleKind {
    Meridian,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraticuleLine {
    pub kind: GraticuleKind,
    /// Longitude of a meridian or latitude of a parallel.
    pub value: f64,
    pub emphasis: bool,
    pub points: Vec<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graticule {
    pub spacing: f64,
    pub lines: Vec<GraticuleLine>,
}

impl Graticule {
    pub fn meridians(&self) -> impl Iterator<Item = &GraticuleLine> {
        self.lines
            .iter()
            .filter(|l| l.kind == GraticuleKind::Meridian)
    }

    pub fn parallels(&self) -> impl Iterator<Item = &GraticuleLine> {
        self.lines
            .iter()
            .filter(|l| l.kind == GraticuleKind::Parallel)
    }
}

/// Sample step along graticule lines, in degrees.
const GRATICULE_STEP: f64 = 1.0;

/// Meridians every `spacing` degrees from -180 and parallels every `spacing`
/// degrees strictly between the poles. The equator is flagged for emphasis.
pub fn graticule(spacing: f64) -> Result<Graticule, GeoError> {
    let steps = 90.0 / spacing;
    if !spacing.is_finite() || spacing <= 0.0 || (steps - steps.round()).abs() > 1e-9 {
        return Err(GeoError::InvalidSpacing(spacing));
    }
    let per_quarter = steps.round() as i64;
    let mut lines = Vec::new();
    let samples = |from: f64, to: f64| {
        let n = ((to - from) / GRATICULE_STEP).ceil().max(1.0) as usize;
        (0..=n).map(move |i| from + (to - from) * i as f64 / n as f64)
    };
    for i in 0..4 * per_quarter {
        let lon = -180.0 + i as f64 * spacing;
        lines.push(GraticuleLine {
            kind: GraticuleKind::Meridian,
            value: lon,
            emphasis: false,
            points: samples(-90.0, 90.0)
                .map(|lat| GeoPoint { lon, lat })
                .collect(),
        });
    }
    for i in 1..2 * per_quarter {
        let lat = -90.0 + i as f64 * spacing;
        lines.push(GraticuleLine {
            kind: GraticuleKind::Parallel,
            value: lat,
            emphasis: lat == 0.0,
            points: samples(-180.0, 180.0)
                .map(|lon| GeoPoint { lon, lat })
                .collect(),
        });
    }
    Ok(Graticule { spacing, lines })
}
