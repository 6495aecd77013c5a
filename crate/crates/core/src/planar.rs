//! Planar helpers for map-plane geometry (y up).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn lerp(&self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn around(c: Point2, half_w: f64, half_h: f64) -> Self {
        Self {
            min_x: c.x - half_w,
            min_y: c.y - half_h,
            max_x: c.x + half_w,
            max_y: c.y + half_h,
        }
    }

    pub fn point(c: Point2) -> Self {
        Self::around(c, 0.0, 0.0)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.min_x, self.min_y),
            Point2::new(self.max_x, self.min_y),
            Point2::new(self.max_x, self.max_y),
            Point2::new(self.min_x, self.max_y),
        ]
    }

    pub fn edges(&self) -> [(Point2, Point2); 4] {
        let c = self.corners();
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }

    pub fn union_point(&self, p: Point2) -> Rect {
        Rect {
            min_x: self.min_x.min(p.x),
            min_y: self.min_y.min(p.y),
            max_x: self.max_x.max(p.x),
            max_y: self.max_y.max(p.y),
        }
    }

    pub fn bounding(points: impl IntoIterator<Item = Point2>) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Rect::point(first), |r, p| r.union_point(p)))
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn dist_to_point(&self, p: Point2) -> f64 {
        let dx = (self.min_x - p.x).max(0.0).max(p.x - self.max_x);
        let dy = (self.min_y - p.y).max(0.0).max(p.y - self.max_y);
        dx.hypot(dy)
    }

    /// Distance between the rectangle (as a filled region) and a segment.
    pub fn dist_to_segment(&self, a: Point2, b: Point2) -> f64 {
        if self.contains(a) || self.contains(b) {
            return 0.0;
        }
        let mut best = self.dist_to_point(a).min(self.dist_to_point(b));
        for (p, q) in self.edges() {
            if segments_intersect(p, q, a, b) {
                return 0.0;
            }
            best = best.min(point_segment_dist(p, a, b));
        }
        best
    }
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

pub fn point_segment_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Point2::new(a.x + t * dx, a.y + t * dy))
}

pub fn point_polyline_dist(p: Point2, line: &[Point2]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => p.dist(*only),
        _ => line
            .windows(2)
            .map(|w| point_segment_dist(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Even-odd containment over a set of rings (outer boundary plus holes).
pub fn point_in_rings(p: Point2, rings: &[Vec<Point2>]) -> bool {
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        if n < 3 {
            continue;
        }
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (ring[i], ring[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
    }
    inside
}

/// Signed shoelace area (positive for counter-clockwise rings).
pub fn ring_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        s += a.x * b.y - b.x * a.y;
    }
    s / 2.0
}

/// Area centroid of a simple ring; falls back to the vertex mean when degenerate.
pub fn ring_centroid(ring: &[Point2]) -> Point2 {
    let n = ring.len();
    let a = ring_area(ring);
    if n < 3 || a.abs() < 1e-300 {
        let (sx, sy) = ring
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        let m = n.max(1) as f64;
        return Point2::new(sx / m, sy / m);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        let f = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * f;
        cy += (p.y + q.y) * f;
    }
    Point2::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// A point inside the rings near `hint`: `hint` itself when inside, otherwise
/// the midpoint of the widest interior run of the horizontal line through the
/// rings' vertical middle (or `hint.y` when that line crosses them).
pub fn interior_point(rings: &[Vec<Point2>], hint: Point2) -> Point2 {
    if point_in_rings(hint, rings) {
        return hint;
    }
    let bbox = match Rect::bounding(rings.iter().flatten().copied()) {
        Some(b) => b,
        None => return hint,
    };
    let mut best: Option<(f64, Point2)> = None;
    for y in [hint.y, (bbox.min_y + bbox.max_y) / 2.0] {
        let mut xs = Vec::new();
        for ring in rings {
            let n = ring.len();
            for i in 0..n {
                let (a, b) = (ring[i], ring[(i + 1) % n]);
                if (a.y > y) != (b.y > y) {
                    xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let w = pair[1] - pair[0];
            if best.map_or(true, |(bw, _)| w > bw) {
                best = Some((w, Point2::new((pair[0] + pair[1]) / 2.0, y)));
            }
        }
        if best.is_some() {
            break;
        }
    }
    best.map_or(hint, |(_, p)| p)
}
