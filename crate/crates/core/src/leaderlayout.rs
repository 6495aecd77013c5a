//! One-sided boundary labeling with po-leaders.
//!
//! Sites lie left of a vertical port line. Each leader runs from its site
//! along a diagonal of slope ±k to the height of its port, then horizontally
//! to the port and on to the matrix edge. Ports are evenly spaced, index 0 at
//! the top; the plane is y-up.
//!
//! Ordering starts from the minimum-length assignment (sites sorted by y onto
//! ports sorted by y) and repeatedly swaps the ports of two crossing leaders
//! of the same orientation. A swap keeps both orientations and the total
//! vertical length, and removes one intercept inversion, so the loop ends
//! with a crossing-free assignment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planar::{point_in_rings, point_polyline_dist, segments_intersect, Point2, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LeaderError {
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Diagonal rises from the site to the port height.
    Up,
    /// Diagonal falls from the site to the port height.
    Down,
}

impl Orientation {
    /// Slope of the diagonal for a gradient magnitude `k`.
    pub fn slope(self, k: f64) -> f64 {
        match self {
            Orientation::Up => k,
            Orientation::Down => -k,
        }
    }
}

/// Evenly spaced ports on the vertical line `x`, the first centred half a
/// pitch below `top`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortLine {
    pub x: f64,
    pub top: f64,
    pub pitch: f64,
    pub count: usize,
}

impl PortLine {
    pub fn port_y(&self, i: usize) -> f64 {
        self.top - (i as f64 + 0.5) * self.pitch
    }

    pub fn port(&self, i: usize) -> Point2 {
        Point2::new(self.x, self.port_y(i))
    }

    pub fn span(&self) -> f64 {
        self.pitch * self.count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: String,
    pub site: Point2,
}

impl Anchor {
    pub fn new(id: impl Into<String>, site: Point2) -> Self {
        Self {
            id: id.into(),
            site,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leader {
    pub id: String,
    pub site: Point2,
    pub bend: Point2,
    /// Where the horizontal segment ends; the port unless extended to the matrix edge.
    pub end: Point2,
    pub port_index: usize,
    pub orientation: Orientation,
    pub band: usize,
}

impl Leader {
    pub fn polyline(&self) -> Vec<Point2> {
        vec![self.site, self.bend, self.end]
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Leader {
        let t = |p: Point2| Point2::new(p.x + dx, p.y + dy);
        Leader {
            site: t(self.site),
            bend: t(self.bend),
            end: t(self.end),
            ..self.clone()
        }
    }
}

/// Maximal run of consecutive ports whose leaders share an orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub orientation: Orientation,
    /// First port index.
    pub start: usize,
    /// One past the last port index.
    pub end: usize,
}

impl Band {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Horizontal separator between band `upper` and band `upper + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLine {
    pub y: f64,
    pub upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderPlan {
    /// Region ids in port order (row and column order of the matrix).
    pub ordering: Vec<String>,
    /// Leaders in port order.
    pub leaders: Vec<Leader>,
    pub bands: Vec<Band>,
    pub band_lines: Vec<BandLine>,
    pub ports: PortLine,
    pub k: f64,
}

/// Slack allowed for bends computed from refined sites.
const BEND_TOLERANCE: f64 = 1e-9;

fn bend_for(site: Point2, port_y: f64, k: f64) -> Point2 {
    Point2::new(site.x + (port_y - site.y).abs() / k, port_y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dir {
    Up,
    Down,
    Level,
}

fn dir(site_y: f64, port_y: f64) -> Dir {
    if site_y < port_y {
        Dir::Up
    } else if site_y > port_y {
        Dir::Down
    } else {
        Dir::Level
    }
}

/// Port assignment for crossing-free routing: entry `i` is the index into
/// `anchors` of the site attached to port `i`. Independent of input order.
pub fn compute_ordering(anchors: &[Anchor], ports: &PortLine, k: f64) -> Vec<usize> {
    let n = anchors.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&anchors[a], &anchors[b]);
        q.site
            .y
            .total_cmp(&p.site.y)
            .then(p.site.x.total_cmp(&q.site.x))
            .then_with(|| p.id.cmp(&q.id))
    });
    let port_y: Vec<f64> = (0..n).map(|i| ports.port_y(i)).collect();
    let site = |order: &[usize], i: usize| anchors[order[i]].site;

    // Far enough right that every bend lies left of it.
    let reach = anchors
        .iter()
        .map(|a| a.site.x)
        .fold(f64::NEG_INFINITY, f64::max)
        + (ports.span()
            + anchors
                .iter()
                .map(|a| (a.site.y - ports.top).abs())
                .fold(0.0, f64::max))
            / k
        + 1.0;
    let route = |s: Point2, p: f64| [s, bend_for(s, p, k), Point2::new(reach, p)];
    let crosses = |a: &[Point2; 3], b: &[Point2; 3]| {
        a.windows(2).any(|u| {
            b.windows(2)
                .any(|v| segments_intersect(u[0], u[1], v[0], v[1]))
        })
    };

    let max_rounds = n * n + 1;
    for _ in 0..max_rounds {
        let mut swapped = false;
        for i in 0..n {
            for j in i + 1..n {
                let (si, sj) = (site(&order, i), site(&order, j));
                let orientation = match (dir(si.y, port_y[i]), dir(sj.y, port_y[j])) {
                    (Dir::Level, Dir::Level) => continue,
                    (Dir::Level, d) | (d, Dir::Level) => d,
                    (a, b) if a == b => a,
                    _ => continue,
                };
                // Port i is above port j, so its diagonal must lie above.
                let inverted = match orientation {
                    Dir::Up => si.y - k * si.x < sj.y - k * sj.x,
                    _ => si.y + k * si.x < sj.y + k * sj.x,
                };
                if inverted && crosses(&route(si, port_y[i]), &route(sj, port_y[j])) {
                    order.swap(i, j);
                    swapped = true;
                }
            }
        }
        if !swapped {
            break;
        }
    }
    order
}

/// Routes leaders for a given ordering (entry `i` = anchor index at port `i`).
pub fn route_leaders(
    anchors: &[Anchor],
    ordering: &[usize],
    ports: &PortLine,
    k: f64,
    min_pitch: f64,
) -> Result<LeaderPlan, LeaderError> {
    let n = anchors.len();
    if ordering.len() != n || ports.count != n {
        return Err(LeaderError::InfeasibleGeometry(format!(
            "{} anchors for {} ports",
            n, ports.count
        )));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(LeaderError::InfeasibleGeometry(format!(
            "diagonal gradient {k} must be positive"
        )));
    }
    if ports.pitch < min_pitch {
        return Err(LeaderError::InfeasibleGeometry(format!(
            "matrix edge {:.6} shorter than {} ports at minimum pitch {:.6}",
            ports.span(),
            n,
            min_pitch
        )));
    }
    let sites: Vec<Point2> = ordering.iter().map(|&a| anchors[a].site).collect();
    let ids: Vec<String> = ordering.iter().map(|&a| anchors[a].id.clone()).collect();
    plan_from_sites(ids, &sites, ports, k)
}

fn plan_from_sites(
    ordering: Vec<String>,
    sites: &[Point2],
    ports: &PortLine,
    k: f64,
) -> Result<LeaderPlan, LeaderError> {
    let n = sites.len();
    let dirs: Vec<Dir> = (0..n).map(|i| dir(sites[i].y, ports.port_y(i))).collect();
    let mut orient = Vec::with_capacity(n);
    for i in 0..n {
        let o = match dirs[i] {
            Dir::Up => Orientation::Up,
            Dir::Down => Orientation::Down,
            Dir::Level => match orient.last() {
                Some(&prev) => prev,
                None => match dirs[i..].iter().find(|d| **d != Dir::Level) {
                    Some(Dir::Down) => Orientation::Down,
                    _ => Orientation::Up,
                },
            },
        };
        orient.push(o);
    }

    let mut bands: Vec<Band> = Vec::new();
    for (i, &o) in orient.iter().enumerate() {
        match bands.last_mut() {
            Some(b) if b.orientation == o => b.end = i + 1,
            _ => bands.push(Band {
                orientation: o,
                start: i,
                end: i + 1,
            }),
        }
    }

    let mut leaders = Vec::with_capacity(n);
    for (bi, b) in bands.iter().enumerate() {
        for i in b.start..b.end {
            let bend = bend_for(sites[i], ports.port_y(i), k);
            if bend.x > ports.x + BEND_TOLERANCE {
                return Err(LeaderError::InfeasibleGeometry(format!(
                    "leader {} bends at x={:.6}, beyond the port line at x={:.6}",
                    ordering[i], bend.x, ports.x
                )));
            }
            leaders.push(Leader {
                id: ordering[i].clone(),
                site: sites[i],
                bend,
                end: ports.port(i),
                port_index: i,
                orientation: b.orientation,
                band: bi,
            });
        }
    }

    let band_lines = bands
        .windows(2)
        .enumerate()
        .map(|(upper, w)| {
            let y = match w[0].orientation {
                // Ports of the two bands are separated.
                Orientation::Down => (ports.port_y(w[0].end - 1) + ports.port_y(w[1].start)) / 2.0,
                // Sites of the upper band lie above those of the lower band.
                Orientation::Up => {
                    let lo = (w[0].start..w[0].end)
                        .map(|i| sites[i].y)
                        .fold(f64::INFINITY, f64::min);
                    let hi = (w[1].start..w[1].end)
                        .map(|i| sites[i].y)
                        .fold(f64::NEG_INFINITY, f64::max);
                    (lo + hi) / 2.0
                }
            };
            BandLine { y, upper }
        })
        .collect();

    Ok(LeaderPlan {
        ordering,
        leaders,
        bands,
        band_lines,
        ports: *ports,
        k,
    })
}

impl LeaderPlan {
    /// Sites in port order.
    pub fn sites(&self) -> Vec<Point2> {
        self.leaders.iter().map(|l| l.site).collect()
    }

    pub fn polylines(&self) -> Vec<Vec<Point2>> {
        self.leaders.iter().map(Leader::polyline).collect()
    }

    /// Re-routes with moved sites; ordering and ports stay fixed. Bands and
    /// band lines are recomputed from the new sites.
    pub fn with_sites(&self, sites: &[Point2]) -> Result<LeaderPlan, LeaderError> {
        let mut plan = plan_from_sites(self.ordering.clone(), sites, &self.ports, self.k)?;
        for (new, old) in plan.leaders.iter_mut().zip(&self.leaders) {
            new.end = Point2::new(old.end.x, new.end.y);
        }
        Ok(plan)
    }

    /// Extends every horizontal segment to `end_x(port_index)`.
    pub fn extend_to(&mut self, end_x: impl Fn(usize) -> f64) {
        for l in &mut self.leaders {
            l.end = Point2::new(end_x(l.port_index), l.end.y);
        }
    }

    /// Index pairs of leaders whose polylines touch or cross.
    pub fn crossing_pairs(&self) -> Vec<(usize, usize)> {
        crossing_pairs(&self.polylines())
    }
}

/// Pairs of polylines sharing at least one point.
pub fn crossing_pairs(lines: &[Vec<Point2>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let hit = lines[i].windows(2).any(|a| {
                lines[j]
                    .windows(2)
                    .any(|b| segments_intersect(a[0], a[1], b[0], b[1]))
            });
            if hit {
                out.push((i, j));
            }
        }
    }
    out
}

/// Axis-aligned box in which a connection site may move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeRect {
    pub rect: Rect,
    /// Cut back for clearance from other leaders.
    pub pruned: bool,
    /// Reduced to the site point.
    pub collapsed: bool,
}

impl FreeRect {
    pub fn collapsed_at(site: Point2) -> Self {
        Self {
            rect: Rect::point(site),
            pruned: false,
            collapsed: true,
        }
    }

    pub fn upper_left(&self) -> Point2 {
        Point2::new(self.rect.min_x, self.rect.max_y)
    }

    pub fn bottom_right(&self) -> Point2 {
        Point2::new(self.rect.max_x, self.rect.min_y)
    }
}

const SEARCH_STEPS: usize = 20;
const GROW_ROUNDS: usize = 2;

fn rect_inside(r: &Rect, rings: &[Vec<Point2>]) -> bool {
    if !r.corners().iter().all(|&c| point_in_rings(c, rings)) {
        return false;
    }
    for ring in rings {
        let n = ring.len();
        for i in 0..n {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            if a.x > r.min_x && a.x < r.max_x && a.y > r.min_y && a.y < r.max_y {
                return false;
            }
            if a.x.max(b.x) < r.min_x
                || a.x.min(b.x) > r.max_x
                || a.y.max(b.y) < r.min_y
                || a.y.min(b.y) > r.max_y
            {
                continue;
            }
            if r.edges()
                .iter()
                .any(|&(p, q)| segments_intersect(p, q, a, b))
            {
                return false;
            }
        }
    }
    true
}

/// Largest value in `[lo, hi]` passing `ok`, assuming `ok(lo)` holds and
/// `ok` is monotone.
fn search_max(lo: f64, hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(hi) {
        return hi;
    }
    let (mut good, mut bad) = (lo, hi);
    for _ in 0..SEARCH_STEPS {
        let mid = (good + bad) / 2.0;
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

fn clearance(r: &Rect, obstacle: &[Point2]) -> f64 {
    match obstacle {
        [] => f64::INFINITY,
        [p] => r.dist_to_point(*p),
        _ => obstacle
            .windows(2)
            .map(|s| r.dist_to_segment(s[0], s[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Grows a rectangle centred on `site` inside `rings` (largest square first,
/// then alternately wider and taller), then cuts it back so every point is
/// at least `d_b` from each obstacle polyline.
pub fn grow_free_rect(
    rings: &[Vec<Point2>],
    site: Point2,
    obstacles: &[Vec<Point2>],
    d_b: f64,
) -> FreeRect {
    let Some(bbox) = Rect::bounding(rings.iter().flatten().copied()) else {
        return FreeRect::collapsed_at(site);
    };
    if !point_in_rings(site, rings) || obstacles.iter().any(|o| point_polyline_dist(site, o) < d_b)
    {
        return FreeRect::collapsed_at(site);
    }
    let max_w = (site.x - bbox.min_x).max(bbox.max_x - site.x);
    let max_h = (site.y - bbox.min_y).max(bbox.max_y - site.y);
    let fits = |hw: f64, hh: f64| rect_inside(&Rect::around(site, hw, hh), rings);

    let s = search_max(0.0, max_w.min(max_h), |s| fits(s, s));
    let (mut hw, mut hh) = (s, s);
    for _ in 0..GROW_ROUNDS {
        hw = search_max(hw, max_w, |w| fits(w, hh));
        hh = search_max(hh, max_h, |h| fits(hw, h));
    }
    let mut rect = Rect::around(site, hw, hh);

    let mut pruned = false;
    for obstacle in obstacles {
        if clearance(&rect, obstacle) >= d_b {
            continue;
        }
        pruned = true;
        let clear = |r: &Rect| clearance(r, obstacle) >= d_b;
        let cuts: [(fn(&mut Rect, f64), f64, f64); 4] = [
            (|r, v| r.min_x = v, rect.min_x, site.x),
            (|r, v| r.max_x = v, rect.max_x, site.x),
            (|r, v| r.min_y = v, rect.min_y, site.y),
            (|r, v| r.max_y = v, rect.max_y, site.y),
        ];
        let mut best: Option<Rect> = None;
        for (set, from, to) in cuts {
            let at = |t: f64| {
                let mut r = rect;
                set(&mut r, to + (from - to) * t);
                r
            };
            if !clear(&at(0.0)) {
                continue;
            }
            let cut = at(search_max(0.0, 1.0, |t| clear(&at(t))));
            let area = |r: &Rect| r.width() * r.height();
            if best.map_or(true, |b| area(&cut) > area(&b)) {
                best = Some(cut);
            }
        }
        rect = best.unwrap_or_else(|| {
            let scaled = |t: f64| Rect {
                min_x: site.x + (rect.min_x - site.x) * t,
                min_y: site.y + (rect.min_y - site.y) * t,
                max_x: site.x + (rect.max_x - site.x) * t,
                max_y: site.y + (rect.max_y - site.y) * t,
            };
            scaled(search_max(0.0, 1.0, |t| clear(&scaled(t))))
        });
    }
    FreeRect {
        rect,
        pruned,
        collapsed: false,
    }
}

impl LeaderPlan {
    /// Free rectangle for every leader; `rings[i]` is the region outline for
    /// the leader at port `i`. Obstacles are the other leaders.
    pub fn free_rects(&self, rings: &[Vec<Vec<Point2>>], d_b: f64) -> Vec<FreeRect> {
        let lines = self.polylines();
        (0..self.leaders.len())
            .map(|i| {
                let others: Vec<Vec<Point2>> = lines
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, l)| l.clone())
                    .collect();
                grow_free_rect(&rings[i], self.leaders[i].site, &others, d_b)
            })
            .collect()
    }
}
