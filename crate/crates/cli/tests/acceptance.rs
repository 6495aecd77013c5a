//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so every line is printed; exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use odflow::flow3d::{bezier_flow_on_map, control_height, globe_tube};
use odflow::geo::{great_circle_distance, hammer_forward, GeoPoint, HammerView, Rotation3};
use odflow::layouts::{
    layout_maptrix, layout_od_maps, relayout, transform, Canvas, GridAssignment, Layout,
    LayoutKind, LayoutParams, Primitive, RelayoutRequest, Xy,
};
use odflow::leaderlayout::{compute_ordering, route_leaders, Anchor, FreeRect, PortLine};
use odflow::oddata::{
    load_dataset, parse_regions, Flow, FlowDataset, LoadOptions, Region, RegionGroup,
};
use odflow::planar::{Point2, Rect};
use odflow::qprefine::{build_qp, separation, solve_qp, Axis, QpBlock, QpParams};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const FIXTURES: [&str; 5] = ["au", "nz", "de", "cn", "us"];

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture_file(name: &str, file: &str) -> PathBuf {
    root().join("fixtures").join(name).join(file)
}

fn fixture(name: &str) -> FlowDataset {
    let flows = std::fs::read(fixture_file(name, "flows.csv")).unwrap();
    let regions = std::fs::read(fixture_file(name, "regions.geojson")).unwrap();
    load_dataset(flows.as_slice(), regions.as_slice(), LoadOptions::default()).unwrap()
}

fn fixture_regions(name: &str) -> Vec<Region> {
    parse_regions(
        std::fs::read(fixture_file(name, "regions.geojson"))
            .unwrap()
            .as_slice(),
    )
    .unwrap()
}

fn grid(name: &str) -> GridAssignment {
    GridAssignment::from_json(&std::fs::read_to_string(fixture_file(name, "grid.json")).unwrap())
        .unwrap()
}

fn odflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_odflow"))
        .args(args)
        .output()
        .unwrap()
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Closed-segment intersection from orientation signs.

fn orient(a: Xy, b: Xy, c: Xy) -> i8 {
    let v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    (v > 0.0) as i8 - (v < 0.0) as i8
}

fn within(a: Xy, b: Xy, p: Xy) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_meet(p1: Xy, p2: Xy, q1: Xy, q2: Xy) -> bool {
    let (o1, o2, o3, o4) = (
        orient(p1, p2, q1),
        orient(p1, p2, q2),
        orient(q1, q2, p1),
        orient(q1, q2, p2),
    );
    if o1 != o2
        && o3 != o4
        && o1 * o2 <= 0
        && o3 * o4 <= 0
        && (o1 != 0 || o2 != 0)
        && (o3 != 0 || o4 != 0)
    {
        return true;
    }
    (o1 == 0 && within(p1, p2, q1))
        || (o2 == 0 && within(p1, p2, q2))
        || (o3 == 0 && within(q1, q2, p1))
        || (o4 == 0 && within(q1, q2, p2))
}

fn polylines_meet(a: &[Xy], b: &[Xy]) -> bool {
    a.windows(2)
        .any(|s| b.windows(2).any(|t| segments_meet(s[0], s[1], t[0], t[1])))
}

fn count_crossings(lines: &[Vec<Xy>]) -> usize {
    let mut n = 0;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            n += polylines_meet(&lines[i], &lines[j]) as usize;
        }
    }
    n
}

/// Flows among `n` random regions of a fixture, every chosen region active.
fn random_dataset(rng: &mut ChaCha8Rng, regions: &[Region], n: usize) -> FlowDataset {
    let ids: Vec<&str> = regions.iter().map(|r| r.id.as_str()).collect();
    let chosen: Vec<&str> = ids.choose_multiple(rng, n).copied().collect();
    let mut pairs: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for (i, &o) in chosen.iter().enumerate() {
        let d = chosen[(i + 1 + rng.gen_range(0..n - 1)) % n];
        pairs.insert((o, d), rng.gen_range(1..1000) as f64);
    }
    let extra = rng.gen_range(0..=n * 2);
    for _ in 0..extra {
        let (o, d) = (chosen[rng.gen_range(0..n)], chosen[rng.gen_range(0..n)]);
        if o != d {
            pairs.insert((o, d), rng.gen_range(1..1000) as f64);
        }
    }
    let flows = pairs
        .into_iter()
        .map(|((o, d), m)| Flow {
            origin: o.into(),
            dest: d.into(),
            magnitude: m,
        })
        .collect();
    FlowDataset::new(regions.to_vec(), flows, LoadOptions::default()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let regions: Vec<(&str, Vec<Region>)> =
        FIXTURES.iter().map(|&f| (f, fixture_regions(f))).collect();
    let sizes = [4, 8, 16, 34, 51];
    let (mut crossings, mut failures, mut qp_worse) = (0, Vec::new(), 0);
    for i in 0..200 {
        let n = sizes[i % sizes.len()];
        let pool: Vec<&(&str, Vec<Region>)> =
            regions.iter().filter(|(_, r)| r.len() >= n).collect();
        let (name, rs) = pool.choose(&mut rng).unwrap();
        let d = random_dataset(&mut rng, rs, n);
        match layout_maptrix(&d, Canvas::new(1200.0, 800.0), &LayoutParams::default()) {
            Ok(l) => {
                let mt = l.maptrix.unwrap();
                assert_eq!(mt.ordering.len(), n);
                for side in [&mt.origin_leaders, &mt.dest_leaders] {
                    let lines: Vec<Vec<Xy>> = side.iter().map(|l| l.points()).collect();
                    crossings += count_crossings(&lines);
                }
                qp_worse += (mt.qp.objective > mt.qp.initial_objective) as usize;
            }
            Err(e) => failures.push(format!("{name} n={n}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        crossings == 0 && failures.is_empty() && qp_worse == 0 && secs < 120.0,
        format!(
            "200 datasets over {} with n in {sizes:?}: {crossings} crossings, {} layout failures{}, objective above start on {qp_worse}, {secs:.1} s",
            FIXTURES.join("/"),
            failures.len(),
            failures.first().map(|f| format!(" ({f})")).unwrap_or_default()
        ),
    )
}

fn criterion_2() -> Outcome {
    let regions = fixture_file("us", "regions.geojson").display().to_string();
    let o = odflow(&[
        "bench-qp",
        "--regions",
        &regions,
        "--n",
        "51",
        "--trials",
        "30",
        "--json",
    ]);
    if !o.status.success() {
        return Err(format!(
            "bench-qp failed: {}",
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let median = r["medianMs"].as_f64().unwrap();
    check(
        median <= 50.0,
        format!("bench-qp n = 51: median {median:.2} ms over 30 trials (limit 50 ms)"),
    )
}

/// Best feasible objective on a grid that zooms in on the incumbent.
fn grid_optimum(b: &QpBlock) -> f64 {
    const STEPS: usize = 16;
    let n = b.start.len();
    let mut best_z = b.start.clone();
    let mut best = b.objective(&best_z);
    let (mut lo, mut hi) = (b.lower.clone(), b.upper.clone());
    for _ in 0..8 {
        let total = (STEPS + 1).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let z: Vec<f64> = (0..n)
                .map(|i| {
                    let k = c % (STEPS + 1);
                    c /= STEPS + 1;
                    lo[i] + (hi[i] - lo[i]) * k as f64 / STEPS as f64
                })
                .collect();
            if b.is_feasible(&z, 0.0) {
                let f = b.objective(&z);
                if f < best {
                    best = f;
                    best_z = z;
                }
            }
        }
        for i in 0..n {
            let cell = (hi[i] - lo[i]) / STEPS as f64;
            lo[i] = (best_z[i] - 2.0 * cell).max(b.lower[i]);
            hi[i] = (best_z[i] + 2.0 * cell).min(b.upper[i]);
        }
    }
    best
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut instances, mut worst_gap, mut above_start) = (0, f64::NEG_INFINITY, 0);
    let mut attempts = 0;
    while instances < 40 && attempts < 10_000 {
        attempts += 1;
        let count = rng.gen_range(2..=3);
        let base = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(-1.0..0.0));
        let anchors: Vec<Anchor> = (0..count)
            .map(|i| {
                let p = Point2::new(
                    base.x + rng.gen_range(-0.05..0.05),
                    base.y + rng.gen_range(-0.05..0.05),
                );
                Anchor::new(format!("s{i}"), p)
            })
            .collect();
        let ports = PortLine {
            x: 1.5,
            top: 0.0,
            pitch: 1.0 / count as f64,
            count,
        };
        let order = compute_ordering(&anchors, &ports, 1.0);
        let Ok(plan) = route_leaders(&anchors, &order, &ports, 1.0, 0.0) else {
            continue;
        };
        let rects: Vec<FreeRect> = plan
            .leaders
            .iter()
            .map(|l| FreeRect {
                rect: Rect::around(
                    l.site,
                    rng.gen_range(0.005..0.08),
                    rng.gen_range(0.005..0.08),
                ),
                pruned: false,
                collapsed: false,
            })
            .collect();
        let params = QpParams {
            w: rng.gen_range(0.1..50.0),
            target_separation: Some(rng.gen_range(0.01..0.3)),
            ..QpParams::default()
        };
        let problem = build_qp(&plan, &rects, &params);
        let Ok(sol) = solve_qp(&problem) else {
            continue;
        };
        above_start += (sol.objective > sol.initial_objective) as usize;
        for b in problem
            .blocks
            .iter()
            .filter(|b| !b.vars.is_empty() && b.vars.len() <= 4 && b.objective(&b.start) > 0.0)
        {
            let z: Vec<f64> = b
                .vars
                .iter()
                .map(|&(port, axis)| match axis {
                    Axis::X => sol.sites[port].x,
                    Axis::Y => sol.sites[port].y,
                })
                .collect();
            let solver = b.objective(&z);
            worst_gap = worst_gap.max(solver - grid_optimum(b));
            above_start += (solver > b.objective(&b.start) + 1e-15) as usize;
            instances += 1;
        }
    }
    check(
        instances >= 20 && worst_gap <= 1e-2 && above_start == 0,
        format!(
            "{instances} blocks with at most 4 variables and a non-zero start objective: largest solver-minus-grid gap {worst_gap:.2e} (limit 1e-2); objective above start on {above_start}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let b = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let k: f64 = rng.gen_range(0.1..5.0);
        // Perpendicular from b onto the slope-k line through a.
        let len = (1.0 + k * k).sqrt();
        let (ux, uy) = (1.0 / len, k / len);
        let (wx, wy) = (b.x - a.x, b.y - a.y);
        let along = wx * ux + wy * uy;
        let (px, py) = (wx - along * ux, wy - along * uy);
        let dist = px.hypot(py);
        let below = b.y < a.y + k * (b.x - a.x);
        let expected = if below { dist } else { -dist };
        worst = worst.max((separation(a, b, k) - expected).abs());
    }
    check(
        worst < 1e-9,
        format!("1000 random pairs: largest difference {worst:.1e} (limit 1e-9)"),
    )
}

fn random_geo(rng: &mut ChaCha8Rng) -> GeoPoint {
    GeoPoint::new(rng.gen_range(-180.0..180.0), rng.gen_range(-90.0f64..90.0)).unwrap()
}

fn shoelace(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| ring[i][0] * ring[(i + 1) % n][1] - ring[(i + 1) % n][0] * ring[i][1])
        .sum::<f64>()
        .abs()
        / 2.0
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut errs = [0.0f64; 6];
    for _ in 0..1000 {
        let h: f64 = rng.gen_range(0.01..0.5);
        errs[0] = errs[0].max((control_height(h) - 4.0 / 3.0 * h).abs());
        let (o, d) = (
            [rng.gen_range(-0.5..0.5), rng.gen_range(-0.25..0.25)],
            [rng.gen_range(-0.5..0.5), rng.gen_range(-0.25..0.25)],
        );
        let pts = bezier_flow_on_map(o, d, h, 65).unwrap();
        errs[0] = errs[0].max((pts[32].z - h).abs());
        let (dx, dy) = (d[0] - o[0], d[1] - o[1]);
        let len = dx.hypot(dy);
        for p in &pts {
            let off = if len > 0.0 {
                ((p.x - o[0]) * dy - (p.y - o[1]) * dx).abs() / len
            } else {
                (p.x - o[0]).hypot(p.y - o[1])
            };
            errs[2] = errs[2].max(off);
        }

        let (a, b) = (random_geo(&mut rng), random_geo(&mut rng));
        if great_circle_distance(a, b) < 179.0 {
            let view = HammerView::centred_on(random_geo(&mut rng));
            let r = rng.gen_range(0.1..1.0);
            let tube = globe_tube(a, b, &view, r, h, 65).unwrap();
            errs[1] = errs[1]
                .max((tube[0].norm() - r).abs())
                .max((tube[64].norm() - r).abs());
            errs[1] = errs[1].max((tube[32].norm() - (r + h)).abs());
        }

        let rot = Rotation3::new(
            rng.gen_range(-180.0..180.0),
            rng.gen_range(-90.0..90.0),
            rng.gen_range(-180.0..180.0),
        );
        let before = great_circle_distance(a, b);
        let after = great_circle_distance(rot.apply(a), rot.apply(b));
        errs[4] = errs[4].max((before - after).abs());

        // 0.1° quad, edges densified before projecting.
        let lon0: f64 = rng.gen_range(-180.0..179.9);
        let lat0: f64 = rng.gen_range(-90.0..89.9);
        let (lon1, lat1) = (lon0 + 0.1, lat0 + 0.1);
        let steps = 8;
        let mut ring = Vec::new();
        let mut push = |lon: f64, lat: f64| {
            let q = hammer_forward(GeoPoint::new(lon, lat).unwrap());
            ring.push([q.x, q.y]);
        };
        for i in 0..steps {
            push(lon0 + 0.1 * i as f64 / steps as f64, lat0);
        }
        for i in 0..steps {
            push(lon1, lat0 + 0.1 * i as f64 / steps as f64);
        }
        for i in 0..steps {
            push(lon1 - 0.1 * i as f64 / steps as f64, lat1);
        }
        for i in 0..steps {
            push(lon0, lat1 - 0.1 * i as f64 / steps as f64);
        }
        let sphere = 0.1f64.to_radians() * (lat1.to_radians().sin() - lat0.to_radians().sin());
        errs[3] = errs[3].max((shoelace(&ring) / sphere - 1.0).abs());
    }
    let total_ellipse = PI * 2.0 * 2.0f64.sqrt() * 2.0f64.sqrt();
    errs[5] = (total_ellipse - 4.0 * PI).abs();
    check(
        errs[0] < 1e-12 && errs[1] < 1e-9 && errs[2] < 1e-9 && errs[3] < 5e-3 && errs[4] < 1e-9 && errs[5] < 1e-12,
        format!(
            "apex {:.1e}, globe radial {:.1e}, straightness {:.1e}, equal-area {:.1e} relative over 1000 quads, rotation {:.1e}°",
            errs[0],
            errs[1],
            errs[2],
            errs[3],
            errs[4]
        ),
    )
}

fn cells(l: &Layout, prefix: &str) -> BTreeMap<String, (Vec<Xy>, String, f64)> {
    l.primitives()
        .filter_map(|p| match p {
            Primitive::Cell {
                id,
                corners,
                fill,
                value,
                ..
            } if id.starts_with(prefix) => Some((
                id[prefix.len()..].to_string(),
                (corners.clone(), fill.to_string(), *value),
            )),
            _ => None,
        })
        .collect()
}

/// DO map of `a` against OD map of `b`, relative to each map's corner.
fn maps_agree(
    a: &Layout,
    a_prefix: &str,
    a_origin: Xy,
    b: &Layout,
    b_prefix: &str,
    b_origin: Xy,
) -> bool {
    let (ca, cb) = (cells(a, a_prefix), cells(b, b_prefix));
    ca.len() == cb.len()
        && ca.iter().all(|(k, (corners, fill, v))| {
            cb.get(k).is_some_and(|(c2, f2, v2)| {
                fill == f2
                    && v == v2
                    && corners.iter().zip(c2).all(|(p, q)| {
                        ((p[0] - a_origin[0]) - (q[0] - b_origin[0])).abs() < 1e-9
                            && ((p[1] - a_origin[1]) - (q[1] - b_origin[1])).abs() < 1e-9
                    })
            })
        })
}

fn oracle_flows(d: &FlowDataset, req: &RelayoutRequest) -> BTreeMap<(String, String), f64> {
    let owner: BTreeMap<&str, &str> = req
        .groups
        .iter()
        .flatten()
        .flat_map(|g| {
            g.members
                .iter()
                .map(move |m| (m.as_str(), g.label.as_str()))
        })
        .collect();
    let rename = |id: &str| owner.get(id).copied().unwrap_or(id).to_string();
    let mut sums: BTreeMap<(String, String), f64> = BTreeMap::new();
    for f in d.flows() {
        *sums
            .entry((rename(&f.origin), rename(&f.dest)))
            .or_default() += f.magnitude;
    }
    if let Some([lo, hi]) = req.filter {
        sums.retain(|_, m| *m >= lo && *m <= hi);
    }
    sums
}

fn criterion_6() -> Outcome {
    let mut problems = Vec::new();
    let canvas = Canvas::new(1200.0, 800.0);
    let params = LayoutParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fixtures: Vec<(&str, FlowDataset)> = FIXTURES.iter().map(|&f| (f, fixture(f))).collect();

    // Totals against sums recomputed from the flow list.
    let mut checked = 0;
    let mut datasets: Vec<FlowDataset> = fixtures.iter().map(|(_, d)| d.clone()).collect();
    for _ in 0..20 {
        let (_, d) = fixtures.choose(&mut rng).unwrap();
        let n = rng.gen_range(2..=d.regions().len().min(20));
        datasets.push(random_dataset(&mut rng, d.regions(), n));
    }
    for d in &datasets {
        let totals = d.totals();
        let total: f64 = d.flows().iter().map(|f| f.magnitude).sum();
        let out_sum: f64 = totals.values().map(|t| t.total_out).sum();
        let in_sum: f64 = totals.values().map(|t| t.total_in).sum();
        let mut ok = out_sum == total && in_sum == total;
        for r in d.regions() {
            let t = totals.get(&r.id).copied().unwrap_or_default();
            let out: f64 = d
                .flows()
                .iter()
                .filter(|f| f.origin == r.id)
                .map(|f| f.magnitude)
                .sum();
            let inn: f64 = d
                .flows()
                .iter()
                .filter(|f| f.dest == r.id)
                .map(|f| f.magnitude)
                .sum();
            ok &= t.total_out == out && t.total_in == inn;
        }
        if !ok {
            problems.push("totals do not conserve flow".to_string());
        }
        checked += 1;
    }

    // OD map of the transposed flows equals the DO map, and vice versa.
    for (name, d) in &fixtures {
        let g = grid(name);
        let flipped: Vec<Flow> = d
            .flows()
            .iter()
            .map(|f| Flow {
                origin: f.dest.clone(),
                dest: f.origin.clone(),
                magnitude: f.magnitude,
            })
            .collect();
        let t = FlowDataset::new(d.regions().to_vec(), flipped, LoadOptions::default()).unwrap();
        let (a, b) = (
            layout_od_maps(d, &g, canvas, &params).unwrap(),
            layout_od_maps(&t, &g, canvas, &params).unwrap(),
        );
        let (da, db) = (a.od_maps.as_ref().unwrap(), b.od_maps.as_ref().unwrap());
        if !maps_agree(&a, "docell:", da.do_origin, &b, "odcell:", db.od_origin)
            || !maps_agree(&a, "odcell:", da.od_origin, &b, "docell:", db.do_origin)
        {
            problems.push(format!("{name}: OD/DO transpose mismatch"));
        }
    }

    // Relayout composition over random filter and grouping requests.
    let mut ops = 0;
    for _ in 0..50 {
        let (name, d) = &fixtures[rng.gen_range(0..4)];
        let mags: Vec<f64> = d.flows().iter().map(|f| f.magnitude).collect();
        let mut req = RelayoutRequest::default();
        if rng.gen_bool(0.7) {
            let (mut lo, mut hi) = (
                *mags.choose(&mut rng).unwrap(),
                *mags.choose(&mut rng).unwrap(),
            );
            if rng.gen_bool(0.85) && lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            req.filter = Some([lo, hi]);
        }
        if rng.gen_bool(0.6) {
            let mut ids: Vec<&str> = d.regions().iter().map(|r| r.id.as_str()).collect();
            ids.shuffle(&mut rng);
            let mut groups = Vec::new();
            let mut at = 0;
            for gi in 0..rng.gen_range(1..=2) {
                let size = rng.gen_range(2..=3);
                groups.push(RegionGroup::new(
                    format!("G{gi}"),
                    ids[at..at + size].iter().copied(),
                ));
                at += size;
            }
            if rng.gen_bool(0.1) {
                groups.push(RegionGroup::new("Dup", [ids[0]]));
            }
            req.groups = Some(groups);
        }
        let composed = relayout(d, &req, canvas, &params).map(|l| l.to_canonical_json());
        let direct = transform(d, &req)
            .and_then(|t| layout_maptrix(&t, canvas, &params))
            .map(|l| l.to_canonical_json());
        if composed != direct {
            problems.push(format!("{name}: relayout differs for {req:?}"));
        }
        if let Ok(t) = transform(d, &req) {
            let got: BTreeMap<(String, String), f64> = t
                .flows()
                .iter()
                .map(|f| ((f.origin.clone(), f.dest.clone()), f.magnitude))
                .collect();
            if got != oracle_flows(d, &req) {
                problems.push(format!("{name}: transformed flows differ for {req:?}"));
            }
        }
        ops += 1;
    }
    check(
        problems.is_empty(),
        format!(
            "conservation on {checked} datasets, OD/DO transpose on {} fixtures, {ops} relayout requests{}",
            fixtures.len(),
            problems.first().map(|p| format!(": {p}")).unwrap_or_default()
        ),
    )
}

fn demo(out: &Path) -> Result<Vec<String>, String> {
    let o = odflow(&[
        "demo",
        "--fixtures-dir",
        &root().join("fixtures").display().to_string(),
        "-o",
        &out.display().to_string(),
    ]);
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    let mut names: Vec<String> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    Ok(names)
}

fn criterion_7(scratch: &Path) -> Outcome {
    let (a, b) = (scratch.join("run-a"), scratch.join("run-b"));
    let names = demo(&a)?;
    if demo(&b)? != names {
        return Err("runs wrote different file sets".into());
    }
    let mut differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).unwrap() != std::fs::read(b.join(n)).unwrap())
        .collect();
    let flows = fixture_file("de", "flows.csv").display().to_string();
    let regions = fixture_file("de", "regions.geojson").display().to_string();
    let extra = "de_filtered.svg".to_string();
    for dir in [&a, &b] {
        let out = dir.join(&extra).display().to_string();
        let args = [
            "render",
            "--kind",
            "maptrix",
            "--flows",
            &flows,
            "--regions",
            &regions,
            "--filter",
            "50:5000",
            "--groups",
            "North=SH,HH,MV",
            "--highlight-regions",
            "BE",
            "-o",
            &out,
        ];
        if !odflow(&args).status.success() {
            return Err("filtered render failed".into());
        }
    }
    if std::fs::read(a.join(&extra)).unwrap() != std::fs::read(b.join(&extra)).unwrap() {
        differing.push(&extra);
    }
    let kinds = |ext: &str| names.iter().filter(|n| n.ends_with(ext)).count();
    check(
        differing.is_empty(),
        format!(
            "{} artifacts ({} SVG, {} JSON, {} OBJ) byte-identical across two runs{}",
            names.len() + 1,
            kinds(".svg") + 1,
            kinds(".json"),
            kinds(".obj"),
            differing
                .first()
                .map(|n| format!("; {n} differs"))
                .unwrap_or_default()
        ),
    )
}

fn criterion_8(scratch: &Path) -> Outcome {
    let out = scratch.join("run-a");
    let golden = root().join("crates/core/tests/golden");
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for name in FIXTURES {
        for kind in LayoutKind::ALL {
            let file = format!("{name}_{kind}.svg");
            let (got, want) = (
                std::fs::read(out.join(&file)),
                std::fs::read(golden.join(&file)),
            );
            match (got, want) {
                (Ok(g), Ok(w)) if g == w => compared += 1,
                _ => mismatched.push(file),
            }
        }
    }
    let counts: Vec<usize> = FIXTURES
        .iter()
        .map(|f| fixture(f).active_regions().len())
        .collect();
    let expected_counts = [8, 16, 16, 34, 51];

    let us: Layout = serde_json::from_slice(
        &std::fs::read(out.join("us_maptrix.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mt = us.maptrix.as_ref().unwrap();
    let n = mt.matrix.n;
    let mut seps: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    let mut misplaced = 0;
    for p in us.primitives() {
        if let Primitive::Line { id, from, to, .. } = p {
            if let Some(rest) = id.strip_prefix("separator:") {
                let (axis, m) = rest.split_once(':').unwrap();
                let m: usize = m.parse().unwrap();
                seps.entry(if axis == "row" { "row" } else { "col" })
                    .or_default()
                    .insert(m);
                let f = m as f64 / n as f64;
                let (a, b) = if axis == "row" {
                    (mt.matrix.point(f, 0.0), mt.matrix.point(f, 1.0))
                } else {
                    (mt.matrix.point(0.0, f), mt.matrix.point(1.0, f))
                };
                let near =
                    |p: &Xy, q: &Xy| (p[0] - q[0]).abs() < 1e-3 && (p[1] - q[1]).abs() < 1e-3;
                misplaced += !(near(from, &a) && near(to, &b)) as usize;
            }
        }
    }
    let fives: BTreeSet<usize> = (1..).map(|i| 5 * i).take_while(|&m| m < n).collect();
    let separators_ok = n == 51
        && seps.get("row") == Some(&fives)
        && seps.get("col") == Some(&fives)
        && misplaced == 0;
    check(
        mismatched.is_empty() && counts == expected_counts && separators_ok,
        format!(
            "{compared}/15 SVGs match the golden files{}; region counts {counts:?}; US separators at {:?} ({misplaced} off the cell grid)",
            if mismatched.is_empty() { String::new() } else { format!(" (differ: {})", mismatched.join(", ")) },
            seps.get("row").map(|s| s.iter().copied().collect::<Vec<_>>()).unwrap_or_default()
        ),
    )
}

fn main() {
    let scratch = tempfile::tempdir().unwrap();
    let s = scratch.path().to_path_buf();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("crossing-free leaders", Box::new(criterion_1)),
        ("QP performance", Box::new(criterion_2)),
        ("QP correctness", Box::new(criterion_3)),
        ("separation identity", Box::new(criterion_4)),
        ("geometry identities", Box::new(criterion_5)),
        ("conservation and duality", Box::new(criterion_6)),
        (
            "determinism",
            Box::new({
                let s = s.clone();
                move || criterion_7(&s)
            }),
        ),
        ("fixture reproduction", Box::new(move || criterion_8(&s))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1} s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
