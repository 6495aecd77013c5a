//! Origin-destination flow datasets: ingest, validation, filtering,
//! aggregation and per-region totals.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geo::GeoPoint;
use crate::planar::{self, Point2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("parse error in {source_name} at {location}: {message}")]
    Parse {
        source_name: &'static str,
        location: String,
        message: String,
    },
    #[error("unknown region {0:?}")]
    UnknownRegion(String),
    #[error("duplicate region id {0:?}")]
    DuplicateRegion(String),
    #[error("duplicate flow {origin} -> {dest}")]
    DuplicateFlow { origin: String, dest: String },
    #[error("negative magnitude {magnitude} for {origin} -> {dest}")]
    NegativeMagnitude {
        origin: String,
        dest: String,
        magnitude: f64,
    },
    #[error("self flow {0} -> {0} not enabled")]
    SelfFlow(String),
    #[error("invalid magnitude range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("region {0:?} belongs to more than one group")]
    OverlappingGroups(String),
}

impl DataError {
    /// Stable name of the variant, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            DataError::Parse { .. } => "ParseError",
            DataError::UnknownRegion(_) => "UnknownRegion",
            DataError::DuplicateRegion(_) => "DuplicateRegion",
            DataError::DuplicateFlow { .. } => "DuplicateFlow",
            DataError::NegativeMagnitude { .. } => "NegativeMagnitude",
            DataError::SelfFlow(_) => "SelfFlow",
            DataError::InvalidRange { .. } => "InvalidRange",
            DataError::OverlappingGroups(_) => "OverlappingGroups",
        }
    }

    fn parse(
        source_name: &'static str,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        DataError::Parse {
            source_name,
            location: location.into(),
            message: message.into(),
        }
    }
}

/// One polygon: outer ring followed by holes, each ring closed.
pub type GeoPolygon = Vec<Vec<GeoPoint>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub name: String,
    pub abbr: String,
    pub polygons: Vec<GeoPolygon>,
    pub anchor: GeoPoint,
}

impl Region {
    /// Builds a region, placing the anchor at the centroid of its largest
    /// polygon (moved inside when the centroid falls outside).
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        abbr: impl Into<String>,
        polygons: Vec<GeoPolygon>,
    ) -> Self {
        let anchor = default_anchor(&polygons);
        Self {
            id: id.into(),
            name: name.into(),
            abbr: abbr.into(),
            polygons,
            anchor,
        }
    }

    /// Index of the polygon with the largest outer-ring area.
    pub fn largest_polygon(&self) -> Option<&GeoPolygon> {
        largest_polygon_index(&self.polygons).map(|i| &self.polygons[i])
    }
}

fn lonlat(p: &GeoPoint) -> Point2 {
    Point2::new(p.lon(), p.lat())
}

fn largest_polygon_index(polygons: &[GeoPolygon]) -> Option<usize> {
    let area = |poly: &GeoPolygon| {
        poly.first().map_or(0.0, |ring| {
            let pts: Vec<Point2> = ring.iter().map(lonlat).collect();
            let mean_lat = pts.iter().map(|p| p.y).sum::<f64>() / pts.len().max(1) as f64;
            planar::ring_area(&pts).abs() * mean_lat.to_radians().cos()
        })
    };
    (0..polygons.len()).max_by(|&a, &b| {
        area(&polygons[a])
            .total_cmp(&area(&polygons[b]))
            .then(b.cmp(&a))
    })
}

fn default_anchor(polygons: &[GeoPolygon]) -> GeoPoint {
    let Some(i) = largest_polygon_index(polygons) else {
        return GeoPoint::new(0.0, 0.0).expect("origin is valid");
    };
    let rings: Vec<Vec<Point2>> = polygons[i]
        .iter()
        .map(|r| r.iter().map(lonlat).collect())
        .collect();
    let c = planar::ring_centroid(&rings[0]);
    let p = planar::interior_point(&rings, c);
    GeoPoint::new(p.x, p.y.clamp(-90.0, 90.0)).unwrap_or(polygons[i][0][0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub origin: String,
    pub dest: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegionTotals {
    pub total_in: f64,
    pub total_out: f64,
}

/// Directed weighted flows between regions. Immutable once built; every
/// transformation returns a new dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    regions: Vec<Region>,
    index: HashMap<String, usize>,
    flows: Vec<Flow>,
    allow_self_flows: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub allow_self_flows: bool,
}

/// A set of regions merged into one synthetic region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGroup {
    pub label: String,
    pub members: BTreeSet<String>,
}

impl RegionGroup {
    pub fn new<I, S>(label: impl Into<String>, members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            label: label.into(),
            members: members.into_iter().map(Into::into).collect(),
        }
    }
}

impl FlowDataset {
    /// Validates and assembles a dataset.
    pub fn new(
        regions: Vec<Region>,
        flows: Vec<Flow>,
        opts: LoadOptions,
    ) -> Result<Self, DataError> {
        let mut index = HashMap::with_capacity(regions.len());
        for (i, r) in regions.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(DataError::DuplicateRegion(r.id.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for f in &flows {
            for id in [&f.origin, &f.dest] {
                if !index.contains_key(id) {
                    return Err(DataError::UnknownRegion(id.clone()));
                }
            }
            if !f.magnitude.is_finite() {
                return Err(DataError::InvalidRange {
                    lo: f.magnitude,
                    hi: f.magnitude,
                });
            }
            if f.magnitude < 0.0 {
                return Err(DataError::NegativeMagnitude {
                    origin: f.origin.clone(),
                    dest: f.dest.clone(),
                    magnitude: f.magnitude,
                });
            }
            if f.origin == f.dest && !opts.allow_self_flows {
                return Err(DataError::SelfFlow(f.origin.clone()));
            }
            if !seen.insert((f.origin.as_str(), f.dest.as_str())) {
                return Err(DataError::DuplicateFlow {
                    origin: f.origin.clone(),
                    dest: f.dest.clone(),
                });
            }
        }
        Ok(Self {
            regions,
            index,
            flows,
            allow_self_flows: opts.allow_self_flows,
        })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn allows_self_flows(&self) -> bool {
        self.allow_self_flows
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.index.get(id).map(|&i| &self.regions[i])
    }

    pub fn region_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Flows whose origin equals their destination (diagonal entries).
    pub fn self_flows(&self) -> impl Iterator<Item = &Flow> {
        self.flows.iter().filter(|f| f.origin == f.dest)
    }

    pub fn flow(&self, origin: &str, dest: &str) -> Option<&Flow> {
        self.flows
            .iter()
            .find(|f| f.origin == origin && f.dest == dest)
    }

    /// A region is active when at least one flow starts or ends there.
    pub fn is_active(&self, id: &str) -> bool {
        self.flows.iter().any(|f| f.origin == id || f.dest == id)
    }

    /// Active regions in dataset order.
    pub fn active_regions(&self) -> Vec<&Region> {
        let active: BTreeSet<&str> = self
            .flows
            .iter()
            .flat_map(|f| [f.origin.as_str(), f.dest.as_str()])
            .collect();
        self.regions
            .iter()
            .filter(|r| active.contains(r.id.as_str()))
            .collect()
    }

    /// Smallest and largest magnitude, `None` without flows.
    pub fn magnitude_range(&self) -> Option<(f64, f64)> {
        let mut it = self.flows.iter().map(|f| f.magnitude);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), m| (lo.min(m), hi.max(m))))
    }

    /// Total in/out flow per region, keyed (and therefore ordered) by id.
    /// Sums run over flows in dataset order.
    pub fn totals(&self) -> BTreeMap<String, RegionTotals> {
        let mut acc = vec![RegionTotals::default(); self.regions.len()];
        for f in &self.flows {
            acc[self.index[&f.origin]].total_out += f.magnitude;
            acc[self.index[&f.dest]].total_in += f.magnitude;
        }
        self.regions
            .iter()
            .zip(acc)
            .map(|(r, t)| (r.id.clone(), t))
            .collect()
    }

    /// Keeps flows with `lo <= magnitude <= hi`. Regions are retained; those
    /// left without flows become inactive.
    pub fn filter_by_magnitude(&self, lo: f64, hi: f64) -> Result<FlowDataset, DataError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(DataError::InvalidRange { lo, hi });
        }
        let flows = self
            .flows
            .iter()
            .filter(|f| f.magnitude >= lo && f.magnitude <= hi)
            .cloned()
            .collect();
        Ok(Self {
            regions: self.regions.clone(),
            index: self.index.clone(),
            flows,
            allow_self_flows: self.allow_self_flows,
        })
    }

    /// Merges each group into one synthetic region. Flows are summed in
    /// dataset order; flows inside a group become that group's self flow.
    pub fn aggregate_regions(&self, groups: &[RegionGroup]) -> Result<FlowDataset, DataError> {
        let mut owner: HashMap<&str, usize> = HashMap::new();
        for (gi, g) in groups.iter().enumerate() {
            for m in &g.members {
                if !self.index.contains_key(m) {
                    return Err(DataError::UnknownRegion(m.clone()));
                }
                if owner.insert(m.as_str(), gi).is_some() {
                    return Err(DataError::OverlappingGroups(m.clone()));
                }
            }
        }
        let new_id = |id: &str| -> String {
            match owner.get(id) {
                Some(&gi) => groups[gi].label.clone(),
                None => id.to_string(),
            }
        };

        let mut regions = Vec::new();
        let mut emitted = BTreeSet::new();
        for r in &self.regions {
            match owner.get(r.id.as_str()) {
                None => regions.push(r.clone()),
                Some(&gi) if emitted.insert(gi) => {
                    let g = &groups[gi];
                    let members: Vec<&Region> = self
                        .regions
                        .iter()
                        .filter(|m| g.members.contains(&m.id))
                        .collect();
                    let anchors: Vec<GeoPoint> = members.iter().map(|m| m.anchor).collect();
                    let anchor = GeoPoint::centroid(&anchors).unwrap_or(anchors[0]);
                    regions.push(Region {
                        id: g.label.clone(),
                        name: g.label.clone(),
                        abbr: g.label.chars().take(4).collect(),
                        polygons: members
                            .iter()
                            .flat_map(|m| m.polygons.iter().cloned())
                            .collect(),
                        anchor,
                    });
                }
                Some(_) => {}
            }
        }
        // Groups with no members still appear, at the end.
        for (gi, g) in groups.iter().enumerate() {
            if !emitted.contains(&gi) && g.members.is_empty() {
                regions.push(Region {
                    id: g.label.clone(),
                    name: g.label.clone(),
                    abbr: g.label.chars().take(4).collect(),
                    polygons: Vec::new(),
                    anchor: GeoPoint::new(0.0, 0.0).expect("origin is valid"),
                });
            }
        }

        let mut order: Vec<(String, String)> = Vec::new();
        let mut sums: HashMap<(String, String), f64> = HashMap::new();
        let mut has_self = false;
        for f in &self.flows {
            let key = (new_id(&f.origin), new_id(&f.dest));
            has_self |= key.0 == key.1;
            match sums.get_mut(&key) {
                Some(m) => *m += f.magnitude,
                None => {
                    sums.insert(key.clone(), f.magnitude);
                    order.push(key);
                }
            }
        }
        let flows = order
            .into_iter()
            .map(|key| {
                let magnitude = sums[&key];
                Flow {
                    origin: key.0,
                    dest: key.1,
                    magnitude,
                }
            })
            .collect();
        FlowDataset::new(
            regions,
            flows,
            LoadOptions {
                allow_self_flows: self.allow_self_flows || has_self,
            },
        )
    }
}

const FLOWS_SOURCE: &str = "flows.csv";
const REGIONS_SOURCE: &str = "regions.geojson";

/// Reads a flow table (`origin,dest,magnitude`) and a regions FeatureCollection.
pub fn load_dataset(
    flows_csv: impl Read,
    regions_geojson: impl Read,
    opts: LoadOptions,
) -> Result<FlowDataset, DataError> {
    let regions = parse_regions(regions_geojson)?;
    let flows = parse_flows(flows_csv)?;
    let known: BTreeSet<&str> = regions.iter().map(|r| r.id.as_str()).collect();
    let mut seen = BTreeSet::new();
    for (line, f) in &flows {
        for id in [&f.origin, &f.dest] {
            if !known.contains(id.as_str()) {
                return Err(DataError::UnknownRegion(id.clone()));
            }
        }
        if !seen.insert((f.origin.as_str(), f.dest.as_str())) {
            return Err(DataError::DuplicateFlow {
                origin: f.origin.clone(),
                dest: f.dest.clone(),
            });
        }
        if f.origin == f.dest && !opts.allow_self_flows {
            return Err(DataError::parse(
                FLOWS_SOURCE,
                format!("line {line}"),
                format!("self flow {0} -> {0} not enabled", f.origin),
            ));
        }
    }
    FlowDataset::new(regions, flows.into_iter().map(|(_, f)| f).collect(), opts)
}

pub fn parse_flows(input: impl Read) -> Result<Vec<(u64, Flow)>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| DataError::parse(FLOWS_SOURCE, "line 1", e.to_string()))?
        .clone();
    let names: Vec<&str> = headers
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}'))
        .collect();
    if names != ["origin", "dest", "magnitude"] {
        return Err(DataError::parse(
            FLOWS_SOURCE,
            "line 1",
            format!(
                "expected header origin,dest,magnitude, got {}",
                names.join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            DataError::parse(FLOWS_SOURCE, format!("line {line}"), e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(DataError::parse(
                FLOWS_SOURCE,
                format!("line {line}"),
                "expected 3 fields",
            ));
        }
        let magnitude: f64 = rec[2]
            .parse()
            .ok()
            .filter(|m: &f64| m.is_finite())
            .ok_or_else(|| {
                DataError::parse(
                    FLOWS_SOURCE,
                    format!("line {line}"),
                    format!("bad magnitude {:?}", &rec[2]),
                )
            })?;
        if rec[0].is_empty() || rec[1].is_empty() {
            return Err(DataError::parse(
                FLOWS_SOURCE,
                format!("line {line}"),
                "empty region id",
            ));
        }
        let flow = Flow {
            origin: rec[0].to_string(),
            dest: rec[1].to_string(),
            magnitude,
        };
        if magnitude < 0.0 {
            return Err(DataError::NegativeMagnitude {
                origin: flow.origin,
                dest: flow.dest,
                magnitude,
            });
        }
        out.push((line, flow));
    }
    Ok(out)
}

pub fn parse_regions(mut input: impl Read) -> Result<Vec<Region>, DataError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| DataError::parse(REGIONS_SOURCE, "document", e.to_string()))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| {
        DataError::parse(REGIONS_SOURCE, format!("line {}", e.line()), e.to_string())
    })?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(DataError::parse(
            REGIONS_SOURCE,
            "document",
            "expected a FeatureCollection",
        ));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| DataError::parse(REGIONS_SOURCE, "document", "missing features array"))?;
    let mut regions = Vec::with_capacity(features.len());
    let mut ids = BTreeSet::new();
    for (i, feat) in features.iter().enumerate() {
        let loc = format!("feature {i}");
        let props = feat.get("properties").and_then(Value::as_object);
        let id = match props.and_then(|p| p.get("id")) {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => {
                return Err(DataError::parse(
                    REGIONS_SOURCE,
                    loc,
                    "missing properties.id",
                ))
            }
        };
        if !ids.insert(id.clone()) {
            return Err(DataError::DuplicateRegion(id));
        }
        let text_prop = |key: &str| {
            props
                .and_then(|p| p.get(key))
                .and_then(Value::as_str)
                .map(str::to_string)
        };
        let name = text_prop("name").unwrap_or_else(|| id.clone());
        let abbr = text_prop("abbr").unwrap_or_else(|| id.chars().take(4).collect());
        let geometry = feat
            .get("geometry")
            .ok_or_else(|| DataError::parse(REGIONS_SOURCE, loc.clone(), "missing geometry"))?;
        let polygons =
            parse_geometry(geometry).map_err(|m| DataError::parse(REGIONS_SOURCE, loc, m))?;
        regions.push(Region::new(id, name, abbr, polygons));
    }
    Ok(regions)
}

fn parse_geometry(g: &Value) -> Result<Vec<GeoPolygon>, String> {
    let coords = g.get("coordinates").ok_or("missing coordinates")?;
    match g.get("type").and_then(Value::as_str) {
        Some("Polygon") => Ok(vec![parse_polygon(coords)?]),
        Some("MultiPolygon") => coords
            .as_array()
            .ok_or("coordinates must be an array")?
            .iter()
            .map(parse_polygon)
            .collect(),
        other => Err(format!("unsupported geometry type {other:?}")),
    }
}

fn parse_polygon(v: &Value) -> Result<GeoPolygon, String> {
    let rings = v.as_array().ok_or("polygon must be an array of rings")?;
    if rings.is_empty() {
        return Err("polygon without rings".into());
    }
    rings
        .iter()
        .map(|ring| {
            let pts = ring.as_array().ok_or("ring must be an array")?;
            let ring: Vec<GeoPoint> = pts
                .iter()
                .map(|p| {
                    let lon = p
                        .get(0)
                        .and_then(Value::as_f64)
                        .ok_or("position needs numeric lon")?;
                    let lat = p
                        .get(1)
                        .and_then(Value::as_f64)
                        .ok_or("position needs numeric lat")?;
                    GeoPoint::new(lon, lat).map_err(|e| e.to_string())
                })
                .collect::<Result<_, String>>()?;
            if ring.len() < 4 {
                return Err("ring needs at least 4 positions".to_string());
            }
            if ring.first() != ring.last() {
                return Err("ring is not closed".to_string());
            }
            Ok(ring)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const REGIONS: &str = r#"{"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"id":"A","name":"Alpha","abbr":"AL"},
       "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
      {"type":"Feature","properties":{"id":"B"},
       "geometry":{"type":"Polygon","coordinates":[[[2,0],[3,0],[3,1],[2,1],[2,0]]]}},
      {"type":"Feature","properties":{"id":"CCCCC"},
       "geometry":{"type":"MultiPolygon","coordinates":[[[[4,0],[4.1,0],[4.1,0.1],[4,0.1],[4,0]]],
                                                      [[[5,0],[7,0],[7,2],[5,2],[5,0]]]]}}]}"#;

    fn load(csv: &str) -> Result<FlowDataset, DataError> {
        load_dataset(csv.as_bytes(), REGIONS.as_bytes(), LoadOptions::default())
    }

    #[test]
    fn loads_regions_and_defaults() {
        let d = load("origin,dest,magnitude\nA,B,5\r\nB,CCCCC,2.5\n").unwrap();
        assert_eq!(d.regions().len(), 3);
        assert_eq!(d.flows().len(), 2);
        let b = d.region("B").unwrap();
        assert_eq!((b.name.as_str(), b.abbr.as_str()), ("B", "B"));
        let c = d.region("CCCCC").unwrap();
        assert_eq!(c.abbr, "CCCC");
        // anchor from the larger polygon
        assert!((c.anchor.lon() - 6.0).abs() < 1e-9 && (c.anchor.lat() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_flow_table() {
        let d = load("origin,dest,magnitude\n").unwrap();
        assert!(d.flows().is_empty());
        assert!(d
            .totals()
            .values()
            .all(|t| t.total_in == 0.0 && t.total_out == 0.0));
        assert!(d.active_regions().is_empty());
    }

    #[test]
    fn load_errors() {
        assert_eq!(
            load("origin,dest,magnitude\nA,ZZZ,10\n"),
            Err(DataError::UnknownRegion("ZZZ".into()))
        );
        assert!(matches!(
            load("origin,dest,magnitude\nA,B,1\nA,B,2\n"),
            Err(DataError::DuplicateFlow { .. })
        ));
        assert!(matches!(
            load("origin,dest,magnitude\nA,B,-1\n"),
            Err(DataError::NegativeMagnitude { .. })
        ));
        match load("origin,dest,magnitude\nA,B,1\nA,B,x\n") {
            Err(DataError::Parse { location, .. }) => assert_eq!(location, "line 3"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load("from,to,value\n"),
            Err(DataError::Parse { .. })
        ));
        assert!(matches!(
            load("origin,dest,magnitude\nA,A,1\n"),
            Err(DataError::Parse { .. })
        ));
        let bad = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{},"geometry":null}]}"#;
        match load_dataset(
            "origin,dest,magnitude\n".as_bytes(),
            bad.as_bytes(),
            LoadOptions::default(),
        ) {
            Err(DataError::Parse { location, .. }) => assert_eq!(location, "feature 0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn self_flows_opt_in() {
        let d = load_dataset(
            "origin,dest,magnitude\nA,A,3\n".as_bytes(),
            REGIONS.as_bytes(),
            LoadOptions {
                allow_self_flows: true,
            },
        )
        .unwrap();
        assert_eq!(d.self_flows().count(), 1);
        assert_eq!(
            d.totals()["A"],
            RegionTotals {
                total_in: 3.0,
                total_out: 3.0
            }
        );
    }

    #[test]
    fn totals_single_flow() {
        let d = load("origin,dest,magnitude\nA,B,5\n").unwrap();
        let t = d.totals();
        assert_eq!(
            t["A"],
            RegionTotals {
                total_in: 0.0,
                total_out: 5.0
            }
        );
        assert_eq!(
            t["B"],
            RegionTotals {
                total_in: 5.0,
                total_out: 0.0
            }
        );
        assert_eq!(t["CCCCC"], RegionTotals::default());
        assert_eq!(
            t.keys().cloned().collect::<Vec<_>>(),
            vec!["A", "B", "CCCCC"]
        );
    }

    #[test]
    fn filter_examples() {
        let d = load("origin,dest,magnitude\nA,B,5\nB,A,7\nB,CCCCC,7\nA,CCCCC,1\n").unwrap();
        let (lo, hi) = d.magnitude_range().unwrap();
        assert_eq!(d.filter_by_magnitude(lo, hi).unwrap(), d);
        let top = d.filter_by_magnitude(hi, hi).unwrap();
        assert_eq!(top.flows().len(), 2);
        assert!(top.flows().iter().all(|f| f.magnitude == 7.0));
        assert_eq!(top.regions().len(), 3);
        let only = d.filter_by_magnitude(5.0, 5.0).unwrap();
        assert!(!only.is_active("CCCCC"));
        assert!(matches!(
            d.filter_by_magnitude(10.0, 5.0),
            Err(DataError::InvalidRange { .. })
        ));
    }

    #[test]
    fn aggregate_examples() {
        let d = load("origin,dest,magnitude\nA,CCCCC,2\nB,CCCCC,3\nA,B,4\nCCCCC,A,1\n").unwrap();
        let g = d
            .aggregate_regions(&[
                RegionGroup::new("AB", ["A", "B"]),
                RegionGroup::new("C", ["CCCCC"]),
            ])
            .unwrap();
        assert_eq!(
            g.regions()
                .iter()
                .map(|r| r.id.as_str())
                .collect::<Vec<_>>(),
            vec!["AB", "C"]
        );
        assert_eq!(g.flow("AB", "C").unwrap().magnitude, 5.0);
        assert_eq!(g.flow("C", "AB").unwrap().magnitude, 1.0);
        assert_eq!(g.flow("AB", "AB").unwrap().magnitude, 4.0);
        assert_eq!(g.self_flows().count(), 1);
        assert_eq!(g.region("AB").unwrap().polygons.len(), 2);
        let err = d.aggregate_regions(&[
            RegionGroup::new("X", ["A"]),
            RegionGroup::new("Y", ["A", "B"]),
        ]);
        assert_eq!(err, Err(DataError::OverlappingGroups("A".into())));
        assert_eq!(
            d.aggregate_regions(&[RegionGroup::new("X", ["Q"])]),
            Err(DataError::UnknownRegion("Q".into()))
        );
    }

    #[test]
    fn singleton_groups_are_isomorphic() {
        let d = load("origin,dest,magnitude\nA,CCCCC,2\nB,CCCCC,3\nA,B,4\n").unwrap();
        let groups: Vec<RegionGroup> = d
            .regions()
            .iter()
            .map(|r| RegionGroup::new(r.id.clone(), [r.id.clone()]))
            .collect();
        let g = d.aggregate_regions(&groups).unwrap();
        assert_eq!(g.flows(), d.flows());
        assert_eq!(g.regions().len(), d.regions().len());
        assert_eq!(g.totals(), d.totals());
    }
}
