//! OD Maps: a grid map of origins where every cell holds a nested copy of
//! the grid coloured by the flows to each destination, beside the DO map
//! (destinations outside, origins inside).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    legend_swatches, Canvas, Layout, LayoutError, LayoutKind, LayoutParams, Primitive, Scene,
    TextAnchor, Xy, SCHEMA_VERSION,
};
use crate::colour::{ColourScale, Rgb};
use crate::oddata::FlowDataset;

const GAP: f64 = 24.0;
const LEGEND_ROOM: f64 = 56.0;
const TITLE_ROOM: f64 = 22.0;
const CELL_BG: Rgb = Rgb(0xf0, 0xf0, 0xf0);
const CELL_STROKE: Rgb = Rgb(0xbd, 0xbd, 0xbd);
const HOME_STROKE: Rgb = Rgb(0x25, 0x25, 0x25);

/// Placement of every region on a W×H grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridAssignment {
    pub grid_size: [usize; 2],
    /// Region id to `[column, row]`, row 0 at the top.
    pub cells: BTreeMap<String, [usize; 2]>,
}

impl GridAssignment {
    /// Parses `{"gridSize": [W, H], "<regionId>": [col, row], ...}`.
    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        let bad = |m: String| LayoutError::BadGridAssignment(m);
        let v: Value = serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| bad("expected a JSON object".into()))?;
        let pair = |key: &str, v: &Value| -> Result<[usize; 2], LayoutError> {
            let a = v.as_array().filter(|a| a.len() == 2);
            let n = |x: &Value| x.as_u64().map(|u| u as usize);
            match a.map(|a| (n(&a[0]), n(&a[1]))) {
                Some((Some(x), Some(y))) => Ok([x, y]),
                _ => Err(bad(format!(
                    "{key:?} must be a pair of non-negative integers"
                ))),
            }
        };
        let grid_size = pair(
            "gridSize",
            obj.get("gridSize")
                .ok_or_else(|| bad("missing gridSize".into()))?,
        )?;
        let mut cells = BTreeMap::new();
        for (k, v) in obj {
            if k != "gridSize" {
                cells.insert(k.clone(), pair(k, v)?);
            }
        }
        Ok(Self { grid_size, cells })
    }

    /// Checks the grid is non-empty, injective, in range and covers exactly
    /// the dataset's regions.
    pub fn validate(&self, d: &FlowDataset) -> Result<(), LayoutError> {
        let bad = |m: String| Err(LayoutError::BadGridAssignment(m));
        let [w, h] = self.grid_size;
        if w == 0 || h == 0 {
            return bad(format!("grid size {w}x{h} is empty"));
        }
        let mut seen: BTreeMap<[usize; 2], &str> = BTreeMap::new();
        for (id, &[c, r]) in &self.cells {
            if d.region(id).is_none() {
                return bad(format!("unknown region {id:?}"));
            }
            if c >= w || r >= h {
                return bad(format!(
                    "{id:?} at [{c}, {r}] lies outside the {w}x{h} grid"
                ));
            }
            if let Some(other) = seen.insert([c, r], id) {
                return bad(format!("{other:?} and {id:?} share cell [{c}, {r}]"));
            }
        }
        if let Some(r) = d.regions().iter().find(|r| !self.cells.contains_key(&r.id)) {
            return bad(format!("region {:?} has no cell", r.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OdMapsDetails {
    pub grid: GridAssignment,
    /// Top-left corners of the OD and DO maps.
    pub od_origin: Xy,
    pub do_origin: Xy,
    pub cell_size: f64,
    pub mini_cell_size: f64,
}

impl OdMapsDetails {
    fn outer(&self, map: Xy, id: &str) -> Xy {
        let [c, r] = self.grid.cells[id];
        [
            map[0] + c as f64 * self.cell_size,
            map[1] + r as f64 * self.cell_size,
        ]
    }

    /// Top-left corner of the mini cell for `inner` nested in `outer`.
    pub fn mini_cell(&self, map: Xy, outer: &str, inner: &str) -> Xy {
        let o = self.outer(map, outer);
        let [w, h] = self.grid.grid_size;
        let inset_x = (self.cell_size - w as f64 * self.mini_cell_size) / 2.0;
        let inset_y = (self.cell_size - h as f64 * self.mini_cell_size) / 2.0;
        let [c, r] = self.grid.cells[inner];
        [
            o[0] + inset_x + c as f64 * self.mini_cell_size,
            o[1] + inset_y + r as f64 * self.mini_cell_size,
        ]
    }
}

fn square(at: Xy, s: f64) -> Vec<Xy> {
    vec![
        at,
        [at[0] + s, at[1]],
        [at[0] + s, at[1] + s],
        [at[0], at[1] + s],
    ]
}

pub fn layout_od_maps(
    d: &FlowDataset,
    grid: &GridAssignment,
    canvas: Canvas,
    params: &LayoutParams,
) -> Result<Layout, LayoutError> {
    grid.validate(d)?;
    let [w, h] = grid.grid_size;
    let pad = params.padding;
    let avail_w = (canvas.width - 2.0 * pad - GAP) / 2.0;
    let avail_h = canvas.height - 2.0 * pad - LEGEND_ROOM - TITLE_ROOM;
    if avail_w <= 0.0 || avail_h <= 0.0 {
        return Err(LayoutError::InfeasibleGeometry(format!(
            "canvas {}x{} too small",
            canvas.width, canvas.height
        )));
    }
    let cell = (avail_w / w as f64).min(avail_h / h as f64);
    let mini = cell / w.max(h) as f64;
    let map_w = cell * w as f64;
    let left = (canvas.width - 2.0 * map_w - GAP) / 2.0;
    let top = pad + TITLE_ROOM + (avail_h - cell * h as f64) / 2.0;
    let details = OdMapsDetails {
        grid: grid.clone(),
        od_origin: [left, top],
        do_origin: [left + map_w + GAP, top],
        cell_size: cell,
        mini_cell_size: mini,
    };
    let (lo, hi) = d.magnitude_range().unwrap_or((0.0, 0.0));
    let scale = ColourScale::yl_or_rd(lo, hi);
    let totals = d.totals();

    let mut scenes = Vec::new();
    for (prefix, scene_id, map, title) in [
        ("od", "odMap", details.od_origin, "Origins (OD map)"),
        ("do", "doMap", details.do_origin, "Destinations (DO map)"),
    ] {
        let outgoing = prefix == "od";
        let mut s = Scene::new(scene_id);
        s.primitives.push(Primitive::Label {
            id: format!("{prefix}title"),
            at: [map[0], top - 8.0],
            text: title.into(),
            size: 14.0,
            fill: Rgb::grey(0x25),
            anchor: TextAnchor::Start,
        });
        for r in d.regions() {
            s.primitives.push(Primitive::Path {
                id: format!("{prefix}frame:{}", r.id),
                rings: vec![square(details.outer(map, &r.id), cell)],
                fill: Some(CELL_BG),
                stroke: Some(CELL_STROKE),
                stroke_width: 0.75,
                region: Some(r.id.clone()),
            });
        }
        let mut flows: Vec<_> = d.flows().iter().collect();
        flows.sort_by(|a, b| {
            let key = |f: &crate::oddata::Flow| {
                if outgoing {
                    (f.origin.clone(), f.dest.clone())
                } else {
                    (f.dest.clone(), f.origin.clone())
                }
            };
            key(a).cmp(&key(b))
        });
        for f in flows {
            let (outer, inner) = if outgoing {
                (&f.origin, &f.dest)
            } else {
                (&f.dest, &f.origin)
            };
            s.primitives.push(Primitive::Cell {
                id: format!("{prefix}cell:{outer}:{inner}"),
                corners: square(details.mini_cell(map, outer, inner), mini),
                fill: scale.sample(f.magnitude),
                value: f.magnitude,
                colour_index: scale.position(f.magnitude),
                origin: f.origin.clone(),
                dest: f.dest.clone(),
            });
        }
        let total = |id: &str| {
            totals
                .get(id)
                .map_or(0.0, |t| if outgoing { t.total_out } else { t.total_in })
        };
        let max_total = d.regions().iter().map(|r| total(&r.id)).fold(0.0, f64::max);
        for r in d.regions() {
            let t = total(&r.id);
            let o = details.outer(map, &r.id);
            if t > 0.0 && max_total > 0.0 {
                let home = details.mini_cell(map, &r.id, &r.id);
                s.primitives.push(Primitive::Circle {
                    id: format!("{prefix}home:{}", r.id),
                    center: [home[0] + mini / 2.0, home[1] + mini / 2.0],
                    r: 0.3 * cell * (t / max_total).sqrt(),
                    fill: None,
                    stroke: Some(HOME_STROKE),
                    stroke_width: 1.0,
                    region: Some(r.id.clone()),
                });
            }
            s.primitives.push(Primitive::Label {
                id: format!("{prefix}label:{}", r.id),
                at: [o[0] + 2.0, o[1] + 2.0 + (cell * 0.18).min(12.0)],
                text: r.abbr.clone(),
                size: (cell * 0.18).min(12.0),
                fill: Rgb::grey(0x25),
                anchor: TextAnchor::Start,
            });
        }
        scenes.push(s);
    }

    let mut legend = Scene::new("legend");
    let legend_w = (canvas.width - 2.0 * pad).min(360.0);
    let at = [
        (canvas.width - legend_w) / 2.0,
        canvas.height - pad - LEGEND_ROOM + 16.0,
    ];
    legend_swatches(&mut legend, &scale, at, legend_w, 14.0, 11.0);
    legend.primitives.push(Primitive::Label {
        id: "legend:title".into(),
        at: [at[0], at[1] - 4.0],
        text: "Flow magnitude".into(),
        size: 11.0,
        fill: Rgb::grey(0x25),
        anchor: TextAnchor::Start,
    });
    scenes.push(legend);

    Ok(Layout {
        schema_version: SCHEMA_VERSION,
        kind: LayoutKind::Odmaps,
        width: canvas.width,
        height: canvas.height,
        scenes,
        colour_scale: scale,
        maptrix: None,
        od_maps: Some(details),
        flow_map: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid_document() {
        let g = GridAssignment::from_json(r#"{"gridSize":[2,1],"A":[0,0],"B":[1,0]}"#).unwrap();
        assert_eq!(g.grid_size, [2, 1]);
        assert_eq!(g.cells["B"], [1, 0]);
        assert!(matches!(
            GridAssignment::from_json(r#"{"A":[0,0]}"#),
            Err(LayoutError::BadGridAssignment(_))
        ));
        assert!(matches!(
            GridAssignment::from_json(r#"{"gridSize":[2,1],"A":[0]}"#),
            Err(LayoutError::BadGridAssignment(_))
        ));
    }
}
