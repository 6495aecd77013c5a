//! Python module `odflow`: layouts, SVG rendering and 3D flow export over
//! in-memory CSV/GeoJSON text. Results are returned as strings.

use std::collections::BTreeMap;

use odflow::canonical::to_canonical_string;
use odflow::flow3d::{export_curves, to_obj, ExportOptions, HeightEncoding, Representation};
use odflow::layouts::{
    highlight, layout, transform, Canvas, GridAssignment, Layout, LayoutKind, LayoutParams,
    RelayoutRequest, Selection,
};
use odflow::oddata::{load_dataset, FlowDataset, LoadOptions, RegionGroup};
use odflow::rendersvg::{render, RenderOptions};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(
    odflow,
    OdflowError,
    PyValueError,
    "Engine error; `args[0]` is the error kind."
);

fn fail(kind: &str, message: impl std::fmt::Display) -> PyErr {
    OdflowError::new_err((kind.to_string(), message.to_string()))
}

fn dataset(flows: &str, regions: &str, allow_self_flows: bool) -> PyResult<FlowDataset> {
    load_dataset(
        flows.as_bytes(),
        regions.as_bytes(),
        LoadOptions { allow_self_flows },
    )
    .map_err(|e| fail(e.kind(), &e))
}

/// Inputs shared by `layout` and `render_svg`.
struct LayoutInputs<'a> {
    flows: &'a str,
    regions: &'a str,
    kind: &'a str,
    grid: Option<&'a str>,
    width: f64,
    height: f64,
    allow_self_flows: bool,
    filter: Option<(f64, f64)>,
    groups: Option<BTreeMap<String, Vec<String>>>,
    params: Option<&'a str>,
}

fn build_layout(i: LayoutInputs) -> PyResult<Layout> {
    let kind: LayoutKind = i.kind.parse().map_err(|e| fail("InvalidArgument", e))?;
    let params: LayoutParams = match i.params {
        Some(text) => serde_json::from_str(text).map_err(|e| fail("InvalidArgument", e))?,
        None => LayoutParams::default(),
    };
    let mut d = dataset(i.flows, i.regions, i.allow_self_flows)?;
    let req = RelayoutRequest {
        filter: i.filter.map(|(lo, hi)| [lo, hi]),
        groups: i.groups.map(|g| {
            g.into_iter()
                .map(|(label, members)| RegionGroup::new(label, members))
                .collect()
        }),
    };
    if req != RelayoutRequest::default() {
        d = transform(&d, &req).map_err(|e| fail(e.kind(), &e))?;
    }
    let grid = i
        .grid
        .map(GridAssignment::from_json)
        .transpose()
        .map_err(|e| fail(e.kind(), &e))?;
    let canvas = Canvas::new(i.width, i.height);
    layout(kind, &d, grid.as_ref(), canvas, &params).map_err(|e| fail(e.kind(), &e))
}

/// Layout document as canonical JSON.
#[pyfunction]
#[pyo3(signature = (flows, regions, kind = "maptrix", *, grid = None, width = 1200.0, height = 800.0,
                    allow_self_flows = false, filter = None, groups = None, params = None))]
#[allow(clippy::too_many_arguments)]
fn layout_json(
    flows: &str,
    regions: &str,
    kind: &str,
    grid: Option<&str>,
    width: f64,
    height: f64,
    allow_self_flows: bool,
    filter: Option<(f64, f64)>,
    groups: Option<BTreeMap<String, Vec<String>>>,
    params: Option<&str>,
) -> PyResult<String> {
    let doc = build_layout(LayoutInputs {
        flows,
        regions,
        kind,
        grid,
        width,
        height,
        allow_self_flows,
        filter,
        groups,
        params,
    })?;
    Ok(doc.to_canonical_json())
}

/// SVG document; highlights apply to MapTrix layouts.
#[pyfunction]
#[pyo3(signature = (flows, regions, kind = "maptrix", *, grid = None, width = 1200.0, height = 800.0,
                    allow_self_flows = false, filter = None, groups = None, params = None,
                    highlight_regions = None, highlight_cells = None))]
#[allow(clippy::too_many_arguments)]
fn render_svg(
    flows: &str,
    regions: &str,
    kind: &str,
    grid: Option<&str>,
    width: f64,
    height: f64,
    allow_self_flows: bool,
    filter: Option<(f64, f64)>,
    groups: Option<BTreeMap<String, Vec<String>>>,
    params: Option<&str>,
    highlight_regions: Option<Vec<String>>,
    highlight_cells: Option<Vec<(String, String)>>,
) -> PyResult<String> {
    let doc = build_layout(LayoutInputs {
        flows,
        regions,
        kind,
        grid,
        width,
        height,
        allow_self_flows,
        filter,
        groups,
        params,
    })?;
    let selection = Selection {
        regions: highlight_regions.unwrap_or_default(),
        cells: highlight_cells
            .unwrap_or_default()
            .into_iter()
            .map(|(o, d)| [o, d])
            .collect(),
    };
    let overlay = if selection == Selection::default() {
        None
    } else {
        Some(highlight(&doc, &selection).map_err(|e| fail(e.kind(), &e))?)
    };
    Ok(render(&doc, overlay.as_ref(), &RenderOptions::default()))
}

/// Sampled 3D flow curves as canonical JSON, or as OBJ tube meshes.
#[pyfunction]
#[pyo3(signature = (flows, regions, representation = "map", encoding = "constant", *, samples = None,
                    format = "json", allow_self_flows = false))]
fn export_flows3d(
    flows: &str,
    regions: &str,
    representation: &str,
    encoding: &str,
    samples: Option<usize>,
    format: &str,
    allow_self_flows: bool,
) -> PyResult<String> {
    let repr: Representation = representation
        .parse()
        .map_err(|e| fail("InvalidArgument", e))?;
    let encoding: HeightEncoding = encoding.parse().map_err(|e| fail("InvalidArgument", e))?;
    let d = dataset(flows, regions, allow_self_flows)?;
    let mut opts = ExportOptions::default();
    if let Some(n) = samples {
        opts.samples = n;
    }
    let batch = export_curves(&d, repr, encoding, &opts).map_err(|e| fail(e.kind(), &e))?;
    match format {
        "json" => to_canonical_string(&batch).map_err(|e| fail("SerializeError", e)),
        "obj" => Ok(to_obj(&batch)),
        other => Err(fail(
            "InvalidArgument",
            format!("format {other:?} is not json or obj"),
        )),
    }
}

#[pymodule]
#[pyo3(name = "odflow")]
fn odflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", odflow::VERSION)?;
    m.add("OdflowError", m.py().get_type::<OdflowError>())?;
    m.add_function(wrap_pyfunction!(layout_json, m)?)?;
    m.add_function(wrap_pyfunction!(render_svg, m)?)?;
    m.add_function(wrap_pyfunction!(export_flows3d, m)?)?;
    Ok(())
}
