#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};

use odflow::layouts::GridAssignment;
use odflow::oddata::{load_dataset, FlowDataset, LoadOptions};

pub const FIXTURES: [&str; 5] = ["au", "nz", "de", "cn", "us"];

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn load(name: &str) -> FlowDataset {
    let dir = fixture_dir(name);
    let flows = File::open(dir.join("flows.csv")).unwrap();
    let regions = File::open(dir.join("regions.geojson")).unwrap();
    load_dataset(flows, regions, LoadOptions::default()).unwrap()
}

pub fn grid(name: &str) -> GridAssignment {
    GridAssignment::from_json(
        &std::fs::read_to_string(fixture_dir(name).join("grid.json")).unwrap(),
    )
    .unwrap()
}
