use std::collections::BTreeMap;
use std::fs;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use odflow::layouts::{GridAssignment, RelayoutRequest, Selection};
use odflow::oddata::{load_dataset, FlowDataset, LoadOptions, RegionGroup};
use serde::Serialize;
use tokio::sync::Mutex;

use crate::error::ApiError;

/// Interaction state of one dataset. Lost on restart.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub dataset_id: String,
    pub filter: Option<[f64; 2]>,
    pub groups: Option<Vec<RegionGroup>>,
    pub selections: Vec<Selection>,
    /// Bumped by every mutation.
    pub version: u64,
}

impl SessionState {
    pub fn request(&self) -> RelayoutRequest {
        RelayoutRequest {
            filter: self.filter,
            groups: self.groups.clone(),
        }
    }
}

#[derive(Debug)]
pub struct DatasetEntry {
    pub id: String,
    pub dataset: Arc<FlowDataset>,
    pub grid: Option<GridAssignment>,
    /// Held for the whole of a mutation so they apply one at a time.
    pub session: Mutex<SessionState>,
}

#[derive(Debug, Default)]
pub struct Store {
    datasets: RwLock<BTreeMap<String, Arc<DatasetEntry>>>,
    uploads: AtomicU64,
}

/// Raw upload payloads.
#[derive(Debug, Default)]
pub struct Upload {
    pub flows: Vec<u8>,
    pub regions: Vec<u8>,
    pub grid: Option<Vec<u8>>,
    pub allow_self_flows: bool,
}

fn parse(upload: &Upload) -> Result<(FlowDataset, Option<GridAssignment>), ApiError> {
    let opts = LoadOptions {
        allow_self_flows: upload.allow_self_flows,
    };
    let dataset = load_dataset(upload.flows.as_slice(), upload.regions.as_slice(), opts)
        .map_err(ApiError::upload)?;
    let grid = match &upload.grid {
        Some(bytes) => {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| ApiError::bad_request("grid is not UTF-8"))?;
            let grid = GridAssignment::from_json(text).map_err(ApiError::layout)?;
            grid.validate(&dataset).map_err(ApiError::layout)?;
            Some(grid)
        }
        None => None,
    };
    Ok((dataset, grid))
}

impl Store {
    /// Loads every subdirectory of `dir` holding `flows.csv` and
    /// `regions.geojson` (plus an optional `grid.json`) under its own name.
    pub fn with_fixtures(dir: &Path) -> Result<Store, String> {
        let store = Store::default();
        let mut dirs: Vec<_> = fs::read_dir(dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("flows.csv").is_file() && p.join("regions.geojson").is_file())
            .collect();
        dirs.sort();
        for p in dirs {
            let read = |name: &str| {
                fs::read(p.join(name)).map_err(|e| format!("{}: {e}", p.join(name).display()))
            };
            let grid = if p.join("grid.json").is_file() {
                Some(read("grid.json")?)
            } else {
                None
            };
            let upload = Upload {
                flows: read("flows.csv")?,
                regions: read("regions.geojson")?,
                grid,
                allow_self_flows: false,
            };
            let (dataset, grid) =
                parse(&upload).map_err(|e| format!("{}: {}", p.display(), e.message))?;
            let id = p
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            store.insert(id, dataset, grid);
        }
        Ok(store)
    }

    fn insert(
        &self,
        id: String,
        dataset: FlowDataset,
        grid: Option<GridAssignment>,
    ) -> Arc<DatasetEntry> {
        let session = SessionState {
            dataset_id: id.clone(),
            ..SessionState::default()
        };
        let entry = Arc::new(DatasetEntry {
            id: id.clone(),
            dataset: Arc::new(dataset),
            grid,
            session: Mutex::new(session),
        });
        self.datasets
            .write()
            .expect("store lock")
            .insert(id, entry.clone());
        entry
    }

    /// Stores an upload under `<content hash>-<counter>`, so repeated uploads
    /// get independent ids.
    pub fn upload(&self, upload: Upload) -> Result<Arc<DatasetEntry>, ApiError> {
        let (dataset, grid) = parse(&upload)?;
        let mut h = DefaultHasher::new();
        (
            &upload.flows,
            &upload.regions,
            &upload.grid,
            upload.allow_self_flows,
        )
            .hash(&mut h);
        let n = self.uploads.fetch_add(1, Ordering::Relaxed) + 1;
        Ok(self.insert(format!("{:016x}-{n}", h.finish()), dataset, grid))
    }

    pub fn get(&self, id: &str) -> Result<Arc<DatasetEntry>, ApiError> {
        self.datasets
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    pub fn list(&self) -> Vec<Arc<DatasetEntry>> {
        self.datasets
            .read()
            .expect("store lock")
            .values()
            .cloned()
            .collect()
    }
}
