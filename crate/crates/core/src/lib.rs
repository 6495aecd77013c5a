//! Geographic origin-destination flow layouts: MapTrix, OD Maps and flow
//! maps, crossing-free leader placement with quadratic-program refinement,
//! SVG output and 3D flow geometry.

pub mod canonical;
pub mod colour;
pub mod flow3d;
pub mod geo;
pub mod layouts;
pub mod leaderlayout;
pub mod oddata;
pub mod planar;
pub mod qprefine;
pub mod rendersvg;

/// Engine version reported by the CLI and the service.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
