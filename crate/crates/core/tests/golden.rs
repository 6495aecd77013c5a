mod common;

use std::path::PathBuf;

use odflow::layouts::{
    layout_flow_map, layout_maptrix, layout_od_maps, Canvas, Layout, LayoutParams,
};
use odflow::rendersvg::{render, RenderOptions};

fn golden_path(name: &str, kind: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}_{kind}.svg"))
}

fn layouts(name: &str) -> Vec<(&'static str, Layout)> {
    let d = common::load(name);
    let p = LayoutParams::default();
    let c = Canvas::default();
    vec![
        ("maptrix", layout_maptrix(&d, c, &p).unwrap()),
        (
            "odmaps",
            layout_od_maps(&d, &common::grid(name), c, &p).unwrap(),
        ),
        ("flowmap", layout_flow_map(&d, c, &p).unwrap()),
    ]
}

/// Renders every fixture and kind; `UPDATE_GOLDEN=1` rewrites the files.
#[test]
fn fixtures_match_golden_svgs() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1");
    let mut mismatches = Vec::new();
    for name in common::FIXTURES {
        for (kind, layout) in layouts(name) {
            let svg = render(&layout, None, &RenderOptions::default());
            let path = golden_path(name, kind);
            if update {
                std::fs::create_dir_all(path.parent().unwrap()).unwrap();
                std::fs::write(&path, &svg).unwrap();
            } else if std::fs::read_to_string(&path).ok().as_deref() != Some(svg.as_str()) {
                mismatches.push(path.display().to_string());
            }
        }
    }
    assert!(mismatches.is_empty(), "differs from golden: {mismatches:?}");
}

#[test]
fn rendering_is_byte_stable() {
    for (_, layout) in layouts("au") {
        let a = render(&layout, None, &RenderOptions::default());
        let b = render(&layout.clone(), None, &RenderOptions::default());
        assert_eq!(a, b);
    }
}
