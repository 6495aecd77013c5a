"""Smoke test for the `odflow` Python module.

Build and install first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/odflow-*.whl

then run `python python/smoke_test.py` from the repository root.
"""

import json
import sys
from pathlib import Path

import odflow

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = ROOT / "crates" / "core" / "tests" / "golden"


def fixture(name):
    d = FIXTURES / name
    grid = d / "grid.json"
    return (
        (d / "flows.csv").read_text(),
        (d / "regions.geojson").read_text(),
        grid.read_text() if grid.exists() else None,
    )


def main():
    flows, regions, grid = fixture("au")

    doc = json.loads(odflow.layout_json(flows, regions))
    assert doc["kind"] == "maptrix", doc["kind"]
    assert len(doc["maptrix"]["ordering"]) == 8

    for kind in ("maptrix", "odmaps", "flowmap"):
        svg = odflow.render_svg(flows, regions, kind, grid=grid)
        assert svg == (GOLDEN / f"au_{kind}.svg").read_text(), kind

    grouped = json.loads(
        odflow.layout_json(flows, regions, groups={"EAST": ["NSW", "VIC", "ACT"]}, filter=(10, 1e12))
    )
    assert "EAST" in grouped["maptrix"]["ordering"]

    svg = odflow.render_svg(flows, regions, highlight_regions=["NSW"])
    assert 'id="hl:leader:origin:NSW"' in svg

    curves = json.loads(odflow.export_flows3d(flows, regions, "globe", "distance", samples=33))
    assert all(len(c["samples"]) == 33 for c in curves["curves"])
    obj = odflow.export_flows3d(flows, regions, "map", format="obj")
    assert obj.count("\no flow:") == len(curves["curves"])

    try:
        odflow.layout_json(flows, regions, filter=(5, 1))
    except odflow.OdflowError as e:
        assert e.args[0] == "InvalidRange", e.args
    else:
        raise AssertionError("inverted filter accepted")

    try:
        odflow.layout_json("origin,dest,magnitude\nNSW,XX,1\n", regions)
    except odflow.OdflowError as e:
        assert e.args[0] == "UnknownRegion", e.args
    else:
        raise AssertionError("unknown region accepted")

    print(f"odflow {odflow.__version__}: python smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
