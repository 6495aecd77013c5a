use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use odflow::flow3d::obj_ring_centres;
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str, file: &str) -> PathBuf {
    root().join("fixtures").join(name).join(file)
}

fn odflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn data_args(name: &str) -> Vec<String> {
    vec![
        "--flows".into(),
        fixture(name, "flows.csv").display().to_string(),
        "--regions".into(),
        fixture(name, "regions.geojson").display().to_string(),
    ]
}

fn run(dir: &Path, head: &[&str], name: &str, tail: &[&str]) -> Output {
    let data = data_args(name);
    let args: Vec<&str> = head
        .iter()
        .copied()
        .chain(data.iter().map(String::as_str))
        .chain(tail.iter().copied())
        .collect();
    odflow(dir, &args)
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(o.stderr.trim_ascii())
        .unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn au_maptrix_matches_the_golden_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["render", "--kind", "maptrix"],
        "au",
        &["-o", "au.svg"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let golden = std::fs::read(root().join("crates/core/tests/golden/au_maptrix.svg")).unwrap();
    assert_eq!(std::fs::read(tmp.path().join("au.svg")).unwrap(), golden);
}

#[test]
fn inverted_filter_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["--json-errors", "render", "--kind", "maptrix"],
        "au",
        &["--filter", "10:5", "-o", "x.svg"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "InvalidRange");
    assert!(!tmp.path().join("x.svg").exists());
}

#[test]
fn od_maps_without_a_grid_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["render", "--kind", "odmaps"],
        "au",
        &["-o", "x.svg"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[BadGridAssignment]"));
    let grid = fixture("au", "grid.json").display().to_string();
    let o = run(
        tmp.path(),
        &["render", "--kind", "odmaps"],
        "au",
        &["--grid", &grid, "-o", "x.svg"],
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn flag_errors_exit_2_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["--json-errors", "render", "--kind", "pie"],
        "au",
        &["-o", "x.svg"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "InvalidArgument");
    let o = odflow(
        tmp.path(),
        &[
            "render",
            "--kind",
            "maptrix",
            "--flows",
            "missing.csv",
            "--regions",
            "r",
            "-o",
            "x.svg",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[InputError]"));
}

#[test]
fn unwritable_output_is_an_internal_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["render", "--kind", "flowmap"],
        "au",
        &["-o", "no/such/dir/x.svg"],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn filter_and_groups_render_the_transformed_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["render", "--kind", "maptrix"],
        "au",
        &[
            "--groups",
            "East=NSW,VIC,ACT;West=WA,SA",
            "--filter",
            "0:100000",
            "-o",
            "g.json",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let doc: Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("g.json")).unwrap()).unwrap();
    let ordering: Vec<&str> = doc["maptrix"]["ordering"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(ordering.len(), 5);
    assert!(ordering.contains(&"East") && ordering.contains(&"West"));
}

#[test]
fn highlighted_svg_carries_an_overlay() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["render", "--kind", "maptrix"],
        "au",
        &[
            "--highlight-regions",
            "NSW",
            "--highlight-cells",
            "QLD:VIC",
            "-o",
            "h.svg",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let svg = std::fs::read_to_string(tmp.path().join("h.svg")).unwrap();
    assert!(svg.contains(r#"<g id="highlight""#));
    assert!(svg.contains(r#"id="hl:cell:QLD:VIC""#));
}

#[test]
fn config_file_sets_the_canvas() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("odflow.toml"),
        "[canvas]\nwidth = 640\nheight = 480\n",
    )
    .unwrap();
    let o = run(
        tmp.path(),
        &["render", "--kind", "flowmap"],
        "au",
        &["-o", "f.svg"],
    );
    assert_eq!(o.status.code(), Some(0));
    let svg = std::fs::read_to_string(tmp.path().join("f.svg")).unwrap();
    assert!(svg.contains(r#"width="640" height="480""#));
    std::fs::write(tmp.path().join("odflow.toml"), "[canvas]\nwide = 1\n").unwrap();
    let o = run(
        tmp.path(),
        &["render", "--kind", "flowmap"],
        "au",
        &["-o", "f.svg"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constant_encoding_puts_every_apex_at_fifteen_centimetres() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["export3d", "--repr", "map", "--encoding", "constant"],
        "au",
        &["-o", "c.json"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let doc: Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("c.json")).unwrap()).unwrap();
    let curves = doc["curves"].as_array().unwrap();
    assert!(!curves.is_empty());
    for c in curves {
        let s = c["samples"].as_array().unwrap();
        assert_eq!(s.len() % 2, 1);
        let apex = s[s.len() / 2][2].as_f64().unwrap();
        assert!((apex - 0.15).abs() < 1e-6, "{apex}");
    }
}

#[test]
fn json_and_obj_exports_share_sample_points() {
    let tmp = tempfile::tempdir().unwrap();
    for (repr, enc) in [
        ("map", "quantity"),
        ("globe", "distance"),
        ("mapslink", "constant"),
    ] {
        for ext in ["json", "obj"] {
            let out = format!("{repr}.{ext}");
            let o = run(
                tmp.path(),
                &["export3d", "--repr", repr, "--encoding", enc],
                "nz",
                &["-o", &out],
            );
            assert_eq!(
                o.status.code(),
                Some(0),
                "{}",
                String::from_utf8_lossy(&o.stderr)
            );
        }
        let doc: Value = serde_json::from_slice(
            &std::fs::read(tmp.path().join(format!("{repr}.json"))).unwrap(),
        )
        .unwrap();
        let obj = std::fs::read_to_string(tmp.path().join(format!("{repr}.obj"))).unwrap();
        let centres: Vec<_> = obj_ring_centres(&obj)
            .into_iter()
            .flat_map(|(_, rings)| rings)
            .collect();
        let samples: Vec<[f64; 3]> = doc["curves"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|c| c["samples"].as_array().unwrap().clone())
            .map(|p| {
                let a = p.as_array().unwrap();
                [
                    a[0].as_f64().unwrap(),
                    a[1].as_f64().unwrap(),
                    a[2].as_f64().unwrap(),
                ]
            })
            .collect();
        assert_eq!(centres.len(), samples.len(), "{repr}");
        for (c, s) in centres.iter().zip(&samples) {
            for k in 0..3 {
                assert!((c[k] - s[k]).abs() < 5e-6, "{repr}: {c:?} vs {s:?}");
            }
        }
    }
}

#[test]
fn export_without_flows_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.csv"), "origin,dest,magnitude\n").unwrap();
    let regions = fixture("au", "regions.geojson").display().to_string();
    let o = odflow(
        tmp.path(),
        &[
            "--json-errors",
            "export3d",
            "--repr",
            "map",
            "--flows",
            "empty.csv",
            "--regions",
            &regions,
            "-o",
            "e.obj",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "NoFlows");
    let o = run(
        tmp.path(),
        &["export3d", "--repr", "map"],
        "au",
        &["-o", "e.txt"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_reports_a_median() {
    let tmp = tempfile::tempdir().unwrap();
    let regions = fixture("au", "regions.geojson").display().to_string();
    let o = odflow(
        tmp.path(),
        &["bench-qp", "--regions", &regions, "--trials", "5", "--json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["n"], 8);
    assert!(r["minMs"].as_f64().unwrap() <= r["medianMs"].as_f64().unwrap());
    let o = odflow(tmp.path(), &["bench-qp", "--regions", &regions, "--n", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn demo_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let fixtures = root().join("fixtures").display().to_string();
    for out in ["a", "b"] {
        let o = odflow(
            tmp.path(),
            &["demo", "--fixtures-dir", &fixtures, "-o", out],
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let mut names: Vec<_> = std::fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 5 * 12);
    for n in names {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(&n)).unwrap(),
            std::fs::read(tmp.path().join("b").join(&n)).unwrap()
        );
    }
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(10))).ok()?;
    write!(
        s,
        "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n"
    )
    .ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[test]
fn serve_takes_its_port_from_the_environment() {
    let port = free_port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_odflow"))
        .args([
            "serve",
            "--fixtures-dir",
            &root().join("fixtures").display().to_string(),
        ])
        .env("PORT", port.to_string())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut reply = None;
    while Instant::now() < deadline {
        if let Some(r) = http_get(port, "/datasets/au") {
            reply = Some(r);
            break;
        }
        std::thread::sleep(Duration::from_millis(100));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    let reply = reply.expect("service answered");
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains(r#""datasetId":"au""#));
}
