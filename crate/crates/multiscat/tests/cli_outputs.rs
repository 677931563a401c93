//! End-to-end CLI checks: scene solve with file outputs, output-file format
//! contracts, metadata round trip, sweep table, and the two-formulation
//! comparison.

use std::f64::consts::PI;
use std::path::PathBuf;

fn small_scene_json(mode: &str, p: usize, grid: [usize; 2]) -> String {
    format!(
        r#"{{
  "scene": {{ "kappa": 6.0, "mode": "{mode}" }},
  "scatterers": [
    {{ "center": [0.0, 0.0], "shape": {{ "a": 0.3, "b": 0.7, "k": 2, "theta0": {t0} }}, "bc": "dirichlet" }},
    {{ "center": [2.6, 0.0], "shape": {{ "a": 0.3, "b": 0.7, "k": 2, "theta0": {t0} }}, "bc": "dirichlet" }}
  ],
  "disks": [
    {{ "center": [0.0, 0.0], "radius": 1.05 }},
    {{ "center": [2.6, 0.0], "radius": 1.05 }}
  ],
  "solver": {{ "p": {p}, "tol": 1e-9 }},
  "outputs": {{ "window": [-2.0, 4.6, -2.0, 2.0], "grid": [{gx}, {gy}],
               "probes": [[4.0, 0.0], [0.0, 0.0]] }}
}}"#,
        t0 = PI / 4.0,
        gx = grid[0],
        gy = grid[1]
    )
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("multiscat-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_writes_all_outputs_and_metadata_round_trips() {
    let dir = tmpdir("run");
    let scene_path = dir.join("scene.json");
    std::fs::write(&scene_path, small_scene_json("homogeneous", 10, [40, 30])).unwrap();
    let out = dir.join("out");
    let code = multiscat::cli::dispatch(vec![
        "multiscat".into(),
        "run".into(),
        scene_path.display().to_string(),
        out.display().to_string(),
    ]);
    assert_eq!(code, 0);

    // grid files: header + nx * ny rows with 5 columns
    for name in ["field_total.dat", "field_scattered.dat"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# x y re im masked");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 40 * 30, "{name}");
        assert!(rows.iter().all(|r| r.split_whitespace().count() == 5));
        // some rows are masked (the scatterers sit inside the window)
        assert!(rows.iter().any(|r| r.ends_with(" 1")));
        assert!(rows.iter().any(|r| r.ends_with(" 0")));
    }

    // residual history: strictly ordered iteration index
    let res = std::fs::read_to_string(out.join("residuals.dat")).unwrap();
    let mut lines = res.lines();
    assert_eq!(lines.next().unwrap(), "# iter residual");
    let iters: Vec<usize> = lines
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert!(!iters.is_empty());
    assert!(iters.windows(2).all(|w| w[1] == w[0] + 1));
    assert_eq!(iters[0], 1);

    // probes file with one row per probe
    let probes = std::fs::read_to_string(out.join("probes.dat")).unwrap();
    assert_eq!(probes.lines().count(), 1 + 2);

    // metadata round trip: the embedded scene block reparses to the same
    // normalized document
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["converged"], serde_json::Value::Bool(true));
    let scene_block = serde_json::to_string(&meta["scene"]).unwrap();
    let reparsed = multiscat::scenes::parse_scene(&scene_block).unwrap();
    let original =
        multiscat::scenes::parse_scene(&std::fs::read_to_string(&scene_path).unwrap()).unwrap();
    assert_eq!(reparsed.doc, original.doc);

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_reports_monotone_errors() {
    let dir = tmpdir("sweep");
    let scene_path = dir.join("scene.json");
    std::fs::write(&scene_path, small_scene_json("homogeneous", 10, [10, 10])).unwrap();
    let out = dir.join("out");
    let code = multiscat::cli::dispatch(vec![
        "multiscat".into(),
        "sweep".into(),
        scene_path.display().to_string(),
        "--p".into(),
        "6,9,12".into(),
        out.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let table = std::fs::read_to_string(out.join("sweep.dat")).unwrap();
    let rows: Vec<(usize, f64)> = table
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split_whitespace();
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1), "{rows:?}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn compare_passes_on_constant_index_scene() {
    let dir = tmpdir("compare");
    let scene_path = dir.join("scene.json");
    std::fs::write(&scene_path, small_scene_json("homogeneous", 14, [10, 10])).unwrap();
    let code = multiscat::cli::dispatch(vec![
        "multiscat".into(),
        "compare".into(),
        scene_path.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn invalid_scene_exits_3() {
    let dir = tmpdir("invalid");
    let scene_path = dir.join("scene.json");
    // disk too small for its scatterer
    std::fs::write(
        &scene_path,
        r#"{
  "scene": { "kappa": 5.0, "mode": "homogeneous" },
  "scatterers": [ { "center": [0.0, 0.0], "shape": { "a": 0.3, "b": 0.7, "k": 2 } } ],
  "disks": [ { "center": [0.0, 0.0], "radius": 0.8 } ]
}"#,
    )
    .unwrap();
    let code = multiscat::cli::dispatch(vec![
        "multiscat".into(),
        "run".into(),
        scene_path.display().to_string(),
        dir.join("out").display().to_string(),
    ]);
    assert_eq!(code, 3);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn shipped_scene_documents_parse() {
    let scenes_dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/scenes"));
    let mut seen = 0;
    for entry in std::fs::read_dir(scenes_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let text = std::fs::read_to_string(&path).unwrap();
            multiscat::scenes::parse_scene(&text)
                .unwrap_or_else(|e| panic!("{} failed to parse: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 6, "expected the shipped scene documents, found {seen}");
}
