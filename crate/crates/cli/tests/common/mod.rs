#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use handcloud::fusion::{render_mesh, tetrahedral_rig};
use handcloud::io::{write_json, write_pgm, write_raw_depth, RigFile};
use handcloud::templates::{SyntheticHand, SyntheticHandSpec};
use handcloud::Point3;
use serde_json::Value;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Runs the binary in `dir`, with `HANDCLOUD_THREADS` unset unless given.
pub fn run_in(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_handcloud"));
    cmd.current_dir(dir).args(args).env_remove("HANDCLOUD_THREADS");
    if let Some(t) = threads {
        cmd.env("HANDCLOUD_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    run_in(dir, args, None)
}

pub fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Copies every fixture into `dir` so commands can use relative paths.
pub fn stage_fixtures(dir: &Path) {
    for entry in std::fs::read_dir(fixture("")).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dir.join(entry.file_name())).unwrap();
    }
}

/// Renders the default synthetic hand from a four-camera rig at 160×120:
/// views 0–2 as PGM, view 3 as raw depth with its JSON sidecar, plus
/// `rig.json` describing all four cameras.
pub fn render_views(dir: &Path) -> Vec<String> {
    let hand = SyntheticHand::new(SyntheticHandSpec::default()).unwrap();
    let mesh = hand.mesh();
    let n = mesh.vertices().len() as f64;
    let center = Point3::from(mesh.vertices().iter().fold(handcloud::Vector3::zeros(), |acc, p| acc + p.coords) / n);
    let cameras = tetrahedral_rig(center, 500.0, 150.0, 160, 120).unwrap();
    let mut views = Vec::new();
    for (i, cam) in cameras.iter().enumerate() {
        let map = render_mesh(&mesh, cam, Some(2000.0)).unwrap();
        let name = if i < 3 { format!("v{i}.pgm") } else { format!("v{i}.raw") };
        if i < 3 {
            write_pgm(&dir.join(&name), &map).unwrap();
        } else {
            write_raw_depth(&dir.join(&name), &map).unwrap();
        }
        views.push(name);
    }
    write_json(&dir.join("rig.json"), &RigFile::from_cameras(&cameras)).unwrap();
    views
}

pub fn schema(command: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{command}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Checks `doc` against the subset of JSON Schema the published schemas use:
/// type, const, enum, minimum, properties, required, additionalProperties,
/// propertyNames and items.
pub fn validate(schema: &Value, doc: &Value, at: &str) -> Result<(), String> {
    let obj = schema.as_object().ok_or_else(|| format!("{at}: schema is not an object"))?;
    if let Some(t) = obj.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => doc.is_object(),
            "array" => doc.is_array(),
            "string" => doc.is_string(),
            "boolean" => doc.is_boolean(),
            "number" => doc.is_number(),
            "integer" => doc.is_u64() || doc.is_i64(),
            other => return Err(format!("{at}: unsupported type {other}")),
        };
        if !ok {
            return Err(format!("{at}: expected {t}, got {doc}"));
        }
    }
    if let Some(c) = obj.get("const") {
        if c != doc {
            return Err(format!("{at}: expected {c}, got {doc}"));
        }
    }
    if let Some(options) = obj.get("enum").and_then(Value::as_array) {
        if !options.contains(doc) {
            return Err(format!("{at}: {doc} not in {options:?}"));
        }
    }
    if let Some(min) = obj.get("minimum").and_then(Value::as_f64) {
        if doc.as_f64().is_some_and(|v| v < min) {
            return Err(format!("{at}: {doc} below {min}"));
        }
    }
    if let Some(items) = obj.get("items") {
        for (i, item) in doc.as_array().into_iter().flatten().enumerate() {
            validate(items, item, &format!("{at}[{i}]"))?;
        }
    }
    if let Some(fields) = doc.as_object() {
        let props = obj.get("properties").and_then(Value::as_object);
        for key in obj.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !fields.contains_key(key) {
                return Err(format!("{at}: missing required '{key}'"));
            }
        }
        for (key, value) in fields {
            let path = format!("{at}.{key}");
            if let Some(names) = obj.get("propertyNames") {
                validate(names, &Value::String(key.clone()), &path)?;
            }
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(sub, value, &path)?,
                None => match obj.get("additionalProperties") {
                    Some(Value::Bool(false)) => return Err(format!("{path}: unexpected property")),
                    Some(sub @ Value::Object(_)) => validate(sub, value, &path)?,
                    _ => {}
                },
            }
        }
    }
    Ok(())
}

const LOCAL_BUDGET: &str = "palm=60,thumb=20,index=20,middle=20,ring=20,pinky=20";

pub struct Case {
    pub name: &'static str,
    pub steps: &'static [&'static [&'static str]],
    pub files: &'static [&'static str],
}

pub const CASES: &[Case] = &[
    Case {
        name: "eval_cd_identity",
        steps: &[&["eval", "--metric", "cd", "--gt", "two_point_gt.ply", "--pred", "two_point_gt.ply"]],
        files: &[],
    },
    Case {
        name: "eval_emd_two_point",
        steps: &[&[
            "eval", "--metric", "emd", "--gt", "two_point_gt.ply", "--pred", "two_point_pred.ply", "--csv", "emd.csv",
        ]],
        files: &["emd.csv"],
    },
    Case {
        name: "template_grid",
        steps: &[&["template", "--kind", "grid", "--n", "100", "--seed", "3", "-o", "grid.ply"]],
        files: &["grid.ply"],
    },
    Case {
        name: "template_hand_binary",
        steps: &[&["template", "--kind", "hand", "--n", "200", "--seed", "3", "-o", "hand.ply", "--binary"]],
        files: &["hand.ply"],
    },
    Case {
        name: "eval_combined_local",
        steps: &[
            &["template", "--kind", "local", "--n", "90", "--seed", "1", "-o", "a.ply"],
            &["template", "--kind", "local", "--n", "90", "--seed", "2", "-o", "b.ply"],
            &["eval", "--metric", "combined", "--gt", "a.ply", "--pred", "b.ply", "--labels", "--csv", "loss.csv"],
        ],
        files: &["a.ply", "b.ply", "loss.csv"],
    },
    Case {
        name: "sample_mesh",
        steps: &[
            &[
                "sample-mesh", "--spec", "hand_spec.json", "--budget", LOCAL_BUDGET, "--exposed", "--seed", "5", "-o",
                "s.ply", "--export-mesh", "mesh.ply", "--binary",
            ],
            &["sample-mesh", "--mesh", "mesh.ply", "--n", "150", "--seed", "6", "-o", "m.ply"],
        ],
        files: &["s.ply", "mesh.ply", "m.ply"],
    },
    Case {
        name: "segment",
        steps: &[
            &["sample-mesh", "--budget", LOCAL_BUDGET, "--seed", "7", "-o", "ref.ply"],
            &["sample-mesh", "--n", "200", "--exposed", "--seed", "8", "-o", "q.ply"],
            &["segment", "--query", "q.ply", "--ref", "ref.ply", "--k", "3", "-o", "seg.ply"],
        ],
        files: &["seg.ply"],
    },
    Case {
        name: "fuse",
        steps: &[&[
            "fuse", "--views", "v0.pgm,v1.pgm,v2.pgm,v3.raw", "--cameras", "rig.json", "--config", "fusion.json",
            "--seed", "4", "-o", "fused.ply",
        ]],
        files: &["fused.ply"],
    },
    Case {
        name: "train_demo",
        steps: &[&[
            "train-demo", "--template", "local", "--scenes", "4", "--epochs", "3", "--seed", "2", "--hidden", "8",
            "--budget", "palm=10,thumb=4,index=4,middle=4,ring=4,pinky=4", "--out", "log.csv",
        ]],
        files: &["log.csv", "log.bin"],
    },
    Case {
        name: "pose_metrics",
        steps: &[&[
            "pose-metrics", "--pred", "poses_pred.json", "--gt", "poses_gt.json", "--pck-steps", "11", "--csv", "pck.csv",
        ]],
        files: &["pck.csv"],
    },
];

/// Runs a case in `dir`; returns (artifact name, bytes).
pub fn execute(case: &Case, dir: &Path, threads: Option<&str>) -> Vec<(String, Vec<u8>)> {
    stage_fixtures(dir);
    render_views(dir);
    let mut artifacts = Vec::new();
    for (i, step) in case.steps.iter().enumerate() {
        let mut args: Vec<&str> = step.to_vec();
        args.push("--json");
        let out = run_in(dir, &args, threads);
        assert!(
            out.status.success(),
            "{} step {i}: exit {:?}: {}",
            case.name,
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        validate(&schema(step[0]), &doc, step[0]).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        artifacts.push((format!("step{i}.json"), out.stdout));
    }
    for file in case.files {
        artifacts.push((file.to_string(), std::fs::read(dir.join(file)).unwrap()));
    }
    artifacts
}

pub fn golden_dir(case: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(case)
}

/// Runs every case twice (the second time on one thread) and compares all
/// artifacts with each other and with the goldens; returns the mismatches.
/// With `bless`, rewrites the goldens instead.
pub fn check_goldens(bless: bool) -> Vec<String> {
    let mut failures = Vec::new();
    for case in CASES {
        let first = execute(case, tempfile::tempdir().unwrap().path(), None);
        let second = execute(case, tempfile::tempdir().unwrap().path(), Some("1"));
        for ((name, a), (_, b)) in first.iter().zip(&second) {
            if a != b {
                failures.push(format!("{}/{name}: differs between runs", case.name));
            }
        }
        let dir = golden_dir(case.name);
        if bless {
            std::fs::create_dir_all(&dir).unwrap();
        }
        for (name, bytes) in &first {
            let path = dir.join(name);
            if bless {
                std::fs::write(&path, bytes).unwrap();
            } else {
                match std::fs::read(&path) {
                    Ok(golden) if &golden == bytes => {}
                    Ok(_) => failures.push(format!("{}/{name}: differs from golden", case.name)),
                    Err(_) => failures.push(format!("{}/{name}: golden missing", case.name)),
                }
            }
        }
    }
    failures
}
