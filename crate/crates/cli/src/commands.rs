use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use handcloud::folding::{loss_mode_for, write_weights, BenchmarkConfig};
use handcloud::fusion::{fuse, DepthMap, FusionConfig};
use handcloud::io::{read_cloud, read_json, read_mesh, read_pgm, read_raw_depth, read_rig, write_mesh, write_ply, PlyFormat};
use handcloud::metrics::{
    auc, chamfer_distance, earth_movers_distance, earth_movers_distance_approx, joint_errors, linear_thresholds,
    loss_breakdown, pck_curve, HandPose, LossMode, EXACT_EMD_LIMIT, NUM_JOINTS,
};
use handcloud::segmentation::{knn_transfer, LabeledReference};
use handcloud::templates::{
    build_template, sample_mesh_components, sample_mesh_surface, ComponentBudget, SyntheticHand, SyntheticHandSpec,
    TemplateKind,
};
use handcloud::{ComponentId, PointCloud};
use serde_json::{json, Map, Value};

use crate::args::{EvalArgs, FuseArgs, Metric, PoseMetricsArgs, SampleMeshArgs, SegmentArgs, TemplateArgs, TrainDemoArgs};
use crate::error::{CliError, CliResult};
use crate::output::{path_value, write_text, Report};

fn ply_format(binary: bool) -> PlyFormat {
    if binary {
        PlyFormat::BinaryLittleEndian
    } else {
        PlyFormat::Ascii
    }
}

fn component_counts(cloud: &PointCloud) -> Value {
    let counts = cloud.component_counts();
    let map: Map<String, Value> = ComponentId::ALL
        .into_iter()
        .filter(|c| counts[c.index()] > 0)
        .map(|c| (c.name().to_string(), counts[c.index()].into()))
        .collect();
    Value::Object(map)
}

fn budget_value(budget: &ComponentBudget) -> Value {
    Value::Object(budget.iter().map(|(c, n)| (c.name().to_string(), n.into())).collect())
}

/// Sub-clouds of every component present in either cloud; a component present
/// on one side only is an error.
fn component_pairs(gt: &PointCloud, pred: &PointCloud) -> CliResult<Vec<(ComponentId, PointCloud, PointCloud)>> {
    if gt.labels().is_none() || pred.labels().is_none() {
        return Err(handcloud::Error::MissingLabels.into());
    }
    let mut pairs = Vec::new();
    for c in ComponentId::ALL {
        let (g, p) = (gt.component_indices(c), pred.component_indices(c));
        match (g.is_empty(), p.is_empty()) {
            (true, true) => continue,
            (false, false) => pairs.push((c, gt.select(&g), pred.select(&p))),
            _ => return Err(handcloud::Error::MissingComponent(c).into()),
        }
    }
    Ok(pairs)
}

struct Emd {
    value: f64,
    exact: bool,
    gap_bound: f64,
}

fn emd(gt: &PointCloud, pred: &PointCloud, allow_approx: bool) -> CliResult<Emd> {
    let n = gt.len().max(pred.len());
    if n <= EXACT_EMD_LIMIT {
        let (value, _) = earth_movers_distance(gt, pred)?;
        return Ok(Emd { value, exact: true, gap_bound: 0.0 });
    }
    if !allow_approx {
        return Err(CliError::usage(format!(
            "exact EMD is limited to {EXACT_EMD_LIMIT} points (got {n}); pass --emd-approx for the auction approximation"
        )));
    }
    let (value, _, gap_bound) = earth_movers_distance_approx(gt, pred)?;
    Ok(Emd { value, exact: false, gap_bound })
}

pub fn eval(args: &EvalArgs) -> CliResult<Report> {
    let gt = read_cloud(&args.gt)?;
    let pred = read_cloud(&args.pred)?;
    let mut report = Report::new("eval");
    report
        .field("gt_points", gt.len())
        .field("pred_points", pred.len());
    let mut rows: Vec<(String, f64)> = Vec::new();

    match args.metric {
        Metric::Cd => {
            let cd = chamfer_distance(&gt, &pred)?;
            report.field("metric", "cd").field("cd", cd).line(format!("cd {cd}"));
            rows.push(("cd".into(), cd));
            if args.labels {
                let mut components = Map::new();
                for (c, g, p) in component_pairs(&gt, &pred)? {
                    let value = chamfer_distance(&g, &p)?;
                    components.insert(c.name().into(), json!({ "cd": value }));
                    report.line(format!("cd[{c}] {value}"));
                    rows.push((format!("cd_{c}"), value));
                }
                report.field("components", components);
            }
        }
        Metric::Emd => {
            let total = emd(&gt, &pred, args.emd_approx)?;
            let per_point = total.value / gt.len() as f64;
            report
                .field("metric", "emd")
                .field("emd", total.value)
                .field("emd_per_point", per_point)
                .field("emd_exact", total.exact)
                .field("emd_gap_bound", total.gap_bound)
                .line(format!("emd {} ({per_point} per point{})", total.value, if total.exact { "" } else { ", approximate" }));
            rows.push(("emd".into(), total.value));
            rows.push(("emd_per_point".into(), per_point));
            if args.labels {
                let mut components = Map::new();
                for (c, g, p) in component_pairs(&gt, &pred)? {
                    let part = emd(&g, &p, args.emd_approx)?;
                    components.insert(c.name().into(), json!({ "emd": part.value, "emd_exact": part.exact }));
                    report.line(format!("emd[{c}] {}", part.value));
                    rows.push((format!("emd_{c}"), part.value));
                }
                report.field("components", components);
            }
        }
        Metric::Combined => {
            if gt.len().max(pred.len()) > EXACT_EMD_LIMIT {
                return Err(CliError::usage(format!(
                    "the combined loss uses exact EMD, limited to {EXACT_EMD_LIMIT} points"
                )));
            }
            let mode = if args.labels { LossMode::LocalGlobal } else { LossMode::GlobalOnly };
            let b = loss_breakdown(&gt, &pred, mode)?;
            report
                .field("metric", "combined")
                .field("loss_mode", if args.labels { "local-global" } else { "global-only" })
                .field("cd", b.global_cd)
                .field("emd", b.global_emd)
                .field("total", b.total)
                .line(format!("cd {}", b.global_cd))
                .line(format!("emd {}", b.global_emd));
            rows.push(("cd".into(), b.global_cd));
            rows.push(("emd".into(), b.global_emd));
            if args.labels {
                let mut components = Map::new();
                let counts = gt.component_counts();
                for c in ComponentId::ALL.into_iter().filter(|c| counts[c.index()] > 0) {
                    let (cd, e) = (b.local_cd(c), b.local_emd(c));
                    components.insert(c.name().into(), json!({ "cd": cd, "emd": e }));
                    report.line(format!("cd[{c}] {cd}  emd[{c}] {e}"));
                    rows.push((format!("cd_{c}"), cd));
                    rows.push((format!("emd_{c}"), e));
                }
                report.field("components", components);
            }
            report.line(format!("total {}", b.total));
            rows.push(("total".into(), b.total));
        }
    }

    if let Some((term, value)) = rows.iter().find(|(_, v)| !v.is_finite()) {
        return Err(CliError::Numerical(format!("{term} = {value}")));
    }
    if let Some(path) = &args.csv {
        let mut text = String::from("term,value\n");
        for (term, value) in &rows {
            let _ = writeln!(text, "{term},{value}");
        }
        write_text(path, &text)?;
        report.field("csv", path_value(path));
    }
    Ok(report)
}

fn is_pgm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

pub fn fuse_views(args: &FuseArgs) -> CliResult<Report> {
    let config = match &args.config {
        Some(path) => read_json::<FusionConfig>(path)?,
        None => FusionConfig::default(),
    };
    let rig = args.cameras.as_deref().map(read_rig).transpose()?;
    if let Some(rig) = &rig {
        if rig.len() != args.views.len() {
            return Err(CliError::usage(format!(
                "the rig has {} cameras for {} views",
                rig.len(),
                args.views.len()
            )));
        }
    }
    let mut maps: Vec<DepthMap> = Vec::with_capacity(args.views.len());
    for (i, view) in args.views.iter().enumerate() {
        let map = if is_pgm(view) {
            let camera = rig
                .as_ref()
                .map(|r| r[i])
                .ok_or_else(|| CliError::usage(format!("{}: PGM views need --cameras", view.display())))?;
            read_pgm(view, camera)?
        } else {
            read_raw_depth(view)?
        };
        maps.push(map);
    }
    let cloud = fuse(&maps, &config, args.seed)?;
    write_ply(&args.output, &cloud, ply_format(args.binary))?;

    let valid: Vec<usize> = maps.iter().map(DepthMap::valid_count).collect();
    let mut report = Report::new("fuse");
    report
        .field("views", maps.len())
        .field("valid_pixels", valid.clone())
        .field("points", cloud.len())
        .field("seed", args.seed)
        .field("output", path_value(&args.output))
        .line(format!("fused {} views ({valid:?} valid pixels) into {} points", maps.len(), cloud.len()))
        .line(format!("wrote {}", args.output.display()));
    Ok(report)
}

pub fn segment(args: &SegmentArgs) -> CliResult<Report> {
    if args.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let query = read_cloud(&args.query)?;
    let reference = LabeledReference::new(read_cloud(&args.reference)?)?;
    let labeled = knn_transfer(&query, &reference, args.k)?;
    write_ply(&args.output, &labeled, ply_format(args.binary))?;

    let mut report = Report::new("segment");
    report
        .field("points", labeled.len())
        .field("k", args.k)
        .field("components", component_counts(&labeled))
        .field("output", path_value(&args.output))
        .line(format!("labeled {} points by {}-NN vote", labeled.len(), args.k))
        .line(format!("wrote {}", args.output.display()));
    Ok(report)
}

/// Split of `n` points for a per-component template: each digit gets
/// ⌊2n/15⌋ and the palm the remainder (200/80 for 600 points).
pub fn default_local_budget(n: usize) -> CliResult<ComponentBudget> {
    let finger = 2 * n / 15;
    if finger == 0 {
        return Err(CliError::usage(format!("a local template needs at least 8 points (got {n})")));
    }
    Ok(ComponentBudget::uniform(n - 5 * finger, finger)?)
}

fn template_budget(kind: TemplateKind, n: Option<usize>, budget: Option<ComponentBudget>) -> CliResult<ComponentBudget> {
    match (budget, n) {
        (Some(_), _) if kind != TemplateKind::LocalHand3D => Err(CliError::usage("--budget only applies to local templates")),
        (Some(b), Some(n)) if b.total() != n => {
            Err(CliError::usage(format!("--n {n} disagrees with the budget total {}", b.total())))
        }
        (Some(b), _) => Ok(b),
        (None, Some(0)) => Err(CliError::usage("--n must be at least 1")),
        (None, Some(n)) if kind == TemplateKind::LocalHand3D => default_local_budget(n),
        (None, Some(n)) => Ok(ComponentBudget::new([(ComponentId::Palm, n)])?),
        (None, None) => Err(CliError::usage("give --n (or --budget for local templates)")),
    }
}

pub fn template(args: &TemplateArgs) -> CliResult<Report> {
    let budget = template_budget(args.kind, args.n, args.budget)?;
    let template = build_template(args.kind, &budget, args.seed)?;
    write_ply(&args.output, template.points(), ply_format(args.binary))?;

    let mut report = Report::new("template");
    report
        .field("kind", args.kind.name())
        .field("points", template.len())
        .field("components", component_counts(template.points()))
        .field("seed", args.seed)
        .field("output", path_value(&args.output))
        .line(format!("{} template with {} points", args.kind, template.len()))
        .line(format!("wrote {}", args.output.display()));
    Ok(report)
}

pub fn sample_mesh(args: &SampleMeshArgs) -> CliResult<Report> {
    let (mesh, hand) = match &args.mesh {
        Some(path) => (read_mesh(path)?, None),
        None => {
            let spec = match &args.spec {
                Some(path) => read_json::<SyntheticHandSpec>(path)?,
                None => SyntheticHandSpec::default(),
            };
            let hand = SyntheticHand::new(spec)?;
            (hand.mesh(), Some(hand))
        }
    };
    let cloud = match (&args.budget, args.n, &hand, args.exposed) {
        (_, Some(0), _, _) => return Err(CliError::usage("--n must be at least 1")),
        (Some(b), _, Some(hand), true) => hand.sample_exposed_components(b, args.seed)?,
        (Some(b), _, _, _) => sample_mesh_components(&mesh, b, args.seed)?,
        (None, Some(n), Some(hand), true) => hand.sample_exposed(n, args.seed)?,
        (None, Some(n), _, _) => sample_mesh_surface(&mesh, n, args.seed)?,
        (None, None, _, _) => return Err(CliError::usage("give --n or --budget")),
    };
    write_ply(&args.output, &cloud, ply_format(args.binary))?;
    if let Some(path) = &args.export_mesh {
        write_mesh(path, &mesh, ply_format(args.binary))?;
    }

    let source = if hand.is_some() { "synthetic-hand" } else { "mesh" };
    let mut report = Report::new("sample-mesh");
    report
        .field("source", source)
        .field("exposed", args.exposed)
        .field("points", cloud.len())
        .field("surface_area", mesh.surface_area())
        .field("seed", args.seed)
        .field("output", path_value(&args.output))
        .line(format!("sampled {} points from the {source} surface", cloud.len()))
        .line(format!("wrote {}", args.output.display()));
    if cloud.labels().is_some() {
        report.field("components", component_counts(&cloud));
    }
    if let Some(path) = &args.export_mesh {
        report.field("mesh", path_value(path)).line(format!("wrote {}", path.display()));
    }
    Ok(report)
}

pub fn train_demo(args: &TrainDemoArgs) -> CliResult<Report> {
    for (flag, value) in [("--scenes", args.scenes), ("--epochs", args.epochs), ("--hidden", args.hidden)] {
        if value == 0 {
            return Err(CliError::usage(format!("{flag} must be at least 1")));
        }
    }
    let mut config = BenchmarkConfig {
        scenes: args.scenes,
        epochs: args.epochs,
        seed: args.seed,
        hidden: args.hidden,
        ..BenchmarkConfig::default()
    };
    if let Some(budget) = args.budget {
        config.budget = budget;
    }
    let scenes = config.scenes()?;
    let progress = args.progress;
    let (decoder, log) = config.run(args.template, &scenes, |record| {
        if progress {
            eprintln!("epoch {:>4}: total {} cd {}", record.epoch, record.loss.total, record.loss.global_cd);
        }
    })?;
    write_text(&args.out, &log.to_csv())?;
    let weights: PathBuf = args.weights.clone().unwrap_or_else(|| args.out.with_extension("bin"));
    write_weights(&weights, &decoder)?;

    let last = log.epochs.last().map(|r| r.loss.total).unwrap_or(f64::NAN);
    let metrics = log.final_metrics;
    let mode = match loss_mode_for(args.template) {
        LossMode::GlobalOnly => "global-only",
        LossMode::LocalGlobal => "local-global",
    };
    let mut report = Report::new("train-demo");
    report
        .field("template", args.template.name())
        .field("loss_mode", mode)
        .field("scenes", args.scenes)
        .field("epochs", args.epochs)
        .field("hidden", args.hidden)
        .field("budget", budget_value(&config.budget))
        .field("parameters", decoder.num_params())
        .field("seed", args.seed)
        .field("final_total", last)
        .field("mean_cd", metrics.mean_cd)
        .field("mean_emd_per_point", metrics.mean_emd_per_point)
        .field("log", path_value(&args.out))
        .field("weights", path_value(&weights))
        .line(format!(
            "{} template, {} scenes, {} epochs: mean CD {}, mean EMD per point {}",
            args.template, args.scenes, args.epochs, metrics.mean_cd, metrics.mean_emd_per_point
        ))
        .line(format!("wrote {} and {}", args.out.display(), weights.display()));
    Ok(report)
}

/// A pose file holds one pose (21 `[x, y, z]` joints) or a list of poses.
fn read_poses(path: &Path) -> CliResult<Vec<HandPose>> {
    let value: Value = read_json(path)?;
    let nested = value
        .as_array()
        .and_then(|a| a.first())
        .and_then(Value::as_array)
        .and_then(|a| a.first())
        .is_some_and(Value::is_array);
    let parsed = if nested {
        serde_json::from_value::<Vec<HandPose>>(value)
    } else {
        serde_json::from_value::<HandPose>(value).map(|p| vec![p])
    };
    let poses = parsed.map_err(|e| handcloud::Error::Parse {
        path: path.to_path_buf(),
        location: "pose data".into(),
        message: e.to_string(),
    })?;
    if poses.is_empty() {
        return Err(handcloud::Error::Parse {
            path: path.to_path_buf(),
            location: "pose data".into(),
            message: "no poses".into(),
        }
        .into());
    }
    Ok(poses)
}

pub fn pose_metrics(args: &PoseMetricsArgs) -> CliResult<Report> {
    if args.pck_steps < 2 || !(args.pck_min.is_finite() && args.pck_max.is_finite() && args.pck_min < args.pck_max) {
        return Err(CliError::usage("PCK thresholds need --pck-min < --pck-max and --pck-steps ≥ 2"));
    }
    let pred = read_poses(&args.pred)?;
    let gt = read_poses(&args.gt)?;
    if pred.len() != gt.len() {
        return Err(handcloud::Error::InvalidArgument(format!(
            "{} predicted poses but {} ground-truth poses",
            pred.len(),
            gt.len()
        ))
        .into());
    }
    let per_pose: Vec<[f64; NUM_JOINTS]> = pred.iter().zip(&gt).map(|(p, g)| joint_errors(p, g)).collect();
    let errors: Vec<f64> = per_pose.iter().flatten().copied().collect();
    let mpjpe = errors.iter().sum::<f64>() / errors.len() as f64;
    let per_joint: Vec<f64> = (0..NUM_JOINTS)
        .map(|j| per_pose.iter().map(|e| e[j]).sum::<f64>() / per_pose.len() as f64)
        .collect();
    if !mpjpe.is_finite() {
        return Err(CliError::Numerical(format!("mpjpe = {mpjpe}")));
    }
    let thresholds = linear_thresholds(args.pck_min, args.pck_max, args.pck_steps);
    let curve = pck_curve(&errors, &thresholds)?;
    let area = auc(&curve)?;

    let mut report = Report::new("pose-metrics");
    report
        .field("poses", pred.len())
        .field("joints", NUM_JOINTS)
        .field("mpjpe", mpjpe)
        .field("per_joint_error", per_joint)
        .field("auc", area)
        .field("pck", json!({ "thresholds": curve.thresholds(), "values": curve.values() }))
        .line(format!("MPJPE {mpjpe} mm over {} poses", pred.len()))
        .line(format!("AUC {area} (PCK {}–{} mm)", args.pck_min, args.pck_max));
    if let Some(path) = &args.csv {
        let mut text = String::from("threshold_mm,pck\n");
        for (t, v) in curve.thresholds().iter().zip(curve.values()) {
            let _ = writeln!(text, "{t},{v}");
        }
        write_text(path, &text)?;
        report.field("csv", path_value(path));
    }
    Ok(report)
}
