//! Subcommand implementations. Every command reads one scenario file and
//! writes its artifacts under the configured output directory; nothing else
//! on disk is touched.

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::pipeline;
use serde::Serialize;
use std::fs;
use vrm_core::dynamic::{run, save_trace_frames};
use vrm_core::image::BinaryImage;
use vrm_core::localplan::{gold_base_verdicts, planner_check, prune_and_score, PlannerKind, PruneStats};
use vrm_core::manifold::{isomap, residuals_to_csv};
use vrm_core::metrics::{attach_features, FeatureParams};
use vrm_core::rle::IntervalRle;
use vrm_core::simworld::{
    compose_frame, fk_render, render_obstacles, save_dataset, Canvas, JointVector, PoseRecord,
    RobotModel,
};
use vrm_core::vrm::{PlanOutcome, Vrm};
use vrm_core::Real;

/// Maps a blocked-endpoint failure to the no-path exit; everything else
/// stays an internal error.
fn no_path_on_blocked(e: vrm_core::Error) -> CliError {
    match e {
        vrm_core::Error::EndpointBlocked(m) => CliError::NoPath(m),
        other => other.into(),
    }
}

fn parse_joint_vector(text: &str, model: &RobotModel) -> Result<JointVector> {
    let values: Vec<Real> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<Real>()
                .map_err(|_| CliError::Config(vec![format!("bad configuration component '{t}'")]))
        })
        .collect::<Result<_>>()?;
    if values.len() != model.dof() {
        return Err(CliError::Config(vec![format!(
            "configuration needs {} components, got {}",
            model.dof(),
            values.len()
        )]));
    }
    Ok(JointVector::new(values))
}

fn endpoint_record(
    model: &RobotModel,
    canvas: &Canvas,
    q: &JointVector,
) -> Result<PoseRecord> {
    let mut records = [fk_render(model, q, canvas)
        .map_err(|e| CliError::Config(vec![format!("endpoint configuration: {e}")]))?];
    attach_features(&mut records, &FeatureParams::default());
    let [record] = records;
    Ok(record)
}

pub fn cmd_sample(cfg: &ScenarioConfig) -> Result<()> {
    let (_, canvas, records) = pipeline::sampled_records(cfg)?;
    let dir = cfg.outdir.join("dataset");
    save_dataset(&dir, &records, &canvas)?;
    println!("wrote {} poses ({} views each) to {}", records.len(), cfg.views.len(), dir.display());
    Ok(())
}

pub fn cmd_build(cfg: &ScenarioConfig) -> Result<()> {
    let (_, _, vrm, _) = pipeline::build_roadmap(cfg)?;
    fs::create_dir_all(&cfg.outdir)?;
    let path = cfg.outdir.join("vrm.json");
    fs::write(&path, vrm.to_json()?)?;
    println!(
        "wrote roadmap ({} nodes, {} edges, {} collision-marked) to {}",
        vrm.len(),
        vrm.base_edges().len(),
        vrm.collision_nodes().len(),
        path.display()
    );
    Ok(())
}

/// Shape of `path.json`; field order is the serialized key order.
#[derive(Serialize)]
struct PathArtifact {
    reachable: bool,
    metric: String,
    planner: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    nodes: Vec<usize>,
    weight: Real,
    configs: Vec<Vec<Real>>,
    edge_safety: Vec<bool>,
}

fn write_no_path(cfg: &ScenarioConfig, reason: &str) -> Result<()> {
    fs::create_dir_all(&cfg.outdir)?;
    let artifact = PathArtifact {
        reachable: false,
        metric: cfg.metric.clone(),
        planner: cfg.local_planner.clone(),
        reason: Some(reason.to_string()),
        nodes: Vec::new(),
        weight: 0.0,
        configs: Vec::new(),
        edge_safety: Vec::new(),
    };
    fs::write(cfg.outdir.join("path.json"), serde_json::to_string_pretty(&artifact)?)?;
    Ok(())
}

/// Boundary pixels of a silhouette: set pixels with a missing 4-neighbour.
fn outline(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if !img.get(x, y) {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !img.get(x - 1, y)
                || !img.get(x + 1, y)
                || !img.get(x, y - 1)
                || !img.get(x, y + 1);
            if edge {
                out.set(x, y, true);
            }
        }
    }
    out
}

fn path_edge_safety(
    cfg: &ScenarioConfig,
    model: &RobotModel,
    canvas: &Canvas,
    vrm: &Vrm,
    nodes: &[usize],
    obstacle: &IntervalRle,
) -> Result<Vec<bool>> {
    let planner = cfg.planner();
    let mut safety = Vec::with_capacity(nodes.len().saturating_sub(1));
    let gold = if planner == PlannerKind::Gold {
        Some(pipeline::gold_checker(cfg, model, canvas, &cfg.scene)?)
    } else {
        None
    };
    for pair in nodes.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        let safe = match (&planner, &gold) {
            (PlannerKind::Gold, Some(g)) => {
                g.check((u, v), &vrm.node(u).record.config, &vrm.node(v).record.config)?.safe
            }
            _ => planner_check(vrm, (u, v), planner, obstacle, cfg.segment_thickness)?.safe,
        };
        safety.push(safe);
    }
    Ok(safety)
}

pub fn cmd_plan(cfg: &ScenarioConfig, start: &str, goal: &str) -> Result<()> {
    // Reuse a previously built roadmap when one exists; otherwise build in
    // memory. Records always come from the seed, so both routes agree.
    let vrm_file = cfg.outdir.join("vrm.json");
    let (model, canvas, mut vrm, obstacles) = if vrm_file.exists() {
        let (model, canvas, records) = pipeline::sampled_records(cfg)?;
        let json = fs::read_to_string(&vrm_file)?;
        let mut vrm = Vrm::from_json(&json, records, cfg.metric()?)?;
        let obstacles = pipeline::scene_rles(&cfg.scene, &model, &canvas)?;
        // Restoring from disk loses the active-obstacle context that guards
        // endpoint insertion, so re-establish it.
        vrm.mark_collision_nodes(&obstacles)?;
        (model, canvas, vrm, obstacles)
    } else {
        pipeline::build_roadmap(cfg)?
    };

    let q_start = parse_joint_vector(start, &model)?;
    let q_goal = parse_joint_vector(goal, &model)?;
    let same = q_start == q_goal;

    let s_id = match vrm.insert_endpoint(endpoint_record(&model, &canvas, &q_start)?) {
        Ok(id) => id,
        Err(e) => {
            let e = no_path_on_blocked(e);
            if matches!(e, CliError::NoPath(_)) {
                write_no_path(cfg, &format!("start: {}", e.message()))?;
            }
            return Err(e);
        }
    };
    let t_id = if same {
        s_id
    } else {
        match vrm.insert_endpoint(endpoint_record(&model, &canvas, &q_goal)?) {
            Ok(id) => id,
            Err(e) => {
                let e = no_path_on_blocked(e);
                if matches!(e, CliError::NoPath(_)) {
                    write_no_path(cfg, &format!("goal: {}", e.message()))?;
                }
                return Err(e);
            }
        }
    };

    let path = match vrm.shortest_path(s_id, t_id)? {
        PlanOutcome::Unreachable => {
            write_no_path(cfg, "goal not connected to the start's free component")?;
            return Err(CliError::NoPath("goal unreachable on the pruned roadmap".into()));
        }
        PlanOutcome::Path(p) => p,
    };

    let edge_safety = path_edge_safety(cfg, &model, &canvas, &vrm, &path.nodes, &obstacles[0])?;
    let artifact = PathArtifact {
        reachable: true,
        metric: cfg.metric.clone(),
        planner: cfg.local_planner.clone(),
        reason: None,
        nodes: path.nodes.clone(),
        weight: path.weight,
        configs: path
            .nodes
            .iter()
            .map(|&id| vrm.node(id).record.config.as_slice().to_vec())
            .collect(),
        edge_safety,
    };
    fs::create_dir_all(&cfg.outdir)?;
    fs::write(cfg.outdir.join("path.json"), serde_json::to_string_pretty(&artifact)?)?;

    // One composite frame per path node, plus a single image superimposing
    // the outline of every pose along the path.
    let frames_dir = cfg.outdir.join("frames");
    fs::create_dir_all(&frames_dir)?;
    let obstacle_img = render_obstacles(&cfg.scene, &canvas, &model.view_transforms[0])?;
    let mut outlines = BinaryImage::new(canvas.width, canvas.height);
    for (i, &id) in path.nodes.iter().enumerate() {
        let silhouette = &vrm.node(id).record.views[0];
        let frame = compose_frame(silhouette, &obstacle_img)?;
        fs::write(frames_dir.join(format!("path_{i:04}.pgm")), frame.to_pgm())?;
        outlines.or_assign(&outline(silhouette))?;
    }
    let overlay = compose_frame(&outlines, &obstacle_img)?;
    fs::write(cfg.outdir.join("path_overlay.pgm"), overlay.to_pgm())?;

    println!(
        "path with {} node(s), weight {:.6}; wrote path.json, {} frame(s), path_overlay.pgm",
        path.nodes.len(),
        path.weight,
        path.nodes.len()
    );
    Ok(())
}

pub fn cmd_eval(cfg: &ScenarioConfig) -> Result<()> {
    let (model, canvas, records) = pipeline::sampled_records(cfg)?;
    let mut rows = Vec::new();
    for metric_name in &cfg.eval.metrics {
        let metric = cfg.metric_by_name(metric_name)?;
        let (mut vrm, obstacles) = pipeline::build_roadmap_with(
            cfg,
            &model,
            &canvas,
            records.clone(),
            metric,
            PlannerKind::None,
        )?;
        let gold = pipeline::gold_checker(cfg, &model, &canvas, &cfg.scene)?;
        let cache = gold_base_verdicts(&vrm, &gold)?;
        for planner_name in &cfg.eval.planners {
            let planner = PlannerKind::parse(planner_name)?;
            vrm.restore_all_edges();
            let stats = prune_and_score(
                &mut vrm,
                planner,
                &obstacles[0],
                &gold,
                Some(&cache),
                cfg.segment_thickness,
            )?;
            rows.push(stats.csv_row());
        }
    }
    fs::create_dir_all(&cfg.outdir)?;
    let csv = format!("{}\n{}\n", PruneStats::csv_header(), rows.join("\n"));
    let path = cfg.outdir.join("eval_stats.csv");
    fs::write(&path, csv)?;
    println!("wrote {} sweep row(s) to {}", rows.len(), path.display());
    Ok(())
}

pub fn cmd_embed(cfg: &ScenarioConfig) -> Result<()> {
    let (_, _, records) = pipeline::sampled_records(cfg)?;
    let metric = cfg.metric()?;
    let (embedding, _geodesics) = isomap(&records, cfg.k, cfg.embed_dims, &metric)?;
    fs::create_dir_all(&cfg.outdir)?;
    fs::write(cfg.outdir.join("embedding.csv"), embedding.to_csv())?;
    let dims: Vec<usize> = (1..=embedding.p).collect();
    fs::write(
        cfg.outdir.join("residuals.csv"),
        residuals_to_csv(&dims, &embedding.residual_variances),
    )?;
    println!(
        "wrote {}-point embedding (p={}) and residuals to {}",
        embedding.len(),
        embedding.p,
        cfg.outdir.display()
    );
    Ok(())
}

pub fn cmd_dynamic(cfg: &ScenarioConfig, start: &str, goal: &str) -> Result<()> {
    let track = cfg.obstacle_track()?.ok_or_else(|| {
        CliError::Config(vec!["a [track] section is required for the dynamic command".into()])
    })?;
    let (model, canvas, records) = pipeline::sampled_records(cfg)?;
    let mut vrm = Vrm::build(records, cfg.k, cfg.metric()?)?;
    let initial = pipeline::scene_rles(track.scene(0), &model, &canvas)?;
    vrm.mark_collision_nodes(&initial)?;

    let q_start = parse_joint_vector(start, &model)?;
    let q_goal = parse_joint_vector(goal, &model)?;
    let s_id = vrm
        .insert_endpoint(endpoint_record(&model, &canvas, &q_start)?)
        .map_err(no_path_on_blocked)?;
    let t_id = if q_start == q_goal {
        s_id
    } else {
        vrm.insert_endpoint(endpoint_record(&model, &canvas, &q_goal)?)
            .map_err(no_path_on_blocked)?
    };

    let outcome = run(&mut vrm, &model, &canvas, &track, s_id, t_id, &cfg.policy())
        .map_err(no_path_on_blocked)?;
    let trace = outcome.trace();
    fs::create_dir_all(&cfg.outdir)?;
    fs::write(cfg.outdir.join("trace.json"), trace.to_json_string()?)?;
    let frames = save_trace_frames(&cfg.outdir.join("frames"), &vrm, &track, &model, &canvas, trace)?;
    println!(
        "{} after {} frame(s); wrote trace.json and {} PGM frame(s)",
        if outcome.reached() { "reached goal" } else { "timed out" },
        trace.frames.len(),
        frames.len()
    );
    if !outcome.reached() {
        return Err(CliError::NoPath("step budget exhausted before reaching the goal".into()));
    }
    Ok(())
}
