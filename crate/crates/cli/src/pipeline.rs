//! Shared pipeline stages: sampling, rendering, roadmap construction and
//! collision marking, all seeded from the scenario.

use crate::config::{substream, ScenarioConfig};
use crate::error::Result;
use rayon::prelude::*;
use vrm_core::localplan::{prune_unsafe_edges, GoldChecker, PlannerKind};
use vrm_core::metrics::{attach_features, FeatureParams, Metric};
use vrm_core::rle::IntervalRle;
use vrm_core::simworld::{
    fk_render, render_scene_views, sample_configs, Canvas, PoseRecord, RobotModel, Scene,
};
use vrm_core::vrm::Vrm;

/// Samples and renders the pose corpus. Features are always attached: the
/// feature metric and the nearest-feature planner both need them, and the
/// extraction is deterministic, so the dataset stays one artifact.
pub fn sampled_records(cfg: &ScenarioConfig) -> Result<(RobotModel, Canvas, Vec<PoseRecord>)> {
    let model = cfg.robot_model();
    let canvas = cfg.canvas;
    let configs = sample_configs(&model, cfg.n, substream(cfg.seed, "sampling"))?;
    let mut records: Vec<PoseRecord> = configs
        .par_iter()
        .map(|q| fk_render(&model, q, &canvas))
        .collect::<vrm_core::Result<_>>()?;
    attach_features(&mut records, &FeatureParams::default());
    Ok((model, canvas, records))
}

/// Per-view interval RLEs of one world scene.
pub fn scene_rles(scene: &Scene, model: &RobotModel, canvas: &Canvas) -> Result<Vec<IntervalRle>> {
    let scenes = vec![scene.clone(); model.view_transforms.len()];
    let images = render_scene_views(&scenes, canvas, &model.view_transforms)?;
    Ok(images.iter().map(IntervalRle::encode).collect())
}

/// Gold checker for a world scene under every configured view.
pub fn gold_checker<'a>(
    cfg: &ScenarioConfig,
    model: &'a RobotModel,
    canvas: &Canvas,
    scene: &Scene,
) -> Result<GoldChecker<'a>> {
    let scenes = vec![scene.clone(); model.view_transforms.len()];
    Ok(GoldChecker::new(model, &scenes, canvas, cfg.gold_eps)?)
}

/// Builds the roadmap for a metric, marks it against the static scene, and
/// prunes edges with the given planner. Returns the per-view obstacle RLEs
/// alongside so callers can keep checking against the same scene.
pub fn build_roadmap_with(
    cfg: &ScenarioConfig,
    model: &RobotModel,
    canvas: &Canvas,
    records: Vec<PoseRecord>,
    metric: Metric,
    planner: PlannerKind,
) -> Result<(Vrm, Vec<IntervalRle>)> {
    let mut vrm = Vrm::build(records, cfg.k, metric)?;
    let obstacles = scene_rles(&cfg.scene, model, canvas)?;
    vrm.mark_collision_nodes(&obstacles)?;
    if planner == PlannerKind::Gold {
        let gold = gold_checker(cfg, model, canvas, &cfg.scene)?;
        prune_unsafe_edges(&mut vrm, planner, &obstacles[0], Some(&gold), cfg.segment_thickness)?;
    } else {
        prune_unsafe_edges(&mut vrm, planner, &obstacles[0], None, cfg.segment_thickness)?;
    }
    Ok((vrm, obstacles))
}

/// The standard scenario roadmap: configured metric and planner.
pub fn build_roadmap(cfg: &ScenarioConfig) -> Result<(RobotModel, Canvas, Vrm, Vec<IntervalRle>)> {
    let (model, canvas, records) = sampled_records(cfg)?;
    let metric = cfg.metric()?;
    let (vrm, obstacles) =
        build_roadmap_with(cfg, &model, &canvas, records, metric, cfg.planner())?;
    Ok((model, canvas, vrm, obstacles))
}
