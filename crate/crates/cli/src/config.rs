//! Scenario configuration: one TOML file drives every subcommand.
//!
//! Parsing and validation are separate steps so a broken file reports every
//! violation at once. The resolved [`ScenarioConfig`] echoes defaults back,
//! which keeps artifact provenance self-describing.

use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use vrm_core::dynamic::{ObstacleTrack, DEFAULT_HOP_LIMIT, DEFAULT_STEP_BUDGET, DEFAULT_TOUCH_THRESHOLD};
use vrm_core::dynamic::DynamicPolicy;
use vrm_core::geom::{Point2, ViewTransform};
use vrm_core::localplan::PlannerKind;
use vrm_core::metrics::{Metric, MetricKind, RandomProjector};
use vrm_core::simworld::{Canvas, RobotModel, Scene};
use vrm_core::Real;
use std::sync::Arc;

/// Robot description as written in the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RobotSpec {
    Arm {
        base: [Real; 2],
        link_lengths: Vec<Real>,
        #[serde(skip_serializing_if = "Option::is_none")]
        link_widths: Option<Vec<Real>>,
    },
    Disc {
        radius: Real,
        x_range: [Real; 2],
        y_range: [Real; 2],
    },
}

/// One camera view; rotation in degrees for readability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    #[serde(default)]
    pub rotation_deg: Real,
    #[serde(default)]
    pub tx: Real,
    #[serde(default)]
    pub ty: Real,
}

impl ViewSpec {
    pub fn transform(&self) -> ViewTransform {
        ViewTransform { rotation: self.rotation_deg.to_radians(), tx: self.tx, ty: self.ty }
    }
}

/// Canvas dimensions. A strict local mirror of the core type so that a
/// mistyped or misplaced key under `[canvas]` fails loudly instead of being
/// silently ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanvasSpec {
    pub width: u32,
    pub height: u32,
}

impl CanvasSpec {
    pub fn canvas(&self) -> Canvas {
        Canvas { width: self.width, height: self.height }
    }
}

/// Scripted obstacle motion as written in the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub max_step_px: Real,
    pub steps: Vec<Scene>,
}

/// Dynamic-loop knobs; `h = -1` means unlimited hops (full recompute).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicSpec {
    #[serde(default = "default_h")]
    pub h: i64,
    #[serde(default = "default_tau")]
    pub tau: u64,
    #[serde(default = "default_step_budget")]
    pub step_budget: usize,
    #[serde(default = "default_true")]
    pub replan_each_step: bool,
}

impl Default for DynamicSpec {
    fn default() -> Self {
        DynamicSpec {
            h: default_h(),
            tau: default_tau(),
            step_budget: default_step_budget(),
            replan_each_step: true,
        }
    }
}

impl DynamicSpec {
    pub fn policy(&self) -> DynamicPolicy {
        DynamicPolicy {
            h: if self.h < 0 { usize::MAX } else { self.h as usize },
            tau: self.tau,
            step_budget: self.step_budget,
            replan_each_step: self.replan_each_step,
        }
    }
}

fn default_h() -> i64 {
    DEFAULT_HOP_LIMIT as i64
}

fn default_tau() -> u64 {
    DEFAULT_TOUCH_THRESHOLD
}

fn default_step_budget() -> usize {
    DEFAULT_STEP_BUDGET
}

fn default_true() -> bool {
    true
}

/// Metric/planner sweep lists for `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    #[serde(default = "default_eval_metrics")]
    pub metrics: Vec<String>,
    #[serde(default = "default_eval_planners")]
    pub planners: Vec<String>,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec { metrics: default_eval_metrics(), planners: default_eval_planners() }
    }
}

fn default_eval_metrics() -> Vec<String> {
    ["img-l2", "rp-l2", "theta-g", "itp-l2", "st-h"].map(String::from).to_vec()
}

fn default_eval_planners() -> Vec<String> {
    PlannerKind::all().iter().map(|p| p.name().to_string()).collect()
}

/// Raw file shape: everything optional so validation can report all missing
/// or broken fields together. Unknown keys are rejected to catch typos.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    n: Option<usize>,
    k: Option<usize>,
    metric: Option<String>,
    local_planner: Option<String>,
    gold_eps: Option<Real>,
    segment_thickness: Option<u32>,
    rp_dims: Option<usize>,
    embed_dims: Option<usize>,
    outdir: Option<PathBuf>,
    robot: Option<RobotSpec>,
    canvas: Option<CanvasSpec>,
    views: Option<Vec<ViewSpec>>,
    scene: Option<Scene>,
    track: Option<TrackSpec>,
    dynamic: Option<DynamicSpec>,
    eval: Option<EvalSpec>,
}

/// Fully resolved scenario: defaults applied, every name checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub metric: String,
    pub local_planner: String,
    /// Gold interpolation step in configuration units: radians for arms,
    /// pixels for discs.
    pub gold_eps: Real,
    pub segment_thickness: u32,
    pub rp_dims: usize,
    pub embed_dims: usize,
    pub outdir: PathBuf,
    pub robot: RobotSpec,
    pub canvas: Canvas,
    pub views: Vec<ViewSpec>,
    pub scene: Scene,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub track: Option<TrackSpec>,
    pub dynamic: DynamicSpec,
    pub eval: EvalSpec,
}

impl ScenarioConfig {
    pub fn robot_model(&self) -> RobotModel {
        let mut model = match &self.robot {
            RobotSpec::Arm { base, link_lengths, link_widths } => {
                let mut m = RobotModel::arm(Point2::new(base[0], base[1]), link_lengths.clone());
                if let Some(w) = link_widths {
                    m.link_widths = w.clone();
                }
                m
            }
            RobotSpec::Disc { radius, x_range, y_range } => RobotModel::disc(
                *radius,
                (x_range[0], x_range[1]),
                (y_range[0], y_range[1]),
            ),
        };
        model.view_transforms = self.views.iter().map(ViewSpec::transform).collect();
        model
    }

    /// Builds the named metric; `rp-l2` draws its projector from the
    /// `projector` sub-stream of the scenario seed, sized to the full
    /// multi-view pixel count.
    pub fn metric_by_name(&self, name: &str) -> Result<Metric> {
        let kind = MetricKind::parse(name).map_err(|e| CliError::Config(vec![e.to_string()]))?;
        let projector = if kind == MetricKind::RpL2 {
            let d_in =
                (self.canvas.width * self.canvas.height) as usize * self.views.len();
            Some(Arc::new(RandomProjector::new(
                d_in,
                self.rp_dims,
                substream(self.seed, "projector"),
            )?))
        } else {
            None
        };
        Ok(Metric::from_kind(&kind, projector)?)
    }

    pub fn metric(&self) -> Result<Metric> {
        self.metric_by_name(&self.metric)
    }

    pub fn planner(&self) -> PlannerKind {
        PlannerKind::parse(&self.local_planner).expect("planner name validated at load")
    }

    pub fn policy(&self) -> DynamicPolicy {
        self.dynamic.policy()
    }

    /// Validated obstacle track, when the scenario declares one.
    pub fn obstacle_track(&self) -> Result<Option<ObstacleTrack>> {
        match &self.track {
            None => Ok(None),
            Some(t) => Ok(Some(ObstacleTrack::new(t.steps.clone(), t.max_step_px)?)),
        }
    }

    /// Resolved config as pretty JSON with stable key order.
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Deterministic per-purpose seed derivation: FNV-1a over the label folded
/// into the scenario seed through a splitmix round. Fixed constants keep
/// artifacts reproducible across platforms and releases.
pub fn substream(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Loads and fully validates a scenario file, reporting every violation.
pub fn validate_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(vec![format!("parse error: {e}")]))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ScenarioConfig> {
    let mut violations: Vec<String> = Vec::new();

    let seed = raw.seed.unwrap_or_else(|| {
        violations.push("seed is required".into());
        0
    });
    let n = raw.n.unwrap_or_else(|| {
        violations.push("n (sample size) is required".into());
        0
    });
    let k = raw.k.unwrap_or(8);
    if raw.n.is_some() {
        if n == 0 {
            violations.push("n must be positive".into());
        } else if n <= k {
            violations.push(format!("n must exceed k (n={n}, k={k})"));
        }
    }
    if k == 0 {
        violations.push("k must be positive".into());
    }

    let metric = raw.metric.unwrap_or_else(|| "img-l2".into());
    if let Err(e) = MetricKind::parse(&metric) {
        violations.push(format!("metric: {e}"));
    }
    let local_planner = raw.local_planner.unwrap_or_else(|| "lts-union".into());
    if let Err(e) = PlannerKind::parse(&local_planner) {
        violations.push(format!("local_planner: {e}"));
    }

    let canvas = raw.canvas.unwrap_or(CanvasSpec { width: 64, height: 64 }).canvas();
    if canvas.width == 0 || canvas.height == 0 {
        violations.push("canvas dimensions must be positive".into());
    }

    let robot = match raw.robot {
        Some(r) => r,
        None => {
            violations.push("robot is required".into());
            RobotSpec::Disc { radius: 1.0, x_range: [1.0, 2.0], y_range: [1.0, 2.0] }
        }
    };
    // Native configuration units differ by robot kind, so the default gold
    // step does too: one degree for arm joints, half a pixel for a disc.
    let gold_eps = raw.gold_eps.unwrap_or(match robot {
        RobotSpec::Arm { .. } => std::f64::consts::PI / 180.0,
        RobotSpec::Disc { .. } => 0.5,
    });
    if !(gold_eps > 0.0) {
        violations.push(format!("gold_eps must be positive, got {gold_eps}"));
    }

    let segment_thickness = raw.segment_thickness.unwrap_or(1);
    if segment_thickness == 0 {
        violations.push("segment_thickness must be positive".into());
    }
    let rp_dims = raw.rp_dims.unwrap_or(64);
    if rp_dims == 0 {
        violations.push("rp_dims must be positive".into());
    }
    let embed_dims = raw.embed_dims.unwrap_or(5);
    if embed_dims == 0 {
        violations.push("embed_dims must be positive".into());
    }

    let views = raw.views.unwrap_or_else(|| vec![ViewSpec { rotation_deg: 0.0, tx: 0.0, ty: 0.0 }]);
    if views.is_empty() {
        violations.push("views must not be empty when given".into());
    }

    let scene = raw.scene.unwrap_or_default();
    if let Err(e) = scene.validate(&canvas) {
        violations.push(format!("scene: {e}"));
    }

    if let Some(track) = &raw.track {
        for (i, step) in track.steps.iter().enumerate() {
            if let Err(e) = step.validate(&canvas) {
                violations.push(format!("track step {i}: {e}"));
            }
        }
        if let Err(e) = ObstacleTrack::new(track.steps.clone(), track.max_step_px) {
            violations.push(format!("track: {e}"));
        }
    }

    let dynamic = raw.dynamic.unwrap_or_default();
    if dynamic.step_budget == 0 {
        violations.push("dynamic.step_budget must be positive".into());
    }

    let eval = raw.eval.unwrap_or_default();
    for name in &eval.metrics {
        if let Err(e) = MetricKind::parse(name) {
            violations.push(format!("eval.metrics: {e}"));
        }
    }
    for name in &eval.planners {
        if let Err(e) = PlannerKind::parse(name) {
            violations.push(format!("eval.planners: {e}"));
        }
    }
    if eval.metrics.is_empty() {
        violations.push("eval.metrics must not be empty when given".into());
    }
    if eval.planners.is_empty() {
        violations.push("eval.planners must not be empty when given".into());
    }

    let cfg = ScenarioConfig {
        seed,
        n,
        k,
        metric,
        local_planner,
        gold_eps,
        segment_thickness,
        rp_dims,
        embed_dims,
        outdir: raw.outdir.unwrap_or_else(|| PathBuf::from("out")),
        robot,
        canvas,
        views,
        scene,
        track: raw.track,
        dynamic,
        eval,
    };

    // Model-level validation only makes sense once the pieces parse.
    if violations.is_empty() {
        if let Err(e) = cfg.robot_model().validate() {
            violations.push(format!("robot: {e}"));
        }
    }

    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config(violations))
    }
}
