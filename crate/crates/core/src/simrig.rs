//! Synthetic rig with known ground truth.
//!
//! Generates calibration datasets and cutting recordings whose exact answers
//! are known, so that every solver and metric can be checked end to end.
//! All randomness for one call comes from a single ChaCha generator seeded
//! by the caller; identical inputs give bit-identical outputs.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Rotation3, Vec3};
use crate::handeye::{HandEyeDataset, HandEyeSample, HandEyeSolution};
use crate::metrics::{PlannedCut, TrajectoryRecording, TrajectorySample};
use crate::planner::{build_sequence, plan_sequence, sample_sequence, PassPolicy};
use crate::pointcal::{tip_position_in_base, PivotDataset, PivotSolution, TipCalDataset, TipCalSample};

/// The true frame graph of the rig.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigGroundTruth {
    pub tracker_from_base: RigidTransform,
    pub ee_from_tool: RigidTransform,
    pub tip_in_tool: Vec3,
    pub divot_in_tracker: Vec3,
    pub seed: u64,
}

impl RigGroundTruth {
    /// Randomised but plausible rig: the tracker stands about 1.2 m from
    /// the robot base, the marker body sits a few centimetres off the
    /// flange, and the tip is 120 mm down the tool's z axis.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base_from_tracker = RigidTransform::new(
            random_rotation(&mut rng, std::f64::consts::PI),
            Vec3::new(
                rng.random_range(900.0..1300.0),
                rng.random_range(-300.0..300.0),
                rng.random_range(200.0..700.0),
            ),
        );
        let ee_from_tool = RigidTransform::new(
            random_rotation(&mut rng, std::f64::consts::PI),
            Vec3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(40.0..120.0)),
        );
        let divot_in_tracker = Vec3::new(
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..100.0),
            rng.random_range(-1400.0..-900.0),
        );
        RigGroundTruth {
            tracker_from_base: base_from_tracker.inverse(),
            ee_from_tool,
            tip_in_tool: Vec3::new(0.0, 0.0, 120.0),
            divot_in_tracker,
            seed,
        }
    }

    /// Exact calibration result for this rig.
    pub fn hand_eye(&self) -> HandEyeSolution {
        HandEyeSolution {
            tracker_from_base: self.tracker_from_base,
            ee_from_tool: self.ee_from_tool,
            residual_rotation: 0.0,
            residual_translation: 0.0,
        }
    }

    pub fn pivot(&self) -> PivotSolution {
        PivotSolution { tip_in_tool: self.tip_in_tool, divot_in_tracker: self.divot_in_tracker, rms_residual: 0.0 }
    }

    /// Tip frame in the end-effector frame (tool orientation).
    pub fn ee_from_tip(&self) -> RigidTransform {
        self.ee_from_tool.compose(&RigidTransform::from_translation(self.tip_in_tool))
    }
}

/// Measurement noise, applied in the tangent space of each measured pose:
/// a body-frame rotation `exp(δ)` with `δ ~ N(0, σ²I)` and an additive
/// translation `~ N(0, σ²I)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// rad
    pub tracker_rot_sigma: f64,
    /// mm
    pub tracker_trans_sigma: f64,
    /// rad
    pub robot_rot_sigma: f64,
    /// mm
    pub robot_trans_sigma: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel { tracker_rot_sigma: 0.0, tracker_trans_sigma: 0.0, robot_rot_sigma: 0.0, robot_trans_sigma: 0.0 }
    }

    pub fn tracker(rot_sigma: f64, trans_sigma: f64) -> Self {
        NoiseModel { tracker_rot_sigma: rot_sigma, tracker_trans_sigma: trans_sigma, ..Self::noiseless() }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.tracker_rot_sigma, self.tracker_trans_sigma, self.robot_rot_sigma, self.robot_trans_sigma];
        if all.iter().all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput("noise sigmas must be finite and non-negative".into()))
        }
    }
}

impl Default for NoiseModel {
    /// Tracker jitter giving about 0.1 mm of lateral tip noise for a
    /// 120 mm tip lever: 0.04 mm translation plus 0.044° rotation.
    fn default() -> Self {
        NoiseModel::tracker(0.044f64.to_radians(), 0.04)
    }
}

/// Stand-in for a human operator cutting by hand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterModel {
    /// Stationary standard deviation of the lateral wander (mm).
    pub lateral_sigma: f64,
    /// Mean overshoot of the final pass beyond the target depth (mm).
    pub depth_bias: f64,
    /// Trial-to-trial spread of the final depth (mm).
    pub depth_sigma: f64,
    /// Time constant of the lateral wander (s).
    pub correlation_time: f64,
    /// Number of passes, drawn uniformly.
    pub pass_count_range: RangeInclusive<u32>,
    /// Trial-average speed, executed length over active time (mm/s). Each
    /// pass is cut `passes` times faster so the whole cut averages this.
    pub speed_mean: f64,
    /// mm/s, pass to pass
    pub speed_sigma: f64,
}

impl Default for JitterModel {
    fn default() -> Self {
        JitterModel {
            lateral_sigma: 1.1,
            depth_bias: 3.0,
            depth_sigma: 0.8,
            correlation_time: 0.5,
            pass_count_range: 2..=4,
            speed_mean: 1.68,
            speed_sigma: 0.15,
        }
    }
}

impl JitterModel {
    /// No wander, one pass at exactly the target depth and `speed`.
    pub fn steady(speed: f64) -> Self {
        JitterModel {
            lateral_sigma: 0.0,
            depth_bias: 0.0,
            depth_sigma: 0.0,
            correlation_time: 1.0,
            pass_count_range: 1..=1,
            speed_mean: speed,
            speed_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas = [self.lateral_sigma, self.depth_sigma, self.speed_sigma];
        if !sigmas.iter().all(|s| s.is_finite() && *s >= 0.0) {
            return Err(Error::InvalidInput("jitter sigmas must be finite and non-negative".into()));
        }
        if !(self.correlation_time.is_finite() && self.correlation_time > 0.0) {
            return Err(Error::InvalidInput("correlation_time must be positive".into()));
        }
        if !(self.speed_mean.is_finite() && self.speed_mean > 0.0) {
            return Err(Error::InvalidInput("speed_mean must be positive".into()));
        }
        if !self.depth_bias.is_finite() {
            return Err(Error::InvalidInput("depth_bias must be finite".into()));
        }
        if *self.pass_count_range.start() == 0 || self.pass_count_range.is_empty() {
            return Err(Error::InvalidInput("pass_count_range must be a non-empty range of positive counts".into()));
        }
        Ok(())
    }
}

/// Region the robot flange visits during hand-eye data collection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub center: Vec3,
    pub half_extent: Vec3,
    /// Largest tilt of the flange away from its nominal orientation (rad).
    pub max_tilt: f64,
    /// Consecutive poses differ by at least this rotation (rad).
    pub min_step_rotation: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace {
            center: Vec3::new(500.0, 0.0, 400.0),
            half_extent: Vec3::new(150.0, 150.0, 120.0),
            max_tilt: 90f64.to_radians(),
            min_step_rotation: 20f64.to_radians(),
        }
    }
}

fn normal3(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Rotation about a uniformly random axis by an angle uniform in `[0, max_angle]`.
fn random_rotation(rng: &mut ChaCha8Rng, max_angle: f64) -> Rotation3 {
    let axis = loop {
        let v = normal3(rng);
        if v.norm() > 1e-6 {
            break v;
        }
    };
    Rotation3::from_axis_angle(&axis, rng.random_range(0.0..=max_angle))
}

/// Body-frame tangent-space perturbation.
pub fn perturb(pose: &RigidTransform, rot_sigma: f64, trans_sigma: f64, rng: &mut ChaCha8Rng) -> RigidTransform {
    let delta = normal3(rng) * rot_sigma;
    let shift = normal3(rng) * trans_sigma;
    RigidTransform::new(pose.rotation.compose(&Rotation3::from_rotation_vector(&delta)), pose.translation + shift)
}

/// Hand-eye dataset over the default workspace.
pub fn generate_handeye_dataset(gt: &RigGroundTruth, n: usize, noise: &NoiseModel, seed: u64) -> Result<HandEyeDataset> {
    generate_handeye_dataset_in(gt, n, noise, &Workspace::default(), seed)
}

pub fn generate_handeye_dataset_in(
    gt: &RigGroundTruth,
    n: usize,
    noise: &NoiseModel,
    workspace: &Workspace,
    seed: u64,
) -> Result<HandEyeDataset> {
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Flange pointing down at the table.
    let nominal = Rotation3::about_x(std::f64::consts::PI);
    let mut samples = Vec::with_capacity(n);
    let mut previous: Option<Rotation3> = None;
    while samples.len() < n {
        let rotation = nominal.compose(&random_rotation(&mut rng, workspace.max_tilt));
        if let Some(prev) = previous {
            if crate::geometry::rotation_angle_between(&prev, &rotation) < workspace.min_step_rotation {
                continue;
            }
        }
        previous = Some(rotation);
        let offset = Vec3::new(
            rng.random_range(-1.0..=1.0) * workspace.half_extent.x,
            rng.random_range(-1.0..=1.0) * workspace.half_extent.y,
            rng.random_range(-1.0..=1.0) * workspace.half_extent.z,
        );
        let base_from_ee = RigidTransform::new(rotation, workspace.center + offset);
        let tracker_from_tool = gt.tracker_from_base.compose(&base_from_ee).compose(&gt.ee_from_tool);
        samples.push(HandEyeSample {
            base_from_ee: perturb(&base_from_ee, noise.robot_rot_sigma, noise.robot_trans_sigma, &mut rng),
            tracker_from_tool: perturb(&tracker_from_tool, noise.tracker_rot_sigma, noise.tracker_trans_sigma, &mut rng),
        });
    }
    Ok(HandEyeDataset::new(samples))
}

/// Pivoting about the divot: tilts up to `cone_half_angle` away from a
/// nominal orientation plus a spin of up to ±45° about the tip direction.
/// With a zero cone only the spin remains, which is unobservable.
pub fn generate_pivot_dataset(
    gt: &RigGroundTruth,
    n: usize,
    cone_half_angle: f64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<PivotDataset> {
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if !(cone_half_angle.is_finite() && cone_half_angle >= 0.0) {
        return Err(Error::InvalidInput("cone_half_angle must be non-negative".into()));
    }
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tip_dir = gt.tip_in_tool.try_normalize(1e-12).unwrap_or_else(Vec3::z);
    let helper = if tip_dir.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = tip_dir.cross(&helper).normalize();
    let v = tip_dir.cross(&u);
    // Tool pointing down into the divot as seen from the tracker.
    let nominal = Rotation3::about_x(2.5);
    let poses = (0..n)
        .map(|_| {
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let tilt_axis = u * phi.cos() + v * phi.sin();
            let tilt = Rotation3::from_axis_angle(&tilt_axis, rng.random_range(0.0..=1.0) * cone_half_angle);
            let spin = Rotation3::from_axis_angle(&tip_dir, rng.random_range(-1.0..=1.0) * std::f64::consts::FRAC_PI_4);
            let r = nominal.compose(&tilt).compose(&spin);
            let pose = RigidTransform::new(r, gt.divot_in_tracker - r.rotate(&gt.tip_in_tool));
            perturb(&pose, noise.tracker_rot_sigma, noise.tracker_trans_sigma, &mut rng)
        })
        .collect();
    Ok(PivotDataset { poses })
}

/// Digitizer touches of the tip from `n` robot poses. The digitizer's own
/// orientation is random; only its origin carries information.
pub fn generate_tipcal_dataset(gt: &RigGroundTruth, n: usize, noise: &NoiseModel, seed: u64) -> Result<TipCalDataset> {
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ws = Workspace::default();
    let nominal = Rotation3::about_x(std::f64::consts::PI);
    let ee_from_tip = gt.ee_from_tip();
    let samples = (0..n)
        .map(|_| {
            let rotation = nominal.compose(&random_rotation(&mut rng, ws.max_tilt));
            let offset = Vec3::new(
                rng.random_range(-1.0..=1.0) * ws.half_extent.x,
                rng.random_range(-1.0..=1.0) * ws.half_extent.y,
                rng.random_range(-1.0..=1.0) * ws.half_extent.z,
            );
            let base_from_ee = RigidTransform::new(rotation, ws.center + offset);
            let tip_in_tracker = gt.tracker_from_base.transform_point(&base_from_ee.transform_point(&ee_from_tip.translation));
            let digitizer = RigidTransform::new(random_rotation(&mut rng, std::f64::consts::PI), tip_in_tracker);
            TipCalSample {
                base_from_ee: perturb(&base_from_ee, noise.robot_rot_sigma, noise.robot_trans_sigma, &mut rng),
                tracker_from_digitizer: perturb(&digitizer, noise.tracker_rot_sigma, noise.tracker_trans_sigma, &mut rng),
            }
        })
        .collect();
    Ok(TipCalDataset { samples, hand_eye: gt.hand_eye() })
}

/// Orientation of the tool while cutting: tool x along the cut, tool z
/// (the shaft, carrying the tip) along the depth axis.
fn cutting_orientation(plan: &PlannedCut) -> Result<Rotation3> {
    let x = plan.direction;
    let z = plan.depth_axis;
    let y = z.cross(&x);
    Rotation3::nearest(&nalgebra::Matrix3::from_columns(&[x, y, z]))
}

/// Robotic trial: the planned sequence, sampled at `rate`, observed through
/// the tracker. Each sample's tool pose is perturbed per `noise` and mapped
/// back to the tip in the base frame with the true calibration.
pub fn synthesize_ruso_trial(
    gt: &RigGroundTruth,
    plan: &PlannedCut,
    policy: &PassPolicy,
    noise: &NoiseModel,
    rate: f64,
    seed: u64,
) -> Result<TrajectoryRecording> {
    noise.validate()?;
    let nominal = sample_sequence(&plan_sequence(plan, policy)?, rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orientation = cutting_orientation(plan)?;
    let hand_eye = gt.hand_eye();
    let pivot = gt.pivot();
    let samples = nominal
        .samples()
        .iter()
        .map(|s| {
            let base_from_tool = RigidTransform::new(orientation, s.point - orientation.rotate(&gt.tip_in_tool));
            let tracker_from_tool = gt.tracker_from_base.compose(&base_from_tool);
            let measured = perturb(&tracker_from_tool, noise.tracker_rot_sigma, noise.tracker_trans_sigma, &mut rng);
            TrajectorySample { point: tip_position_in_base(&hand_eye, &measured, &pivot), ..*s }
        })
        .collect();
    TrajectoryRecording::new(samples)
}

/// Manual trial. The operator makes several passes of increasing depth, the
/// last one overshooting the target by `depth_bias ± depth_sigma`, each at
/// its own speed, while wandering sideways with a first-order
/// autoregressive process of stationary deviation `lateral_sigma`.
pub fn synthesize_muso_trial(plan: &PlannedCut, jitter: &JitterModel, rate: f64, seed: u64) -> Result<TrajectoryRecording> {
    plan.validate()?;
    jitter.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let passes = rng.random_range(jitter.pass_count_range.clone()) as usize;
    let z: f64 = rng.sample(StandardNormal);
    let final_depth = (plan.target_depth + jitter.depth_bias + jitter.depth_sigma * z).max(0.1 * plan.target_depth);
    let schedule: Vec<(f64, f64)> = (1..=passes)
        .map(|k| {
            let zs: f64 = rng.sample(StandardNormal);
            let speed = (jitter.speed_mean + jitter.speed_sigma * zs).max(0.1 * jitter.speed_mean);
            (final_depth * k as f64 / passes as f64, speed * passes as f64)
        })
        .collect();
    let policy = PassPolicy::single_pass(plan);
    let nominal = sample_sequence(&build_sequence(plan, &schedule, &policy)?, rate)?;

    let lateral_axis = plan.lateral_axis();
    let sigma = jitter.lateral_sigma;
    let mut wander = sigma * rng.sample::<f64, _>(StandardNormal);
    let mut last_t = nominal.samples()[0].timestamp;
    let samples = nominal
        .samples()
        .iter()
        .map(|s| {
            let phi = (-(s.timestamp - last_t) / jitter.correlation_time).exp();
            let innovation: f64 = rng.sample(StandardNormal);
            wander = phi * wander + sigma * (1.0 - phi * phi).sqrt() * innovation;
            last_t = s.timestamp;
            TrajectorySample { point: s.point + lateral_axis * wander, ..*s }
        })
        .collect();
    TrajectoryRecording::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::handeye::{calibrate_hand_eye, HandEyeConfig};
    use crate::metrics::{build_report, AnalysisConfig};
    use crate::pointcal::{calibrate_pivot, calibrate_tip_in_ee, PivotConfig, TipCalConfig};

    fn plan(target: f64, speed: f64) -> PlannedCut {
        PlannedCut::new(Vec3::new(600.0, -50.0, 100.0), Vec3::y(), -Vec3::z(), 100.0, target, speed).unwrap()
    }

    #[test]
    fn noiseless_datasets_close_exactly() {
        let gt = RigGroundTruth::from_seed(3);
        let he = generate_handeye_dataset(&gt, 10, &NoiseModel::noiseless(), 1).unwrap();
        let sol = calibrate_hand_eye(&he, &HandEyeConfig::default()).unwrap();
        assert!(sol.residual_rotation < 1e-8 && sol.residual_translation < 1e-8);
        let (r, t) = sol.tracker_from_base.distance_to(&gt.tracker_from_base);
        assert!(r < 1e-8 && t < 1e-6);

        let piv = generate_pivot_dataset(&gt, 50, 30f64.to_radians(), &NoiseModel::noiseless(), 2).unwrap();
        let ps = calibrate_pivot(&piv, &PivotConfig::default()).unwrap();
        assert!((ps.tip_in_tool - gt.tip_in_tool).norm() < 1e-6);

        let tc = generate_tipcal_dataset(&gt, 5, &NoiseModel::noiseless(), 3).unwrap();
        let ts = calibrate_tip_in_ee(&tc, &TipCalConfig::default()).unwrap();
        assert!((ts.ee_from_tip.translation - gt.ee_from_tip().translation).norm() < 1e-6);
    }

    #[test]
    fn zero_cone_pivot_is_degenerate() {
        let gt = RigGroundTruth::from_seed(4);
        let piv = generate_pivot_dataset(&gt, 30, 0.0, &NoiseModel::noiseless(), 5).unwrap();
        let unguarded = PivotConfig { min_rotation_spread: 0.0 };
        assert!(matches!(calibrate_pivot(&piv, &unguarded), Err(Error::DegenerateConfiguration(_))));
        assert!(calibrate_pivot(&piv, &PivotConfig::default()).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let gt = RigGroundTruth::from_seed(9);
        assert_eq!(gt, RigGroundTruth::from_seed(9));
        let n = NoiseModel::tracker(0.001, 0.1);
        assert_eq!(generate_handeye_dataset(&gt, 8, &n, 7).unwrap(), generate_handeye_dataset(&gt, 8, &n, 7).unwrap());
        assert_eq!(
            generate_pivot_dataset(&gt, 8, 0.5, &n, 7).unwrap(),
            generate_pivot_dataset(&gt, 8, 0.5, &n, 7).unwrap()
        );
        assert_ne!(generate_handeye_dataset(&gt, 8, &n, 7).unwrap(), generate_handeye_dataset(&gt, 8, &n, 8).unwrap());
        let p = plan(4.0, 3.0);
        let pol = PassPolicy::single_pass(&p);
        assert_eq!(
            synthesize_ruso_trial(&gt, &p, &pol, &n, 30.0, 1).unwrap(),
            synthesize_ruso_trial(&gt, &p, &pol, &n, 30.0, 1).unwrap()
        );
        let j = JitterModel::default();
        assert_eq!(synthesize_muso_trial(&p, &j, 30.0, 2).unwrap(), synthesize_muso_trial(&p, &j, 30.0, 2).unwrap());
    }

    #[test]
    fn noiseless_ruso_reports_plan() {
        let gt = RigGroundTruth::from_seed(1);
        let p = plan(4.0, 3.0);
        let rec = synthesize_ruso_trial(&gt, &p, &PassPolicy::single_pass(&p), &NoiseModel::noiseless(), 60.0, 0).unwrap();
        let r = build_report(&rec, &p, &AnalysisConfig::default(), "R3.1".parse().unwrap()).unwrap();
        assert!(r.rmse < 1e-9);
        assert!((r.mean_depth - 4.0).abs() < 1e-9);
        assert!((r.executed_length - 100.0).abs() < 1e-9);
    }

    #[test]
    fn steady_manual_pass_equals_robotic_pass() {
        let p = plan(4.0, 1.7);
        let muso = synthesize_muso_trial(&p, &JitterModel::steady(1.7), 20.0, 11).unwrap();
        let nominal = sample_sequence(&plan_sequence(&p, &PassPolicy::single_pass(&p)).unwrap(), 20.0).unwrap();
        assert_eq!(muso, nominal);
    }

    #[test]
    fn invalid_models_rejected() {
        let p = plan(4.0, 3.0);
        let bad = JitterModel { correlation_time: 0.0, ..JitterModel::default() };
        assert!(synthesize_muso_trial(&p, &bad, 30.0, 0).is_err());
        let bad = JitterModel { pass_count_range: 0..=0, ..JitterModel::default() };
        assert!(synthesize_muso_trial(&p, &bad, 30.0, 0).is_err());
        let gt = RigGroundTruth::from_seed(0);
        assert!(generate_handeye_dataset(&gt, 2, &NoiseModel::noiseless(), 0).is_err());
        assert!(generate_handeye_dataset(&gt, 5, &NoiseModel::tracker(-1.0, 0.0), 0).is_err());
    }
}
