//! Two-stage hand-eye calibration for a tracked tool on a robot flange.
//!
//! Each sample pairs the robot's `base_from_ee` pose with the tracker's
//! `tracker_from_tool` measurement. They are tied together by the loop
//!
//! ```text
//! tracker_from_tool_i = tracker_from_base * base_from_ee_i * ee_from_tool
//!                B_i  =        Y         *       A_i      *      X
//! ```
//!
//! Stage one removes `X` by looking at relative motions
//! `A_ij = A_j A_i⁻¹`, `B_ij = B_j B_i⁻¹`, which satisfy `B_ij Y = Y A_ij`
//! (equivalently `A_ij Y⁻¹ = Y⁻¹ B_ij`). The rotation of `Y` is the
//! best-fit rotation carrying each robot rotation vector onto its tracker
//! counterpart; the translation then follows from the stacked linear system
//! `(R_B − I) t_Y = R_Y t_A − t_B`.
//!
//! Stage two fixes `Y` and solves `A_i X = Y⁻¹ B_i` for `X`, again rotation
//! first and translation second.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{best_fit_rotation, RigidTransform, Vec3};

/// One synchronised robot/tracker measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandEyeSample {
    /// End-effector pose in the robot base frame.
    pub base_from_ee: RigidTransform,
    /// Tool rigid-body pose in the tracker frame.
    pub tracker_from_tool: RigidTransform,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HandEyeDataset {
    pub samples: Vec<HandEyeSample>,
}

impl HandEyeDataset {
    pub fn new(samples: Vec<HandEyeSample>) -> Self {
        HandEyeDataset { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// `(i, i+1)` for every consecutive pair.
    #[default]
    Consecutive,
    /// Every `(i, j)` with `i < j`.
    AllPairs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandEyeConfig {
    pub pairing: Pairing,
    /// Relative motions rotating less than this (rad) are discarded.
    pub min_motion_angle: f64,
    /// The widest angle (rad) between any two motion axes must reach this.
    pub min_axis_spread: f64,
}

impl Default for HandEyeConfig {
    fn default() -> Self {
        HandEyeConfig {
            pairing: Pairing::Consecutive,
            min_motion_angle: 10f64.to_radians(),
            min_axis_spread: 15f64.to_radians(),
        }
    }
}

/// Relative motion between samples `i` and `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeMotion {
    pub i: usize,
    pub j: usize,
    /// `A_ij = A_j A_i⁻¹`, expressed in the robot base frame.
    pub robot: RigidTransform,
    /// `B_ij = B_j B_i⁻¹`, expressed in the tracker frame.
    pub tracker: RigidTransform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandEyeSolution {
    /// `Y`: maps robot-base coordinates into the tracker frame.
    pub tracker_from_base: RigidTransform,
    /// `X`: maps tool rigid-body coordinates into the end-effector frame.
    pub ee_from_tool: RigidTransform,
    /// RMS loop-closure rotation error over all samples (rad).
    pub residual_rotation: f64,
    /// RMS loop-closure translation error over all samples (mm).
    pub residual_translation: f64,
}

impl HandEyeSolution {
    /// Solution with residuals evaluated on `samples`.
    pub fn with_residuals(
        tracker_from_base: RigidTransform,
        ee_from_tool: RigidTransform,
        samples: &[HandEyeSample],
    ) -> Self {
        let (residual_rotation, residual_translation) =
            closure_rms(&tracker_from_base, &ee_from_tool, samples);
        HandEyeSolution { tracker_from_base, ee_from_tool, residual_rotation, residual_translation }
    }

    pub fn base_from_tracker(&self) -> RigidTransform {
        self.tracker_from_base.inverse()
    }

    pub fn tool_from_ee(&self) -> RigidTransform {
        self.ee_from_tool.inverse()
    }

    /// Tracker pose the loop predicts for a given robot pose.
    pub fn predict_tracker_pose(&self, base_from_ee: &RigidTransform) -> RigidTransform {
        self.tracker_from_base.compose(base_from_ee).compose(&self.ee_from_tool)
    }
}

/// Per-sample loop-closure errors `(rotation rad, translation mm)` between
/// `Y A_i X` and the measured `B_i`.
pub fn closure_errors(
    tracker_from_base: &RigidTransform,
    ee_from_tool: &RigidTransform,
    samples: &[HandEyeSample],
) -> Vec<(f64, f64)> {
    samples
        .iter()
        .map(|s| {
            let predicted = tracker_from_base.compose(&s.base_from_ee).compose(ee_from_tool);
            predicted.distance_to(&s.tracker_from_tool)
        })
        .collect()
}

/// RMS of [`closure_errors`] as `(rotation rad, translation mm)`.
pub fn closure_rms(
    tracker_from_base: &RigidTransform,
    ee_from_tool: &RigidTransform,
    samples: &[HandEyeSample],
) -> (f64, f64) {
    let errs = closure_errors(tracker_from_base, ee_from_tool, samples);
    if errs.is_empty() {
        return (0.0, 0.0);
    }
    let n = errs.len() as f64;
    let rot = (errs.iter().map(|e| e.0 * e.0).sum::<f64>() / n).sqrt();
    let trans = (errs.iter().map(|e| e.1 * e.1).sum::<f64>() / n).sqrt();
    (rot, trans)
}

/// Relative motions under the configured pairing, keeping only those that
/// rotate by at least `config.min_motion_angle`.
pub fn build_relative_motions(d: &HandEyeDataset, config: &HandEyeConfig) -> Result<Vec<RelativeMotion>> {
    let n = d.samples.len();
    let pairs: Vec<(usize, usize)> = match config.pairing {
        Pairing::Consecutive => (1..n).map(|j| (j - 1, j)).collect(),
        Pairing::AllPairs => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
    };
    let motions: Vec<RelativeMotion> = pairs
        .into_iter()
        .map(|(i, j)| {
            let (si, sj) = (&d.samples[i], &d.samples[j]);
            RelativeMotion {
                i,
                j,
                robot: sj.base_from_ee.compose(&si.base_from_ee.inverse()),
                tracker: sj.tracker_from_tool.compose(&si.tracker_from_tool.inverse()),
            }
        })
        .filter(|m| m.robot.rotation.angle() >= config.min_motion_angle)
        .collect();
    if motions.is_empty() {
        return Err(Error::InsufficientMotion { threshold_deg: config.min_motion_angle.to_degrees() });
    }
    Ok(motions)
}

/// Largest angle between the rotation axes of any two motions, treating
/// axes as undirected lines (so the result lies in `[0, π/2]`).
pub fn axis_spread(motions: &[RelativeMotion]) -> f64 {
    let axes: Vec<Vec3> = motions.iter().filter_map(|m| m.robot.rotation.axis()).collect();
    let mut widest = 0.0f64;
    for (k, a) in axes.iter().enumerate() {
        for b in &axes[k + 1..] {
            let cos = a.dot(b).abs().min(1.0);
            widest = widest.max(a.cross(b).norm().atan2(cos));
        }
    }
    widest
}

/// Stage one: `Y = tracker_from_base` from relative motions.
pub fn solve_base_to_tracker(motions: &[RelativeMotion], config: &HandEyeConfig) -> Result<RigidTransform> {
    if motions.len() < 2 {
        return Err(Error::DegenerateConfiguration(format!(
            "{} usable relative motion(s); at least two with distinct rotation axes are required",
            motions.len()
        )));
    }
    let spread = axis_spread(motions);
    if spread < config.min_axis_spread {
        return Err(Error::DegenerateConfiguration(format!(
            "rotation axes span only {:.2} deg (need {:.1} deg)",
            spread.to_degrees(),
            config.min_axis_spread.to_degrees()
        )));
    }

    // R_B = R_Y R_A R_Yᵀ, so rotation vectors satisfy v_B = R_Y v_A.
    let pairs: Vec<(Vec3, Vec3)> = motions
        .iter()
        .map(|m| (m.robot.rotation.rotation_vector(), m.tracker.rotation.rotation_vector()))
        .collect();
    let rotation = best_fit_rotation(&pairs)?;

    let rows = 3 * motions.len();
    let mut lhs = DMatrix::<f64>::zeros(rows, 3);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (k, m) in motions.iter().enumerate() {
        let block = m.tracker.rotation.matrix() - nalgebra::Matrix3::identity();
        let b = rotation.rotate(&m.robot.translation) - m.tracker.translation;
        lhs.fixed_view_mut::<3, 3>(3 * k, 0).copy_from(&block);
        rhs.fixed_rows_mut::<3>(3 * k).copy_from(&b);
    }
    let translation = solve_least_squares(lhs, rhs, "translation of the base-to-tracker transform")?;
    Ok(RigidTransform::new(rotation, Vec3::new(translation[0], translation[1], translation[2])))
}

/// Stage two: `X = ee_from_tool` given `Y = tracker_from_base`.
///
/// Works with a single sample, in which case `X = A₁⁻¹ Y⁻¹ B₁`.
pub fn solve_ee_to_tool(samples: &[HandEyeSample], tracker_from_base: &RigidTransform) -> Result<RigidTransform> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let base_from_tracker = tracker_from_base.inverse();
    // Rotation: maximise Σ tr(R_Xᵀ R_Aᵢᵀ R_B'ᵢ); written as direction pairs
    // (e_k, R_Aᵢᵀ R_B'ᵢ e_k) this is the shared best-fit kernel.
    let targets: Vec<RigidTransform> = samples
        .iter()
        .map(|s| {
            let b_prime = base_from_tracker.compose(&s.tracker_from_tool);
            s.base_from_ee.inverse().compose(&b_prime)
        })
        .collect();
    let pairs: Vec<(Vec3, Vec3)> = targets
        .iter()
        .flat_map(|t| [Vec3::x(), Vec3::y(), Vec3::z()].map(|e| (e, t.rotation.rotate(&e))))
        .collect();
    let rotation = best_fit_rotation(&pairs)?;
    // Translation: R_Aᵢ t_X + t_Aᵢ = t_B'ᵢ in least squares is the mean of
    // the per-sample estimates because every R_Aᵢ is orthonormal.
    let translation = targets.iter().map(|t| t.translation).sum::<Vec3>() / targets.len() as f64;
    Ok(RigidTransform::new(rotation, translation))
}

/// Full two-stage calibration with loop-closure residuals.
pub fn calibrate_hand_eye(d: &HandEyeDataset, config: &HandEyeConfig) -> Result<HandEyeSolution> {
    if d.samples.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: d.samples.len() });
    }
    let motions = build_relative_motions(d, config)?;
    let y = solve_base_to_tracker(&motions, config)?;
    let x = solve_ee_to_tool(&d.samples, &y)?;
    Ok(HandEyeSolution::with_residuals(y, x, &d.samples))
}

fn solve_least_squares(lhs: DMatrix<f64>, rhs: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let svd = lhs.svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if max == 0.0 || min <= 1e-9 * max {
        return Err(Error::DegenerateConfiguration(format!("{what} is unobservable from these motions")));
    }
    svd.solve(&rhs, 0.0)
        .map_err(|e| Error::DegenerateConfiguration(format!("{what}: {e}")))
}
