//! Tool-tip localisation: pivot calibration in the tracker frame and
//! digitizer-based tip calibration in the end-effector frame.
//!
//! Pivoting keeps the tip in a fixed divot while the tool rotates, so every
//! tracked pose satisfies `R_i · tip_in_tool + t_i = divot_in_tracker`.
//! Stacking `[R_i | −I] · [tip; divot] = −t_i` gives a linear least-squares
//! problem in six unknowns.
//!
//! The pivot result fixes only the translational offset of the tip; the tip
//! frame keeps the tool frame's orientation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_angle_between, RigidTransform, Vec3};
use crate::handeye::HandEyeSolution;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PivotDataset {
    /// Tool rigid-body poses in the tracker frame.
    pub poses: Vec<RigidTransform>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotConfig {
    /// Largest pairwise rotation between poses must reach this (rad).
    pub min_rotation_spread: f64,
}

impl Default for PivotConfig {
    fn default() -> Self {
        PivotConfig { min_rotation_spread: 20f64.to_radians() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotSolution {
    /// Tip offset in the tool rigid-body frame (mm).
    pub tip_in_tool: Vec3,
    /// Divot position in the tracker frame (mm).
    pub divot_in_tracker: Vec3,
    /// RMS distance between each pose's predicted tip and the divot (mm).
    pub rms_residual: f64,
}

impl PivotSolution {
    pub fn residuals(&self, poses: &[RigidTransform]) -> Vec<f64> {
        poses
            .iter()
            .map(|p| (p.transform_point(&self.tip_in_tool) - self.divot_in_tracker).norm())
            .collect()
    }

    /// Tip frame expressed in the tool frame (tool orientation, tip origin).
    pub fn tool_from_tip(&self) -> RigidTransform {
        RigidTransform::from_translation(self.tip_in_tool)
    }
}

/// Largest rotation angle between any two poses.
pub fn rotation_spread(poses: &[RigidTransform]) -> f64 {
    let mut widest = 0.0f64;
    for (k, a) in poses.iter().enumerate() {
        for b in &poses[k + 1..] {
            widest = widest.max(rotation_angle_between(&a.rotation, &b.rotation));
        }
    }
    widest
}

pub fn calibrate_pivot(d: &PivotDataset, config: &PivotConfig) -> Result<PivotSolution> {
    let n = d.poses.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let spread = rotation_spread(&d.poses);
    if spread < config.min_rotation_spread {
        return Err(Error::DegenerateConfiguration(format!(
            "pivot poses span {:.2} deg of rotation (need {:.1} deg)",
            spread.to_degrees(),
            config.min_rotation_spread.to_degrees()
        )));
    }

    let mut lhs = DMatrix::<f64>::zeros(3 * n, 6);
    let mut rhs = DVector::<f64>::zeros(3 * n);
    for (i, pose) in d.poses.iter().enumerate() {
        lhs.fixed_view_mut::<3, 3>(3 * i, 0).copy_from(pose.rotation.matrix());
        lhs.fixed_view_mut::<3, 3>(3 * i, 3).copy_from(&(-nalgebra::Matrix3::identity()));
        rhs.fixed_rows_mut::<3>(3 * i).copy_from(&(-pose.translation));
    }
    let svd = lhs.svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min <= 1e-9 * max {
        return Err(Error::DegenerateConfiguration(
            "poses rotate about a single axis through the divot; tip offset along it is unobservable".into(),
        ));
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;
    let mut sol = PivotSolution {
        tip_in_tool: Vec3::new(x[0], x[1], x[2]),
        divot_in_tracker: Vec3::new(x[3], x[4], x[5]),
        rms_residual: 0.0,
    };
    let res = sol.residuals(&d.poses);
    sol.rms_residual = (res.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Ok(sol)
}

/// One digitizer touch of the osteotome tip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TipCalSample {
    pub base_from_ee: RigidTransform,
    /// Digitizer pose in the tracker frame; its origin is the touched point.
    pub tracker_from_digitizer: RigidTransform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TipCalDataset {
    pub samples: Vec<TipCalSample>,
    pub hand_eye: HandEyeSolution,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TipCalConfig {
    /// Maximum distance of any per-sample tip estimate from their mean (mm).
    pub max_spread_mm: f64,
}

impl Default for TipCalConfig {
    fn default() -> Self {
        TipCalConfig { max_spread_mm: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TipCalSolution {
    /// Tip frame in the end-effector frame. Translation is the mean of the
    /// per-sample estimates; orientation comes from the first sample.
    pub ee_from_tip: RigidTransform,
    /// Largest distance of a per-sample tip estimate from the mean (mm).
    pub spread_mm: f64,
    pub per_sample: Vec<Vec3>,
}

/// `ee_from_tip = base_from_ee⁻¹ · base_from_tracker · tracker_from_digitizer`.
pub fn tip_in_ee_chain(
    hand_eye: &HandEyeSolution,
    base_from_ee: &RigidTransform,
    tracker_from_digitizer: &RigidTransform,
) -> RigidTransform {
    base_from_ee
        .inverse()
        .compose(&hand_eye.base_from_tracker())
        .compose(tracker_from_digitizer)
}

/// The same loop read the other way: the digitizer pose that would produce
/// `ee_from_tip` for a given robot pose.
pub fn digitizer_from_tip_chain(
    hand_eye: &HandEyeSolution,
    base_from_ee: &RigidTransform,
    ee_from_tip: &RigidTransform,
) -> RigidTransform {
    hand_eye.tracker_from_base.compose(base_from_ee).compose(ee_from_tip)
}

pub fn calibrate_tip_in_ee(d: &TipCalDataset, config: &TipCalConfig) -> Result<TipCalSolution> {
    if d.samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(d.hand_eye.residual_rotation.is_finite() && d.hand_eye.residual_translation.is_finite()) {
        return Err(Error::InvalidInput("hand-eye residuals are not finite".into()));
    }
    let chains: Vec<RigidTransform> = d
        .samples
        .iter()
        .map(|s| tip_in_ee_chain(&d.hand_eye, &s.base_from_ee, &s.tracker_from_digitizer))
        .collect();
    let per_sample: Vec<Vec3> = chains.iter().map(|c| c.translation).collect();
    let mean = per_sample.iter().sum::<Vec3>() / per_sample.len() as f64;
    let spread_mm = per_sample.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max);
    if spread_mm > config.max_spread_mm {
        return Err(Error::InconsistentSamples { spread_mm, threshold_mm: config.max_spread_mm });
    }
    Ok(TipCalSolution {
        ee_from_tip: RigidTransform::new(chains[0].rotation, mean),
        spread_mm,
        per_sample,
    })
}

/// Osteotome tip in the robot base frame from one tracker measurement:
/// `base_from_tracker · tracker_from_tool · tip_in_tool`.
pub fn tip_position_in_base(
    hand_eye: &HandEyeSolution,
    tracker_from_tool: &RigidTransform,
    pivot: &PivotSolution,
) -> Vec3 {
    hand_eye
        .base_from_tracker()
        .compose(tracker_from_tool)
        .transform_point(&pivot.tip_in_tool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation3;

    fn pivot_poses(tip: Vec3, divot: Vec3) -> Vec<RigidTransform> {
        let mut out = Vec::new();
        for (axis, angle) in [
            (Vec3::x(), 0.0),
            (Vec3::x(), 0.4),
            (Vec3::y(), 0.4),
            (Vec3::new(1.0, 1.0, 0.0), -0.5),
            (Vec3::new(-1.0, 0.5, 0.3), 0.3),
            (Vec3::new(0.2, -1.0, 0.1), 0.45),
        ] {
            let r = Rotation3::from_axis_angle(&axis, angle);
            out.push(RigidTransform::new(r, divot - r.rotate(&tip)));
        }
        out
    }

    #[test]
    fn noiseless_pivot_recovers_tip_and_divot() {
        let tip = Vec3::new(0.0, 0.0, 120.0);
        let divot = Vec3::new(-30.0, 55.0, -1400.0);
        let d = PivotDataset { poses: pivot_poses(tip, divot) };
        let sol = calibrate_pivot(&d, &PivotConfig::default()).unwrap();
        assert!((sol.tip_in_tool - tip).norm() < 1e-6);
        assert!((sol.divot_in_tracker - divot).norm() < 1e-6);
        assert!(sol.rms_residual < 1e-9);
    }

    #[test]
    fn identical_poses_are_degenerate() {
        let p = RigidTransform::new(Rotation3::about_x(0.2), Vec3::new(1.0, 2.0, 3.0));
        let d = PivotDataset { poses: vec![p; 10] };
        assert!(matches!(calibrate_pivot(&d, &PivotConfig::default()), Err(Error::DegenerateConfiguration(_))));
        let unguarded = PivotConfig { min_rotation_spread: 0.0 };
        assert!(matches!(calibrate_pivot(&d, &unguarded), Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn single_axis_through_divot_is_degenerate() {
        // Tool spins about its own shaft, which passes through the tip.
        let tip = Vec3::new(0.0, 0.0, 120.0);
        let divot = Vec3::new(10.0, 0.0, -900.0);
        let poses: Vec<_> = (0..8)
            .map(|k| {
                let r = Rotation3::about_z(0.3 * k as f64);
                RigidTransform::new(r, divot - r.rotate(&tip))
            })
            .collect();
        let unguarded = PivotConfig { min_rotation_spread: 0.0 };
        assert!(matches!(
            calibrate_pivot(&PivotDataset { poses }, &unguarded),
            Err(Error::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn too_few_poses() {
        let d = PivotDataset { poses: vec![RigidTransform::identity(); 2] };
        assert!(matches!(calibrate_pivot(&d, &PivotConfig::default()), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn residual_matches_independent_recomputation() {
        let tip = Vec3::new(2.0, -1.0, 118.0);
        let divot = Vec3::new(0.0, 0.0, -1000.0);
        let mut poses = pivot_poses(tip, divot);
        for (k, p) in poses.iter_mut().enumerate() {
            p.translation += Vec3::new(0.1, -0.05, 0.02) * (k as f64 - 2.0);
        }
        let sol = calibrate_pivot(&PivotDataset { poses: poses.clone() }, &PivotConfig::default()).unwrap();
        let mut sq = 0.0;
        for p in &poses {
            let r = p.rotation.matrix();
            let t = p.translation;
            let predicted = r * sol.tip_in_tool + t;
            sq += (predicted - sol.divot_in_tracker).norm_squared();
        }
        let rms = (sq / poses.len() as f64).sqrt();
        assert!((rms - sol.rms_residual).abs() < 1e-12);
    }

    #[test]
    fn pivot_is_invariant_to_tracker_reexpression() {
        let tip = Vec3::new(1.0, 3.0, 120.0);
        let divot = Vec3::new(15.0, -20.0, -1100.0);
        let mut poses = pivot_poses(tip, divot);
        poses[2].translation.x += 0.2;
        let g = RigidTransform::new(Rotation3::from_axis_angle(&Vec3::new(0.3, 1.0, 0.2), 1.3), Vec3::new(100.0, -50.0, 7.0));
        let moved: Vec<_> = poses.iter().map(|p| g.compose(p)).collect();
        let cfg = PivotConfig::default();
        let a = calibrate_pivot(&PivotDataset { poses }, &cfg).unwrap();
        let b = calibrate_pivot(&PivotDataset { poses: moved }, &cfg).unwrap();
        assert!((a.tip_in_tool - b.tip_in_tool).norm() < 1e-9);
        assert!((g.transform_point(&a.divot_in_tracker) - b.divot_in_tracker).norm() < 1e-9);
    }

    fn identity_hand_eye() -> HandEyeSolution {
        HandEyeSolution {
            tracker_from_base: RigidTransform::identity(),
            ee_from_tool: RigidTransform::identity(),
            residual_rotation: 0.0,
            residual_translation: 0.0,
        }
    }

    fn some_hand_eye() -> HandEyeSolution {
        HandEyeSolution {
            tracker_from_base: RigidTransform::new(Rotation3::about_z(2.0), Vec3::new(1500.0, 200.0, -100.0)),
            ee_from_tool: RigidTransform::new(Rotation3::about_x(0.3), Vec3::new(10.0, 20.0, 60.0)),
            residual_rotation: 0.0,
            residual_translation: 0.0,
        }
    }

    #[test]
    fn tip_cal_identity_chain_returns_digitizer_pose() {
        let dig = RigidTransform::new(Rotation3::about_y(0.5), Vec3::new(3.0, 4.0, 150.0));
        let d = TipCalDataset {
            samples: vec![TipCalSample { base_from_ee: RigidTransform::identity(), tracker_from_digitizer: dig }],
            hand_eye: identity_hand_eye(),
        };
        let sol = calibrate_tip_in_ee(&d, &TipCalConfig::default()).unwrap();
        assert!((sol.ee_from_tip.to_homogeneous() - dig.to_homogeneous()).abs().max() < 1e-12);
        assert_eq!(sol.spread_mm, 0.0);
    }

    fn tip_samples(he: &HandEyeSolution, tip_in_ee: Vec3) -> Vec<TipCalSample> {
        (0..5)
            .map(|k| {
                let k = k as f64;
                let a = RigidTransform::new(
                    Rotation3::from_axis_angle(&Vec3::new(1.0, k, 0.5), 0.2 * k),
                    Vec3::new(400.0 + 10.0 * k, -30.0 * k, 300.0),
                );
                // Digitizer held at an arbitrary orientation, origin on the tip.
                let world_tip = a.transform_point(&tip_in_ee);
                let tracker_tip = he.tracker_from_base.transform_point(&world_tip);
                let dig = RigidTransform::new(Rotation3::about_x(0.4 * k), tracker_tip);
                TipCalSample { base_from_ee: a, tracker_from_digitizer: dig }
            })
            .collect()
    }

    #[test]
    fn tip_cal_recovers_ground_truth() {
        let he = some_hand_eye();
        let tip = Vec3::new(12.0, -4.0, 180.0);
        let d = TipCalDataset { samples: tip_samples(&he, tip), hand_eye: he };
        let sol = calibrate_tip_in_ee(&d, &TipCalConfig::default()).unwrap();
        assert!((sol.ee_from_tip.translation - tip).norm() < 1e-6);
        assert!(sol.spread_mm < 1e-9);
    }

    #[test]
    fn tip_cal_rejects_outlier() {
        let he = some_hand_eye();
        let tip = Vec3::new(12.0, -4.0, 180.0);
        let mut samples = tip_samples(&he, tip);
        samples[3].tracker_from_digitizer.translation.y += 5.0;
        let d = TipCalDataset { samples, hand_eye: he };
        assert!(matches!(
            calibrate_tip_in_ee(&d, &TipCalConfig::default()),
            Err(Error::InconsistentSamples { .. })
        ));
    }

    #[test]
    fn tip_cal_chain_round_trips() {
        let he = some_hand_eye();
        let a = RigidTransform::new(Rotation3::about_y(0.7), Vec3::new(500.0, 10.0, 200.0));
        let dig = RigidTransform::new(Rotation3::about_z(-0.3), Vec3::new(-20.0, 900.0, 40.0));
        let ee_tip = tip_in_ee_chain(&he, &a, &dig);
        let back = digitizer_from_tip_chain(&he, &a, &ee_tip);
        assert!((back.to_homogeneous() - dig.to_homogeneous()).abs().max() < 1e-9);
    }

    #[test]
    fn tip_cal_requires_finite_hand_eye() {
        let mut he = identity_hand_eye();
        he.residual_translation = f64::NAN;
        let d = TipCalDataset {
            samples: vec![TipCalSample {
                base_from_ee: RigidTransform::identity(),
                tracker_from_digitizer: RigidTransform::identity(),
            }],
            hand_eye: he,
        };
        assert!(calibrate_tip_in_ee(&d, &TipCalConfig::default()).is_err());
    }

    #[test]
    fn tip_in_base_identity_chain() {
        let pivot = PivotSolution { tip_in_tool: Vec3::zeros(), divot_in_tracker: Vec3::zeros(), rms_residual: 0.0 };
        let p = tip_position_in_base(&identity_hand_eye(), &RigidTransform::identity(), &pivot);
        assert_eq!(p, Vec3::zeros());
    }

    #[test]
    fn tip_in_base_matches_known_chain_and_is_gauge_invariant() {
        let he = some_hand_eye();
        let pivot = PivotSolution { tip_in_tool: Vec3::new(0.0, 0.0, 120.0), divot_in_tracker: Vec3::zeros(), rms_residual: 0.0 };
        let base_from_ee = RigidTransform::new(Rotation3::about_x(2.9), Vec3::new(550.0, 30.0, 120.0));
        let tracker_from_tool = he.predict_tracker_pose(&base_from_ee);
        let expected = base_from_ee.compose(&he.ee_from_tool).transform_point(&pivot.tip_in_tool);
        let got = tip_position_in_base(&he, &tracker_from_tool, &pivot);
        assert!((got - expected).norm() < 1e-9);

        // Move the tracker: both Y and every tracker measurement pick up G.
        let g = RigidTransform::new(Rotation3::from_axis_angle(&Vec3::new(1.0, 1.0, 1.0), 0.8), Vec3::new(-300.0, 40.0, 12.0));
        let moved = HandEyeSolution { tracker_from_base: g.compose(&he.tracker_from_base), ..he };
        let got2 = tip_position_in_base(&moved, &g.compose(&tracker_from_tool), &pivot);
        assert!((got2 - got).norm() < 1e-9);
    }
}
