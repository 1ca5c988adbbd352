//! Trajectory metrics for a straight-line osteotomy: lateral RMSE, executed
//! length, active tool time, and the binned depth profile with its mean.
//!
//! Every recorded tip point is read in plan coordinates: `s` is the distance
//! along the cut direction from the entry point, `depth` the penetration
//! along the into-bone axis (positive = deeper), and the lateral offset is
//! what remains along `direction × depth_axis`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};

const UNIT_TOLERANCE: f64 = 1e-6;

/// The planned straight cut.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedCut {
    pub entry_point: Vec3,
    /// Unit vector along the cut on the bone surface.
    pub direction: Vec3,
    /// Unit vector pointing into the bone, perpendicular to `direction`.
    pub depth_axis: Vec3,
    /// mm
    pub length: f64,
    /// mm
    pub target_depth: f64,
    /// mm/s
    pub cutting_speed: f64,
}

impl PlannedCut {
    pub fn new(
        entry_point: Vec3,
        direction: Vec3,
        depth_axis: Vec3,
        length: f64,
        target_depth: f64,
        cutting_speed: f64,
    ) -> Result<Self> {
        let plan = PlannedCut { entry_point, direction, depth_axis, length, target_depth, cutting_speed };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.entry_point.iter().chain(self.direction.iter()).chain(self.depth_axis.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("plan vectors must be finite".into()));
        }
        if (self.direction.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidInput("direction must be a unit vector".into()));
        }
        if (self.depth_axis.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidInput("depth_axis must be a unit vector".into()));
        }
        if self.direction.dot(&self.depth_axis).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidInput("direction and depth_axis must be perpendicular".into()));
        }
        for (name, v) in [("length", self.length), ("target_depth", self.target_depth), ("cutting_speed", self.cutting_speed)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Unit normal of the cutting plane.
    pub fn lateral_axis(&self) -> Vec3 {
        self.direction.cross(&self.depth_axis)
    }

    /// Scalar projection onto the cut direction.
    pub fn along(&self, p: &Vec3) -> f64 {
        dot_from(p, &self.entry_point, &self.direction)
    }

    /// Penetration along the depth axis, positive into bone.
    pub fn depth(&self, p: &Vec3) -> f64 {
        dot_from(p, &self.entry_point, &self.depth_axis)
    }

    /// Signed offset from the cutting plane.
    pub fn lateral(&self, p: &Vec3) -> f64 {
        dot_from(p, &self.entry_point, &self.lateral_axis())
    }

    /// Point at distance `s` along the cut and `depth` below the surface.
    pub fn point_at(&self, s: f64, depth: f64) -> Vec3 {
        self.entry_point + self.direction * s + self.depth_axis * depth
    }

    /// Same plan expressed through a rigid change of frame.
    pub fn transformed(&self, t: &RigidTransform) -> PlannedCut {
        PlannedCut {
            entry_point: t.transform_point(&self.entry_point),
            direction: t.transform_vector(&self.direction),
            depth_axis: t.transform_vector(&self.depth_axis),
            ..*self
        }
    }
}

/// `(p − origin) · axis`, written out so the arithmetic order is fixed.
#[inline]
fn dot_from(p: &Vec3, origin: &Vec3, axis: &Vec3) -> f64 {
    (p.x - origin.x) * axis.x + (p.y - origin.y) * axis.y + (p.z - origin.z) * axis.z
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// s
    pub timestamp: f64,
    /// Tip position in the robot base frame (mm).
    pub point: Vec3,
    pub tool_active: bool,
}

/// Time-ordered tip samples. At least two, strictly increasing timestamps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecording {
    samples: Vec<TrajectorySample>,
}

impl TrajectoryRecording {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: samples.len() });
        }
        for (k, s) in samples.iter().enumerate() {
            if !(s.timestamp.is_finite() && s.point.iter().all(|v| v.is_finite())) {
                return Err(Error::InvalidInput(format!("sample {k} is not finite")));
            }
            if k > 0 && s.timestamp <= samples[k - 1].timestamp {
                return Err(Error::InvalidInput(format!("timestamps must strictly increase (sample {k})")));
            }
        }
        Ok(TrajectoryRecording { samples })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<TrajectorySample> {
        self.samples
    }

    /// Same recording with every point moved by `t`.
    pub fn transformed(&self, t: &RigidTransform) -> TrajectoryRecording {
        TrajectoryRecording {
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample { point: t.transform_point(&s.point), ..*s })
                .collect(),
        }
    }
}

impl<'de> Deserialize<'de> for TrajectoryRecording {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            samples: Vec<TrajectorySample>,
        }
        let r = Repr::deserialize(d)?;
        TrajectoryRecording::new(r.samples).map_err(serde::de::Error::custom)
    }
}

/// Which samples enter the RMSE and length computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gating {
    /// Tool active and within `[−margin, length + margin]` along the cut.
    #[default]
    Active,
    /// Every sample.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateralMode {
    /// Distance to the cutting plane (depth excluded).
    #[default]
    Lateral,
    /// Full 3-D distance to the infinite planned line.
    Line3d,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Number of uniform depth-profile bins over the planned length.
    #[serde(rename = "K")]
    pub bins: usize,
    pub gating: Gating,
    pub lateral_mode: LateralMode,
    pub gate_margin_mm: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { bins: 100, gating: Gating::Active, lateral_mode: LateralMode::Lateral, gate_margin_mm: 2.0 }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::InvalidInput("K must be at least 1".into()));
        }
        if !(self.gate_margin_mm.is_finite() && self.gate_margin_mm >= 0.0) {
            return Err(Error::InvalidInput("gate_margin_mm must be non-negative".into()));
        }
        Ok(())
    }

    fn admits(&self, plan: &PlannedCut, s: &TrajectorySample) -> bool {
        match self.gating {
            Gating::All => true,
            Gating::Active => {
                let along = plan.along(&s.point);
                s.tool_active && along >= -self.gate_margin_mm && along <= plan.length + self.gate_margin_mm
            }
        }
    }
}

fn gated<'a>(
    rec: &'a TrajectoryRecording,
    plan: &'a PlannedCut,
    cfg: &'a AnalysisConfig,
) -> impl Iterator<Item = &'a TrajectorySample> + 'a {
    rec.samples.iter().filter(move |s| cfg.admits(plan, s))
}

/// Per-sample deviation from the planned line for every gated sample, in
/// recording order.
pub fn perpendicular_errors(rec: &TrajectoryRecording, plan: &PlannedCut, cfg: &AnalysisConfig) -> Result<Vec<f64>> {
    let lateral_axis = plan.lateral_axis();
    let errors: Vec<f64> = gated(rec, plan, cfg)
        .map(|s| match cfg.lateral_mode {
            LateralMode::Lateral => dot_from(&s.point, &plan.entry_point, &lateral_axis).abs(),
            LateralMode::Line3d => {
                let d = s.point - plan.entry_point;
                (d - plan.direction * plan.along(&s.point)).norm()
            }
        })
        .collect();
    if errors.is_empty() {
        return Err(Error::EmptyAfterGating);
    }
    Ok(errors)
}

/// Root mean square of `errors`.
pub fn trajectory_rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum_sq: f64 = errors.iter().map(|e| e * e).sum();
    Ok((sum_sq / errors.len() as f64).sqrt())
}

/// Span of the gated samples along the cut direction.
pub fn executed_length(rec: &TrajectoryRecording, plan: &PlannedCut, cfg: &AnalysisConfig) -> Result<f64> {
    let (lo, hi) = gated(rec, plan, cfg)
        .map(|s| plan.along(&s.point))
        .fold(None, |acc: Option<(f64, f64)>, s| match acc {
            None => Some((s, s)),
            Some((lo, hi)) => Some((lo.min(s), hi.max(s))),
        })
        .ok_or(Error::EmptyAfterGating)?;
    Ok(hi - lo)
}

/// Total duration of the tool-active runs. Each maximal run of active
/// samples contributes the time from its first to its last sample.
pub fn procedure_time(rec: &TrajectoryRecording) -> f64 {
    let mut total = 0.0;
    let mut run_start: Option<f64> = None;
    let mut last_active = 0.0;
    for s in &rec.samples {
        if s.tool_active {
            run_start.get_or_insert(s.timestamp);
            last_active = s.timestamp;
        } else if let Some(start) = run_start.take() {
            total += last_active - start;
        }
    }
    if let Some(start) = run_start {
        total += last_active - start;
    }
    total
}

/// Deepest penetration per uniform bin along the cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutProfile {
    /// mm
    pub bin_width: f64,
    /// Deepest depth per bin (mm); `None` for bins no sample reached.
    pub depths: Vec<Option<f64>>,
    /// Fraction of bins with at least one sample.
    pub coverage: f64,
}

impl CutProfile {
    pub fn bin_count(&self) -> usize {
        self.depths.len()
    }
}

/// Bin `j` covers `[j·w, (j+1)·w)`; the last bin also takes `s = length`.
/// Samples outside `[0, length]` fall in no bin.
pub fn bin_index(s: f64, bin_width: f64, bins: usize, length: f64) -> Option<usize> {
    if !(s >= 0.0 && s <= length) {
        return None;
    }
    let mut j = ((s / bin_width) as usize).min(bins - 1);
    // Division can land one bin off near a boundary; settle on the
    // interval definition.
    while j > 0 && s < j as f64 * bin_width {
        j -= 1;
    }
    while j + 1 < bins && s >= (j + 1) as f64 * bin_width {
        j += 1;
    }
    Some(j)
}

/// Depth profile over `bins` uniform intervals of `[0, length]`.
pub fn depth_profile(rec: &TrajectoryRecording, plan: &PlannedCut, bins: usize) -> Result<CutProfile> {
    if bins == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    let bin_width = plan.length / bins as f64;
    let mut depths: Vec<Option<f64>> = vec![None; bins];
    for s in &rec.samples {
        if let Some(j) = bin_index(plan.along(&s.point), bin_width, bins, plan.length) {
            let d = plan.depth(&s.point);
            depths[j] = Some(depths[j].map_or(d, |cur| cur.max(d)));
        }
    }
    let filled = depths.iter().filter(|d| d.is_some()).count();
    Ok(CutProfile { bin_width, coverage: filled as f64 / bins as f64, depths })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSummary {
    /// Mean over populated bins.
    pub mean: f64,
    /// Sum over populated bins divided by the total bin count.
    pub strict_mean: f64,
}

pub fn mean_depth(profile: &CutProfile) -> Result<DepthSummary> {
    let filled: Vec<f64> = profile.depths.iter().flatten().copied().collect();
    if filled.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let sum: f64 = filled.iter().sum();
    Ok(DepthSummary { mean: sum / filled.len() as f64, strict_mean: sum / profile.depths.len() as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    Manual,
    Robotic,
}

impl Technique {
    pub fn letter(&self) -> char {
        match self {
            Technique::Manual => 'M',
            Technique::Robotic => 'R',
        }
    }
}

/// Trial identifier such as `M1^4` (fourth trial of set M1). Serialised as
/// `M1.4`; both spellings parse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TrialLabel {
    pub technique: Technique,
    pub set: u32,
    pub trial: u32,
}

impl TrialLabel {
    pub fn new(technique: Technique, set: u32, trial: u32) -> Self {
        TrialLabel { technique, set, trial }
    }

    /// Experiment-set key, e.g. `R4`.
    pub fn set_key(&self) -> String {
        format!("{}{}", self.technique.letter(), self.set)
    }
}

impl fmt::Display for TrialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}.{}", self.technique.letter(), self.set, self.trial)
    }
}

impl FromStr for TrialLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad trial label `{s}` (expected e.g. M1.4 or R2^3)"));
        let mut chars = s.chars();
        let technique = match chars.next() {
            Some('M') => Technique::Manual,
            Some('R') => Technique::Robotic,
            _ => return Err(bad()),
        };
        let rest = chars.as_str();
        let (set, trial) = rest.split_once(['.', '^']).ok_or_else(bad)?;
        let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
        if !digits(set) || !digits(trial) {
            return Err(bad());
        }
        Ok(TrialLabel {
            technique,
            set: set.parse().map_err(|_| bad())?,
            trial: trial.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for TrialLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TrialLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One trial's metrics; a row of the summary table before aggregation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub label: TrialLabel,
    pub target_depth: f64,
    /// Commanded cutting speed from the plan (mm/s).
    pub cutting_speed: f64,
    pub rmse: f64,
    pub executed_length: f64,
    pub procedure_time: f64,
    /// Mean over populated bins (mm).
    pub mean_depth: f64,
    /// Mean with empty bins counted as zero over all `K` bins (mm).
    pub mean_depth_strict: f64,
    pub profile: CutProfile,
}

impl MetricsReport {
    /// Speed for the summary table: the commanded speed for robotic trials,
    /// executed length over active time for manual ones.
    pub fn reported_speed(&self) -> f64 {
        match self.label.technique {
            Technique::Robotic => self.cutting_speed,
            Technique::Manual if self.procedure_time > 0.0 => self.executed_length / self.procedure_time,
            Technique::Manual => 0.0,
        }
    }
}

pub fn build_report(
    rec: &TrajectoryRecording,
    plan: &PlannedCut,
    cfg: &AnalysisConfig,
    label: TrialLabel,
) -> Result<MetricsReport> {
    plan.validate()?;
    cfg.validate()?;
    let errors = perpendicular_errors(rec, plan, cfg)?;
    let rmse = trajectory_rmse(&errors)?;
    let executed_length = executed_length(rec, plan, cfg)?;
    let procedure_time = procedure_time(rec);
    let profile = depth_profile(rec, plan, cfg.bins)?;
    let depth = mean_depth(&profile)?;
    Ok(MetricsReport {
        label,
        target_depth: plan.target_depth,
        cutting_speed: plan.cutting_speed,
        rmse,
        executed_length,
        procedure_time,
        mean_depth: depth.mean,
        mean_depth_strict: depth.strict_mean,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> PlannedCut {
        PlannedCut::new(Vec3::new(10.0, 20.0, 0.0), Vec3::x(), -Vec3::z(), 100.0, 4.0, 3.0).unwrap()
    }

    fn rec(points: &[(f64, Vec3, bool)]) -> TrajectoryRecording {
        TrajectoryRecording::new(
            points.iter().map(|&(t, p, a)| TrajectorySample { timestamp: t, point: p, tool_active: a }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn plan_validation() {
        assert!(PlannedCut::new(Vec3::zeros(), Vec3::x(), Vec3::x(), 100.0, 4.0, 3.0).is_err());
        assert!(PlannedCut::new(Vec3::zeros(), Vec3::x() * 2.0, -Vec3::z(), 100.0, 4.0, 3.0).is_err());
        assert!(PlannedCut::new(Vec3::zeros(), Vec3::x(), -Vec3::z(), 0.0, 4.0, 3.0).is_err());
        assert!(PlannedCut::new(Vec3::zeros(), Vec3::x(), -Vec3::z(), 100.0, -1.0, 3.0).is_err());
    }

    #[test]
    fn recording_validation() {
        let s = |t| TrajectorySample { timestamp: t, point: Vec3::zeros(), tool_active: true };
        assert!(TrajectoryRecording::new(vec![s(0.0)]).is_err());
        assert!(TrajectoryRecording::new(vec![s(0.0), s(0.0)]).is_err());
        assert!(TrajectoryRecording::new(vec![s(1.0), s(0.5)]).is_err());
        assert!(TrajectoryRecording::new(vec![]).is_err());
    }

    #[test]
    fn points_on_the_line_have_zero_error() {
        let p = plan();
        let r = rec(&[(0.0, p.point_at(0.0, 0.0), true), (1.0, p.point_at(50.0, 0.0), true), (2.0, p.point_at(100.0, 0.0), true)]);
        let errs = perpendicular_errors(&r, &p, &AnalysisConfig::default()).unwrap();
        assert_eq!(errs, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn lateral_offsets_come_back_as_errors() {
        let p = plan();
        let lat = p.lateral_axis();
        let r = rec(&[
            (0.0, p.point_at(10.0, 2.0) + lat, true),
            (1.0, p.point_at(20.0, 3.0) - lat * 2.0, true),
            (2.0, p.point_at(30.0, 0.5) + lat * 2.0, true),
        ]);
        let errs = perpendicular_errors(&r, &p, &AnalysisConfig::default()).unwrap();
        for (e, want) in errs.iter().zip([1.0, 2.0, 2.0]) {
            assert!((e - want).abs() < 1e-12);
        }
        // The 3-D line distance also counts depth: sqrt(1+4), sqrt(4+9), sqrt(4+0.25).
        let cfg = AnalysisConfig { lateral_mode: LateralMode::Line3d, ..Default::default() };
        let errs = perpendicular_errors(&r, &p, &cfg).unwrap();
        for (e, want) in errs.iter().zip([5f64.sqrt(), 13f64.sqrt(), 4.25f64.sqrt()]) {
            assert!((e - want).abs() < 1e-12);
        }
    }

    #[test]
    fn inactive_recording_is_empty_after_gating() {
        let p = plan();
        let r = rec(&[(0.0, p.point_at(0.0, 1.0), false), (1.0, p.point_at(5.0, 1.0), false)]);
        assert_eq!(perpendicular_errors(&r, &p, &AnalysisConfig::default()), Err(Error::EmptyAfterGating));
        assert_eq!(executed_length(&r, &p, &AnalysisConfig::default()), Err(Error::EmptyAfterGating));
        let all = AnalysisConfig { gating: Gating::All, ..Default::default() };
        assert_eq!(perpendicular_errors(&r, &p, &all).unwrap().len(), 2);
    }

    #[test]
    fn gating_window_drops_approach_samples() {
        let p = plan();
        let r = rec(&[
            (0.0, p.point_at(-10.0, 0.0) + p.lateral_axis() * 5.0, true),
            (1.0, p.point_at(-1.5, 0.0), true),
            (2.0, p.point_at(101.9, 0.0), true),
            (3.0, p.point_at(102.5, 0.0) + p.lateral_axis() * 5.0, true),
        ]);
        let errs = perpendicular_errors(&r, &p, &AnalysisConfig::default()).unwrap();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn rmse_formula() {
        assert_eq!(trajectory_rmse(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!((trajectory_rmse(&[1.0, 2.0, 2.0]).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(trajectory_rmse(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn executed_length_cases() {
        let p = plan();
        let cfg = AnalysisConfig::default();
        let full = rec(&[(0.0, p.point_at(0.0, 1.0), true), (1.0, p.point_at(60.0, 1.0), true), (2.0, p.point_at(100.0, 1.0), true)]);
        assert!((executed_length(&full, &p, &cfg).unwrap() - 100.0).abs() < 1e-12);
        let over = rec(&[(0.0, p.point_at(-0.5, 1.0), true), (1.0, p.point_at(101.3, 1.0), true)]);
        assert!((executed_length(&over, &p, &cfg).unwrap() - 101.8).abs() < 1e-12);
        let single = rec(&[(0.0, p.point_at(40.0, 1.0), true), (1.0, p.point_at(40.0, 1.0), false)]);
        assert_eq!(executed_length(&single, &p, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn procedure_time_cases() {
        let x = Vec3::zeros();
        assert_eq!(procedure_time(&rec(&[(0.0, x, true), (20.0, x, true), (45.0, x, true)])), 45.0);
        let two = rec(&[(0.0, x, true), (33.3, x, true), (38.0, x, false), (43.3, x, true), (76.6, x, true), (80.0, x, false)]);
        assert!((procedure_time(&two) - 66.6).abs() < 1e-12);
        assert_eq!(procedure_time(&rec(&[(0.0, x, false), (10.0, x, false)])), 0.0);
    }

    #[test]
    fn constant_depth_fills_profile() {
        let p = plan();
        let samples: Vec<_> = (0..=1000).map(|k| (k as f64 * 0.1, p.point_at(k as f64 * 0.1, 4.0), true)).collect();
        let prof = depth_profile(&rec(&samples), &p, 100).unwrap();
        assert_eq!(prof.bin_count(), 100);
        assert!((prof.bin_width - 1.0).abs() < 1e-15);
        assert_eq!(prof.coverage, 1.0);
        assert!(prof.depths.iter().all(|d| *d == Some(4.0)));
    }

    #[test]
    fn deeper_pass_wins_each_bin() {
        let p = plan();
        let mut samples = Vec::new();
        for (pass, depth) in [(0, 2.0), (1, 4.0)] {
            for k in 0..=200 {
                let t = pass as f64 * 100.0 + k as f64 * 0.25;
                samples.push((t, p.point_at(k as f64 * 0.5, depth), true));
            }
        }
        let prof = depth_profile(&rec(&samples), &p, 100).unwrap();
        assert!(prof.depths.iter().all(|d| *d == Some(4.0)));
    }

    #[test]
    fn partial_coverage_and_means() {
        let profile = CutProfile { bin_width: 25.0, depths: vec![Some(4.0), Some(4.0), Some(8.0), Some(8.0)], coverage: 1.0 };
        assert_eq!(mean_depth(&profile).unwrap().mean, 6.0);
        let flat = CutProfile { bin_width: 1.0, depths: vec![Some(4.2); 10], coverage: 1.0 };
        assert!((mean_depth(&flat).unwrap().mean - 4.2).abs() < 1e-12);
        let gappy = CutProfile { bin_width: 1.0, depths: vec![Some(6.0), None, Some(2.0), None], coverage: 0.5 };
        let m = mean_depth(&gappy).unwrap();
        assert_eq!((m.mean, m.strict_mean), (4.0, 2.0));
        let empty = CutProfile { bin_width: 1.0, depths: vec![None; 3], coverage: 0.0 };
        assert_eq!(mean_depth(&empty), Err(Error::EmptyProfile));
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_index(0.0, 1.0, 100, 100.0), Some(0));
        assert_eq!(bin_index(1.0, 1.0, 100, 100.0), Some(1));
        assert_eq!(bin_index(99.999, 1.0, 100, 100.0), Some(99));
        assert_eq!(bin_index(100.0, 1.0, 100, 100.0), Some(99));
        assert_eq!(bin_index(-1e-12, 1.0, 100, 100.0), None);
        assert_eq!(bin_index(100.0 + 1e-9, 1.0, 100, 100.0), None);
        // 0.3 / 0.1 rounds below 3 yet 0.3 < 3 * 0.1 in floating point too.
        let w = 0.1;
        let j = bin_index(0.3, w, 10, 1.0).unwrap();
        assert!(j as f64 * w <= 0.3 && 0.3 < (j + 1) as f64 * w);
    }

    #[test]
    fn zero_bins_rejected() {
        let p = plan();
        let r = rec(&[(0.0, p.point_at(0.0, 1.0), true), (1.0, p.point_at(5.0, 1.0), true)]);
        assert!(depth_profile(&r, &p, 0).is_err());
    }

    #[test]
    fn labels_parse_and_round_trip() {
        let l: TrialLabel = "R1^3".parse().unwrap();
        assert_eq!(l, TrialLabel::new(Technique::Robotic, 1, 3));
        assert_eq!(l.to_string(), "R1.3");
        assert_eq!(l.to_string().parse::<TrialLabel>().unwrap(), l);
        assert_eq!(l.set_key(), "R1");
        assert_eq!("M12.40".parse::<TrialLabel>().unwrap(), TrialLabel::new(Technique::Manual, 12, 40));
        for bad in ["", "X1.2", "M", "M1", "M1.", "M.2", "M1.2.3", "M-1.2", "m1.2", "M1 .2"] {
            assert!(bad.parse::<TrialLabel>().is_err(), "{bad} accepted");
        }
    }

    #[test]
    fn report_for_noiseless_pass() {
        let p = plan();
        let mut samples = Vec::new();
        let mut t = 0.0;
        for k in 0..=40 {
            samples.push((t, p.point_at(0.0, k as f64 * 0.1), true));
            t += 0.05;
        }
        for k in 1..=1000 {
            samples.push((t, p.point_at(k as f64 * 0.1, 4.0), true));
            t += 0.0333;
        }
        let r = build_report(&rec(&samples), &p, &AnalysisConfig::default(), "R3.1".parse().unwrap()).unwrap();
        assert_eq!(r.rmse, 0.0);
        assert!((r.executed_length - 100.0).abs() < 1e-9);
        assert!((r.mean_depth - 4.0).abs() < 1e-12);
        assert!(r.procedure_time > 33.0);
        assert_eq!(r.reported_speed(), 3.0);
    }
}
