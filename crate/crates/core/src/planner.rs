//! Automated cutting sequence: insert, cut, retract, repeated at growing
//! depth until the target depth is reached.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::metrics::{PlannedCut, TrajectoryRecording, TrajectorySample};

/// Slack used when dividing the target depth into increments, so that
/// e.g. 4.2 / 0.7 still yields six passes.
const PASS_COUNT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassPolicy {
    /// mm per pass
    pub depth_increment: f64,
    /// mm/s
    pub insertion_speed: f64,
    /// mm/s, also used for moves between passes
    pub retraction_speed: f64,
    /// mm/s
    pub cutting_speed: f64,
    /// Height above the surface the tool retracts to (mm).
    pub clearance: f64,
    /// Alternate the cut direction on every pass instead of restarting at
    /// the entry point.
    pub bidirectional: bool,
}

impl PassPolicy {
    /// Single full-depth pass with default approach speeds.
    pub fn single_pass(plan: &PlannedCut) -> Self {
        PassPolicy {
            depth_increment: plan.target_depth,
            insertion_speed: 2.0,
            retraction_speed: 10.0,
            cutting_speed: plan.cutting_speed,
            clearance: 5.0,
            bidirectional: false,
        }
    }

    pub fn with_increment(plan: &PlannedCut, depth_increment: f64) -> Self {
        PassPolicy { depth_increment, ..Self::single_pass(plan) }
    }

    pub fn validate(&self, plan: &PlannedCut) -> Result<()> {
        if !(self.depth_increment.is_finite() && self.depth_increment > 0.0) {
            return Err(Error::InvalidPolicy("depth_increment must be positive".into()));
        }
        if self.depth_increment > plan.target_depth {
            return Err(Error::InvalidPolicy(format!(
                "depth_increment {} exceeds target depth {}",
                self.depth_increment, plan.target_depth
            )));
        }
        for (name, v) in [
            ("insertion_speed", self.insertion_speed),
            ("retraction_speed", self.retraction_speed),
            ("cutting_speed", self.cutting_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidPolicy(format!("{name} must be positive")));
            }
        }
        if !(self.clearance.is_finite() && self.clearance > 0.0) {
            return Err(Error::InvalidPolicy("clearance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Insert,
    Cut,
    Retract,
    /// Repositioning between passes, tool off.
    Transit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: Vec3,
    pub end: Vec3,
    /// mm/s
    pub speed: f64,
    pub tool_active: bool,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn duration(&self) -> f64 {
        self.length() / self.speed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pass {
    /// Depth of the cutting segment below the surface (mm).
    pub depth: f64,
    pub insert: Segment,
    pub cut: Segment,
    pub retract: Segment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutSequence {
    pub passes: Vec<Pass>,
    /// Speed of the repositioning moves between passes (mm/s).
    pub transit_speed: f64,
    /// Height of the repositioning moves above the surface, as a point
    /// offset (surface normal times clearance).
    pub clearance_offset: Vec3,
}

impl CutSequence {
    /// Every motion in execution order, including the tool-off transits
    /// that join one pass's retraction to the next pass's insertion.
    /// Zero-length transits are omitted.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.passes.len() * 5);
        let mut cursor: Option<Vec3> = None;
        for pass in &self.passes {
            if let Some(at) = cursor {
                let above_start = pass.insert.start + self.clearance_offset;
                for (a, b) in [(at, above_start), (above_start, pass.insert.start)] {
                    if (b - a).norm() > 0.0 {
                        out.push(Segment { kind: SegmentKind::Transit, start: a, end: b, speed: self.transit_speed, tool_active: false });
                    }
                }
            }
            out.extend([pass.insert, pass.cut, pass.retract]);
            cursor = Some(pass.retract.end);
        }
        out
    }
}

/// Number of passes needed to reach `target` in steps of `increment`.
pub fn pass_count(target: f64, increment: f64) -> usize {
    ((target / increment) - PASS_COUNT_SLACK).ceil().max(1.0) as usize
}

/// Passes at depths `increment, 2·increment, …`, the last clamped to the
/// target depth.
pub fn plan_sequence(plan: &PlannedCut, policy: &PassPolicy) -> Result<CutSequence> {
    plan.validate()?;
    policy.validate(plan)?;
    let n = pass_count(plan.target_depth, policy.depth_increment);
    let passes: Vec<(f64, f64)> = (1..=n)
        .map(|k| {
            let depth = if k == n { plan.target_depth } else { k as f64 * policy.depth_increment };
            (depth, policy.cutting_speed)
        })
        .collect();
    build_sequence(plan, &passes, policy)
}

/// Sequence from explicit `(depth, cutting speed)` pairs. Depths need not
/// increase; speeds must be positive.
pub fn build_sequence(plan: &PlannedCut, passes: &[(f64, f64)], policy: &PassPolicy) -> Result<CutSequence> {
    if passes.is_empty() {
        return Err(Error::InvalidPolicy("at least one pass is required".into()));
    }
    let up = -plan.depth_axis * policy.clearance;
    let out = passes
        .iter()
        .enumerate()
        .map(|(k, &(depth, speed))| {
            if !(speed.is_finite() && speed > 0.0) {
                return Err(Error::InvalidPolicy("cutting speed must be positive".into()));
            }
            let reversed = policy.bidirectional && k % 2 == 1;
            let (s0, s1) = if reversed { (plan.length, 0.0) } else { (0.0, plan.length) };
            let surface = plan.point_at(s0, 0.0);
            let start = plan.point_at(s0, depth);
            let end = plan.point_at(s1, depth);
            Ok(Pass {
                depth,
                insert: Segment { kind: SegmentKind::Insert, start: surface, end: start, speed: policy.insertion_speed, tool_active: true },
                cut: Segment { kind: SegmentKind::Cut, start, end, speed, tool_active: true },
                retract: Segment {
                    kind: SegmentKind::Retract,
                    start: end,
                    end: plan.point_at(s1, 0.0) + up,
                    speed: policy.retraction_speed,
                    tool_active: false,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CutSequence { passes: out, transit_speed: policy.retraction_speed, clearance_offset: up })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    /// Insertion plus cutting time (s).
    pub total_active_time: f64,
    /// Cutting segments only (s).
    pub cutting_time: f64,
    /// Everything, including retractions and transits (s).
    pub total_time: f64,
    pub durations: Vec<(SegmentKind, f64)>,
}

pub fn nominal_timeline(seq: &CutSequence) -> Timeline {
    let durations: Vec<(SegmentKind, f64)> = seq.segments().iter().map(|s| (s.kind, s.duration())).collect();
    let sum = |pred: fn(SegmentKind) -> bool| durations.iter().filter(|(k, _)| pred(*k)).map(|(_, d)| d).sum::<f64>();
    Timeline {
        total_active_time: sum(|k| matches!(k, SegmentKind::Insert | SegmentKind::Cut)),
        cutting_time: sum(|k| k == SegmentKind::Cut),
        total_time: sum(|_| true),
        durations,
    }
}

/// Uniform-time samples along every segment. Each segment of duration `D`
/// gets `max(2, ⌈D·rate⌉)` evenly spaced samples including both endpoints;
/// the endpoint shared by consecutive segments is emitted once, marked
/// active if either segment is.
///
/// For a K-bin depth profile to recover the target depth, the rate should
/// give at least one cut sample per bin (`rate >= cutting_speed * K / length`);
/// otherwise the return transit at clearance height fills the empty bins.
pub fn sample_sequence(seq: &CutSequence, rate: f64) -> Result<TrajectoryRecording> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidInput("sampling rate must be positive".into()));
    }
    let mut samples: Vec<TrajectorySample> = Vec::new();
    let mut t0 = 0.0;
    for seg in seq.segments() {
        let duration = seg.duration();
        if duration <= 0.0 {
            continue;
        }
        let count = ((duration * rate).ceil() as usize).max(2);
        let steps = (count - 1) as f64;
        for i in 0..count {
            let f = i as f64 / steps;
            let sample = TrajectorySample {
                timestamp: if i + 1 == count { t0 + duration } else { t0 + duration * f },
                point: if i + 1 == count { seg.end } else { seg.start + (seg.end - seg.start) * f },
                tool_active: seg.tool_active,
            };
            if i == 0 {
                if let Some(last) = samples.last_mut() {
                    last.tool_active |= seg.tool_active;
                    continue;
                }
            }
            samples.push(sample);
        }
        t0 += duration;
    }
    TrajectoryRecording::new(samples)
}
